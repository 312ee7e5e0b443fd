//! End-to-end properties of drops and campaigns.

use cfmimo_core::combining::CombinerKind;
use cfmimo_core::harness::{
    drop_channels, drop_topology, run_campaign, run_drop, AlgorithmKind, AlgorithmSpec, CampaignSpec, ScenarioSpec,
};
use proptest::prelude::*;

fn small(num_ues: usize) -> CampaignSpec {
    CampaignSpec {
        scenario: ScenarioSpec {
            num_aps: 8,
            antennas_per_ap: 2,
            num_ues,
            ..ScenarioSpec::default()
        },
        drops: 3,
        realizations_per_drop: 2,
        ..CampaignSpec::default()
    }
}

#[test]
fn colocated_antennas_share_beta_but_not_fading() {
    let spec = small(3);
    let topo = drop_topology(&spec, 0).unwrap();
    let states = drop_channels(&spec, 0).unwrap();
    let st = &states[0];
    for l in 0..topo.num_aps {
        let (a, b) = (2 * l, 2 * l + 1);
        for k in 0..3 {
            assert_eq!(st.beta[(a, k)], st.beta[(b, k)]);
            assert_ne!(st.h[(a, k)], st.h[(b, k)]);
        }
    }
    // large-scale fading is fixed within a drop, small-scale is not
    assert_eq!(states[0].beta, states[1].beta);
    assert_ne!(states[0].h, states[1].h);
}

#[test]
fn workers_do_not_change_results() {
    let spec = small(3);
    let one = run_campaign(&spec, 1).unwrap();
    let three = run_campaign(&spec, 3).unwrap();
    assert_eq!(one.table.to_csv(), three.table.to_csv());
    assert_eq!(one.summary, three.summary);
}

#[test]
fn rows_are_ordered_canonically() {
    let spec = CampaignSpec {
        combiners: vec![CombinerKind::Mr, CombinerKind::Mmse],
        ..small(2)
    };
    let out = run_campaign(&spec, 2).unwrap();
    let keys: Vec<(u64, u64)> = out.table.rows.iter().map(|r| (r.drop_id, r.realization_id)).collect();
    assert!(keys.windows(2).all(|w| w[0] <= w[1]));
    for chunk in out.table.rows.chunks(2) {
        assert_eq!(chunk[0].ue_id, 0);
        assert_eq!(chunk[1].ue_id, 1);
    }
}

#[test]
fn summary_covers_every_pair() {
    let spec = CampaignSpec {
        combiners: vec![CombinerKind::Mr, CombinerKind::Mmse],
        ..small(2)
    };
    let out = run_campaign(&spec, 1).unwrap();
    for alg in ["max_power", "max_min_se", "max_min_ee"] {
        for comb in ["mr", "mmse"] {
            let e = &out.summary[alg][comb];
            assert!(e.p95_se <= e.median_se && e.p95_ee <= e.median_ee);
            assert_eq!(e.infeasible_fraction, 0.0);
        }
    }
}

#[test]
fn perfect_csi_has_no_estimation_error() {
    let spec = CampaignSpec {
        csi: cfmimo_core::harness::CsiMode::Perfect,
        ..small(2)
    };
    for st in drop_channels(&spec, 1).unwrap() {
        assert_eq!(st.h, st.h_hat);
        assert!(st.err_var.iter().all(|v| *v == 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn row_accounting(
        drops in 1u64..3,
        reals in 1u64..3,
        k in 1usize..4,
        algs in proptest::sample::subsequence(vec![AlgorithmKind::MaxPower, AlgorithmKind::MaxMinSe, AlgorithmKind::MaxMinEe], 1..=3),
        combs in proptest::sample::subsequence(vec![CombinerKind::Mr, CombinerKind::Mmse], 1..=2),
        seed in any::<u64>(),
    ) {
        let spec = CampaignSpec {
            drops,
            realizations_per_drop: reals,
            algorithms: algs.iter().map(|a| AlgorithmSpec::new(*a)).collect(),
            combiners: combs.clone(),
            base_seed: seed,
            ..small(k)
        };
        let out = run_campaign(&spec, 2).unwrap();
        prop_assert!(out.failures.is_empty());
        let expected = drops * reals * algs.len() as u64 * combs.len() as u64 * k as u64;
        prop_assert_eq!(out.table.rows.len() as u64, expected);
        prop_assert!(out.table.rows.iter().all(|r| r.se.is_finite() && r.ee.is_finite() && r.sinr.is_finite()));
    }

    #[test]
    fn drops_are_pure_functions_of_seed_and_id(seed in any::<u64>(), drop_id in 0u64..1000) {
        let spec = CampaignSpec {
            base_seed: seed,
            algorithms: vec![AlgorithmSpec::new(AlgorithmKind::MaxPower)],
            ..small(2)
        };
        prop_assert_eq!(run_drop(&spec, drop_id).unwrap(), run_drop(&spec, drop_id).unwrap());
    }
}
