//! Monte-Carlo campaigns: drops of geometry and channels, every configured
//! power-control algorithm and combiner on identical channel state, and
//! CDF/percentile summaries of the per-UE results.

mod seed;
mod stats;
mod table;

pub use seed::{mix_seed, splitmix64};
pub use stats::{cdf, median, percentile};
pub use table::{summarize, ResultRow, ResultTable, Summary, SummaryEntry, CSV_HEADER};

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_large_scale, draw_small_scale, realize, ChannelState, MeasuredDataset, PathLossModel};
use crate::combining::CombinerKind;
use crate::estimation::{make_pilots, mmse_estimate, perfect_csi, simulate_pilot_rx};
use crate::metrics::SystemConfig;
use crate::scenario::{place_aps, place_ues, ApPlacement, AreaSpec, Topology, UePlacement};
use crate::tpc::{max_min_ee, max_min_se, max_power_result, TpcOptions, TpcProblem, TpcResult, TpcStatus};
use crate::{CMatrix, Error, RMatrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSpec {
    pub area: AreaSpec,
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub num_ues: usize,
    pub ap_placement: ApPlacement,
    pub ue_placement: UePlacement,
    pub cluster_radius: f64,
    pub indoor_fraction: f64,
    pub min_antenna_spacing: f64,
}

impl ScenarioSpec {
    pub fn num_antennas(&self) -> usize {
        self.num_aps * self.antennas_per_ap
    }
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            area: AreaSpec::default(),
            num_aps: 512,
            antennas_per_ap: 1,
            num_ues: 8,
            ap_placement: ApPlacement::Random,
            ue_placement: UePlacement::Spread,
            cluster_radius: crate::scenario::DEFAULT_CLUSTER_RADIUS_M,
            indoor_fraction: 0.0,
            min_antenna_spacing: crate::scenario::DEFAULT_MIN_ANTENNA_SPACING_M,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSource {
    Synthetic { model: PathLossModel, indoor_penalty_db: f64 },
    /// Drops pick random antenna and UE locations; realizations walk the
    /// frequency indices.
    Measured(Arc<MeasuredDataset>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    Estimated,
    Perfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    MaxPower,
    MaxMinSe,
    MaxMinEe,
}

impl AlgorithmKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmKind::MaxPower => "max_power",
            AlgorithmKind::MaxMinSe => "max_min_se",
            AlgorithmKind::MaxMinEe => "max_min_ee",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    /// Name used in result rows and output file names.
    pub label: String,
    /// Overrides the campaign-wide SE target for max-min EE.
    pub target_se: Option<f64>,
}

impl AlgorithmSpec {
    pub fn new(kind: AlgorithmKind) -> Self {
        Self {
            kind,
            label: kind.as_str().to_string(),
            target_se: None,
        }
    }

    pub fn max_min_ee(label: impl Into<String>, target_se: f64) -> Self {
        Self {
            kind: AlgorithmKind::MaxMinEe,
            label: label.into(),
            target_se: Some(target_se),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    pub scenario: ScenarioSpec,
    pub channel: ChannelSource,
    pub csi: CsiMode,
    pub system: SystemConfig,
    pub combiners: Vec<CombinerKind>,
    pub algorithms: Vec<AlgorithmSpec>,
    pub tpc: TpcOptions,
    pub drops: u64,
    pub realizations_per_drop: u64,
    pub base_seed: u64,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        Self {
            scenario: ScenarioSpec::default(),
            channel: ChannelSource::Synthetic {
                model: PathLossModel::ADJUSTED,
                indoor_penalty_db: crate::channel::DEFAULT_INDOOR_PENALTY_DB,
            },
            csi: CsiMode::Estimated,
            system: SystemConfig::default(),
            combiners: vec![CombinerKind::Mmse],
            algorithms: vec![
                AlgorithmSpec::new(AlgorithmKind::MaxPower),
                AlgorithmSpec::new(AlgorithmKind::MaxMinSe),
                AlgorithmSpec::new(AlgorithmKind::MaxMinEe),
            ],
            tpc: TpcOptions::default(),
            drops: 100,
            realizations_per_drop: 1,
            base_seed: 1,
        }
    }
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        s.area.validate()?;
        self.system.validate()?;
        self.tpc.validate()?;
        if s.num_aps == 0 || s.antennas_per_ap == 0 || s.num_ues == 0 {
            return Err(Error::InvalidArgument("need at least one AP, antenna and UE".into()));
        }
        if self.drops == 0 || self.realizations_per_drop == 0 {
            return Err(Error::InvalidArgument("drops and realizations per drop must be >= 1".into()));
        }
        if self.combiners.is_empty() || self.algorithms.is_empty() {
            return Err(Error::InvalidArgument("need at least one combiner and one algorithm".into()));
        }
        let mut labels: Vec<&str> = self.algorithms.iter().map(|a| a.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("algorithm labels must be unique".into()));
        }
        if labels.iter().any(|l| l.is_empty() || l.contains([',', '/', '\\', '\n'])) {
            return Err(Error::InvalidArgument("algorithm labels must be non-empty file-name-safe words".into()));
        }
        let mut combiners = self.combiners.clone();
        combiners.sort();
        combiners.dedup();
        if combiners.len() != self.combiners.len() {
            return Err(Error::InvalidArgument("combiners listed twice".into()));
        }
        let tau_p = self.system.pilot_length(s.num_ues);
        if tau_p < s.num_ues {
            return Err(Error::TauTooSmall { tau_p, num_ues: s.num_ues });
        }
        match &self.channel {
            ChannelSource::Synthetic { model, .. } => model.validate()?,
            ChannelSource::Measured(ds) => {
                if s.num_antennas() > ds.num_ap_locations() || s.num_ues > ds.num_ue_locations() {
                    return Err(Error::InvalidArgument(format!(
                        "dataset has {} antenna and {} UE locations; {} and {} requested",
                        ds.num_ap_locations(),
                        ds.num_ue_locations(),
                        s.num_antennas(),
                        s.num_ues
                    )));
                }
            }
        }
        for a in &self.algorithms {
            if let Some(t) = a.target_se {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(Error::InvalidArgument(format!("target SE {t} of {}", a.label)));
                }
            }
        }
        Ok(())
    }

    pub fn algorithm_labels(&self) -> Vec<String> {
        self.algorithms.iter().map(|a| a.label.clone()).collect()
    }
}

/// Geometry of drop `drop_id` (synthetic channels only).
pub fn drop_topology(spec: &CampaignSpec, drop_id: u64) -> Result<Topology> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.base_seed, drop_id, 0));
    topology_from(&spec.scenario, &mut rng)
}

fn topology_from(s: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<Topology> {
    let aps = place_aps(&s.area, s.num_aps, s.antennas_per_ap, s.ap_placement, s.min_antenna_spacing, rng)?;
    let ues = place_ues(&s.area, s.num_ues, s.ue_placement, s.cluster_radius, s.indoor_fraction, rng)?;
    Topology::new(aps, ues, s.num_aps, s.antennas_per_ap)
}

/// Channel realizations of one drop, in realization order.
pub fn drop_channels(spec: &CampaignSpec, drop_id: u64) -> Result<Vec<ChannelState>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.base_seed, drop_id, 0));
    let s = &spec.scenario;
    let (m, k) = (s.num_antennas(), s.num_ues);

    enum Source<'a> {
        Synthetic(RMatrix, bool),
        Measured(&'a MeasuredDataset, Vec<usize>, Vec<usize>, RMatrix),
    }
    let source = match &spec.channel {
        ChannelSource::Synthetic { model, indoor_penalty_db } => {
            let topo = topology_from(s, &mut rng)?;
            let indoor = topo.ues.iter().any(|u| u.environment == crate::scenario::Environment::Indoor);
            Source::Synthetic(draw_large_scale(&topo, model, *indoor_penalty_db, &mut rng)?, indoor)
        }
        ChannelSource::Measured(ds) => {
            let rows = rand::seq::index::sample(&mut rng, ds.num_ap_locations(), m).into_vec();
            let cols = rand::seq::index::sample(&mut rng, ds.num_ue_locations(), k).into_vec();
            let full = ds.beta();
            let beta = RMatrix::from_fn(m, k, |a, u| full[(rows[a], cols[u])]);
            Source::Measured(ds, rows, cols, beta)
        }
    };

    let pilots = make_pilots(k, spec.system.pilot_length(k))?;
    let rho_p = spec.system.pilot_snr();
    (0..spec.realizations_per_drop)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.base_seed, drop_id, r + 1));
            let (h, beta, indoor): (CMatrix, &RMatrix, bool) = match &source {
                Source::Synthetic(beta, indoor) => (realize(beta, &draw_small_scale(m, k, &mut rng))?, beta, *indoor),
                Source::Measured(ds, rows, cols, beta) => {
                    let f = ds.num_freqs() as u64;
                    let freq = (r * f / spec.realizations_per_drop) % f;
                    (ds.channel(freq as usize, rows, cols), beta, false)
                }
            };
            let est = match spec.csi {
                CsiMode::Estimated => {
                    let y = simulate_pilot_rx(&h, &pilots, rho_p, &mut rng)?;
                    mmse_estimate(&y, beta, &pilots, rho_p)?
                }
                CsiMode::Perfect => perfect_csi(&h),
            };
            Ok(ChannelState {
                h,
                beta: beta.clone(),
                h_hat: est.h_hat,
                err_var: est.err_var,
                indoor_penalty_applied: indoor,
            })
        })
        .collect()
}

/// Run one algorithm. Infeasibility is a status, not an error.
pub fn solve(
    algorithm: &AlgorithmSpec,
    problem: &TpcProblem<'_>,
    system: &SystemConfig,
    tpc: &TpcOptions,
) -> Result<Option<TpcResult>> {
    let outcome = match algorithm.kind {
        AlgorithmKind::MaxPower => max_power_result(problem, system),
        AlgorithmKind::MaxMinSe => max_min_se(problem, system, tpc),
        AlgorithmKind::MaxMinEe => {
            let opts = TpcOptions {
                target_se: algorithm.target_se.unwrap_or(tpc.target_se),
                ..tpc.clone()
            };
            max_min_ee(problem, system, &opts)
        }
    };
    match outcome {
        Ok(r) => Ok(Some(r)),
        Err(Error::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// All rows of one drop, ordered by realization, algorithm, combiner, UE.
pub fn run_drop(spec: &CampaignSpec, drop_id: u64) -> Result<Vec<ResultRow>> {
    let rho = spec.system.rho();
    let k = spec.scenario.num_ues;
    let mut rows = Vec::new();
    for (r, state) in drop_channels(spec, drop_id)?.into_iter().enumerate() {
        for alg in &spec.algorithms {
            for &comb in &spec.combiners {
                let problem = TpcProblem::new(&state.h_hat, &state.err_var, rho, comb)?;
                let solved = solve(alg, &problem, &spec.system, &spec.tpc)?;
                for ue in 0..k {
                    let (se, ee, sinr, q, status) = match &solved {
                        Some(res) => (res.metrics.se[ue], res.metrics.ee[ue], res.metrics.sinr[ue], res.q[ue], res.status),
                        None => (0.0, 0.0, 0.0, 0.0, TpcStatus::Infeasible),
                    };
                    rows.push(ResultRow {
                        drop_id,
                        realization_id: r as u64,
                        algorithm: alg.label.clone(),
                        combiner: comb,
                        ue_id: ue,
                        se,
                        ee,
                        sinr,
                        q,
                        status,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropFailure {
    pub drop_id: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct CampaignOutput {
    pub table: ResultTable,
    pub summary: Summary,
    pub failures: Vec<DropFailure>,
}

/// Run every drop on `workers` threads. Rows come out in drop order whatever
/// the worker count; failed drops are reported without stopping the others.
pub fn run_campaign(spec: &CampaignSpec, workers: usize) -> Result<CampaignOutput> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let per_drop: Vec<(u64, Result<Vec<ResultRow>>)> = pool.install(|| {
        (0..spec.drops)
            .into_par_iter()
            .map(|d| (d, run_drop(spec, d)))
            .collect()
    });

    let mut table = ResultTable::default();
    let mut failures = Vec::new();
    for (drop_id, outcome) in per_drop {
        match outcome {
            Ok(rows) => table.rows.extend(rows),
            Err(e) => failures.push(DropFailure {
                drop_id,
                message: e.to_string(),
            }),
        }
    }
    let summary = summarize(&table, &spec.algorithm_labels(), &spec.combiners)?;
    Ok(CampaignOutput {
        table,
        summary,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(k: usize) -> CampaignSpec {
        CampaignSpec {
            scenario: ScenarioSpec {
                num_aps: 16,
                num_ues: k,
                ..ScenarioSpec::default()
            },
            algorithms: vec![AlgorithmSpec::new(AlgorithmKind::MaxPower)],
            drops: 1,
            realizations_per_drop: 3,
            ..CampaignSpec::default()
        }
    }

    #[test]
    fn single_ue_max_power_row_count() {
        let out = run_campaign(&tiny(1), 1).unwrap();
        assert_eq!(out.table.rows.len(), 3);
        assert!(out.failures.is_empty());
    }

    #[test]
    fn row_count_for_two_algorithms_two_combiners() {
        let spec = CampaignSpec {
            algorithms: vec![AlgorithmSpec::new(AlgorithmKind::MaxPower), AlgorithmSpec::new(AlgorithmKind::MaxMinSe)],
            combiners: vec![CombinerKind::Mr, CombinerKind::Mmse],
            realizations_per_drop: 10,
            ..tiny(8)
        };
        assert_eq!(run_drop(&spec, 0).unwrap().len(), 320);
    }

    #[test]
    fn drops_are_reproducible() {
        let spec = tiny(4);
        let a = ResultTable { rows: run_drop(&spec, 5).unwrap() }.to_csv();
        let b = ResultTable { rows: run_drop(&spec, 5).unwrap() }.to_csv();
        assert_eq!(a, b);
        let c = ResultTable { rows: run_drop(&spec, 6).unwrap() }.to_csv();
        assert_ne!(a, c);
    }

    #[test]
    fn validation_catches_bad_specs() {
        let mut spec = tiny(2);
        spec.drops = 0;
        assert!(spec.validate().is_err());
        let mut spec = tiny(2);
        spec.algorithms.push(AlgorithmSpec::new(AlgorithmKind::MaxPower));
        assert!(spec.validate().is_err());
        let mut spec = tiny(4);
        spec.system.tau_p = Some(2);
        assert!(matches!(spec.validate(), Err(Error::TauTooSmall { .. })));
    }

    #[test]
    fn failed_drops_do_not_abort() {
        let mut spec = tiny(2);
        spec.scenario.antennas_per_ap = 4;
        spec.scenario.area = AreaSpec {
            width: 0.5,
            depth: 0.5,
            ..AreaSpec::default()
        };
        let out = run_campaign(&spec, 2).unwrap();
        assert_eq!(out.failures.len(), 1);
        assert!(out.table.rows.is_empty());
    }
}
