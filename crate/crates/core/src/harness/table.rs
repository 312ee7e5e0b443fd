use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::stats::{cdf, percentile};
use crate::combining::CombinerKind;
use crate::tpc::TpcStatus;
use crate::Result;

pub const CSV_HEADER: &str = "drop_id,realization_id,algorithm,combiner,ue_id,se,ee,sinr,q,status";

/// Per-UE outcome of one algorithm/combiner pair on one channel realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub drop_id: u64,
    pub realization_id: u64,
    pub algorithm: String,
    pub combiner: CombinerKind,
    pub ue_id: usize,
    pub se: f64,
    pub ee: f64,
    pub sinr: f64,
    pub q: f64,
    pub status: TpcStatus,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// CSV with a header row. Floats use the shortest representation that
    /// round-trips, so identical results give identical bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.drop_id,
                r.realization_id,
                r.algorithm,
                r.combiner,
                r.ue_id,
                r.se,
                r.ee,
                r.sinr,
                r.q,
                r.status.as_str()
            );
        }
        out
    }

    /// Rows of one algorithm/combiner pair.
    pub fn select<'a>(&'a self, algorithm: &'a str, combiner: CombinerKind) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.algorithm == algorithm && r.combiner == combiner)
    }

    /// Smallest value of `metric` over the UEs of each (drop, realization),
    /// in row order.
    pub fn per_realization_min(&self, algorithm: &str, combiner: CombinerKind, metric: impl Fn(&ResultRow) -> f64) -> Vec<f64> {
        let mut groups: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for r in self.select(algorithm, combiner) {
            let v = metric(r);
            groups
                .entry((r.drop_id, r.realization_id))
                .and_modify(|m| *m = m.min(v))
                .or_insert(v);
        }
        groups.into_values().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryEntry {
    pub median_se: f64,
    /// SE exceeded with 95% probability (5th percentile).
    pub p95_se: f64,
    pub median_ee: f64,
    pub p95_ee: f64,
    /// Fraction of solves (drop x realization) that were infeasible.
    pub infeasible_fraction: f64,
}

/// algorithm -> combiner -> summary.
pub type Summary = BTreeMap<String, BTreeMap<String, SummaryEntry>>;

pub fn summarize(table: &ResultTable, algorithms: &[String], combiners: &[CombinerKind]) -> Result<Summary> {
    let mut summary = Summary::new();
    for alg in algorithms {
        for &comb in combiners {
            let rows: Vec<&ResultRow> = table.select(alg, comb).collect();
            if rows.is_empty() {
                continue;
            }
            let se: Vec<f64> = rows.iter().map(|r| r.se).collect();
            let ee: Vec<f64> = rows.iter().map(|r| r.ee).collect();
            let (se_cdf, ee_cdf) = (cdf(&se)?, cdf(&ee)?);
            let mut solves: BTreeMap<(u64, u64), bool> = BTreeMap::new();
            for r in &rows {
                solves.insert((r.drop_id, r.realization_id), r.status == TpcStatus::Infeasible);
            }
            let infeasible = solves.values().filter(|v| **v).count();
            let entry = SummaryEntry {
                median_se: percentile(&se_cdf, 50.0)?,
                p95_se: percentile(&se_cdf, 5.0)?,
                median_ee: percentile(&ee_cdf, 50.0)?,
                p95_ee: percentile(&ee_cdf, 5.0)?,
                infeasible_fraction: infeasible as f64 / solves.len() as f64,
            };
            summary.entry(alg.clone()).or_default().insert(comb.to_string(), entry);
        }
    }
    Ok(summary)
}
