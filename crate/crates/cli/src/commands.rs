use std::fs;
use std::path::{Path, PathBuf};

use cfmimo_core::channel::{fit_path_loss, synthesize_dataset, DatasetLayout, MeasuredDataset, PathLossFit};
use cfmimo_core::harness::{cdf, run_campaign, DropFailure, ResultRow};
use cfmimo_core::scenario::{place_aps, place_ues, ApPlacement, UePlacement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::CliConfig;
use crate::oracle::{run_oracle, OracleReport};
use crate::CliError;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone)]
pub struct RunReport {
    pub rows: usize,
    pub failures: Vec<DropFailure>,
    pub files: Vec<PathBuf>,
}

/// Files written so far; removed again unless the run completes.
struct Outputs {
    written: Vec<PathBuf>,
    done: bool,
}

impl Outputs {
    fn write(&mut self, path: PathBuf, contents: &str) -> Result<(), CliError> {
        fs::write(&path, contents).map_err(CliError::io(&path))?;
        self.written.push(path);
        Ok(())
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.done {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn cdf_text(values: &[f64]) -> Result<String, CliError> {
    let mut out = String::new();
    for (v, f) in cdf(values)? {
        out.push_str(&format!("{v},{f}\n"));
    }
    Ok(out)
}

/// Run the configured campaign and write `results.csv`, `summary.json` and
/// one `cdf_{se,ee}_{algorithm}_{combiner}.csv` per pair into `out_dir`.
pub fn cmd_run(cfg: &CliConfig, out_dir: &Path, workers: usize) -> Result<RunReport, CliError> {
    let spec = cfg.campaign()?;
    fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;
    let output = run_campaign(&spec, workers)?;
    if output.table.rows.is_empty() {
        let first = output.failures.first().map(|f| f.message.as_str()).unwrap_or("no rows");
        return Err(cfmimo_core::Error::NumericalFailure(format!("every drop failed; first: {first}")).into());
    }

    let mut outputs = Outputs {
        written: Vec::new(),
        done: false,
    };
    outputs.write(out_dir.join(RESULTS_FILE), &output.table.to_csv())?;
    let summary = serde_json::to_string_pretty(&output.summary).map_err(|e| cfmimo_core::Error::InvalidArgument(e.to_string()))?;
    outputs.write(out_dir.join(SUMMARY_FILE), &(summary + "\n"))?;
    for alg in &spec.algorithms {
        for &comb in &spec.combiners {
            let rows: Vec<&ResultRow> = output.table.select(&alg.label, comb).collect();
            for (metric, values) in [
                ("se", rows.iter().map(|r| r.se).collect::<Vec<_>>()),
                ("ee", rows.iter().map(|r| r.ee).collect()),
            ] {
                let name = format!("cdf_{metric}_{}_{comb}.csv", alg.label);
                outputs.write(out_dir.join(name), &cdf_text(&values)?)?;
            }
        }
    }
    outputs.done = true;
    Ok(RunReport {
        rows: output.table.rows.len(),
        failures: output.failures,
        files: outputs.written.clone(),
    })
}

pub fn cmd_oracle(cfg: &CliConfig) -> Result<OracleReport, CliError> {
    run_oracle(&cfg.oracle, &cfg.system, &cfg.tpc)
}

pub fn cmd_fit(dataset: &Path, reference_distance: Option<f64>) -> Result<PathLossFit, CliError> {
    let ds = MeasuredDataset::load(dataset)?;
    Ok(fit_path_loss(&ds, reference_distance)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub num_aps: usize,
    pub num_ues: usize,
    pub num_freqs: usize,
    pub rayleigh: bool,
    pub seed: u64,
}

/// Dataset drawn from the configured channel model over random AP and UE
/// positions in the configured area.
pub fn cmd_synth_dataset(cfg: &CliConfig, opts: &SynthOptions, out: &Path) -> Result<MeasuredDataset, CliError> {
    let s = &cfg.scenario;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let aps = place_aps(&s.area, opts.num_aps, 1, ApPlacement::Random, s.min_antenna_spacing, &mut rng)?;
    let ues = place_ues(&s.area, opts.num_ues, UePlacement::Spread, s.cluster_radius, 0.0, &mut rng)?;
    let ds = synthesize_dataset(
        aps.iter().map(|a| a.position).collect(),
        ues.iter().map(|u| u.position).collect(),
        &cfg.channel.model(),
        opts.num_freqs,
        opts.rayleigh,
        &mut rng,
    )?;
    ds.save(out, DatasetLayout::from_path(out))?;
    Ok(ds)
}
