//! Subcommand implementations. Each returns what it wrote so callers and
//! tests can inspect results without re-reading the files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use imrc_core::dofest::{estimate_dof, monte_carlo, snr_sweep};
use imrc_core::{
    dof_upper_bound, paper_example_channels, standard_form, ChannelRealization, Combining, DofEstimate, GainMode,
    MonteCarloResult, PowerPolicy, Scheme, SweepCurve, SweepPoint,
};
use serde::Serialize;

use crate::config::{default_grid, default_window, ExperimentConfig, LabeledScheme};
use crate::error::CliError;
use crate::output::{artifact, ensure_dir, mc_csv, read_sweep_csv, sweep_csv, sweep_long_csv, write_atomic, write_json};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_LONG_CSV: &str = "sweep_long.csv";
pub const DOF_JSON: &str = "dof.json";
pub const SUMMARY_JSON: &str = "summary.json";
pub const MC_CSV: &str = "mc.csv";
pub const MC_DOF_JSON: &str = "mc_dof.json";

/// A fitted slope, or why none could be fitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum DofEntry {
    Estimate(DofEstimate),
    Unavailable { error: String },
}

impl DofEntry {
    pub fn slope(&self) -> Option<f64> {
        match self {
            DofEntry::Estimate(e) => Some(e.slope),
            DofEntry::Unavailable { .. } => None,
        }
    }
}

fn dof_entries(curves: &[SweepCurve], window: (f64, f64)) -> BTreeMap<String, DofEntry> {
    curves
        .iter()
        .map(|c| {
            let entry = match estimate_dof(c, window) {
                Ok(e) => DofEntry::Estimate(e),
                Err(e) => DofEntry::Unavailable { error: e.to_string() },
            };
            (c.scheme.clone(), entry)
        })
        .collect()
}

pub fn run_sweeps(
    schemes: &[LabeledScheme],
    ch: &ChannelRealization,
    channel_id: &str,
    grid_db: &[f64],
    noise_var: f64,
) -> Result<Vec<SweepCurve>, CliError> {
    schemes
        .iter()
        .map(|s| {
            snr_sweep(&s.scheme, &s.label, ch, channel_id, grid_db, noise_var).map_err(|e| CliError::Runtime(e.to_string()))
        })
        .collect()
}

fn write_sweep_artifacts(
    dir: &Path,
    curves: &[SweepCurve],
    users: usize,
    dof: &BTreeMap<String, DofEntry>,
    long_format: bool,
) -> Result<(), CliError> {
    ensure_dir(dir)?;
    write_atomic(&artifact(dir, SWEEP_CSV), &sweep_csv(curves, users)?)?;
    if long_format {
        write_atomic(&artifact(dir, SWEEP_LONG_CSV), &sweep_long_csv(curves)?)?;
    }
    write_json(&artifact(dir, DOF_JSON), dof)
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub curves: Vec<SweepCurve>,
    pub dof: BTreeMap<String, DofEntry>,
    pub output_dir: PathBuf,
}

/// `sweep.csv` and `dof.json` (plus `sweep_long.csv` when requested).
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome, CliError> {
    let schemes = cfg.validate()?;
    let (ch, channel_id) = cfg.sweep_channels()?;
    let curves = run_sweeps(&schemes, &ch, &channel_id, &cfg.grid_db, cfg.network.noise_var)?;
    let dof = dof_entries(&curves, cfg.window_db);
    write_sweep_artifacts(&cfg.output_dir, &curves, ch.users(), &dof, cfg.long_format)?;
    Ok(SweepOutcome {
        curves,
        dof,
        output_dir: cfg.output_dir.clone(),
    })
}

/// Schemes of the throughput-versus-SNR figure; `baselines` adds the
/// comparison curves.
pub fn paper_fig_schemes(baselines: bool) -> Vec<LabeledScheme> {
    let bm = |policy, combining| Scheme::BlockMarkov {
        policy,
        combining,
        gain_mode: GainMode::PaperFormula,
    };
    let mut schemes = vec![
        Scheme::TwoHop { relay_exponent: 1.0 },
        bm(PowerPolicy::Asymmetric, Combining::NonCoherent),
        Scheme::CoopBc,
        bm(PowerPolicy::Abundant, Combining::NonCoherent),
    ];
    if baselines {
        schemes.extend([
            bm(PowerPolicy::Asymmetric, Combining::Coherent),
            bm(PowerPolicy::Symmetric, Combining::NonCoherent),
            Scheme::NoRelayTdm,
            Scheme::NoRelayTin,
            Scheme::HalfDuplex { relay_exponent: 1.0 },
        ]);
    }
    schemes.into_iter().map(LabeledScheme::new).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct StandardFormSummary {
    pub a12: f64,
    pub a21: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PaperFigSummary {
    pub channels: String,
    pub standard_form: StandardFormSummary,
    pub schemes: Vec<String>,
    pub grid_db: Vec<f64>,
    pub window_db: (f64, f64),
    pub dof: BTreeMap<String, DofEntry>,
    /// `K²/(2K − 1)` for the example network.
    pub dof_upper_bound: String,
}

/// Reproduces the two-user example figure into `out_dir`.
pub fn cmd_paper_fig(out_dir: &Path, baselines: bool, long_format: bool) -> Result<PaperFigSummary, CliError> {
    let ch = paper_example_channels();
    let grid = default_grid();
    let window = default_window();
    let schemes = paper_fig_schemes(baselines);
    let curves = run_sweeps(&schemes, &ch, "paper_example", &grid, 1.0)?;
    let dof = dof_entries(&curves, window);
    write_sweep_artifacts(out_dir, &curves, ch.users(), &dof, long_format)?;

    let sf = standard_form(ch.direct()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let bound = dof_upper_bound(2, 2);
    let summary = PaperFigSummary {
        channels: "paper_example".into(),
        standard_form: StandardFormSummary {
            a12: sf.gain(0, 1),
            a21: sf.gain(1, 0),
        },
        schemes: schemes.iter().map(|s| s.label.clone()).collect(),
        grid_db: grid,
        window_db: window,
        dof,
        dof_upper_bound: format!("{}/{}", bound.numer(), bound.denom()),
    };
    write_json(&artifact(out_dir, SUMMARY_JSON), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct McDofEntry {
    pub trials: u64,
    pub slope_mean: Option<f64>,
    pub slope_std: Option<f64>,
    pub slopes: Vec<f64>,
    pub failures: usize,
    pub failure_kinds: BTreeMap<String, usize>,
}

/// `mc.csv` and `mc_dof.json` over `cfg.trials` random realizations.
/// `workers` overrides `cfg.workers`.
pub fn cmd_montecarlo(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<MonteCarloResult>, CliError> {
    let schemes = cfg.validate()?;
    if cfg.trials == 0 {
        return Err(CliError::Config("montecarlo needs trials >= 1".into()));
    }
    if cfg.channels_file.is_some() {
        return Err(CliError::Config("channels_file cannot be combined with montecarlo".into()));
    }
    let workers = workers.or(cfg.workers);
    if workers == Some(0) {
        return Err(CliError::Config("workers must be at least 1".into()));
    }
    let results = schemes
        .iter()
        .map(|s| {
            monte_carlo(&cfg.network, &s.scheme, &s.label, cfg.trials, &cfg.grid_db, cfg.window_db, workers)
                .map_err(|e| CliError::Runtime(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let dof: BTreeMap<String, McDofEntry> = results
        .iter()
        .map(|r| {
            (
                r.scheme.clone(),
                McDofEntry {
                    trials: cfg.trials,
                    slope_mean: r.slope_mean(),
                    slope_std: r.slope_std(),
                    slopes: r.slopes.clone(),
                    failures: r.failures,
                    failure_kinds: r.failure_kinds.clone(),
                },
            )
        })
        .collect();
    ensure_dir(&cfg.output_dir)?;
    write_atomic(&artifact(&cfg.output_dir, MC_CSV), &mc_csv(&results)?)?;
    write_json(&artifact(&cfg.output_dir, MC_DOF_JSON), &dof)?;
    Ok(results)
}

/// Parses `LO:HI`.
pub fn parse_window(text: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Config(format!("window must look like LO:HI, got {text:?}"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Refits every scheme found in a sweep CSV over `window`.
pub fn cmd_dof(csv_path: &Path, window: (f64, f64)) -> Result<BTreeMap<String, DofEntry>, CliError> {
    let rows = read_sweep_csv(csv_path)?;
    let mut curves: Vec<SweepCurve> = Vec::new();
    for (snr_db, scheme, rate) in rows {
        let curve = match curves.iter_mut().find(|c| c.scheme == scheme) {
            Some(c) => c,
            None => {
                curves.push(SweepCurve {
                    scheme: scheme.clone(),
                    points: Vec::new(),
                    channel_id: csv_path.display().to_string(),
                });
                curves.last_mut().expect("just pushed")
            }
        };
        curve.points.push(SweepPoint {
            snr_db,
            sum_rate_bits: rate,
            per_user: Vec::new(),
        });
    }
    if curves.is_empty() {
        return Err(CliError::Config(format!("{} has no data rows", csv_path.display())));
    }
    Ok(dof_entries(&curves, window))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_parsing() {
        assert_eq!(parse_window("60:100").unwrap(), (60.0, 100.0));
        assert_eq!(parse_window(" -5.5 : 20 ").unwrap(), (-5.5, 20.0));
        for bad in ["60", "100:60", "a:b", "60:60", ":"] {
            assert!(parse_window(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn paper_fig_scheme_labels() {
        let labels: Vec<String> = paper_fig_schemes(false).into_iter().map(|s| s.label).collect();
        assert_eq!(labels, ["two_hop", "block_markov[asym]", "coop_bc", "block_markov[abundant]"]);
        assert_eq!(paper_fig_schemes(true).len(), 9);
    }
}
