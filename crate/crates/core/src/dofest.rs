//! SNR sweeps, high-SNR slope fits and Monte Carlo aggregation.
//!
//! The degrees of freedom of a scheme is the slope of its sum rate against
//! `log2(P/σ²)`; here it is estimated by least squares over a finite window of
//! SNR values in dB.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{generate_channels, ChannelRealization, NetworkConfig};
use crate::schemes::{Scheme, SchemeError};

/// `10·log10(2)`: dB per doubling of power.
pub const DB_PER_BIT: f64 = 3.010_299_956_639_812;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DofError {
    #[error("SNR grid is empty")]
    EmptyGrid,
    #[error("SNR grid must be strictly increasing and finite (at index {index})")]
    BadGrid { index: usize },
    #[error("window [{lo}, {hi}] dB holds {found} points, need at least 3")]
    TooFewPoints { lo: f64, hi: f64, found: usize },
    #[error("{label} at {snr_db} dB: {source}")]
    Scheme {
        label: String,
        snr_db: f64,
        #[source]
        source: SchemeError,
    },
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub sum_rate_bits: f64,
    pub per_user: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub scheme: String,
    pub points: Vec<SweepPoint>,
    pub channel_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DofEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window_db: (f64, f64),
    pub points: usize,
}

pub fn validate_grid(grid_db: &[f64]) -> Result<(), DofError> {
    if grid_db.is_empty() {
        return Err(DofError::EmptyGrid);
    }
    if let Some(index) = grid_db.iter().position(|v| !v.is_finite()) {
        return Err(DofError::BadGrid { index });
    }
    if let Some(index) = grid_db.windows(2).position(|w| w[1] <= w[0]) {
        return Err(DofError::BadGrid { index: index + 1 });
    }
    Ok(())
}

/// Source power for an SNR in dB.
pub fn db_to_power(snr_db: f64, noise_var: f64) -> f64 {
    noise_var * 10f64.powf(snr_db / 10.0)
}

/// Evaluates `scheme` at every grid point; `P = σ²·10^(dB/10)`.
pub fn snr_sweep(
    scheme: &Scheme,
    label: &str,
    ch: &ChannelRealization,
    channel_id: &str,
    grid_db: &[f64],
    noise_var: f64,
) -> Result<SweepCurve, DofError> {
    validate_grid(grid_db)?;
    let points = grid_db
        .iter()
        .map(|&snr_db| {
            scheme
                .evaluate(ch, db_to_power(snr_db, noise_var), noise_var)
                .map(|r| SweepPoint {
                    snr_db,
                    sum_rate_bits: r.sum,
                    per_user: r.per_user,
                })
                .map_err(|source| DofError::Scheme {
                    label: label.to_string(),
                    snr_db,
                    source,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepCurve {
        scheme: label.to_string(),
        points,
        channel_id: channel_id.to_string(),
    })
}

/// Least-squares line of sum rate against `log2(P/σ²) = dB / (10·log10 2)`
/// over points with `lo ≤ dB ≤ hi`.
pub fn estimate_dof(curve: &SweepCurve, window_db: (f64, f64)) -> Result<DofEstimate, DofError> {
    let (lo, hi) = window_db;
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .points
        .iter()
        .filter(|pt| pt.snr_db >= lo && pt.snr_db <= hi)
        .map(|pt| (pt.snr_db / DB_PER_BIT, pt.sum_rate_bits))
        .unzip();
    let n = xs.len();
    if n < 3 {
        return Err(DofError::TooFewPoints { lo, hi, found: n });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy <= f64::EPSILON * my.abs().max(1.0) * nf {
        1.0
    } else {
        let sse: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(DofEstimate {
        slope,
        intercept,
        r_squared,
        window_db,
        points: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub scheme: String,
    pub grid_db: Vec<f64>,
    pub mean: Vec<f64>,
    /// Sample standard deviation (`n − 1` denominator; zero for one trial).
    pub std_dev: Vec<f64>,
    /// Successful trials contributing to each grid point.
    pub n: Vec<usize>,
    /// Fitted slope of each successful trial, in trial order.
    pub slopes: Vec<f64>,
    pub failures: usize,
    pub failure_kinds: BTreeMap<String, usize>,
}

impl MonteCarloResult {
    pub fn slope_mean(&self) -> Option<f64> {
        (!self.slopes.is_empty()).then(|| self.slopes.iter().sum::<f64>() / self.slopes.len() as f64)
    }

    pub fn slope_std(&self) -> Option<f64> {
        let mean = self.slope_mean()?;
        Some(sample_std(&self.slopes, mean))
    }
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Runs `scheme` over `trials` independent realizations drawn from
/// `(config.seed, trial)`. A trial that fails at any grid point is dropped and
/// tallied by error kind. Per-trial results are reduced in trial order, so the
/// outcome does not depend on `workers`.
pub fn monte_carlo(
    config: &NetworkConfig,
    scheme: &Scheme,
    label: &str,
    trials: u64,
    grid_db: &[f64],
    window_db: (f64, f64),
    workers: Option<usize>,
) -> Result<MonteCarloResult, DofError> {
    if trials == 0 {
        return Err(DofError::NoTrials);
    }
    validate_grid(grid_db)?;
    let run_trial = |trial: u64| {
        let ch = generate_channels(config, trial);
        snr_sweep(scheme, label, &ch, &format!("seed{}-trial{trial}", config.seed), grid_db, config.noise_var)
    };
    let outcomes: Vec<Result<SweepCurve, DofError>> = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| DofError::Pool(e.to_string()))?
            .install(|| (0..trials).into_par_iter().map(run_trial).collect()),
        None => (0..trials).into_par_iter().map(run_trial).collect(),
    };

    let mut failure_kinds = BTreeMap::new();
    let mut curves = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(curve) => curves.push(curve),
            Err(DofError::Scheme { source, .. }) => {
                *failure_kinds.entry(source.kind().to_string()).or_insert(0) += 1;
            }
            Err(other) => return Err(other),
        }
    }
    let failures = failure_kinds.values().sum();
    let g = grid_db.len();
    let n = vec![curves.len(); g];
    let mut mean = vec![0.0; g];
    let mut std_dev = vec![0.0; g];
    if !curves.is_empty() {
        for i in 0..g {
            let vals: Vec<f64> = curves.iter().map(|c| c.points[i].sum_rate_bits).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            mean[i] = m;
            std_dev[i] = sample_std(&vals, m);
        }
    }
    let slopes = curves
        .iter()
        .filter_map(|c| estimate_dof(c, window_db).ok())
        .map(|d| d.slope)
        .collect();
    Ok(MonteCarloResult {
        scheme: label.to_string(),
        grid_db: grid_db.to_vec(),
        mean,
        std_dev,
        n,
        slopes,
        failures,
        failure_kinds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::paper_example_channels;
    use crate::C64;
    use nalgebra::DMatrix;

    fn synthetic(grid: &[f64], f: impl Fn(f64) -> f64) -> SweepCurve {
        SweepCurve {
            scheme: "synthetic".into(),
            points: grid
                .iter()
                .map(|&d| SweepPoint {
                    snr_db: d,
                    sum_rate_bits: f(d / DB_PER_BIT),
                    per_user: vec![],
                })
                .collect(),
            channel_id: "none".into(),
        }
    }

    #[test]
    fn db_per_bit_constant() {
        assert!((DB_PER_BIT - 10.0 * 2f64.log10()).abs() < 1e-15);
    }

    #[test]
    fn affine_curve_is_exact() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 5.0).collect();
        let est = estimate_dof(&synthetic(&grid, |x| 1.0 * x + 3.0), (60.0, 100.0)).unwrap();
        assert!((est.slope - 1.0).abs() < 1e-12);
        assert!((est.intercept - 3.0).abs() < 1e-10);
        assert!((est.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(est.points, 9);
    }

    #[test]
    fn constant_curve_has_zero_slope() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 5.0).collect();
        let est = estimate_dof(&synthetic(&grid, |_| 4.2), (60.0, 100.0)).unwrap();
        assert!(est.slope.abs() < 1e-12);
        assert_eq!(est.r_squared, 1.0);
    }

    #[test]
    fn too_few_points() {
        let curve = synthetic(&[0.0, 50.0, 70.0, 200.0], |x| x);
        assert!(matches!(
            estimate_dof(&curve, (60.0, 100.0)),
            Err(DofError::TooFewPoints { found: 1, .. })
        ));
    }

    #[test]
    fn tdm_sweep_single_user() {
        let one = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let ch = ChannelRealization::new(one.clone(), one.clone(), one).unwrap();
        let curve = snr_sweep(&Scheme::NoRelayTdm, "no_relay_tdm", &ch, "unit", &[0.0, 10.0, 20.0], 1.0).unwrap();
        let expect = [2f64.log2(), 11f64.log2(), 101f64.log2()];
        for (pt, e) in curve.points.iter().zip(expect) {
            assert!((pt.sum_rate_bits - e).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_validation() {
        let ch = paper_example_channels();
        assert_eq!(
            snr_sweep(&Scheme::NoRelayTdm, "x", &ch, "p", &[], 1.0),
            Err(DofError::EmptyGrid)
        );
        assert_eq!(
            snr_sweep(&Scheme::NoRelayTdm, "x", &ch, "p", &[0.0, 10.0, 10.0], 1.0),
            Err(DofError::BadGrid { index: 2 })
        );
    }

    #[test]
    fn scheme_errors_carry_grid_point() {
        let ch = crate::channel::generate_channels(&NetworkConfig::new(3, 2, 0), 0);
        let err = snr_sweep(&Scheme::HalfDuplex { relay_exponent: 1.0 }, "hd", &ch, "x", &[5.0, 10.0], 1.0)
            .unwrap_err();
        assert!(matches!(err, DofError::Scheme { snr_db, .. } if snr_db == 5.0));
    }

    #[test]
    fn sweep_is_reproducible() {
        let ch = paper_example_channels();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 5.0).collect();
        let scheme = Scheme::TwoHop { relay_exponent: 1.0 };
        let a = snr_sweep(&scheme, "two_hop", &ch, "paper", &grid, 1.0).unwrap();
        let b = snr_sweep(&scheme, "two_hop", &ch, "paper", &grid, 1.0).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.sum_rate_bits.to_bits(), y.sum_rate_bits.to_bits());
        }
    }

    #[test]
    fn single_trial_matches_sweep() {
        let cfg = NetworkConfig::new(2, 2, 13);
        let grid = [0.0, 20.0, 40.0];
        let scheme = Scheme::TwoHop { relay_exponent: 1.0 };
        let mc = monte_carlo(&cfg, &scheme, "two_hop", 1, &grid, (0.0, 40.0), Some(1)).unwrap();
        let sweep = snr_sweep(&scheme, "two_hop", &generate_channels(&cfg, 0), "t0", &grid, 1.0).unwrap();
        for (m, pt) in mc.mean.iter().zip(&sweep.points) {
            assert_eq!(*m, pt.sum_rate_bits);
        }
        assert!(mc.std_dev.iter().all(|&s| s == 0.0));
        assert_eq!(mc.n, vec![1, 1, 1]);
    }

    #[test]
    fn aggregates_independent_of_workers() {
        let cfg = NetworkConfig::new(2, 2, 5);
        let grid = [0.0, 30.0, 60.0, 90.0];
        let scheme = Scheme::CoopBc;
        let a = monte_carlo(&cfg, &scheme, "coop_bc", 12, &grid, (30.0, 90.0), Some(1)).unwrap();
        let b = monte_carlo(&cfg, &scheme, "coop_bc", 12, &grid, (30.0, 90.0), Some(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failures_are_counted() {
        let cfg = NetworkConfig::new(3, 2, 5);
        let mc = monte_carlo(&cfg, &Scheme::HalfDuplex { relay_exponent: 1.0 }, "hd", 4, &[0.0], (0.0, 1.0), Some(2))
            .unwrap();
        assert_eq!(mc.failures, 4);
        assert_eq!(mc.failure_kinds.get("insufficient_antennas"), Some(&4));
        assert_eq!(mc.n, vec![0]);
    }
}
