//! Relay zero-forcing beamformers with a prescribed per-stream power.
//!
//! Stream `k` is sent by the relay along `t_k`. At every unintended
//! destination `j` the relay copy must cancel the direct-link copy of the same
//! codeword, `h_Rj^H t_k = −f_kj`, while `‖t_k‖²` equals a fixed budget. The
//! solution is the minimum-norm point of the affine constraint set plus a unit
//! null-space direction scaled to use up the remaining budget.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::C64;

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamformError {
    #[error("relay has {antennas} antennas but {users} streams need zero-forcing")]
    InsufficientAntennas { antennas: usize, users: usize },
    #[error("constraint matrix for stream {stream} has rank {rank}, expected {expected}")]
    RankDeficient {
        stream: usize,
        rank: usize,
        expected: usize,
    },
    #[error(
        "stream {stream}: minimum zero-forcing power {min_norm_sq:.6e} exceeds the budget {target:.6e}"
    )]
    PowerInfeasible {
        stream: usize,
        min_norm_sq: f64,
        target: f64,
    },
    #[error("invalid beamforming input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    /// `t_k` for each stream.
    pub vectors: Vec<DVector<C64>>,
    /// Common squared-norm budget of every `t_k`.
    pub norm_target: f64,
    /// `residuals[k]` lists `|h_Rj^H t_k + f_kj|` for `j ≠ k` in ascending `j`.
    pub residuals: Vec<Vec<f64>>,
}

impl BeamformerSet {
    /// `|h_Rk^H t_k|`, the amplitude the relay adds to stream `k` at its own
    /// destination.
    pub fn effective_gain(&self, downlink: &DMatrix<C64>, k: usize) -> f64 {
        downlink.column(k).dotc(&self.vectors[k]).norm()
    }
}

fn residuals_of(vectors: &[DVector<C64>], downlink: &DMatrix<C64>, direct: &DMatrix<C64>) -> Vec<Vec<f64>> {
    let k = vectors.len();
    (0..k)
        .map(|s| {
            (0..k)
                .filter(|&j| j != s)
                .map(|j| (downlink.column(j).dotc(&vectors[s]) + direct[(s, j)]).norm())
                .collect()
        })
        .collect()
}

/// Solves the zero-forcing system for every stream.
pub fn zf_beamformers(
    downlink: &DMatrix<C64>,
    direct: &DMatrix<C64>,
    norm_target: f64,
) -> Result<BeamformerSet, BeamformError> {
    let m = downlink.nrows();
    let k = downlink.ncols();
    if direct.shape() != (k, k) {
        return Err(BeamformError::InvalidInput(format!(
            "F is {}x{}, expected {k}x{k}",
            direct.nrows(),
            direct.ncols()
        )));
    }
    if !(norm_target.is_finite() && norm_target > 0.0) {
        return Err(BeamformError::InvalidInput(format!(
            "norm target must be positive and finite, got {norm_target}"
        )));
    }
    if m < k {
        return Err(BeamformError::InsufficientAntennas { antennas: m, users: k });
    }
    let vectors = (0..k)
        .map(|stream| stream_beamformer(downlink, direct, stream, norm_target))
        .collect::<Result<Vec<_>, _>>()?;
    let residuals = residuals_of(&vectors, downlink, direct);
    Ok(BeamformerSet {
        vectors,
        norm_target,
        residuals,
    })
}

fn stream_beamformer(
    downlink: &DMatrix<C64>,
    direct: &DMatrix<C64>,
    stream: usize,
    norm_target: f64,
) -> Result<DVector<C64>, BeamformError> {
    let m = downlink.nrows();
    let others: Vec<usize> = (0..downlink.ncols()).filter(|&j| j != stream).collect();
    let rows = others.len();

    // A t = b with rows h_Rj^H and b_j = −f_kj
    let a = DMatrix::from_fn(rows, m, |r, c| downlink[(c, others[r])].conj());
    let b = DVector::from_iterator(rows, others.iter().map(|&j| -direct[(stream, j)]));

    // Orthonormal basis of the row space (columns of V_r), from the SVD.
    let row_basis: DMatrix<C64> = if rows == 0 {
        DMatrix::zeros(m, 0)
    } else {
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| smax > 0.0 && s > RANK_TOL * smax)
            .count();
        if rank < rows {
            return Err(BeamformError::RankDeficient {
                stream,
                rank,
                expected: rows,
            });
        }
        let v_t = svd.v_t.as_ref().expect("requested V^H");
        v_t.rows(0, rows).adjoint()
    };

    let particular = if rows == 0 {
        DVector::zeros(m)
    } else {
        let mut t0 = min_norm_solve(&a, &b);
        // one step of iterative refinement
        let resid = &b - &a * &t0;
        t0 += min_norm_solve(&a, &resid);
        t0
    };
    let min_norm_sq = particular.norm_squared();
    if min_norm_sq > norm_target * (1.0 + 1e-12) {
        return Err(BeamformError::PowerInfeasible {
            stream,
            min_norm_sq,
            target: norm_target,
        });
    }
    let null_dir = null_direction(&row_basis, m);
    let scale = (norm_target - min_norm_sq).max(0.0).sqrt();
    Ok(particular + null_dir * C64::new(scale, 0.0))
}

/// Minimum-norm solution of a full-row-rank system, `A^H (A A^H)^{-1} b`.
fn min_norm_solve(a: &DMatrix<C64>, b: &DVector<C64>) -> DVector<C64> {
    let gram = a * a.adjoint();
    let y = gram
        .lu()
        .solve(b)
        .unwrap_or_else(|| DVector::zeros(b.len()));
    a.adjoint() * y
}

/// Unit vector orthogonal to the row space: the standard basis vector with the
/// largest projection onto the null space (lowest index on ties), projected
/// twice and normalized.
fn null_direction(row_basis: &DMatrix<C64>, m: usize) -> DVector<C64> {
    let project = |v: &DVector<C64>| -> DVector<C64> {
        if row_basis.ncols() == 0 {
            return v.clone();
        }
        v - row_basis * (row_basis.adjoint() * v)
    };
    let mut best: Option<(f64, DVector<C64>)> = None;
    for i in 0..m {
        let e = DVector::from_fn(m, |r, _| if r == i { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let p = project(&e);
        let n = p.norm();
        if best.as_ref().is_none_or(|(bn, _)| n > bn * (1.0 + 1e-12)) {
            best = Some((n, p));
        }
    }
    let (_, p) = best.expect("m >= 1");
    let p = project(&p);
    let norm = p.norm();
    p / C64::new(norm, 0.0)
}

/// Result of re-checking a beamformer set against the channels.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub max_residual: f64,
    /// Largest `|‖t_k‖² − target| / target`.
    pub max_norm_error: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Recomputes residuals and norms from scratch. Residual `(k, j)` passes when
/// it is at most `tol·(1 + |f_kj|)`; norms pass at relative error `tol`.
pub fn verify_beamformers(
    set: &BeamformerSet,
    downlink: &DMatrix<C64>,
    direct: &DMatrix<C64>,
    tol: f64,
) -> VerificationReport {
    let mut failures = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut max_norm_error: f64 = 0.0;
    let k = set.vectors.len();
    if downlink.ncols() != k || direct.shape() != (k, k) {
        failures.push(format!(
            "dimension mismatch: {k} vectors, H {}x{}, F {}x{}",
            downlink.nrows(),
            downlink.ncols(),
            direct.nrows(),
            direct.ncols()
        ));
        return VerificationReport {
            max_residual: f64::INFINITY,
            max_norm_error: f64::INFINITY,
            passed: false,
            failures,
        };
    }
    for (s, t) in set.vectors.iter().enumerate() {
        let rel = (t.norm_squared() - set.norm_target).abs() / set.norm_target;
        max_norm_error = max_norm_error.max(rel);
        if !(rel <= tol) {
            failures.push(format!("stream {s}: relative norm error {rel:.3e}"));
        }
        for j in (0..k).filter(|&j| j != s) {
            let r = (downlink.column(j).dotc(t) + direct[(s, j)]).norm();
            max_residual = max_residual.max(r);
            if !(r <= tol * (1.0 + direct[(s, j)].norm())) {
                failures.push(format!("stream {s} at destination {j}: residual {r:.3e}"));
            }
        }
    }
    VerificationReport {
        max_residual,
        max_norm_error,
        passed: failures.is_empty(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channels, paper_example_channels, NetworkConfig};
    use crate::schemes::{eval_policy, PowerPolicy};

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn decoupled_constraint() {
        // h_R2 = [1, 0], f_12 = −1: first entry of t_1 forced to 1
        let h = DMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)]);
        let f = DMatrix::from_row_slice(2, 2, &[re(1.0), re(-1.0), re(0.0), re(1.0)]);
        let set = zf_beamformers(&h, &f, 5.0).unwrap();
        let t1 = &set.vectors[0];
        assert!((t1[0] - re(1.0)).norm() < 1e-12);
        assert!((t1[1].norm_sqr() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_system_lives_in_null_space() {
        let ch = generate_channels(&NetworkConfig::new(3, 4, 2), 0);
        let f = DMatrix::from_fn(3, 3, |r, c| if r == c { re(1.0) } else { re(0.0) });
        let set = zf_beamformers(ch.downlink(), &f, 2.5).unwrap();
        for (k, t) in set.vectors.iter().enumerate() {
            assert!((t.norm_squared() - 2.5).abs() < 1e-12);
            for j in (0..3).filter(|&j| j != k) {
                assert!(ch.downlink().column(j).dotc(t).norm() < 1e-12);
            }
        }
        assert!(set.residuals.iter().flatten().all(|&r| r < 1e-12));
    }

    #[test]
    fn example_network_asymmetric_budget() {
        let ch = paper_example_channels();
        let p = 100.0;
        let split = eval_policy(&PowerPolicy::Asymmetric, p);
        let target = split.relay / (2.0 * split.psi);
        let set = zf_beamformers(ch.downlink(), ch.direct(), target).unwrap();
        // substitute back: h_R2^H t_1 + f_12 and h_R1^H t_2 + f_21
        let r1 = (ch.downlink().column(1).dotc(&set.vectors[0]) + ch.direct()[(0, 1)]).norm();
        let r2 = (ch.downlink().column(0).dotc(&set.vectors[1]) + ch.direct()[(1, 0)]).norm();
        assert!(r1 < 1e-9 && r2 < 1e-9, "{r1} {r2}");
        let report = verify_beamformers(&set, ch.downlink(), ch.direct(), 1e-9);
        assert!(report.passed, "{:?}", report.failures);
    }

    #[test]
    fn perturbed_vector_fails_verification() {
        let ch = generate_channels(&NetworkConfig::new(2, 3, 8), 1);
        let mut set = zf_beamformers(ch.downlink(), ch.direct(), 4.0).unwrap();
        assert!(verify_beamformers(&set, ch.downlink(), ch.direct(), 1e-8).passed);
        set.vectors[0][0] += re(0.1);
        let report = verify_beamformers(&set, ch.downlink(), ch.direct(), 1e-8);
        assert!(!report.passed);
        assert!(report.max_residual > 1e-3);
    }

    #[test]
    fn error_paths() {
        let ch = generate_channels(&NetworkConfig::new(3, 2, 1), 0);
        assert!(matches!(
            zf_beamformers(ch.downlink(), ch.direct(), 1.0),
            Err(BeamformError::InsufficientAntennas { antennas: 2, users: 3 })
        ));
        // identical downlink columns make the K = 3 constraints rank one
        let col = [re(1.0), re(0.5), re(-0.2)];
        let h = DMatrix::from_fn(3, 3, |r, _| col[r]);
        let f = DMatrix::from_element(3, 3, re(0.3));
        assert!(matches!(
            zf_beamformers(&h, &f, 1.0),
            Err(BeamformError::RankDeficient { rank: 1, .. })
        ));
        let ch = paper_example_channels();
        assert!(matches!(
            zf_beamformers(ch.downlink(), ch.direct(), 1e-3),
            Err(BeamformError::PowerInfeasible { .. })
        ));
    }

    #[test]
    fn single_stream_uses_whole_budget() {
        let h = DMatrix::from_column_slice(2, 1, &[re(1.0), re(2.0)]);
        let f = DMatrix::from_element(1, 1, re(1.0));
        let set = zf_beamformers(&h, &f, 3.0).unwrap();
        assert!((set.vectors[0].norm_squared() - 3.0).abs() < 1e-12);
        assert!(set.residuals[0].is_empty());
    }

    #[test]
    fn desired_gain_respects_cauchy_schwarz() {
        for trial in 0..50 {
            let ch = generate_channels(&NetworkConfig::new(3, 3, 99), trial);
            let target = 10.0;
            let Ok(set) = zf_beamformers(ch.downlink(), ch.direct(), target) else {
                continue;
            };
            for k in 0..3 {
                let bound = ch.downlink().column(k).norm() * target.sqrt();
                assert!(set.effective_gain(ch.downlink(), k) <= bound * (1.0 + 1e-12));
            }
        }
    }
}
