//! Information-rate primitives.
//!
//! All rates are in bits per channel use. The MAC subset capacities form a
//! polymatroid; intersecting it with per-user caps is again a polymatroid
//! whose rank is `min_{T ⊆ S} f(T) + Σ_{k ∈ S∖T} c_k`, which gives both the
//! optimal sum and a greedy vertex achieving it.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use thiserror::Error;

use crate::linalg::{log2_det_identity_plus, solve_hpd};
use crate::C64;

/// Largest user count handled by the exhaustive subset routines.
pub const MAX_SUBSET_USERS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("user index {index} out of range for {users} users")]
    IndexOutOfRange { index: usize, users: usize },
    #[error("subset must be nonempty")]
    EmptySubset,
    #[error("invalid MAC region: {0}")]
    InvalidRegion(String),
    #[error("invalid rate caps: {0}")]
    InvalidCaps(String),
    #[error("{users} users exceeds the exhaustive subset limit of {MAX_SUBSET_USERS}")]
    TooManyUsers { users: usize },
    #[error("broadcast power allocation did not converge within {iterations} sweeps")]
    NotConverged { iterations: usize },
}

/// Receiver-side channel columns with per-user transmit powers.
#[derive(Debug, Clone)]
pub struct MacRegion {
    channel: DMatrix<C64>,
    powers: Vec<f64>,
    noise_var: f64,
}

impl MacRegion {
    pub fn new(channel: DMatrix<C64>, powers: Vec<f64>, noise_var: f64) -> Result<Self, RateError> {
        if powers.len() != channel.ncols() {
            return Err(RateError::InvalidRegion(format!(
                "{} powers for {} users",
                powers.len(),
                channel.ncols()
            )));
        }
        if let Some(p) = powers.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(RateError::InvalidRegion(format!("power {p} is not a finite nonnegative value")));
        }
        if !(noise_var.is_finite() && noise_var > 0.0) {
            return Err(RateError::InvalidRegion(format!("noise variance {noise_var}")));
        }
        Ok(Self {
            channel,
            powers,
            noise_var,
        })
    }

    /// Same powers for all `channel.ncols()` users.
    pub fn uniform(channel: DMatrix<C64>, power: f64, noise_var: f64) -> Result<Self, RateError> {
        let k = channel.ncols();
        Self::new(channel, vec![power; k], noise_var)
    }

    pub fn users(&self) -> usize {
        self.powers.len()
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    fn capacity_of(&self, members: &[usize]) -> f64 {
        let weights: Vec<f64> = members.iter().map(|&k| self.powers[k] / self.noise_var).collect();
        log2_det_identity_plus(&self.channel, members, &weights).max(0.0)
    }

    fn mask_capacity(&self, mask: u32) -> f64 {
        let members: Vec<usize> = (0..self.users()).filter(|k| mask & (1 << k) != 0).collect();
        self.capacity_of(&members)
    }
}

/// `log2 det(I + σ⁻² Σ_{k∈S} p_k g_k g_k^H)`.
pub fn mac_subset_capacity(region: &MacRegion, subset: &[usize]) -> Result<f64, RateError> {
    if subset.is_empty() {
        return Err(RateError::EmptySubset);
    }
    let users = region.users();
    if let Some(&index) = subset.iter().find(|&&k| k >= users) {
        return Err(RateError::IndexOutOfRange { index, users });
    }
    let mut members = subset.to_vec();
    members.sort_unstable();
    members.dedup();
    Ok(region.capacity_of(&members))
}

/// Which constraints are tight at an allocation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Binding {
    /// Minimizer `T` of `f(T) + Σ_{k∉T} c_k`; its subset constraint and the
    /// caps of the remaining users certify optimality.
    pub bottleneck: Vec<usize>,
    /// Users whose cap is met with equality.
    pub capped_users: Vec<usize>,
    /// Every nonempty subset whose sum-rate constraint is met with equality.
    pub tight_subsets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateAllocation {
    pub rates: Vec<f64>,
    pub binding: Binding,
}

impl RateAllocation {
    pub fn sum(&self) -> f64 {
        self.rates.iter().sum()
    }
}

const TIGHT_TOL: f64 = 1e-9;

fn members_of(mask: u32, users: usize) -> Vec<usize> {
    (0..users).filter(|k| mask & (1 << k) != 0).collect()
}

/// Maximizes `Σ r_k` over `{r ≥ 0 : r(S) ≤ rank(S) ∀S, r_k ≤ caps_k}` for a
/// polymatroid rank function given on bitmasks.
pub fn max_sum_with_caps<F>(users: usize, rank: F, caps: &[f64]) -> Result<RateAllocation, RateError>
where
    F: Fn(u32) -> f64,
{
    if users > MAX_SUBSET_USERS {
        return Err(RateError::TooManyUsers { users });
    }
    if caps.len() != users {
        return Err(RateError::InvalidCaps(format!("{} caps for {users} users", caps.len())));
    }
    if let Some(c) = caps.iter().find(|c| c.is_nan() || **c < 0.0) {
        return Err(RateError::InvalidCaps(format!("cap {c} is negative or NaN")));
    }
    let full: u32 = (1u32 << users) - 1;
    let table: Vec<f64> = (0..=full).map(|m| if m == 0 { 0.0 } else { rank(m) }).collect();
    let cap_sum = |mask: u32| -> f64 { members_of(mask, users).iter().map(|&k| caps[k]).sum() };

    // Rank of the truncated polymatroid, with its minimizing T.
    let truncated = |set: u32| -> (f64, u32) {
        let mut best = (cap_sum(set), 0u32);
        let mut sub = set;
        while sub != 0 {
            let v = table[sub as usize] + cap_sum(set & !sub);
            let better = v < best.0 - 1e-12
                || (v <= best.0 + 1e-12 && sub.count_ones() < best.1.count_ones() && best.1 != 0);
            if better {
                best = (v, sub);
            }
            sub = (sub - 1) & set;
        }
        best
    };

    let mut rates = vec![0.0; users];
    let mut prev = 0.0;
    let mut prefix = 0u32;
    for (k, rate) in rates.iter_mut().enumerate() {
        prefix |= 1 << k;
        let (value, _) = truncated(prefix);
        *rate = (value - prev).max(0.0);
        prev = value;
    }
    let (_, bottleneck) = truncated(full);

    let capped_users = (0..users).filter(|&k| rates[k] >= caps[k] - TIGHT_TOL).collect();
    let tight_subsets = (1..=full)
        .filter(|&m| {
            let used: f64 = members_of(m, users).iter().map(|&k| rates[k]).sum();
            used >= table[m as usize] - TIGHT_TOL
        })
        .map(|m| members_of(m, users))
        .collect();
    Ok(RateAllocation {
        rates,
        binding: Binding {
            bottleneck: members_of(bottleneck, users),
            capped_users,
            tight_subsets,
        },
    })
}

/// Largest sum rate decodable by the MAC receiver when user `k` may not
/// exceed `caps[k]`.
pub fn mac_max_sum_with_caps(region: &MacRegion, caps: &[f64]) -> Result<RateAllocation, RateError> {
    max_sum_with_caps(region.users(), |m| region.mask_capacity(m), caps)
}

/// Optimal dual-MAC power split and the resulting broadcast sum capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct BcSolution {
    pub sum_rate: f64,
    pub powers: Vec<f64>,
    pub sweeps: usize,
}

const BC_TOL: f64 = 1e-8;
const BC_MAX_SWEEPS: usize = 10_000;

/// Sum capacity of the broadcast channel from an M-antenna transmitter to
/// single-antenna receivers with channel columns `downlink` (receiver `k`
/// sees `h_k^H x`), computed on the dual MAC under a sum-power constraint.
pub fn bc_sum_capacity(downlink: &DMatrix<C64>, total_power: f64, noise_var: f64) -> Result<f64, RateError> {
    bc_sum_capacity_detailed(downlink, total_power, noise_var).map(|s| s.sum_rate)
}

/// Pairwise coordinate ascent: each step moves power between two users of the
/// dual MAC, and the exact optimum of that move is the maximizer of a concave
/// quadratic in the transferred power.
pub fn bc_sum_capacity_detailed(
    downlink: &DMatrix<C64>,
    total_power: f64,
    noise_var: f64,
) -> Result<BcSolution, RateError> {
    if !(total_power.is_finite() && total_power >= 0.0) {
        return Err(RateError::InvalidRegion(format!("total power {total_power}")));
    }
    if !(noise_var.is_finite() && noise_var > 0.0) {
        return Err(RateError::InvalidRegion(format!("noise variance {noise_var}")));
    }
    let k = downlink.ncols();
    let m = downlink.nrows();
    if k == 0 || total_power == 0.0 {
        return Ok(BcSolution {
            sum_rate: 0.0,
            powers: vec![0.0; k],
            sweeps: 0,
        });
    }
    let scaled = downlink / C64::new(noise_var.sqrt(), 0.0);
    let all: Vec<usize> = (0..k).collect();
    let objective = |q: &[f64]| log2_det_identity_plus(&scaled, &all, q);

    let mut q = vec![total_power / k as f64; k];
    if k == 1 {
        return Ok(BcSolution {
            sum_rate: objective(&q),
            powers: q,
            sweeps: 0,
        });
    }
    let mut current = objective(&q);
    for sweep in 1..=BC_MAX_SWEEPS {
        for i in 0..k {
            for j in (i + 1)..k {
                let s = q[i] + q[j];
                if s <= 0.0 {
                    continue;
                }
                let mut b = DMatrix::<C64>::identity(m, m);
                for l in (0..k).filter(|&l| l != i && l != j && q[l] > 0.0) {
                    let col = scaled.column(l);
                    b.gerc(C64::new(q[l], 0.0), &col, &col, C64::new(1.0, 0.0));
                }
                let ai: DVector<C64> = scaled.column(i).into_owned();
                let aj: DVector<C64> = scaled.column(j).into_owned();
                let (Some(x), Some(y)) = (solve_hpd(b.clone(), &ai), solve_hpd(b, &aj)) else {
                    continue;
                };
                let alpha = ai.dotc(&x).re;
                let beta = aj.dotc(&y).re;
                let gamma = ai.dotc(&y).norm_sqr();
                let curv = alpha * beta - gamma;
                // det ratio as a function of q_i = t with q_j = s - t
                let ratio = |t: f64| (1.0 + t * alpha) * (1.0 + (s - t) * beta) - t * (s - t) * gamma;
                let t_new = if curv > 1e-14 * alpha * beta {
                    (0.5 * s + (alpha - beta) / (2.0 * curv)).clamp(0.0, s)
                } else if alpha >= beta {
                    s
                } else {
                    0.0
                };
                if ratio(t_new) >= ratio(q[i]) {
                    q[i] = t_new;
                    q[j] = s - t_new;
                }
            }
        }
        let next = objective(&q);
        let delta = next - current;
        current = current.max(next);
        if delta.abs() < BC_TOL {
            return Ok(BcSolution {
                sum_rate: current,
                powers: q,
                sweeps: sweep,
            });
        }
    }
    Err(RateError::NotConverged {
        iterations: BC_MAX_SWEEPS,
    })
}

/// `log2(1 + signal / (interference + noise))`.
pub fn sinr_rate(signal_power: f64, interference_power: f64, noise_var: f64) -> f64 {
    debug_assert!(signal_power >= 0.0 && interference_power >= 0.0 && noise_var > 0.0);
    (signal_power / (interference_power + noise_var)).ln_1p() / LN_2
}

/// `SD / (S + D − 1)`, the sum-DoF bound for S sources and D destinations.
///
/// # Panics
///
/// If `sources` or `destinations` is zero.
pub fn dof_upper_bound(sources: u64, destinations: u64) -> Ratio<u64> {
    assert!(sources >= 1 && destinations >= 1, "S and D must be positive");
    Ratio::new(sources * destinations, sources + destinations - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channels, paper_example_channels, NetworkConfig};

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn orthonormal_mac() {
        let g = DMatrix::<C64>::identity(2, 2);
        let region = MacRegion::uniform(g, 3.0, 1.0).unwrap();
        let v = mac_subset_capacity(&region, &[0, 1]).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_power_subset_is_zero() {
        let ch = paper_example_channels();
        let region = MacRegion::new(ch.uplink().clone(), vec![0.0, 5.0], 1.0).unwrap();
        assert_eq!(mac_subset_capacity(&region, &[0]).unwrap(), 0.0);
    }

    #[test]
    fn subset_errors() {
        let region = MacRegion::uniform(DMatrix::<C64>::identity(2, 2), 1.0, 1.0).unwrap();
        assert_eq!(
            mac_subset_capacity(&region, &[0, 2]),
            Err(RateError::IndexOutOfRange { index: 2, users: 2 })
        );
        assert_eq!(mac_subset_capacity(&region, &[]), Err(RateError::EmptySubset));
    }

    #[test]
    fn example_mac_against_cofactor_determinant() {
        // det [[a, b], [c, d]] expanded by hand for I + (P/2) G G^T, real gains
        let p = 100.0;
        let (g11, g21, g12, g22) = (2.0, 0.8, 1.2, 2.0);
        let w = p / 2.0;
        let a = 1.0 + w * (g11 * g11 + g12 * g12);
        let b = w * (g11 * g21 + g12 * g22);
        let d = 1.0 + w * (g21 * g21 + g22 * g22);
        let expected = f64::log2(a * d - b * b);
        let region = MacRegion::uniform(paper_example_channels().uplink().clone(), w, 1.0).unwrap();
        let v = mac_subset_capacity(&region, &[0, 1]).unwrap();
        assert!((v - expected).abs() < 1e-10, "{v} vs {expected}");
    }

    #[test]
    fn capacity_is_monotone_in_power() {
        let ch = generate_channels(&NetworkConfig::new(3, 2, 4), 0);
        let mut last = 0.0;
        for p in [0.0, 0.1, 1.0, 10.0, 1e3, 1e6] {
            let region = MacRegion::new(ch.uplink().clone(), vec![p, 1.0, 2.0], 1.0).unwrap();
            let v = mac_subset_capacity(&region, &[0, 1, 2]).unwrap();
            assert!(v >= last - 1e-12);
            last = v;
        }
    }

    #[test]
    fn table_polymatroid_example() {
        // f({1}) = 3, f({2}) = 3, f({1,2}) = 5 with caps (2, 4)
        let rank = |m: u32| match m {
            1 | 2 => 3.0,
            3 => 5.0,
            _ => 0.0,
        };
        let alloc = max_sum_with_caps(2, rank, &[2.0, 4.0]).unwrap();
        assert!((alloc.sum() - 5.0).abs() < 1e-12);
        assert!(alloc.rates[0] <= 2.0 + 1e-12);
        assert!(alloc.rates[1] <= 3.0 + 1e-12);
        assert_eq!(alloc.binding.bottleneck, vec![1]);
        assert!(alloc.binding.tight_subsets.contains(&vec![0, 1]));
    }

    #[test]
    fn zero_caps_give_zero_rates() {
        let region = MacRegion::uniform(DMatrix::<C64>::identity(2, 2), 10.0, 1.0).unwrap();
        let alloc = mac_max_sum_with_caps(&region, &[0.0, 0.0]).unwrap();
        assert_eq!(alloc.rates, vec![0.0, 0.0]);
    }

    #[test]
    fn huge_caps_hit_full_capacity() {
        let ch = paper_example_channels();
        let region = MacRegion::uniform(ch.uplink().clone(), 50.0, 1.0).unwrap();
        let alloc = mac_max_sum_with_caps(&region, &[1e6, 1e6]).unwrap();
        let full = mac_subset_capacity(&region, &[0, 1]).unwrap();
        assert!((alloc.sum() - full).abs() < 1e-9);
        assert_eq!(alloc.binding.bottleneck, vec![0, 1]);
    }

    #[test]
    fn cap_validation() {
        let region = MacRegion::uniform(DMatrix::<C64>::identity(2, 2), 1.0, 1.0).unwrap();
        assert!(mac_max_sum_with_caps(&region, &[1.0]).is_err());
        assert!(mac_max_sum_with_caps(&region, &[1.0, -1.0]).is_err());
    }

    #[test]
    fn bc_orthonormal_symmetric_split() {
        let h = DMatrix::<C64>::identity(2, 2);
        let sol = bc_sum_capacity_detailed(&h, 4.0, 1.0).unwrap();
        assert!((sol.sum_rate - 2.0 * 3f64.log2()).abs() < 1e-9);
        assert!((sol.powers[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn bc_zero_power() {
        let h = paper_example_channels().downlink().clone();
        assert_eq!(bc_sum_capacity(&h, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn bc_single_user_closed_form() {
        let h = DMatrix::from_column_slice(3, 1, &[re(1.0), C64::new(0.5, -0.5), re(2.0)]);
        let norm2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let v = bc_sum_capacity(&h, 7.0, 2.0).unwrap();
        assert!((v - (1.0 + norm2 * 7.0 / 2.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn bc_example_against_grid() {
        let h = paper_example_channels().downlink().clone();
        let total = 10.0;
        let v = bc_sum_capacity(&h, total, 1.0).unwrap();
        let oracle = grid_bc(&h, total);
        assert!((v - oracle).abs() < 1e-4, "{v} vs {oracle}");
        assert!(v >= oracle - 1e-9);
    }

    #[test]
    fn bc_dominates_any_fixed_split() {
        let ch = generate_channels(&NetworkConfig::new(3, 3, 21), 0);
        let h = ch.downlink();
        let v = bc_sum_capacity(h, 30.0, 1.0).unwrap();
        for split in [[10.0, 10.0, 10.0], [30.0, 0.0, 0.0], [5.0, 20.0, 5.0]] {
            let fixed = log2_det_identity_plus(h, &[0, 1, 2], &split);
            assert!(v >= fixed - 1e-9);
        }
    }

    // Direct 1-D scan of the dual-MAC split for K = 2.
    fn grid_bc(h: &DMatrix<C64>, total: f64) -> f64 {
        let steps = 10_000;
        (0..=steps)
            .map(|i| {
                let q1 = total * i as f64 / steps as f64;
                log2_det_identity_plus(h, &[0, 1], &[q1, total - q1])
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn sinr_values() {
        assert!((sinr_rate(4.0, 0.0, 1.0) - 5f64.log2()).abs() < 1e-15);
        assert_eq!(sinr_rate(0.0, 7.0, 1.0), 0.0);
        assert!((sinr_rate(1e12, 1e12, 1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dof_bound_values() {
        assert_eq!(dof_upper_bound(2, 2), Ratio::new(4, 3));
        assert_eq!(dof_upper_bound(1, 1), Ratio::from_integer(1));
        assert_eq!(dof_upper_bound(5, 5), Ratio::new(25, 9));
    }
}
