//! Independent reference computations used only by tests.
#![allow(dead_code)]

use imrc_core::C64;
use nalgebra::DMatrix;

/// `min_T f(T) + Σ_{k∉T} c_k` over all subsets, `f(∅) = 0`.
pub fn min_cut_value(users: usize, rank: &[f64], caps: &[f64]) -> f64 {
    let full = (1usize << users) - 1;
    (0..=full)
        .map(|t| {
            let rest: f64 = (0..users).filter(|k| t & (1 << k) == 0).map(|k| caps[k]).sum();
            rank[t] + rest
        })
        .fold(f64::INFINITY, f64::min)
}

/// Brute-force LP: maximize `Σ r` over `{r ≥ 0, r(S) ≤ f(S), r ≤ c}` by
/// enumerating every vertex (K tight constraints out of all of them).
pub fn lp_vertex_max(users: usize, rank: &[f64], caps: &[f64]) -> f64 {
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for s in 1..(1usize << users) {
        rows.push(((0..users).map(|k| if s & (1 << k) != 0 { 1.0 } else { 0.0 }).collect(), rank[s]));
    }
    for k in 0..users {
        let mut a = vec![0.0; users];
        a[k] = 1.0;
        rows.push((a.clone(), caps[k]));
        a[k] = -1.0;
        rows.push((a, 0.0));
    }
    let mut best = f64::NEG_INFINITY;
    let mut choice = vec![0usize; users];
    enumerate(rows.len(), users, 0, 0, &mut choice, &mut |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = gauss_solve(a, b) {
            let feasible = rows
                .iter()
                .all(|(a, b)| a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum::<f64>() <= b + 1e-9);
            if feasible {
                best = best.max(x.iter().sum());
            }
        }
    });
    best
}

fn enumerate(n: usize, k: usize, start: usize, depth: usize, choice: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if depth == k {
        visit(choice);
        return;
    }
    for i in start..n {
        choice[depth] = i;
        enumerate(n, k, i + 1, depth + 1, choice, visit);
    }
}

/// Gaussian elimination with partial pivoting; `None` if singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// `log2 det(I₂ + Σ w_k c_k c_k^H)` for two 2-vectors, cofactor expansion.
pub fn log2_det2(c: &DMatrix<C64>, w: [f64; 2]) -> f64 {
    let e = |r: usize, s: usize| -> C64 {
        let base = if r == s { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        base + c[(r, 0)] * c[(s, 0)].conj() * w[0] + c[(r, 1)] * c[(s, 1)].conj() * w[1]
    };
    (e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0)).re.log2()
}

/// Scan of the two-user dual-MAC split `q₁ ∈ [0, total]` with the given step
/// as a fraction of `total`.
pub fn grid_bc_two_users(h: &DMatrix<C64>, total: f64, noise_var: f64, step_frac: f64) -> f64 {
    let steps = (1.0 / step_frac).round() as usize;
    let scaled = h / C64::new(noise_var.sqrt(), 0.0);
    (0..=steps)
        .map(|i| {
            let q1 = total * i as f64 / steps as f64;
            log2_det2(&scaled, [q1, total - q1])
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
