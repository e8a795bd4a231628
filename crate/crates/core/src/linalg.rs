//! Complex matrix helpers shared by the rate and beamforming code.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::C64;

/// `log2 det(I + Σ_i w_i c_i c_i^H)` over the listed columns of `cols`.
///
/// Evaluated on whichever side of Sylvester's identity is smaller, through a
/// Cholesky factor of a Hermitian matrix whose eigenvalues are all ≥ 1.
pub fn log2_det_identity_plus(cols: &DMatrix<C64>, members: &[usize], weights: &[f64]) -> f64 {
    debug_assert_eq!(members.len(), weights.len());
    let active: Vec<(usize, f64)> = members
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&i, &w)| (i, w))
        .collect();
    if active.is_empty() {
        return 0.0;
    }
    let m = cols.nrows();
    let n = active.len();
    let mat = if n <= m {
        // I_n + D^{1/2} C^H C D^{1/2}
        let mut a = DMatrix::<C64>::identity(n, n);
        for (r, &(i, wi)) in active.iter().enumerate() {
            for (c, &(j, wj)) in active.iter().enumerate() {
                let dot = cols.column(i).dotc(&cols.column(j));
                a[(r, c)] += dot * (wi * wj).sqrt();
            }
        }
        a
    } else {
        let mut a = DMatrix::<C64>::identity(m, m);
        for &(i, w) in &active {
            let col = cols.column(i);
            a.gerc(C64::new(w, 0.0), &col, &col, C64::new(1.0, 0.0));
        }
        a
    };
    log2_det_hpd(mat)
}

/// `log2 det` of a Hermitian positive-definite matrix.
pub fn log2_det_hpd(mat: DMatrix<C64>) -> f64 {
    let n = mat.nrows();
    let hermitian = symmetrize(mat);
    match Cholesky::new(hermitian.clone()) {
        Some(chol) => {
            let l = chol.l_dirty();
            (0..n).map(|i| l[(i, i)].re.ln()).sum::<f64>() * 2.0 / std::f64::consts::LN_2
        }
        // PSD to rounding only; use the eigenvalues instead.
        None => SymmetricEigen::new(hermitian)
            .eigenvalues
            .iter()
            .map(|&ev| ev.max(f64::MIN_POSITIVE).log2())
            .sum(),
    }
}

fn symmetrize(mut mat: DMatrix<C64>) -> DMatrix<C64> {
    let n = mat.nrows();
    for i in 0..n {
        mat[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = (mat[(i, j)] + mat[(j, i)].conj()) * 0.5;
            mat[(i, j)] = avg;
            mat[(j, i)] = avg.conj();
        }
    }
    mat
}

/// Solves `B x = rhs` for Hermitian positive-definite `B`.
pub fn solve_hpd(mat: DMatrix<C64>, rhs: &DVector<C64>) -> Option<DVector<C64>> {
    Cholesky::new(symmetrize(mat)).map(|c| c.solve(rhs))
}
