//! Hermitian eigendecompositions: dense, and windowed for banded operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::band::{Band, BandLu, SymBand};
use super::DiscreteOperator;
use crate::error::{invalid, numerical, Result};

/// Eigenvalues ascending with eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigen<T: nalgebra::Scalar> {
    pub values: Vec<f64>,
    pub vectors: DMatrix<T>,
}

/// Dense eigendecomposition of the (real symmetric) operator without CAP.
pub fn hermitian_eig(op: &DiscreteOperator) -> Result<Eigen<f64>> {
    if !op.is_hermitian() {
        return invalid("eigendecomposition needs an operator without absorbing layer");
    }
    let dense = op.hermitian.to_dense();
    let n = dense.nrows();
    let eig = dense.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Dense eigendecomposition of a complex Hermitian matrix.
pub fn hermitian_eig_dense(m: &DMatrix<C64>) -> Result<Eigen<C64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return invalid("matrix is not square");
    }
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let defect = (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if defect > 1e-10 * scale {
        return invalid("matrix is not Hermitian");
    }
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Eigenpairs of a real symmetric band with eigenvalues in `[lo, hi]`.
///
/// Eigenvalues come from bisection on inertia counts, eigenvectors from
/// shifted inverse iteration with reorthogonalization inside clusters.
pub fn band_eig_window(h: &SymBand, lo: f64, hi: f64) -> Result<Eigen<f64>> {
    let n = h.n;
    let first = h.count_below(lo);
    let last = h.count_below(hi);
    let count = last - first;
    let scale = h.inf_norm().max(1.0);
    let mut values = Vec::with_capacity(count);
    for idx in first..last {
        // Largest sigma with count_below(sigma) <= idx gives eigenvalue idx.
        let (mut a, mut b) = (lo, hi);
        while b - a > 4.0 * f64::EPSILON * scale {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if h.count_below(mid) <= idx {
                a = mid;
            } else {
                b = mid;
            }
        }
        values.push(0.5 * (a + b));
    }
    let mut vectors = DMatrix::<f64>::zeros(n, count);
    let hc = Band::from_sym(h);
    let cluster_gap = 1e-6 * scale;
    for (c, &e) in values.iter().enumerate() {
        let shift = e + 1e3 * f64::EPSILON * scale;
        let mut band = hc.clone();
        band.add_diag(|_| C64::new(-shift, 0.0));
        let lu = BandLu::factor(&band)?;
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * (0.37 + c as f64 * 0.11)).sin())
            .collect();
        for _ in 0..4 {
            let rhs: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
            let y = solve_unchecked(&lu, &rhs);
            x = y.iter().map(|v| v.re).collect();
            for prev in (0..c).rev() {
                if (values[c] - values[prev]).abs() > cluster_gap {
                    break;
                }
                let col = vectors.column(prev);
                let dot: f64 = col.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(col.iter()).for_each(|(v, p)| *v -= dot * p);
            }
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nx == 0.0 {
                return numerical("inverse iteration collapsed");
            }
            x.iter_mut().for_each(|v| *v /= nx);
        }
        vectors.set_column(c, &DVector::from_vec(x));
    }
    Ok(Eigen { values, vectors })
}

fn solve_unchecked(lu: &BandLu, rhs: &[C64]) -> Vec<C64> {
    // Near-singular shifts are intended here; the residual check of the
    // refined solve does not apply.
    match lu.solve(rhs) {
        Ok(x) => x,
        Err(_) => lu.solve_no_check(rhs),
    }
}

/// Window eigenpairs of an operator without CAP.
pub fn hermitian_eig_window(op: &DiscreteOperator, lo: f64, hi: f64) -> Result<Eigen<f64>> {
    if !op.is_hermitian() {
        return invalid("eigendecomposition needs an operator without absorbing layer");
    }
    band_eig_window(&op.hermitian, lo, hi)
}

/// Mean eigenvalue spacing of the Hermitian part near `lambda`.
pub fn local_level_spacing(op: &DiscreteOperator, lambda: f64) -> f64 {
    let h = &op.hermitian;
    let mut half = 0.01 * lambda.abs().max(1.0);
    loop {
        let count = h.count_below(lambda + half) - h.count_below(lambda - half);
        if count >= 4 || half > 1e3 * lambda.abs().max(1.0) {
            return 2.0 * half / count.max(1) as f64;
        }
        half *= 2.0;
    }
}
