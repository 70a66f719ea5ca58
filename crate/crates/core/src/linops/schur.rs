//! Schur test bound for integral kernels on a weighted grid.

use nalgebra::{ComplexField, DMatrix};

/// `max(sup_i sum_j |k_ij| m_j, sup_j sum_i |k_ij| m_i)`, an upper bound for
/// the norm of `(K phi)_i = sum_j k_ij phi_j m_j` on `L^2(m)`.
pub fn schur_bound<T: ComplexField<RealField = f64>>(kernel: &DMatrix<T>, measure: &[f64]) -> f64 {
    let rows = (0..kernel.nrows())
        .map(|i| {
            (0..kernel.ncols())
                .map(|j| kernel[(i, j)].clone().abs() * measure[j])
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let cols = (0..kernel.ncols())
        .map(|j| {
            (0..kernel.nrows())
                .map(|i| kernel[(i, j)].clone().abs() * measure[i])
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    rows.max(cols)
}

/// Exact norm of the same kernel operator for a uniform measure `h`.
pub fn kernel_norm_uniform<T: ComplexField<RealField = f64>>(kernel: &DMatrix<T>, h: f64) -> f64 {
    h * kernel.clone().singular_values().max()
}
