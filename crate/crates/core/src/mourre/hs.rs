//! Helffer-Sjostrand functional calculus for Hermitian matrices.
//!
//! `f(T) = (1/2pi) int int dbar F(u + iv) (T - u - iv)^{-1} du dv` with the
//! almost-analytic extension `F(u + iv) = c(v) sum_{j<=6} f^(j)(u) (iv)^j / j!`.
//! The integrand at `v < 0` is the adjoint of the one at `-v`, so only the
//! upper half is integrated.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{invalid, numerical, Result};
use crate::jet::{factorial, Jet};
use crate::linops::{hermitian_eig_dense, DiscreteOperator, SymBand};
use crate::quad::composite;

const EXT_ORDER: usize = 6;
const GAUSS_NODES: usize = 8;

/// A real profile given by its Taylor jet, supported in `support`.
#[derive(Clone, Copy)]
pub struct SmoothProfile<'a> {
    pub jet: &'a (dyn Fn(Jet) -> Jet + Sync),
    pub support: (f64, f64),
}

impl SmoothProfile<'_> {
    pub fn value(&self, x: f64) -> f64 {
        if x <= self.support.0 || x >= self.support.1 {
            return 0.0;
        }
        (self.jet)(Jet::variable(x)).value()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HsOptions {
    /// Convergence threshold on the largest entry change between refinements.
    pub tol: f64,
    /// The cutoff `c(v)` is 1 below `v_low` and 0 above `v_high`.
    pub v_low: f64,
    pub v_high: f64,
    pub max_refinements: usize,
}

impl Default for HsOptions {
    fn default() -> Self {
        HsOptions {
            tol: 1e-9,
            v_low: 0.1,
            v_high: 0.3,
            max_refinements: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HsResult {
    pub matrix: DMatrix<C64>,
    pub refinements: usize,
    pub nodes: usize,
    pub last_change: f64,
}

/// `c(v)` and `c'(v)`: 1 below `v_low`, 0 above `v_high`, quintic smoothstep
/// in between. The polynomial pieces keep the `v` quadrature exact.
fn cutoff(v: f64, opts: &HsOptions) -> (f64, f64) {
    let span = opts.v_high - opts.v_low;
    let s = ((v - opts.v_low) / span).clamp(0.0, 1.0);
    let step = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    let dstep = 30.0 * s * s * (1.0 - s) * (1.0 - s) / span;
    (1.0 - step, -dstep)
}

/// `dbar F(u + iv)` for `v > 0`, with `dbar = d/du + i d/dv`.
fn dbar_extension(profile: &SmoothProfile, u: f64, v: f64, opts: &HsOptions) -> C64 {
    if u <= profile.support.0 || u >= profile.support.1 || v >= opts.v_high {
        return C64::new(0.0, 0.0);
    }
    let f = (profile.jet)(Jet::variable(u));
    let (c, dc) = cutoff(v, opts);
    let iv = C64::new(0.0, v);
    let top = f.derivative(EXT_ORDER + 1) * iv.powi(EXT_ORDER as i32) / factorial(EXT_ORDER);
    let mut out = top * c;
    if dc != 0.0 {
        let sum: C64 = (0..=EXT_ORDER)
            .map(|j| f.derivative(j) * iv.powi(j as i32) / factorial(j))
            .sum();
        out += C64::new(0.0, 1.0) * dc * sum;
    }
    out
}

/// Lower edge of the integration strip: below it the integrand is bounded
/// by `|f^(7)(u)| v^5 / 6!`, so the strip contributes at most `tol / 10`.
fn strip_floor(profile: &SmoothProfile, opts: &HsOptions) -> f64 {
    let (a, b) = profile.support;
    let m = 20_000;
    let l1 = (0..m)
        .map(|i| {
            let u = a + (b - a) * (i as f64 + 0.5) / m as f64;
            (profile.jet)(Jet::variable(u)).derivative(EXT_ORDER + 1).abs()
        })
        .sum::<f64>()
        * (b - a)
        / m as f64;
    if l1 == 0.0 {
        return opts.v_low;
    }
    let bound = 0.1 * opts.tol * 6.0 * factorial(EXT_ORDER) * std::f64::consts::PI / l1;
    bound.powf(1.0 / 6.0).min(opts.v_low)
}

/// Weighted jet terms `f^(j)(u) v_high^j / j!`, `j <= 7`.
fn jet_terms(profile: &SmoothProfile, u: f64, v_high: f64) -> [f64; EXT_ORDER + 2] {
    let f = (profile.jet)(Jet::variable(u));
    let mut out = [0.0; EXT_ORDER + 2];
    for (j, o) in out.iter_mut().enumerate() {
        *o = f.derivative(j) * v_high.powi(j as i32) / factorial(j);
    }
    out
}

fn panel_rule(profile: &SmoothProfile, a: f64, b: f64, v_high: f64) -> [f64; EXT_ORDER + 2] {
    let mut acc = [0.0; EXT_ORDER + 2];
    for (x, w) in composite(a, b, 1, GAUSS_NODES) {
        for (s, t) in acc.iter_mut().zip(jet_terms(profile, x, v_high)) {
            *s += w * t;
        }
    }
    acc
}

/// Partition of the support on which the profile's jet is resolved by the
/// panel rule.
fn profile_partition(profile: &SmoothProfile, v_high: f64, tol: f64) -> Vec<(f64, f64)> {
    let (a, b) = profile.support;
    let mut stack = vec![(a, b, panel_rule(profile, a, b, v_high))];
    let mut out = Vec::new();
    while let Some((lo, hi, whole)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel_rule(profile, lo, mid, v_high);
        let right = panel_rule(profile, mid, hi, v_high);
        let err = (0..whole.len())
            .map(|j| (whole[j] - left[j] - right[j]).abs())
            .fold(0.0, f64::max);
        if err <= tol * (hi - lo) / (b - a) || hi - lo < 1e-6 * (b - a) {
            out.push((lo, hi));
        } else {
            stack.push((mid, hi, right));
            stack.push((lo, mid, left));
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// Adds `weight * (T - z)^{-1}` to the upper triangle of the column-major
/// `acc`, for real symmetric tridiagonal `T` and `Im z > 0`.
///
/// The unpivoted pivots of `T - z` from either end have imaginary part at
/// most `-Im z`, so they never vanish. `G_jj` comes from both pivot
/// sequences and `G_ij = G_{i+1,j} (-b_i / d_i)` for `i < j`; every partial
/// product is an entry of the resolvent, bounded by `1 / Im z`.
fn add_resolvent(diag: &[f64], off: &[f64], z: C64, weight: C64, work: &mut ResolventWork, acc: &mut [C64]) -> Result<()> {
    if !(z.im > 0.0) {
        return numerical("resolvent node must lie in the upper half plane");
    }
    let n = diag.len();
    let ResolventWork { fwd, bwd, ratio } = work;
    fwd[0] = C64::new(diag[0], 0.0) - z;
    for i in 1..n {
        fwd[i] = C64::new(diag[i], 0.0) - z - off[i - 1] * off[i - 1] / fwd[i - 1];
    }
    bwd[n - 1] = C64::new(diag[n - 1], 0.0) - z;
    for i in (0..n - 1).rev() {
        bwd[i] = C64::new(diag[i], 0.0) - z - off[i] * off[i] / bwd[i + 1];
    }
    for i in 0..n - 1 {
        ratio[i] = -off[i] / fwd[i];
    }
    for j in 0..n {
        let mut p = weight / (fwd[j] + bwd[j] - (C64::new(diag[j], 0.0) - z));
        let col = &mut acc[j * n..j * n + j + 1];
        col[j] += p;
        for i in (0..j).rev() {
            p *= ratio[i];
            col[i] += p;
        }
    }
    Ok(())
}

struct ResolventWork {
    fwd: Vec<C64>,
    bwd: Vec<C64>,
    ratio: Vec<C64>,
}

impl ResolventWork {
    fn new(n: usize) -> Self {
        let zero = C64::new(0.0, 0.0);
        ResolventWork { fwd: vec![zero; n], bwd: vec![zero; n], ratio: vec![zero; n] }
    }
}

/// Geometric `v` panels from `v_min` to `v_high`, split at `v_low`, each cut
/// into `2^level` pieces. For each `v` node the profile partition is
/// subdivided to widths below `v / 2^level`, which resolves the poles at
/// distance `v`.
fn quadrature(
    profile: &SmoothProfile,
    t: &SymBand,
    v_min: f64,
    partition: &[(f64, f64)],
    level: usize,
    opts: &HsOptions,
) -> Result<(DMatrix<C64>, usize)> {
    let n = t.n;
    let mut edges = vec![v_min];
    while *edges.last().unwrap() * 2.0 < opts.v_low {
        edges.push(edges.last().unwrap() * 2.0);
    }
    edges.push(opts.v_low);
    edges.push(opts.v_high);
    let mut vs = Vec::new();
    for e in edges.windows(2) {
        if e[1] > e[0] {
            vs.extend(composite(e[0], e[1], 1 << level, GAUSS_NODES));
        }
    }
    let diag = &t.upper[0];
    let off: Vec<f64> = (0..n - 1).map(|i| t.get(i, i + 1)).collect();
    let mut x = DMatrix::<C64>::zeros(n, n);
    let mut nodes = 0;
    let mut work = ResolventWork::new(n);
    let mut us = Vec::new();
    for &(v, wv) in &vs {
        us.clear();
        for &(lo, hi) in partition {
            let pieces = (((hi - lo) / v).ceil() as usize).max(1) << level;
            us.extend(composite(lo, hi, pieces, GAUSS_NODES));
        }
        for &(u, wu) in &us {
            let g = dbar_extension(profile, u, v, opts);
            if g.norm() == 0.0 {
                continue;
            }
            nodes += 1;
            add_resolvent(diag, &off, C64::new(u, v), g * (wu * wv), &mut work, x.as_mut_slice())?;
        }
    }
    // The resolvent of a real symmetric matrix is complex symmetric.
    for j in 0..n {
        for i in 0..j {
            x[(j, i)] = x[(i, j)];
        }
    }
    let f = (&x + x.adjoint()).scale(1.0 / (2.0 * std::f64::consts::PI));
    Ok((f, nodes))
}

/// `f(T)` for a real symmetric band `T`, refining the quadrature until two
/// successive levels agree to `opts.tol`.
pub fn hs_calculus_band(profile: &SmoothProfile, t: &SymBand, opts: HsOptions) -> Result<HsResult> {
    if !(opts.v_low > 0.0 && opts.v_high > opts.v_low) {
        return invalid("cutoff needs 0 < v_low < v_high");
    }
    if !(profile.support.1 > profile.support.0) {
        return invalid("profile support is empty");
    }
    if t.half_bandwidth() > 1 {
        return hs_calculus_dense(profile, &t.to_dense().map(|v| C64::new(v, 0.0)), opts);
    }
    let v_min = strip_floor(profile, &opts);
    let partition = profile_partition(profile, opts.v_high, opts.tol);
    let (mut prev, mut nodes) = quadrature(profile, t, v_min, &partition, 0, &opts)?;
    let mut change = f64::INFINITY;
    for level in 1..=opts.max_refinements {
        let (next, count) = quadrature(profile, t, v_min, &partition, level, &opts)?;
        nodes += count;
        change = (&next - &prev).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prev = next;
        if change <= opts.tol {
            return Ok(HsResult {
                matrix: prev,
                refinements: level,
                nodes,
                last_change: change,
            });
        }
    }
    numerical(format!(
        "Helffer-Sjostrand quadrature did not converge: last change {change:.3e} after {} refinements",
        opts.max_refinements
    ))
}

/// `f(tau (H - lambda))` for an operator without absorbing layer.
pub fn hs_calculus(profile: &SmoothProfile, op: &DiscreteOperator, lambda: f64, tau: f64, opts: HsOptions) -> Result<HsResult> {
    if !op.is_hermitian() {
        return invalid("functional calculus needs an operator without absorbing layer");
    }
    if !(tau > 0.0) {
        return invalid("tau must be positive");
    }
    let mut t = op.hermitian.clone();
    t.upper.iter_mut().for_each(|d| d.iter_mut().for_each(|v| *v *= tau));
    t.upper[0].iter_mut().for_each(|v| *v -= tau * lambda);
    hs_calculus_band(profile, &t, opts)
}

/// Unitary `Q` and real symmetric tridiagonal `T` with `M = Q T Q*`.
///
/// Householder reduction followed by a diagonal phase change that makes the
/// off-diagonal real and nonnegative.
pub fn tridiagonalize(m: &DMatrix<C64>) -> Result<(DMatrix<C64>, SymBand)> {
    let n = m.nrows();
    if m.ncols() != n || n == 0 {
        return invalid("matrix must be square and nonempty");
    }
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    if (m - m.adjoint()).iter().any(|v| v.norm() > 1e-10 * scale) {
        return invalid("matrix is not Hermitian");
    }
    let mut a = (m + m.adjoint()).scale(0.5);
    let mut q = DMatrix::<C64>::identity(n, n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xn = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if xn == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { C64::new(1.0, 0.0) };
        let mut v = x.clone();
        v[0] += phase * xn;
        let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|c| *c /= vn);
        // P = I - 2 v v*, acting on indices k+1..n.
        let m_len = n - k - 1;
        for col in 0..n {
            let s: C64 = (0..m_len).map(|i| v[i].conj() * a[(k + 1 + i, col)]).sum();
            for i in 0..m_len {
                a[(k + 1 + i, col)] -= v[i] * (s * 2.0);
            }
        }
        for row in 0..n {
            let s: C64 = (0..m_len).map(|i| a[(row, k + 1 + i)] * v[i]).sum();
            for i in 0..m_len {
                a[(row, k + 1 + i)] -= (s * 2.0) * v[i].conj();
            }
        }
        for row in 0..n {
            let s: C64 = (0..m_len).map(|i| q[(row, k + 1 + i)] * v[i]).sum();
            for i in 0..m_len {
                q[(row, k + 1 + i)] -= (s * 2.0) * v[i].conj();
            }
        }
    }
    let mut t = SymBand::zeros(n, 1);
    let mut d = C64::new(1.0, 0.0);
    for j in 0..n {
        t.upper[0][j] = a[(j, j)].re;
        q.column_mut(j).iter_mut().for_each(|c| *c *= d);
        if j + 1 < n {
            let e = a[(j + 1, j)];
            t.upper[1][j] = e.norm();
            if e.norm() > 0.0 {
                d *= e / e.norm();
            }
        }
    }
    Ok((q, t))
}

/// `f(M)` for a dense Hermitian matrix via tridiagonalization.
pub fn hs_calculus_dense(profile: &SmoothProfile, m: &DMatrix<C64>, opts: HsOptions) -> Result<HsResult> {
    let (q, t) = tridiagonalize(m)?;
    let mut res = hs_calculus_band(profile, &t, opts)?;
    res.matrix = &q * &res.matrix * q.adjoint();
    Ok(res)
}

/// `f(M)` from the eigendecomposition.
pub fn spectral_calculus_dense(f: impl Fn(f64) -> f64, m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let eig = hermitian_eig_dense(m)?;
    let n = m.nrows();
    let fv: Vec<f64> = eig.values.iter().map(|&e| f(e)).collect();
    let v = &eig.vectors;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * v[(j, k)].conj() * fv[k]).sum()
    }))
}
