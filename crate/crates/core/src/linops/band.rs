//! Banded storage, banded LU with partial pivoting, and symmetric inertia.

use num_complex::Complex64 as C64;

use crate::error::{numerical, Result};

/// Real symmetric band: `upper[d][i] = H[i][i + d]` for `d = 0..=m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymBand {
    pub n: usize,
    pub upper: Vec<Vec<f64>>,
}

impl SymBand {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        SymBand {
            n,
            upper: (0..=half_bandwidth).map(|d| vec![0.0; n - d.min(n)]).collect(),
        }
    }

    pub fn half_bandwidth(&self) -> usize {
        self.upper.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let d = b - a;
        if d > self.half_bandwidth() {
            0.0
        } else {
            self.upper[d][a]
        }
    }

    pub fn diag(&self) -> &[f64] {
        &self.upper[0]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.upper[0].iter().zip(x).map(|(a, v)| a * v).collect();
        for (d, band) in self.upper.iter().enumerate().skip(1) {
            for (i, a) in band.iter().enumerate() {
                y[i] += a * x[i + d];
                y[i + d] += a * x[i];
            }
        }
        y
    }

    pub fn matvec_c(&self, x: &[C64]) -> Vec<C64> {
        let mut y: Vec<C64> = self.upper[0].iter().zip(x).map(|(a, v)| v * *a).collect();
        for (d, band) in self.upper.iter().enumerate().skip(1) {
            for (i, a) in band.iter().enumerate() {
                y[i] += x[i + d] * *a;
                y[i + d] += x[i] * *a;
            }
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Infinity norm, an upper bound for the spectral norm.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let m = self.half_bandwidth();
                let lo = i.saturating_sub(m);
                let hi = (i + m).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues strictly below `sigma`, from the signs of the
    /// `LDL^T` pivots of `H - sigma` (Sylvester inertia).
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.n;
        let m = self.half_bandwidth();
        // Row-wise storage of the unit lower factor within the band.
        let mut l = vec![vec![0.0; m + 1]; n];
        let mut d = vec![0.0; n];
        let tiny = f64::EPSILON * self.inf_norm().max(1.0);
        let mut negatives = 0;
        for i in 0..n {
            let lo = i.saturating_sub(m);
            for j in lo..i {
                // L[i][j] = (H[i][j] - sum_k L[i][k] D[k] L[j][k]) / D[j]
                let mut s = self.get(i, j);
                let klo = lo.max(j.saturating_sub(m));
                for k in klo..j {
                    s -= l[i][i - k] * d[k] * l[j][j - k];
                }
                l[i][i - j] = s / d[j];
            }
            let mut s = self.get(i, i) - sigma;
            for k in lo..i {
                s -= l[i][i - k] * l[i][i - k] * d[k];
            }
            if s == 0.0 {
                s = -tiny;
            }
            if s < 0.0 {
                negatives += 1;
            }
            d[i] = s;
        }
        negatives
    }
}

/// General complex band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    /// Row-major, entry `(i, j)` at `data[i * width + j + kl - i]`.
    data: Vec<C64>,
}

impl Band {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Band {
            n,
            kl,
            ku,
            data: vec![C64::new(0.0, 0.0); n * (kl + ku + 1)],
        }
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if self.in_band(i, j) {
            self.data[i * self.width() + j + self.kl - i]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(self.in_band(i, j), "({i},{j}) outside band");
        let w = self.width();
        self.data[i * w + j + self.kl - i] = v;
    }

    pub fn from_sym(h: &SymBand) -> Self {
        let m = h.half_bandwidth();
        let mut b = Band::zeros(h.n, m, m);
        for i in 0..h.n {
            let lo = i.saturating_sub(m);
            let hi = (i + m).min(h.n - 1);
            for j in lo..=hi {
                b.set(i, j, C64::new(h.get(i, j), 0.0));
            }
        }
        b
    }

    pub fn add_diag(&mut self, diag: impl Fn(usize) -> C64) {
        for i in 0..self.n {
            let v = self.get(i, i) + diag(i);
            self.set(i, i, v);
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut b = Band::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                b.set(j, i, self.get(i, j).conj());
            }
        }
        b
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// Banded LU factorization with partial pivoting.
#[derive(Clone, Debug)]
pub struct BandLu {
    original: Band,
    n: usize,
    kl: usize,
    ku2: usize,
    lu: Vec<C64>,
    piv: Vec<usize>,
}

impl BandLu {
    fn width(&self) -> usize {
        self.kl + self.ku2 + 1
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width() + j + self.kl - i
    }

    pub fn factor(a: &Band) -> Result<Self> {
        let n = a.n;
        let kl = a.kl;
        let ku2 = a.kl + a.ku;
        let width = kl + ku2 + 1;
        let mut f = BandLu {
            original: a.clone(),
            n,
            kl,
            ku2,
            lu: vec![C64::new(0.0, 0.0); n * width],
            piv: vec![0; n],
        };
        for i in 0..n {
            let lo = i.saturating_sub(a.kl);
            let hi = (i + a.ku).min(n - 1);
            for j in lo..=hi {
                let k = f.idx(i, j);
                f.lu[k] = a.get(i, j);
            }
        }
        let scale = (0..n)
            .map(|i| {
                (i.saturating_sub(kl)..=(i + a.ku).min(n - 1))
                    .map(|j| a.get(i, j).norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = f.lu[f.idx(k, k)].norm();
            for i in k + 1..=last {
                let v = f.lu[f.idx(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > f64::EPSILON * scale * 1e-6) {
                return numerical(format!("banded LU: pivot {k} is singular to tolerance"));
            }
            f.piv[k] = p;
            let jmax = (k + ku2).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a1, a2) = (f.idx(k, j), f.idx(p, j));
                    f.lu.swap(a1, a2);
                }
            }
            let pivot = f.lu[f.idx(k, k)];
            for i in k + 1..=last {
                let ik = f.idx(i, k);
                let l = f.lu[ik] / pivot;
                f.lu[ik] = l;
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..=jmax {
                    let kj = f.lu[f.idx(k, j)];
                    let ij = f.idx(i, j);
                    f.lu[ij] -= l * kj;
                }
            }
        }
        Ok(f)
    }

    fn solve_raw(&self, rhs: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut b = rhs.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == C64::new(0.0, 0.0) {
                continue;
            }
            for i in k + 1..=(k + self.kl).min(n - 1) {
                b[i] -= self.lu[self.idx(i, k)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + self.ku2).min(n - 1) {
                s -= self.lu[self.idx(i, j)] * b[j];
            }
            b[i] = s / self.lu[self.idx(i, i)];
        }
        b
    }

    /// Solve with one refinement step and no residual check.
    pub fn solve_no_check(&self, rhs: &[C64]) -> Vec<C64> {
        let mut x = self.solve_raw(rhs);
        let ax = self.original.matvec(&x);
        let r: Vec<C64> = rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
        let dx = self.solve_raw(&r);
        x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        x
    }

    /// Solve with one step of iterative refinement; fails when the relative
    /// residual exceeds `1e-10`.
    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        let rhs_norm = norm2(rhs);
        if rhs_norm == 0.0 {
            return Ok(vec![C64::new(0.0, 0.0); self.n]);
        }
        let mut x = self.solve_raw(rhs);
        let ax = self.original.matvec(&x);
        let r: Vec<C64> = rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
        let dx = self.solve_raw(&r);
        x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        let ax = self.original.matvec(&x);
        let res = rhs
            .iter()
            .zip(&ax)
            .map(|(b, v)| (b - v).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if res > 1e-10 * rhs_norm {
            return numerical(format!(
                "banded solve residual {:.3e} exceeds tolerance",
                res / rhs_norm
            ));
        }
        Ok(x)
    }
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
