//! Radial discretization and the linear-algebra kernels built on it.

pub mod band;
pub mod eig;
pub mod norm;
pub mod schur;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{BoundaryCondition, RadialOperatorSpec};
pub use band::{Band, BandLu, SymBand};
pub use eig::{hermitian_eig, hermitian_eig_dense, hermitian_eig_window, local_level_spacing, Eigen};
pub use norm::{product_resolvent_norm, weighted_operator_norm, weighted_operator_norm_dense, NormEstimate, PowerOptions};
pub use schur::schur_bound;

/// Uniform interior grid `r_i = r0 + i h`, `i = 1..=n`, `h = (r_max - r0)/(n + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r0: f64,
    pub r_max: f64,
    pub n: usize,
    pub h: f64,
    pub stencil_order: usize,
}

impl RadialGrid {
    pub fn new(r0: f64, r_max: f64, n: usize, stencil_order: usize) -> Result<Self> {
        if !(r_max > r0) {
            return invalid("grid needs r_max > r0");
        }
        if n < 8 {
            return invalid("grid needs at least 8 interior points");
        }
        if stencil_order != 2 && stencil_order != 4 {
            return invalid(format!("unsupported stencil order {stencil_order}"));
        }
        Ok(RadialGrid {
            r0,
            r_max,
            n,
            h: (r_max - r0) / (n as f64 + 1.0),
            stencil_order,
        })
    }

    /// Grid with spacing as close as possible to `h` from above.
    pub fn with_spacing(r0: f64, r_max: f64, h: f64, stencil_order: usize) -> Result<Self> {
        let n = ((r_max - r0) / h).ceil() as usize;
        Self::new(r0, r_max, n.saturating_sub(1).max(8), stencil_order)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.r0 + (i as f64 + 1.0) * self.h
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Index of the grid point nearest to `r`.
    pub fn nearest(&self, r: f64) -> usize {
        let i = ((r - self.r0) / self.h).round() as i64 - 1;
        i.clamp(0, self.n as i64 - 1) as usize
    }
}

/// Complex absorbing potential `-i strength ((r - r_abs)_+ / (r_max - r_abs))^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapProfile {
    pub r_abs: f64,
    pub strength: f64,
    pub exponent: u32,
}

impl CapProfile {
    /// Layer over the last quarter of the grid, strength 5, exponent 2.
    pub fn default_for(grid: &RadialGrid) -> Self {
        CapProfile {
            r_abs: grid.r_max - 0.25 * (grid.r_max - grid.r0),
            strength: 5.0,
            exponent: 2,
        }
    }

    pub fn validate(&self, grid: &RadialGrid) -> Result<()> {
        if !(self.r_abs > grid.r0 && self.r_abs < grid.r_max) {
            return invalid("absorbing layer must start strictly inside the grid");
        }
        if !(self.strength > 0.0) {
            return invalid("absorbing strength must be positive");
        }
        if self.exponent < 2 {
            return invalid("absorbing exponent must be at least 2");
        }
        Ok(())
    }

    /// Magnitude `W(r) >= 0` of the absorbing term; the operator carries `-i W`.
    pub fn magnitude(&self, r: f64, r_max: f64) -> f64 {
        let x = ((r - self.r_abs) / (r_max - self.r_abs)).max(0.0);
        self.strength * x.powi(self.exponent as i32)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        CapProfile {
            strength: self.strength * factor,
            ..*self
        }
    }
}

/// One radial mode operator on a grid: `H - i W` with `H` real symmetric
/// banded and `W >= 0` the absorbing layer.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteOperator {
    pub grid: RadialGrid,
    pub bc: BoundaryCondition,
    pub hermitian: SymBand,
    pub cap: Option<CapProfile>,
    pub absorb: Vec<f64>,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.hermitian.n
    }

    pub fn is_hermitian(&self) -> bool {
        self.absorb.iter().all(|&w| w == 0.0)
    }

    pub fn hermitian_part(&self) -> DiscreteOperator {
        DiscreteOperator {
            cap: None,
            absorb: vec![0.0; self.dim()],
            ..self.clone()
        }
    }

    /// `op - z` as a complex band.
    pub fn shifted_band(&self, z: C64) -> Band {
        let mut b = Band::from_sym(&self.hermitian);
        b.add_diag(|i| C64::new(0.0, -self.absorb[i]) - z);
        b
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = self.hermitian.matvec_c(x);
        for (i, v) in y.iter_mut().enumerate() {
            *v += C64::new(0.0, -self.absorb[i]) * x[i];
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        self.shifted_band(C64::new(0.0, 0.0)).to_dense()
    }

    /// Operator with a diagonal replaced; used to build synthetic operators.
    pub fn from_parts(grid: RadialGrid, hermitian: SymBand) -> Self {
        let n = hermitian.n;
        DiscreteOperator {
            grid,
            bc: BoundaryCondition::Dirichlet,
            hermitian,
            cap: None,
            absorb: vec![0.0; n],
        }
    }
}

/// Band of `-d^2/dr^2` with the boundary condition at `r0` and Dirichlet at
/// `r_max`.
///
/// Dirichlet uses odd reflection through the boundary node. Neumann uses the
/// even mirror `u_0 = u_1` (and `u_{-1} = u_2` for order 4).
pub fn second_difference(grid: &RadialGrid, bc: BoundaryCondition) -> SymBand {
    let n = grid.n;
    let h2 = grid.h * grid.h;
    match grid.stencil_order {
        2 => {
            let mut b = SymBand::zeros(n, 1);
            b.upper[0].iter_mut().for_each(|v| *v = 2.0 / h2);
            b.upper[1].iter_mut().for_each(|v| *v = -1.0 / h2);
            if bc == BoundaryCondition::Neumann {
                b.upper[0][0] = 1.0 / h2;
            }
            b
        }
        _ => {
            let s = 12.0 * h2;
            let mut b = SymBand::zeros(n, 2);
            b.upper[0].iter_mut().for_each(|v| *v = 30.0 / s);
            b.upper[1].iter_mut().for_each(|v| *v = -16.0 / s);
            b.upper[2].iter_mut().for_each(|v| *v = 1.0 / s);
            // Right end: odd reflection u_{N+2} = -u_N.
            b.upper[0][n - 1] = 29.0 / s;
            match bc {
                BoundaryCondition::Dirichlet => b.upper[0][0] = 29.0 / s,
                BoundaryCondition::Neumann => {
                    b.upper[0][0] = 14.0 / s;
                    b.upper[1][0] = -15.0 / s;
                }
            }
            b
        }
    }
}

pub fn discretize(
    spec: &RadialOperatorSpec,
    grid: &RadialGrid,
    cap: Option<CapProfile>,
) -> Result<DiscreteOperator> {
    if (spec.r0 - grid.r0).abs() > 1e-12 * spec.r0.abs().max(1.0) {
        return invalid("operator and grid disagree on r0");
    }
    if let Some(c) = &cap {
        c.validate(grid)?;
    }
    let mut hermitian = second_difference(grid, spec.bc);
    for (i, d) in hermitian.upper[0].iter_mut().enumerate() {
        *d += spec.potential_value(grid.point(i));
    }
    let absorb = match &cap {
        Some(c) => grid.points().iter().map(|&r| c.magnitude(r, grid.r_max)).collect(),
        None => vec![0.0; grid.n],
    };
    Ok(DiscreteOperator {
        grid: *grid,
        bc: spec.bc,
        hermitian,
        cap,
        absorb,
    })
}

/// Solves `(op - z) x = rhs` by banded LU with one refinement step.
pub fn shifted_solve(op: &DiscreteOperator, z: C64, rhs: &[C64]) -> Result<Vec<C64>> {
    let lu = BandLu::factor(&op.shifted_band(z))?;
    lu.solve(rhs)
}
