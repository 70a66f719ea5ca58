//! Smooth transition profiles: the canonical step `q`, the weight `w`, the
//! cutoffs `chi`, `xi` and the spectral window `f`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::jet::Jet;

/// Maximum derivative order exposed by [`profile_eval`].
pub const MAX_PROFILE_DERIVATIVE: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    W,
    Chi,
    Xi,
    /// Window equal to 1 on `[-2, 2]`, supported in `[-3, 3]`.
    Window,
}

/// Canonical smooth step on a jet argument.
///
/// `q(x) = e^{-1/x} / (e^{-1/x} + e^{-1/(1-x)})` on `(0, 1)`, 0 below, 1 above.
pub fn q_jet(x: Jet) -> Jet {
    let x0 = x.value();
    if x0 <= 0.0 {
        return Jet::constant(0.0);
    }
    if x0 >= 1.0 {
        return Jet::constant(1.0);
    }
    // q = 1 / (1 + e^g) with g = 1/x - 1/(1-x), written in the overflow-safe
    // logistic form on each side of x = 1/2.
    let one = Jet::constant(1.0);
    let g = x.recip() - (one - x).recip();
    if g.value() > 700.0 {
        return Jet::constant(0.0);
    }
    if g.value() < -700.0 {
        return Jet::constant(1.0);
    }
    if g.value() >= 0.0 {
        let e = (-g).exp();
        e.div(one + e)
    } else {
        one.div(one + g.exp())
    }
}

pub fn q(x: f64) -> f64 {
    q_jet(Jet::constant(x)).value()
}

/// `w(x) = 1 + q(x)(x - 1)`: 1 for `x <= 0`, `x` for `x >= 1`.
pub fn w_jet(x: Jet) -> Jet {
    Jet::constant(1.0) + q_jet(x) * x.offset(-1.0)
}

/// `chi(r) = q(r - 1)^2`.
pub fn chi_jet(r: Jet) -> Jet {
    q_jet(r.offset(-1.0)).square()
}

/// `chi^{1/2}(r) = q(r - 1)`.
pub fn chi_sqrt_jet(r: Jet) -> Jet {
    q_jet(r.offset(-1.0))
}

/// `xi(r) = q(2(r + 1))^2`.
pub fn xi_jet(r: Jet) -> Jet {
    q_jet(r.offset(1.0).scale(2.0)).square()
}

/// `xi^{1/2}(r) = q(2(r + 1))`.
pub fn xi_sqrt_jet(r: Jet) -> Jet {
    q_jet(r.offset(1.0).scale(2.0))
}

/// `f(x) = q(x + 3) q(3 - x)`.
pub fn window_jet(x: Jet) -> Jet {
    q_jet(x.offset(3.0)) * q_jet((-x).offset(3.0))
}

pub fn profile_jet(which: Profile, x: Jet) -> Jet {
    match which {
        Profile::W => w_jet(x),
        Profile::Chi => chi_jet(x),
        Profile::Xi => xi_jet(x),
        Profile::Window => window_jet(x),
    }
}

/// `j`-th derivative of a profile at `x`, `j <= 6`.
pub fn profile_eval(which: Profile, x: f64, j: usize) -> Result<f64> {
    if j > MAX_PROFILE_DERIVATIVE {
        return invalid(format!(
            "profile derivative order {j} exceeds {MAX_PROFILE_DERIVATIVE}"
        ));
    }
    Ok(profile_jet(which, Jet::variable(x)).derivative(j))
}

pub fn w(x: f64) -> f64 {
    w_jet(Jet::constant(x)).value()
}

pub fn chi(r: f64) -> f64 {
    chi_jet(Jet::constant(r)).value()
}

pub fn xi(r: f64) -> f64 {
    xi_jet(Jet::constant(r)).value()
}

pub fn window(x: f64) -> f64 {
    window_jet(Jet::constant(x)).value()
}

/// `<x> = (1 + x^2)^{1/2}`.
pub fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}
