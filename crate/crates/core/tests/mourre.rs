use hyperlab::conjugate::{a_k_eval, generator_matrix, ConjugateParams, Generator};
use hyperlab::jet::Jet;
use hyperlab::linops::{discretize, RadialGrid, SymBand};
use hyperlab::model::{
    build_spectrum, mode_operator_spec, BoundaryCondition, Coupling, CrossSection, DiagonalPotential,
    ModelConfig, PotentialProfile, RadialOperatorSpec,
};
use hyperlab::mourre::*;
use hyperlab::profiles::window_jet;
use hyperlab::quad::gauss_legendre;
use hyperlab::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params() -> ConjugateParams {
    ConjugateParams::from_lambda(100.0, 1.0).unwrap()
}

fn radial(mu: f64) -> RadialOperatorSpec {
    RadialOperatorSpec {
        k: 0,
        mu,
        shift: 0.25,
        potential: None,
        r0: 1.0,
        bc: BoundaryCondition::Dirichlet,
    }
}

fn circle() -> ModelConfig {
    ModelConfig::new(2, 1.0, CrossSection::Circle { radius: 1.0 })
}

fn gaussian(grid: &RadialGrid, c: f64, w: f64) -> Vec<C64> {
    grid.points()
        .iter()
        .map(|&r| C64::new((-((r - c) / w).powi(2)).exp(), 0.0))
        .collect()
}

fn l2(grid: &RadialGrid, v: &[C64]) -> f64 {
    (grid.h * v.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt()
}

fn sym_apply(b: &SymBand, x: &[C64]) -> Vec<C64> {
    b.matvec_c(x)
}

/// `[H, A] x` from the matrices.
fn matrix_commutator(h: &SymBand, a: &Generator, x: &[C64]) -> Vec<C64> {
    let hax = sym_apply(h, &a.apply(x));
    let ahx = a.apply(&sym_apply(h, x));
    hax.iter().zip(&ahx).map(|(p, q)| p - q).collect()
}

fn single_defect(h: f64, mu: f64) -> f64 {
    let grid = RadialGrid::with_spacing(1.0, 30.0, h, 2).unwrap();
    let spec = radial(mu);
    let hop = discretize(&spec, &grid, None).unwrap();
    let a = generator_matrix(&params(), spec.nu(), &grid);
    let c = commutator_matrix(&params(), &spec, &grid).unwrap();
    let phi = gaussian(&grid, 10.0, 1.0);
    let i = C64::new(0.0, 1.0);
    let oracle: Vec<C64> = matrix_commutator(&hop.hermitian, &a, &phi).iter().map(|v| v * i).collect();
    let built = sym_apply(&c, &phi);
    let d: Vec<C64> = oracle.iter().zip(&built).map(|(p, q)| p - q).collect();
    l2(&grid, &d) / l2(&grid, &built)
}

fn double_defect(h: f64, mu: f64) -> f64 {
    let grid = RadialGrid::with_spacing(1.0, 30.0, h, 2).unwrap();
    let spec = radial(mu);
    let hop = discretize(&spec, &grid, None).unwrap();
    let a = generator_matrix(&params(), spec.nu(), &grid);
    let dd = double_commutator_matrix(&params(), &spec, &grid).unwrap();
    let phi = gaussian(&grid, 10.0, 1.0);
    let outer = matrix_commutator(&hop.hermitian, &a, &a.apply(&phi));
    let inner = a.apply(&matrix_commutator(&hop.hermitian, &a, &phi));
    let oracle: Vec<C64> = outer.iter().zip(&inner).map(|(p, q)| p - q).collect();
    let built = sym_apply(&dd, &phi);
    let d: Vec<C64> = oracle.iter().zip(&built).map(|(p, q)| p - q).collect();
    l2(&grid, &d) / l2(&grid, &built)
}

#[test]
fn commutator_matches_matrix_oracle() {
    for mu in [0.0, 4.0, 1e4] {
        let e: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&h| single_defect(h, mu)).collect();
        eprintln!("mu = {mu}: i[H,A] defects {e:?}");
        for p in e.windows(2) {
            assert!(((p[0] / p[1]).log2() - 2.0).abs() <= 0.3, "{e:?}");
        }
    }
}

#[test]
fn double_commutator_matches_nested_oracle() {
    for mu in [0.0, 4.0, 1e4] {
        let e: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&h| double_defect(h, mu)).collect();
        eprintln!("mu = {mu}: [[H,A],A] defects {e:?}");
        for p in e.windows(2) {
            assert!(((p[0] / p[1]).log2() - 2.0).abs() <= 0.3, "{e:?}");
        }
    }
}

#[test]
fn matrix_commutator_is_hermitian() {
    let grid = RadialGrid::with_spacing(1.0, 20.0, 0.02, 2).unwrap();
    let spec = radial(4.0);
    let h = discretize(&spec, &grid, None).unwrap().hermitian.to_dense().map(|v| C64::new(v, 0.0));
    let a = generator_matrix(&params(), spec.nu(), &grid).to_dense();
    let c = (&h * &a - &a * &h) * C64::new(0.0, 1.0);
    let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!((&c - c.adjoint()).iter().all(|v| v.norm() <= 1e-12 * scale));
    let cc = &c * &a - &a * &c;
    let scale = cc.iter().map(|v| v.norm()).fold(0.0, f64::max);
    // [[H, A], A] = -i [i[H, A], A] is Hermitian.
    let dd = cc * C64::new(0.0, -1.0);
    assert!((&dd - dd.adjoint()).iter().all(|v| v.norm() <= 1e-12 * scale));
}

#[test]
fn plateau_closed_forms() {
    let p = params();
    let mu = 9.0;
    let spec = radial(mu);
    let grid = RadialGrid::with_spacing(1.0, 30.0, 0.01, 2).unwrap();
    let co = commutator_coefficients(&p, &spec, &grid);
    let c = commutator_matrix(&p, &spec, &grid).unwrap();
    let h2 = grid.h * grid.h;
    let mut checked = 0;
    for (i, r) in grid.points().into_iter().enumerate() {
        if r < 2.0 * p.r_big + 0.01 || r > 29.0 {
            continue;
        }
        checked += 1;
        let a = a_k_eval(&p, spec.nu(), r, 0).unwrap();
        let e = mu * (-2.0 * r).exp();
        assert!((co.b[i] + 4.0).abs() < 1e-10);
        assert!(co.c_imag[i].abs() < 1e-10);
        let d = 2.0 * a * e * (1.0 - 2.0 * a);
        assert!((co.d[i] - d).abs() <= 1e-10 * d.abs().max(1e-30), "{} vs {d}", co.d[i]);
        assert!((c.get(i, i) - (4.0 / h2 + 2.0 * a * e)).abs() <= 1e-10 / h2);
        assert!((c.get(i, i + 1) + 2.0 / h2).abs() <= 1e-10 / h2);
    }
    assert!(checked > 1000);
}

#[test]
fn expanded_form_second_order_relative_to_h() {
    let spec = radial(4.0);
    let e: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| {
            let grid = RadialGrid::with_spacing(1.0, 30.0, h, 2).unwrap();
            expanded_form_deviation(&params(), &spec, &grid).unwrap()
        })
        .collect();
    eprintln!("||(C_div - C_exp)(H + i)^-1|| = {e:?}");
    for p in e.windows(2) {
        assert!(((p[0] / p[1]).log2() - 2.0).abs() <= 0.3, "{e:?}");
    }
}

#[test]
fn xi_examples() {
    let p = params();
    let grid = RadialGrid::with_spacing(1.0, 40.0, 0.01, 2).unwrap();
    for nu in [1.0, 100.0, 1e6] {
        let l: f64 = f64::ln(nu);
        let x = xi_build(&p, nu, &grid);
        for (i, r) in grid.points().into_iter().enumerate() {
            assert!((x.xi[i] + x.xi_tilde[i] - x.chi_sqrt[i]).abs() <= 1e-15);
            if r <= p.r_big {
                assert_eq!((x.xi[i], x.xi_tilde[i], x.xi_d1[i], x.xi_d2[i]), (0.0, 0.0, 0.0, 0.0));
            }
            if r - l >= -p.s_big / 2.0 && r >= 2.0 * p.r_big {
                assert_eq!((x.xi[i], x.xi_tilde[i]), (0.0, 1.0));
            }
        }
    }
}

#[test]
fn xi_derivatives_match_differences() {
    let p = params();
    let grid = RadialGrid::with_spacing(1.0, 40.0, 1e-3, 2).unwrap();
    let x = xi_build(&p, 1e6, &grid);
    let h = grid.h;
    for i in (1..grid.n - 1).step_by(97) {
        let d1 = (x.xi[i + 1] - x.xi[i - 1]) / (2.0 * h);
        let d2 = (x.xi[i + 1] - 2.0 * x.xi[i] + x.xi[i - 1]) / (h * h);
        assert!((d1 - x.xi_d1[i]).abs() < 1e-4);
        assert!((d2 - x.xi_d2[i]).abs() < 1e-3);
    }
}

#[test]
fn semiclassical_bound_holds() {
    let p = params();
    let grid = RadialGrid::with_spacing(1.0, 30.0, 0.01, 2).unwrap();
    let mut specs: Vec<RadialOperatorSpec> = [0.0, 1.0, 1e8, 1e9, 1e10, 1e12]
        .iter()
        .map(|&mu| radial(mu))
        .collect();
    specs.iter_mut().enumerate().for_each(|(k, s)| s.k = k);
    for z in [C64::new(0.0, 1.0), C64::new(2.0, 1.0), C64::new(-1.0, 0.5)] {
        let xp = XiParams::new(p, 0.01, z).unwrap();
        let rep = semiclassical_bound_check(&xp, 100.0, &specs, &grid).unwrap();
        eprintln!("z = {z}: lhs {} rhs {} per mode {:?}", rep.lhs, rep.rhs, rep.per_mode);
        assert!(rep.pass);
        assert_eq!(rep.per_mode[0].1, 0.0);
        assert_eq!(rep.per_mode[1].1, 0.0);
        assert!(rep.per_mode[4].1 > 0.0);
    }
    let bad = XiParams::new(p, 0.01, C64::new(4.0, 1.0)).unwrap();
    assert!(semiclassical_bound_check(&bad, 100.0, &specs, &grid).is_err());
}

/// `exp(1 - 1/(1 - x^2/2))` on `|x| < sqrt 2`: 1 at 0 and `1/e` at 1.
fn bump(x: Jet) -> Jet {
    if x.value().abs() >= 2f64.sqrt() {
        return Jet::constant(0.0);
    }
    (Jet::constant(1.0) - (Jet::constant(1.0) - x.square().scale(0.5)).recip()).exp()
}

const BUMP_SUPPORT: (f64, f64) = (-std::f64::consts::SQRT_2, std::f64::consts::SQRT_2);

fn zero(_: Jet) -> Jet {
    Jet::constant(0.0)
}

#[test]
fn hs_diagonal_examples() {
    let f = SmoothProfile {
        jet: &bump,
        support: BUMP_SUPPORT,
    };
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]));
    let r = hs_calculus_dense(&f, &m, HsOptions::default()).unwrap();
    assert!((r.matrix[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-6, "{}", r.matrix);
    assert!((r.matrix[(1, 1)] - C64::new((-1f64).exp(), 0.0)).norm() < 1e-6);
    assert!(r.matrix[(0, 1)].norm() < 1e-6);
    let z = SmoothProfile {
        jet: &zero,
        support: (-3.0, 3.0),
    };
    let r = hs_calculus_dense(&z, &m, HsOptions::default()).unwrap();
    assert!(r.matrix.iter().all(|v| v.norm() == 0.0));
}

fn random_hermitian(n: usize, seed: u64, spread: f64) -> DMatrix<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<C64>::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let scale = h.clone().symmetric_eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    h * C64::new(spread / scale, 0.0)
}

fn op_norm(m: &DMatrix<C64>) -> f64 {
    m.clone().singular_values().max()
}

#[test]
fn tridiagonalization_reconstructs() {
    let m = random_hermitian(30, 3, 2.0);
    let (q, t) = tridiagonalize(&m).unwrap();
    let tc = t.to_dense().map(|v| C64::new(v, 0.0));
    assert!(op_norm(&(&q * tc * q.adjoint() - &m)) < 1e-12);
    assert!(op_norm(&(q.adjoint() * &q - DMatrix::identity(30, 30))) < 1e-12);
    assert!(t.upper[1].iter().all(|&e| e >= 0.0));
}

#[test]
fn eigen_oracle_reconstructs() {
    let m = random_hermitian(30, 4, 2.0);
    let back = spectral_calculus_dense(|e| e, &m).unwrap();
    assert!(op_norm(&(back - &m)) < 1e-12);
}

#[test]
fn hs_matches_spectral_calculus_random() {
    let f = SmoothProfile {
        jet: &bump,
        support: BUMP_SUPPORT,
    };
    for seed in [1u64] {
        let m = random_hermitian(50, seed, 1.6);
        let hs = hs_calculus_dense(&f, &m, HsOptions::default()).unwrap();
        let oracle = spectral_calculus_dense(|e| f.value(e), &m).unwrap();
        let err = op_norm(&(&hs.matrix - &oracle));
        eprintln!("seed {seed}: ||HS - eig|| = {err:.3e}, refinements {}, nodes {}", hs.refinements, hs.nodes);
        assert!(err <= 1e-6);
    }
}

#[test]
fn hs_on_radial_operator() {
    let grid = RadialGrid::new(1.0, 11.0, 40, 2).unwrap();
    let op = discretize(&radial(4.0), &grid, None).unwrap();
    let f = SmoothProfile {
        jet: &window_jet,
        support: (-3.0, 3.0),
    };
    let (lambda, tau) = (20.0, 0.2);
    let hs = hs_calculus(&f, &op, lambda, tau, HsOptions::default()).unwrap();
    let dense = op.hermitian.to_dense().map(|v| C64::new(v, 0.0));
    let oracle = spectral_calculus_dense(|e| f.value(tau * (e - lambda)), &dense).unwrap();
    assert!(op_norm(&(&hs.matrix - &oracle)) <= 1e-6);
}

#[test]
fn positivity_at_lambda_100() {
    let start = std::time::Instant::now();
    let rep = mourre_auto_calibrate(&circle(), &PositivityConfig::new(100.0), 0.1, 4).unwrap();
    eprintln!(
        "lambda 100: ratio {} C {} delta {} nonempty {} excluded {} deficits {:?} in {:?}",
        rep.min_eig_ratio,
        rep.c_const,
        rep.delta_lambda,
        rep.nonempty_modes,
        rep.excluded_total,
        rep.deficits,
        start.elapsed()
    );
    assert!(rep.min_eig_ratio >= -0.1);
    let d = &rep.deficits;
    for v in [d.r_inverse, d.chi_r_minus_one, d.one_minus_xi_tilde_sq, d.s_inverse, d.lambda_inverse] {
        assert!(v.is_finite() && v < 0.3 * rep.lambda);
    }
    assert!(!d.compact_part_included);
    assert!(rep.per_mode.iter().any(|m| m.min_eig.is_none()));
    let json = serde_json::to_value(&rep).unwrap();
    for key in ["lambda", "C", "delta_lambda", "per_mode", "deficits"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn positivity_rejects_bad_scales() {
    let model = ModelConfig::new(2, 10.0, CrossSection::Circle { radius: 1.0 });
    assert!(mourre_positivity_check(&model, &PositivityConfig::new(100.0)).is_err());
}

#[test]
fn perturbation_scaling() {
    let cfg = circle();
    let spectrum = build_spectrum(&cfg.cross_section, 2).unwrap();
    let mut spec = mode_operator_spec(&cfg, &spectrum, 1).unwrap();
    spec.potential = Some(DiagonalPotential {
        profile: PotentialProfile::Lorentzian {
            a0: 1.0,
            center: 0.0,
            width: 1.0,
        },
        coupling: Coupling::Scalar,
    });
    let grid = RadialGrid::with_spacing(1.0, 45.0, 0.01, 2).unwrap();
    let rows: Vec<_> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&l| perturbation_norms(&ConjugateParams::from_lambda(l, 1.0).unwrap(), &spec, &grid).unwrap())
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.r_big.ln()).collect();
    for j in 0..2 {
        let ys: Vec<f64> = rows.iter().map(|r| r.first[j].ln()).collect();
        let (slope, _) = hyperlab::weights::linear_fit(&xs, &ys);
        eprintln!("j = {j}: norms {:?}, fitted exponent {slope:.3} (bound exponent {})", rows.iter().map(|r| r.first[j]).collect::<Vec<_>>(), j as f64 - 1.0);
        assert!(slope <= j as f64 - 1.0 + 0.2);
    }
    let second: Vec<f64> = rows.iter().map(|r| r.second).collect();
    eprintln!("[A,[A,V]] norms {second:?}");
    let ys: Vec<f64> = second.iter().map(|s| s.ln()).collect();
    let (slope, _) = hyperlab::weights::linear_fit(&xs, &ys);
    assert!(second.iter().all(|s| s.is_finite()) && slope <= 0.2, "slope {slope}");
}

#[test]
fn quadrature_nodes_symmetric() {
    let (x, w) = gauss_legendre(8);
    for i in 0..8 {
        assert!((x[i] + x[7 - i]).abs() < 1e-15 && (w[i] - w[7 - i]).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn xi_partition(r in 1.0f64..60.0, mu in 0.0f64..1e12, lam in 100.0f64..1e4) {
        let p = ConjugateParams::from_lambda(lam, 1.0).unwrap();
        let grid = RadialGrid::new(r, r + 1.0, 8, 2).unwrap();
        let x = xi_build(&p, (1.0 + mu).sqrt(), &grid);
        for i in 0..8 {
            prop_assert!((x.xi[i] + x.xi_tilde[i] - x.chi_sqrt[i]).abs() <= 1e-15);
            prop_assert!(x.xi[i] >= 0.0 && x.xi_tilde[i] >= 0.0);
        }
    }

    #[test]
    fn spectral_cutoff_in_unit_interval(e in -20.0f64..20.0, lam in -5.0f64..5.0, d in 0.1f64..3.0) {
        let c = SpectralCutoff::new(lam, d).unwrap();
        let f = c.eval(e);
        prop_assert!((0.0..=1.0).contains(&f));
        let x = (e - lam) / d;
        if x.abs() <= 2.0 { prop_assert_eq!(f, 1.0); }
        if x.abs() >= 3.0 { prop_assert_eq!(f, 0.0); }
    }
}
