//! Frozen reference values computed independently (30-digit Taylor ODE
//! integration and adaptive quadrature in mpmath).

use std::f64::consts::PI;

use stochill_core::cycle::sin2_two_j1_minus_one;
use stochill_core::model::DEFAULT_INTEGRATOR_TOL;
use stochill_core::random::growth_small_q;
use stochill_core::xfer::{growth_product, GrowthOptions};
use stochill_core::{integrate_cycle, BarrierShape, HillParams, TransferMatrix};

/// (λ, q, shape, y₁(π), ẏ₁(π), y₂(π))
const CYCLES: [(f64, f64, BarrierShape, f64, f64, f64); 4] = [
    (0.5, 0.5, BarrierShape::Sin2, -0.84040471125407116, -0.56007422445319143, 0.52443034954648072),
    (2.0, 1.0, BarrierShape::Sin2, 0.061067000269167163, 1.3553322508707981, -0.73507497577662129),
    (0.5, 0.5, BarrierShape::Sin4, -0.8485158748313127, -0.59339494217888484, 0.47189618625842112),
    (5.0, -0.7, BarrierShape::Sin4, 0.83623143314165013, -1.1803827114715828, 0.25476227947371251),
];

#[test]
fn principal_solutions_match_high_precision_integration() {
    for (lambda, q, shape, h, g, y2) in CYCLES {
        let c = integrate_cycle(&HillParams::new(lambda, q).unwrap(), &shape, DEFAULT_INTEGRATOR_TOL).unwrap();
        assert!((c.h - h).abs() < 1e-9, "h at λ={lambda}, q={q}: {} vs {h}", c.h);
        assert!((c.g - g).abs() < 1e-9, "g at λ={lambda}, q={q}: {} vs {g}", c.g);
        assert!((c.y2pi - y2).abs() < 1e-9, "y2 at λ={lambda}, q={q}: {} vs {y2}", c.y2pi);
    }
}

#[test]
fn small_q_growth_matches_quadrature() {
    let cases = [
        (0.5, 3e-4, BarrierShape::Sin2, 3.848880631111232e-5),
        (0.5, 1.0, BarrierShape::Sin2, 0.1207107369083053),
        (3.0, 1.0, BarrierShape::Sin4, 0.0031263242598488567),
        (7.3, 0.2, BarrierShape::Sin4, 1.141899655168852e-6),
    ];
    for (lambda, mq2, shape, want) in cases {
        let got = growth_small_q(lambda, mq2, &shape);
        assert!((got / want - 1.0).abs() < 1e-9, "λ={lambda}: {got} vs {want}");
    }
}

#[test]
fn uniform_amplitude_sweep_matches_quadrature() {
    let cases = [
        (0.001, 4.2766162435217493e-8),
        (0.005, 1.0691535121974258e-6),
        (0.02, 1.7106319025966327e-5),
        (0.05, 0.00010690969332929795),
    ];
    for (a, want) in cases {
        let got = growth_small_q(0.5, a * a / 3.0, &BarrierShape::Sin2);
        assert!((got - want).abs() < 1e-10 * want.max(1e-300) + 1e-18, "A_q={a}: {got} vs {want}");
    }
}

#[test]
fn sin2_cosine_moment_has_a_removable_limit_at_one() {
    assert!((sin2_two_j1_minus_one(1.0) + 0.5).abs() < 1e-15);
    for lambda in [1.0 - 1e-9, 1.0 + 1e-9] {
        assert!((sin2_two_j1_minus_one(lambda) + 0.5).abs() < 1e-8);
    }
}

#[test]
fn delta_barrier_is_exact() {
    for (lambda, q) in [(0.5, 0.3), (3.7, -1.2), (12.0, 2.0)] {
        let c = integrate_cycle(&HillParams::new(lambda, q).unwrap(), &BarrierShape::DeltaMidpoint, 1e-12).unwrap();
        let s: f64 = lambda.sqrt();
        let phi = PI * s;
        let h = phi.cos() - q / (2.0 * s) * phi.sin();
        assert!((c.h - h).abs() < 1e-12, "{} vs {h}", c.h);
        assert!((c.j1 - (phi / 2.0).cos().powi(2)).abs() < 1e-12);
    }
}

#[test]
fn hyperbolic_constant_product_grows_at_the_log_eigenvalue() {
    let m = TransferMatrix::new(2.0, 3.0, 1.0, 2.0);
    let mut src = |_k: u64| Ok(m);
    let g = growth_product(&mut src, 100_000, 1, &GrowthOptions::default()).unwrap();
    assert!((g.gamma - (2.0 + 3f64.sqrt()).ln()).abs() < 1e-6, "{}", g.gamma);
}
