//! Property tests for invariants that hold independently of any tuned
//! tolerance in the library.

use mtm::cli::Complex;
use mtm::common::{c, velocity, Eigenpair, FieldState, Grid1D, SpectralGrid, C64};
use mtm::evolve::{nonlinear_point, step, step_reverse, EvolveConfig};
use mtm::gamma::{gamma, recip_gamma};
use mtm::io::{field_csv_string, parse_field_csv, scattering_from_json, scattering_to_json};
use mtm::solitons::{one_soliton, soliton_state, SolitonParams};
use mtm::ScatteringData;
use proptest::prelude::*;
use std::f64::consts::PI;

fn complex() -> impl Strategy<Value = C64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| c(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_recurrence(re in 0.1f64..6.0, im in -6.0f64..6.0) {
        let z = c(re, im);
        let lhs = gamma(z + 1.0).unwrap();
        let rhs = z * gamma(z).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1e-300));
    }

    #[test]
    fn gamma_reflection(re in 0.05f64..0.95, im in -3.0f64..3.0) {
        let z = c(re, im);
        let prod = gamma(z).unwrap() * gamma(1.0 - z).unwrap();
        let exact = PI / (z * PI).sin();
        prop_assert!((prod - exact).norm() <= 1e-11 * exact.norm());
    }

    #[test]
    fn gamma_conjugation_and_reciprocal(z in complex()) {
        prop_assume!((z.re - z.re.round()).abs() > 1e-3 || z.re > 0.5);
        let g = gamma(z).unwrap();
        prop_assert!((gamma(z.conj()).unwrap() - g.conj()).norm() <= 1e-13 * g.norm());
        prop_assert!((recip_gamma(z) * g - 1.0).norm() < 1e-12);
    }

    #[test]
    fn soliton_charge_is_four_arg_lambda(rho in 0.3f64..2.5, w in 0.2f64..2.9, cr in -2.0f64..2.0, ci in 0.1f64..2.0) {
        let p = SolitonParams::new(C64::from_polar(rho, w), c(cr, ci)).unwrap();
        // Simpson quadrature on a window wide enough for the exponential tails
        let width = 60.0 / (w.sin() * (rho + 1.0 / rho));
        let n = 40_000;
        let h = 2.0 * width / n as f64;
        let mut q = 0.0;
        for k in 0..=n {
            let x = -width + k as f64 * h;
            let (u, v) = one_soliton(&p, x, 0.0, c(1.0, 0.0));
            let wgt = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            q += wgt * (u.norm_sqr() + v.norm_sqr());
        }
        q *= h / 3.0;
        prop_assert!((q - 4.0 * w).abs() < 1e-6 * 4.0 * w, "q = {q}, 4w = {}", 4.0 * w);
    }

    #[test]
    fn soliton_speed_below_light(lam in (-3.0f64..3.0, 0.01f64..3.0)) {
        let v = velocity(c(lam.0, lam.1));
        prop_assert!(v.abs() < 1.0);
    }

    #[test]
    fn nonlinear_step_keeps_local_charge(u in complex(), v in complex(), h in -0.02f64..0.02) {
        let (a, b) = nonlinear_point(u * 0.2, v * 0.2, h);
        let before = (u * 0.2).norm_sqr() + (v * 0.2).norm_sqr();
        prop_assert!((a.norm_sqr() + b.norm_sqr() - before).abs() < 1e-9);
    }

    #[test]
    fn step_then_reverse_is_near_identity(amp in 0.05f64..0.5, shift in -1.0f64..1.0) {
        let grid = Grid1D::span(-8.0, 8.0, 0.01).unwrap();
        let s0 = FieldState::from_fn(grid, 0.0, |x| {
            let g = (-(x - shift).powi(2)).exp();
            (c(amp * g, 0.0), c(0.0, amp * g))
        });
        let cfg = EvolveConfig::for_grid(0.01, 1.0);
        let back = step_reverse(&step(&s0, &cfg).unwrap(), &cfg).unwrap();
        prop_assert!((back.t - s0.t).abs() < 1e-15);
        let err = (0..grid.n).map(|k| (back.u[k] - s0.u[k]).norm().max((back.v[k] - s0.v[k]).norm())).fold(0.0, f64::max);
        prop_assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn field_csv_roundtrip_is_exact(lam in (0.3f64..2.0, 0.2f64..1.5), x0 in -5.0f64..0.0) {
        let grid = Grid1D::new(x0, 0.037, 101).unwrap();
        let s = soliton_state(&[Eigenpair { lambda: c(lam.0, lam.1), c: c(1.0, 0.5) }], grid, 0.25).unwrap();
        let back = parse_field_csv(&field_csv_string(&s)).unwrap();
        prop_assert_eq!(back.u, s.u);
        prop_assert_eq!(back.v, s.v);
    }

    #[test]
    fn scattering_json_roundtrip_is_exact(amp in 0.0f64..0.9, ph in -PI..PI, lam in (-2.0f64..2.0, 0.1f64..2.0)) {
        let grid = SpectralGrid::log_uniform(1e-2, 1e2, 32).unwrap();
        let r: Vec<C64> = grid.nodes().iter().map(|&l| C64::from_polar(amp / (1.0 + l * l), ph + l)).collect();
        let sd = ScatteringData::new(grid, r, vec![Eigenpair { lambda: c(lam.0, lam.1), c: c(0.7, -0.2) }]).unwrap();
        let back = scattering_from_json(&scattering_to_json(&sd).unwrap()).unwrap();
        prop_assert_eq!(back.r, sd.r);
        prop_assert_eq!(back.eigen[0].lambda, sd.eigen[0].lambda);
        prop_assert_eq!(back.grid.nodes(), sd.grid.nodes());
    }

    #[test]
    fn complex_display_parses_back(z in complex()) {
        let back: Complex = Complex(z).to_string().parse().unwrap();
        prop_assert_eq!(back.0, z);
    }
}
