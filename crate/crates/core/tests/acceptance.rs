//! Acceptance gate: every criterion prints one PASS/FAIL line and the
//! process fails if any criterion fails.

use mtm::asymptotics::{printed_beta, DeltaFunction};
use mtm::common::{c, Eigenpair, FieldState, Grid1D, ScatteringData, SpectralGrid, C64};
use mtm::evolve::{evolve_to, EvolveConfig};
use mtm::harness::{exp_decay_rates, exp_phase_shift, exp_roundtrip, gaussian_pair, DecayConfig, PhaseShiftConfig, RoundtripConfig};
use mtm::scatter::{reflection, scatter, ScatterOptions, SearchBox};
use mtm::solitons::{one_soliton, reflectionless_reconstruct, soliton_state, SolitonParams};
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;
use std::time::Instant;

struct Gate {
    failed: usize,
}

impl Gate {
    fn check(&mut self, id: u32, name: &str, passed: bool, detail: String) {
        println!("criterion {id:>2} {} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            self.failed += 1;
        }
    }
}

fn lambda_ref() -> C64 {
    C64::from_polar(0.8, PI / 3.0)
}

fn closed_form_equivalence(g: &mut Gate) {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (lam, k) in [(lambda_ref(), c(1.0, 0.0)), (c(0.3, 1.1), c(0.4, -2.0)), (c(-1.4, 0.5), c(3.0, 1.0))] {
        let p = SolitonParams::new(lam, k).unwrap();
        for t in [0.0, 1.0, 5.0] {
            for j in 0..=4000 {
                let x = -20.0 + 0.01 * j as f64;
                let (u, v) = reflectionless_reconstruct(&[Eigenpair { lambda: lam, c: k }], x, t).unwrap();
                let (ue, ve) = one_soliton(&p, x, t, c(1.0, 0.0));
                worst = worst.max((u - ue).norm()).max((v - ve).norm());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    g.check(
        1,
        "closed-form equivalence",
        worst <= 1e-10 && secs < 1.0,
        format!("max diff {worst:.2e} (<= 1e-10), {secs:.2} s (< 1 s)"),
    );
}

fn soliton_pde_error(dx: f64) -> f64 {
    let lam = lambda_ref();
    let sp = [Eigenpair { lambda: lam, c: c(1.0, 0.0) }];
    let p = SolitonParams::new(lam, c(1.0, 0.0)).unwrap();
    let s0 = soliton_state(&sp, Grid1D::span(-25.0, 25.0, dx).unwrap(), 0.0).unwrap();
    let s = evolve_to(&s0, 5.0, &EvolveConfig::for_grid(dx, 5.0)).unwrap();
    (0..s.grid.n)
        .map(|k| {
            let (u, v) = one_soliton(&p, s.grid.x(k), 5.0, c(1.0, 0.0));
            (s.u[k] - u).norm().max((s.v[k] - v).norm())
        })
        .fold(0.0, f64::max)
}

fn pde_fidelity(g: &mut Gate) {
    let start = Instant::now();
    let fine = soliton_pde_error(1e-3);
    let secs = start.elapsed().as_secs_f64();
    let coarse = soliton_pde_error(2e-3);
    let ratio = coarse / fine;
    let ok = fine <= 1e-3 && (3.2..=4.8).contains(&ratio) && secs < 60.0;
    g.check(
        2,
        "PDE fidelity",
        ok,
        format!("L-inf {fine:.2e} at dx 1e-3 (<= 1e-3), halving ratio {ratio:.3} (4 +- 20%), {secs:.1} s (< 60 s)"),
    );
}

fn charge_conservation(g: &mut Gate) {
    let dx = 0.01;
    let grid = Grid1D::span(-40.0, 40.0, dx).unwrap();
    let gauss = FieldState::from_fn(grid, 0.0, |x| gaussian_pair(0.5, 1.0, x));
    let sol = soliton_state(
        &[Eigenpair {
            lambda: lambda_ref(),
            c: c(1.0, 0.0),
        }],
        grid,
        0.0,
    )
    .unwrap();
    let mut worst: f64 = 0.0;
    for s0 in [gauss, sol] {
        let s = evolve_to(&s0, 10.0, &EvolveConfig::for_grid(dx, 10.0)).unwrap();
        worst = worst.max((s.charge() - s0.charge()).abs() / s0.charge());
    }
    g.check(3, "charge conservation", worst <= 1e-10, format!("relative drift {worst:.2e} (<= 1e-10)"));
}

fn soliton_scattering(g: &mut Gate) {
    let start = Instant::now();
    let lam = lambda_ref();
    let s = soliton_state(&[Eigenpair { lambda: lam, c: c(1.0, 0.0) }], Grid1D::span(-30.0, 30.0, 0.01).unwrap(), 0.0).unwrap();
    let grid = SpectralGrid::log_uniform(1e-3, 1e3, 256).unwrap();
    let bx = SearchBox {
        re_min: -2.0,
        re_max: 2.0,
        im_min: 0.05,
        im_max: 2.0,
    };
    let (sd, _) = scatter(&s, &grid, &[bx], &ScatterOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let r = sd.max_abs_r();
    let (le, ce) = match sd.eigen.as_slice() {
        [e] => ((e.lambda - lam).norm(), (e.c - 1.0).norm()),
        _ => (f64::INFINITY, f64::INFINITY),
    };
    let ok = r <= 1e-3 && le <= 1e-4 && ce <= 1e-2 && secs < 30.0;
    g.check(
        4,
        "one-soliton scattering",
        ok,
        format!("max|r| {r:.2e} (<= 1e-3), eigenvalue err {le:.2e} (<= 1e-4), norming rel err {ce:.2e} (<= 1e-2), {secs:.1} s (< 30 s)"),
    );
}

fn unitarity_and_limits(g: &mut Gate) {
    let s = FieldState::from_fn(Grid1D::span(-15.0, 15.0, 0.01).unwrap(), 0.0, |x| {
        (c(0.3 * (-x * x).exp(), 0.1 * x * (-x * x).exp()), c(0.0, 0.2 * (-(x - 0.5).powi(2)).exp()))
    });
    let grid = SpectralGrid::log_uniform(1e-6, 1e6, 256).unwrap();
    let (_, d) = reflection(&s, &grid, &ScatterOptions::default()).unwrap();
    let (u, l) = (d.max_unitarity(), d.limit_product_residual());
    g.check(
        5,
        "unitarity and limits",
        u <= 1e-6 && l <= 1e-6,
        format!("max | |a|^2(1+l|r|^2) - 1 | {u:.2e} (<= 1e-6), |a0 a_inf - 1| {l:.2e} (<= 1e-6)"),
    );
}

fn inverse_roundtrip(g: &mut Gate) {
    let start = Instant::now();
    let r = exp_roundtrip(&RoundtripConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let e = r.series("rel_l2").map(|row| row.observed).collect::<Vec<_>>();
    let ok = r.passed && secs < 300.0;
    g.check(
        6,
        "inverse roundtrip",
        ok,
        format!(
            "rel L2 {:.2e} at 512 (<= 1e-2), {:.2e} at 1024, ratio {:.1} (>= 1.5), {secs:.0} s (< 300 s)",
            e[0],
            e[1],
            e[0] / e[1]
        ),
    );
}

fn decay_and_gap(g: &mut Gate) {
    let r = exp_decay_rates(&DecayConfig::default()).unwrap();
    let v = |n: &str| r.verdict_named(n).unwrap().clone();
    let (vi, ve, vg) = (v("interior_slope"), v("exterior_slope"), v("scaled_gap_max_ratio"));
    let hw = r.fit("interior").unwrap().half_width;
    g.check(
        7,
        "decay laws",
        vi.passed && ve.passed,
        format!(
            "interior slope {:.4} +- {hw:.3} (-0.50 +- 0.05), exterior slope {:.2} (<= -0.9)",
            vi.value, ve.value
        ),
    );
    let doubling: Vec<(f64, f64)> = r.series("interior_gap").step_by(2).map(|row| (row.t, row.observed)).collect();
    let bounded = doubling.iter().all(|p| p.1.is_finite() && p.1 < 1.0);
    let text: Vec<String> = doubling.iter().map(|(t, s)| format!("t={t}: {s:.2e}")).collect();
    g.check(
        8,
        "asymptotics vs PDE",
        vg.passed && bounded,
        format!("t^(3/4) rms gap {} (non-increasing)", text.join(", ")),
    );
    if let Some(nc) = r.verdict_named("near_cone_exponent") {
        println!("info: near-cone envelope exponent {:.3} (reported only; target range (1/2, 1])", nc.value);
    }
}

fn parabolic_cylinder_identity(g: &mut Gate) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20240607);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let r0 = C64::from_polar(rng.gen_range(0.0..2.0), rng.gen_range(-PI..PI));
        let z0: f64 = rng.gen_range(0.01..3.0);
        let kappa = (z0 * r0.norm_sqr()).ln_1p() / (2.0 * PI);
        let (b12, b21) = printed_beta(r0, kappa).unwrap();
        let lhs = b12.norm_sqr() * (1.0 + z0 * r0.norm_sqr());
        worst = worst.max((lhs - kappa * z0).abs()).max((b21 * b12 - kappa).norm());
    }
    g.check(
        9,
        "parabolic-cylinder identity",
        worst <= 1e-10,
        format!("max residual {worst:.2e} over 100 seeded pairs (<= 1e-10)"),
    );
}

fn phase_shift(g: &mut Gate) {
    let r = exp_phase_shift(&PhaseShiftConfig::default()).unwrap();
    let v = r.verdict_named("fastest_shift_rel_error").unwrap();
    g.check(10, "two-soliton phase shift", r.passed, format!("relative error {:.2e} (<= 2e-2)", v.value));
}

fn delta_correctness(g: &mut Gate) {
    let s = FieldState::from_fn(Grid1D::span(-15.0, 15.0, 0.01).unwrap(), 0.0, |x| gaussian_pair(0.3, 1.0, x));
    let (sd, _) = reflection(&s, &SpectralGrid::log_uniform(1e-4, 1e4, 256).unwrap(), &ScatterOptions::default()).unwrap();
    let sd = ScatteringData::new(sd.grid.clone(), sd.r.clone(), vec![]).unwrap();
    let z0 = 0.8;
    let d = DeltaFunction::new(&sd, &[], z0, 8).unwrap();
    let mut jump: f64 = 0.0;
    for k in 0..20 {
        let x = -z0 + 2.0 * z0 * (k as f64 + 0.5) / 20.0;
        let ratio = d.delta(c(x, 1e-9)).unwrap() / d.delta(c(x, -1e-9)).unwrap();
        jump = jump.max((ratio - (1.0 + x * sd.r_at(x).norm_sqr())).norm());
    }
    let far = (0..16)
        .map(|k| (d.delta(C64::from_polar(1e3, PI * (k as f64 + 0.5) / 8.0)).unwrap() - 1.0).norm())
        .fold(0.0, f64::max);
    g.check(
        11,
        "delta correctness",
        jump <= 1e-4 && far <= 1e-6,
        format!("jump residual {jump:.2e} (<= 1e-4), |delta - 1| at |l| = 1e3 {far:.2e} (<= 1e-6)"),
    );
}

fn main() {
    let mut g = Gate { failed: 0 };
    closed_form_equivalence(&mut g);
    pde_fidelity(&mut g);
    charge_conservation(&mut g);
    soliton_scattering(&mut g);
    unitarity_and_limits(&mut g);
    inverse_roundtrip(&mut g);
    decay_and_gap(&mut g);
    parabolic_cylinder_identity(&mut g);
    phase_shift(&mut g);
    delta_correctness(&mut g);
    if g.failed > 0 {
        println!("acceptance: {} criteria failed", g.failed);
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
