//! Long-time asymptotics: region classification, the delta function and
//! the leading-order prediction along a ray.
//!
//! `cargo run --release --example asymptotics`

use mtm::asymptotics::{AsymptoticOptions, AsymptoticSolver, DeltaFunction};
use mtm::common::{c, FieldState, Grid1D, ScatteringData, SpectralGrid};
use mtm::harness::gaussian_pair;
use mtm::scatter::{reflection, ScatterOptions};

fn main() -> mtm::Result<()> {
    let s = FieldState::from_fn(Grid1D::span(-15.0, 15.0, 0.01)?, 0.0, |x| gaussian_pair(0.3, 1.0, x));
    let (rd, _) = reflection(&s, &SpectralGrid::log_uniform(1e-4, 1e4, 256)?, &ScatterOptions::default())?;
    let sd = ScatteringData::new(rd.grid.clone(), rd.r.clone(), vec![])?;
    let solver = AsymptoticSolver::new(&sd, AsymptoticOptions::default())?;

    let t = 100.0;
    println!("regions at t = {t}");
    for x in [-120.0, -95.0, -50.0, 0.0, 30.0, 85.0, 99.0, 150.0] {
        let f = solver.classify(x, t)?;
        println!("  x = {x:>6.1}: v = {:>5.2}, {:<9} z0 = {:.4}", f.velocity, f.region.label(), f.z0);
    }

    let d = DeltaFunction::new(&sd, &[], 0.8, 8)?;
    println!(
        "\ndelta on the cut [-0.8, 0.8]: kappa+ = {:.4e}, kappa- = {:.4e}",
        d.kappa_plus(),
        d.kappa_minus()
    );
    for lam in [c(0.3, 0.5), c(-2.0, 1.0), c(1e3, 1.0)] {
        println!("  delta({lam}) = {:.8}", d.delta(lam)?);
    }

    println!("\nleading order along v = 0.3 (t^(1/2)|u| stays bounded and beats between the two stationary points):");
    for t in [50.0, 100.0, 200.0, 400.0, 800.0] {
        let (u, _) = solver.solution(0.3 * t, t)?;
        println!("  t = {t:>4.0}: u = {:>26}, sqrt(t)|u| = {:.5}", format!("{u:.6e}"), t.sqrt() * u.norm());
    }
    Ok(())
}
