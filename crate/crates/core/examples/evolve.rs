//! Time stepping of a soliton and of Gaussian data, with charge bookkeeping.
//!
//! `cargo run --example evolve`

use mtm::common::{c, Eigenpair, FieldState, Grid1D};
use mtm::evolve::{evolve_visit, EvolveConfig};
use mtm::harness::gaussian_pair;
use mtm::solitons::{one_soliton, soliton_state, SolitonParams};

fn main() -> mtm::Result<()> {
    let dx = 0.005;
    let grid = Grid1D::span(-30.0, 30.0, dx)?;
    let lam = c(0.6, 0.7);
    let p = SolitonParams::new(lam, c(1.0, 0.0))?;
    let s0 = soliton_state(&[Eigenpair { lambda: lam, c: c(1.0, 0.0) }], grid, 0.0)?;
    let q0 = s0.charge();
    println!("soliton, dx = {dx}, velocity {:.4}", p.velocity());
    println!("{:>5} {:>12} {:>12}", "t", "max error", "charge drift");
    evolve_visit(&s0, &[2.0, 4.0, 6.0, 8.0], &EvolveConfig::for_grid(dx, 8.0), |s| {
        let err = (0..s.grid.n)
            .map(|k| (s.u[k] - one_soliton(&p, s.grid.x(k), s.t, c(1.0, 0.0)).0).norm())
            .fold(0.0, f64::max);
        println!("{:>5.1} {err:>12.3e} {:>12.3e}", s.t, (s.charge() - q0).abs() / q0);
        Ok(())
    })?;

    let g0 = FieldState::from_fn(Grid1D::span(-60.0, 60.0, 0.01)?, 0.0, |x| gaussian_pair(0.3, 1.0, x));
    println!("\nGaussian data, amplitude 0.3: sup|u| dispersing");
    evolve_visit(&g0, &[5.0, 10.0, 20.0, 40.0], &EvolveConfig::for_grid(0.01, 40.0), |s| {
        let sup = s.u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        println!("t = {:>4.0}: sup|u| = {sup:.4e}, sqrt(t) sup|u| = {:.4}", s.t, s.t.sqrt() * sup);
        Ok(())
    })?;
    Ok(())
}
