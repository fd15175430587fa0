//! Direct scattering: reflection coefficient, eigenvalue search and the
//! unitarity check.
//!
//! `cargo run --example scatter`

use mtm::common::{c, Eigenpair, FieldState, Grid1D, SpectralGrid};
use mtm::harness::gaussian_pair;
use mtm::scatter::{reflection, scatter, ScatterOptions, SearchBox};
use mtm::solitons::soliton_state;

fn main() -> mtm::Result<()> {
    let grid = Grid1D::span(-25.0, 25.0, 0.01)?;
    let lam = c(0.6, 0.9);
    let sol = soliton_state(&[Eigenpair { lambda: lam, c: c(1.0, -0.5) }], grid, 0.0)?;
    let spec = SpectralGrid::log_uniform(1e-3, 1e3, 128)?;
    let bx = SearchBox {
        re_min: -2.0,
        re_max: 2.0,
        im_min: 0.05,
        im_max: 2.0,
    };
    let (sd, diag) = scatter(&sol, &spec, &[bx], &ScatterOptions::default())?;
    println!("soliton data: max|r| = {:.2e}, unitarity residual {:.2e}", sd.max_abs_r(), diag.max_unitarity());
    for e in &sd.eigen {
        println!("  eigenvalue {:.10} (true {lam}), norming constant {:.8}", e.lambda, e.c);
    }

    let gauss = FieldState::from_fn(Grid1D::span(-15.0, 15.0, 0.01)?, 0.0, |x| gaussian_pair(0.3, 1.0, x));
    let (rd, diag) = reflection(&gauss, &SpectralGrid::log_uniform(1e-4, 1e4, 128)?, &ScatterOptions::default())?;
    println!("\nGaussian data: |a0 a_inf - 1| = {:.2e}", (diag.alpha0 * diag.alpha_inf - 1.0).norm());
    println!("{:>12} {:>12} {:>12}", "lambda", "|r|", "unitarity");
    for i in (0..rd.grid.len()).step_by(16) {
        println!("{:>12.4e} {:>12.4e} {:>12.2e}", rd.grid.nodes()[i], rd.r[i].norm(), diag.unitarity_residual[i]);
    }
    Ok(())
}
