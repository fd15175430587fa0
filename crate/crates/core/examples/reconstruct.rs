//! Forward scattering followed by the inverse problem, compared with the
//! initial data.
//!
//! `cargo run --release --example reconstruct`

use mtm::common::{c, FieldState, Grid1D, SpectralGrid};
use mtm::inverse::InverseSolver;
use mtm::scatter::{reflection, ScatterOptions};

fn main() -> mtm::Result<()> {
    let w2 = 0.35f64 * 0.35;
    let data = |x: f64| (c(0.05 * (-x * x / w2).exp(), 0.0), c(0.0, 0.04 * (-(x - 0.5f64).powi(2) / w2).exp()));
    let s = FieldState::from_fn(Grid1D::span(-12.0, 12.0, 0.01)?, 0.0, data);
    let (sd, _) = reflection(&s, &SpectralGrid::log_uniform(1e-4, 1e4, 512)?, &ScatterOptions::default())?;
    let solver = InverseSolver::new(&sd)?;
    println!("{:>6} {:>26} {:>26} {:>10}", "x", "u(x)", "reconstructed", "error");
    for k in -8..=8 {
        let x = 0.5 * k as f64;
        let (u, _) = data(x);
        let (ur, _) = solver.field_at(x, 0.0)?;
        println!("{x:>6.2} {:>26} {:>26} {:>10.2e}", format!("{u:.4e}"), format!("{ur:.4e}"), (u - ur).norm());
    }
    let later = solver.field_at(0.0, 3.0)?;
    println!("\nsame data at t = 3 via the linear spectral flow: u(0, 3) = {:.4e}", later.0);
    Ok(())
}
