//! One- and two-soliton profiles from the discrete spectrum.
//!
//! `cargo run --example soliton`

use mtm::common::{c, Eigenpair};
use mtm::solitons::{one_soliton, reflectionless_reconstruct, SolitonParams};
use std::f64::consts::PI;

fn main() -> mtm::Result<()> {
    let p = SolitonParams::new(c(0.8 * (PI / 3.0).cos(), 0.8 * (PI / 3.0).sin()), c(1.0, 0.0))?;
    println!(
        "one soliton: rho {:.3}, omega {:.4}, velocity {:.4}, charge 4*omega = {:.4}",
        p.rho(),
        p.omega(),
        p.velocity(),
        4.0 * p.omega()
    );

    println!("\n{:>6} {:>12} {:>12} {:>10}", "x", "|u| closed", "|u| system", "diff");
    for k in -4..=4 {
        let x = 2.0 * k as f64;
        let (u, _) = one_soliton(&p, x, 1.0, c(1.0, 0.0));
        let (w, _) = reflectionless_reconstruct(&[p.as_eigenpair()], x, 1.0)?;
        println!("{x:>6.1} {:>12.6e} {:>12.6e} {:>10.2e}", u.norm(), w.norm(), (u - w).norm());
    }

    let pair = [
        Eigenpair {
            lambda: c(0.4, 0.4),
            c: c(1.0, 0.0),
        },
        Eigenpair {
            lambda: c(1.2, 1.0),
            c: c(1.0, 0.5),
        },
    ];
    println!(
        "\ntwo solitons at t = 20 (velocities {:.3} and {:.3})",
        mtm::common::velocity(pair[0].lambda),
        mtm::common::velocity(pair[1].lambda)
    );
    for k in -12..=12 {
        let x = 2.5 * k as f64;
        let (u, v) = reflectionless_reconstruct(&pair, x, 20.0)?;
        let bar = "#".repeat((40.0 * (u.norm_sqr() + v.norm_sqr()).sqrt()).round() as usize);
        println!("{x:>6.1} {bar}");
    }
    Ok(())
}
