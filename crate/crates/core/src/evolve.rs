//! Direct time integrator for the massive Thirring model.
//!
//! With `dt = dx` the transport part `u_t + u_x = 0`, `v_t − v_x = 0` is an
//! exact shift by one node, so each Strang step is a half nonlinear
//! substep, the shift, and a second half nonlinear substep. The pointwise
//! nonlinear system
//!
//! ```text
//! i u_t = −(v + |v|² u),   i v_t = −(u + |u|² v)
//! ```
//!
//! is integrated with classical RK4.

use crate::common::{FieldState, C64};
use crate::error::{MtmError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    ZeroInflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Splitting {
    Strang,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_final: f64,
    pub boundary: Boundary,
    pub substep_order: Splitting,
}

impl EvolveConfig {
    /// Configuration matched to a grid spacing.
    pub fn for_grid(dx: f64, t_final: f64) -> Self {
        EvolveConfig {
            dt: dx,
            t_final,
            boundary: Boundary::ZeroInflow,
            substep_order: Splitting::Strang,
        }
    }

    fn check(&self, state: &FieldState) -> Result<()> {
        if !(self.dt > 0.0) || (self.dt - state.grid.dx).abs() > 1e-12 * state.grid.dx {
            return Err(MtmError::invalid(format!("dt must equal dx ({} != {})", self.dt, state.grid.dx)));
        }
        Ok(())
    }
}

#[inline]
fn rhs(u: C64, v: C64) -> (C64, C64) {
    // u' = i(v + |v|² u), v' = i(u + |u|² v)
    let du = v + u * v.norm_sqr();
    let dv = u + v * u.norm_sqr();
    (C64::new(-du.im, du.re), C64::new(-dv.im, dv.re))
}

/// One RK4 step of the pointwise nonlinear system.
#[inline]
pub fn nonlinear_point(u: C64, v: C64, h: f64) -> (C64, C64) {
    let (k1u, k1v) = rhs(u, v);
    let (k2u, k2v) = rhs(u + k1u * (0.5 * h), v + k1v * (0.5 * h));
    let (k3u, k3v) = rhs(u + k2u * (0.5 * h), v + k2v * (0.5 * h));
    let (k4u, k4v) = rhs(u + k3u * h, v + k3v * h);
    let s = h / 6.0;
    (u + (k1u + (k2u + k3u) * 2.0 + k4u) * s, v + (k1v + (k2v + k3v) * 2.0 + k4v) * s)
}

/// Nonlinear substep of length `h` over whole arrays.
pub fn nonlinear_substep(u: &mut [C64], v: &mut [C64], h: f64) {
    for (a, b) in u.iter_mut().zip(v.iter_mut()) {
        let (na, nb) = nonlinear_point(*a, *b, h);
        *a = na;
        *b = nb;
    }
}

/// Shifts `u` one node right and `v` one node left (reversed when
/// `forward` is false), filling the inflow node with zero.
fn transport(u: &mut [C64], v: &mut [C64], forward: bool) {
    let zero = C64::new(0.0, 0.0);
    let n = u.len();
    if forward {
        u.copy_within(0..n - 1, 1);
        u[0] = zero;
        v.copy_within(1..n, 0);
        v[n - 1] = zero;
    } else {
        u.copy_within(1..n, 0);
        u[n - 1] = zero;
        v.copy_within(0..n - 1, 1);
        v[0] = zero;
    }
}

fn check_finite(state: &FieldState) -> Result<()> {
    if state.u.iter().chain(state.v.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(MtmError::numerical(format!("non-finite field at t = {}", state.t)));
    }
    Ok(())
}

fn strang(state: &mut FieldState, dt: f64, forward: bool) {
    let h = if forward { 0.5 * dt } else { -0.5 * dt };
    nonlinear_substep(&mut state.u, &mut state.v, h);
    transport(&mut state.u, &mut state.v, forward);
    nonlinear_substep(&mut state.u, &mut state.v, h);
    state.t += 2.0 * h;
}

/// One Strang step forward in time.
pub fn step(state: &FieldState, cfg: &EvolveConfig) -> Result<FieldState> {
    cfg.check(state)?;
    let mut out = state.clone();
    strang(&mut out, cfg.dt, true);
    check_finite(&out)?;
    Ok(out)
}

/// One step of the time-reversed scheme (inverse of [`step`] up to
/// `O(dt³)` and boundary loss).
pub fn step_reverse(state: &FieldState, cfg: &EvolveConfig) -> Result<FieldState> {
    cfg.check(state)?;
    let mut out = state.clone();
    strang(&mut out, cfg.dt, false);
    check_finite(&out)?;
    Ok(out)
}

/// Number of whole steps from `t0` to `t1`; the gap must be a multiple of
/// `dt` to `1e-6` steps.
pub fn step_count(t0: f64, t1: f64, dt: f64) -> Result<usize> {
    if t1 < t0 {
        return Err(MtmError::invalid("target time precedes the state time"));
    }
    let q = (t1 - t0) / dt;
    let n = q.round();
    if (q - n).abs() > 1e-6 {
        return Err(MtmError::invalid(format!("time gap {} is not a multiple of dt = {dt}", t1 - t0)));
    }
    Ok(n as usize)
}

/// Evolves to `t_target` with repeated Strang steps.
pub fn evolve_to(state: &FieldState, t_target: f64, cfg: &EvolveConfig) -> Result<FieldState> {
    cfg.check(state)?;
    let n = step_count(state.t, t_target, cfg.dt)?;
    let t0 = state.t;
    let mut out = state.clone();
    for k in 0..n {
        strang(&mut out, cfg.dt, true);
        if k % 256 == 255 {
            check_finite(&out)?;
        }
    }
    check_finite(&out)?;
    out.t = t0 + n as f64 * cfg.dt;
    Ok(out)
}

/// Evolves through increasing `times`, calling `visit` at each one.
pub fn evolve_visit(state: &FieldState, times: &[f64], cfg: &EvolveConfig, mut visit: impl FnMut(&FieldState) -> Result<()>) -> Result<FieldState> {
    let mut cur = state.clone();
    for &t in times {
        cur = evolve_to(&cur, t, cfg)?;
        visit(&cur)?;
    }
    Ok(cur)
}
