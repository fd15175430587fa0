//! Reflectionless solutions.
//!
//! [`one_soliton`] evaluates the sech closed form; [`DiscreteBCSystem`]
//! solves the residue-only Beals–Coifman system for any number of
//! eigenvalues and gives both the fields and the full matrix `M(z)`.
//!
//! The system is solved in scaled unknowns `αⱼ = ν₁₁(λⱼ) Eⱼ` and
//! `βⱼ = ν₁₂(λ̄ⱼ) Ēⱼ`, with `Eⱼ = c̃ⱼ e^{iθ̃(λⱼ)}`, which stay bounded for
//! all `(x, t)`.

use crate::common::{c, theta, velocity, Eigenpair, Mat2, C64};
use crate::error::{MtmError, Result};
use nalgebra::{DMatrix, DVector};

/// Exponent beyond which `e^{±iθ̃}` is flushed to its limit.
pub const FLUSH: f64 = 350.0;

/// One eigenvalue `λ₁ = ξ + iη` with its norming constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolitonParams {
    pub lambda: C64,
    pub c: C64,
}

impl SolitonParams {
    pub fn new(lambda: C64, c: C64) -> Result<Self> {
        if !(lambda.im > 0.0) {
            return Err(MtmError::invalid("soliton eigenvalue must have Im > 0"));
        }
        if c.norm() == 0.0 || !c.re.is_finite() || !c.im.is_finite() {
            return Err(MtmError::invalid("norming constant must be finite and nonzero"));
        }
        Ok(SolitonParams { lambda, c })
    }

    pub fn rho(&self) -> f64 {
        self.lambda.norm()
    }

    pub fn omega(&self) -> f64 {
        self.lambda.arg()
    }

    pub fn velocity(&self) -> f64 {
        velocity(self.lambda)
    }

    pub fn as_eigenpair(&self) -> Eigenpair {
        Eigenpair {
            lambda: self.lambda,
            c: self.c,
        }
    }
}

impl From<Eigenpair> for SolitonParams {
    fn from(e: Eigenpair) -> Self {
        SolitonParams { lambda: e.lambda, c: e.c }
    }
}

/// `sech z` without overflow for large `|Re z|`.
pub fn sech(z: C64) -> C64 {
    let w = if z.re >= 0.0 { -z } else { z };
    let e = w.exp();
    e * 2.0 / (1.0 + e * e)
}

/// Closed-form one-soliton `(u, v)`.
///
/// `delta_at` is the conjugation factor `δ̃(λ̄₁)`, entering exactly as in
/// the printed sech formulas (pass `1` for the bare soliton). The angle is
/// `arg λ₁ ∈ (0, π)`.
pub fn one_soliton(p: &SolitonParams, x: f64, t: f64, delta_at: C64) -> (C64, C64) {
    let (xi, eta) = (p.lambda.re, p.lambda.im);
    let r2 = xi * xi + eta * eta;
    let phi = p.lambda.arg();
    let th = theta(p.lambda, x, t);
    let d2 = delta_at.norm_sqr();
    let cabs = p.c.norm();
    let shift = (2.0 * eta / (r2.powf(0.25) * d2 * cabs)).ln();
    let carrier = (c(0.0, -th.re + 0.5 * phi)).exp() * p.c.conj() / cabs;
    let u = -carrier * eta * r2.powf(-0.75) / (delta_at * delta_at * d2) * sech(c(th.im + shift, -0.5 * phi));
    // δ̃(λ₁) = 1/conj(δ̃(λ̄₁)), so δ̃(λ̄₁)/δ̃(λ₁) = |δ̃(λ̄₁)|²
    let v = carrier * eta * d2 / r2.powf(0.25) * sech(c(th.im + shift, 0.5 * phi));
    (u, v)
}

/// Discrete Beals–Coifman system for reflectionless data at fixed `(x, t)`.
#[derive(Clone, Debug)]
pub struct DiscreteBCSystem {
    lambdas: Vec<C64>,
    matrix: DMatrix<C64>,
    rhs1: DVector<C64>,
    rhs2: DVector<C64>,
    /// Row 1 unknowns `(α, β)`.
    sol1: DVector<C64>,
    /// Row 2 unknowns.
    sol2: DVector<C64>,
}

/// `E` or `1/E` with the flush policy applied.
#[derive(Clone, Copy, Debug)]
enum Scaled {
    /// `|E| <= 1`: the value `E`.
    Small(C64),
    /// `|E| > 1`: the value `1/E`.
    Large(C64),
}

fn scaled_exp(log_e: C64) -> Scaled {
    if log_e.re <= 0.0 {
        Scaled::Small(if log_e.re < -FLUSH { C64::new(0.0, 0.0) } else { log_e.exp() })
    } else {
        Scaled::Large(if log_e.re > FLUSH { C64::new(0.0, 0.0) } else { (-log_e).exp() })
    }
}

impl DiscreteBCSystem {
    /// Assembles and solves the system; `spectrum` may be empty.
    pub fn solve(spectrum: &[Eigenpair], x: f64, t: f64) -> Result<Self> {
        let n = spectrum.len();
        let lambdas: Vec<C64> = spectrum.iter().map(|e| e.lambda).collect();
        let mut a = DMatrix::<C64>::zeros(2 * n, 2 * n);
        let mut rhs1 = DVector::<C64>::zeros(2 * n);
        let mut rhs2 = DVector::<C64>::zeros(2 * n);
        let one = C64::new(1.0, 0.0);
        for (j, e) in spectrum.iter().enumerate() {
            if e.c.norm() == 0.0 {
                return Err(MtmError::invalid("zero norming constant"));
            }
            let log_e = e.c.ln() + C64::new(0.0, 1.0) * theta(e.lambda, x, t);
            let lj = e.lambda;
            // row j:     α_j − E_j Σ λ̄_k β_k/(λ̄_k − λ_j) = E_j
            // row N + j: β_j + Ē_j Σ α_k/(λ_k − λ̄_j)     = 0   (row 2 rhs: Ē_j)
            let (diag, coef, r1) = match scaled_exp(log_e) {
                Scaled::Small(ej) => (one, ej, ej),
                Scaled::Large(inv) => (inv, one, one),
            };
            a[(j, j)] = diag;
            a[(n + j, n + j)] = diag.conj();
            rhs1[j] = r1;
            rhs2[n + j] = r1.conj();
            for (k, f) in spectrum.iter().enumerate() {
                let lk = f.lambda;
                if (lk - lj.conj()).norm() == 0.0 {
                    return Err(MtmError::invalid("eigenvalue on the real axis"));
                }
                a[(j, n + k)] = -coef * lk.conj() / (lk.conj() - lj);
                a[(n + j, k)] = coef.conj() / (lk - lj.conj());
            }
        }
        let lu = a.clone().lu();
        let sol1 = lu.solve(&rhs1).ok_or_else(|| MtmError::numerical("singular soliton system"))?;
        let sol2 = lu.solve(&rhs2).ok_or_else(|| MtmError::numerical("singular soliton system"))?;
        if sol1.iter().chain(sol2.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MtmError::numerical("soliton system produced non-finite values"));
        }
        Ok(DiscreteBCSystem {
            lambdas,
            matrix: a,
            rhs1,
            rhs2,
            sol1,
            sol2,
        })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Relative residual of both solved right-hand sides.
    pub fn residual(&self) -> f64 {
        let r1 = (&self.matrix * &self.sol1 - &self.rhs1).norm() / self.rhs1.norm().max(1e-300);
        let r2 = (&self.matrix * &self.sol2 - &self.rhs2).norm() / self.rhs2.norm().max(1e-300);
        r1.max(r2)
    }

    /// Scaled values `(αⱼ, βⱼ)` of the first row.
    pub fn alpha_beta(&self) -> (Vec<C64>, Vec<C64>) {
        let n = self.len();
        (self.sol1.rows(0, n).iter().copied().collect(), self.sol1.rows(n, n).iter().copied().collect())
    }

    /// `M(z)` for `z` away from the poles.
    pub fn m_at(&self, z: C64) -> Mat2 {
        let n = self.len();
        let mut m = Mat2::identity();
        for k in 0..n {
            let lk = self.lambdas[k];
            let lb = lk.conj();
            m[(0, 0)] += lb * self.sol1[n + k] / (lb - z);
            m[(0, 1)] -= self.sol1[k] / (lk - z);
            m[(1, 0)] += lb * self.sol2[n + k] / (lb - z);
            m[(1, 1)] -= self.sol2[k] / (lk - z);
        }
        m
    }

    /// `lim z M(z)₁₂` as `z → ∞`.
    pub fn m12_first_moment(&self) -> C64 {
        self.sol1.rows(0, self.len()).sum()
    }

    /// Reconstructed `(u, v)`.
    pub fn fields(&self) -> (C64, C64) {
        let m0 = self.m_at(C64::new(0.0, 0.0));
        let u = m0[(0, 1)].conj();
        let v = self.m12_first_moment().conj() * m0[(0, 0)];
        (u, v)
    }
}

/// N-soliton `(u, v)` at `(x, t)` from the discrete spectrum.
pub fn reflectionless_reconstruct(spectrum: &[Eigenpair], x: f64, t: f64) -> Result<(C64, C64)> {
    if spectrum.is_empty() {
        return Ok((C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    }
    for (j, e) in spectrum.iter().enumerate() {
        if !(e.lambda.im > 0.0) {
            return Err(MtmError::invalid("eigenvalues must have Im > 0"));
        }
        if spectrum[..j].iter().any(|f| (f.lambda - e.lambda).norm() < 1e-14) {
            return Err(MtmError::invalid("eigenvalues must be distinct"));
        }
    }
    Ok(DiscreteBCSystem::solve(spectrum, x, t)?.fields())
}

/// Samples an N-soliton on `grid` at time `t`.
pub fn soliton_state(spectrum: &[Eigenpair], grid: crate::common::Grid1D, t: f64) -> Result<crate::common::FieldState> {
    let mut u = Vec::with_capacity(grid.n);
    let mut v = Vec::with_capacity(grid.n);
    for k in 0..grid.n {
        let (a, b) = reflectionless_reconstruct(spectrum, grid.x(k), t)?;
        u.push(a);
        v.push(b);
    }
    crate::common::FieldState::new(grid, u, v, t)
}
