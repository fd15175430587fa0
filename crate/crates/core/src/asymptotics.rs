//! Long-time asymptotics: region classification, the conjugation function
//! δ̃, parabolic-cylinder local models and the leading-order fields.
//!
//! For `|x| < t` the phase `θ̃` has stationary points `±z̃₀`,
//! `z̃₀ = √((t − x)/(t + x))`, with `θ̃(±z̃₀) = ±2τ` and
//! `τ = t z̃₀/(1 + z̃₀²)`. The leading-order Riemann–Hilbert solution is
//!
//! ```text
//! M = E · M_sol · δ̃^{−σ₃},
//! E(λ) = I + Σ± M_sol(±z̃₀) m₁^± M_sol(±z̃₀)⁻¹ / (s (λ ∓ z̃₀)),
//! ```
//!
//! with `s = √(2t/((1 + z̃₀²) z̃₀))`, `M_sol` the soliton matrix of the
//! frame (identity away from soliton rays) and `m₁^±` the `1/ζ`
//! coefficients of the parabolic-cylinder models at `±z̃₀`.

use crate::common::{mat2, theta, velocity, Eigenpair, Mat2, ScatteringData, C64, I};
use crate::error::{MtmError, Result};
use crate::gamma::{gamma, recip_gamma};
use crate::solitons::{DiscreteBCSystem, SolitonParams};
use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Region of the `(x, t)` half plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// Near the ray of soliton `ℓ` (index into the eigenvalue list).
    SolitonFrame(usize),
    InteriorRadiation,
    Exterior,
    NearConePlus,
    NearConeMinus,
}

impl Region {
    /// Short label for tables.
    pub fn label(&self) -> String {
        match self {
            Region::SolitonFrame(l) => format!("soliton{l}"),
            Region::InteriorRadiation => "interior".into(),
            Region::Exterior => "exterior".into(),
            Region::NearConePlus => "cone+".into(),
            Region::NearConeMinus => "cone-".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticFrame {
    pub velocity: f64,
    pub region: Region,
    /// `z̃₀`, zero when `|v| ≥ 1`.
    pub z0: f64,
    /// `τ`, zero when `|v| ≥ 1`.
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsymptoticOptions {
    /// Soliton frame half-width `w` in `|v − v_ℓ| < w/t`.
    pub soliton_window: f64,
    /// Near-cone width in `t − |x|`.
    pub cone_window: f64,
    /// Smallest time accepted by [`AsymptoticSolver::solution`].
    pub t_min: f64,
    /// Gauss–Legendre points per panel of the cut quadrature.
    pub panel_order: usize,
    /// Exponent `p` of the near-cone `t^{-1/p}` envelope.
    pub cone_exponent: f64,
}

impl Default for AsymptoticOptions {
    fn default() -> Self {
        AsymptoticOptions {
            soliton_window: 5.0,
            cone_window: 20.0,
            t_min: 20.0,
            panel_order: 8,
            cone_exponent: 1.5,
        }
    }
}

/// `(z̃₀, τ)` for `|x| < t`.
pub fn stationary_point(x: f64, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) || !(x.abs() < t) {
        return Err(MtmError::invalid(format!("no stationary point for x = {x}, t = {t}")));
    }
    let z0 = ((t - x) / (t + x)).sqrt();
    Ok((z0, t * z0 / (1.0 + z0 * z0)))
}

pub fn classify(x: f64, t: f64, data: &ScatteringData) -> Result<AsymptoticFrame> {
    classify_with(x, t, data, &AsymptoticOptions::default())
}

pub fn classify_with(x: f64, t: f64, data: &ScatteringData, opts: &AsymptoticOptions) -> Result<AsymptoticFrame> {
    if !(t > 0.0) || !x.is_finite() {
        return Err(MtmError::invalid("classification needs t > 0 and finite x"));
    }
    let v = x / t;
    if v.abs() > 1.0 {
        return Ok(AsymptoticFrame {
            velocity: v,
            region: Region::Exterior,
            z0: 0.0,
            tau: 0.0,
        });
    }
    let (z0, tau) = if v.abs() < 1.0 { stationary_point(x, t)? } else { (0.0, 0.0) };
    let nearest = data
        .eigen
        .iter()
        .enumerate()
        .map(|(k, e)| (k, (v - velocity(e.lambda)).abs()))
        .filter(|&(_, d)| d < opts.soliton_window / t)
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let region = if let Some((k, _)) = nearest {
        Region::SolitonFrame(k)
    } else if v.abs() >= 0.5 && t - x.abs() < opts.cone_window {
        if x > 0.0 {
            Region::NearConePlus
        } else {
            Region::NearConeMinus
        }
    } else {
        Region::InteriorRadiation
    };
    Ok(AsymptoticFrame { velocity: v, region, z0, tau })
}

/// `log(1 + s|r̃(s)|²)`, the jump exponent of δ̃ on the cut.
fn log_weight(data: &ScatteringData, s: f64) -> Result<f64> {
    let a = s * data.r_at(s).norm_sqr();
    if !(a > -1.0) {
        return Err(MtmError::invalid(format!("1 + lambda |r|^2 <= 0 at lambda = {s}")));
    }
    Ok(a.ln_1p())
}

/// Boundary exponents `(κ₀⁺, κ₀⁻)` at `±z̃₀`.
pub fn kappa(data: &ScatteringData, z0: f64) -> Result<(f64, f64)> {
    if !(z0 > 0.0) {
        return Err(MtmError::invalid("z0 must be positive"));
    }
    Ok((log_weight(data, z0)? / (2.0 * PI), log_weight(data, -z0)? / (2.0 * PI)))
}

/// The conjugation function `δ̃(λ) = Π_B (λ − λ̄ⱼ)/(λ − λⱼ) · e^{χ(λ)}` for
/// a fixed cut `(−z̃₀, z̃₀)` and Blaschke set `B`.
///
/// `χ` is evaluated by composite Gauss–Legendre quadrature after removing
/// the linear interpolant of `log(1 + s|r̃|²)` between the endpoints
/// (integrated exactly) and, near the cut, the value at `Re λ`.
#[derive(Clone, Debug)]
pub struct DeltaFunction<'a> {
    data: &'a ScatteringData,
    z0: f64,
    set: Vec<C64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `f − (a + b s)` at the nodes.
    g: Vec<f64>,
    a: f64,
    b: f64,
    f_plus: f64,
    f_minus: f64,
}

impl<'a> DeltaFunction<'a> {
    pub fn new(data: &'a ScatteringData, set: &[C64], z0: f64, order: usize) -> Result<Self> {
        if !(z0 > 0.0) || !z0.is_finite() {
            return Err(MtmError::invalid("z0 must be positive and finite"));
        }
        let rule = GaussLegendre::new(order.max(2)).map_err(|_| MtmError::invalid("bad quadrature order"))?;
        let f_plus = log_weight(data, z0)?;
        let f_minus = log_weight(data, -z0)?;
        let a = 0.5 * (f_plus + f_minus);
        let b = (f_plus - f_minus) / (2.0 * z0);
        // panel breaks: the endpoints, zero, and every grid node inside the cut
        let mut breaks = vec![-z0, 0.0, z0];
        breaks.extend(data.grid.nodes().iter().copied().filter(|s| s.abs() < z0));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for &(xi, wi) in rule.as_node_weight_pairs() {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        let g = nodes.iter().map(|&s| Ok(log_weight(data, s)? - a - b * s)).collect::<Result<Vec<f64>>>()?;
        Ok(DeltaFunction {
            data,
            z0,
            set: set.to_vec(),
            nodes,
            weights,
            g,
            a,
            b,
            f_plus,
            f_minus,
        })
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn set(&self) -> &[C64] {
        &self.set
    }

    pub fn kappa_plus(&self) -> f64 {
        self.f_plus / (2.0 * PI)
    }

    pub fn kappa_minus(&self) -> f64 {
        self.f_minus / (2.0 * PI)
    }

    /// `(1/2πi)` times the Cauchy integral, given `L = ∫ ds/(s − λ)`.
    fn cauchy(&self, lam: C64, l: C64) -> C64 {
        let near = lam.re.abs() < self.z0 && lam.im.abs() < self.z0;
        let g0 = if near {
            log_weight(self.data, lam.re).unwrap_or(0.0) - self.a - self.b * lam.re
        } else {
            0.0
        };
        let tiny = 1e-14 * self.z0;
        let mut sum = C64::new(0.0, 0.0);
        for ((&s, &w), &g) in self.nodes.iter().zip(&self.weights).zip(&self.g) {
            let d = C64::new(s, 0.0) - lam;
            if d.norm() > tiny {
                sum += (g - g0) * w / d;
            }
        }
        let total = (self.a + self.b * lam) * l + sum + g0 * l + 2.0 * self.z0 * self.b;
        total / (2.0 * PI * I)
    }

    /// `χ(λ)` off the closed cut `[−z̃₀, z̃₀]`.
    pub fn chi(&self, lam: C64) -> Result<C64> {
        if !lam.re.is_finite() || !lam.im.is_finite() {
            return Err(MtmError::invalid("non-finite lambda"));
        }
        if lam.im == 0.0 && lam.re.abs() <= self.z0 {
            return Err(MtmError::invalid("lambda on the cut; use a boundary value"));
        }
        let l = ((lam - self.z0) / (lam + self.z0)).ln();
        Ok(self.cauchy(lam, l))
    }

    /// Boundary value `χ±(x)` for `|x| < z̃₀`, from above when `upper`.
    pub fn chi_boundary(&self, x: f64, upper: bool) -> Result<C64> {
        if !(x.abs() < self.z0) {
            return Err(MtmError::invalid("boundary value requested off the open cut"));
        }
        let re = ((self.z0 - x) / (self.z0 + x)).ln();
        let l = C64::new(re, if upper { PI } else { -PI });
        Ok(self.cauchy(C64::new(x, 0.0), l))
    }

    /// Principal value of `χ` on the open cut.
    pub fn chi_pv(&self, x: f64) -> Result<C64> {
        Ok((self.chi_boundary(x, true)? + self.chi_boundary(x, false)?) * 0.5)
    }

    pub fn blaschke(&self, lam: C64) -> Result<C64> {
        let mut b = C64::new(1.0, 0.0);
        for &lk in &self.set {
            if (lam - lk).norm() < 1e-14 * lk.norm().max(1.0) {
                return Err(MtmError::invalid("delta evaluated at a pole"));
            }
            b *= (lam - lk.conj()) / (lam - lk);
        }
        Ok(b)
    }

    /// `δ̃(λ)` off the closed cut.
    pub fn delta(&self, lam: C64) -> Result<C64> {
        Ok(self.blaschke(lam)? * self.chi(lam)?.exp())
    }

    /// Boundary value `δ̃±(x)` on the open cut.
    pub fn delta_boundary(&self, x: f64, upper: bool) -> Result<C64> {
        Ok(self.blaschke(C64::new(x, 0.0))? * self.chi_boundary(x, upper)?.exp())
    }

    /// `δ̃(0)`; the jump vanishes at the origin, so this is the common
    /// boundary value.
    pub fn delta_at_zero(&self) -> Result<C64> {
        Ok(self.blaschke(C64::new(0.0, 0.0))? * self.chi_pv(0.0)?.exp())
    }

    /// `δ̃₀⁺` with `δ̃(λ) ≈ (λ − z̃₀)^{−iκ⁺} δ̃₀⁺` near `z̃₀`.
    pub fn local_plus(&self) -> Result<C64> {
        let z0 = self.z0;
        let sum: f64 = self.nodes.iter().zip(&self.weights).zip(&self.g).map(|((&s, &w), &g)| w * g / (s - z0)).sum();
        let log_d = C64::new(2.0 * z0 * self.b - self.f_plus * (2.0 * z0).ln() + sum, 0.0) / (2.0 * PI * I);
        Ok(self.blaschke(C64::new(z0, 0.0))? * log_d.exp())
    }

    /// `δ̃₀⁻` with `δ̃(λ) ≈ (−λ − z̃₀)^{iκ⁻} δ̃₀⁻` near `−z̃₀`.
    pub fn local_minus(&self) -> Result<C64> {
        let z0 = self.z0;
        let sum: f64 = self.nodes.iter().zip(&self.weights).zip(&self.g).map(|((&s, &w), &g)| w * g / (s + z0)).sum();
        let log_d = C64::new(2.0 * z0 * self.b + self.f_minus * (2.0 * z0).ln() + sum, 0.0) / (2.0 * PI * I);
        Ok(self.blaschke(C64::new(-z0, 0.0))? * log_d.exp())
    }
}

/// `χ(λ)` for the cut `(−z̃₀, z̃₀)`; points on the open cut return the
/// principal value.
pub fn chi(data: &ScatteringData, lambda: C64, z0: f64) -> Result<C64> {
    let d = DeltaFunction::new(data, &[], z0, AsymptoticOptions::default().panel_order)?;
    if lambda.im == 0.0 && lambda.re.abs() < z0 {
        d.chi_pv(lambda.re)
    } else {
        d.chi(lambda)
    }
}

/// `δ̃(λ)` with Blaschke set `set`.
pub fn delta_fn(data: &ScatteringData, set: &[C64], lambda: C64, z0: f64) -> Result<C64> {
    DeltaFunction::new(data, set, z0, AsymptoticOptions::default().panel_order)?.delta(lambda)
}

/// `ln(1 + x)/x`, continuous at zero.
fn ln1p_ratio(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x + x * x / 3.0
    } else {
        x.ln_1p() / x
    }
}

/// `1/ζ` coefficient `m₁` of the parabolic-cylinder problem
/// `Ψ₊ = Ψ₋ [[1, p], [q, 1 + pq]]` on the real line,
/// `Ψ = (I + m₁/ζ + …) ζ^{iκσ₃} e^{iζ²σ₃/4}`, `1 + pq = e^{2πκ}`.
pub fn pc_residue(p: C64, q: C64) -> Result<Mat2> {
    let pq = p * q;
    if pq.im.abs() > 1e-10 * (1.0 + pq.norm()) || !(pq.re > -1.0) {
        return Err(MtmError::invalid("model jump needs real pq > -1"));
    }
    let x = pq.re;
    let kappa = x.ln_1p() / (2.0 * PI);
    let ik = C64::new(0.0, kappa);
    let one = C64::new(1.0, 0.0);
    // κ/p = q ln(1 + pq)/(2π pq), finite as p → 0
    let k_over_p = q * ln1p_ratio(x) / (2.0 * PI);
    let rot = C64::from_polar(1.0, PI / 4.0);
    let beta21 = rot * SQRT_2PI * (PI * kappa / 2.0).exp() * I * k_over_p * recip_gamma(one + ik);
    let beta12 = I * p * gamma(one + ik)? * (-PI * kappa / 2.0).exp() / (rot * SQRT_2PI);
    let zero = C64::new(0.0, 0.0);
    Ok(mat2(zero, I * beta12, -I * beta21, zero))
}

/// `(β₁₂, β₂₁)` in the printed form
/// `β₁₂ = √(2π) e^{iπ/4} e^{−πκ/2} / (ρ Γ(−iκ))`, `β₂₁ = κ/β₁₂`, for a
/// model datum `ρ`; both vanish when `ρ = 0`.
pub fn printed_beta(rho: C64, kappa: f64) -> Result<(C64, C64)> {
    if rho.norm() == 0.0 {
        return Ok((C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    }
    let rot = C64::from_polar(1.0, PI / 4.0);
    let one = C64::new(1.0, 0.0);
    let ik = C64::new(0.0, kappa);
    let b12 = rot * SQRT_2PI * (-PI * kappa / 2.0).exp() * recip_gamma(-ik) / rho;
    // κ/β₁₂ through κ/Γ(−iκ)⁻¹ = iΓ(1 − iκ)
    let b21 = rho * I * gamma(one - ik)? * (PI * kappa / 2.0).exp() / (rot * SQRT_2PI);
    Ok((b12, b21))
}

/// Local-model constants on one ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PCModel {
    pub z0: f64,
    pub tau: f64,
    /// `s` in `ζ = s (λ ∓ z̃₀)`.
    pub scale: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub chi0: C64,
    pub delta0_plus: C64,
    pub delta0_minus: C64,
    /// `(8τ)^{iκ⁻/2} e^{iτ} δ̃₀⁻`.
    pub delta_a0: C64,
    /// `(8τ)^{−iκ⁺/2} e^{−iτ} δ̃₀⁺`.
    pub delta_b0: C64,
    pub beta_a12: C64,
    pub beta_a21: C64,
    pub beta_b12: C64,
    pub beta_b21: C64,
    /// Model coefficient at `+z̃₀` in the `ζ = s(λ − z̃₀)` variable.
    pub m1_plus: Mat2,
    /// Model coefficient at `−z̃₀` in the `ζ = s(λ + z̃₀)` variable.
    pub m1_minus: Mat2,
}

pub fn pc_model(data: &ScatteringData, z0: f64, tau: f64, set: &[C64]) -> Result<PCModel> {
    let d = DeltaFunction::new(data, set, z0, AsymptoticOptions::default().panel_order)?;
    pc_model_with(&d, tau)
}

pub fn pc_model_with(d: &DeltaFunction, tau: f64) -> Result<PCModel> {
    if !(tau > 0.0) {
        return Err(MtmError::invalid("tau must be positive"));
    }
    let z0 = d.z0();
    let data = d.data;
    let (kp, km) = (d.kappa_plus(), d.kappa_minus());
    let (rp, rm) = (data.r_at(z0), data.r_at(-z0));
    let dp = d.local_plus()?;
    let dm = d.local_minus()?;
    let scale = (2.0 * tau).sqrt() / z0;
    let ln8t = (8.0 * tau).ln();
    let delta_a0 = C64::new(0.0, 0.5 * km * ln8t + tau).exp() * dm;
    let delta_b0 = C64::new(0.0, -0.5 * kp * ln8t - tau).exp() * dp;
    let (beta_b12, beta_b21) = printed_beta(rp, kp)?;
    let (beta_a12, beta_a21) = printed_beta(-z0 * rm.conj(), km)?;
    // B side: Δ = s^{iκ⁺} δ̃₀⁺ e^{−iτ}
    let db = C64::new(0.0, kp * scale.ln() - tau).exp() * dp;
    let m1_plus = pc_residue(-rp / (db * db), -z0 * rp.conj() * db * db)?;
    // A side after λ → −λ and conjugation by σ₁: Δ = s^{−iκ⁻} δ̃₀⁻ e^{iτ}
    let da = C64::new(0.0, -km * scale.ln() + tau).exp() * dm;
    let mr = pc_residue(-z0 * rm.conj() * da * da, rm / (da * da))?;
    let zero = C64::new(0.0, 0.0);
    let m1_minus = mat2(zero, -mr[(1, 0)], -mr[(0, 1)], zero);
    Ok(PCModel {
        z0,
        tau,
        scale,
        kappa_plus: kp,
        kappa_minus: km,
        chi0: d.chi_pv(0.0)?,
        delta0_plus: dp,
        delta0_minus: dm,
        delta_a0,
        delta_b0,
        beta_a12,
        beta_a21,
        beta_b12,
        beta_b21,
        m1_plus,
        m1_minus,
    })
}

/// Values of the soliton matrix at `0` and `±z̃₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolitonMatrix {
    pub at_zero: Mat2,
    pub at_plus: Mat2,
    pub at_minus: Mat2,
    /// `lim λ M₁₂(λ)` at infinity.
    pub moment12: C64,
}

impl SolitonMatrix {
    pub fn identity() -> Self {
        SolitonMatrix {
            at_zero: Mat2::identity(),
            at_plus: Mat2::identity(),
            at_minus: Mat2::identity(),
            moment12: C64::new(0.0, 0.0),
        }
    }

    pub fn from_system(sys: &DiscreteBCSystem, z0: f64) -> Self {
        SolitonMatrix {
            at_zero: sys.m_at(C64::new(0.0, 0.0)),
            at_plus: sys.m_at(C64::new(z0, 0.0)),
            at_minus: sys.m_at(C64::new(-z0, 0.0)),
            moment12: sys.m12_first_moment(),
        }
    }
}

fn inv2(m: &Mat2) -> Mat2 {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    mat2(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det
}

/// Fields from `M = E M_sol δ̃^{−σ₃}` at `λ = 0` and `λ → ∞`.
fn assemble(model: &PCModel, sol: &SolitonMatrix, delta0: C64) -> (C64, C64) {
    let z0 = model.z0;
    let ap = sol.at_plus * model.m1_plus * inv2(&sol.at_plus) / C64::new(model.scale, 0.0);
    let am = sol.at_minus * model.m1_minus * inv2(&sol.at_minus) / C64::new(model.scale, 0.0);
    let e0 = Mat2::identity() + (am - ap) / C64::new(z0, 0.0);
    let e1 = ap + am;
    let m0 = e0 * sol.at_zero;
    let u = (m0[(0, 1)] * delta0).conj();
    let v = (e1[(0, 1)] + sol.moment12).conj() * m0[(0, 0)] / delta0;
    (u, v)
}

/// A soliton with its norming constant dressed by the other solitons and
/// the radiation on its own ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DressedSoliton {
    pub params: SolitonParams,
    /// `c̃ δ̃(λ)^{−2}`.
    pub dressed_c: C64,
    pub delta_zero: C64,
}

impl DressedSoliton {
    pub fn fields(&self, x: f64, t: f64) -> Result<(C64, C64)> {
        let sys = DiscreteBCSystem::solve(
            &[Eigenpair {
                lambda: self.params.lambda,
                c: self.dressed_c,
            }],
            x,
            t,
        )?;
        let (u, v) = sys.fields();
        Ok((u / self.delta_zero, v / self.delta_zero))
    }

    /// Centre shift relative to the bare soliton, `−4 log|δ̃(λ)|/(η(1 + 1/ρ²))`.
    pub fn center_shift(&self) -> f64 {
        let lam = self.params.lambda;
        let ratio = (self.params.c.norm() / self.dressed_c.norm()).sqrt();
        -4.0 * ratio.ln() / (lam.im * (1.0 + 1.0 / lam.norm_sqr()))
    }
}

/// Evaluator of the leading-order long-time solution for fixed data.
#[derive(Clone, Debug)]
pub struct AsymptoticSolver<'a> {
    data: &'a ScatteringData,
    opts: AsymptoticOptions,
    dressed: Vec<DressedSoliton>,
}

impl<'a> AsymptoticSolver<'a> {
    pub fn new(data: &'a ScatteringData, opts: AsymptoticOptions) -> Result<Self> {
        data.validate()?;
        let dressed = (0..data.eigen.len()).map(|k| dress_soliton(data, k, true, &opts)).collect::<Result<Vec<_>>>()?;
        Ok(AsymptoticSolver { data, opts, dressed })
    }

    pub fn data(&self) -> &ScatteringData {
        self.data
    }

    pub fn options(&self) -> &AsymptoticOptions {
        &self.opts
    }

    pub fn dressed(&self) -> &[DressedSoliton] {
        &self.dressed
    }

    pub fn classify(&self, x: f64, t: f64) -> Result<AsymptoticFrame> {
        classify_with(x, t, self.data, &self.opts)
    }

    /// Eigenvalues moving faster than `v`, except `skip`.
    fn set_faster(&self, v: f64, skip: Option<usize>) -> Vec<C64> {
        self.data
            .eigen
            .iter()
            .enumerate()
            .filter(|&(k, e)| Some(k) != skip && velocity(e.lambda) > v)
            .map(|(_, e)| e.lambda)
            .collect()
    }

    /// Local models, soliton matrix and `δ̃(0)` on the ray of `frame`.
    fn frame_parts(&self, x: f64, t: f64, frame: &AsymptoticFrame) -> Result<(PCModel, SolitonMatrix, C64)> {
        let skip = match frame.region {
            Region::SolitonFrame(l) => Some(l),
            _ => None,
        };
        let d = DeltaFunction::new(self.data, &self.set_faster(frame.velocity, skip), frame.z0, self.opts.panel_order)?;
        let model = pc_model_with(&d, frame.tau)?;
        let delta0 = d.delta_at_zero()?;
        let sol = match skip {
            Some(l) => {
                let e = self.data.eigen[l];
                let dl = d.delta(e.lambda)?;
                let sys = DiscreteBCSystem::solve(
                    &[Eigenpair {
                        lambda: e.lambda,
                        c: e.c / (dl * dl),
                    }],
                    x,
                    t,
                )?;
                SolitonMatrix::from_system(&sys, frame.z0)
            }
            None => SolitonMatrix::identity(),
        };
        Ok((model, sol, delta0))
    }

    /// Leading-order radiation in the given frame.
    ///
    /// Exterior and near-cone frames return zero; see
    /// [`AsymptoticSolver::error_envelope`] for the size of what is dropped.
    pub fn radiation(&self, x: f64, t: f64, frame: &AsymptoticFrame) -> Result<(C64, C64)> {
        let zero = C64::new(0.0, 0.0);
        match frame.region {
            Region::Exterior | Region::NearConePlus | Region::NearConeMinus => Ok((zero, zero)),
            Region::InteriorRadiation => {
                let (model, sol, delta0) = self.frame_parts(x, t, frame)?;
                Ok(assemble(&model, &sol, delta0))
            }
            Region::SolitonFrame(_) => {
                let (model, sol, delta0) = self.frame_parts(x, t, frame)?;
                let (u, v) = assemble(&model, &sol, delta0);
                let mut bare = model;
                bare.m1_plus = Mat2::zeros();
                bare.m1_minus = Mat2::zeros();
                let (u0, v0) = assemble(&bare, &sol, delta0);
                Ok((u - u0, v - v0))
            }
        }
    }

    /// Dressed soliton of the frame plus radiation (the full leading-order
    /// matrix), plus the dressed tails of all other solitons.
    pub fn solution(&self, x: f64, t: f64) -> Result<(C64, C64)> {
        if !(t >= self.opts.t_min) {
            return Err(MtmError::invalid(format!("asymptotics need t >= {}", self.opts.t_min)));
        }
        let frame = self.classify(x, t)?;
        let zero = C64::new(0.0, 0.0);
        if frame.region == Region::Exterior {
            return Ok((zero, zero));
        }
        let skip = match frame.region {
            Region::SolitonFrame(l) => Some(l),
            _ => None,
        };
        let (mut u, mut v) = (zero, zero);
        for (k, ds) in self.dressed.iter().enumerate() {
            if Some(k) != skip {
                let (a, b) = ds.fields(x, t)?;
                u += a;
                v += b;
            }
        }
        let (a, b) = match frame.region {
            Region::SolitonFrame(_) => {
                let (model, sol, delta0) = self.frame_parts(x, t, &frame)?;
                assemble(&model, &sol, delta0)
            }
            _ => self.radiation(x, t, &frame)?,
        };
        Ok((u + a, v + b))
    }

    /// Size of the first neglected term: `τ^{−3/4}` inside the cone, `1/t`
    /// outside, `√z̃₀ + t^{−1/p}` near the light cone.
    pub fn error_envelope(&self, frame: &AsymptoticFrame, t: f64) -> f64 {
        match frame.region {
            Region::Exterior => 1.0 / t,
            Region::NearConePlus | Region::NearConeMinus => frame.z0.sqrt() + t.powf(-1.0 / self.opts.cone_exponent),
            _ => frame.tau.powf(-0.75),
        }
    }
}

/// Dresses soliton `k` for `t → +∞` (`forward`) or `t → −∞`.
///
/// Forward dressing uses the solitons faster than `k` and the radiation on
/// the cut `(−ρ_k, ρ_k)`; backward dressing uses the slower solitons and is
/// only available for reflectionless data.
pub fn dress_soliton(data: &ScatteringData, k: usize, forward: bool, opts: &AsymptoticOptions) -> Result<DressedSoliton> {
    let e = *data.eigen.get(k).ok_or_else(|| MtmError::invalid("soliton index out of range"))?;
    let vk = velocity(e.lambda);
    let set: Vec<C64> = data
        .eigen
        .iter()
        .filter(|f| f.lambda != e.lambda && if forward { velocity(f.lambda) > vk } else { velocity(f.lambda) < vk })
        .map(|f| f.lambda)
        .collect();
    let params = SolitonParams::new(e.lambda, e.c)?;
    if !forward {
        if data.max_abs_r() > 0.0 {
            return Err(MtmError::invalid("backward dressing is only modelled for reflectionless data"));
        }
        let b: C64 = set.iter().map(|&l| (e.lambda - l.conj()) / (e.lambda - l)).product();
        let b0: C64 = set.iter().map(|&l| l.conj() / l).product();
        return Ok(DressedSoliton {
            params,
            dressed_c: e.c / (b * b),
            delta_zero: b0,
        });
    }
    let d = DeltaFunction::new(data, &set, e.lambda.norm(), opts.panel_order)?;
    let dl = d.delta(e.lambda)?;
    Ok(DressedSoliton {
        params,
        dressed_c: e.c / (dl * dl),
        delta_zero: d.delta_at_zero()?,
    })
}

/// Leading-order radiation at `(x, t)` in `frame`.
pub fn radiation(x: f64, t: f64, data: &ScatteringData, frame: &AsymptoticFrame) -> Result<(C64, C64)> {
    AsymptoticSolver::new(data, AsymptoticOptions::default())?.radiation(x, t, frame)
}

/// Leading-order solution at `(x, t)`.
pub fn asymptotic_solution(x: f64, t: f64, data: &ScatteringData) -> Result<(C64, C64)> {
    AsymptoticSolver::new(data, AsymptoticOptions::default())?.solution(x, t)
}

/// Phase `θ̃` at the stationary point, `2τ` for `|x| < t`.
pub fn stationary_phase(x: f64, t: f64) -> Result<f64> {
    let (z0, _) = stationary_point(x, t)?;
    Ok(theta(C64::new(z0, 0.0), x, t).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::{c, SpectralGrid};
    use crate::solitons::reflectionless_reconstruct;
    use proptest::prelude::*;

    fn smooth_r(l: f64) -> C64 {
        let y = l.abs().ln();
        C64::from_polar(0.3 * (-y * y / 4.0).exp(), 0.7 * l)
    }

    fn data_from(f: impl Fn(f64) -> C64, eigen: Vec<Eigenpair>) -> ScatteringData {
        let grid = SpectralGrid::log_uniform(1e-4, 1e4, 256).unwrap();
        let r = grid.nodes().iter().map(|&l| f(l)).collect();
        ScatteringData::new(grid, r, eigen).unwrap()
    }

    /// Independent reference: trapezoid rule on a uniform mesh of the cut.
    fn chi_reference(data: &ScatteringData, lam: C64, z0: f64) -> C64 {
        let n = 400_000;
        let h = 2.0 * z0 / n as f64;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..=n {
            let s = -z0 + k as f64 * h;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            let f = (s * data.r_at(s).norm_sqr()).ln_1p();
            let d = C64::new(s, 0.0) - lam;
            if d.norm() > 0.0 {
                acc += f * w * h / d;
            }
        }
        acc / (2.0 * PI * I)
    }

    #[test]
    fn classify_examples() {
        let e = Eigenpair {
            lambda: c(0.3, 0.5),
            c: c(1.0, 0.0),
        };
        let data = data_from(|_| c(0.0, 0.0), vec![e]);
        let v1 = velocity(e.lambda);
        assert_eq!(classify(0.0, 50.0, &data).unwrap().region, Region::InteriorRadiation);
        assert_eq!(classify(100.0, 50.0, &data).unwrap().region, Region::Exterior);
        assert_eq!(classify(v1 * 50.0, 50.0, &data).unwrap().region, Region::SolitonFrame(0));
        assert_eq!(classify(-45.0, 50.0, &data).unwrap().region, Region::NearConeMinus);
        assert_eq!(classify(45.0, 50.0, &data).unwrap().region, Region::NearConePlus);
        assert!(classify(0.0, 0.0, &data).is_err());
        let f = classify(0.0, 50.0, &data).unwrap();
        assert!((f.z0 - 1.0).abs() < 1e-15 && (f.tau - 25.0).abs() < 1e-12);
    }

    #[test]
    fn classification_boundaries() {
        let data = data_from(|_| c(0.0, 0.0), vec![]);
        let t = 100.0;
        assert_eq!(classify(t * (1.0 + 1e-12), t, &data).unwrap().region, Region::Exterior);
        assert_eq!(classify(t * (1.0 - 1e-12), t, &data).unwrap().region, Region::NearConePlus);
        assert_eq!(classify(t, t, &data).unwrap().region, Region::NearConePlus);
        let edge = t - 20.0;
        assert_eq!(classify(edge + 1e-12 * t, t, &data).unwrap().region, Region::NearConePlus);
        assert_eq!(classify(edge - 1e-12 * t, t, &data).unwrap().region, Region::InteriorRadiation);
    }

    #[test]
    fn stationary_phase_is_two_tau() {
        for &(x, t) in &[(0.0, 30.0), (12.0, 40.0), (-70.0, 100.0)] {
            let (_, tau) = stationary_point(x, t).unwrap();
            assert!((stationary_phase(x, t).unwrap() - 2.0 * tau).abs() < 1e-12 * t);
        }
    }

    #[test]
    fn kappa_examples() {
        let zero = data_from(|_| c(0.0, 0.0), vec![]);
        assert_eq!(kappa(&zero, 0.7).unwrap(), (0.0, 0.0));
        let a = ((2.0 * PI).exp() - 1.0).sqrt();
        let one_sided = data_from(|l| if l > 0.0 { c(a, 0.0) } else { c(0.0, 0.0) }, vec![]);
        assert!((kappa(&one_sided, 1.0).unwrap().0 - 1.0).abs() < 1e-12);
        let small = data_from(|l| if l < 0.0 { c(1e-3, 2e-3) } else { c(0.0, 0.0) }, vec![]);
        let z0 = 0.8;
        let km = kappa(&small, z0).unwrap().1;
        let taylor = -z0 * 5e-6 / (2.0 * PI);
        assert!((km - taylor).abs() < 1e-3 * taylor.abs());
    }

    #[test]
    fn chi_matches_reference_quadrature() {
        let data = data_from(smooth_r, vec![]);
        let z0 = 0.73;
        let d = DeltaFunction::new(&data, &[], z0, 8).unwrap();
        for lam in [c(0.3, 0.5), c(-0.2, 0.05), c(1.5, 0.0), c(0.1, -0.8)] {
            let got = d.chi(lam).unwrap();
            let want = chi_reference(&data, lam, z0);
            assert!((got - want).norm() < 1e-8, "{lam}: {got} vs {want}");
        }
        let got = d.chi_pv(0.0).unwrap();
        let want = chi_reference(&data, c(0.0, 0.0), z0);
        assert!((got - want).norm() < 1e-8, "chi(0): {got} vs {want}");
        assert!(got.re.abs() < 1e-14);
        assert!(chi(&data, c(z0, 0.0), z0).is_err());
    }

    #[test]
    fn chi_vanishes_for_zero_data() {
        let data = data_from(|_| c(0.0, 0.0), vec![]);
        assert_eq!(chi(&data, c(0.2, 0.3), 0.6).unwrap(), c(0.0, 0.0));
        assert_eq!(delta_fn(&data, &[], c(0.2, 0.3), 0.6).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn chi_decays_like_inverse_distance() {
        let data = data_from(smooth_r, vec![]);
        let z0 = 1.2;
        let d = DeltaFunction::new(&data, &[], z0, 8).unwrap();
        // |χ(iy)| ≤ ∫|log(1 + s|r|²)| ds / (2π y)
        let bound: f64 = (0..=20_000)
            .map(|k| {
                let s = -z0 + 2.0 * z0 * k as f64 / 20_000.0;
                (s * data.r_at(s).norm_sqr()).ln_1p().abs() * 2.0 * z0 / 20_000.0
            })
            .sum::<f64>()
            / (2.0 * PI);
        for y in [1e2, 1e3, 1e4] {
            assert!(d.chi(c(0.0, y)).unwrap().norm() <= 1.01 * bound / y);
        }
    }

    #[test]
    fn delta_jump_and_normalisation() {
        let data = data_from(smooth_r, vec![]);
        let z0 = 0.9;
        let d = DeltaFunction::new(&data, &[], z0, 8).unwrap();
        for k in 0..20 {
            let x = -z0 + 2.0 * z0 * (k as f64 + 0.5) / 20.0;
            let ratio = d.delta(c(x, 1e-9)).unwrap() / d.delta(c(x, -1e-9)).unwrap();
            let want = 1.0 + x * data.r_at(x).norm_sqr();
            assert!((ratio - want).norm() < 1e-6, "x = {x}: {ratio} vs {want}");
            let b = d.delta_boundary(x, true).unwrap() / d.delta_boundary(x, false).unwrap();
            assert!((b - want).norm() < 1e-12);
        }
        for phi in [0.3, 1.5, 2.8, -1.0] {
            assert!((d.delta(C64::from_polar(1e3, phi)).unwrap() - 1.0).norm() < 1e-6);
        }
    }

    #[test]
    fn delta_local_behaviour_at_endpoints() {
        let data = data_from(smooth_r, vec![]);
        let z0 = 0.8;
        let d = DeltaFunction::new(&data, &[c(0.2, 0.4)], z0, 8).unwrap();
        let (kp, km) = (d.kappa_plus(), d.kappa_minus());
        let (dp, dm) = (d.local_plus().unwrap(), d.local_minus().unwrap());
        let mut last = (f64::INFINITY, f64::INFINITY);
        for eps in [1e-2, 1e-4, 1e-6] {
            let lam = z0 + C64::from_polar(eps, 1.0);
            let ep = (d.delta(lam).unwrap() - (lam - z0).powc(c(0.0, -kp)) * dp).norm();
            let lam = -z0 + C64::from_polar(eps, 2.0);
            let em = (d.delta(lam).unwrap() - (-lam - z0).powc(c(0.0, km)) * dm).norm();
            assert!(ep < 10.0 * eps.sqrt() && em < 10.0 * eps.sqrt());
            assert!(ep < last.0 && em < last.1);
            last = (ep, em);
        }
        assert!(last.0 < 1e-4 && last.1 < 1e-4);
    }

    #[test]
    fn pc_residue_matches_high_precision_values() {
        // parabolic-cylinder solutions evaluated at 30 digits
        let cases = [
            (
                c(0.3, 0.2),
                c(0.6, -0.4),
                c(0.02941072450385873, 0.1323869165856544),
                c(-0.05882144900771746, 0.2647738331713088),
            ),
            (
                c(-0.5, 0.1),
                c(0.4, 0.08),
                c(-0.17661661971632814, -0.12328430330711855),
                c(-0.14129329577306252, 0.09862744264569484),
            ),
            (
                c(0.1, -0.4),
                c(0.05, 0.2),
                c(0.13755555450038742, -0.08394156181847102),
                c(-0.06877777725019371, -0.04197078090923551),
            ),
        ];
        for (p, q, b12, b21) in cases {
            let m = pc_residue(p, q).unwrap();
            assert!((m[(0, 1)] - I * b12).norm() < 1e-12);
            assert!((m[(1, 0)] + I * b21).norm() < 1e-12);
            assert_eq!(m[(0, 0)], c(0.0, 0.0));
        }
    }

    #[test]
    fn pc_residue_linear_limit_is_fresnel() {
        // triangular jumps: m = I + Cauchy transform of p e^{iζ²/2} or q e^{−iζ²/2}
        let p = c(0.3, -0.7);
        let fresnel_plus = C64::from_polar((2.0 * PI).sqrt(), PI / 4.0);
        let m = pc_residue(p, c(0.0, 0.0)).unwrap();
        assert!((m[(0, 1)] + p * fresnel_plus / (2.0 * PI * I)).norm() < 1e-15);
        assert_eq!(m[(1, 0)], c(0.0, 0.0));
        let m = pc_residue(c(0.0, 0.0), p).unwrap();
        assert!((m[(1, 0)] + p * fresnel_plus.conj() / (2.0 * PI * I)).norm() < 1e-15);
        assert!(pc_residue(c(1.0, 0.0), c(-2.0, 0.0)).is_err());
    }

    #[test]
    fn printed_beta_identities() {
        let z0 = 0.6;
        let r0 = c(0.4, -0.3);
        let kp = (z0 * r0.norm_sqr()).ln_1p() / (2.0 * PI);
        let (b12, b21) = printed_beta(r0, kp).unwrap();
        assert!((b12.norm_sqr() * (1.0 + z0 * r0.norm_sqr()) - kp * z0).abs() < 1e-12);
        assert!((b12 * b21 - kp).norm() < 1e-14);
        assert_eq!(printed_beta(c(0.0, 0.0), 0.0).unwrap(), (c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn pc_model_for_zero_data() {
        let data = data_from(|_| c(0.0, 0.0), vec![]);
        let m = pc_model(&data, 0.7, 30.0, &[]).unwrap();
        assert_eq!(m.beta_b12, c(0.0, 0.0));
        assert_eq!(m.beta_a21, c(0.0, 0.0));
        assert!((m.delta_a0.norm() - 1.0).abs() < 1e-15 && (m.delta_b0.norm() - 1.0).abs() < 1e-15);
        assert_eq!(m.m1_plus, Mat2::zeros());
    }

    #[test]
    fn zero_data_gives_zero_everywhere() {
        let data = data_from(|_| c(0.0, 0.0), vec![]);
        let solver = AsymptoticSolver::new(&data, AsymptoticOptions::default()).unwrap();
        for x in [-30.0, 0.0, 15.0, 45.0, 80.0] {
            let (u, v) = solver.solution(x, 50.0).unwrap();
            assert_eq!((u, v), (c(0.0, 0.0), c(0.0, 0.0)));
        }
    }

    #[test]
    fn one_sided_radiation_scales_exactly() {
        let data = data_from(|l| if l > 0.0 { smooth_r(l) } else { c(0.0, 0.0) }, vec![]);
        let solver = AsymptoticSolver::new(&data, AsymptoticOptions::default()).unwrap();
        let v = 0.3;
        for t in [40.0, 75.0] {
            let f1 = solver.classify(v * t, t).unwrap();
            let f4 = solver.classify(v * 4.0 * t, 4.0 * t).unwrap();
            let (u1, v1) = solver.radiation(v * t, t, &f1).unwrap();
            let (u4, v4) = solver.radiation(v * 4.0 * t, 4.0 * t, &f4).unwrap();
            assert!((u4.norm() / u1.norm() - 0.5).abs() < 1e-10);
            assert!((v4.norm() / v1.norm() - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn soliton_frame_without_radiation_is_the_soliton() {
        let e = Eigenpair {
            lambda: c(0.5, 0.6),
            c: c(0.7, -0.2),
        };
        let data = data_from(|_| c(0.0, 0.0), vec![e]);
        let solver = AsymptoticSolver::new(&data, AsymptoticOptions::default()).unwrap();
        let t = 40.0;
        let x0 = velocity(e.lambda) * t;
        for dx in [-2.0, 0.0, 1.5] {
            let frame = solver.classify(x0 + dx, t).unwrap();
            assert_eq!(frame.region, Region::SolitonFrame(0));
            let (ur, vr) = solver.radiation(x0 + dx, t, &frame).unwrap();
            assert!(ur.norm() < 1e-15 && vr.norm() < 1e-15);
            let (u, v) = solver.solution(x0 + dx, t).unwrap();
            let (ue, ve) = reflectionless_reconstruct(&[e], x0 + dx, t).unwrap();
            assert!((u - ue).norm() < 1e-13 && (v - ve).norm() < 1e-13);
        }
    }

    #[test]
    fn two_solitons_decouple_into_dressed_solitons() {
        let eig = vec![
            Eigenpair {
                lambda: c(0.3, 0.4),
                c: c(1.0, 0.5),
            },
            Eigenpair {
                lambda: c(0.9, 0.8),
                c: c(-0.4, 0.3),
            },
        ];
        let data = data_from(|_| c(0.0, 0.0), eig.clone());
        let solver = AsymptoticSolver::new(&data, AsymptoticOptions::default()).unwrap();
        let t = 100.0;
        for e in &eig {
            let x0 = velocity(e.lambda) * t;
            for dx in [-3.0, 0.0, 2.0] {
                let (u, v) = solver.solution(x0 + dx, t).unwrap();
                let (ue, ve) = reflectionless_reconstruct(&eig, x0 + dx, t).unwrap();
                assert!((u - ue).norm() < 1e-8 && (v - ve).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn soliton_matrix_is_unimodular() {
        let e = Eigenpair {
            lambda: c(0.4, 0.9),
            c: c(0.3, 1.1),
        };
        let sys = DiscreteBCSystem::solve(&[e], 1.3, 2.0).unwrap();
        let m = SolitonMatrix::from_system(&sys, 0.8);
        for a in [m.at_zero, m.at_plus, m.at_minus] {
            assert!((crate::common::det2(&a) - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn time_floor_and_envelope() {
        let data = data_from(|_| c(0.0, 0.0), vec![]);
        let solver = AsymptoticSolver::new(&data, AsymptoticOptions::default()).unwrap();
        assert!(solver.solution(0.0, 10.0).is_err());
        let f = solver.classify(10.0, 100.0).unwrap();
        assert!((solver.error_envelope(&f, 100.0) - f.tau.powf(-0.75)).abs() < 1e-15);
        let f = solver.classify(300.0, 100.0).unwrap();
        assert_eq!(solver.error_envelope(&f, 100.0), 0.01);
    }

    proptest! {
        #[test]
        fn delta_reflection_symmetry(re in -2.0f64..2.0, im in 0.05f64..2.0, z0 in 0.2f64..1.5) {
            let data = data_from(smooth_r, vec![]);
            let d = DeltaFunction::new(&data, &[c(0.1, 0.3)], z0, 8).unwrap();
            let lam = c(re, im);
            let prod = d.delta(lam.conj()).unwrap() * d.delta(lam).unwrap().conj();
            prop_assert!((prod - 1.0).norm() < 1e-10);
        }

        #[test]
        fn printed_beta_modulus_identity(rr in -1.0f64..1.0, ri in -1.0f64..1.0, z0 in 0.05f64..3.0) {
            let r0 = c(rr, ri);
            let kp = (z0 * r0.norm_sqr()).ln_1p() / (2.0 * PI);
            let (b12, b21) = printed_beta(r0, kp).unwrap();
            prop_assert!((b12.norm_sqr() * (1.0 + z0 * r0.norm_sqr()) - kp * z0).abs() < 1e-10);
            prop_assert!((b12 * b21 - kp).norm() < 1e-10);
        }
    }
}
