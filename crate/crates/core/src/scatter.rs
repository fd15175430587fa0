//! Direct scattering: Jost solutions, scattering coefficients, reflection
//! coefficient, eigenvalues and norming constants.
//!
//! The Jost systems are written in the two gauges
//!
//! ```text
//! small:  m' = iJ[σ₃, m] + (Q₁ + λ Q₂) m
//! large:  m' = iJ[σ₃, m] + (Q̃₁ + λ⁻¹ Q̃₂) m
//! ```
//!
//! with `J = (λ − 1/λ)/4`. Both are integrated with a fourth-order Magnus
//! scheme on the field grid (coefficients interpolated by cubic Lagrange
//! polynomials), using the exact exponential of each trace-free step
//! generator. The small gauge is used for `|λ| < 1`, the large one
//! otherwise. Solutions are related by
//! `n_small = [[1, 0], [u − v/λ, 1/λ]] n_large diag(1, λ)`.

use crate::common::{big_j, c, det2, expm_traceless, mat2, Eigenpair, FieldState, Mat2, ScatteringData, SpectralGrid, C64};
use crate::error::{MtmError, Result};
use nalgebra::Vector2;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    Small,
    Large,
}

impl Gauge {
    /// Gauge used for a given spectral parameter.
    pub fn for_lambda(lambda: C64) -> Gauge {
        if lambda.norm() < 1.0 {
            Gauge::Small
        } else {
            Gauge::Large
        }
    }
}

/// Jost matrix sampled on the field grid.
#[derive(Clone, Debug)]
pub struct JostSolution {
    pub lambda: C64,
    pub side: Side,
    pub gauge: Gauge,
    pub x: Vec<f64>,
    pub m: Vec<Mat2>,
}

impl JostSolution {
    /// Largest deviation of `det m` from its boundary value.
    pub fn det_drift(&self) -> f64 {
        let d0 = match self.side {
            Side::Minus => det2(&self.m[0]),
            Side::Plus => det2(self.m.last().unwrap()),
        };
        self.m.iter().map(|m| (det2(m) - d0).norm()).fold(0.0, f64::max)
    }
}

/// Per-node coefficient matrices of both gauges.
#[derive(Clone, Debug)]
pub struct Potential {
    x0: f64,
    dx: f64,
    u: Vec<C64>,
    v: Vec<C64>,
    q1: Vec<Mat2>,
    q2: Vec<Mat2>,
    ql1: Vec<Mat2>,
    ql2: Vec<Mat2>,
}

/// Fourth-order central difference, lower order near the ends.
fn derivative(f: &[C64], dx: f64) -> Vec<C64> {
    let n = f.len();
    (0..n)
        .map(|k| {
            if k >= 2 && k + 2 < n {
                (f[k - 2] - f[k - 1] * 8.0 + f[k + 1] * 8.0 - f[k + 2]) / (12.0 * dx)
            } else if k >= 1 && k + 1 < n {
                (f[k + 1] - f[k - 1]) / (2.0 * dx)
            } else if k == 0 {
                (f[1] - f[0]) / dx
            } else {
                (f[n - 1] - f[n - 2]) / dx
            }
        })
        .collect()
}

impl Potential {
    pub fn new(state: &FieldState) -> Result<Self> {
        let g = state.grid;
        if g.n < 4 {
            return Err(MtmError::invalid("scattering needs at least four grid nodes"));
        }
        if state.u.iter().chain(state.v.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MtmError::invalid("non-finite field sample"));
        }
        let ux = derivative(&state.u, g.dx);
        let vx = derivative(&state.v, g.dx);
        let i = C64::new(0.0, 1.0);
        let h = 0.5 * i;
        let mut q1 = Vec::with_capacity(g.n);
        let mut q2 = Vec::with_capacity(g.n);
        let mut ql1 = Vec::with_capacity(g.n);
        let mut ql2 = Vec::with_capacity(g.n);
        for k in 0..g.n {
            let (u, v) = (state.u[k], state.v[k]);
            let (uu, vv) = (u.norm_sqr(), v.norm_sqr());
            let q = 0.25 * i * (uu + vv);
            q1.push(mat2(-q, h * u.conj(), ux[k] - h * vv * u - h * v, q));
            q2.push(mat2(h * u * v.conj(), -h * v.conj(), h * (u + u * u * v.conj()), -h * u * v.conj()));
            ql1.push(mat2(q, -h * v.conj(), vx[k] + h * uu * v + h * u, -q));
            ql2.push(mat2(-h * u.conj() * v, h * u.conj(), -h * (v + u.conj() * v * v), h * u.conj() * v));
        }
        Ok(Potential {
            x0: g.x0,
            dx: g.dx,
            u: state.u.clone(),
            v: state.v.clone(),
            q1,
            q2,
            ql1,
            ql2,
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    /// Node closest to `x = 0`, clamped into the grid.
    pub fn center(&self) -> usize {
        ((-self.x0 / self.dx).round().max(0.0) as usize).min(self.len() - 1)
    }

    /// Coefficient `Q(x)` (without the `iJσ₃` part) at fractional position
    /// `s ∈ [0, 1]` of interval `k`.
    fn coeff(&self, gauge: Gauge, lambda: C64, k: usize, s: f64) -> Mat2 {
        let n = self.len();
        let j0 = (k as isize - 1).clamp(0, n as isize - 4) as usize;
        let pos = (k - j0) as f64 + s;
        let (a, b, scale) = match gauge {
            Gauge::Small => (&self.q1, &self.q2, lambda),
            Gauge::Large => (&self.ql1, &self.ql2, lambda.inv()),
        };
        let mut out = Mat2::zeros();
        for p in 0..4 {
            let mut w = 1.0;
            for q in 0..4 {
                if p != q {
                    w *= (pos - q as f64) / (p as f64 - q as f64);
                }
            }
            out += (a[j0 + p] + b[j0 + p] * scale) * C64::new(w, 0.0);
        }
        out
    }

    /// Substeps per grid interval.
    fn substeps(&self, lambda: C64) -> usize {
        let hj = self.dx * big_j(lambda).norm();
        ((hj / 0.25).ceil() as usize).clamp(1, 16)
    }

    /// Magnus generator `Ω` for sub-interval `i` of `m` in grid interval `k`.
    fn omega(&self, gauge: Gauge, lambda: C64, jd: C64, k: usize, i: usize, m: usize) -> Mat2 {
        let h = self.dx / m as f64;
        let g = 3f64.sqrt() / 6.0;
        let s1 = (i as f64 + 0.5 - g) / m as f64;
        let s2 = (i as f64 + 0.5 + g) / m as f64;
        let mut a1 = self.coeff(gauge, lambda, k, s1);
        let mut a2 = self.coeff(gauge, lambda, k, s2);
        a1[(0, 0)] += jd;
        a1[(1, 1)] -= jd;
        a2[(0, 0)] += jd;
        a2[(1, 1)] -= jd;
        let comm = a2 * a1 - a1 * a2;
        (a1 + a2) * C64::new(0.5 * h, 0.0) + comm * C64::new(3f64.sqrt() / 12.0 * h * h, 0.0)
    }

    /// Propagator of `Ψ' = (iJσ₃ + Q)Ψ` over grid interval `k`.
    fn propagator(&self, gauge: Gauge, lambda: C64, k: usize) -> Mat2 {
        let jd = C64::new(0.0, 1.0) * big_j(lambda);
        let m = self.substeps(lambda);
        let mut u = Mat2::identity();
        for i in 0..m {
            u = expm_traceless(&self.omega(gauge, lambda, jd, k, i, m)) * u;
        }
        u
    }

    /// Inverse propagator of interval `k` (exact inverse of [`Self::propagator`]).
    fn propagator_inv(&self, gauge: Gauge, lambda: C64, k: usize) -> Mat2 {
        let jd = C64::new(0.0, 1.0) * big_j(lambda);
        let m = self.substeps(lambda);
        let mut u = Mat2::identity();
        for i in (0..m).rev() {
            u = expm_traceless(&(-self.omega(gauge, lambda, jd, k, i, m))) * u;
        }
        u
    }

    /// Gauge connection `G` with `n_small = G n_large diag(1, λ)` at node `k`.
    pub fn connection(&self, lambda: C64, k: usize) -> Mat2 {
        mat2(c(1.0, 0.0), c(0.0, 0.0), self.u[k] - self.v[k] / lambda, lambda.inv())
    }
}

/// Full Jost matrix on the grid, from the edge of `side`.
pub fn jost(state: &FieldState, lambda: C64, side: Side, gauge: Gauge) -> Result<JostSolution> {
    if lambda.norm() == 0.0 {
        return Err(MtmError::invalid("lambda = 0"));
    }
    let pot = Potential::new(state)?;
    Ok(jost_with(&pot, lambda, side, gauge))
}

/// [`jost`] with a prebuilt potential.
pub fn jost_with(pot: &Potential, lambda: C64, side: Side, gauge: Gauge) -> JostSolution {
    let n = pot.len();
    let jh = C64::new(0.0, 1.0) * big_j(lambda) * pot.dx;
    let (ep, em) = (jh.exp(), (-jh).exp());
    let mut m = vec![Mat2::identity(); n];
    match side {
        Side::Minus => {
            for k in 0..n - 1 {
                let mut next = pot.propagator(gauge, lambda, k) * m[k];
                // n(x + h) = U n(x) diag(e^{−iJh}, e^{iJh})
                let (c0, c1) = (next.column(0) * em, next.column(1) * ep);
                next.set_column(0, &c0);
                next.set_column(1, &c1);
                m[k + 1] = next;
            }
        }
        Side::Plus => {
            for k in (0..n - 1).rev() {
                let mut prev = pot.propagator_inv(gauge, lambda, k) * m[k + 1];
                let (c0, c1) = (prev.column(0) * ep, prev.column(1) * em);
                prev.set_column(0, &c0);
                prev.set_column(1, &c1);
                m[k] = prev;
            }
        }
    }
    JostSolution {
        lambda,
        side,
        gauge,
        x: (0..n).map(|k| pot.x(k)).collect(),
        m,
    }
}

/// One normalized Jost column, integrated from the edge of `side` to node
/// `stop`. `col` is 0 or 1.
fn column_to(pot: &Potential, lambda: C64, gauge: Gauge, side: Side, col: usize, stop: usize) -> Vector2<C64> {
    let n = pot.len();
    let jh = C64::new(0.0, 1.0) * big_j(lambda) * pot.dx;
    let mut w = if col == 0 {
        Vector2::new(c(1.0, 0.0), c(0.0, 0.0))
    } else {
        Vector2::new(c(0.0, 0.0), c(1.0, 0.0))
    };
    // column 0 carries e^{iJx}, column 1 carries e^{−iJx}
    let sgn = if col == 0 { 1.0 } else { -1.0 };
    match side {
        Side::Minus => {
            let f = (-jh * sgn).exp();
            for k in 0..stop {
                w = pot.propagator(gauge, lambda, k) * w * f;
            }
        }
        Side::Plus => {
            let f = (jh * sgn).exp();
            for k in (stop..n - 1).rev() {
                w = pot.propagator_inv(gauge, lambda, k) * w * f;
            }
        }
    }
    w
}

/// Column sampled at every node.
fn column_samples(pot: &Potential, lambda: C64, gauge: Gauge, side: Side, col: usize) -> Vec<Vector2<C64>> {
    let n = pot.len();
    let jh = C64::new(0.0, 1.0) * big_j(lambda) * pot.dx;
    let sgn = if col == 0 { 1.0 } else { -1.0 };
    let start = if col == 0 {
        Vector2::new(c(1.0, 0.0), c(0.0, 0.0))
    } else {
        Vector2::new(c(0.0, 0.0), c(1.0, 0.0))
    };
    let mut out = vec![start; n];
    match side {
        Side::Minus => {
            let f = (-jh * sgn).exp();
            for k in 0..n - 1 {
                out[k + 1] = pot.propagator(gauge, lambda, k) * out[k] * f;
            }
        }
        Side::Plus => {
            let f = (jh * sgn).exp();
            for k in (0..n - 1).rev() {
                out[k] = pot.propagator_inv(gauge, lambda, k) * out[k + 1] * f;
            }
        }
    }
    out
}

fn det_cols(a: &Vector2<C64>, b: &Vector2<C64>) -> C64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Scattering matrix `S` with `n⁺ e^{iJxσ₃} = n⁻ e^{iJxσ₃} S`, in the given
/// gauge, for real `λ`.
pub fn scattering_matrix(pot: &Potential, lambda: f64, gauge: Gauge) -> Mat2 {
    let l = c(lambda, 0.0);
    let k = pot.center();
    let x = pot.x(k);
    let p1 = column_to(pot, l, gauge, Side::Plus, 0, k);
    let p2 = column_to(pot, l, gauge, Side::Plus, 1, k);
    let m1 = column_to(pot, l, gauge, Side::Minus, 0, k);
    let m2 = column_to(pot, l, gauge, Side::Minus, 1, k);
    let e = (C64::new(0.0, 2.0) * big_j(l) * x).exp();
    let s11 = det_cols(&p1, &m2);
    let s12 = det_cols(&p2, &m2) / e;
    let s21 = det_cols(&m1, &p1) * e;
    let s22 = det_cols(&m1, &p2);
    mat2(s11, s12, s21, s22) / det_cols(&m1, &m2)
}

/// `(α, β̃)` at real `λ ≠ 0`.
pub fn scattering_coeffs(state: &FieldState, lambda: f64) -> Result<(C64, C64)> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(MtmError::invalid("lambda must be finite and nonzero"));
    }
    let pot = Potential::new(state)?;
    Ok(coeffs_with(&pot, lambda))
}

/// [`scattering_coeffs`] with a prebuilt potential.
pub fn coeffs_with(pot: &Potential, lambda: f64) -> (C64, C64) {
    let gauge = Gauge::for_lambda(c(lambda, 0.0));
    let s = scattering_matrix(pot, lambda, gauge);
    match gauge {
        Gauge::Small => (s[(0, 0)], s[(0, 1)] / lambda),
        Gauge::Large => (s[(0, 0)], s[(0, 1)]),
    }
}

/// `α(λ)` for `λ` in the closed upper half plane.
pub fn alpha_with(pot: &Potential, lambda: C64) -> C64 {
    let gauge = Gauge::for_lambda(lambda);
    let k = pot.center();
    let p1 = column_to(pot, lambda, gauge, Side::Plus, 0, k);
    let m2 = column_to(pot, lambda, gauge, Side::Minus, 1, k);
    det_cols(&p1, &m2)
}

/// Tunables for the direct map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterOptions {
    /// `|α|` below this on the real line is reported as near-resonance.
    pub genericity_floor: f64,
    /// Newton stopping threshold on `|α|`.
    pub newton_tol: f64,
    /// Height of the excluded strip above the real axis.
    pub strip: f64,
    /// Maximum box subdivision depth.
    pub max_depth: usize,
    /// Largest accepted relative spread of the norming-constant ratio.
    pub ratio_tol: f64,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        ScatterOptions {
            genericity_floor: 1e-6,
            newton_tol: 1e-11,
            strip: 1e-2,
            max_depth: 10,
            ratio_tol: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterDiagnostics {
    pub lambda: Vec<f64>,
    pub unitarity_residual: Vec<f64>,
    pub abs_alpha: Vec<f64>,
    /// `α` at the node of smallest `|λ|` (positive branch).
    pub alpha0: C64,
    /// `α` at the node of largest `|λ|` (positive branch).
    pub alpha_inf: C64,
}

impl ScatterDiagnostics {
    pub fn max_unitarity(&self) -> f64 {
        self.unitarity_residual.iter().copied().fold(0.0, f64::max)
    }

    pub fn limit_product_residual(&self) -> f64 {
        (self.alpha0 * self.alpha_inf - 1.0).norm()
    }

    pub fn to_csv(&self) -> String {
        use crate::io::fmt_g17;
        let rows: Vec<Vec<String>> = (0..self.lambda.len())
            .map(|i| vec![fmt_g17(self.lambda[i]), fmt_g17(self.unitarity_residual[i]), fmt_g17(self.abs_alpha[i])])
            .collect();
        crate::io::render_table(&["lambda", "unitarity_residual", "abs_alpha"], &rows)
    }
}

/// Continuous scattering data on `grid`, with diagnostics.
pub fn reflection(state: &FieldState, grid: &SpectralGrid, opts: &ScatterOptions) -> Result<(ScatteringData, ScatterDiagnostics)> {
    let pot = Potential::new(state)?;
    reflection_with(&pot, grid, opts)
}

pub fn reflection_with(pot: &Potential, grid: &SpectralGrid, opts: &ScatterOptions) -> Result<(ScatteringData, ScatterDiagnostics)> {
    let lambdas = grid.nodes().to_vec();
    let coeffs: Vec<(C64, C64)> = lambdas.par_iter().map(|&l| coeffs_with(pot, l)).collect();
    let mut r = Vec::with_capacity(lambdas.len());
    let mut alpha = Vec::with_capacity(lambdas.len());
    let mut unit = Vec::with_capacity(lambdas.len());
    let mut abs_alpha = Vec::with_capacity(lambdas.len());
    for (&l, &(a, b)) in lambdas.iter().zip(&coeffs) {
        if !(a.norm() >= opts.genericity_floor) {
            return Err(MtmError::numerical(format!(
                "near-resonance: |alpha({l})| = {:.3e} below floor {:.1e}",
                a.norm(),
                opts.genericity_floor
            )));
        }
        let rr = b / a;
        r.push(rr);
        alpha.push(a);
        unit.push((a.norm_sqr() * (1.0 + l * rr.norm_sqr()) - 1.0).abs());
        abs_alpha.push(a.norm());
    }
    let m = grid.half();
    let diag = ScatterDiagnostics {
        lambda: lambdas,
        unitarity_residual: unit,
        abs_alpha,
        alpha0: alpha[m],
        alpha_inf: alpha[2 * m - 1],
    };
    let mut sd = ScatteringData::new(grid.clone(), r, vec![])?;
    sd.alpha = Some(alpha);
    Ok((sd, diag))
}

/// Rectangle `[re_min, re_max] × [im_min, im_max]` in the upper half plane.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    /// Quarters at a slightly off-centre point, so that a zero at the
    /// centre of a symmetric box does not land on the new edges.
    fn split(&self) -> [SearchBox; 4] {
        const F: f64 = 0.4871;
        let rm = self.re_min + F * (self.re_max - self.re_min);
        let im = self.im_min + F * (self.im_max - self.im_min);
        [
            SearchBox {
                re_min: self.re_min,
                re_max: rm,
                im_min: self.im_min,
                im_max: im,
            },
            SearchBox {
                re_min: rm,
                re_max: self.re_max,
                im_min: self.im_min,
                im_max: im,
            },
            SearchBox {
                re_min: self.re_min,
                re_max: rm,
                im_min: im,
                im_max: self.im_max,
            },
            SearchBox {
                re_min: rm,
                re_max: self.re_max,
                im_min: im,
                im_max: self.im_max,
            },
        ]
    }

    fn contains(&self, z: C64, slack: f64) -> bool {
        z.re >= self.re_min - slack && z.re <= self.re_max + slack && z.im >= self.im_min - slack && z.im <= self.im_max + slack
    }

    fn center(&self) -> C64 {
        c(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    fn corners(&self) -> [C64; 4] {
        [
            c(self.re_min, self.im_min),
            c(self.re_max, self.im_min),
            c(self.re_max, self.im_max),
            c(self.re_min, self.im_max),
        ]
    }
}

/// Change of `arg f` along the segment `a → b`, refining until every
/// sample-to-sample step is below `π/4`.
fn arg_change(f: &dyn Fn(C64) -> C64, a: C64, b: C64, fa: C64, fb: C64, depth: usize) -> Result<f64> {
    let d = (fb / fa).arg();
    if d.abs() < std::f64::consts::FRAC_PI_4 && depth > 2 {
        return Ok(d);
    }
    if depth > 40 {
        return Err(MtmError::numerical("argument principle did not resolve an edge (zero on contour?)"));
    }
    let m = 0.5 * (a + b);
    let fm = f(m);
    if fm.norm() == 0.0 || !fm.re.is_finite() {
        return Err(MtmError::numerical("alpha vanishes or is not finite on a search contour"));
    }
    Ok(arg_change(f, a, m, fa, fm, depth + 1)? + arg_change(f, m, b, fm, fb, depth + 1)?)
}

/// Number of zeros of `f` inside `bx` by the argument principle.
pub fn winding_count(f: &dyn Fn(C64) -> C64, bx: &SearchBox) -> Result<i64> {
    let cs = bx.corners();
    let fs: Vec<C64> = cs.iter().map(|&z| f(z)).collect();
    let mut total = 0.0;
    for i in 0..4 {
        let j = (i + 1) % 4;
        total += arg_change(f, cs[i], cs[j], fs[i], fs[j], 0)?;
    }
    let w = total / (2.0 * std::f64::consts::PI);
    if (w - w.round()).abs() > 0.1 {
        return Err(MtmError::numerical(format!("non-integer winding number {w}")));
    }
    Ok(w.round() as i64)
}

/// Central-difference derivative with `h = 1e-6 (1 + |λ|)`.
pub fn derivative_at(f: &dyn Fn(C64) -> C64, z: C64) -> C64 {
    let h = 1e-6 * (1.0 + z.norm());
    (f(z + h) - f(z - h)) / (2.0 * h)
}

fn newton(f: &dyn Fn(C64) -> C64, z0: C64, tol: f64) -> Option<C64> {
    let mut z = z0;
    let mut best = (f64::INFINITY, z0);
    let mut stalled = 0;
    for _ in 0..60 {
        let fz = f(z);
        if fz.norm() < tol {
            return Some(z);
        }
        if fz.norm() < 0.5 * best.0 {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if fz.norm() < best.0 {
            best = (fz.norm(), z);
        }
        // the two gauges disagree at the 1e-10 level near |λ| = 1, which
        // can leave Newton cycling just above `tol`
        if stalled >= 3 {
            return (best.0 < 1e3 * tol).then_some(best.1);
        }
        let d = derivative_at(f, z);
        if d.norm() == 0.0 {
            return None;
        }
        z -= fz / d;
        if !z.re.is_finite() || z.im <= 0.0 {
            return None;
        }
    }
    None
}

/// Zeros of an analytic `f` in `bx` by subdivision plus Newton.
pub fn find_zeros(f: &(dyn Fn(C64) -> C64 + Sync), bx: &SearchBox, tol: f64, max_depth: usize) -> Result<Vec<C64>> {
    let total = winding_count(f, bx)?;
    let mut roots = Vec::new();
    search(f, bx, total, tol, 0, max_depth, &mut roots)?;
    if roots.len() as i64 != total {
        return Err(MtmError::numerical(format!(
            "argument principle counts {total} zeros but {} were refined",
            roots.len()
        )));
    }
    roots.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    Ok(roots)
}

fn search(f: &(dyn Fn(C64) -> C64 + Sync), bx: &SearchBox, count: i64, tol: f64, depth: usize, max_depth: usize, out: &mut Vec<C64>) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    if count < 0 {
        return Err(MtmError::numerical("negative zero count (pole inside the search box?)"));
    }
    if count == 1 {
        if let Some(z) = newton(f, bx.center(), tol) {
            let slack = 1e-9 * (1.0 + z.norm());
            if bx.contains(z, slack) && !out.iter().any(|w: &C64| (w - z).norm() < 1e-8) {
                out.push(z);
                return Ok(());
            }
        }
    }
    if depth >= max_depth {
        return Err(MtmError::numerical("eigenvalue search exceeded the subdivision limit"));
    }
    for sub in bx.split() {
        let k = winding_count(f, &sub)?;
        search(f, &sub, k, tol, depth + 1, max_depth, out)?;
    }
    Ok(())
}

/// Zeros of `α` inside `bx`.
pub fn find_eigenvalues(state: &FieldState, bx: &SearchBox, opts: &ScatterOptions) -> Result<Vec<C64>> {
    let pot = Potential::new(state)?;
    find_eigenvalues_with(&pot, bx, opts)
}

pub fn find_eigenvalues_with(pot: &Potential, bx: &SearchBox, opts: &ScatterOptions) -> Result<Vec<C64>> {
    if !(bx.re_max > bx.re_min && bx.im_max > bx.im_min) {
        return Err(MtmError::invalid("search box must have positive width and height"));
    }
    if bx.im_min < opts.strip {
        return Err(MtmError::invalid(format!("search box must stay above the strip Im lambda >= {}", opts.strip)));
    }
    if bx.re_min <= 0.0 && bx.re_max >= 0.0 && bx.im_min <= 0.0 {
        return Err(MtmError::invalid("search box must exclude lambda = 0"));
    }
    let f = |z: C64| alpha_with(pot, z);
    find_zeros(&f, bx, opts.newton_tol, opts.max_depth)
}

/// Norming constants `c̃ⱼ = 1/((bⱼζⱼ) α'(λⱼ))`.
pub fn norming_constants(state: &FieldState, eigenvalues: &[C64], opts: &ScatterOptions) -> Result<Vec<C64>> {
    let pot = Potential::new(state)?;
    norming_constants_with(&pot, eigenvalues, opts)
}

pub fn norming_constants_with(pot: &Potential, eigenvalues: &[C64], opts: &ScatterOptions) -> Result<Vec<C64>> {
    if eigenvalues.is_empty() {
        return Err(MtmError::invalid("no eigenvalues given"));
    }
    let n = pot.len();
    eigenvalues
        .iter()
        .map(|&lj| {
            if !(lj.im > 0.0) {
                return Err(MtmError::invalid("eigenvalues must lie in the upper half plane"));
            }
            let gauge = Gauge::for_lambda(lj);
            let p1 = column_samples(pot, lj, gauge, Side::Plus, 0);
            let m2 = column_samples(pot, lj, gauge, Side::Minus, 1);
            let jj = big_j(lj);
            // n₁⁺ = b ζ n₂⁻ e^{−2iJx} (large gauge); the small gauge carries an extra 1/λ
            let (lo, hi) = (n / 4, 3 * n / 4);
            let mut num = C64::new(0.0, 0.0);
            let mut den = 0.0;
            let mut w2 = Vec::with_capacity(hi - lo);
            for k in lo..hi {
                let e = (C64::new(0.0, -2.0) * jj * pot.x(k)).exp();
                let w = m2[k] * e;
                num += w[0].conj() * p1[k][0] + w[1].conj() * p1[k][1];
                den += w[0].norm_sqr() + w[1].norm_sqr();
                w2.push(w);
            }
            if !(den > 0.0) || !den.is_finite() {
                return Err(MtmError::numerical("norming-constant ratio is undefined"));
            }
            let ratio = num / den;
            let mut res = 0.0;
            let mut tot = 0.0;
            for (i, k) in (lo..hi).enumerate() {
                res += (p1[k] - w2[i] * ratio).norm_squared();
                tot += p1[k].norm_squared();
            }
            let spread = (res / tot).sqrt();
            if !(spread <= opts.ratio_tol) {
                return Err(MtmError::numerical(format!(
                    "norming ratio spread {spread:.3e} at lambda = {lj} (inaccurate eigenvalue?)"
                )));
            }
            let bz = match gauge {
                Gauge::Large => ratio,
                Gauge::Small => ratio * lj,
            };
            let f = |z: C64| alpha_with(pot, z);
            let da = derivative_at(&f, lj);
            if da.norm() < 1e-8 {
                return Err(MtmError::numerical("alpha' vanishes at an eigenvalue (non-simple zero)"));
            }
            Ok((bz * da).inv())
        })
        .collect()
}

/// Full scattering data: reflection coefficient plus the discrete spectrum
/// found in `boxes`.
pub fn scatter(state: &FieldState, grid: &SpectralGrid, boxes: &[SearchBox], opts: &ScatterOptions) -> Result<(ScatteringData, ScatterDiagnostics)> {
    let pot = Potential::new(state)?;
    let (mut sd, diag) = reflection_with(&pot, grid, opts)?;
    let mut eig = Vec::new();
    for bx in boxes {
        for z in find_eigenvalues_with(&pot, bx, opts)? {
            if !eig.iter().any(|w: &C64| (w - z).norm() < 1e-8) {
                eig.push(z);
            }
        }
    }
    if !eig.is_empty() {
        let cs = norming_constants_with(&pot, &eig, opts)?;
        sd.eigen = eig.iter().zip(cs).map(|(&lambda, c)| Eigenpair { lambda, c }).collect();
    }
    sd.validate()?;
    Ok((sd, diag))
}

/// Time evolution: `r̃, c̃ⱼ ↦ r̃, c̃ⱼ · e^{(i/2)(λ + 1/λ) dt}`.
pub fn evolve_scattering(data: &ScatteringData, dt: f64) -> ScatteringData {
    let phase = |l: C64| (C64::new(0.0, 0.5) * (l + l.inv()) * dt).exp();
    let mut out = data.clone();
    for (r, &l) in out.r.iter_mut().zip(data.grid.nodes()) {
        *r *= phase(c(l, 0.0));
    }
    for e in out.eigen.iter_mut() {
        e.c *= phase(e.lambda);
    }
    out.alpha = None;
    out
}
