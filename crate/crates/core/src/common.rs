//! Shared value types: spatial grids, sampled fields, spectral grids and
//! scattering data.

use crate::error::{MtmError, Result};
use nalgebra::Matrix2;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Default tolerance on boundary samples of a field.
pub const TAIL_TOL: f64 = 1e-10;

/// Uniform spatial grid `x0 + k dx`, `0 <= k < n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(MtmError::invalid("grid needs at least two nodes"));
        }
        if !(dx > 0.0) || !dx.is_finite() || !x0.is_finite() {
            return Err(MtmError::invalid("grid spacing must be positive and finite"));
        }
        Ok(Grid1D { x0, dx, n })
    }

    /// Grid covering `[x_min, x_max]` with spacing `dx` (the right end is
    /// rounded to the nearest whole step).
    pub fn span(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(MtmError::invalid("x_max must exceed x_min"));
        }
        let n = ((x_max - x_min) / dx).round() as usize + 1;
        Grid1D::new(x_min, dx, n)
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }
}

/// Complex fields `u`, `v` sampled on a uniform grid at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub grid: Grid1D,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub t: f64,
}

impl FieldState {
    pub fn new(grid: Grid1D, u: Vec<C64>, v: Vec<C64>, t: f64) -> Result<Self> {
        if u.len() != grid.n || v.len() != grid.n {
            return Err(MtmError::invalid("field length does not match grid"));
        }
        if u.iter().chain(v.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MtmError::invalid("non-finite field sample"));
        }
        Ok(FieldState { grid, u, v, t })
    }

    pub fn zeros(grid: Grid1D, t: f64) -> Self {
        FieldState {
            grid,
            u: vec![C64::new(0.0, 0.0); grid.n],
            v: vec![C64::new(0.0, 0.0); grid.n],
            t,
        }
    }

    /// Samples `f(x) -> (u, v)` on the grid.
    pub fn from_fn(grid: Grid1D, t: f64, f: impl Fn(f64) -> (C64, C64)) -> Self {
        let (u, v) = (0..grid.n).map(|k| f(grid.x(k))).unzip();
        FieldState { grid, u, v, t }
    }

    /// Trapezoid approximation of the charge `∫ |u|² + |v|² dx`.
    pub fn charge(&self) -> f64 {
        let n = self.grid.n;
        let dens = |k: usize| self.u[k].norm_sqr() + self.v[k].norm_sqr();
        let interior: f64 = (1..n - 1).map(dens).sum();
        self.grid.dx * (interior + 0.5 * (dens(0) + dens(n - 1)))
    }

    /// Largest modulus among the boundary samples of `u` and `v`.
    pub fn tail(&self) -> f64 {
        let n = self.grid.n;
        [self.u[0], self.u[n - 1], self.v[0], self.v[n - 1]]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Trapezoid charge of arbitrary sample arrays with spacing `dx`.
pub fn charge_of(u: &[C64], v: &[C64], dx: f64) -> f64 {
    let n = u.len();
    if n == 0 {
        return 0.0;
    }
    let dens = |k: usize| u[k].norm_sqr() + v[k].norm_sqr();
    let total: f64 = (0..n).map(dens).sum();
    dx * (total - 0.5 * (dens(0) + dens(n - 1)))
}

/// Symmetric spectral grid on `[-Λ, -λ_min] ∪ [λ_min, Λ]`.
///
/// Each half line carries `n/2` nodes uniform in `σ = ln|λ|`, so the
/// trapezoid weight of a node is `h |λ|`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralGrid {
    lambda: Vec<f64>,
    h: f64,
}

impl SpectralGrid {
    pub fn log_uniform(lambda_min: f64, lambda_max: f64, n: usize) -> Result<Self> {
        if !(lambda_min > 0.0 && lambda_max > lambda_min && lambda_max.is_finite()) {
            return Err(MtmError::invalid("spectral grid needs 0 < lambda_min < lambda_max"));
        }
        if n < 4 || n % 2 != 0 {
            return Err(MtmError::invalid("spectral grid node count must be even and at least 4"));
        }
        let m = n / 2;
        let (s0, s1) = (lambda_min.ln(), lambda_max.ln());
        let h = (s1 - s0) / (m - 1) as f64;
        let pos: Vec<f64> = (0..m).map(|j| (s0 + j as f64 * h).exp()).collect();
        let mut lambda: Vec<f64> = pos.iter().rev().map(|l| -l).collect();
        lambda.extend(pos);
        Ok(SpectralGrid { lambda, h })
    }

    /// Rebuilds a grid from its nodes, checking the log-uniform layout.
    pub fn from_nodes(lambda: Vec<f64>) -> Result<Self> {
        let n = lambda.len();
        if n < 4 || n % 2 != 0 {
            return Err(MtmError::invalid("spectral grid node count must be even and at least 4"));
        }
        if lambda.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MtmError::invalid("spectral grid must be strictly increasing"));
        }
        let m = n / 2;
        if !(lambda[m - 1] < 0.0 && lambda[m] > 0.0) {
            return Err(MtmError::invalid("spectral grid must be symmetric about 0 and exclude 0"));
        }
        for j in 0..m {
            let (a, b) = (lambda[m + j], -lambda[m - 1 - j]);
            if (a - b).abs() > 1e-12 * a.abs() {
                return Err(MtmError::invalid("spectral grid is not symmetric"));
            }
        }
        let h = (lambda[n - 1].ln() - lambda[m].ln()) / (m - 1) as f64;
        for j in 0..m - 1 {
            let step = lambda[m + j + 1].ln() - lambda[m + j].ln();
            if (step - h).abs() > 1e-9 * h.abs().max(1e-300) {
                return Err(MtmError::invalid("spectral grid must be uniform in ln|lambda|"));
            }
        }
        Ok(SpectralGrid { lambda, h })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Step in `ln|λ|`.
    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn half(&self) -> usize {
        self.lambda.len() / 2
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda[self.half()]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.lambda.last().unwrap()
    }

    /// Trapezoid weight of node `i` for `∫ f(λ) dλ` over its half line.
    pub fn weight(&self, i: usize) -> f64 {
        let m = self.half();
        let end = i == 0 || i == m - 1 || i == m || i == 2 * m - 1;
        self.h * self.lambda[i].abs() * if end { 0.5 } else { 1.0 }
    }

    /// Cubic interpolation in `ln|λ|` of grid samples at real `x`; zero
    /// outside the sampled range.
    pub fn interpolate(&self, f: &[C64], x: f64) -> C64 {
        let m = self.half();
        let zero = C64::new(0.0, 0.0);
        if x == 0.0 || !x.is_finite() {
            return zero;
        }
        let s = x.abs().ln();
        let s0 = self.lambda[m].ln();
        let pos = (s - s0) / self.h;
        if pos < -1e-9 || pos > (m - 1) as f64 + 1e-9 {
            return zero;
        }
        // index along the half line, j = 0 at |λ| = λ_min
        let node = |j: usize| if x > 0.0 { m + j } else { m - 1 - j };
        let j0 = (pos.floor() as isize - 1).clamp(0, m as isize - 4) as usize;
        let mut acc = zero;
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (pos - (j0 + b) as f64) / (a as f64 - b as f64);
                }
            }
            acc += f[node(j0 + a)] * w;
        }
        acc
    }
}

/// Eigenvalue `λⱼ ∈ ℂ⁺` with norming constant `c̃ⱼ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenpair {
    pub lambda: C64,
    pub c: C64,
}

/// Reflection coefficient samples plus discrete spectrum.
///
/// The data carry their own time origin: reconstruction at time `t` means
/// `t` units after the state the data were computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringData {
    pub grid: SpectralGrid,
    pub r: Vec<C64>,
    pub eigen: Vec<Eigenpair>,
    pub alpha: Option<Vec<C64>>,
}

impl ScatteringData {
    pub fn new(grid: SpectralGrid, r: Vec<C64>, eigen: Vec<Eigenpair>) -> Result<Self> {
        let sd = ScatteringData { grid, r, eigen, alpha: None };
        sd.validate()?;
        Ok(sd)
    }

    /// Reflectionless data on the given grid.
    pub fn reflectionless(grid: SpectralGrid, eigen: Vec<Eigenpair>) -> Result<Self> {
        let r = vec![C64::new(0.0, 0.0); grid.len()];
        ScatteringData::new(grid, r, eigen)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r.len() != self.grid.len() {
            return Err(MtmError::invalid("reflection samples do not match the spectral grid"));
        }
        for (l, r) in self.grid.nodes().iter().zip(&self.r) {
            if !r.re.is_finite() || !r.im.is_finite() {
                return Err(MtmError::invalid("non-finite reflection coefficient"));
            }
            if 1.0 + l * r.norm_sqr() <= 0.0 {
                return Err(MtmError::invalid(format!("1 + lambda |r|^2 <= 0 at lambda = {l}")));
            }
        }
        for (j, e) in self.eigen.iter().enumerate() {
            if !(e.lambda.im > 0.0) {
                return Err(MtmError::invalid("eigenvalues must lie in the upper half plane"));
            }
            if e.c.norm() == 0.0 || !e.c.re.is_finite() || !e.c.im.is_finite() {
                return Err(MtmError::invalid("norming constants must be finite and nonzero"));
            }
            for f in &self.eigen[..j] {
                if (f.lambda.norm() - e.lambda.norm()).abs() < 1e-12 {
                    return Err(MtmError::invalid("eigenvalue moduli must be distinct"));
                }
            }
        }
        Ok(())
    }

    /// `r̃` at an arbitrary real point by interpolation.
    pub fn r_at(&self, lambda: f64) -> C64 {
        self.grid.interpolate(&self.r, lambda)
    }

    pub fn max_abs_r(&self) -> f64 {
        self.r.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `J(λ) = (λ − 1/λ)/4`.
pub fn big_j(lambda: C64) -> C64 {
    (lambda - lambda.inv()) * 0.25
}

/// Phase `θ̃(λ; x, t) = ((λ − 1/λ) x + (λ + 1/λ) t) / 2`.
pub fn theta(lambda: C64, x: f64, t: f64) -> C64 {
    let li = lambda.inv();
    ((lambda - li) * x + (lambda + li) * t) * 0.5
}

/// Soliton velocity `(1 − ρ²)/(1 + ρ²)` for `ρ = |λ|`.
pub fn velocity(lambda: C64) -> f64 {
    let r2 = lambda.norm_sqr();
    (1.0 - r2) / (1.0 + r2)
}

/// Exact exponential of a trace-free 2×2 matrix.
pub fn expm_traceless(a: &Mat2) -> Mat2 {
    let mu2 = -(a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]);
    let mu = mu2.sqrt();
    let (ch, sh_over) = if mu.norm() < 1e-4 {
        // series keeps accuracy for small arguments
        (
            C64::new(1.0, 0.0) + mu2 * 0.5 + mu2 * mu2 / 24.0,
            C64::new(1.0, 0.0) + mu2 / 6.0 + mu2 * mu2 / 120.0,
        )
    } else {
        (mu.cosh(), mu.sinh() / mu)
    };
    Mat2::identity() * ch + a * sh_over
}

pub fn det2(m: &Mat2) -> C64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

pub fn mat2(a: C64, b: C64, c: C64, d: C64) -> Mat2 {
    Mat2::new(a, b, c, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_single_node() {
        assert!(Grid1D::new(0.0, 0.1, 1).is_err());
    }

    #[test]
    fn spectral_grid_roundtrip_and_symmetry() {
        let g = SpectralGrid::log_uniform(1e-3, 1e3, 64).unwrap();
        let n = g.len();
        for i in 0..n {
            assert_eq!(g.nodes()[i], -g.nodes()[n - 1 - i]);
        }
        let h = SpectralGrid::from_nodes(g.nodes().to_vec()).unwrap();
        assert!((h.step() - g.step()).abs() < 1e-12);
        let mut bad = g.nodes().to_vec();
        bad[40] *= 1.001;
        assert!(SpectralGrid::from_nodes(bad).is_err());
    }

    #[test]
    fn interpolation_is_exact_on_cubics_in_log() {
        let g = SpectralGrid::log_uniform(1e-2, 1e2, 80).unwrap();
        let f = |l: f64| {
            let s = l.abs().ln();
            C64::new(s * s * s - 2.0 * s, l.signum())
        };
        let vals: Vec<C64> = g.nodes().iter().map(|&l| f(l)).collect();
        for &x in &[0.0137, 0.5, 3.3, -0.77, -41.0] {
            assert!((g.interpolate(&vals, x) - f(x)).norm() < 1e-10);
        }
        assert_eq!(g.interpolate(&vals, 1e3), C64::new(0.0, 0.0));
    }

    #[test]
    fn expm_matches_series() {
        let a = mat2(c(0.3, 0.1), c(-0.2, 0.5), c(0.7, -0.4), c(-0.3, -0.1));
        let e = expm_traceless(&a);
        let mut term = Mat2::identity();
        let mut sum = Mat2::identity();
        for k in 1..30 {
            term = term * a / C64::new(k as f64, 0.0);
            sum += term;
        }
        assert!((e - sum).norm() < 1e-14);
        assert!((det2(&e) - 1.0).norm() < 1e-14);
    }

    #[test]
    fn charge_is_translation_invariant() {
        let g = Grid1D::new(-10.0, 0.05, 401).unwrap();
        let s = FieldState::from_fn(g, 0.0, |x| (c((-x * x).exp(), 0.0), c(0.0, (-(x - 1.0).powi(2)).exp())));
        let mut shifted = s.clone();
        shifted.u.rotate_right(7);
        shifted.v.rotate_right(7);
        assert!((s.charge() - shifted.charge()).abs() < 1e-14);
    }
}
