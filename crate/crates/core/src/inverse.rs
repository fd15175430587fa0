//! Inverse scattering through the Beals–Coifman equations.
//!
//! On the real line the row vector `ν = (ν₁₁, ν₁₂)` solves
//!
//! ```text
//! ν₁₁ = 1 + C⁺(−λ r̄ e^{−iθ} ν₁₂) + Σₖ λ̄ₖ βₖ/(λ̄ₖ − λ)
//! ν₁₂ =     C⁻(−r e^{iθ} ν₁₁)     − Σₖ αₖ/(λₖ − λ)
//! ```
//!
//! closed by the residue conditions at the eigenvalues, with the same
//! scaled pole unknowns as [`crate::solitons`]. Cauchy projections use
//! `C± = ±½ + H` with an odd-offset principal-value rule in `ln|λ|` on each
//! half line.

use crate::common::{theta, Eigenpair, ScatteringData, SpectralGrid, C64};
use crate::error::{MtmError, Result};
use crate::solitons::FLUSH;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Discrete Cauchy operator on a spectral grid.
#[derive(Clone, Debug)]
pub struct CauchyOperator {
    grid: SpectralGrid,
    /// `K` with `H f = K f / (2πi)`, row-major.
    k: Vec<f64>,
    weights: Vec<f64>,
}

impl CauchyOperator {
    pub fn new(grid: &SpectralGrid) -> Self {
        let n = grid.len();
        let m = grid.half();
        let lam = grid.nodes();
        let h = grid.step();
        let weights: Vec<f64> = (0..n).map(|i| grid.weight(i)).collect();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let same = (i < m) == (j < m);
                let w = if same {
                    if (i as isize - j as isize) % 2 == 0 {
                        continue;
                    }
                    2.0 * h * lam[j].abs()
                } else {
                    weights[j]
                };
                k[i * n + j] = w / (lam[j] - lam[i]);
            }
        }
        CauchyOperator {
            grid: grid.clone(),
            k,
            weights,
        }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// Principal-value part `H f`.
    pub fn hilbert(&self, f: &[C64]) -> Vec<C64> {
        let n = f.len();
        let s = C64::new(0.0, -1.0 / (2.0 * PI));
        (0..n)
            .map(|i| {
                let row = &self.k[i * n..(i + 1) * n];
                let mut acc = C64::new(0.0, 0.0);
                for (w, z) in row.iter().zip(f) {
                    acc += z * *w;
                }
                acc * s
            })
            .collect()
    }

    /// `C± f = ±f/2 + H f`.
    pub fn project(&self, f: &[C64], plus: bool) -> Vec<C64> {
        let sgn = if plus { 0.5 } else { -0.5 };
        self.hilbert(f).iter().zip(f).map(|(h, z)| h + z * sgn).collect()
    }

    /// `(1/2πi) ∫ f(s)/(s − z) ds` for `z` off the real line (trapezoid).
    pub fn cauchy_at(&self, f: &[C64], z: C64) -> C64 {
        let lam = self.grid.nodes();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..f.len() {
            acc += f[i] * self.weights[i] / (lam[i] - z);
        }
        acc / C64::new(0.0, 2.0 * PI)
    }

    /// `∫ f(s) ds` (trapezoid).
    pub fn integral(&self, f: &[C64]) -> C64 {
        f.iter().zip(&self.weights).map(|(z, w)| z * *w).sum()
    }
}

/// `C± f` on the grid.
pub fn cauchy_projection(grid: &SpectralGrid, f: &[C64], plus: bool) -> Vec<C64> {
    CauchyOperator::new(grid).project(f, plus)
}

/// Restarted GMRES for `A x = b`. Returns the solution and the final
/// relative residual.
pub fn gmres(apply: &dyn Fn(&[C64]) -> Vec<C64>, b: &[C64], tol: f64, restart: usize, max_iter: usize) -> (Vec<C64>, f64) {
    let n = b.len();
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let bnorm = norm(b).max(1e-300);
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut iters = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        if beta / bnorm <= tol || iters >= max_iter {
            return (x, beta / bnorm);
        }
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut hess: Vec<Vec<C64>> = Vec::new();
        let mut cs: Vec<(C64, C64)> = Vec::new();
        let mut g = vec![C64::new(beta, 0.0)];
        let mut k_used = 0;
        for k in 0..restart {
            iters += 1;
            let mut w = apply(&basis[k]);
            let mut hcol = vec![C64::new(0.0, 0.0); k + 2];
            // modified Gram-Schmidt
            for (j, q) in basis.iter().enumerate() {
                let hj: C64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                hcol[j] = hj;
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= hj * qi;
                }
            }
            let hn = norm(&w);
            hcol[k + 1] = C64::new(hn, 0.0);
            for (j, &(c, s)) in cs.iter().enumerate() {
                let (a, b) = (hcol[j], hcol[j + 1]);
                hcol[j] = c.conj() * a + s.conj() * b;
                hcol[j + 1] = -s * a + c * b;
            }
            let (a, b) = (hcol[k], hcol[k + 1]);
            let d = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if d == 0.0 { (C64::new(1.0, 0.0), C64::new(0.0, 0.0)) } else { (a / d, b / d) };
            hcol[k] = C64::new(d, 0.0);
            hcol[k + 1] = C64::new(0.0, 0.0);
            cs.push((c, s));
            let gk = g[k];
            g[k] = c.conj() * gk;
            g.push(-s * gk);
            hess.push(hcol);
            k_used = k + 1;
            let res = g[k + 1].norm() / bnorm;
            if res <= tol || hn == 0.0 || iters >= max_iter {
                break;
            }
            basis.push(w.iter().map(|z| z / hn).collect());
        }
        // back substitution on the triangular system
        let mut y = vec![C64::new(0.0, 0.0); k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in i + 1..k_used {
                acc -= hess[j][i] * y[j];
            }
            y[i] = acc / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, qi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * qi;
            }
        }
    }
}

/// Solver state reused across evaluation points for one data set.
#[derive(Clone, Debug)]
pub struct InverseSolver {
    data: ScatteringData,
    cauchy: CauchyOperator,
    pub tol: f64,
}

/// Solution of the discretized equations at one `(x, t)`.
#[derive(Clone, Debug)]
pub struct BealsCoifmanSolution {
    pub x: f64,
    pub t: f64,
    pub nu11: Vec<C64>,
    pub nu12: Vec<C64>,
    /// Scaled pole unknowns `(αⱼ, βⱼ)`.
    pub nu_at_poles: (Vec<C64>, Vec<C64>),
    pub residual: f64,
    g1: Vec<C64>,
    g2: Vec<C64>,
}

impl BealsCoifmanSolution {
    /// Deviation of `ν` from `(1, 0)` at the two extreme nodes of each half line.
    pub fn edge_deviation(&self) -> f64 {
        let n = self.nu11.len();
        [0, n / 2 - 1, n / 2, n - 1]
            .iter()
            .map(|&i| (self.nu11[i] - 1.0).norm().max(self.nu12[i].norm()))
            .fold(0.0, f64::max)
    }
}

/// Pole bookkeeping shared by assembly and reconstruction.
struct Poles {
    lambda: Vec<C64>,
    /// `(diag, coef, rhs)` per pole row after the overflow scaling.
    rows: Vec<(C64, C64, C64)>,
}

fn poles_at(eigen: &[Eigenpair], x: f64, t: f64) -> Poles {
    let one = C64::new(1.0, 0.0);
    let rows = eigen
        .iter()
        .map(|e| {
            let log_e = e.c.ln() + C64::new(0.0, 1.0) * theta(e.lambda, x, t);
            if log_e.re <= 0.0 {
                let ej = if log_e.re < -FLUSH { C64::new(0.0, 0.0) } else { log_e.exp() };
                (one, ej, ej)
            } else {
                let inv = if log_e.re > FLUSH { C64::new(0.0, 0.0) } else { (-log_e).exp() };
                (inv, one, one)
            }
        })
        .collect();
    Poles {
        lambda: eigen.iter().map(|e| e.lambda).collect(),
        rows,
    }
}

impl InverseSolver {
    pub fn new(data: &ScatteringData) -> Result<Self> {
        data.validate()?;
        Ok(InverseSolver {
            data: data.clone(),
            cauchy: CauchyOperator::new(&data.grid),
            tol: 1e-13,
        })
    }

    pub fn data(&self) -> &ScatteringData {
        &self.data
    }

    fn weights(&self, x: f64, t: f64) -> (Vec<C64>, Vec<C64>) {
        let lam = self.data.grid.nodes();
        let mut g1 = Vec::with_capacity(lam.len());
        let mut g2 = Vec::with_capacity(lam.len());
        for (&l, &r) in lam.iter().zip(&self.data.r) {
            let e = C64::from_polar(1.0, theta(C64::new(l, 0.0), x, t).re);
            g1.push(-r * e);
            g2.push(-r.conj() * e.conj() * l);
        }
        (g1, g2)
    }

    /// Applies the system operator to `(ν₁₁, ν₁₂, α, β)`.
    fn apply(&self, g1: &[C64], g2: &[C64], poles: &Poles, z: &[C64]) -> Vec<C64> {
        let n = g1.len();
        let np = poles.lambda.len();
        let lam = self.data.grid.nodes();
        let (nu11, rest) = z.split_at(n);
        let (nu12, rest) = rest.split_at(n);
        let (al, be) = rest.split_at(np);
        let f2: Vec<C64> = g2.iter().zip(nu12).map(|(a, b)| a * b).collect();
        let f1: Vec<C64> = g1.iter().zip(nu11).map(|(a, b)| a * b).collect();
        let cp = self.cauchy.project(&f2, true);
        let cm = self.cauchy.project(&f1, false);
        let mut out = Vec::with_capacity(z.len());
        for i in 0..n {
            let l = C64::new(lam[i], 0.0);
            let mut s = C64::new(0.0, 0.0);
            for k in 0..np {
                let lb = poles.lambda[k].conj();
                s += lb * be[k] / (lb - l);
            }
            out.push(nu11[i] - cp[i] - s);
        }
        for i in 0..n {
            let l = C64::new(lam[i], 0.0);
            let mut s = C64::new(0.0, 0.0);
            for k in 0..np {
                s += al[k] / (poles.lambda[k] - l);
            }
            out.push(nu12[i] - cm[i] + s);
        }
        for j in 0..np {
            let lj = poles.lambda[j];
            let (diag, coef, _) = poles.rows[j];
            let mut m11 = self.cauchy.cauchy_at(&f2, lj);
            for k in 0..np {
                let lb = poles.lambda[k].conj();
                m11 += lb * be[k] / (lb - lj);
            }
            out.push(diag * al[j] - coef * m11);
        }
        for j in 0..np {
            let lbj = poles.lambda[j].conj();
            let (diag, coef, _) = poles.rows[j];
            let mut m12 = self.cauchy.cauchy_at(&f1, lbj);
            for k in 0..np {
                m12 -= al[k] / (poles.lambda[k] - lbj);
            }
            out.push(diag.conj() * be[j] - coef.conj() * m12);
        }
        out
    }

    /// Solves the system at `(x, t)`; `t` is measured from the data's time
    /// origin.
    pub fn solve(&self, x: f64, t: f64) -> Result<BealsCoifmanSolution> {
        let n = self.data.grid.len();
        let np = self.data.eigen.len();
        let (g1, g2) = self.weights(x, t);
        let poles = poles_at(&self.data.eigen, x, t);
        let mut b = vec![C64::new(0.0, 0.0); 2 * n + 2 * np];
        for v in b.iter_mut().take(n) {
            *v = C64::new(1.0, 0.0);
        }
        for j in 0..np {
            b[2 * n + j] = poles.rows[j].2;
        }
        let op = |z: &[C64]| self.apply(&g1, &g2, &poles, z);
        let (mut z, mut res) = gmres(&op, &b, self.tol, 60, 600);
        if res > 1e3 * self.tol.max(1e-15) {
            if 2 * n + 2 * np <= 4096 {
                z = self.dense_solve(&op, &b)?;
                let az = op(&z);
                let bn = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                res = az.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt() / bn;
            } else {
                return Err(MtmError::numerical(format!("Beals-Coifman iteration stalled at residual {res:.3e}")));
            }
        }
        if !res.is_finite() || res > 1e-6 {
            return Err(MtmError::numerical(format!("Beals-Coifman solve failed (residual {res:.3e})")));
        }
        let nu11 = z[..n].to_vec();
        let nu12 = z[n..2 * n].to_vec();
        let al = z[2 * n..2 * n + np].to_vec();
        let be = z[2 * n + np..].to_vec();
        Ok(BealsCoifmanSolution {
            x,
            t,
            nu11,
            nu12,
            nu_at_poles: (al, be),
            residual: res,
            g1,
            g2,
        })
    }

    fn dense_solve(&self, op: &dyn Fn(&[C64]) -> Vec<C64>, b: &[C64]) -> Result<Vec<C64>> {
        let m = b.len();
        let mut a = DMatrix::<C64>::zeros(m, m);
        let mut e = vec![C64::new(0.0, 0.0); m];
        for j in 0..m {
            e[j] = C64::new(1.0, 0.0);
            let col = op(&e);
            for i in 0..m {
                a[(i, j)] = col[i];
            }
            e[j] = C64::new(0.0, 0.0);
        }
        a.lu()
            .solve(&DVector::from_column_slice(b))
            .map(|v| v.iter().copied().collect())
            .ok_or_else(|| MtmError::numerical("singular Beals-Coifman system"))
    }

    /// Field values from a solved system.
    pub fn reconstruct(&self, sol: &BealsCoifmanSolution) -> (C64, C64) {
        let lam = self.data.grid.nodes();
        let f1: Vec<C64> = sol.g1.iter().zip(&sol.nu11).map(|(a, b)| a * b).collect();
        let f2: Vec<C64> = sol.g2.iter().zip(&sol.nu12).map(|(a, b)| a * b).collect();
        let two_pi_i = C64::new(0.0, 2.0 * PI);
        // r̃/s → 0 at the origin, so z = 0 is evaluated directly
        let f1_over: Vec<C64> = f1.iter().zip(lam).map(|(f, &l)| f / l).collect();
        let f2_over: Vec<C64> = f2.iter().zip(lam).map(|(f, &l)| f / l).collect();
        let (al, be) = &sol.nu_at_poles;
        let lams: Vec<C64> = self.data.eigen.iter().map(|e| e.lambda).collect();
        let mut m12_0 = self.cauchy.integral(&f1_over) / two_pi_i;
        let mut moment = -self.cauchy.integral(&f1) / two_pi_i;
        let mut m11_0 = C64::new(1.0, 0.0) + self.cauchy.integral(&f2_over) / two_pi_i;
        for k in 0..lams.len() {
            m12_0 -= al[k] / lams[k];
            moment += al[k];
            m11_0 += be[k];
        }
        (m12_0.conj(), moment.conj() * m11_0)
    }

    /// `(u, v)` at `(x, t)`.
    pub fn field_at(&self, x: f64, t: f64) -> Result<(C64, C64)> {
        let sol = self.solve(x, t)?;
        Ok(self.reconstruct(&sol))
    }
}

/// Beals–Coifman solve at one point.
pub fn solve_beals_coifman(data: &ScatteringData, x: f64, t: f64, tol: f64) -> Result<BealsCoifmanSolution> {
    let mut s = InverseSolver::new(data)?;
    s.tol = tol;
    s.solve(x, t)
}

/// `(u, v)` from a solved system.
pub fn reconstruct_uv(sol: &BealsCoifmanSolution, data: &ScatteringData) -> Result<(C64, C64)> {
    let s = InverseSolver::new(data)?;
    Ok(s.reconstruct(sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::c;
    use crate::solitons::DiscreteBCSystem;

    #[test]
    fn plemelj_identity() {
        let g = SpectralGrid::log_uniform(1e-3, 1e3, 64).unwrap();
        let f: Vec<C64> = g.nodes().iter().map(|&l| c((-l * l).exp(), l.sin())).collect();
        let op = CauchyOperator::new(&g);
        let p = op.project(&f, true);
        let m = op.project(&f, false);
        for i in 0..f.len() {
            assert!((p[i] - m[i] - f[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn projections_of_rational_functions() {
        let g = SpectralGrid::log_uniform(1e-6, 1e5, 1600).unwrap();
        let op = CauchyOperator::new(&g);
        // 1/(λ + i) is analytic in the upper half plane, 1/(λ − i) in the lower
        let fu: Vec<C64> = g.nodes().iter().map(|&l| c(l, 1.0).inv()).collect();
        let fl: Vec<C64> = g.nodes().iter().map(|&l| c(l, -1.0).inv()).collect();
        let pu = op.project(&fu, true);
        let mu = op.project(&fu, false);
        let pl = op.project(&fl, true);
        let ml = op.project(&fl, false);
        let mut err: f64 = 0.0;
        for i in 0..fu.len() {
            let l = g.nodes()[i];
            if l.abs() > 1e-2 && l.abs() < 1e2 {
                err = err.max((pu[i] - fu[i]).norm()).max(mu[i].norm()).max(pl[i].norm()).max((ml[i] + fl[i]).norm());
            }
        }
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn zero_data_gives_trivial_solution() {
        let g = SpectralGrid::log_uniform(1e-2, 1e2, 32).unwrap();
        let sd = ScatteringData::reflectionless(g, vec![]).unwrap();
        let s = InverseSolver::new(&sd).unwrap();
        let sol = s.solve(0.3, 0.0).unwrap();
        assert!(sol.nu11.iter().all(|z| (z - 1.0).norm() < 1e-14));
        assert!(sol.nu12.iter().all(|z| z.norm() < 1e-14));
        assert_eq!(s.reconstruct(&sol), (c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn reflectionless_poles_match_discrete_system() {
        let g = SpectralGrid::log_uniform(1e-2, 1e2, 32).unwrap();
        let e = vec![Eigenpair {
            lambda: C64::from_polar(0.8, 1.0),
            c: c(0.7, 0.2),
        }];
        let sd = ScatteringData::reflectionless(g, e.clone()).unwrap();
        let sol = solve_beals_coifman(&sd, 0.4, 1.5, 1e-14).unwrap();
        let (a, b) = DiscreteBCSystem::solve(&e, 0.4, 1.5).unwrap().alpha_beta();
        assert!((sol.nu_at_poles.0[0] - a[0]).norm() < 1e-10);
        assert!((sol.nu_at_poles.1[0] - b[0]).norm() < 1e-10);
    }

    #[test]
    fn gmres_solves_small_system() {
        let a = [[c(4.0, 1.0), c(1.0, 0.0)], [c(0.5, -0.2), c(3.0, 0.0)]];
        let op = |x: &[C64]| vec![a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]];
        let b = [c(1.0, 0.0), c(0.0, 2.0)];
        let (x, res) = gmres(&op, &b, 1e-14, 10, 50);
        assert!(res < 1e-13);
        let ax = op(&x);
        assert!((ax[0] - b[0]).norm() < 1e-12 && (ax[1] - b[1]).norm() < 1e-12);
    }
}
