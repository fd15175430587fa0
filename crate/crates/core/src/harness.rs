//! Reproducible experiments that set direct simulation against scattering
//! and asymptotic predictions.
//!
//! Each experiment takes a serde config that also carries its pass/fail
//! thresholds and returns an [`ExperimentReport`]. Verdicts are computed
//! from the report rows and fits only. Reports are written as JSON, a
//! per-row CSV and gnuplot `.dat` files.
//!
//! Simulations are restricted to the backward light cone of the requested
//! samples: the scheme moves information exactly one node per step, so
//! cropping the state to that cone (and zero-padding up to the support of
//! compactly supported data) leaves the sampled values unchanged.

use crate::asymptotics::{AsymptoticOptions, AsymptoticSolver};
use crate::common::{c, velocity, Eigenpair, FieldState, Grid1D, ScatteringData, SpectralGrid, C64};
use crate::error::{MtmError, Result};
use crate::evolve::{evolve_to, EvolveConfig};
use crate::inverse::InverseSolver;
use crate::io::{fmt_g17, render_table, write_atomic};
use crate::scatter::{find_eigenvalues_with, reflection_with, scatter, Potential, ScatterOptions, SearchBox};
use crate::solitons::{reflectionless_reconstruct, SolitonParams};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub series: String,
    pub t: f64,
    /// Position, or velocity for ray-averaged series.
    pub x: f64,
    pub predicted: f64,
    pub observed: f64,
    pub abs_err: f64,
}

/// Least-squares line through `(ln t, ln observed)` of one series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub series: String,
    pub slope: f64,
    pub intercept: f64,
    /// 95% Student-t half-width of the slope.
    pub half_width: f64,
    /// RMS residual in log space.
    pub residual: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Verdict {
    pub fn between(name: &str, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let passed = value.is_finite() && lower.map_or(true, |l| value >= l) && upper.map_or(true, |u| value <= u);
        Verdict {
            name: name.into(),
            value,
            lower,
            upper,
            passed,
        }
    }

    pub fn at_most(name: &str, value: f64, upper: f64) -> Self {
        Verdict::between(name, value, None, Some(upper))
    }

    pub fn at_least(name: &str, value: f64, lower: f64) -> Self {
        Verdict::between(name, value, Some(lower), None)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: serde_json::Value,
    pub rows: Vec<ReportRow>,
    pub fits: Vec<Fit>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

impl ExperimentReport {
    fn new(name: &str, config: &impl Serialize) -> Result<Self> {
        Ok(ExperimentReport {
            name: name.into(),
            config: serde_json::to_value(config)?,
            rows: vec![],
            fits: vec![],
            verdicts: vec![],
            passed: false,
        })
    }

    fn row(&mut self, series: &str, t: f64, x: f64, predicted: f64, observed: f64, abs_err: f64) {
        self.rows.push(ReportRow {
            series: series.into(),
            t,
            x,
            predicted,
            observed,
            abs_err,
        });
    }

    fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
        self.passed = self.verdicts.iter().all(|v| v.passed);
    }

    pub fn series(&self, name: &str) -> impl Iterator<Item = &ReportRow> {
        let name = name.to_string();
        self.rows.iter().filter(move |r| r.series == name)
    }

    pub fn fit(&self, series: &str) -> Option<&Fit> {
        self.fits.iter().find(|f| f.series == series)
    }

    pub fn verdict_named(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    /// Largest `abs_err` of a series at time `t`.
    pub fn max_err_at(&self, series_prefix: &str, t: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.series.starts_with(series_prefix) && r.t == t)
            .map(|r| r.abs_err)
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn rows_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.series.clone(),
                    fmt_g17(r.t),
                    fmt_g17(r.x),
                    fmt_g17(r.predicted),
                    fmt_g17(r.observed),
                    fmt_g17(r.abs_err),
                ]
            })
            .collect();
        render_table(&["series", "t", "x", "predicted", "observed", "abs_err"], &rows)
    }

    /// One gnuplot block file per series: `t x predicted observed abs_err`.
    pub fn dat_files(&self) -> Vec<(String, String)> {
        let mut names: Vec<&str> = self.rows.iter().map(|r| r.series.as_str()).collect();
        names.dedup();
        names.sort_unstable();
        names.dedup();
        names
            .into_iter()
            .map(|s| {
                let mut text = format!("# {} {s}\n# t x predicted observed abs_err\n", self.name);
                for r in self.series(s) {
                    text.push_str(&format!(
                        "{} {} {} {} {}\n",
                        fmt_g17(r.t),
                        fmt_g17(r.x),
                        fmt_g17(r.predicted),
                        fmt_g17(r.observed),
                        fmt_g17(r.abs_err)
                    ));
                }
                (format!("{}_{}.dat", self.name, s), text)
            })
            .collect()
    }

    /// Writes `<name>.json`, `<name>_rows.csv` and the `.dat` files.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join(format!("{}.json", self.name)), self.to_json()?.as_bytes())?;
        write_atomic(&dir.join(format!("{}_rows.csv", self.name)), self.rows_csv().as_bytes())?;
        for (name, text) in self.dat_files() {
            write_atomic(&dir.join(name), text.as_bytes())?;
        }
        Ok(())
    }
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, 95% half-width of
/// b, rms residual)`.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let half = if xs.len() > 2 {
        let se = (ss / (n - 2.0) / sxx).sqrt();
        StudentsT::new(0.0, 1.0, n - 2.0).map(|d| d.inverse_cdf(0.975) * se).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    (b, a, half, (ss / n).sqrt())
}

/// Power-law fit of `observed` against `t` over rows of `series` above
/// `floor`.
fn power_fit(report: &ExperimentReport, series: &str, floor: f64) -> Option<Fit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = report
        .series(series)
        .filter(|r| r.observed > floor)
        .map(|r| (r.t.ln(), r.observed.ln()))
        .unzip();
    if xs.len() < 2 {
        return None;
    }
    let (slope, intercept, half_width, residual) = ols(&xs, &ys);
    Some(Fit {
        series: series.into(),
        slope,
        intercept,
        half_width,
        residual,
        points: xs.len(),
    })
}

/// Eigenvalue and norming constant as `[re, im]` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonSpec {
    pub lambda: [f64; 2],
    pub c: [f64; 2],
}

impl SolitonSpec {
    pub fn eigenpair(&self) -> Eigenpair {
        Eigenpair {
            lambda: c(self.lambda[0], self.lambda[1]),
            c: c(self.c[0], self.c[1]),
        }
    }
}

fn sorted_specs(specs: &[SolitonSpec]) -> Vec<SolitonSpec> {
    let mut out = specs.to_vec();
    out.sort_by(|a, b| {
        let (la, lb) = (a.eigenpair().lambda, b.eigenpair().lambda);
        la.norm().total_cmp(&lb.norm()).then(la.arg().total_cmp(&lb.arg()))
    });
    out
}

/// Gaussian pair `(ε e^{−x²/w²}, 0.8 i ε e^{−(x − 1/2)²/w²})`.
pub fn gaussian_pair(amplitude: f64, width: f64, x: f64) -> (C64, C64) {
    let w2 = width * width;
    (
        c(amplitude * (-x * x / w2).exp(), 0.0),
        c(0.0, 0.8 * amplitude * (-(x - 0.5).powi(2) / w2).exp()),
    )
}

/// Samples requested from a simulation at one time.
#[derive(Clone, Debug)]
struct SampleSet {
    t: f64,
    xs: Vec<f64>,
}

/// Simulated `(x, u, v)` at the lattice node nearest each requested point.
type Samples = Vec<Vec<(f64, C64, C64)>>;

/// Evolves data on the lattice `x = k h` through the sample times, keeping
/// only the backward cone of the remaining samples (intersected with
/// `|x| ≤ t + support` when the data vanish beyond `support`).
fn simulate_cone(init: &dyn Fn(f64) -> (C64, C64), sets: &[SampleSet], h: f64, support: Option<f64>) -> Result<Samples> {
    let chunk = (5.0 / h).round().max(1.0) * h;
    let idx = |x: f64| (x / h).round() as i64;
    let cone = |t: f64| -> (i64, i64) {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for s in sets.iter().filter(|s| s.t >= t) {
            let reach = idx(s.t - t) + 1;
            for &x in &s.xs {
                lo = lo.min(idx(x) - reach);
                hi = hi.max(idx(x) + reach);
            }
        }
        (lo, hi)
    };
    let bounded = |(lo, hi): (i64, i64), t_end: f64| match support {
        Some(l) => {
            let s = idx(t_end + l) + 1;
            (lo.max(-s), hi.min(s))
        }
        None => (lo, hi),
    };
    let (mut k0, k1) = bounded(cone(0.0), chunk);
    let mut u: Vec<C64> = (k0..=k1).map(|k| init(k as f64 * h).0).collect();
    let mut v: Vec<C64> = (k0..=k1).map(|k| init(k as f64 * h).1).collect();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(sets.len());
    for set in sets {
        while t < set.t - 1e-9 * h {
            let t_next = (t + chunk).min(set.t);
            // domain for this chunk
            let (a, b) = bounded(cone(t), t_next);
            let zero = C64::new(0.0, 0.0);
            let take = |arr: &[C64], k: i64| if k >= k0 && k < k0 + arr.len() as i64 { arr[(k - k0) as usize] } else { zero };
            let nu: Vec<C64> = (a..=b).map(|k| take(&u, k)).collect();
            let nv: Vec<C64> = (a..=b).map(|k| take(&v, k)).collect();
            let grid = Grid1D::new(a as f64 * h, h, nu.len())?;
            let st = FieldState { grid, u: nu, v: nv, t };
            let next = evolve_to(&st, t_next, &EvolveConfig::for_grid(h, t_next))?;
            k0 = a;
            u = next.u;
            v = next.v;
            t = next.t;
        }
        let row = set
            .xs
            .iter()
            .map(|&x| {
                let k = idx(x);
                let j = k - k0;
                if j < 0 || j >= u.len() as i64 {
                    return Err(MtmError::invalid(format!("sample x = {x} fell outside the simulated cone")));
                }
                Ok((k as f64 * h, u[j as usize], v[j as usize]))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(row);
    }
    Ok(out)
}

/// [`simulate_cone`] at `h`, or Richardson-combined from `h` and `h/2`.
fn simulate(init: &dyn Fn(f64) -> (C64, C64), sets: &[SampleSet], h: f64, support: Option<f64>, richardson: bool) -> Result<Samples> {
    // both runs must sample the same coarse nodes
    let sets: Vec<SampleSet> = sets
        .iter()
        .map(|s| SampleSet {
            t: s.t,
            xs: s.xs.iter().map(|&x| (x / h).round() * h).collect(),
        })
        .collect();
    let coarse = simulate_cone(init, &sets, h, support)?;
    if !richardson {
        return Ok(coarse);
    }
    let fine = simulate_cone(init, &sets, 0.5 * h, support)?;
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p.0, (q.1 * 4.0 - p.1) / 3.0, (q.2 * 4.0 - p.2) / 3.0)).collect())
        .collect())
}

/// Times that are whole multiples of `h`.
fn snap_time(t: f64, h: f64) -> f64 {
    (t / h).round() * h
}

fn window(center: f64, half: f64, step: f64) -> Vec<f64> {
    let n = (half / step).round() as i64;
    (-n..=n).map(|k| center + k as f64 * step).collect()
}

fn check_no_eigenvalues(pot: &Potential, bx: &SearchBox, opts: &ScatterOptions) -> Result<()> {
    let found = find_eigenvalues_with(pot, bx, opts)?;
    if !found.is_empty() {
        return Err(MtmError::invalid(format!("data meant to be solitonless have eigenvalues {found:?}")));
    }
    Ok(())
}

fn spectral_grid(lmin: f64, lmax: f64, n: usize) -> Result<SpectralGrid> {
    SpectralGrid::log_uniform(lmin, lmax, n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolitonResolutionConfig {
    pub solitons: Vec<SolitonSpec>,
    /// Amplitude of the added [`gaussian_pair`].
    pub perturbation: f64,
    pub perturbation_width: f64,
    pub times: Vec<f64>,
    pub dx: f64,
    pub richardson: bool,
    /// Half-width of the profile window around each soliton ray.
    pub window: f64,
    pub sample_step: f64,
    pub scatter_x_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub spectral_nodes: usize,
    /// Half-size of the eigenvalue search box around each given eigenvalue.
    pub search_radius: f64,
    pub asymptotics: AsymptoticOptions,
    /// Largest allowed gap at the first time without perturbation.
    pub max_gap_pure: f64,
    /// Largest allowed `gap(last)/gap(first)` with perturbation.
    pub max_gap_ratio: f64,
}

impl Default for SolitonResolutionConfig {
    fn default() -> Self {
        SolitonResolutionConfig {
            solitons: vec![
                SolitonSpec {
                    lambda: [0.4, 0.4],
                    c: [1.0, 0.0],
                },
                SolitonSpec {
                    lambda: [1.2, 1.0],
                    c: [1.0, 0.5],
                },
            ],
            perturbation: 0.05,
            perturbation_width: 1.0,
            times: vec![30.0, 60.0, 120.0],
            dx: 0.02,
            richardson: true,
            window: 10.0,
            sample_step: 0.1,
            scatter_x_max: 40.0,
            lambda_min: 1e-4,
            lambda_max: 1e4,
            spectral_nodes: 256,
            search_radius: 0.15,
            asymptotics: AsymptoticOptions::default(),
            max_gap_pure: 1e-3,
            max_gap_ratio: 0.7,
        }
    }
}

/// PDE versus the soliton-plus-radiation asymptotics on each soliton ray.
pub fn exp_soliton_resolution(cfg: &SolitonResolutionConfig) -> Result<ExperimentReport> {
    let mut cfg = cfg.clone();
    cfg.solitons = sorted_specs(&cfg.solitons);
    if cfg.solitons.is_empty() {
        return Err(MtmError::invalid("soliton resolution needs at least one soliton"));
    }
    let spectrum: Vec<Eigenpair> = cfg.solitons.iter().map(|s| s.eigenpair()).collect();
    for e in &spectrum {
        SolitonParams::new(e.lambda, e.c)?;
    }
    let init = |x: f64| -> (C64, C64) {
        let (a, b) = reflectionless_reconstruct(&spectrum, x, 0.0).unwrap_or((C64::new(f64::NAN, 0.0), C64::new(0.0, 0.0)));
        let (p, q) = gaussian_pair(cfg.perturbation, cfg.perturbation_width, x);
        (a + p, b + q)
    };
    // scattering data of the initial state
    let g = Grid1D::span(-cfg.scatter_x_max, cfg.scatter_x_max, cfg.dx)?;
    let state = FieldState::from_fn(g, 0.0, init);
    let boxes: Vec<SearchBox> = spectrum
        .iter()
        .map(|e| SearchBox {
            re_min: e.lambda.re - cfg.search_radius,
            re_max: e.lambda.re + cfg.search_radius,
            im_min: (e.lambda.im - cfg.search_radius).max(0.02),
            im_max: e.lambda.im + cfg.search_radius,
        })
        .collect();
    let grid = spectral_grid(cfg.lambda_min, cfg.lambda_max, cfg.spectral_nodes)?;
    let (data, _) = scatter(&state, &grid, &boxes, &ScatterOptions::default())?;
    if data.eigen.len() != spectrum.len() {
        return Err(MtmError::numerical(format!(
            "found {} eigenvalues, expected {}",
            data.eigen.len(),
            spectrum.len()
        )));
    }
    let solver = AsymptoticSolver::new(&data, cfg.asymptotics)?;
    let times: Vec<f64> = cfg.times.iter().map(|&t| snap_time(t, cfg.dx)).collect();
    let rays: Vec<f64> = data.eigen.iter().map(|e| velocity(e.lambda)).collect();
    let sets: Vec<SampleSet> = times
        .iter()
        .map(|&t| SampleSet {
            t,
            xs: rays.iter().flat_map(|&v| window(v * t, cfg.window, cfg.sample_step)).collect(),
        })
        .collect();
    let samples = simulate(&init, &sets, cfg.dx, None, cfg.richardson)?;
    let mut report = ExperimentReport::new("soliton_resolution", &cfg)?;
    let per_ray = 2 * (cfg.window / cfg.sample_step).round() as usize + 1;
    for (set, row) in sets.iter().zip(&samples) {
        for (j, &(x, u, _)) in row.iter().enumerate() {
            let (ua, _) = solver.solution(x, set.t)?;
            let series = format!("soliton{}", j / per_ray);
            report.row(&series, set.t, x, ua.norm(), u.norm(), (u.norm() - ua.norm()).abs());
        }
    }
    let gaps: Vec<f64> = times.iter().map(|&t| report.max_err_at("soliton", t)).collect();
    for (&t, &gap) in times.iter().zip(&gaps) {
        report.row("gap", t, 0.0, 0.0, gap, gap);
    }
    if cfg.perturbation == 0.0 {
        report.verdict(Verdict::at_most("pure_gap_first_time", gaps[0], cfg.max_gap_pure));
    } else {
        let ratio = gaps[gaps.len() - 1] / gaps[0];
        report.verdict(Verdict::at_most("gap_ratio_last_first", ratio, cfg.max_gap_ratio));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayConfig {
    /// Amplitude and width of the interior [`gaussian_pair`] data.
    pub amplitude: f64,
    pub width: f64,
    pub interior_v: f64,
    pub t_start: f64,
    /// Number of doublings after `t_start`.
    pub doublings: usize,
    /// Sample times per doubling.
    pub per_doubling: usize,
    pub dx: f64,
    pub richardson: bool,
    /// Half-width of the spatial RMS window.
    pub window: f64,
    pub sample_step: f64,
    pub scatter_x_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub spectral_nodes: usize,
    pub asymptotics: AsymptoticOptions,
    /// Exterior data `ε/(1 + x²)²` in both components.
    pub exterior_amplitude: f64,
    pub exterior_v: f64,
    pub exterior_dx: f64,
    /// Include the envelope `max |u|` over `|x − (t − cone_offset)| ≤ cone_half_window`.
    pub near_cone: bool,
    pub cone_offset: f64,
    pub cone_half_window: f64,
    pub noise_floor: f64,
    pub interior_slope: f64,
    pub interior_slope_tol: f64,
    pub exterior_max_slope: f64,
    pub cone_exponent_min: f64,
    pub cone_exponent_max: f64,
    /// Require `t^{3/4} · gap` to be non-increasing at the doubling times.
    pub check_scaled_gap: bool,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            amplitude: 0.3,
            width: 1.0,
            interior_v: 0.3,
            t_start: 50.0,
            doublings: 3,
            per_doubling: 2,
            dx: 0.025,
            richardson: true,
            window: 10.0,
            sample_step: 0.1,
            scatter_x_max: 15.0,
            lambda_min: 1e-4,
            lambda_max: 1e4,
            spectral_nodes: 256,
            asymptotics: AsymptoticOptions::default(),
            exterior_amplitude: 0.05,
            exterior_v: 1.5,
            exterior_dx: 0.05,
            near_cone: true,
            cone_offset: 10.0,
            cone_half_window: 5.0,
            noise_floor: 1e-13,
            interior_slope: -0.5,
            interior_slope_tol: 0.05,
            exterior_max_slope: -0.9,
            cone_exponent_min: 0.5,
            cone_exponent_max: 1.0,
            check_scaled_gap: true,
        }
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), a| (s + a * a, n + 1));
    (s / n.max(1) as f64).sqrt()
}

/// Decay of `|u|` along interior, exterior and near-cone rays.
pub fn exp_decay_rates(cfg: &DecayConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("decay_rates", cfg)?;
    let steps = cfg.doublings * cfg.per_doubling;
    let times: Vec<f64> = (0..=steps)
        .map(|k| snap_time(cfg.t_start * 2f64.powf(k as f64 / cfg.per_doubling as f64), cfg.dx))
        .collect();
    // interior data, solitonless by construction
    let init = |x: f64| gaussian_pair(cfg.amplitude, cfg.width, x);
    let g = Grid1D::span(-cfg.scatter_x_max, cfg.scatter_x_max, 0.01)?;
    let state = FieldState::from_fn(g, 0.0, init);
    let pot = Potential::new(&state)?;
    let opts = ScatterOptions::default();
    check_no_eigenvalues(
        &pot,
        &SearchBox {
            re_min: -3.0,
            re_max: 3.0,
            im_min: 0.02,
            im_max: 3.0,
        },
        &opts,
    )?;
    let (data, _) = reflection_with(&pot, &spectral_grid(cfg.lambda_min, cfg.lambda_max, cfg.spectral_nodes)?, &opts)?;
    let solver = AsymptoticSolver::new(&data, cfg.asymptotics)?;
    let sets: Vec<SampleSet> = times
        .iter()
        .map(|&t| {
            let mut xs = window(cfg.interior_v * t, cfg.window, cfg.sample_step);
            if cfg.near_cone {
                xs.extend(window(t - cfg.cone_offset, cfg.cone_half_window, cfg.sample_step));
            }
            SampleSet { t, xs }
        })
        .collect();
    let support = 6.0 * cfg.width + 0.5;
    let samples = simulate(&init, &sets, cfg.dx, Some(support), cfg.richardson)?;
    let n_win = 2 * (cfg.window / cfg.sample_step).round() as usize + 1;
    for (set, row) in sets.iter().zip(&samples) {
        let t = set.t;
        let mut pred = Vec::with_capacity(n_win);
        let mut gaps = Vec::with_capacity(n_win);
        for &(x, u, _) in &row[..n_win] {
            let (ua, _) = solver.solution(x, t)?;
            pred.push(ua.norm());
            gaps.push((u - ua).norm());
        }
        let obs = rms(row[..n_win].iter().map(|s| s.1.norm()));
        let pr = rms(pred.into_iter());
        report.row("interior", t, cfg.interior_v, pr, obs, (obs - pr).abs());
        let gap = rms(gaps.into_iter());
        report.row("interior_gap", t, cfg.interior_v, 0.0, gap * t.powf(0.75), gap);
        if cfg.near_cone {
            let env = row[n_win..].iter().map(|s| s.1.norm()).fold(0.0, f64::max);
            report.row("near_cone", t, t - cfg.cone_offset, 0.0, env, 0.0);
        }
    }
    // exterior ray with algebraic-tail data
    let eps = cfg.exterior_amplitude;
    let ext = |x: f64| {
        let d = 1.0 / (1.0 + x * x).powi(2);
        (c(eps * d, 0.0), c(0.0, eps * d))
    };
    let ext_times: Vec<f64> = times.iter().map(|&t| snap_time(t, cfg.exterior_dx)).collect();
    let ext_sets: Vec<SampleSet> = ext_times
        .iter()
        .map(|&t| SampleSet {
            t,
            xs: window(cfg.exterior_v * t, cfg.window, 1.0),
        })
        .collect();
    let ext_samples = simulate(&ext, &ext_sets, cfg.exterior_dx, None, false)?;
    for (set, row) in ext_sets.iter().zip(&ext_samples) {
        let obs = rms(row.iter().map(|s| s.1.norm()));
        report.row("exterior", set.t, cfg.exterior_v, 0.0, obs, obs);
    }
    for s in ["interior", "exterior", "near_cone"] {
        if let Some(f) = power_fit(&report, s, cfg.noise_floor) {
            report.fits.push(f);
        }
    }
    let slope = |s: &str| report.fit(s).map_or(f64::NAN, |f| f.slope);
    let (si, se, sc) = (slope("interior"), slope("exterior"), slope("near_cone"));
    report.verdict(Verdict::between(
        "interior_slope",
        si,
        Some(cfg.interior_slope - cfg.interior_slope_tol),
        Some(cfg.interior_slope + cfg.interior_slope_tol),
    ));
    report.verdict(Verdict::at_most("exterior_slope", se, cfg.exterior_max_slope));
    if cfg.near_cone {
        let e = -sc;
        report.verdict(Verdict::between(
            "near_cone_exponent",
            e,
            Some(cfg.cone_exponent_min),
            Some(cfg.cone_exponent_max),
        ));
    }
    if cfg.check_scaled_gap {
        let scaled: Vec<f64> = report.series("interior_gap").step_by(cfg.per_doubling).map(|r| r.observed).collect();
        let worst = scaled.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        report.verdict(Verdict::at_most("scaled_gap_max_ratio", worst, 1.0));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoundtripConfig {
    pub u_amplitude: f64,
    pub v_amplitude: f64,
    pub width: f64,
    pub v_shift: f64,
    pub x_max: f64,
    pub dx: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Spectral node counts; the first is the primary, the last the refinement.
    pub nodes: Vec<usize>,
    pub eval_x_max: f64,
    pub eval_step: f64,
    pub max_rel_error: f64,
    pub min_refinement_ratio: f64,
}

impl Default for RoundtripConfig {
    fn default() -> Self {
        RoundtripConfig {
            u_amplitude: 0.05,
            v_amplitude: 0.04,
            width: 0.35,
            v_shift: 0.5,
            x_max: 12.0,
            dx: 0.01,
            lambda_min: 1e-4,
            lambda_max: 1e4,
            nodes: vec![512, 1024],
            eval_x_max: 4.0,
            eval_step: 0.1,
            max_rel_error: 1e-2,
            min_refinement_ratio: 1.5,
        }
    }
}

/// Scatter, then reconstruct at `t = 0`; relative L² error per node count.
pub fn exp_roundtrip(cfg: &RoundtripConfig) -> Result<ExperimentReport> {
    if cfg.nodes.is_empty() {
        return Err(MtmError::invalid("roundtrip needs at least one node count"));
    }
    let w2 = cfg.width * cfg.width;
    let g = Grid1D::span(-cfg.x_max, cfg.x_max, cfg.dx)?;
    let state = FieldState::from_fn(g, 0.0, |x| {
        (
            c(cfg.u_amplitude * (-x * x / w2).exp(), 0.0),
            c(0.0, cfg.v_amplitude * (-(x - cfg.v_shift).powi(2) / w2).exp()),
        )
    });
    let pot = Potential::new(&state)?;
    let opts = ScatterOptions::default();
    check_no_eigenvalues(
        &pot,
        &SearchBox {
            re_min: -3.0,
            re_max: 3.0,
            im_min: 0.02,
            im_max: 3.0,
        },
        &opts,
    )?;
    let mut report = ExperimentReport::new("roundtrip", cfg)?;
    let n_eval = (cfg.eval_x_max / cfg.eval_step).round() as i64;
    for &n in &cfg.nodes {
        let (data, _) = reflection_with(&pot, &spectral_grid(cfg.lambda_min, cfg.lambda_max, n)?, &opts)?;
        let solver = InverseSolver::new(&data)?;
        let series = format!("n{n}");
        for k in -n_eval..=n_eval {
            let x = k as f64 * cfg.eval_step;
            let j = ((x - g.x0) / g.dx).round() as usize;
            let (u, v) = solver.field_at(g.x(j), 0.0)?;
            let (u0, v0) = (state.u[j], state.v[j]);
            let pred = (u.norm_sqr() + v.norm_sqr()).sqrt();
            let obs = (u0.norm_sqr() + v0.norm_sqr()).sqrt();
            let err = ((u - u0).norm_sqr() + (v - v0).norm_sqr()).sqrt();
            report.row(&series, 0.0, g.x(j), pred, obs, err);
        }
    }
    let rel = |n: usize| {
        let s = format!("n{n}");
        let num: f64 = report.series(&s).map(|r| r.abs_err * r.abs_err).sum();
        let den: f64 = report.series(&s).map(|r| r.observed * r.observed).sum();
        if num == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    };
    let errs: Vec<f64> = cfg.nodes.iter().map(|&n| rel(n)).collect();
    for (&n, &e) in cfg.nodes.iter().zip(&errs) {
        report.row("rel_l2", 0.0, n as f64, 0.0, e, e);
    }
    report.verdict(Verdict::at_most("rel_l2_primary", errs[0], cfg.max_rel_error));
    if errs.len() > 1 {
        let last = errs[errs.len() - 1];
        let ratio = if last == 0.0 { f64::INFINITY } else { errs[0] / last };
        if errs[0] > 0.0 {
            report.verdict(Verdict::at_least("refinement_ratio", ratio, cfg.min_refinement_ratio));
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseShiftConfig {
    pub solitons: Vec<SolitonSpec>,
    pub t_measure: f64,
    /// Half-width of the centroid window.
    pub window: f64,
    pub sample_step: f64,
    pub asymptotics: AsymptoticOptions,
    pub max_rel_error: f64,
}

impl Default for PhaseShiftConfig {
    fn default() -> Self {
        PhaseShiftConfig {
            solitons: vec![
                SolitonSpec {
                    lambda: [0.4, 0.4],
                    c: [1.0, 0.0],
                },
                SolitonSpec {
                    lambda: [1.2, 1.0],
                    c: [1.0, 0.5],
                },
            ],
            t_measure: 60.0,
            window: 10.0,
            sample_step: 0.01,
            asymptotics: AsymptoticOptions::default(),
            max_rel_error: 0.02,
        }
    }
}

/// Centre of the bare soliton at time `t`: zero of the sech argument.
pub fn bare_center(p: &SolitonParams, t: f64) -> f64 {
    let (eta, r2) = (p.lambda.im, p.lambda.norm_sqr());
    let shift = (2.0 * eta / (r2.powf(0.25) * p.c.norm())).ln();
    -(0.5 * eta * (1.0 - 1.0 / r2) * t + shift) / (0.5 * eta * (1.0 + 1.0 / r2))
}

/// Soliton centre shifts from `t = −T` to `t = +T`, measured by the charge
/// centroid of the exact multi-soliton.
pub fn exp_phase_shift(cfg: &PhaseShiftConfig) -> Result<ExperimentReport> {
    use crate::asymptotics::dress_soliton;
    if cfg.solitons.len() < 2 {
        return Err(MtmError::invalid("phase shift needs at least two solitons"));
    }
    let mut cfg = cfg.clone();
    cfg.solitons = sorted_specs(&cfg.solitons);
    let spectrum: Vec<Eigenpair> = cfg.solitons.iter().map(|s| s.eigenpair()).collect();
    let grid = spectral_grid(1e-2, 1e2, 16)?;
    let data = ScatteringData::reflectionless(grid, spectrum.clone())?;
    let mut report = ExperimentReport::new("phase_shift", &cfg)?;
    let tm = cfg.t_measure;
    let fastest = (0..spectrum.len())
        .max_by(|&a, &b| velocity(spectrum[a].lambda).total_cmp(&velocity(spectrum[b].lambda)))
        .unwrap_or(0);
    for (k, e) in spectrum.iter().enumerate() {
        let fwd = dress_soliton(&data, k, true, &cfg.asymptotics)?;
        let bwd = dress_soliton(&data, k, false, &cfg.asymptotics)?;
        let predicted = fwd.center_shift() - bwd.center_shift();
        let p = SolitonParams::new(e.lambda, e.c)?;
        let mut offsets = [0.0; 2];
        for (slot, (t, d)) in [(-tm, &bwd), (tm, &fwd)].into_iter().enumerate() {
            let guess = bare_center(&p, t) + d.center_shift();
            for (j, f) in spectrum.iter().enumerate() {
                if j != k {
                    let q = SolitonParams::new(f.lambda, f.c)?;
                    if (bare_center(&q, t) - guess).abs() < 2.0 * cfg.window {
                        return Err(MtmError::invalid(format!("solitons overlap at t = {t}")));
                    }
                }
            }
            let (mut m0, mut m1) = (0.0, 0.0);
            for x in window(guess, cfg.window, cfg.sample_step) {
                let (u, v) = reflectionless_reconstruct(&spectrum, x, t)?;
                let rho = u.norm_sqr() + v.norm_sqr();
                m0 += rho;
                m1 += rho * x;
            }
            offsets[slot] = m1 / m0 - bare_center(&p, t);
        }
        let measured = offsets[1] - offsets[0];
        let series = format!("soliton{k}");
        report.row(&series, tm, e.lambda.norm(), predicted, measured, (measured - predicted).abs());
        if k == fastest {
            let rel = if predicted == 0.0 {
                (measured - predicted).abs()
            } else {
                (measured - predicted).abs() / predicted.abs()
            };
            report.verdict(Verdict::at_most("fastest_shift_rel_error", rel, cfg.max_rel_error));
        }
    }
    Ok(report)
}

pub const EXPERIMENTS: [&str; 4] = ["soliton_resolution", "decay_rates", "roundtrip", "phase_shift"];

/// Runs an experiment by name with a JSON config (defaults for missing
/// keys; unknown keys rejected).
pub fn run_experiment(name: &str, config: Option<&serde_json::Value>) -> Result<ExperimentReport> {
    fn parse<T: serde::de::DeserializeOwned + Default>(v: Option<&serde_json::Value>) -> Result<T> {
        match v {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| MtmError::invalid(format!("experiment config: {e}"))),
            None => Ok(T::default()),
        }
    }
    match name {
        "soliton_resolution" => exp_soliton_resolution(&parse(config)?),
        "decay_rates" => exp_decay_rates(&parse(config)?),
        "roundtrip" => exp_roundtrip(&parse(config)?),
        "phase_shift" => exp_phase_shift(&parse(config)?),
        _ => Err(MtmError::invalid(format!(
            "unknown experiment {name:?}; expected one of {}",
            EXPERIMENTS.join(", ")
        ))),
    }
}
