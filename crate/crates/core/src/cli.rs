//! Command-line front end.
//!
//! Every subcommand accepts `--config <json>` holding the same keys as its
//! flags (snake_case); flags override file values and unknown keys are
//! rejected. The resolved configuration is written next to file outputs as
//! `<out>.config.json`, or to standard error when printing to standard
//! output. Exit codes: 0 success, 1 invalid input, 2 numerical failure.

use crate::asymptotics::{AsymptoticOptions, AsymptoticSolver};
use crate::common::{c, Eigenpair, Grid1D, SpectralGrid, C64};
use crate::error::{MtmError, Result};
use crate::evolve::{evolve_to, EvolveConfig};
use crate::harness::run_experiment;
use crate::inverse::InverseSolver;
use crate::io::{fmt_g17, read_field_csv, read_scattering_json, render_table, write_atomic, write_field_csv, write_scattering_json, FIELD_HEADER};
use crate::scatter::{scatter, ScatterOptions, SearchBox};
use crate::solitons::soliton_state;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Complex number written `a+bi`, `a-bi`, `a` or `bi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex(pub C64);

impl FromStr for Complex {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("cannot parse {s:?} as a complex number (expected a+bi)");
        let t = s.trim();
        if t.is_empty() || t.contains(char::is_whitespace) {
            return Err(bad());
        }
        let Some(body) = t.strip_suffix('i') else {
            return t.parse::<f64>().map(|re| Complex(c(re, 0.0))).map_err(|_| bad());
        };
        // split at the last sign that is not a leading sign or an exponent sign
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            other => other,
        };
        let re: f64 = re.parse().map_err(|_| bad())?;
        let im: f64 = im.trim_start_matches('+').parse().map_err(|_| bad())?;
        if !re.is_finite() || !im.is_finite() {
            return Err(bad());
        }
        Ok(Complex(c(re, im)))
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0.im.is_sign_negative() { '-' } else { '+' };
        write!(f, "{}{sign}{}i", fmt_g17(self.0.re), fmt_g17(self.0.im.abs()))
    }
}

impl Serialize for Complex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Complex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Parser, Debug)]
#[command(name = "mtm", version, about = "Massive Thirring model: PDE, scattering, solitons and asymptotics")]
pub struct Cli {
    /// Worker threads (falls back to MTM_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evolve field CSV data with the split-step scheme.
    Evolve(EvolveArgs),
    /// Compute scattering data of field CSV data.
    Scatter(ScatterArgs),
    /// Sample a one- or two-soliton solution on a grid.
    Soliton(SolitonArgs),
    /// Reconstruct fields from scattering data.
    Reconstruct(ReconstructArgs),
    /// Evaluate the long-time asymptotic formulas along a ray.
    Asym(AsymArgs),
    /// Run a named experiment and write its report.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveArgs {
    /// Initial field CSV.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_final: Option<f64>,
    /// Must equal the spacing of the input grid (the step is `dt = dx`).
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterArgs {
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub n_lambda: Option<usize>,
    /// Eigenvalue search boxes: a JSON file or inline JSON array of
    /// `{re_min, re_max, im_min, im_max}`.
    #[arg(long)]
    pub boxes: Option<String>,
    /// `|α|` floor on the real line below which the run fails.
    #[arg(long)]
    pub genericity_floor: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Diagnostics CSV; defaults to `<out>.diag.csv`.
    #[arg(long)]
    pub diag: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<Complex>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<Complex>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda2: Option<Complex>,
    #[arg(long, allow_hyphen_values = true)]
    pub c2: Option<Complex>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub sd: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// Batch range `a,b` sampled with `--dx`.
    #[arg(long, allow_hyphen_values = true)]
    pub x_range: Option<String>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymArgs {
    #[arg(long)]
    pub sd: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Comma-separated times.
    #[arg(long)]
    pub t_list: Option<String>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct ExperimentArgs {
    /// soliton_resolution, decay_rates, roundtrip or phase_shift.
    pub name: String,
    /// Experiment configuration JSON (missing keys take defaults).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Overlays the non-null flag values on the config file and validates the
/// result against the flag schema.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> Result<T> {
    let mut base = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| MtmError::invalid(format!("config {}: {e}", p.display())))?;
            if !v.is_object() {
                return Err(MtmError::invalid("config must be a JSON object"));
            }
            serde_json::from_value::<T>(v.clone()).map_err(|e| MtmError::invalid(format!("config {}: {e}", p.display())))?;
            v
        }
        None => serde_json::Value::Object(Default::default()),
    };
    if let (Some(obj), serde_json::Value::Object(over)) = (base.as_object_mut(), serde_json::to_value(flags)?) {
        for (k, v) in over {
            if !v.is_null() {
                obj.insert(k, v);
            }
        }
    }
    serde_json::from_value(base).map_err(|e| MtmError::invalid(format!("config: {e}")))
}

fn need<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| MtmError::invalid(format!("missing required --{}", name.replace('_', "-"))))
}

fn echo(cfg: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(cfg)?;
    match out {
        Some(p) => {
            let mut name = p.as_os_str().to_owned();
            name.push(".config.json");
            write_atomic(Path::new(&name), text.as_bytes())
        }
        None => {
            eprintln!("{text}");
            Ok(())
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| MtmError::invalid(format!("bad number {p:?} in --{what}"))))
        .collect()
}

fn run_evolve(args: &EvolveArgs) -> Result<()> {
    let mut cfg = resolve(args, args.config.as_deref())?;
    let init = need(&cfg.init, "init")?;
    let out = need(&cfg.out, "out")?;
    let t_final = need(&cfg.t_final, "t_final")?;
    let state = read_field_csv(&init)?;
    let dx = *cfg.dx.get_or_insert(state.grid.dx);
    if (dx - state.grid.dx).abs() > 1e-9 * state.grid.dx {
        return Err(MtmError::invalid(format!("--dx {dx} differs from the input grid spacing {}", state.grid.dx)));
    }
    let end = evolve_to(&state, t_final, &EvolveConfig::for_grid(state.grid.dx, t_final))?;
    write_field_csv(&end, &out)?;
    echo(&cfg, Some(&out))
}

fn parse_boxes(spec: &str) -> Result<Vec<SearchBox>> {
    let text = if Path::new(spec).is_file() {
        std::fs::read_to_string(spec)?
    } else {
        spec.to_string()
    };
    serde_json::from_str(&text).map_err(|e| MtmError::invalid(format!("--boxes: {e}")))
}

fn run_scatter(args: &ScatterArgs) -> Result<()> {
    let mut cfg = resolve(args, args.config.as_deref())?;
    let init = need(&cfg.init, "init")?;
    let out = need(&cfg.out, "out")?;
    let lmin = *cfg.lambda_min.get_or_insert(1e-3);
    let lmax = *cfg.lambda_max.get_or_insert(1e3);
    let n = *cfg.n_lambda.get_or_insert(256);
    let boxes = match &cfg.boxes {
        Some(b) => parse_boxes(b)?,
        None => vec![],
    };
    let opts = ScatterOptions {
        genericity_floor: *cfg.genericity_floor.get_or_insert(ScatterOptions::default().genericity_floor),
        ..Default::default()
    };
    let diag_path = cfg.diag.get_or_insert_with(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".diag.csv");
        PathBuf::from(s)
    });
    let diag_path = diag_path.clone();
    let state = read_field_csv(&init)?;
    let grid = SpectralGrid::log_uniform(lmin, lmax, n)?;
    let (sd, diag) = scatter(&state, &grid, &boxes, &opts)?;
    write_scattering_json(&sd, &out)?;
    write_atomic(&diag_path, diag.to_csv().as_bytes())?;
    echo(&cfg, Some(&out))
}

fn run_soliton(args: &SolitonArgs) -> Result<()> {
    let mut cfg = resolve(args, args.config.as_deref())?;
    let mut spectrum = vec![Eigenpair {
        lambda: need(&cfg.lambda, "lambda")?.0,
        c: need(&cfg.c, "c")?.0,
    }];
    match (cfg.lambda2, cfg.c2) {
        (Some(l), Some(k)) => spectrum.push(Eigenpair { lambda: l.0, c: k.0 }),
        (None, None) => {}
        _ => return Err(MtmError::invalid("--lambda2 and --c2 must be given together")),
    }
    let x_min = need(&cfg.x_min, "x_min")?;
    let x_max = need(&cfg.x_max, "x_max")?;
    let dx = need(&cfg.dx, "dx")?;
    let t = *cfg.t.get_or_insert(0.0);
    let out = need(&cfg.out, "out")?;
    let state = soliton_state(&spectrum, Grid1D::span(x_min, x_max, dx)?, t)?;
    write_field_csv(&state, &out)?;
    echo(&cfg, Some(&out))
}

fn field_rows(points: &[(f64, (C64, C64))]) -> String {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|(x, (u, v))| [*x, u.re, u.im, v.re, v.im].iter().map(|&z| fmt_g17(z)).collect())
        .collect();
    render_table(&FIELD_HEADER, &rows)
}

fn run_reconstruct(args: &ReconstructArgs) -> Result<()> {
    let mut cfg = resolve(args, args.config.as_deref())?;
    let sd = read_scattering_json(&need(&cfg.sd, "sd")?)?;
    let t = *cfg.t.get_or_insert(0.0);
    let xs: Vec<f64> = match (&cfg.x, &cfg.x_range) {
        (Some(x), None) => vec![*x],
        (None, Some(range)) => {
            let ab = parse_list(range, "x-range")?;
            let dx = need(&cfg.dx, "dx")?;
            if ab.len() != 2 {
                return Err(MtmError::invalid("--x-range expects a,b"));
            }
            Grid1D::span(ab[0], ab[1], dx)?.nodes()
        }
        _ => return Err(MtmError::invalid("give exactly one of --x or --x-range")),
    };
    let solver = InverseSolver::new(&sd)?;
    let vals = xs.par_iter().map(|&x| solver.field_at(x, t).map(|f| (x, f))).collect::<Result<Vec<_>>>()?;
    emit(&field_rows(&vals), cfg.out.as_deref())?;
    echo(&cfg, cfg.out.as_deref())
}

fn run_asym(args: &AsymArgs) -> Result<()> {
    let mut cfg = resolve(args, args.config.as_deref())?;
    let sd = read_scattering_json(&need(&cfg.sd, "sd")?)?;
    let v = need(&cfg.v, "v")?;
    let times = match (&cfg.t, &cfg.t_list) {
        (Some(t), None) => vec![*t],
        (None, Some(list)) => parse_list(list, "t-list")?,
        _ => return Err(MtmError::invalid("give exactly one of --t or --t-list")),
    };
    let opts = AsymptoticOptions {
        t_min: *cfg.t_min.get_or_insert(AsymptoticOptions::default().t_min),
        ..Default::default()
    };
    let solver = AsymptoticSolver::new(&sd, opts)?;
    let rows = times
        .par_iter()
        .map(|&t| {
            let x = v * t;
            let (u, w) = solver.solution(x, t)?;
            let frame = solver.classify(x, t)?;
            let mut row: Vec<String> = [t, u.re, u.im, w.re, w.im].iter().map(|&z| fmt_g17(z)).collect();
            row.push(frame.region.label());
            row.push(fmt_g17(frame.tau));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    emit(
        &render_table(&["t", "re_u", "im_u", "re_v", "im_v", "region", "tau"], &rows),
        cfg.out.as_deref(),
    )?;
    echo(&cfg, cfg.out.as_deref())
}

fn run_experiment_cmd(args: &ExperimentArgs) -> Result<()> {
    let config = match &args.config {
        Some(p) => Some(serde_json::from_str::<serde_json::Value>(&std::fs::read_to_string(p)?).map_err(|e| MtmError::invalid(format!("config: {e}")))?),
        None => None,
    };
    let report = run_experiment(&args.name, config.as_ref())?;
    match &args.out {
        Some(dir) => report.write(dir)?,
        None => println!("{}", report.to_json()?),
    }
    for v in &report.verdicts {
        eprintln!(
            "{} {} = {} ({:?}, {:?})",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            fmt_g17(v.value),
            v.lower,
            v.upper
        );
    }
    Ok(())
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("MTM_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| MtmError::invalid(format!("MTM_THREADS={s:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = threads(cli.threads)? {
        if n == 0 {
            return Err(MtmError::invalid("--threads must be positive"));
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Evolve(a) => run_evolve(a),
        Command::Scatter(a) => run_scatter(a),
        Command::Soliton(a) => run_soliton(a),
        Command::Reconstruct(a) => run_reconstruct(a),
        Command::Asym(a) => run_asym(a),
        Command::Experiment(a) => run_experiment_cmd(a),
    }
}

/// Parses `argv`, runs it and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mtm: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        let p = |s: &str| s.parse::<Complex>().map(|z| z.0);
        assert_eq!(p("0.8+0.6i").unwrap(), c(0.8, 0.6));
        assert_eq!(p("1+0i").unwrap(), c(1.0, 0.0));
        assert_eq!(p("-1.5-2i").unwrap(), c(-1.5, -2.0));
        assert_eq!(p("3").unwrap(), c(3.0, 0.0));
        assert_eq!(p("-2.5i").unwrap(), c(0.0, -2.5));
        assert_eq!(p("i").unwrap(), c(0.0, 1.0));
        assert_eq!(p("1e-3+2E+2i").unwrap(), c(1e-3, 200.0));
        assert_eq!(p("1-i").unwrap(), c(1.0, -1.0));
        for bad in ["", "1 + 2i", "a+bi", "1+2j", "nan+1i", "1++2i"] {
            assert!(p(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn complex_display_round_trips() {
        for z in [c(0.1, -0.3), c(-1e-20, 5.0), c(0.0, 0.0)] {
            let s = Complex(z).to_string();
            assert_eq!(s.parse::<Complex>().unwrap().0, z);
        }
    }

    #[test]
    fn flags_override_config_and_unknown_keys_fail() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"x_min": -5, "x_max": 5, "dx": 0.1, "lambda": "0.8+0.6i"}"#).unwrap();
        let flags = SolitonArgs {
            dx: Some(0.05),
            ..Default::default()
        };
        let r = resolve(&flags, Some(&p)).unwrap();
        assert_eq!(r.dx, Some(0.05));
        assert_eq!(r.x_min, Some(-5.0));
        assert_eq!(r.lambda.unwrap().0, c(0.8, 0.6));
        std::fs::write(&p, r#"{"dx": 0.1, "dxx": 1}"#).unwrap();
        assert_eq!(resolve(&flags, Some(&p)).unwrap_err().exit_code(), 1);
    }
}
