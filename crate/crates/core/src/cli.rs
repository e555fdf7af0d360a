//! Command-line experiment runner.
//!
//! Every subcommand produces one table (CSV or JSON) plus a short summary.
//! In CSV mode the summary goes to stderr as `# key = value` lines; in JSON
//! mode the document is `{"rows": [...], "summary": {...}}`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::experiments::{
    kappa_branch, kappa_branches, kappa_p, kappa_pq, log_spaced_degrees, projection_ratio_sweep, sharpness_sweep,
    strichartz_ratio_auto, FamilyKind, SweepConfig,
};
use crate::grid::{build_sphere_grid, build_zonal_grid, Grid};
use crate::harmonics::SphereDim;
use crate::norms::{l2t_profile_exact, lp_norm_real, mixed_norm, NormOptions, DEFAULT_OVERSAMPLE};
use crate::potential::{l2_drift, Potential, PotentialProblem, PotentialSpec};
use crate::rng::{random_full_table, random_zonal_table, StreamRng};
use crate::spectral::{propagate, synthesize_history, SpectralField, Time, TimeGrid};
use crate::transform::{analyze, synthesize};

#[derive(Debug, Parser)]
#[command(name = "sphere-strichartz", version, about = "Space-time norm experiments for the Schrödinger flow on spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON file with default parameters (requires a top-level "version": 1).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Sphere dimension d (𝕊^d).
    #[arg(long, global = true)]
    d: Option<u32>,
    /// Spatial exponent, `inf` allowed.
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Time exponent.
    #[arg(long, global = true)]
    q: Option<f64>,
    /// Sobolev regularity.
    #[arg(long, global = true, allow_negative_numbers = true)]
    s: Option<f64>,
    /// Band limit.
    #[arg(long = "N", global = true)]
    band: Option<usize>,
    /// Degrees: `lo:hi` (two per octave), `lo:hi:k` (k per octave) or `a,b,c`.
    #[arg(long = "n", global = true)]
    degrees: Option<String>,
    #[arg(long, global = true)]
    family: Option<String>,
    /// Potential file (JSON).
    #[arg(long, global = true)]
    potential: Option<PathBuf>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<usize>,
    /// Number of random samples or probes.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Time samples M.
    #[arg(long = "M", global = true)]
    time_samples: Option<usize>,
    /// Grid oversampling factor for non-exact quadratures.
    #[arg(long, global = true)]
    oversample: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Regularity exponents ϰ_p and ϰ_{p,q}.
    Kappa,
    /// Compare time-sampled L²_t norms with the exact spectral profile.
    IdentityCheck,
    /// Projection-norm scaling over a witness family.
    Sweep,
    /// Strichartz ratios for random band-limited data.
    Strichartz,
    /// Growth of the q = 2 Strichartz ratio along witness families.
    Sharpness,
    /// Picard iteration for the flow with a potential.
    SolvePotential,
    /// Transform, propagator and identity self-checks.
    Selftest,
}

/// Exponents may be given as JSON numbers or as strings such as `"inf"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Exponent {
    Num(f64),
    Text(String),
}

impl Exponent {
    fn value(&self) -> Result<f64> {
        match self {
            Exponent::Num(x) => Ok(*x),
            Exponent::Text(s) => s.parse().map_err(|_| Error::InvalidParameter(format!("bad exponent {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum DegreeList {
    List(Vec<usize>),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    version: Option<u32>,
    format: Option<Format>,
    seed: Option<u64>,
    d: Option<u32>,
    p: Option<Exponent>,
    q: Option<Exponent>,
    s: Option<f64>,
    #[serde(rename = "N")]
    band: Option<usize>,
    #[serde(rename = "n")]
    degrees: Option<DegreeList>,
    family: Option<String>,
    potential: Option<PathBuf>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    samples: Option<usize>,
    #[serde(rename = "M")]
    time_samples: Option<usize>,
    oversample: Option<f64>,
}

/// Parameters after merging flags over the config file.
#[derive(Debug, Clone)]
struct RunConfig {
    format: Format,
    output: Option<PathBuf>,
    seed: u64,
    d: SphereDim,
    p: Option<f64>,
    q: Option<f64>,
    s: Option<f64>,
    band: Option<usize>,
    degrees: Option<Vec<usize>>,
    family: Option<FamilyKind>,
    potential: Option<PathBuf>,
    tol: f64,
    max_iter: usize,
    samples: Option<usize>,
    time_samples: Option<usize>,
    oversample: f64,
}

fn parse_degrees(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("bad degree list {text:?}"));
    if text.contains(':') {
        let parts: Vec<usize> = text.split(':').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        match parts.as_slice() {
            [lo, hi] => log_spaced_degrees(*lo, *hi, 2),
            [lo, hi, k] => log_spaced_degrees(*lo, *hi, *k),
            _ => Err(bad()),
        }
    } else {
        text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
    }
}

impl RunConfig {
    fn from_cli(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::InvalidParameter(format!("cannot read config {}: {e}", path.display())))?;
                let cfg: ConfigFile = serde_json::from_str(&text)
                    .map_err(|e| Error::InvalidParameter(format!("bad config {}: {e}", path.display())))?;
                match cfg.version {
                    Some(1) => cfg,
                    Some(v) => return Err(Error::InvalidParameter(format!("unsupported config version {v}"))),
                    None => return Err(Error::InvalidParameter("config file needs a \"version\" field".into())),
                }
            }
            None => ConfigFile::default(),
        };
        let exponent = |flag: Option<f64>, file: &Option<Exponent>| -> Result<Option<f64>> {
            match flag {
                Some(x) => Ok(Some(x)),
                None => file.as_ref().map(Exponent::value).transpose(),
            }
        };
        let degrees = match (&cli.degrees, &file.degrees) {
            (Some(t), _) => Some(parse_degrees(t)?),
            (None, Some(DegreeList::Text(t))) => Some(parse_degrees(t)?),
            (None, Some(DegreeList::List(v))) => Some(v.clone()),
            (None, None) => None,
        };
        let family = cli.family.clone().or(file.family.clone()).map(|f| f.parse()).transpose()?;
        Ok(RunConfig {
            format: cli.format.or(file.format).unwrap_or(Format::Csv),
            output: cli.output.clone(),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            d: SphereDim::new(cli.d.or(file.d).unwrap_or(2))?,
            p: exponent(cli.p, &file.p)?,
            q: exponent(cli.q, &file.q)?,
            s: cli.s.or(file.s),
            band: cli.band.or(file.band),
            degrees,
            family,
            potential: cli.potential.clone().or(file.potential),
            tol: cli.tol.or(file.tol).unwrap_or(1e-8),
            max_iter: cli.max_iter.or(file.max_iter).unwrap_or(30),
            samples: cli.samples.or(file.samples),
            time_samples: cli.time_samples.or(file.time_samples),
            oversample: cli.oversample.or(file.oversample).unwrap_or(DEFAULT_OVERSAMPLE),
        })
    }

    fn require_p(&self) -> Result<f64> {
        self.p.ok_or_else(|| Error::InvalidParameter("--p is required".into()))
    }

    fn norm_options(&self) -> NormOptions {
        NormOptions { oversample: self.oversample, ..NormOptions::default() }
    }

    fn random_field(&self, band: usize, stream: u64) -> Result<SpectralField> {
        let mut rng = StreamRng::new(self.seed, stream);
        let table = if self.d.get() == 2 {
            random_full_table(band, &mut rng)
        } else {
            random_zonal_table(band, self.d, &mut rng)
        };
        SpectralField::new(table)
    }

    fn grid(&self, band: usize) -> Result<Grid> {
        if self.d.get() == 2 {
            Ok(Grid::Sphere(build_sphere_grid(band)?))
        } else {
            Ok(Grid::Zonal(build_zonal_grid(band, self.d)?))
        }
    }
}

#[derive(Debug, Clone)]
enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(format_float(*x)),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

/// 17 significant digits, which round-trips every f64.
fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

#[derive(Debug, Default)]
struct Report {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    summary: BTreeMap<&'static str, Cell>,
    /// Exit code when the run succeeded numerically but a check failed.
    failed: bool,
}

impl Report {
    fn new(columns: &[&'static str]) -> Self {
        Report { columns: columns.to_vec(), ..Report::default() }
    }

    fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    fn note(&mut self, key: &'static str, value: impl Into<Cell>) {
        self.summary.insert(key, value.into());
    }

    fn render(&self, format: Format) -> (String, String) {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                    out.push('\n');
                }
                let notes = self.summary.iter().map(|(k, v)| format!("# {k} = {}\n", v.csv())).collect();
                (out, notes)
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect::<Map<_, _>>()))
                    .collect();
                let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.to_string(), v.json())).collect();
                let doc = json!({ "rows": rows, "summary": summary });
                (serde_json::to_string_pretty(&doc).expect("JSON values serialize") + "\n", String::new())
            }
        }
    }
}

fn cmd_kappa(cfg: &RunConfig) -> Result<Report> {
    let p = cfg.require_p()?;
    let q = cfg.q.unwrap_or(2.0);
    let mut rep = Report::new(&["d", "p", "q", "kappa_p", "kappa_pq", "branch"]);
    let kp = kappa_p(p, cfg.d)?;
    let kpq = kappa_pq(p, q, cfg.d)?;
    let branch = kappa_branch(p, cfg.d)?;
    rep.row(vec![cfg.d.get().into(), p.into(), q.into(), kp.into(), kpq.into(), branch.to_string().into()]);
    rep.note("kappa_p", kp);
    rep.note("branch", branch.to_string());
    rep.note("critical_exponent", cfg.d.critical_exponent());
    Ok(rep)
}

fn cmd_identity_check(cfg: &RunConfig) -> Result<Report> {
    let band = cfg.band.unwrap_or(16);
    let samples = cfg.samples.unwrap_or(20);
    let exponents = match cfg.p {
        Some(p) => vec![p],
        None => vec![2.0, 4.0, f64::INFINITY],
    };
    let grid = cfg.grid(2 * band)?;
    let tg = match cfg.time_samples {
        Some(m) => TimeGrid::new(m)?,
        None => TimeGrid::for_band(band, cfg.d),
    };
    let mut rep = Report::new(&["sample", "p", "time_sampled", "spectral", "relative_error"]);
    let mut worst = 0.0f64;
    for k in 0..samples {
        let f = cfg.random_field(band, k as u64)?;
        let u = synthesize_history(&f, &tg, &grid)?;
        let profile = l2t_profile_exact(&f, &grid)?;
        for &p in &exponents {
            let sampled = mixed_norm(&u, p, 2.0)?;
            let exact = lp_norm_real(&profile, &grid, p)?;
            let rel = (sampled - exact).abs() / exact;
            worst = worst.max(rel);
            rep.row(vec![k.into(), p.into(), sampled.into(), exact.into(), rel.into()]);
        }
    }
    rep.note("max_relative_error", worst);
    rep.note("time_samples", tg.len());
    Ok(rep)
}

fn sweep_columns() -> [&'static str; 7] {
    ["n", "ratio", "p", "q", "s", "d", "family"]
}

fn push_sweep_rows(rep: &mut Report, rows: &[crate::experiments::SweepRow]) {
    for r in rows {
        rep.row(vec![r.n.into(), r.ratio.into(), r.p.into(), r.q.into(), r.s.into(), r.d.into(), r.family.to_string().into()]);
    }
}

fn cmd_sweep(cfg: &RunConfig) -> Result<Report> {
    let p = cfg.require_p()?;
    let family = cfg.family.unwrap_or(FamilyKind::ZonalKernel);
    let degrees = match &cfg.degrees {
        Some(d) => d.clone(),
        None => log_spaced_degrees(16, 256, 2)?,
    };
    let sweep = SweepConfig {
        q: cfg.q.unwrap_or(2.0),
        s: cfg.s.unwrap_or(0.0),
        oversample: cfg.oversample,
        seed: cfg.seed,
        ..SweepConfig::new(cfg.d, p, family, degrees)
    };
    let res = projection_ratio_sweep(&sweep)?;
    let mut rep = Report::new(&sweep_columns());
    push_sweep_rows(&mut rep, &res.rows);
    rep.note("slope", res.fit.slope);
    rep.note("slope_stderr", res.fit.stderr);
    rep.note("intercept", res.fit.intercept);
    rep.note("kappa_p", kappa_p(p, cfg.d)?);
    Ok(rep)
}

fn cmd_strichartz(cfg: &RunConfig) -> Result<Report> {
    let p = cfg.require_p()?;
    let q = cfg.q.unwrap_or(2.0);
    let band = cfg.band.unwrap_or(16);
    let s = match cfg.s {
        Some(s) => s,
        None => kappa_pq(p, q, cfg.d)?,
    };
    let mut rep = Report::new(&["sample", "N", "d", "p", "q", "s", "ratio"]);
    let mut worst = 0.0f64;
    for k in 0..cfg.samples.unwrap_or(3) {
        let f = cfg.random_field(band, k as u64)?;
        let r = strichartz_ratio_auto(&f, p, q, s, &cfg.norm_options())?;
        worst = worst.max(r);
        rep.row(vec![k.into(), band.into(), cfg.d.get().into(), p.into(), q.into(), s.into(), r.into()]);
    }
    rep.note("max_ratio", worst);
    rep.note("kappa_pq", kappa_pq(p, q, cfg.d)?);
    Ok(rep)
}

fn cmd_sharpness(cfg: &RunConfig) -> Result<Report> {
    let p = cfg.require_p()?;
    let kappa = kappa_p(p, cfg.d)?;
    let s = cfg.s.unwrap_or(kappa - 0.1).max(0.0);
    let degrees = match &cfg.degrees {
        Some(d) => d.clone(),
        None => log_spaced_degrees(16, 256, 2)?,
    };
    let res = sharpness_sweep(p, s, cfg.d, &degrees, &cfg.norm_options())?;
    let mut rep = Report::new(&sweep_columns());
    for fam in &res.families {
        push_sweep_rows(&mut rep, &fam.rows);
    }
    rep.note("slope", res.fit.slope);
    rep.note("slope_stderr", res.fit.stderr);
    rep.note("steepest_family", res.family.to_string());
    rep.note("expected_slope", kappa - s);
    Ok(rep)
}

fn cmd_solve_potential(cfg: &RunConfig) -> Result<Report> {
    let spec = match &cfg.potential {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidParameter(format!("cannot read potential {}: {e}", path.display())))?;
            serde_json::from_str::<PotentialSpec>(&text)
                .map_err(|e| Error::InvalidParameter(format!("bad potential {}: {e}", path.display())))?
        }
        None => PotentialSpec { version: 1, d: cfg.d, terms: Vec::new() },
    };
    if spec.d != cfg.d {
        return Err(Error::InvalidParameter(format!("potential is on S^{} but --d is {}", spec.d, cfg.d)));
    }
    let potential = Potential::from_spec(&spec)?;
    let p = cfg.p.unwrap_or(4.0);
    let s = match cfg.s {
        Some(s) => s,
        None => kappa_pq(p, 2.0, cfg.d)?,
    };
    let band = cfg.band.unwrap_or(4);
    let f = cfg.random_field(band, 0)?;
    let f = f.scaled(Complex64::new(1.0 / f.l2_norm(), 0.0));
    let times = match cfg.time_samples {
        Some(m) => TimeGrid::new(m)?,
        None => TimeGrid::for_band(band, cfg.d),
    };
    let problem = PotentialProblem::new(f, potential, times, p, s)?;
    let gate = problem.smallness_gate(cfg.samples.unwrap_or(4), cfg.seed)?;
    let (u, report) = problem.picard_solve(cfg.tol, cfg.max_iter)?;
    let mut rep = Report::new(&["iteration", "increment", "ratio"]);
    for (k, inc) in report.increments.iter().enumerate() {
        let ratio = if k == 0 { Cell::Text(String::new()) } else { report.ratios[k - 1].into() };
        rep.row(vec![(k + 1).into(), (*inc).into(), ratio]);
    }
    rep.note("iterations", report.iterations);
    rep.note("contraction_ratio", report.contraction_ratio);
    rep.note("residual", report.residual);
    rep.note("l2_drift", l2_drift(&u));
    rep.note("c0_estimate", gate.c0);
    rep.note("potential_norm", gate.potential_norm);
    rep.note("smallness_bound", gate.bound);
    rep.note("smallness_satisfied", gate.satisfied);
    Ok(rep)
}

fn cmd_selftest(cfg: &RunConfig) -> Result<Report> {
    let mut rep = Report::new(&["check", "value", "tolerance", "pass"]);
    let mut all = true;
    let mut check = |rep: &mut Report, name: &str, value: f64, tol: f64| {
        let pass = value <= tol;
        all &= pass;
        rep.row(vec![name.into(), value.into(), tol.into(), pass.into()]);
    };
    let band = cfg.band.unwrap_or(128);
    let sphere = StreamRng::new(cfg.seed, 0);
    for (name, d) in [("sphere", SphereDim::S2), ("zonal_d3", SphereDim::new(3)?)] {
        let mut rng = sphere.clone();
        let (table, grid) = if d.get() == 2 {
            (random_full_table(band, &mut rng), Grid::Sphere(build_sphere_grid(band)?))
        } else {
            (random_zonal_table(band, d, &mut rng), Grid::Zonal(build_zonal_grid(band, d)?))
        };
        let values = synthesize(&table, &grid)?;
        let back = analyze(&values, &grid, band)?;
        let err = table.as_slice().iter().zip(back.as_slice()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let energy = crate::grid::integrate_real(&values.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>(), &grid)?;
        let parseval = (energy - table.norm_sq()).abs() / table.norm_sq();
        check(&mut rep, &format!("round_trip_{name}"), err, 1e-12);
        check(&mut rep, &format!("parseval_{name}"), parseval, 1e-12);
    }
    let f = cfg.random_field(32, 1)?;
    let mut rng = StreamRng::new(cfg.seed, 2);
    let (mut unitarity, mut periodicity) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let t = Time::from_radians(rng.uniform(0.0, std::f64::consts::TAU));
        let g = propagate(&f, t);
        unitarity = unitarity.max((g.l2_norm() - f.l2_norm()).abs() / f.l2_norm());
        periodicity = periodicity.max(propagate(&f, t + Time::PERIOD).difference(&g)?.l2_norm() / f.l2_norm());
    }
    check(&mut rep, "propagator_unitarity", unitarity, 1e-13);
    check(&mut rep, "propagator_periodicity", periodicity, 1e-13);
    let identity = cmd_identity_check(&RunConfig { samples: Some(3), band: Some(16), p: None, time_samples: None, d: SphereDim::S2, output: None, ..cfg.clone() })?;
    if let Some(Cell::Float(e)) = identity.summary.get("max_relative_error") {
        check(&mut rep, "l2t_identity", *e, 1e-10);
    }
    let continuity = (2..=8)
        .map(|k| {
            let d = SphereDim::new(k)?;
            let (a, b) = kappa_branches(d.critical_exponent(), d)?;
            Ok((a - b).abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    check(&mut rep, "kappa_continuity", continuity, 4.0 * f64::EPSILON);
    rep.failed = !all;
    rep.note("all_passed", all);
    Ok(rep)
}

/// Exit status for an error: 2 for numerical divergence, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } | Error::MaxIterations { .. } | Error::InsufficientTimeResolution { .. } => 2,
        _ => 1,
    }
}

/// Runs the command line `argv` (including the program name), writing the
/// table to `stdout` (or `--output`) and diagnostics to `stderr`.
pub fn run_with<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = RunConfig::from_cli(&cli).and_then(|cfg| {
        let rep = match cli.command {
            Command::Kappa => cmd_kappa(&cfg),
            Command::IdentityCheck => cmd_identity_check(&cfg),
            Command::Sweep => cmd_sweep(&cfg),
            Command::Strichartz => cmd_strichartz(&cfg),
            Command::Sharpness => cmd_sharpness(&cfg),
            Command::SolvePotential => cmd_solve_potential(&cfg),
            Command::Selftest => cmd_selftest(&cfg),
        }?;
        Ok((cfg, rep))
    });
    match result {
        Ok((cfg, rep)) => {
            let (table, notes) = rep.render(cfg.format);
            let written = match &cfg.output {
                Some(path) => fs::write(path, table.as_bytes()),
                None => stdout.write_all(table.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                return 1;
            }
            let _ = stderr.write_all(notes.as_bytes());
            if rep.failed {
                1
            } else {
                0
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// [`run_with`] on the process streams.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("sphere-strichartz").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn degree_lists() {
        assert_eq!(parse_degrees("16:64").unwrap(), vec![16, 23, 32, 45, 64]);
        assert_eq!(parse_degrees("16:64:1").unwrap(), vec![16, 32, 64]);
        assert_eq!(parse_degrees("3, 5,9").unwrap(), vec![3, 5, 9]);
        assert!(parse_degrees("a:b").is_err());
        assert!(parse_degrees("1:2:3:4").is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.25, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn kappa_command() {
        let (code, out, err) = run_capture(&["kappa", "--d", "2", "--p", "8"]);
        assert_eq!(code, 0);
        let row = out.lines().nth(1).unwrap();
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[3].parse::<f64>().unwrap(), 0.25);
        assert_eq!(cells[5], "supercritical");
        assert!(err.contains("branch = supercritical"));
    }

    #[test]
    fn validation_errors_exit_with_one() {
        assert_eq!(run_capture(&["kappa", "--d", "2", "--p", "1"]).0, 1);
        assert_eq!(run_capture(&["kappa", "--d", "2"]).0, 1);
        assert_eq!(run_capture(&["kappa", "--bogus"]).0, 1);
        assert_eq!(run_capture(&["frobnicate"]).0, 1);
        assert_eq!(run_capture(&["sweep", "--p", "inf", "--family", "nope"]).0, 1);
        assert_eq!(run_capture(&["--help"]).0, 0);
    }

    #[test]
    fn json_output() {
        let (code, out, _) = run_capture(&["kappa", "--p", "inf", "--format", "json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["rows"][0]["kappa_p"], json!(0.5));
        assert_eq!(v["rows"][0]["p"], json!("inf"));
    }

    #[test]
    fn exit_codes_for_errors() {
        assert_eq!(exit_code(&Error::Divergence { ratio: 1.5, streak: 3 }), 2);
        assert_eq!(exit_code(&Error::MaxIterations { iterations: 3, last_increment: 1.0 }), 2);
        assert_eq!(exit_code(&Error::Domain("x".into())), 1);
    }
}
