//! Command-line front end. Every command takes either `--config FILE` (a
//! JSON [`RunConfig`]) or flags, writes one JSON report and optionally CSV
//! plot data.
//!
//! Exit codes: 0 success, 1 certificate failure, 2 input error, 3 numeric
//! failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::deform::{run_pipeline, run_pipeline_extrapolated, PipelineConfig};
use crate::error::{Error, Result};
use crate::geometry::{curvature_excess, scalar_curvature, GridSpec, Metric, MetricSpec, Profile};
use crate::grid::{GridField, Rank, Spacing};
use crate::initial_data::{energy_current, null_expansions, InitialData, InitialDataSpec, KSpec};
use crate::mass::{causal_class, energy_momentum, DEFAULT_CAUSAL_TOL};
use crate::shield::{
    boundary_margin, build_shield, inextendibility_radius, largeness_certificate, verify_shield, LargenessMode,
    ShieldRegions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ShieldMode {
    Hyperbolic,
    InitialData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "margin", rename_all = "snake_case")]
pub enum MarginSpec {
    /// R + n(n-1) of the metric.
    CurvatureExcess,
    Constant { value: f64 },
}

fn default_radii() -> Vec<f64> {
    vec![6.0, 8.0, 10.0, 12.0]
}
fn default_gamma() -> f64 {
    0.5
}

/// A complete, serializable description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Mass {
        metric: MetricSpec,
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
    },
    Curvature {
        metric: MetricSpec,
    },
    Dec {
        data: InitialDataSpec,
    },
    Deform {
        #[serde(flatten)]
        pipeline: PipelineConfig,
        #[serde(default)]
        extrapolate: bool,
    },
    Shield {
        mode: ShieldMode,
        /// Hyperbolic mode: the metric, verified as data (g, -g).
        #[serde(default)]
        metric: Option<MetricSpec>,
        /// Initial-data mode.
        #[serde(default)]
        data: Option<InitialDataSpec>,
        regions: ShieldRegions,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        cap: Option<f64>,
    },
    Boundary {
        n: usize,
        d0: f64,
        d1: f64,
        kappa: f64,
    },
    Inextend {
        metric: MetricSpec,
        margin: MarginSpec,
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
    },
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Mass { .. } => "mass",
            RunConfig::Curvature { .. } => "curvature",
            RunConfig::Dec { .. } => "dec",
            RunConfig::Deform { .. } => "deform",
            RunConfig::Shield { .. } => "shield",
            RunConfig::Boundary { .. } => "boundary",
            RunConfig::Inextend { .. } => "inextend",
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Parser)]
#[command(name = "ahmass", version, about = "Mass, curvature and shielding tools for asymptotically hyperbolic data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Output {
    /// Read the whole run from this JSON file; other input flags are ignored.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// JSON report destination (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV plot data destination.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct MetricArgs {
    /// hyperbolic, euclidean, acg, schwarzschild_ads, schwarzschild_ads_areal, schwarzschild, wang
    #[arg(long, default_value = "hyperbolic")]
    pub preset: String,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub mass: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub r0: f64,
    #[arg(long, default_value_t = 12.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 2001)]
    pub count: usize,
}

impl MetricArgs {
    fn profile(&self) -> Result<Profile> {
        let mut m = Map::new();
        m.insert("preset".into(), Value::String(self.preset.clone()));
        for (k, v) in [("mass", self.mass), ("mu0", self.mu0), ("a", self.a)] {
            if let Some(v) = v {
                m.insert(k.into(), json!(v));
            }
        }
        serde_json::from_value(Value::Object(m)).map_err(|e| Error::Parse(format!("preset: {e}")))
    }

    fn grid(&self) -> GridSpec {
        GridSpec { r0: self.r0, r_max: self.r_max, count: self.count, spacing: Spacing::UniformR }
    }

    fn spec(&self) -> Result<MetricSpec> {
        Ok(MetricSpec::Warped { n: self.n, grid: self.grid(), profile: self.profile()? })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy-momentum vector and causal class.
    Mass {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[command(flatten)]
        io: Output,
    },
    /// Scalar curvature profile.
    Curvature {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        io: Output,
    },
    /// μ, J, DEC margin and null expansions for k = c g.
    Dec {
        #[command(flatten)]
        metric: MetricArgs,
        /// Constant c in k = c g.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        k_trace: f64,
        #[command(flatten)]
        io: Output,
    },
    /// Glue, solve the conformal equation and verify the result.
    Deform {
        /// Profile of the original metric (snake_case preset).
        #[arg(long, default_value = "schwarzschild_ads")]
        preset: String,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
        mass: f64,
        #[arg(long, default_value_t = 6.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.05)]
        tau: f64,
        #[arg(long, default_value_t = 0.005)]
        step: f64,
        /// Extrapolate the deformed mass from steps h and h/2.
        #[arg(long)]
        extrapolate: bool,
        /// CSV of the solver iteration log.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        io: Output,
    },
    /// Region distances, largeness certificate, shield construction and checks.
    Shield {
        #[arg(long, value_enum, default_value = "initial-data")]
        mode: ShieldMode,
        #[command(flatten)]
        metric: MetricArgs,
        /// Initial-data mode: k = -g/√a.
        #[arg(long, default_value_t = 1.0)]
        acg_a: f64,
        #[arg(long)]
        r_u0: Option<f64>,
        #[arg(long)]
        r_u1: Option<f64>,
        #[arg(long)]
        r_u2: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long)]
        cap: Option<f64>,
        #[command(flatten)]
        io: Output,
    },
    /// Mean-curvature threshold n - 1 + 2κD₁/(4 - κD₀D₁).
    Boundary {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long)]
        d0: Option<f64>,
        #[arg(long)]
        d1: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[command(flatten)]
        io: Output,
    },
    /// Minimal shield-fitting collar depth.
    Inextend {
        #[command(flatten)]
        metric: MetricArgs,
        /// Constant margin; the curvature excess of the metric when absent.
        #[arg(long, allow_negative_numbers = true)]
        margin: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[command(flatten)]
        io: Output,
    },
}

impl Command {
    fn io(&self) -> &Output {
        match self {
            Command::Mass { io, .. }
            | Command::Curvature { io, .. }
            | Command::Dec { io, .. }
            | Command::Deform { io, .. }
            | Command::Shield { io, .. }
            | Command::Boundary { io, .. }
            | Command::Inextend { io, .. } => io,
        }
    }

    fn log(&self) -> Option<&Path> {
        match self {
            Command::Deform { log, .. } => log.as_deref(),
            _ => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Mass { .. } => "mass",
            Command::Curvature { .. } => "curvature",
            Command::Dec { .. } => "dec",
            Command::Deform { .. } => "deform",
            Command::Shield { .. } => "shield",
            Command::Boundary { .. } => "boundary",
            Command::Inextend { .. } => "inextend",
        }
    }

    /// The run described by the flags.
    pub fn to_config(&self) -> Result<RunConfig> {
        let missing = |name: &'static str| Error::InvalidParameter { name, detail: "required flag missing".into() };
        Ok(match self {
            Command::Mass { metric, radii, .. } => {
                RunConfig::Mass { metric: metric.spec()?, radii: radii.clone().unwrap_or_else(default_radii) }
            }
            Command::Curvature { metric, .. } => RunConfig::Curvature { metric: metric.spec()? },
            Command::Dec { metric, k_trace, .. } => RunConfig::Dec {
                data: InitialDataSpec::Explicit { metric: metric.spec()?, k: KSpec::TraceConstant { c: *k_trace } },
            },
            Command::Deform { preset, n, mass, lambda, tau, step, extrapolate, .. } => {
                let args = MetricArgs {
                    preset: preset.clone(),
                    n: *n,
                    mass: Some(*mass),
                    mu0: Some(*mass),
                    a: None,
                    r0: 1.0,
                    r_max: 2.0,
                    count: 2,
                };
                let mut pipeline = PipelineConfig::new(*n, args.profile()?, *lambda);
                pipeline.tau = *tau;
                pipeline.step = *step;
                RunConfig::Deform { pipeline, extrapolate: *extrapolate }
            }
            Command::Shield { mode, metric, acg_a, r_u0, r_u1, r_u2, gamma, cap, .. } => {
                let regions = ShieldRegions {
                    r_u0: r_u0.ok_or_else(|| missing("r_u0"))?,
                    r_u1: r_u1.ok_or_else(|| missing("r_u1"))?,
                    r_u2: r_u2.ok_or_else(|| missing("r_u2"))?,
                };
                let spec = metric.spec()?;
                let (metric, data) = match mode {
                    ShieldMode::Hyperbolic => (Some(spec), None),
                    ShieldMode::InitialData => (
                        None,
                        Some(InitialDataSpec::Explicit {
                            metric: spec,
                            k: KSpec::TraceConstant { c: -1.0 / acg_a.sqrt() },
                        }),
                    ),
                };
                RunConfig::Shield { mode: *mode, metric, data, regions, gamma: *gamma, cap: *cap }
            }
            Command::Boundary { n, d0, d1, kappa, .. } => RunConfig::Boundary {
                n: *n,
                d0: d0.ok_or_else(|| missing("d0"))?,
                d1: d1.ok_or_else(|| missing("d1"))?,
                kappa: kappa.ok_or_else(|| missing("kappa"))?,
            },
            Command::Inextend { metric, margin, radii, .. } => RunConfig::Inextend {
                metric: metric.spec()?,
                margin: margin.map_or(MarginSpec::CurvatureExcess, |value| MarginSpec::Constant { value }),
                radii: radii.clone().unwrap_or_else(default_radii),
            },
        })
    }
}

/// Plot data as a header and rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: vec![] }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format_float(*x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// Outcome of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub result: Value,
    /// False when a certificate or check fails.
    pub pass: bool,
    pub table: Option<Table>,
    pub log: Option<Table>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn hyperbolic_gate(n: usize) -> Result<()> {
    if n < 4 {
        Err(Error::Dimension { n, min: 4 })
    } else {
        Ok(())
    }
}

fn perturbed(metric: &Metric) -> Result<crate::geometry::PerturbedMetric> {
    match metric {
        Metric::Perturbed(p) => Ok(p.clone()),
        Metric::Warped(w) => w.to_perturbed(metric.n() as f64),
    }
}

/// Move each flux radius to the nearest grid node.
fn snap(metric: &Metric, radii: &[f64]) -> Result<Vec<f64>> {
    let g = metric.grid();
    radii.iter().map(|&r| g.nearest_index(r).map(|i| g.nodes()[i])).collect()
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match cfg {
        RunConfig::Mass { metric, radii } => {
            let m = metric.build()?;
            let radii = snap(&m, radii)?;
            let v = energy_momentum(&perturbed(&m)?, &radii)?;
            let class = causal_class(&v, DEFAULT_CAUSAL_TOL);
            Ok(Outcome {
                result: json!({ "energy_momentum": to_value(&v), "class": to_value(&class), "radii": radii }),
                pass: true,
                table: None,
                log: None,
            })
        }
        RunConfig::Curvature { metric } => {
            let m = metric.build()?;
            let r = scalar_curvature(&m)?;
            let e = curvature_excess(&m)?;
            let mut t = Table::new(vec!["r", "scalar_curvature", "excess"]);
            for (i, x) in m.grid().nodes().iter().enumerate() {
                t.rows.push(vec![*x, r.values()[i], e.values()[i]]);
            }
            let (lo, hi) = e.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
            Ok(Outcome {
                result: json!({ "n": m.n(), "min_excess": lo, "max_excess": hi }),
                pass: true,
                table: Some(t),
                log: None,
            })
        }
        RunConfig::Dec { data } => {
            let d = data.build()?;
            let cur = energy_current(&d)?;
            let mut t = Table::new(vec!["r", "mu", "j", "dec_margin", "theta_plus", "theta_minus"]);
            let (mut worst, mut at) = (f64::INFINITY, f64::NAN);
            for (i, x) in d.grid().nodes().iter().enumerate() {
                let (tp, tm) = null_expansions(&d, *x)?;
                let m = cur.dec_margin.values()[i];
                if m < worst {
                    worst = m;
                    at = *x;
                }
                t.rows.push(vec![*x, cur.mu.values()[i], cur.j.values()[i], m, tp, tm]);
            }
            Ok(Outcome {
                result: json!({ "min_dec_margin": worst, "min_dec_margin_radius": at, "dec_holds": worst >= 0.0 }),
                pass: true,
                table: Some(t),
                log: None,
            })
        }
        RunConfig::Deform { pipeline, extrapolate } => {
            hyperbolic_gate(pipeline.n)?;
            let (run, drift) = if *extrapolate {
                let (run, d) = run_pipeline_extrapolated(pipeline)?;
                (run, Some(d))
            } else {
                (run_pipeline(pipeline)?, None)
            };
            let sol = &run.solution;
            let mut t = Table::new(vec!["r", "v"]);
            for (x, v) in run.original.grid().nodes().iter().zip(sol.v.values()) {
                t.rows.push(vec![*x, *v]);
            }
            let mut log = Table::new(vec!["iteration", "update"]);
            for (k, u) in sol.updates.iter().enumerate() {
                log.rows.push(vec![(k + 1) as f64, *u]);
            }
            Ok(Outcome {
                result: json!({
                    "lambda": sol.lambda,
                    "tau": sol.tau,
                    "iterations": sol.iterations,
                    "solver_residual": sol.residual,
                    "report": to_value(&run.report),
                    "extrapolated": drift.as_ref().map(to_value),
                }),
                pass: true,
                table: Some(t),
                log: Some(log),
            })
        }
        RunConfig::Shield { mode, metric, data, regions, gamma, cap } => {
            regions.validate()?;
            let (data, cert) = match mode {
                ShieldMode::Hyperbolic => {
                    let spec = metric.as_ref().ok_or(Error::InvalidParameter {
                        name: "metric",
                        detail: "hyperbolic mode needs a metric".into(),
                    })?;
                    let m = spec.build()?;
                    hyperbolic_gate(m.n())?;
                    let cert = largeness_certificate(LargenessMode::Hyperbolic(&m), regions)?;
                    let len = m.grid().len();
                    (InitialData::pure_trace(m, vec![-1.0; len])?, cert)
                }
                ShieldMode::InitialData => {
                    let spec = data.as_ref().ok_or(Error::InvalidParameter {
                        name: "data",
                        detail: "initial-data mode needs data".into(),
                    })?;
                    let d = spec.build()?;
                    let cert = largeness_certificate(LargenessMode::InitialData(&d), regions)?;
                    (d, cert)
                }
            };
            let shield = build_shield(regions, data.metric(), *gamma, *cap)?;
            let report = verify_shield(&shield, &data)?;
            let mut t = Table::new(vec!["r", "h", "dh_dr"]);
            for (i, x) in data.grid().nodes().iter().enumerate() {
                t.rows.push(vec![*x, shield.h.values()[i], shield.dh[i]]);
            }
            let pass = cert.pass && report.pass && report.trace_nonpositive;
            Ok(Outcome {
                result: json!({
                    "D0": cert.d0,
                    "D1": cert.d1,
                    "threshold": cert.threshold,
                    "min_margin": cert.min_margin,
                    "pass": pass,
                    "certificate": to_value(&cert),
                    "shield": {
                        "gamma": shield.gamma,
                        "c": shield.c,
                        "t_star": shield.t_star,
                        "blowup_distance": shield.blowup_distance,
                        "blowup_radius": shield.blowup_radius,
                        "cap": shield.cap,
                    },
                    "checks": to_value(&report),
                }),
                pass,
                table: Some(t),
                log: None,
            })
        }
        RunConfig::Boundary { n, d0, d1, kappa } => {
            let threshold = boundary_margin(*d0, *d1, *kappa, *n)?;
            Ok(Outcome { result: json!({ "mean_curvature_threshold": threshold }), pass: true, table: None, log: None })
        }
        RunConfig::Inextend { metric, margin, radii } => {
            let m = metric.build()?;
            let field = match margin {
                MarginSpec::CurvatureExcess => curvature_excess(&m)?,
                MarginSpec::Constant { value } => GridField::new(m.grid().clone(), vec![*value; m.grid().len()], Rank::Scalar)?,
            };
            let res = inextendibility_radius(&m, &field, &snap(&m, radii)?)?;
            Ok(Outcome { result: to_value(&res), pass: true, table: None, log: None })
        }
    }
}

/// Floats as 17 significant digits; non-finite values as strings.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn write_json(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => out.push_str(&i.to_string()),
            (_, Some(u)) => out.push_str(&u.to_string()),
            _ => out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (k, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(x, indent + 1, out);
                out.push_str(if k + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (k, (key, x)) in m.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_json(x, indent + 1, out);
                out.push_str(if k + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// JSON text with fixed float formatting.
pub fn render(v: &Value) -> String {
    let mut s = String::new();
    write_json(v, 0, &mut s);
    s.push('\n');
    s
}

/// Replace the target file in one rename.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::Io(e.to_string()))?;
    tmp.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string()))?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ZeroDistance { .. } | Error::ShieldDoesNotFit { .. } => EXIT_CERTIFICATE,
        e if e.is_numeric() => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

fn load_config(path: &Path, expected: &str) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if cfg.command() != expected {
        return Err(Error::Parse(format!("config is for `{}`, not `{expected}`", cfg.command())));
    }
    Ok(cfg)
}

fn envelope(command: &str, hash: Option<String>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool".into(), json!("ahmass"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    m.insert("config_hash".into(), hash.map_or(Value::Null, Value::String));
    m
}

fn emit(io: &Output, text: &str) -> Result<()> {
    match &io.out {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cmd = &cli.command;
    let io = cmd.io();
    let cfg = match &io.config {
        Some(p) => load_config(p, cmd.name()),
        None => cmd.to_config(),
    };
    let hash = cfg.as_ref().ok().map(RunConfig::hash);
    let mut env = envelope(cmd.name(), hash);
    let outcome = cfg.and_then(|c| {
        env.insert("config".into(), to_value(&c));
        execute(&c)
    });
    let (code, written) = match outcome {
        Ok(o) => {
            let code = if o.pass { EXIT_OK } else { EXIT_CERTIFICATE };
            env.insert("status".into(), json!(if o.pass { "ok" } else { "certificate-fail" }));
            env.insert("result".into(), o.result.clone());
            let mut written = Ok(());
            if let (Some(p), Some(t)) = (&io.csv, &o.table) {
                written = write_atomic(p, &t.to_csv());
            }
            if let (Some(p), Some(t), Ok(())) = (cmd.log(), &o.log, &written) {
                written = write_atomic(p, &t.to_csv());
            }
            (code, written)
        }
        Err(e) => {
            env.insert("status".into(), json!("error"));
            env.insert("error".into(), json!({ "kind": e.kind(), "message": e.to_string() }));
            eprintln!("ahmass: {e}");
            (exit_code(&e), Ok(()))
        }
    };
    let written = written.and_then(|_| emit(io, &render(&Value::Object(env))));
    match written {
        Ok(()) => code,
        Err(e) => {
            eprintln!("ahmass: {e}");
            EXIT_INPUT
        }
    }
}

/// Parse arguments and run; clap usage errors exit with code 2.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_fixed_width() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(f64::INFINITY), "inf");
        let v = json!({ "x": 1.5, "k": 3, "s": "a\"b" });
        assert_eq!(render(&v), "{\n  \"k\": 3,\n  \"s\": \"a\\\"b\",\n  \"x\": 1.5000000000000000e0\n}\n");
    }

    #[test]
    fn config_round_trips() {
        let cli = Cli::try_parse_from(["ahmass", "mass", "--preset", "wang", "--mu0", "0.3"]).unwrap();
        let cfg = cli.command.to_config().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::RegionNesting { r_u0: 3.0, r_u1: 1.0, r_u2: 5.0 }), EXIT_INPUT);
        assert_eq!(exit_code(&Error::NonConvergent { detail: String::new() }), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::ZeroDistance { which: "D0" }), EXIT_CERTIFICATE);
    }
}
