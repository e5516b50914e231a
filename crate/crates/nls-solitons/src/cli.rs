//! Command-line front end: `analyze`, `ground-state`, `profile`,
//! `simulate`, `classify` and `gn-check`.
//!
//! JSON goes to stdout (or `--out`) with sorted keys and floats printed to
//! 17 significant digits, so identical inputs give byte-identical output.
//! Exit codes: 0 success, 2 usage or validation error, 3 numerical
//! non-convergence.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::classify::{match_standard_form, rank_and_kernel, SearchBudget};
use crate::dynamics::{
    blowup_experiment, ground_states, pseudo_conformal_experiment, soliton_experiment, stability_experiment,
    Diagnostics, Outcome, Perturbation, RunConfig,
};
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::ground_state::{
    action_min, gn_constant, gn_ratio, gn_sweep, potential_well, profile_functionals, stability_verdict,
    vector_residual,
};
use crate::scalar_profile::{s_c, solve_q, GridParams};
use crate::snapshot;
use crate::sphere_critical::{critical_points, family_name, ground_set, CriticalSet, Orbit};
use crate::system_model::{admissible_abc, parse_system_json, spec_to_cv, GForm, Pair, StandardForm, SystemSpec};

pub const SCHEMA: &str = "nls-solitons/1";

#[derive(Parser, Debug)]
#[command(name = "nls-solitons", version, about = "Standing waves and dynamics of two-component NLS systems")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format where a command supports both.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimum and critical points of g on the unit sphere.
    Analyze(SystemArgs),
    /// Ground states, action level, sharp GN constant and stability verdict.
    GroundState(GroundStateArgs),
    /// The radial profile Q solving −ΔQ + Q − Q^{p−1} = 0.
    Profile(ProfileArgs),
    /// Time evolution experiments on a periodic grid.
    Simulate(SimulateArgs),
    /// Match a cubic system to a standard form by a real change of variables.
    Classify(SystemArgs),
    /// Test the sharp GN inequality on random fields.
    GnCheck(GnArgs),
}

/// System selection: a JSON file or a standard form with its parameters.
#[derive(Args, Debug, Clone)]
struct SystemArgs {
    /// System definition file (JSON).
    #[arg(long, conflicts_with = "form")]
    system: Option<PathBuf>,
    /// Standard form tag: NLS1 … NLS5 or CO.
    #[arg(long)]
    form: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha3: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Space dimension (overrides the file's `d` when given).
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Args, Debug)]
struct GroundStateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Write the first ground state as CSV `r,re1,im1,re2,im2`.
    #[arg(long)]
    dump_profile: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 4.0)]
    p: f64,
    #[arg(long, default_value_t = 1e-3)]
    dr: f64,
    #[arg(long, default_value_t = 20.0)]
    r_max: f64,
    #[arg(long, default_value_t = 15.0)]
    r_match: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Soliton,
    Stability,
    Blowup,
    Pseudoconformal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PerturbationKind {
    Scale,
    Random,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, value_enum)]
    experiment: Experiment,
    /// Points per axis (power of two).
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    /// Box half-width L (the box is [−L, L)^d).
    #[arg(long = "box", default_value_t = 20.0)]
    half_width: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long = "T", default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Record diagnostics every this many steps.
    #[arg(long, default_value_t = 100)]
    sample_every: usize,
    /// Radius R of the localized virial weight (J column).
    #[arg(long)]
    virial_radius: Option<f64>,
    /// Stability experiment: perturbation size ε.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = PerturbationKind::Scale)]
    perturbation: PerturbationKind,
    /// Blowup experiment: initial amplitude factor c in cΦ.
    #[arg(long, default_value_t = 1.05)]
    amplitude: f64,
    /// Pseudo-conformal experiment: blowup time is b².
    #[arg(long, default_value_t = 3.0)]
    b: f64,
    /// Write the initial field as a binary snapshot.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GnArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 128)]
    grid: usize,
    #[arg(long = "box", default_value_t = 10.0)]
    half_width: f64,
    /// Spectral cutoff of the random fields.
    #[arg(long, default_value_t = 3.0)]
    k_max: f64,
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match execute(&cli) {
        Ok(text) => match &cli.out {
            Some(path) => match std::fs::write(path, text) {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    2
                }
            },
            None => {
                let _ = out.write_all(text.as_bytes());
                0
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Analyze(a) => analyze(a).map(|v| to_json(&v)),
        Command::GroundState(a) => ground_state(a).map(|v| to_json(&v)),
        Command::Profile(a) => profile(a, cli.format),
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Classify(a) => classify(a).map(|v| to_json(&v)),
        Command::GnCheck(a) => gn_check(a, cli.seed).map(|v| to_json(&v)),
    }
}

// ---------------------------------------------------------------------------
// JSON helpers

/// Compact JSON formatter printing every float with 17 significant digits.
struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

fn to_json(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    v.serialize(&mut ser).expect("serializing a JSON value cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// A float as JSON (`null` when not finite).
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn pair_json(z: &Pair) -> Value {
    json!([[num(z[0].re), num(z[0].im)], [num(z[1].re), num(z[1].im)]])
}

fn with_schema(mut fields: Map<String, Value>) -> Value {
    fields.insert("schema".into(), json!(SCHEMA));
    Value::Object(fields)
}

// ---------------------------------------------------------------------------
// System selection

fn load_system(a: &SystemArgs) -> Result<SystemSpec> {
    let spec = match (&a.system, &a.form) {
        (Some(path), _) => {
            let mut spec = parse_system_json(&std::fs::read_to_string(path)?)?;
            if let Some(d) = a.d {
                spec.d = d;
                spec.validate()?;
            }
            spec
        }
        (None, Some(tag)) => {
            let mut params = BTreeMap::new();
            let named = [
                ("alpha", a.alpha),
                ("beta", a.beta),
                ("sigma", a.sigma),
                ("alpha1", a.alpha1),
                ("alpha2", a.alpha2),
                ("alpha3", a.alpha3),
                ("r", a.r),
                ("eta", a.eta),
                ("kappa", a.kappa),
                ("gamma", a.gamma),
            ];
            for (k, v) in named {
                if let Some(v) = v {
                    params.insert(k.to_string(), v);
                }
            }
            SystemSpec::standard(StandardForm::from_params(tag, &params)?, a.d.unwrap_or(1))?
        }
        (None, None) => return Err(Error::Validation("give --system <file> or --form <tag>".into())),
    };
    Ok(spec)
}

fn gform_of(spec: &SystemSpec) -> Result<&GForm> {
    spec.gform
        .as_ref()
        .ok_or_else(|| Error::Unsupported("this system has no potential g (gauge n ≠ (1,1) for a λ-system)".into()))
}

fn system_json(spec: &SystemSpec) -> Value {
    let mut m = Map::new();
    m.insert("d".into(), json!(spec.d));
    m.insert("p".into(), num(spec.p));
    m.insert("n".into(), json!(spec.n));
    if let Some(form) = spec.gform.as_ref().and_then(|g| g.tag()) {
        m.insert("form".into(), json!(form.name()));
        m.insert("params".into(), form_params(form));
    }
    if let Some(l) = spec.lambdas {
        m.insert("lambdas".into(), Value::Array(l.iter().map(|&x| num(x)).collect()));
    }
    Value::Object(m)
}

fn form_params(form: &StandardForm) -> Value {
    Value::Object(form.params().into_iter().map(|(k, v)| (k.to_string(), num(v))).collect())
}

fn orbit_json(orbit: &Orbit) -> Value {
    let (kind, extra) = match orbit {
        Orbit::Points(_) => ("points", Value::Null),
        Orbit::FreePhase { nu } => ("free_phase", json!({ "nu": num(*nu) })),
        Orbit::RealCircle => ("real_circle", Value::Null),
        Orbit::WholeSphere => ("whole_sphere", Value::Null),
    };
    json!({
        "kind": kind,
        "generators": Value::Array(orbit.generators().iter().map(pair_json).collect()),
        "symmetries": match orbit {
            Orbit::Points(_) => json!(["common_phase"]),
            Orbit::FreePhase { .. } => json!(["independent_phases"]),
            Orbit::RealCircle => json!(["common_phase", "real_rotation"]),
            Orbit::WholeSphere => json!(["unitary"]),
        },
        "parameters": extra,
    })
}

fn critical_json(s: &CriticalSet, form: Option<&StandardForm>) -> Value {
    json!({
        "label": s.label,
        "family": family_name(form, &s.label).map_or(Value::Null, Value::String),
        "value": num(s.value),
        "orbit": orbit_json(&s.orbit),
        "existence_condition_satisfied": s.exists,
        "is_min": s.is_min,
        "provenance": format!("{:?}", s.provenance).to_lowercase(),
    })
}

// ---------------------------------------------------------------------------
// Subcommands

fn analyze(a: &SystemArgs) -> Result<Value> {
    let spec = load_system(a)?;
    let g = gform_of(&spec)?;
    let form = g.tag();
    let set = ground_set(g);
    let crit = critical_points(g)?;
    let mut m = Map::new();
    m.insert("system".into(), system_json(&spec));
    m.insert("g_min".into(), num(set.g_min));
    m.insert("ground_state_exists".into(), json!(set.g_min < 0.0));
    m.insert("T0".into(), Value::Array(set.t0.iter().map(|s| critical_json(s, form)).collect()));
    m.insert("critical_sets".into(), Value::Array(crit.iter().map(|s| critical_json(s, form)).collect()));
    Ok(with_schema(m))
}

fn ground_state(a: &GroundStateArgs) -> Result<Value> {
    let spec = load_system(&a.system)?;
    let g = gform_of(&spec)?;
    let set = ground_set(g);
    if set.g_min >= 0.0 {
        return Err(Error::NoGroundState { g_min: set.g_min });
    }
    let base = solve_q(spec.d, spec.p, &GridParams::default())?;
    let norms = base.norms();
    let states = ground_states(&spec, a.omega)?;
    let residuals: Vec<Value> = states.iter().map(|vp| num(vector_residual(vp, g))).collect();
    let first = &states[0];
    let f = profile_functionals(first, g);
    let verdict = stability_verdict(spec.d, spec.p, spec.n)?;
    let mut m = Map::new();
    m.insert("system".into(), system_json(&spec));
    m.insert("omega".into(), num(a.omega));
    m.insert("g_min".into(), num(set.g_min));
    m.insert("a".into(), num(first.a));
    m.insert("generators".into(), Value::Array(states.iter().map(|vp| pair_json(&vp.w)).collect()));
    m.insert("action".into(), num(f.action));
    m.insert("action_min".into(), num(action_min(g, spec.d, a.omega, &norms)?));
    m.insert("nehari".into(), num(f.nehari));
    m.insert("C_GN".into(), num(gn_constant(g, spec.d, &norms)?));
    m.insert("gn_ratio".into(), num(gn_ratio(&f, spec.d, spec.p)));
    m.insert(
        "potential_well".into(),
        if s_c(spec.d, spec.p) > 0.0 { num(potential_well(g, spec.d, &norms)?) } else { Value::Null },
    );
    m.insert(
        "verdict".into(),
        json!({ "regime": format!("{:?}", verdict.regime).to_lowercase(), "route": verdict.route.name() }),
    );
    m.insert("residuals".into(), Value::Array(residuals));
    if let Some(path) = &a.dump_profile {
        let mut csv = String::from("r,re1,im1,re2,im2\n");
        for (r, q) in first.profile.radii().iter().zip(first.profile.values()) {
            csv.push_str(&format!(
                "{r:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                first.w[0].re * q,
                first.w[0].im * q,
                first.w[1].re * q,
                first.w[1].im * q
            ));
        }
        std::fs::write(path, csv)?;
    }
    Ok(with_schema(m))
}

fn profile(a: &ProfileArgs, format: Format) -> Result<String> {
    let q = solve_q(a.d, a.p, &GridParams { dr: a.dr, r_max: a.r_max, r_match: a.r_match })?;
    if format == Format::Csv {
        let mut csv = String::from("r,Q\n");
        for (r, v) in q.radii().iter().zip(q.values()) {
            csv.push_str(&format!("{r:.17e},{v:.17e}\n"));
        }
        return Ok(csv);
    }
    let n = q.norms();
    let [poh_grad, poh_lp] = q.pohozaev_defects();
    let mut m = Map::new();
    m.insert("d".into(), json!(a.d));
    m.insert("p".into(), num(a.p));
    m.insert("Q0".into(), num(q.peak()));
    m.insert("norms".into(), json!({ "mass": num(n.mass), "grad": num(n.grad), "lp": num(n.lp) }));
    m.insert("residual".into(), num(q.residual()));
    m.insert("pohozaev_defects".into(), json!([num(poh_grad), num(poh_lp)]));
    m.insert("grid".into(), json!({ "dr": num(a.dr), "r_max": num(a.r_max), "r_match": num(a.r_match) }));
    Ok(to_json(&with_schema(m)))
}

fn simulate(a: &SimulateArgs, seed: u64) -> Result<String> {
    let spec = load_system(&a.system)?;
    let grid = PeriodicGrid::new(spec.d, a.grid, a.half_width)?;
    if a.sample_every == 0 {
        return Err(Error::Validation("--sample-every must be positive".into()));
    }
    let cfg = RunConfig {
        t_end: a.t_end,
        sample_every: a.sample_every,
        omega: a.omega,
        virial_radius: a.virial_radius,
        watch_blowup: false,
    };
    if let Some(path) = &a.snapshot {
        let vp = ground_states(&spec, a.omega)?.swap_remove(0);
        std::fs::write(path, snapshot::encode(&grid, 0.0, &grid.sample_profile(&vp)))?;
    }
    let diag: Diagnostics = match a.experiment {
        Experiment::Soliton => soliton_experiment(&spec, grid, a.omega, a.dt, &cfg)?.0,
        Experiment::Stability => {
            let p = match a.perturbation {
                PerturbationKind::Scale => Perturbation::Scale(a.eps),
                PerturbationKind::Random => Perturbation::Random { eps: a.eps, seed },
            };
            stability_experiment(&spec, grid, a.omega, p, a.dt, &cfg)?
        }
        Experiment::Blowup => blowup_experiment(&spec, grid, a.omega, a.amplitude, a.dt, &cfg)?,
        Experiment::Pseudoconformal => pseudo_conformal_experiment(&spec, grid, a.omega, a.b, a.dt, &cfg)?,
    };
    let mut csv = diag.to_csv();
    if let Outcome::BlowupSignature { t, reason } = &diag.outcome {
        csv.push_str(&format!("# blowup signature at t = {t:.17e}: {reason}\n"));
    }
    Ok(csv)
}

fn classify(a: &SystemArgs) -> Result<Value> {
    let spec = load_system(a)?;
    let mv = spec_to_cv(&spec)?;
    let rk = rank_and_kernel(&mv);
    let abc = admissible_abc(&mv);
    let matched = if abc.is_some() { match_standard_form(&spec, SearchBudget::default())? } else { None };
    let mut m = Map::new();
    m.insert("system".into(), system_json(&spec));
    m.insert("rank_C".into(), json!(rk.rank));
    m.insert(
        "kernel".into(),
        Value::Array(rk.kernel.iter().map(|k| Value::Array(k.iter().map(|&x| num(x)).collect())).collect()),
    );
    m.insert("admissible_abc".into(), abc.map_or(Value::Null, |v| Value::Array(v.iter().map(|&x| num(x)).collect())));
    m.insert(
        "match".into(),
        matched.map_or(Value::Null, |fm| {
            json!({
                "form": fm.form.name(),
                "params": form_params(&fm.form),
                "M": [[num(fm.m[0][0]), num(fm.m[0][1])], [num(fm.m[1][0]), num(fm.m[1][1])]],
                "residual": num(fm.residual),
            })
        }),
    );
    Ok(with_schema(m))
}

fn gn_check(a: &GnArgs, seed: u64) -> Result<Value> {
    let spec = load_system(&a.system)?;
    let g = gform_of(&spec)?;
    let base = solve_q(spec.d, spec.p, &GridParams::default())?;
    let c = gn_constant(g, spec.d, &base.norms())?;
    let grid = PeriodicGrid::new(spec.d, a.grid, a.half_width)?;
    let sweep = gn_sweep(g, grid, c, a.samples, seed, a.k_max);
    let vp = ground_states(&spec, 1.0)?.swap_remove(0);
    let ground = gn_ratio(&profile_functionals(&vp, g), spec.d, spec.p);
    let mut m = Map::new();
    m.insert("system".into(), system_json(&spec));
    m.insert("C_GN".into(), num(c));
    m.insert("samples".into(), json!(sweep.samples));
    m.insert("violations".into(), json!(sweep.violations));
    m.insert("max_ratio".into(), num(sweep.max_ratio));
    m.insert("ground_state_ratio".into(), num(ground));
    m.insert("seed".into(), json!(seed));
    Ok(with_schema(m))
}
