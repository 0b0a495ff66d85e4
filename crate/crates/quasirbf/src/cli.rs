//! Command-line front end. `run` takes the full argument vector and returns the
//! process exit code: 0 success, 2 invalid input, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::{classify_regime, expansion, feasibility_of, QiFeasibility};
use crate::error::{Error, Result};
use crate::interp::{convergence_study, reproduction_test, StudyOptions, TestFunction};
use crate::lagrange::{stencil_for, Stencil};
use crate::mellin::{default_eps_list, eval_ft, eval_ft_closed_form_d1, oracle_hankel, MbIntegrand};
use crate::rbf_model::RbfSpec;
use crate::sobolev::ladder_check;

pub const VERSION_LINE: &str = concat!("# quasirbf ", env!("CARGO_PKG_VERSION"));

const CATALOG_HELP: &str = "Test functions (convergence --function):
  gaussian-bump          exp(-|x|^2)
  gaussian-bump:<w>      exp(-|x|^2 / w^2)
  trig-product           prod cos(x_i)
  runge                  1 / (1 + 25 |x|^2)

Specs are JSON, inline or in a file, e.g.
  {\"family\":\"tps\",\"n\":2,\"c\":1.0,\"d\":1}
  {\"family\":\"power\",\"n\":4,\"c\":1.0,\"lambda\":-2.0,\"beta\":-0.5}

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
QUASIRBF_THREADS caps the number of worker threads.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "quasirbf", version, about = "RBF transforms, quasi-Lagrange stencils and quasi-interpolation checks", after_help = CATALOG_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// JSON object of flag values; flags given on the command line win
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the generalized Fourier transform at a list of s values
    Transform {
        /// RBF spec: a JSON file or inline JSON
        #[arg(long)]
        spec: String,
        #[arg(long = "s", value_delimiter = ',', required = true, allow_negative_numbers = true)]
        s: Vec<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Add the damped-quadrature oracle and its relative deviation
        #[arg(long)]
        oracle: bool,
        /// Add the Bessel closed form (d = 1 thin-plate splines only)
        #[arg(long)]
        closed_form: bool,
        /// Refuse specs whose regime admits no finite stencil
        #[arg(long)]
        require_feasible: bool,
    },
    /// Origin expansion of the transform
    Asymptotics {
        #[arg(long)]
        spec: String,
        #[arg(long, allow_negative_numbers = true)]
        up_to_power: Option<f64>,
    },
    /// Regime report for a power-family spec
    Classify {
        #[arg(long)]
        spec: String,
    },
    /// Quasi-Lagrange stencil for a spec
    Stencil {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        support_radius: Option<u32>,
    },
    /// Polynomial reproduction residuals per monomial
    Reproduce {
        #[arg(long)]
        spec: String,
        /// Stencil JSON file; built from the spec when absent
        #[arg(long)]
        stencil: Option<String>,
        #[arg(long)]
        support_radius: Option<u32>,
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        h: f64,
        /// Truncation radius in grid units
        #[arg(long, default_value_t = 48)]
        box_margin: u32,
        /// Residual threshold for the `reproduced` column
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
    /// Sup-error convergence study on h Z^n
    Convergence {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        stencil: Option<String>,
        #[arg(long)]
        support_radius: Option<u32>,
        /// Test function name (see below)
        #[arg(long, default_value = "gaussian-bump")]
        function: String,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        h: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        half_width: f64,
        #[arg(long, default_value_t = 16)]
        test_points: usize,
        #[arg(long, default_value_t = 1e-10)]
        tail_tol: f64,
    },
    /// c_beta table and weighted-sum check for approximation order k
    Ladder {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        stencil: Option<String>,
        #[arg(long)]
        support_radius: Option<u32>,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        s_smooth: f64,
        #[arg(long, default_value_t = 4)]
        radius: u32,
    },
}

/// A JSON document plus its tabular CSV rendering.
struct Output {
    json: Value,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("output serializes")
}

fn read_text(arg: &str, what: &str) -> Result<String> {
    if arg.trim_start().starts_with('{') {
        return Ok(arg.to_string());
    }
    fs::read_to_string(arg).map_err(|e| Error::param(what, format!("cannot read `{arg}`: {e}")))
}

fn load_spec(arg: &str) -> Result<RbfSpec> {
    RbfSpec::from_json(&read_text(arg, "spec")?)
}

fn load_stencil(spec: &RbfSpec, file: &Option<String>, radius: Option<u32>) -> Result<Stencil> {
    let st = match file {
        Some(f) => Stencil::from_json(&read_text(f, "stencil")?)?,
        None => stencil_for(spec, radius)?,
    };
    if st.n != spec.n() {
        return Err(Error::param("stencil", "dimension differs from the spec"));
    }
    Ok(st)
}

fn feasibility(spec: &RbfSpec) -> Result<(QiFeasibility, f64)> {
    let exp = expansion(spec, None)?;
    let lead = exp.leading().ok_or_else(|| Error::NoConvergence("empty expansion".into()))?;
    Ok(feasibility_of(lead))
}

fn cmd_transform(spec: &RbfSpec, s: &[f64], tol: f64, oracle: bool, closed: bool, require: bool) -> Result<Output> {
    if let Some(bad) = s.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::param("s", format!("{bad} is not a positive number")));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if require {
        let (verdict, _) = feasibility(spec)?;
        if verdict != QiFeasibility::FiniteStencil {
            return Err(Error::param("spec", format!("regime classified as {verdict:?}; no finite stencil")));
        }
    }
    let ig = MbIntegrand::full(*spec)?;
    let mut header: Vec<String> = ["s", "value", "method", "terms", "truncation_estimate"].map(String::from).to_vec();
    if closed {
        header.extend(["closed_form", "closed_form_rel_dev"].map(String::from));
    }
    if oracle {
        header.extend(["oracle", "oracle_rel_dev"].map(String::from));
    }
    let mut rows = Vec::new();
    let mut items = Vec::new();
    for &sv in s {
        let v = eval_ft(&ig, sv, tol)?;
        let mut row = vec![num(sv), num(v.value), format!("{:?}", v.method), v.series_terms_used.to_string(), num(v.truncation_estimate)];
        let mut item = json!({
            "s": sv,
            "value": v.value,
            "method": v.method,
            "terms": v.series_terms_used,
            "truncation_estimate": v.truncation_estimate,
        });
        if closed {
            let c = eval_ft_closed_form_d1(spec, sv)?;
            let dev = ((v.value - c) / c).abs();
            row.extend([num(c), num(dev)]);
            item["closed_form"] = json!(c);
            item["closed_form_rel_dev"] = json!(dev);
        }
        if oracle {
            let o = oracle_hankel(spec, sv, &default_eps_list(sv))?;
            let dev = ((v.value - o) / o).abs();
            row.extend([num(o), num(dev)]);
            item["oracle"] = json!(o);
            item["oracle_rel_dev"] = json!(dev);
        }
        rows.push(row);
        items.push(item);
    }
    Ok(Output { json: json!({ "spec": spec, "rows": items }), header, rows })
}

fn cmd_asymptotics(spec: &RbfSpec, up: Option<f64>) -> Result<Output> {
    let e = expansion(spec, up)?;
    let header = ["power", "coeff", "coeff_of_log", "has_log"].map(String::from).to_vec();
    let rows = e
        .terms
        .iter()
        .map(|t| vec![num(t.power), num(t.coeff), num(t.coeff_of_log), t.has_log.to_string()])
        .collect();
    Ok(Output { json: to_value(&e), header, rows })
}

fn key_value(v: &Value) -> (Vec<String>, Vec<Vec<String>>) {
    let rows = match v {
        Value::Object(m) => m
            .iter()
            .map(|(k, x)| {
                let cell = match x {
                    Value::Number(n) => n.as_f64().map(num).unwrap_or_else(|| n.to_string()),
                    Value::String(s) => s.clone(),
                    other => other.to_string().replace(',', ";"),
                };
                vec![k.clone(), cell]
            })
            .collect(),
        other => vec![vec!["value".into(), other.to_string()]],
    };
    (vec!["field".into(), "value".into()], rows)
}

fn cmd_classify(spec: &RbfSpec) -> Result<Output> {
    let json = to_value(&classify_regime(spec)?);
    let (header, rows) = key_value(&json);
    Ok(Output { json, header, rows })
}

fn cmd_stencil(spec: &RbfSpec, radius: Option<u32>) -> Result<Output> {
    let st = stencil_for(spec, radius)?;
    let n = st.n as usize;
    let mut header: Vec<String> = (1..=n).map(|i| format!("a{i}")).collect();
    header.push("mu".into());
    let rows = st
        .entries
        .iter()
        .map(|e| {
            let mut r: Vec<String> = e.offset.iter().map(|v| v.to_string()).collect();
            r.push(num(e.mu));
            r
        })
        .collect();
    Ok(Output { json: to_value(&st), header, rows })
}

fn cmd_reproduce(spec: &RbfSpec, st: &Stencil, degree: u32, h: f64, margin: u32, tol: f64) -> Result<Output> {
    let res = reproduction_test(st, spec, degree, h, margin)?;
    let header = ["exponents", "degree", "max_residual", "scale", "truncation_estimate", "reproduced"]
        .map(String::from)
        .to_vec();
    let mut rows = Vec::new();
    let mut items = Vec::new();
    for r in &res {
        let deg: u32 = r.exponents.iter().sum();
        let ok = r.max_residual <= tol;
        let exps: Vec<String> = r.exponents.iter().map(|v| v.to_string()).collect();
        rows.push(vec![exps.join(" "), deg.to_string(), num(r.max_residual), num(r.scale), num(r.truncation_estimate), ok.to_string()]);
        let mut item = to_value(r);
        item["reproduced"] = json!(ok);
        items.push(item);
    }
    let json = json!({
        "h": h,
        "box_margin": margin,
        "tol": tol,
        "stencil_reproduction_degree": st.reproduction_degree,
        "residuals": items,
    });
    Ok(Output { json, header, rows })
}

fn cmd_convergence(spec: &RbfSpec, st: &Stencil, f: &str, h: &[f64], opts: StudyOptions) -> Result<Output> {
    let f = TestFunction::from_name(f)?;
    let rep = convergence_study(st, spec, &f, h, &opts)?;
    let header = [
        "h",
        "sup_error",
        "roundoff_floor",
        "resolved",
        "fitted_slope",
        "log_corrected_slope",
        "target_order",
        "target_has_log",
    ]
    .map(String::from)
    .to_vec();
    let rows = (0..rep.h_values.len())
        .map(|i| {
            vec![
                num(rep.h_values[i]),
                num(rep.sup_errors[i]),
                num(rep.roundoff_floors[i]),
                rep.resolved[i].to_string(),
                num(rep.fitted_slope),
                num(rep.log_corrected_slope),
                num(rep.target_order),
                rep.target_has_log.to_string(),
            ]
        })
        .collect();
    let mut json = to_value(&rep);
    json["function"] = json!(f.name());
    Ok(Output { json, header, rows })
}

fn cmd_ladder(spec: &RbfSpec, st: &Stencil, k: f64, s: f64, radius: u32) -> Result<Output> {
    let l = ladder_check(st, spec, k, s, radius)?;
    let header = ["beta_index", "beta_norm", "c_beta"].map(String::from).to_vec();
    let rows = l
        .c_beta_table
        .iter()
        .map(|e| {
            let idx: Vec<String> = e.index.iter().map(|v| v.to_string()).collect();
            vec![idx.join(" "), num(e.norm), num(e.c_beta)]
        })
        .collect();
    Ok(Output { json: to_value(&l), header, rows })
}

fn execute(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Transform { spec, s, tol, oracle, closed_form, require_feasible } => {
            cmd_transform(&load_spec(spec)?, s, *tol, *oracle, *closed_form, *require_feasible)
        }
        Command::Asymptotics { spec, up_to_power } => cmd_asymptotics(&load_spec(spec)?, *up_to_power),
        Command::Classify { spec } => cmd_classify(&load_spec(spec)?),
        Command::Stencil { spec, support_radius } => cmd_stencil(&load_spec(spec)?, *support_radius),
        Command::Reproduce { spec, stencil, support_radius, degree, h, box_margin, tol } => {
            let sp = load_spec(spec)?;
            let st = load_stencil(&sp, stencil, *support_radius)?;
            cmd_reproduce(&sp, &st, *degree, *h, *box_margin, *tol)
        }
        Command::Convergence { spec, stencil, support_radius, function, h, half_width, test_points, tail_tol } => {
            let sp = load_spec(spec)?;
            let st = load_stencil(&sp, stencil, *support_radius)?;
            if !(*half_width > 0.0) || *test_points == 0 || !(*tail_tol > 0.0) {
                return Err(Error::param("convergence", "half-width, test-points and tail-tol must be positive"));
            }
            let opts = StudyOptions { half_width: *half_width, test_points: *test_points, tail_tol: *tail_tol };
            cmd_convergence(&sp, &st, function, h, opts)
        }
        Command::Ladder { spec, stencil, support_radius, k, s_smooth, radius } => {
            let sp = load_spec(spec)?;
            let st = load_stencil(&sp, stencil, *support_radius)?;
            cmd_ladder(&sp, &st, *k, *s_smooth, *radius)
        }
    }
}

fn render(out: &Output, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out.json).expect("output serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::new();
            s.push_str(VERSION_LINE);
            s.push('\n');
            s.push_str(&out.header.join(","));
            s.push('\n');
            for r in &out.rows {
                s.push_str(&r.join(","));
                s.push('\n');
            }
            s
        }
    }
}

/// Splice `--config` entries in as flags, skipping any flag already present.
fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| Error::param("config", format!("cannot read `{path}`: {e}")))?;
    let cfg: Value = serde_json::from_str(&text).map_err(|e| Error::param("config", e.to_string()))?;
    let Value::Object(map) = cfg else {
        return Err(Error::param("config", "must be a JSON object"));
    };
    let mut out = args;
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if strs.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        match v {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| x.as_str().map(String::from).unwrap_or_else(|| x.to_string())).collect();
                out.push(format!("{flag}={}", parts.join(",")).into());
            }
            Value::String(s) => out.push(format!("{flag}={s}").into()),
            other => out.push(format!("{flag}={other}").into()),
        }
    }
    Ok(out)
}

fn init_threads() {
    if let Some(n) = std::env::var("QUASIRBF_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process fails harmlessly
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        2
    } else {
        3
    }
}

/// Parse, execute and write; returns the exit code.
pub fn run(args: Vec<OsString>) -> i32 {
    init_threads();
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let out = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let text = render(&out, cli.format);
    let written = match &cli.out {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write `{}`: {e}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(m) = written {
        eprintln!("error: {m}");
        return 2;
    }
    0
}
