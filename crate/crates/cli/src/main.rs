use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lipfree::generate::{self, Family, GeneratorSpec, Instance};
use lipfree::io;
use lipfree::metric::{check_four_point, check_ultrametric, round_metric, separation_bounds, snowflake, validate_metric};
use lipfree::scalar::{format_rational, rational_from_decimal};
use lipfree::schur::{glue_witness, schur_certificate};
use lipfree::transport::{free_norm, integer_potential_f64, verify_certificate};
use lipfree::tree::{density_interval, distortion_pair, subdominant_ultrametric, tree_cut_norm_exact, tree_embed};
use lipfree::{Error, FiniteMetricSpace, FreeElement};
use serde_json::{json, Value};

/// Largest space accepted from an input file.
const INPUT_POINT_CAP: usize = 200;

#[derive(Parser)]
#[command(name = "lipfree", version, about = "Certified computations in Lipschitz-free spaces of finite metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Worker threads when several inputs are given.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    /// Flattened `path,value` rows; loses structure and precision.
    Csv,
}

#[derive(Args, Clone)]
struct Inputs {
    /// Input file; repeat for a batch.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Check the metric axioms of a space file.
    Validate(Inputs),
    /// Metric axioms plus ultrametric, four-point and separation data.
    Classify(Inputs),
    /// Free-space norm of an element with a verified primal/dual certificate.
    Norm {
        #[command(flatten)]
        inputs: Inputs,
        /// Element file, when the input is a bare space.
        #[arg(long)]
        element: Option<PathBuf>,
        /// Also produce an integer-valued optimal potential.
        #[arg(long)]
        integer_certificate: bool,
    },
    /// Schur witness report for a sequence file.
    Witness {
        #[command(flatten)]
        inputs: Inputs,
        /// Tolerance for the block extraction.
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        /// Recorded in the report; the pipeline itself is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a random instance.
    Generate {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        max_distance: Option<i64>,
        #[arg(long)]
        blocks: Option<usize>,
        #[arg(long)]
        support: Option<usize>,
    },
    /// Embed a four-point space isometrically into a weighted tree.
    TreeEmbed(Inputs),
    /// Norm of an element computed from edge cuts of the tree embedding.
    TreeNorm {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        element: Option<PathBuf>,
    },
    /// Densest component after removing the longest gaps of an interval union.
    Density {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        epsilon: f64,
    },
    /// Low-distortion pair across an equidistant partition of a sample.
    Distortion {
        #[command(flatten)]
        inputs: Inputs,
        /// Number of cells.
        #[arg(long, default_value_t = 10)]
        cells: usize,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
    },
    /// Replace every distance by the ceiling of `scale · d`.
    RoundMetric {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        scale: f64,
    },
    /// Replace every distance by `d^power`.
    Snowflake {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        power: f64,
    },
}

impl Command {
    fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Command::Validate(i) | Command::Classify(i) | Command::TreeEmbed(i) => i.inputs.clone(),
            Command::Norm { inputs, .. }
            | Command::Witness { inputs, .. }
            | Command::TreeNorm { inputs, .. }
            | Command::Density { inputs, .. }
            | Command::Distortion { inputs, .. }
            | Command::RoundMetric { inputs, .. }
            | Command::Snowflake { inputs, .. } => inputs.inputs.clone(),
            Command::Generate { .. } => Vec::new(),
        }
    }
}

/// A finished report and the exit code it earns.
struct Report {
    value: Value,
    code: u8,
}

impl Report {
    fn ok(value: Value) -> Self {
        Report { value, code: 0 }
    }

    fn failed(value: Value) -> Self {
        Report { value, code: 1 }
    }
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Structural(_) | Error::Parse(_) | Error::UnknownLabel(_) | Error::TooLarge { .. } => {
                Failure::Usage(e.to_string())
            }
            e => Failure::Domain(e),
        }
    }
}

impl Failure {
    fn into_report(self) -> Report {
        match self {
            Failure::Usage(message) => Report {
                value: json!({ "error": message }),
                code: 2,
            },
            Failure::Domain(Error::WitnessFailure(failure)) => Report::failed(json!({
                "error": failure.to_string(),
                "failure": serde_json::to_value(&*failure).unwrap_or(Value::Null),
            })),
            Failure::Domain(Error::InvalidMetric(report)) => Report::failed(json!({
                "error": Error::InvalidMetric(report.clone()).to_string(),
                "validation": serde_json::to_value(&report).unwrap_or(Value::Null),
            })),
            Failure::Domain(e) => Report::failed(json!({ "error": e.to_string() })),
        }
    }
}

type Outcome = std::result::Result<Report, Failure>;

fn read_json(path: &Path) -> std::result::Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(io::parse_json(&text)?)
}

fn checked_space(value: &Value) -> std::result::Result<FiniteMetricSpace, Failure> {
    if let Some(points) = value.get("points").and_then(Value::as_array) {
        if points.len() > INPUT_POINT_CAP {
            return Err(Error::TooLarge {
                what: "input space",
                size: points.len(),
                cap: INPUT_POINT_CAP,
            }
            .into());
        }
    }
    Ok(io::space_from_value(value)?)
}

/// A space plus an element, either bundled as `{space, element}` in the
/// input or split across the input and `--element`.
fn space_and_element(input: &Value, element: Option<&Path>) -> std::result::Result<(FiniteMetricSpace, FreeElement), Failure> {
    let (space_value, element_value) = match (input.get("space"), element) {
        (Some(space), None) => {
            let element = input
                .get("element")
                .ok_or_else(|| Failure::Usage("input has a space but no \"element\"; pass --element".into()))?;
            (space.clone(), element.clone())
        }
        (_, Some(path)) => (input.clone(), read_json(path)?),
        (None, None) => return Err(Failure::Usage("an element is required: pass --element".into())),
    };
    let space = checked_space(&space_value)?;
    let element = io::element_from_value(&space, &element_value)?;
    element.check_on(&space)?;
    Ok((space, element))
}

fn cmd_validate(input: &Value) -> Outcome {
    let rows: Vec<Vec<f64>> = input
        .get("dist")
        .and_then(Value::as_array)
        .ok_or_else(|| Failure::Usage("missing \"dist\" array".into()))?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| Failure::Usage("dist rows must be arrays".into()))?
                .iter()
                .map(|v| io::number(v).map_err(Failure::from))
                .collect()
        })
        .collect::<std::result::Result<_, _>>()?;
    let report = validate_metric(&rows)?;
    let value = serde_json::to_value(&report).expect("validation report serializes");
    Ok(if report.ok { Report::ok(value) } else { Report::failed(value) })
}

fn cmd_classify(input: &Value) -> Outcome {
    let validation = cmd_validate(input)?;
    if validation.code != 0 {
        return Ok(validation);
    }
    let space = checked_space(input)?;
    let ultra = check_ultrametric(&space)?;
    let four = check_four_point(&space)?;
    let label = |i: &usize| space.label(*i).to_string();
    let separation = match separation_bounds(&space) {
        Ok(s) => json!({ "a": s.a, "b": s.b }),
        Err(Error::NoPairs) => Value::Null,
        Err(e) => return Err(e.into()),
    };
    Ok(Report::ok(json!({
        "ok": true,
        "points": space.len(),
        "integer": space.is_integer(),
        "ultrametric": ultra.holds,
        "ultrametric_witness": ultra.witness.map(|w| w.iter().map(label).collect::<Vec<_>>()),
        "four_point": four.holds,
        "witness": four.witness.map(|w| w.iter().map(label).collect::<Vec<_>>()),
        "four_point_slack": four.slack,
        "separation": separation,
    })))
}

fn cmd_norm(input: &Value, element: Option<&Path>, integer: bool) -> Outcome {
    let (space, mu) = space_and_element(input, element)?;
    let cert = free_norm(&space, &mu)?;
    verify_certificate(&space, &mu, &cert)?;
    let mut value = io::certificate_to_value(&space, &cert);
    if integer {
        let potential = integer_potential_f64(&space, &mu)?;
        let pairing: f64 = mu.iter().map(|(x, a)| a * potential.values[x] as f64).sum();
        let lip = lipfree::lip_constant(&space, &potential.values.iter().map(|&v| v as f64).collect::<Vec<_>>())?;
        if lip > 1.0 || (pairing - cert.value).abs() > 1e-9 * cert.value.max(1.0) {
            return Err(Error::CertificateFailed(format!(
                "integer potential pairs to {pairing} with constant {lip}, norm is {}",
                cert.value
            ))
            .into());
        }
        value["integer_certificate"] = json!({
            "potential": potential.values,
            "exact_norm": format_rational(&potential.norm),
            "route": potential.route,
        });
    }
    Ok(Report::ok(value))
}

fn cmd_witness(input: &Value, epsilon: f64, seed: u64) -> Outcome {
    let seq = io::sequence_from_value(input)?;
    let outcome = schur_certificate(&seq, epsilon)?;
    let mut value = serde_json::to_value(&outcome).expect("schur outcome serializes");
    value["seed"] = json!(seed);
    value["epsilon"] = json!(epsilon);
    let mut failed = outcome.failure.is_some();
    if let Some(blocks) = input.get("blocks") {
        let blocks = io::blocks_from_value(seq.space(), blocks)?;
        match glue_witness(seq.space(), &blocks, 0.0, None) {
            Ok(cert) => value["block_witness"] = serde_json::to_value(&cert).expect("certificate serializes"),
            Err(Error::WitnessFailure(failure)) => {
                failed = true;
                value["block_witness_failure"] = serde_json::to_value(&*failure).expect("failure serializes");
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(if failed { Report::failed(value) } else { Report::ok(value) })
}

fn cmd_generate(spec: &GeneratorSpec, seed: u64) -> Outcome {
    let instance = generate::generate(spec, seed)?;
    let space = instance.space();
    // generated objects must pass their validators before they are written
    if !validate_metric(&space.rows())?.ok {
        return Err(Error::CertificateFailed("generated space is not a metric".into()).into());
    }
    let structural = match spec.family {
        Family::Tree => check_four_point(space)?.holds,
        Family::Ultrametric => check_ultrametric(space)?.holds,
        Family::IntegerMetric | Family::BlockSequence | Family::ConflictBlock => space.is_integer(),
        Family::UniformDiscrete => true,
    };
    if !structural {
        return Err(Error::CertificateFailed(format!("generated {} instance failed its validator", spec.family)).into());
    }
    if let Instance::Blocks { blocks, .. } = &instance {
        io::blocks_from_value(space, &io::blocks_to_value(space, blocks))?;
    }
    Ok(Report::ok(io::instance_to_value(&instance)))
}

fn cmd_tree_embed(input: &Value) -> Outcome {
    let space = checked_space(input)?;
    let tree = tree_embed(&space)?;
    Ok(Report::ok(io::tree_to_value(&space, &tree)))
}

fn cmd_tree_norm(input: &Value, element: Option<&Path>) -> Outcome {
    let (space, mu) = space_and_element(input, element)?;
    let tree = tree_embed(&space)?;
    let exact = tree_cut_norm_exact(&tree, &mu)?;
    let by_cuts = lipfree::scalar::Scalar::to_f64(&exact);
    let by_flow = free_norm(&space, &mu)?.value;
    let agree = (by_cuts - by_flow).abs() <= 1e-9 * by_flow.max(1.0);
    let value = json!({
        "value": by_cuts,
        "exact": format_rational(&exact),
        "transport_value": by_flow,
        "agree": agree,
        "tree": io::tree_to_value(&space, &tree),
    });
    Ok(if agree { Report::ok(value) } else { Report::failed(value) })
}

fn cmd_density(input: &Value, epsilon: f64) -> Outcome {
    let k = io::intervals_from_value(input)?;
    let window = density_interval(&k, &rational_from_decimal(epsilon)?)?;
    let float = lipfree::scalar::Scalar::to_f64;
    Ok(Report::ok(json!({
        "a": format_rational(&window.a),
        "b": format_rational(&window.b),
        "density": format_rational(&window.density),
        "a_value": float(&window.a),
        "b_value": float(&window.b),
        "density_value": float(&window.density),
        "removed_gaps": window.removed_gaps,
        "epsilon": epsilon,
    })))
}

/// Input `{positions, dist?}`; without `dist` the sample carries the
/// subdominant ultrametric of the line metric.
fn cmd_distortion(input: &Value, cells: usize, a: Option<f64>, b: Option<f64>) -> Outcome {
    let positions: Vec<f64> = input
        .get("positions")
        .and_then(Value::as_array)
        .ok_or_else(|| Failure::Usage("missing \"positions\" array".into()))?
        .iter()
        .map(|v| io::number(v).map_err(Failure::from))
        .collect::<std::result::Result<_, _>>()?;
    if positions.is_empty() || positions.len() > INPUT_POINT_CAP {
        return Err(Failure::Usage(format!("need 1..={INPUT_POINT_CAP} positions")));
    }
    let metric = match input.get("dist") {
        Some(_) => checked_space(input)?,
        None => {
            let line = FiniteMetricSpace::from_fn(positions.len(), |i, j| (positions[i] - positions[j]).abs())?;
            subdominant_ultrametric(&line)?
        }
    };
    let lo = a.unwrap_or_else(|| positions.iter().copied().fold(f64::INFINITY, f64::min));
    let hi = b.unwrap_or_else(|| positions.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let pair = distortion_pair(&positions, &metric, cells, lo, hi)?;
    let value = json!({
        "x": pair.x,
        "y": pair.y,
        "x_position": positions[pair.x],
        "y_position": positions[pair.y],
        "ratio": pair.ratio,
        "chain_max": pair.chain_max,
        "bound": pair.bound,
        "representatives": pair.representatives,
        "cells": cells,
        "interval": [lo, hi],
    });
    Ok(if pair.ratio <= pair.bound { Report::ok(value) } else { Report::failed(value) })
}

fn cmd_transform(input: &Value, transform: impl Fn(&FiniteMetricSpace) -> lipfree::Result<FiniteMetricSpace>) -> Outcome {
    let space = checked_space(input)?;
    let out = transform(&space)?;
    if !validate_metric(&out.rows())?.ok {
        return Err(Error::CertificateFailed("transformed space is not a metric".into()).into());
    }
    Ok(Report::ok(io::space_to_value(&out)))
}

fn run_one(command: &Command, path: &Path) -> Report {
    let outcome = read_json(path).and_then(|input| match command {
        Command::Validate(_) => cmd_validate(&input),
        Command::Classify(_) => cmd_classify(&input),
        Command::Norm { element, integer_certificate, .. } => cmd_norm(&input, element.as_deref(), *integer_certificate),
        Command::Witness { epsilon, seed, .. } => cmd_witness(&input, *epsilon, *seed),
        Command::TreeEmbed(_) => cmd_tree_embed(&input),
        Command::TreeNorm { element, .. } => cmd_tree_norm(&input, element.as_deref()),
        Command::Density { epsilon, .. } => cmd_density(&input, *epsilon),
        Command::Distortion { cells, a, b, .. } => cmd_distortion(&input, *cells, *a, *b),
        Command::RoundMetric { scale, .. } => cmd_transform(&input, |s| round_metric(s, *scale)),
        Command::Snowflake { power, .. } => cmd_transform(&input, |s| snowflake(s, *power)),
        Command::Generate { .. } => unreachable!("generate takes no input files"),
    });
    outcome.unwrap_or_else(Failure::into_report)
}

/// Runs every input on up to `jobs` threads; results keep input order.
fn run_batch(command: &Command, inputs: &[PathBuf], jobs: usize) -> Vec<Report> {
    let slots: Vec<Mutex<Option<Report>>> = inputs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, inputs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = inputs.get(i) else { break };
                let report = run_one(command, path);
                *slots[i].lock().expect("slot lock") = Some(report);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("slot lock").expect("every input ran"))
        .collect()
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let join = |key: &str| if prefix.is_empty() { key.to_string() } else { format!("{prefix}.{key}") };
    match value {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&join(k), v, rows)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&join(&i.to_string()), v, rows)),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(value).expect("reports serialize") + "\n",
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", value, &mut rows);
            let mut out = String::from("# lossy: nested structure flattened to path,value rows\npath,value\n");
            for (path, v) in rows {
                out.push_str(&format!("{},{}\n", csv_field(&path), csv_field(&v)));
            }
            out
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (value, code) = match &cli.command {
        Command::Generate {
            family,
            seed,
            points,
            max_distance,
            blocks,
            support,
        } => {
            let report = match family.parse::<Family>() {
                Ok(family) => {
                    let mut spec = GeneratorSpec::new(family);
                    spec.points = points.unwrap_or(spec.points);
                    spec.max_distance = max_distance.unwrap_or(spec.max_distance);
                    spec.blocks = blocks.unwrap_or(spec.blocks);
                    spec.support = support.unwrap_or(spec.support);
                    cmd_generate(&spec, *seed).unwrap_or_else(Failure::into_report)
                }
                Err(e) => Failure::Usage(e.to_string()).into_report(),
            };
            (report.value, report.code)
        }
        command => {
            let inputs = command.inputs();
            let mut reports = run_batch(command, &inputs, cli.jobs);
            if reports.len() == 1 {
                let report = reports.pop().expect("one report");
                (report.value, report.code)
            } else {
                let code = reports.iter().map(|r| r.code).max().unwrap_or(0);
                let entries: Vec<Value> = inputs
                    .iter()
                    .zip(reports)
                    .map(|(path, r)| json!({ "input": path.display().to_string(), "exit_code": r.code, "report": r.value }))
                    .collect();
                (Value::Array(entries), code)
            }
        }
    };
    if let Some(message) = value.get("error").and_then(Value::as_str) {
        eprintln!("lipfree: {message}");
    }
    let text = render(&value, cli.format);
    match &cli.output {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("lipfree: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}
