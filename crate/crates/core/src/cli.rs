//! Command-line configuration and result documents.
//!
//! Every subcommand produces one document with `params`, `result` and
//! `checks` sections. Floating point values are written with 17 significant
//! digits so documents from identical configurations are byte-identical.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Number, Value};
use thiserror::Error;

use crate::analytic::{
    eta_schedule, exact_success_probability, monte_carlo_success_probability, AmplitudeModel,
    DEFAULT_EXACT_WORK_CAP,
};
use crate::circuit::{
    build_circuit, circuit_checks, majority_postprocess, measure_samples, run_circuit, TieBreak,
};
use crate::complexity::{
    asymptotic_report, predict_tally, query_count_comparison, tally_circuit, CostModel,
    CostModelKind, GateTally, DEFAULT_CONTROL_COST,
};
use crate::oracle::{BooleanPredicate, SearchParameters};
use crate::statevector::{RegisterLayout, DEFAULT_QUBIT_CAP};
use crate::Error;

/// Environment variable overriding the simulator qubit cap.
pub const QUBIT_CAP_ENV: &str = "PARITYSEARCH_QUBIT_CAP";

/// Tolerance for the fidelity and disentanglement checks.
pub const STATE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 3 for domain errors, 4 for capacity errors, 1 otherwise (clap uses 2
    /// for usage errors).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Domain(_)) => 3,
            CliError::Core(Error::Capacity(_)) => 4,
            CliError::Config(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "paritysearch",
    version,
    about = "Single parity-query quantum search: simulation, analysis and gate counts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the full circuit, measure and take the majority vote.
    Simulate(Flags),
    /// Amplitudes and success probability from the closed-form model.
    Analytic(Flags),
    /// Gate tallies, asymptotic terms and the query-count comparison.
    Gates(Flags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Analytic(_) => "analytic",
            Command::Gates(_) => "gates",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::Simulate(f) | Command::Analytic(f) | Command::Gates(f) => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreakArg {
    Lowest,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostModelArg {
    Paper,
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// TOML file providing defaults for any of the flags below.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Number of items N (a power of two).
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of sample registers.
    #[arg(long, conflicts_with = "schedule_c")]
    pub eta: Option<usize>,
    /// Choose eta = ceil(c N (log2 N)^2).
    #[arg(long)]
    pub schedule_c: Option<f64>,
    /// Comma separated marked items, e.g. "1,3".
    #[arg(long, conflicts_with_all = ["mask", "t"])]
    pub marks: Option<String>,
    /// Hexadecimal mask, bit j-1 set when item j is marked.
    #[arg(long, conflicts_with = "t")]
    pub mask: Option<String>,
    /// Mark the first t items.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo trials (analytic).
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, value_enum)]
    pub tie_break: Option<TieBreakArg>,
    #[arg(long, value_enum)]
    pub cost_model: Option<CostModelArg>,
    /// Elementary gates per control qubit of a multi-controlled gate.
    #[arg(long)]
    pub cost_constant: Option<u64>,
    /// Constant in front of sqrt(N/t) for the elementary query count.
    #[arg(long)]
    pub grover_constant: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Capture intermediate states and report the state checks (simulate).
    #[arg(long)]
    #[serde(default)]
    pub capture: bool,
    /// Write the document here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the emitted gate list as a text trace (gates).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

impl Flags {
    /// Fills every unset flag from `file`.
    fn merged_with(&self, file: Flags) -> Flags {
        Flags {
            config: self.config.clone(),
            n: self.n.or(file.n),
            eta: self.eta.or(if self.schedule_c.is_some() {
                None
            } else {
                file.eta
            }),
            schedule_c: self.schedule_c.or(if self.eta.is_some() {
                None
            } else {
                file.schedule_c
            }),
            marks: self.marks.clone().or(if self.has_predicate() {
                None
            } else {
                file.marks
            }),
            mask: self.mask.clone().or(if self.has_predicate() {
                None
            } else {
                file.mask
            }),
            t: self.t.or(if self.has_predicate() { None } else { file.t }),
            seed: self.seed.or(file.seed),
            trials: self.trials.or(file.trials),
            tie_break: self.tie_break.or(file.tie_break),
            cost_model: self.cost_model.or(file.cost_model),
            cost_constant: self.cost_constant.or(file.cost_constant),
            grover_constant: self.grover_constant.or(file.grover_constant),
            format: self.format.or(file.format),
            capture: self.capture || file.capture,
            output: self.output.clone().or(file.output),
            trace: self.trace.clone().or(file.trace),
        }
    }

    fn has_predicate(&self) -> bool {
        self.marks.is_some() || self.mask.is_some() || self.t.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EtaSpec {
    Explicit(usize),
    Schedule(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredicateSpec {
    Marks(String),
    Mask(String),
    FirstT(usize),
}

/// Fully resolved configuration of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: &'static str,
    pub n_items: usize,
    pub eta: Option<EtaSpec>,
    pub predicate: Option<PredicateSpec>,
    pub seed: u64,
    pub trials: Option<u64>,
    pub tie_break: TieBreakArg,
    pub cost_model: CostModelArg,
    pub cost_constant: u64,
    pub grover_constant: f64,
    pub format: Format,
    pub capture: bool,
    pub qubit_cap: usize,
    pub output: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

/// Attaches the offending path to an I/O error.
pub fn with_path(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| {
        CliError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    }
}

fn load_config_file(path: &Path) -> Result<Flags, CliError> {
    let text = std::fs::read_to_string(path).map_err(with_path(path))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn qubit_cap_from_env() -> Result<usize, CliError> {
    match std::env::var(QUBIT_CAP_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "{QUBIT_CAP_ENV} must be a non-negative integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(DEFAULT_QUBIT_CAP),
    }
}

impl RunConfig {
    pub fn resolve(command: &Command) -> Result<Self, CliError> {
        let cli_flags = command.flags();
        let flags = match &cli_flags.config {
            Some(path) => cli_flags.merged_with(load_config_file(path)?),
            None => cli_flags.clone(),
        };
        let n_items = flags.n.ok_or_else(|| Error::domain("--n is required"))?;
        let eta = match (flags.eta, flags.schedule_c) {
            (Some(_), Some(_)) => {
                return Err(Error::domain("give either --eta or --schedule-c, not both").into())
            }
            (Some(e), None) => Some(EtaSpec::Explicit(e)),
            (None, Some(c)) => Some(EtaSpec::Schedule(c)),
            (None, None) => None,
        };
        let predicate = match (flags.marks, flags.mask, flags.t) {
            (Some(m), None, None) => Some(PredicateSpec::Marks(m)),
            (None, Some(m), None) => Some(PredicateSpec::Mask(m)),
            (None, None, Some(t)) => Some(PredicateSpec::FirstT(t)),
            (None, None, None) => None,
            _ => return Err(Error::domain("give only one of --marks, --mask, --t").into()),
        };
        Ok(RunConfig {
            command: command.name(),
            n_items,
            eta,
            predicate,
            seed: flags.seed.unwrap_or(0),
            trials: flags.trials,
            tie_break: flags.tie_break.unwrap_or(TieBreakArg::Lowest),
            cost_model: flags.cost_model.unwrap_or(CostModelArg::Paper),
            cost_constant: flags.cost_constant.unwrap_or(DEFAULT_CONTROL_COST),
            grover_constant: flags.grover_constant.unwrap_or(1.0),
            format: flags.format.unwrap_or(Format::Json),
            capture: flags.capture,
            qubit_cap: qubit_cap_from_env()?,
            output: flags.output,
            trace: flags.trace,
        })
    }

    fn resolved_eta(&self) -> Result<Option<usize>, Error> {
        match self.eta {
            Some(EtaSpec::Explicit(e)) => Ok(Some(e)),
            Some(EtaSpec::Schedule(c)) => eta_schedule(self.n_items, c).map(Some),
            None => Ok(None),
        }
    }

    fn require_eta(&self) -> Result<usize, Error> {
        self.resolved_eta()?
            .ok_or_else(|| Error::domain("--eta or --schedule-c is required"))
    }

    fn eta_source(&self) -> Value {
        match self.eta {
            Some(EtaSpec::Explicit(_)) => json!("explicit"),
            Some(EtaSpec::Schedule(c)) => json!({ "schedule_c": num(c) }),
            None => Value::Null,
        }
    }

    fn predicate(&self) -> Result<Option<BooleanPredicate>, Error> {
        let n = self.n_items;
        Ok(match &self.predicate {
            Some(PredicateSpec::Marks(list)) => Some(BooleanPredicate::from_mark_list(n, list)?),
            Some(PredicateSpec::Mask(mask)) => Some(BooleanPredicate::from_hex_mask(n, mask)?),
            Some(PredicateSpec::FirstT(t)) => Some(BooleanPredicate::first_t(n, *t)?),
            None => None,
        })
    }

    fn tie_break(&self) -> TieBreak {
        match self.tie_break {
            TieBreakArg::Lowest => TieBreak::LowestIndex,
            TieBreakArg::Random => TieBreak::Random { seed: self.seed },
        }
    }

    fn cost_model(&self) -> Result<CostModel, Error> {
        let kind = match self.cost_model {
            CostModelArg::Paper => CostModelKind::Paper,
            CostModelArg::Naive => CostModelKind::NaiveDecoder,
        };
        CostModel::new(kind, self.cost_constant)
    }
}

/// A finite double as a JSON number with 17 significant digits.
fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    Value::Number(
        text.parse::<Number>()
            .expect("formatted double is a JSON number"),
    )
}

fn predicate_json(pred: &BooleanPredicate) -> Value {
    json!({
        "marks": pred.marks(),
        "mask": pred.to_hex_mask(),
        "marked_count": pred.marked_count(),
    })
}

fn document(params: Value, result: Value, checks: Value) -> Value {
    json!({ "params": params, "result": result, "checks": checks })
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Value, Error> {
    let eta = cfg.require_eta()?;
    let params = SearchParameters::new(cfg.n_items, eta)?;
    let pred = cfg
        .predicate()?
        .ok_or_else(|| Error::domain("simulate needs --marks, --mask or --t"))?;
    let layout = RegisterLayout::new(&params);

    let run = run_circuit(&params, &pred, cfg.capture, cfg.qubit_cap)?;
    let samples = measure_samples(&run.final_state, &layout, cfg.seed)?;
    let outcome = majority_postprocess(&samples, &pred, cfg.tie_break())?;

    let frequencies: Map<String, Value> = outcome
        .frequencies
        .iter()
        .map(|(item, count)| (item.to_string(), json!(count)))
        .collect();
    let mut checks = Map::new();
    checks.insert(
        "oracle_blocks".into(),
        json!(run.circuit.oracle_block_count()),
    );
    if cfg.capture {
        let c = circuit_checks(&run, &pred, cfg.qubit_cap)?;
        checks.insert(
            "disentanglement_probability".into(),
            num(c.disentanglement_probability),
        );
        checks.insert(
            "phase_kickback_fidelity".into(),
            num(c.phase_kickback_fidelity),
        );
        checks.insert(
            "factorization_fidelity".into(),
            num(c.factorization_fidelity),
        );
        checks.insert(
            "pass".into(),
            json!([
                c.disentanglement_probability,
                c.phase_kickback_fidelity,
                c.factorization_fidelity
            ]
            .iter()
            .all(|&v| v >= 1.0 - STATE_TOLERANCE)),
        );
    }

    Ok(document(
        json!({
            "command": cfg.command,
            "n_items": params.n_items(),
            "nu": params.nu(),
            "eta": eta,
            "eta_source": cfg.eta_source(),
            "predicate": predicate_json(&pred),
            "seed": cfg.seed,
            "tie_break": cfg.tie_break().name(),
            "total_qubits": layout.total_qubits(),
            "qubit_cap": cfg.qubit_cap,
        }),
        json!({
            "samples": outcome.samples.values(),
            "frequencies": frequencies,
            "winner": outcome.winner,
            "winner_satisfies": outcome.winner_satisfies,
            "tie_detected": outcome.tie_detected,
        }),
        Value::Object(checks),
    ))
}

pub fn cmd_analytic(cfg: &RunConfig) -> Result<Value, Error> {
    let eta = cfg.require_eta()?;
    SearchParameters::new(cfg.n_items, eta)?;
    let pred = cfg
        .predicate()?
        .ok_or_else(|| Error::domain("analytic needs --t, --marks or --mask"))?;
    let model = AmplitudeModel::new(cfg.n_items, pred.marked_count())?;
    let tie = cfg.tie_break();

    let exact = match exact_success_probability(&model, &pred, eta, tie, DEFAULT_EXACT_WORK_CAP) {
        Ok(p) => Some(p),
        Err(e) if e.is_capacity() && cfg.trials.is_some() => None,
        Err(Error::Capacity(msg)) => {
            return Err(Error::Capacity(format!(
                "{msg}; rerun with --trials <count> for a Monte Carlo estimate"
            )))
        }
        Err(e) => return Err(e),
    };
    let monte_carlo = match cfg.trials {
        Some(trials) => {
            let mc = monte_carlo_success_probability(&model, &pred, eta, trials, cfg.seed, tie)?;
            json!({
                "estimate": num(mc.estimate),
                "std_error": num(mc.std_error),
                "successes": mc.successes,
                "trials": mc.trials,
            })
        }
        None => Value::Null,
    };

    Ok(document(
        json!({
            "command": cfg.command,
            "n_items": cfg.n_items,
            "eta": eta,
            "eta_source": cfg.eta_source(),
            "predicate": predicate_json(&pred),
            "seed": cfg.seed,
            "trials": cfg.trials,
            "tie_break": tie.name(),
        }),
        json!({
            "k": num(model.k()),
            "l": num(model.l()),
            "p_marked": num(model.p_marked()),
            "p_unmarked": num(model.p_unmarked()),
            "exact_success_probability": exact.map_or(Value::Null, num),
            "monte_carlo": monte_carlo,
        }),
        json!({
            "normalization": num(model.total_probability()),
            "expanded_forms_agree": (model.p_marked_expanded() - model.p_marked()).abs() < 1e-12
                && (model.p_unmarked_expanded() - model.p_unmarked()).abs() < 1e-12,
        }),
    ))
}

fn tally_json(t: &GateTally) -> Value {
    let by_step: Map<String, Value> = t
        .by_step
        .iter()
        .map(|(step, c)| {
            (
                step.to_string(),
                json!({
                    "hadamards": c.hadamards,
                    "sigma_z": c.sigma_z,
                    "multi_controlled_flips": c.multi_controlled_flips,
                    "multi_controlled_phases": c.multi_controlled_phases,
                    "elementary": c.elementary,
                }),
            )
        })
        .collect();
    json!({
        "hadamards": t.hadamards,
        "sigma_z": t.sigma_z,
        "multi_controlled_flips": t.multi_controlled_flips,
        "multi_controlled_phases": t.multi_controlled_phases,
        "elementary_total": t.elementary_total,
        "classical_sort_comparisons": t.classical_sort_comparisons,
        "by_step": by_step,
    })
}

pub fn cmd_gates(cfg: &RunConfig) -> Result<Value, Error> {
    let model = cfg.cost_model()?;
    let pred = match cfg.predicate()? {
        Some(p) => p,
        None => BooleanPredicate::from_marks(cfg.n_items, &[])?,
    };
    let schedule_c = match cfg.eta {
        Some(EtaSpec::Schedule(c)) => c,
        _ => 1.0,
    };
    let asymptotic = asymptotic_report(cfg.n_items, schedule_c)?;
    let eta = cfg.resolved_eta()?;

    let mut result = Map::new();
    let mut checks = Map::new();
    match eta {
        Some(eta) => {
            let params = SearchParameters::new(cfg.n_items, eta)?;
            let predicted = predict_tally(&params, &pred, model);
            result.insert("tally".into(), tally_json(&predicted));
            match build_circuit(&params, &pred, cfg.qubit_cap) {
                Ok(circuit) => {
                    let counted = tally_circuit(&circuit, model);
                    let verdict = if counted == predicted { "pass" } else { "fail" };
                    checks.insert("cross_check".into(), json!(verdict));
                    checks.insert("oracle_blocks".into(), json!(circuit.oracle_block_count()));
                }
                Err(e) if e.is_capacity() => {
                    checks.insert("cross_check".into(), json!("skipped"));
                }
                Err(e) => return Err(e),
            }
        }
        None => {
            result.insert("tally".into(), Value::Null);
            checks.insert("cross_check".into(), json!("skipped"));
        }
    }
    result.insert(
        "asymptotic".into(),
        json!({
            "schedule_c": num(schedule_c),
            "eta": asymptotic.eta,
            "nu_eta": asymptotic.nu_eta_term,
            "eta_log_eta": num(asymptotic.eta_log_eta_term),
            "n_eta": asymptotic.n_eta_term,
            "paper_total_claim": asymptotic.paper_total_claim,
        }),
    );
    let comparison = if pred.marked_count() >= 1 {
        let q = query_count_comparison(cfg.n_items, pred.marked_count(), cfg.grover_constant)?;
        json!({
            "complex_queries": q.complex_queries,
            "elementary_queries": q.elementary_queries,
            "grover_constant": num(cfg.grover_constant),
        })
    } else {
        Value::Null
    };
    result.insert("query_comparison".into(), comparison);

    Ok(document(
        json!({
            "command": cfg.command,
            "n_items": cfg.n_items,
            "eta": eta,
            "eta_source": cfg.eta_source(),
            "predicate": predicate_json(&pred),
            "cost_model": model.kind.name(),
            "cost_constant": model.control_cost,
        }),
        Value::Object(result),
        Value::Object(checks),
    ))
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            let mut cell = String::new();
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    cell.push(';');
                }
                let _ = write!(cell, "{}", scalar(item));
            }
            out.push((prefix.to_string(), cell));
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One header row and one value row holding the flattened `result` section.
pub fn to_csv(doc: &Value) -> Result<String, CliError> {
    let mut cells = Vec::new();
    flatten("", &doc["result"], &mut cells);
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    writer
        .write_record(cells.iter().map(|(k, _)| k))
        .map_err(io)?;
    writer
        .write_record(cells.iter().map(|(_, v)| v))
        .map_err(io)?;
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render(doc: &Value, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(doc).expect("document serializes");
            text.push('\n');
            Ok(text)
        }
        Format::Csv => to_csv(doc),
    }
}

fn write_trace(cfg: &RunConfig, path: &Path) -> Result<(), CliError> {
    let params = SearchParameters::new(cfg.n_items, cfg.require_eta()?)?;
    let pred = match cfg.predicate()? {
        Some(p) => p,
        None => BooleanPredicate::from_marks(cfg.n_items, &[])?,
    };
    let circuit = build_circuit(&params, &pred, cfg.qubit_cap)?;
    std::fs::write(path, circuit.to_trace()).map_err(with_path(path))?;
    Ok(())
}

pub fn execute(cfg: &RunConfig) -> Result<String, CliError> {
    let doc = match cfg.command {
        "simulate" => cmd_simulate(cfg)?,
        "analytic" => cmd_analytic(cfg)?,
        "gates" => {
            if let Some(path) = &cfg.trace {
                write_trace(cfg, path)?;
            }
            cmd_gates(cfg)?
        }
        other => unreachable!("unknown command {other}"),
    };
    render(&doc, cfg.format)
}

/// Parses `args`, runs the command and returns the rendered document along
/// with the output path, if any.
pub fn run<I, T>(args: I) -> Result<(String, Option<PathBuf>), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    let cfg = RunConfig::resolve(&cli.command)?;
    Ok((execute(&cfg)?, cfg.output.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(args: &[&str]) -> Value {
        let mut full = vec!["paritysearch"];
        full.extend_from_slice(args);
        let (text, _) = run(full).unwrap();
        serde_json::from_str(&text).unwrap()
    }

    fn err(args: &[&str]) -> CliError {
        let mut full = vec!["paritysearch"];
        full.extend_from_slice(args);
        run(full).unwrap_err()
    }

    fn f64_of(v: &Value) -> f64 {
        v.as_f64().unwrap()
    }

    #[test]
    fn simulate_examples() {
        let d = doc(&[
            "simulate", "--n", "4", "--marks", "3", "--eta", "3", "--seed", "1",
        ]);
        assert_eq!(d["result"]["winner"], 3);
        assert_eq!(d["result"]["winner_satisfies"], true);
        let d = doc(&[
            "simulate", "--n", "2", "--marks", "", "--eta", "5", "--seed", "9",
        ]);
        assert_eq!(d["result"]["winner_satisfies"], false);
        let e = err(&["simulate", "--n", "32", "--eta", "4", "--marks", "1"]);
        assert_eq!(e.exit_code(), 4);
        assert!(e.to_string().contains("53"));
    }

    #[test]
    fn simulate_capture_reports_checks() {
        let d = doc(&[
            "simulate",
            "--n",
            "4",
            "--marks",
            "1,4",
            "--eta",
            "2",
            "--capture",
        ]);
        assert!(f64_of(&d["checks"]["disentanglement_probability"]) >= 1.0 - 1e-10);
        assert!(f64_of(&d["checks"]["factorization_fidelity"]) >= 1.0 - 1e-10);
        assert_eq!(d["checks"]["pass"], true);
    }

    #[test]
    fn analytic_examples() {
        let d = doc(&["analytic", "--n", "4", "--t", "1", "--eta", "1"]);
        assert_eq!(f64_of(&d["result"]["exact_success_probability"]), 1.0);
        let d = doc(&[
            "analytic", "--n", "16", "--t", "1", "--eta", "64", "--trials", "10000", "--seed", "5",
        ]);
        assert!(f64_of(&d["result"]["monte_carlo"]["estimate"]) >= 0.99);
        let d = doc(&["analytic", "--n", "2", "--t", "0", "--eta", "3"]);
        assert_eq!(f64_of(&d["result"]["exact_success_probability"]), 0.0);
    }

    #[test]
    fn analytic_without_trials_beyond_cap_is_instructive() {
        let e = err(&["analytic", "--n", "1024", "--t", "1", "--schedule-c", "1"]);
        assert_eq!(e.exit_code(), 4);
        assert!(e.to_string().contains("--trials"));
    }

    #[test]
    fn gates_examples() {
        let d = doc(&["gates", "--n", "2", "--eta", "2", "--marks", "1"]);
        assert_eq!(d["result"]["tally"]["multi_controlled_flips"], 9);
        assert_eq!(d["result"]["tally"]["hadamards"], 7);
        assert_eq!(d["checks"]["cross_check"], "pass");
        let d = doc(&["gates", "--n", "64", "--t", "1"]);
        assert_eq!(d["result"]["query_comparison"]["elementary_queries"], 8);
        assert_eq!(d["result"]["query_comparison"]["complex_queries"], 1);
        let d = doc(&["gates", "--n", "1024", "--schedule-c", "1"]);
        assert_eq!(d["result"]["asymptotic"]["eta"], 102_400);
        assert_eq!(d["checks"]["cross_check"], "skipped");
    }

    #[test]
    fn domain_errors_exit_three() {
        assert_eq!(
            err(&["simulate", "--n", "6", "--eta", "1", "--marks", "1"]).exit_code(),
            3
        );
        assert_eq!(
            err(&["simulate", "--n", "4", "--eta", "1", "--marks", "9"]).exit_code(),
            3
        );
        assert_eq!(err(&["analytic", "--n", "4", "--t", "1"]).exit_code(), 3);
    }

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(num(0.5).to_string(), "5.0000000000000000e-1");
        assert_eq!(num(f64::NAN), Value::Null);
        let d = doc(&["analytic", "--n", "2", "--t", "1", "--eta", "1"]);
        let text = serde_json::to_string(&d["result"]["k"]).unwrap();
        assert_eq!(text, format!("{:.16e}", 1.0 / 2f64.sqrt()));
        assert_eq!(text.len(), "7.0710678118654746e-1".len());
    }

    #[test]
    fn csv_flattens_result() {
        let mut full = vec![
            "paritysearch",
            "gates",
            "--n",
            "2",
            "--eta",
            "2",
            "--marks",
            "1",
            "--format",
            "csv",
        ];
        let (text, _) = run(full.drain(..)).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        let at = header
            .iter()
            .position(|h| *h == "tally.multi_controlled_flips")
            .unwrap();
        assert_eq!(row[at], "9");
        assert!(header.contains(&"asymptotic.eta"));
    }

    #[test]
    fn config_file_fills_unset_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "n = 4\neta = 3\nmarks = \"2\"\nseed = 11\n").unwrap();
        let p = path.to_str().unwrap();
        let d = doc(&["simulate", "--config", p]);
        assert_eq!(d["params"]["eta"], 3);
        assert_eq!(d["result"]["winner"], 2);
        // flags win over the file
        let d = doc(&[
            "simulate",
            "--config",
            p,
            "--marks",
            "4",
            "--schedule-c",
            "0.0625",
        ]);
        assert_eq!(d["result"]["winner"], 4);
        assert_eq!(d["params"]["eta"], 1);

        std::fs::write(&path, "n = 4\nbogus = 1\n").unwrap();
        assert_eq!(err(&["simulate", "--config", p]).exit_code(), 1);
    }
}
