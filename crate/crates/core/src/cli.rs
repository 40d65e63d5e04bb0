//! Command-line front end: one verb per quantity, JSON configs in, CSV out.
//!
//! Every CSV starts with a `#` comment line carrying the tool version, the
//! schema version, the SHA-256 of the config bytes and the seed. Numbers
//! are printed with 12 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::covering::{covering_number, CoverMode, DistributionFamily};
use crate::error::Error;
use crate::itbounds::{d_ks, eq7_grid_value, single_letter_bound, DksOptions, Eq7Grids};
use crate::losses::{classification_class, regression_class, ClassifierFamily, FunctionClass};
use crate::measures::JointPmf;
use crate::montecarlo::{
    gc_decay, run_experiment, ExperimentConfig, ExperimentOutcome, QuantizerMode, SchemeSpec,
};
use crate::type1::EpsilonSchedule;
use crate::type2::{codebook_size, greedy_quantizer, optimal_quantizer, DhatResult, SearchBudget};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Version of the CSV column layouts.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GUARD: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ratelearn",
    version,
    about = "Learning from rate-limited training data on finite alphabets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Type I scheme excess-loss curves.
    Type1(RunArgs),
    /// Type II scheme excess-loss curves.
    Type2(RunArgs),
    /// Operational distortion-rate value D̂_n along n_grid.
    Dhat(RunArgs),
    /// Test-channel distortion-rate value per family member.
    Dks(RunArgs),
    /// Single-letter minimax bound next to D̂_n.
    Eq6(RunArgs),
    /// Grid value of the nested sup/inf upper-bound expression.
    Eq7(RunArgs),
    /// Decay of E‖P_{Z^n} − P‖_F per family member.
    Gc(RunArgs),
    /// Covering numbers of the family.
    Cover(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Type1(_) => "type1",
            Command::Type2(_) => "type2",
            Command::Dhat(_) => "dhat",
            Command::Dks(_) => "dks",
            Command::Eq6(_) => "eq6",
            Command::Eq7(_) => "eq7",
            Command::Gc(_) => "gc",
            Command::Cover(_) => "cover",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Type1(a)
            | Command::Type2(a)
            | Command::Dhat(a)
            | Command::Dks(a)
            | Command::Eq6(a)
            | Command::Eq7(a)
            | Command::Gc(a)
            | Command::Cover(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write a JSON mirror next to the CSV.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Guard(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Guard(_) => EXIT_GUARD,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Guard(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::GuardExceeded(_) => CliError::Guard(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A probability written as a number, a decimal string or `"a/b"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Value(f64),
    Text(String),
}

impl Number {
    pub fn value(&self) -> CliResult<f64> {
        match self {
            Number::Value(v) => Ok(*v),
            Number::Text(s) => {
                let parse = |t: &str| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Config(format!("cannot read `{s}` as a number")))
                };
                match s.split_once('/') {
                    Some((a, b)) => {
                        let d = parse(b)?;
                        if d == 0.0 {
                            return Err(CliError::Config(format!("zero denominator in `{s}`")));
                        }
                        Ok(parse(a)? / d)
                    }
                    None => parse(s),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapsSpec {
    /// The string `"all"`.
    Keyword(String),
    Maps(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassSpec {
    Classification {
        maps: MapsSpec,
    },
    Regression {
        estimators: Vec<Vec<f64>>,
        y_values: Vec<f64>,
    },
    /// One `x_size × y_size` table per function.
    Explicit {
        bound: f64,
        functions: Vec<Vec<Vec<Number>>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantizerChoice {
    Exact,
    Greedy,
}

/// Contents of a config file. Which optional fields are required depends on
/// the verb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub description: Option<String>,
    pub x_size: usize,
    pub y_size: usize,
    /// Members as `x_size` rows of `y_size` probabilities.
    pub family: Vec<Vec<Vec<Number>>>,
    pub function_class: ClassSpec,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Type I schedule `eps_n = c / log2(n + 2)`; defaults to 1.
    #[serde(default)]
    pub epsilon_c: Option<f64>,
    #[serde(default)]
    pub cover_mode: Option<CoverMode>,
    #[serde(default)]
    pub quantizer_mode: Option<QuantizerChoice>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub budget: Option<SearchBudget>,
    #[serde(default)]
    pub pac_epsilon: Option<f64>,
    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default)]
    pub dks: Option<DksOptions>,
    #[serde(default)]
    pub eq7: Option<Eq7Grids>,
}

fn required<T: Clone>(field: &Option<T>, name: &str, verb: &str) -> CliResult<T> {
    field
        .clone()
        .ok_or_else(|| CliError::Config(format!("missing required field `{name}` for `{verb}`")))
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn build_family(&self) -> CliResult<DistributionFamily> {
        if self.family.is_empty() {
            return Err(CliError::Config(
                "`family` must list at least one member".into(),
            ));
        }
        let members = self
            .family
            .iter()
            .enumerate()
            .map(|(i, rows)| {
                let probs = self.table(rows, &format!("family[{i}]"))?;
                JointPmf::new(self.x_size, self.y_size, probs)
                    .map_err(|e| CliError::Config(format!("family[{i}]: {e}")))
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(DistributionFamily::new(members)?)
    }

    fn table(&self, rows: &[Vec<Number>], what: &str) -> CliResult<Vec<f64>> {
        if rows.len() != self.x_size || rows.iter().any(|r| r.len() != self.y_size) {
            return Err(CliError::Config(format!(
                "{what} must have {} rows of {} entries",
                self.x_size, self.y_size
            )));
        }
        rows.iter().flatten().map(Number::value).collect()
    }

    pub fn build_class(&self) -> CliResult<FunctionClass> {
        let class = match &self.function_class {
            ClassSpec::Classification { maps } => {
                let family = match maps {
                    MapsSpec::Keyword(k) if k == "all" => {
                        ClassifierFamily::all(self.x_size, self.y_size)?
                    }
                    MapsSpec::Keyword(k) => {
                        return Err(CliError::Config(format!(
                            "function_class.maps must be \"all\" or a list of maps, found \"{k}\""
                        )))
                    }
                    MapsSpec::Maps(m) => {
                        ClassifierFamily::new(self.x_size, self.y_size, m.clone())?
                    }
                };
                classification_class(&family)?
            }
            ClassSpec::Regression {
                estimators,
                y_values,
            } => regression_class(estimators, y_values)?,
            ClassSpec::Explicit { bound, functions } => {
                let values = functions
                    .iter()
                    .enumerate()
                    .map(|(i, f)| self.table(f, &format!("function_class.functions[{i}]")))
                    .collect::<CliResult<Vec<_>>>()?
                    .concat();
                FunctionClass::new(self.x_size, self.y_size, *bound, values, None)?
            }
        };
        if class.dims() != (self.x_size, self.y_size) {
            return Err(CliError::Config(format!(
                "function class is {}x{} but the alphabets are {}x{}",
                class.x_size(),
                class.y_size(),
                self.x_size,
                self.y_size
            )));
        }
        Ok(class)
    }
}

/// Record of one run, written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub config_sha256: String,
    pub tool_version: String,
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
    pub output_paths: Vec<String>,
    /// Per-command extras such as net sizes or worst-case curves.
    pub diagnostics: serde_json::Value,
}

/// A rendered result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub diagnostics: serde_json::Value,
}

/// `%.12g`-style formatting.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..12).contains(&exp) {
        trim(&format!("{:.*}", (11 - exp) as usize, v))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn opt_number(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

pub fn config_digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Parses `args` (including the program name), runs the verb and returns the
/// process exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("ratelearn {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

pub fn run(command: &Command) -> CliResult<()> {
    let args = command.args();
    let bytes = fs::read(&args.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let digest = config_digest(&bytes);
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::Config(format!("{} is not UTF-8", args.config.display())))?;
    let mut config = RunConfig::parse(text)?;
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    let started_at = chrono::Utc::now().to_rfc3339();
    let table = match args.threads {
        Some(0) => return Err(CliError::Config("--threads must be positive".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| compute(command.name(), &config))?,
        None => compute(command.name(), &config)?,
    };
    let header =
        format!(
        "# ratelearn {VERSION} schema={SCHEMA_VERSION} command={} config_sha256={digest} seed={}",
        command.name(),
        config.seed.map_or_else(|| "none".to_string(), |s| s.to_string())
    );
    let csv = render_csv(&header, &table)?;
    let Some(out) = &args.out else {
        print!("{csv}");
        return Ok(());
    };
    let mut outputs = vec![out.clone()];
    write_file(out, csv.as_bytes())?;
    if args.json {
        let path = out.with_extension("json");
        let mirror = json_mirror(&header, &table);
        let text = serde_json::to_string_pretty(&mirror).expect("JSON values serialize");
        write_file(&path, (text + "\n").as_bytes())?;
        outputs.push(path);
    }
    let manifest_path = out.with_extension("manifest.json");
    outputs.push(manifest_path.clone());
    let manifest = RunManifest {
        command: command.name().to_string(),
        config_path: args.config.display().to_string(),
        config_sha256: digest,
        tool_version: VERSION.to_string(),
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        threads: args.threads,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        output_paths: outputs.iter().map(|p| p.display().to_string()).collect(),
        diagnostics: table.diagnostics,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&manifest_path, (text + "\n").as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn render_csv(header: &str, table: &Table) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&table.columns).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(format!(
        "{header}\n{}",
        String::from_utf8(body).expect("CSV of UTF-8 cells")
    ))
}

/// The same cells as the CSV, numbers as JSON numbers and blanks as null.
pub fn json_mirror(header: &str, table: &Table) -> serde_json::Value {
    let cell = |s: &String| -> serde_json::Value {
        if s.is_empty() {
            return serde_json::Value::Null;
        }
        if let Ok(i) = s.parse::<i64>() {
            return serde_json::Value::from(i);
        }
        match s.parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
            Some(n) => serde_json::Value::Number(n),
            None => serde_json::Value::String(s.clone()),
        }
    };
    serde_json::json!({
        "header": header.trim_start_matches("# "),
        "columns": table.columns,
        "rows": table
            .rows
            .iter()
            .map(|r| r.iter().map(cell).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

/// Runs one verb on a parsed config.
pub fn compute(verb: &str, config: &RunConfig) -> CliResult<Table> {
    let family = config.build_family()?;
    let class = config.build_class()?;
    let budget = config.budget.unwrap_or_default();
    match verb {
        "type1" | "type2" => {
            let scheme = if verb == "type1" {
                if config.quantizer_mode.is_some() {
                    return Err(CliError::Config(
                        "`quantizer_mode` applies to type2 only".into(),
                    ));
                }
                SchemeSpec::TypeI {
                    schedule: EpsilonSchedule {
                        c: config.epsilon_c.unwrap_or(1.0),
                    },
                    cover_mode: config.cover_mode.unwrap_or(CoverMode::Exact),
                }
            } else {
                SchemeSpec::TypeII {
                    quantizer: quantizer_mode(config),
                    budget,
                }
            };
            let exp = ExperimentConfig {
                family,
                class,
                scheme,
                rate: required(&config.rate, "rate", verb)?,
                n_grid: required(&config.n_grid, "n_grid", verb)?,
                trials: required(&config.trials, "trials", verb)?,
                seed: required(&config.seed, "seed", verb)?,
                pac_epsilon: config.pac_epsilon,
            };
            let outcome = run_experiment(&exp)?;
            Ok(curve_table(&exp, &outcome))
        }
        "dhat" => {
            let rate = required(&config.rate, "rate", verb)?;
            let n_grid = required(&config.n_grid, "n_grid", verb)?;
            let mut rows = Vec::new();
            for &n in &n_grid {
                let d = dhat(n, rate, &family, &class, config, &budget)?;
                let worst = argmax(&d.per_p_distortion);
                rows.push(vec![
                    n.to_string(),
                    format_number(rate),
                    d.quantizer.size().to_string(),
                    format_number(d.value),
                    worst.to_string(),
                    d.exact.to_string(),
                ]);
            }
            Ok(Table {
                columns: vec![
                    "n",
                    "rate",
                    "codebook_size",
                    "dhat",
                    "worst_p_index",
                    "exact",
                ],
                rows,
                diagnostics: serde_json::Value::Null,
            })
        }
        "dks" => {
            let rate = required(&config.rate, "rate", verb)?;
            let opts = config.dks.unwrap_or_default();
            let mut rows = Vec::new();
            for (i, p) in family.members().iter().enumerate() {
                let r = d_ks(p, &class, rate, &opts)?;
                rows.push(vec![
                    i.to_string(),
                    format_number(rate),
                    format_number(r.value),
                    format_number(r.achieved_mi),
                    r.report.grid_resolution.to_string(),
                    r.report.refinement_steps.to_string(),
                    r.report.iterations.to_string(),
                ]);
            }
            Ok(Table {
                columns: vec![
                    "true_p_index",
                    "rate",
                    "dks",
                    "achieved_mi",
                    "grid_resolution",
                    "refinement_steps",
                    "iterations",
                ],
                rows,
                diagnostics: serde_json::Value::Null,
            })
        }
        "eq6" => {
            let rate = required(&config.rate, "rate", verb)?;
            let n_grid = required(&config.n_grid, "n_grid", verb)?;
            let mut rows = Vec::new();
            for &n in &n_grid {
                let single = single_letter_bound(n, rate, &family, &class, &budget)?;
                let d = optimal_quantizer(n, rate, &family, &class, &budget)?;
                rows.push(vec![
                    n.to_string(),
                    format_number(rate),
                    codebook_size(n, rate)?.to_string(),
                    format_number(single.value),
                    format_number(d.value),
                    format_number(single.value - d.value),
                ]);
            }
            Ok(Table {
                columns: vec!["n", "rate", "codebook_size", "single_letter", "dhat", "gap"],
                rows,
                diagnostics: serde_json::Value::Null,
            })
        }
        "eq7" => {
            let rate = required(&config.rate, "rate", verb)?;
            let grids = required(&config.eq7, "eq7", verb)?;
            let r = eq7_grid_value(&family, &class, rate, &grids)?;
            Ok(Table {
                columns: vec![
                    "rate",
                    "value",
                    "alpha_count",
                    "delta_count",
                    "p_prime_count",
                    "channel_count",
                    "vacuous_branches",
                    "vacuous_deltas",
                ],
                rows: vec![vec![
                    format_number(rate),
                    format_number(r.value),
                    r.alpha_count.to_string(),
                    r.delta_count.to_string(),
                    r.p_prime_count.to_string(),
                    r.channel_count.to_string(),
                    r.vacuous_branches.to_string(),
                    r.vacuous_deltas.to_string(),
                ]],
                diagnostics: serde_json::Value::Null,
            })
        }
        "gc" => {
            let n_grid = required(&config.n_grid, "n_grid", verb)?;
            let trials = required(&config.trials, "trials", verb)?;
            let seed = required(&config.seed, "seed", verb)?;
            let mut rows = Vec::new();
            for (i, p) in family.members().iter().enumerate() {
                // Each member gets its own stream family.
                let member_seed = seed.wrapping_add(i as u64);
                for g in gc_decay(p, &class, &n_grid, trials, member_seed)? {
                    rows.push(vec![
                        i.to_string(),
                        g.n.to_string(),
                        format_number(g.mean),
                        format_number(g.std_err),
                    ]);
                }
            }
            Ok(Table {
                columns: vec!["true_p_index", "n", "mean", "std_err"],
                rows,
                diagnostics: serde_json::Value::Null,
            })
        }
        "cover" => {
            let eps_list = required(&config.eps_list, "eps_list", verb)?;
            let mode = config.cover_mode.unwrap_or(CoverMode::Exact);
            let mut rows = Vec::new();
            for &eps in &eps_list {
                let (count, net) = covering_number(&family, eps, &class, mode)?;
                rows.push(vec![
                    format_number(eps),
                    count.to_string(),
                    format_number(net.certified_radius),
                    net.minimal.to_string(),
                    net.member_indices
                        .iter()
                        .map(usize::to_string)
                        .collect::<Vec<_>>()
                        .join(" "),
                ]);
            }
            Ok(Table {
                columns: vec!["epsilon", "count", "certified_radius", "minimal", "members"],
                rows,
                diagnostics: serde_json::Value::Null,
            })
        }
        other => Err(CliError::Config(format!("unknown command `{other}`"))),
    }
}

fn quantizer_mode(config: &RunConfig) -> QuantizerMode {
    match config.quantizer_mode.unwrap_or(QuantizerChoice::Exact) {
        QuantizerChoice::Exact => QuantizerMode::Exact,
        QuantizerChoice::Greedy => QuantizerMode::Greedy {
            restarts: config.restarts.unwrap_or(8),
        },
    }
}

fn dhat(
    n: usize,
    rate: f64,
    family: &DistributionFamily,
    class: &FunctionClass,
    config: &RunConfig,
    budget: &SearchBudget,
) -> CliResult<DhatResult> {
    Ok(match quantizer_mode(config) {
        QuantizerMode::Exact => optimal_quantizer(n, rate, family, class, budget)?,
        QuantizerMode::Greedy { restarts } => greedy_quantizer(
            n,
            rate,
            family,
            class,
            restarts,
            config.seed.unwrap_or(0),
            budget,
        )?,
    })
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc },
        )
        .0
}

fn curve_table(config: &ExperimentConfig, outcome: &ExperimentOutcome) -> Table {
    let rows = outcome
        .points
        .iter()
        .map(|p| {
            vec![
                p.n.to_string(),
                p.true_p_index.to_string(),
                format_number(p.mean_excess),
                format_number(p.std_err),
                format_number(p.mean_bound),
                opt_number(p.exceedance_prob),
                p.violations.to_string(),
            ]
        })
        .collect();
    let mut diagnostics = serde_json::json!({ "worst_case": outcome.worst_case() });
    if !outcome.net_sizes.is_empty() {
        let rates: Vec<f64> = outcome
            .net_sizes
            .iter()
            .zip(&config.n_grid)
            .map(|(&k, &n)| (k as f64).log2() / n as f64)
            .collect();
        diagnostics["net_sizes"] = serde_json::json!(outcome.net_sizes);
        diagnostics["achieved_rates"] = serde_json::json!(rates);
    }
    if !outcome.quantizers.is_empty() {
        diagnostics["dhat"] = serde_json::json!(outcome
            .quantizers
            .iter()
            .map(|q| q.value)
            .collect::<Vec<_>>());
    }
    Table {
        columns: vec![
            "n",
            "true_p_index",
            "mean_excess",
            "std_err",
            "mean_bound",
            "exceedance_prob",
            "violations",
        ],
        rows,
        diagnostics,
    }
}
