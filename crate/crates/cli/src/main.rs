//! `qmed` command-line tool.
//!
//! Exit codes: 0 success, 2 unreadable or malformed input, 3 input that
//! parses but violates a domain invariant, 4 a failed bounds check.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use qmed::experiment::{bounds_check, gen_observables, run_cluster_experiment, ExperimentConfig};
use qmed::incompat::{gmed, med, med_upper_bound, ncom, ncom_via_choi, ncom_via_dilation, p_minus};
use qmed::io::{
    distances_to_csv, from_json_str, observables_to_csv, parse_channel, parse_measurement,
    parse_rho_arg, read_text, to_json_string, ObservableRow, MAXIMALLY_MIXED,
};
use qmed::switch::{estimate_med_sequential, estimate_ncom_switch, hoeffding_shots};
use qmed::{Error, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "qmed",
    version,
    about = "Measurement incompatibility, channel noncommutativity and quantum-switch simulation"
)]
struct Cli {
    /// Seed for every random draw (0 when omitted; overrides a config file's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format of reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// MED of two observables (or their generalized MED for a given state).
    Med {
        a: PathBuf,
        b: PathBuf,
        /// "maximally-mixed" or a density-matrix file.
        #[arg(long, default_value = MAXIMALLY_MIXED)]
        rho: String,
    },
    /// NCOM of two channels along all three evaluation routes.
    Ncom {
        c: PathBuf,
        d: PathBuf,
        #[arg(long, default_value = MAXIMALLY_MIXED)]
        rho: String,
    },
    /// Shot-level simulation of the quantum-switch estimate of NCOM.
    SwitchEstimate {
        c: PathBuf,
        d: PathBuf,
        #[arg(long, default_value = MAXIMALLY_MIXED)]
        rho: String,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
    },
    /// Prepare-measure-measure estimate of MED.
    SequentialEstimate {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
    },
    /// Random qubit observables scattered around base axes.
    GenObservables {
        /// Experiment configuration file; defaults apply when omitted.
        config: Option<PathBuf>,
    },
    /// Cluster random observables and write observables, distances and result.
    Cluster { config: Option<PathBuf> },
    /// Check the MED upper bound on random measurements and the saturating fixtures.
    BoundsCheck {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_parse() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

fn input_failure(message: String) -> Failure {
    Failure { code: 2, message }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    Ok(read_text(path)?)
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> CliResult<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => from_json_str::<ExperimentConfig>(&read(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()
        .map_err(|e| input_failure(format!("invalid config: {e}")))?;
    Ok(cfg)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| input_failure(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| input_failure(format!("{}: {e}", path.display())))
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Renders a flat report object as JSON or as a two-line CSV table.
fn render(report: &Map<String, Value>, format: Format) -> CliResult<String> {
    match format {
        Format::Json => Ok(to_json_string(report)? + "\n"),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let fail = |e: csv::Error| input_failure(format!("csv: {e}"));
            w.write_record(report.keys()).map_err(fail)?;
            w.write_record(report.values().map(csv_field))
                .map_err(fail)?;
            let bytes = w
                .into_inner()
                .map_err(|e| input_failure(format!("csv: {e}")))?;
            Ok(String::from_utf8_lossy(&bytes).into_owned())
        }
    }
}

fn emit(cli: &Cli, name: &str, report: Value) -> CliResult<()> {
    let Value::Object(map) = report else {
        unreachable!("reports are JSON objects")
    };
    let text = render(&map, cli.format)?;
    print!("{text}");
    if let Some(dir) = &cli.out {
        let ext = match cli.format {
            Format::Json => "json",
            Format::Csv => "csv",
        };
        write_file(&dir.join(format!("{name}.{ext}")), &text)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Med { a, b, rho } => {
            let pa = parse_measurement(&read(a)?)?;
            let pb = parse_measurement(&read(b)?)?;
            if pa.dim() != pb.dim() {
                return Err(
                    Error::DimensionMismatch(format!("{} vs {}", pa.dim(), pb.dim())).into(),
                );
            }
            let value = if rho == MAXIMALLY_MIXED {
                med(&pa, &pb)?
            } else {
                gmed(&pa, &pb, &parse_rho_arg(rho, pa.dim())?)?
            };
            emit(
                cli,
                "med",
                json!({
                    "med": value,
                    "prob_same": 1.0 - value * value,
                    "k_a": pa.len(),
                    "k_b": pb.len(),
                    "upper_bound": med_upper_bound(pa.len(), pb.len()),
                }),
            )
        }
        Command::Ncom { c, d, rho } => {
            let ch_c = parse_channel(&read(c)?)?;
            let ch_d = parse_channel(&read(d)?)?;
            let state = parse_rho_arg(rho, ch_c.dim())?;
            let dilation = match ncom_via_dilation(&ch_c, &ch_d, &state) {
                Ok(v) => Value::from(v),
                Err(Error::DilationBudget(..)) => Value::Null,
                Err(e) => return Err(e.into()),
            };
            emit(
                cli,
                "ncom",
                json!({
                    "ncom": ncom(&ch_c, &ch_d, &state)?,
                    "ncom_via_choi": ncom_via_choi(&ch_c, &ch_d, &state)?,
                    "ncom_via_dilation": dilation,
                    "p_minus": p_minus(&ch_c, &ch_d, &state)?,
                }),
            )
        }
        Command::SwitchEstimate {
            c,
            d,
            rho,
            epsilon,
            delta,
        } => {
            let ch_c = parse_channel(&read(c)?)?;
            let ch_d = parse_channel(&read(d)?)?;
            let state = parse_rho_arg(rho, ch_c.dim())?;
            let plan =
                hoeffding_shots(*epsilon, *delta).map_err(|e| input_failure(e.to_string()))?;
            let mut rng = RandomStream::new(seed);
            let est = estimate_ncom_switch(&ch_c, &ch_d, &state, &plan, &mut rng)?;
            emit(
                cli,
                "switch-estimate",
                json!({
                    "shots": est.shots,
                    "p_minus_hat": est.p_minus_hat,
                    "ncom_hat": est.ncom_hat,
                    "exact_p_minus": est.exact_p_minus,
                    "exact_ncom": ncom(&ch_c, &ch_d, &state)?,
                    "epsilon": plan.epsilon,
                    "delta": plan.delta,
                    "seed": est.seed,
                }),
            )
        }
        Command::SequentialEstimate { a, b, shots } => {
            let pa = parse_measurement(&read(a)?)?;
            let pb = parse_measurement(&read(b)?)?;
            if *shots == 0 {
                return Err(input_failure("--shots must be positive".into()));
            }
            let mut rng = RandomStream::new(seed);
            let est = estimate_med_sequential(&pa, &pb, *shots, &mut rng)?;
            emit(
                cli,
                "sequential-estimate",
                json!({
                    "shots": est.shots,
                    "prob_same_hat": 1.0 - 2.0 * est.p_minus_hat,
                    "med_hat": est.ncom_hat,
                    "exact_med": med(&pa, &pb)?,
                    "seed": est.seed,
                }),
            )
        }
        Command::GenObservables { config } => {
            let cfg = load_config(config.as_deref(), cli.seed)?;
            let obs = gen_observables(&cfg, &mut RandomStream::new(cfg.seed).split(0))?;
            let text = match cli.format {
                Format::Json => {
                    let list: Vec<Value> = obs
                        .iter()
                        .map(|(o, t)| json!({"bloch": o.vector(), "truth": t}))
                        .collect();
                    to_json_string(&json!({"seed": cfg.seed, "observables": list}))? + "\n"
                }
                Format::Csv => observables_to_csv(&rows(&obs, None))?,
            };
            print!("{text}");
            if let Some(dir) = &cli.out {
                let ext = if cli.format == Format::Json {
                    "json"
                } else {
                    "csv"
                };
                write_file(&dir.join(format!("observables.{ext}")), &text)?;
            }
            Ok(())
        }
        Command::Cluster { config } => {
            let cfg = load_config(config.as_deref(), cli.seed)?;
            let outcome = run_cluster_experiment(&cfg)?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let labelled: Vec<_> = outcome
                .observables
                .iter()
                .copied()
                .zip(outcome.truth.iter().copied())
                .collect();
            write_file(
                &dir.join("observables.csv"),
                &observables_to_csv(&rows(&labelled, Some(&outcome.result.labels)))?,
            )?;
            write_file(
                &dir.join("distances.csv"),
                &distances_to_csv(&outcome.distances)?,
            )?;
            let result = json!({
                "labels": outcome.result.labels,
                "medoids": outcome.result.medoids,
                "cost": outcome.result.cost,
                "iterations": outcome.result.iterations,
                "cost_history": outcome.result.cost_history,
                "purity": outcome.purity,
                "seed": cfg.seed,
                "config": cfg,
            });
            write_file(&dir.join("result.json"), &(to_json_string(&result)? + "\n"))?;
            match cli.format {
                Format::Json => println!("{}", json!({"purity": outcome.purity, "seed": cfg.seed})),
                Format::Csv => println!("purity,seed\n{},{}", outcome.purity, cfg.seed),
            }
            Ok(())
        }
        Command::BoundsCheck { dims, trials } => {
            let report = bounds_check(dims, *trials, cli.seed.unwrap_or(0))
                .map_err(|e| input_failure(e.to_string()))?;
            let value = serde_json::to_value(&report).map_err(|e| input_failure(e.to_string()))?;
            emit(cli, "bounds-check", value)?;
            if !report.passed {
                return Err(Failure {
                    code: 4,
                    message: format!(
                        "bound violated: {} violations, max excess {:e}",
                        report.violations, report.max_violation
                    ),
                });
            }
            Ok(())
        }
    }
}

fn rows(obs: &[(qmed::BlochObservable, usize)], labels: Option<&[usize]>) -> Vec<ObservableRow> {
    obs.iter()
        .enumerate()
        .map(|(i, (o, t))| {
            let [x, y, z] = o.vector();
            ObservableRow {
                x,
                y,
                z,
                truth: *t,
                label: labels.map(|l| l[i]),
            }
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qmed: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
