//! Command-line interface for the QUBO toolkit.
//!
//! Instances travel in the binary container format (see the `qbfile`
//! module); `-` stands for stdin/stdout, so commands compose in pipes:
//!
//! ```text
//! qubo gen --n 16 --density 0.8 --seed 1 | qubo info
//! ```
//!
//! Machine output is line-oriented JSON on stdout. When a command writes an
//! instance to stdout, its JSON summary moves to stderr so the byte stream
//! stays clean. Exit codes: 0 success, 1 usage error, 2 data or format
//! error, 3 resource-cap error.

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use qubo_core::assignment::PartialAssignment;
use qubo_core::probability::{log_partition, pairwise_marginals, probabilities};
use qubo_core::preprocessing::{qpro_plus, reduce_dynamic_range};
use qubo_core::sampling::gibbs_sample_exact;
use qubo_core::solving::{brute_force, local_search, simulated_annealing};
use qubo_core::{qbfile, BitVector, QuboInstance, Solution, WeightDistribution};

#[derive(Parser)]
#[command(
    name = "qubo",
    version,
    about = "Create, analyze, preprocess, and solve QUBO instances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random instance and write it in the binary format.
    Gen {
        /// Number of variables.
        #[arg(long)]
        n: usize,
        /// Weight distribution.
        #[arg(long, value_enum, default_value_t = Distr::Normal)]
        distr: Distr,
        /// Probability that an upper-triangle entry is nonzero.
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Destination file; `-` is stdout.
        #[arg(short, long, default_value = "-")]
        output: String,
    },
    /// Print size, density, and dynamic range of an instance.
    Info {
        #[arg(default_value = "-")]
        file: String,
    },
    /// Evaluate the energy of a bit string.
    Energy {
        #[arg(default_value = "-")]
        file: String,
        /// Assignment as a bit string, e.g. 0110.
        #[arg(long)]
        x: String,
    },
    /// Apply a partial assignment, emitting the reduced instance and the
    /// energy constant.
    Clamp {
        #[arg(default_value = "-")]
        file: String,
        #[command(flatten)]
        assignment: AssignmentSource,
        /// Destination for the reduced instance; `-` is stdout.
        #[arg(short, long, default_value = "-")]
        output: String,
    },
    /// Shrink an instance by persistency rules and/or reduce its dynamic
    /// range.
    Preprocess {
        #[arg(default_value = "-")]
        file: String,
        /// Fix provably assignable variables and variable pairs.
        #[arg(long)]
        qpro_plus: bool,
        /// Merge parameter values where energy bounds allow it.
        #[arg(long)]
        dr_reduce: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Destination for the processed instance; `-` is stdout.
        #[arg(short, long, default_value = "-")]
        output: String,
    },
    /// Minimize an instance exactly or heuristically.
    Solve {
        #[arg(default_value = "-")]
        file: String,
        #[arg(long, value_enum)]
        method: Method,
        /// Worker threads (brute force only).
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Proposal count (simulated annealing only).
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        /// Initial temperature (simulated annealing; probed when omitted).
        #[arg(long)]
        t0: Option<f64>,
        /// Geometric cooling factor in (0, 1) (simulated annealing only).
        #[arg(long, default_value_t = 0.995)]
        alpha: f64,
        /// Restart count (local search only).
        #[arg(long, default_value_t = 8)]
        restarts: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-insert clamped variables into a reduced solution vector.
    Expand {
        /// File holding an assignment expression (or, without --n, a bit
        /// vector expression).
        #[arg(long)]
        assignment_file: String,
        /// Number of variables of the full space; required for assignment
        /// expressions.
        #[arg(long)]
        n: Option<usize>,
        /// Reduced solution as a bit string.
        #[arg(long)]
        x: String,
    },
    /// Convert an instance to another model form.
    Convert {
        #[arg(default_value = "-")]
        file: String,
        #[arg(long, value_enum)]
        to: Target,
    },
    /// Gibbs-distribution quantities: probability vector, marginals, log
    /// partition function.
    Probs {
        #[arg(default_value = "-")]
        file: String,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Emit the pairwise marginal matrix instead of the full vector.
        #[arg(long)]
        marginals: bool,
        /// Emit the log partition function instead of the full vector.
        #[arg(long)]
        log_partition: bool,
    },
    /// Draw from the exact Gibbs distribution.
    Sample {
        #[arg(default_value = "-")]
        file: String,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Number of draws.
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the sample in its text format to this file.
        #[arg(short, long)]
        output: Option<String>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct AssignmentSource {
    /// Assignment expression, e.g. 'x0, x3 = 0; x7 = 1; x13 != x9'.
    #[arg(long)]
    expr: Option<String>,
    /// Bit vector expression, e.g. `**00**[1]*1[!4]1`.
    #[arg(long)]
    bitvec_expr: Option<String>,
    /// JSON object mapping variable index to bit, e.g. '{"0":1,"5":0}'.
    #[arg(long)]
    pairs: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Distr {
    Normal,
    Uniform,
}

impl From<Distr> for WeightDistribution {
    fn from(d: Distr) -> Self {
        match d {
            Distr::Normal => WeightDistribution::Normal,
            Distr::Uniform => WeightDistribution::Uniform,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Brute,
    Sa,
    Local,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Ising,
}

enum CliError {
    Usage(String),
    Core(qubo_core::Error),
}

impl From<qubo_core::Error> for CliError {
    fn from(e: qubo_core::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Core(qubo_core::Error::Io(e)))
            if e.kind() == std::io::ErrorKind::BrokenPipe =>
        {
            // the consumer closed the stream; not an error
            ExitCode::SUCCESS
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            match e {
                qubo_core::Error::ResourceCap { .. } => ExitCode::from(3),
                // bad flag values are usage errors; everything else is a
                // data or format problem
                qubo_core::Error::InvalidParameter(_)
                | qubo_core::Error::InvalidDensity(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn read_instance(path: &str) -> CliResult<QuboInstance> {
    if path == "-" {
        Ok(qbfile::load(std::io::stdin().lock())?)
    } else {
        Ok(qbfile::load_from_path(path)?)
    }
}

/// Writes the instance and returns whether stdout now carries binary data.
fn write_instance(q: &QuboInstance, path: &str) -> CliResult<bool> {
    if path == "-" {
        qbfile::save(q, std::io::stdout().lock())?;
        Ok(true)
    } else {
        qbfile::save_to_path(q, path)?;
        Ok(false)
    }
}

/// One line of JSON on stdout, or on stderr when stdout carries an instance.
fn emit(value: &Value, stdout_is_binary: bool) {
    if stdout_is_binary {
        eprintln!("{value}");
    } else {
        print_line(&value.to_string());
    }
}

/// Prints one line, exiting quietly when the consumer closed the pipe.
fn print_line(line: &str) {
    let mut out = std::io::stdout().lock();
    let result = writeln!(out, "{line}").and_then(|_| out.flush());
    if let Err(e) = result {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

fn parse_bits(s: &str) -> CliResult<BitVector> {
    Ok(BitVector::from_string(s)?)
}

fn meta_json(solution: &Solution) -> Value {
    let mut map = Map::new();
    for (k, v) in &solution.meta {
        map.insert(k.clone(), Value::String(v.clone()));
    }
    Value::Object(map)
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Gen {
            n,
            distr,
            density,
            seed,
            output,
        } => {
            let q = QuboInstance::random(n, distr.into(), density, seed)?;
            let binary = write_instance(&q, &output)?;
            emit(
                &json!({
                    "n": q.n(),
                    "density": q.density(),
                    "dynamic_range": q.dynamic_range(),
                    "seed": seed,
                }),
                binary,
            );
            Ok(())
        }
        Command::Info { file } => {
            let q = read_instance(&file)?;
            emit(
                &json!({
                    "n": q.n(),
                    "density": q.density(),
                    "dynamic_range": q.dynamic_range(),
                }),
                false,
            );
            Ok(())
        }
        Command::Energy { file, x } => {
            let q = read_instance(&file)?;
            let bits = parse_bits(&x)?;
            let energy = q.energy(&bits)?;
            emit(&json!({ "x": x, "energy": energy }), false);
            Ok(())
        }
        Command::Clamp {
            file,
            assignment,
            output,
        } => {
            let q = read_instance(&file)?;
            let pa = build_assignment(&assignment, q.n())?;
            let (reduced, constant) = pa.apply(&q)?;
            let binary = write_instance(&reduced, &output)?;
            emit(
                &json!({
                    "n_in": q.n(),
                    "n_out": reduced.n(),
                    "constant": constant,
                    "assignment": pa.to_canonical_string(),
                }),
                binary,
            );
            Ok(())
        }
        Command::Preprocess {
            file,
            qpro_plus: run_persistency,
            dr_reduce,
            seed,
            output,
        } => {
            if !run_persistency && !dr_reduce {
                return Err(CliError::Usage(
                    "preprocess needs --qpro-plus and/or --dr-reduce".into(),
                ));
            }
            let q = read_instance(&file)?;
            let mut report = Map::new();
            report.insert("n_in".into(), json!(q.n()));
            let mut current = q.clone();
            let mut constant = 0.0;
            if run_persistency {
                let persistency = qpro_plus(&current);
                let (reduced, c) = persistency.assignment.apply(&current)?;
                constant += c;
                let rules: Vec<Value> = persistency
                    .rules_fired
                    .iter()
                    .map(|(rule, vars)| json!([rule.to_string(), vars]))
                    .collect();
                report.insert(
                    "assignment".into(),
                    json!(persistency.assignment.to_canonical_string()),
                );
                report.insert("rules_fired".into(), Value::Array(rules));
                current = reduced;
            }
            if dr_reduce {
                report.insert("dr_in".into(), json!(current.dynamic_range()));
                current = reduce_dynamic_range(&current, seed);
                report.insert("dr_out".into(), json!(current.dynamic_range()));
            }
            report.insert("n_out".into(), json!(current.n()));
            report.insert("constant".into(), json!(constant));
            let binary = write_instance(&current, &output)?;
            emit(&Value::Object(report), binary);
            Ok(())
        }
        Command::Solve {
            file,
            method,
            threads,
            steps,
            t0,
            alpha,
            restarts,
            seed,
        } => {
            let q = read_instance(&file)?;
            let solution = match method {
                Method::Brute => brute_force(&q, threads)?,
                Method::Sa => simulated_annealing(&q, steps, t0, alpha, seed)?,
                Method::Local => local_search(&q, restarts, seed),
            };
            emit(
                &json!({
                    "x": solution.x.to_string(),
                    "energy": solution.energy,
                    "n": q.n(),
                    "meta": meta_json(&solution),
                }),
                false,
            );
            Ok(())
        }
        Command::Expand {
            assignment_file,
            n,
            x,
        } => {
            let text = std::fs::read_to_string(&assignment_file)
                .map_err(qubo_core::Error::Io)?;
            let text = text.trim();
            let pa = match n {
                Some(n) => PartialAssignment::parse_expr(text, n)?,
                None => PartialAssignment::parse_bitvec_expr(text)?,
            };
            let reduced = parse_bits(&x)?;
            let full = pa.expand(&reduced)?;
            emit(&json!({ "x": full.to_string(), "n": full.len() }), false);
            Ok(())
        }
        Command::Convert { file, to } => {
            let q = read_instance(&file)?;
            match to {
                Target::Ising => {
                    let ising = q.to_ising();
                    emit(
                        &json!({
                            "h": ising.h,
                            "J": ising.j,
                            "constant": ising.constant,
                        }),
                        false,
                    );
                }
            }
            Ok(())
        }
        Command::Probs {
            file,
            beta,
            marginals,
            log_partition: want_log_partition,
        } => {
            let q = read_instance(&file)?;
            let mut out = Map::new();
            if marginals {
                out.insert("marginals".into(), json!(pairwise_marginals(&q, beta)?));
            }
            if want_log_partition {
                out.insert("log_partition".into(), json!(log_partition(&q, beta)?));
            }
            if out.is_empty() {
                out.insert("probabilities".into(), json!(probabilities(&q, beta)?));
            }
            out.insert("beta".into(), json!(beta));
            emit(&Value::Object(out), false);
            Ok(())
        }
        Command::Sample {
            file,
            beta,
            m,
            seed,
            output,
        } => {
            let q = read_instance(&file)?;
            let sample = gibbs_sample_exact(&q, beta, m, seed)?;
            if let Some(path) = output {
                let mut f = std::fs::File::create(path).map_err(qubo_core::Error::Io)?;
                f.write_all(sample.to_text().as_bytes())
                    .map_err(qubo_core::Error::Io)?;
            }
            for (x, count) in sample.iter() {
                print_line(&json!({ "x": x.to_string(), "count": count }).to_string());
            }
            Ok(())
        }
    }
}

fn build_assignment(source: &AssignmentSource, n: usize) -> CliResult<PartialAssignment> {
    if let Some(expr) = &source.expr {
        return Ok(PartialAssignment::parse_expr(expr, n)?);
    }
    if let Some(expr) = &source.bitvec_expr {
        let pa = PartialAssignment::parse_bitvec_expr(expr)?;
        if pa.n() != n {
            return Err(CliError::Core(qubo_core::Error::LengthMismatch {
                expected: n,
                got: pa.n(),
            }));
        }
        return Ok(pa);
    }
    let text = source.pairs.as_deref().expect("clap enforces one source");
    let parsed: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::Usage(format!("--pairs is not valid JSON: {e}")))?;
    let object = parsed
        .as_object()
        .ok_or_else(|| CliError::Usage("--pairs must be a JSON object".into()))?;
    let mut pairs = Vec::with_capacity(object.len());
    for (key, value) in object {
        let index: usize = key
            .parse()
            .map_err(|_| CliError::Usage(format!("--pairs key {key:?} is not an index")))?;
        let bit = match value.as_u64() {
            Some(0) => false,
            Some(1) => true,
            _ => {
                return Err(CliError::Usage(format!(
                    "--pairs value for {key:?} must be 0 or 1"
                )))
            }
        };
        pairs.push((index, bit));
    }
    pairs.sort_unstable();
    Ok(PartialAssignment::from_pairs(&pairs, n)?)
}
