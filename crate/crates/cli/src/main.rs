//! Batch front end for the witness programs: reads covariance matrices,
//! partitions, and constraints from JSON files, runs the optimizations, and
//! emits machine-readable reports.
//!
//! Exit codes: 0 = ran, verdict in the report; 2 = input error; 3 = solver
//! failure (including infeasible constraint sets).

mod input;
mod report;

use clap::{Args, Parser, Subcommand};

use cvwit_core::product::{balance_parameter, decompose_xp, detects_product, product_value};
use cvwit_core::states;
use cvwit_core::symplectic::{p_measure, pinch_xp, CovarianceMatrix, Mat, ModePartition};
use cvwit_core::witnessprob::{
    fully_wit, margin_verdict, multi_wit, validate_multipartite_witness, validate_witness,
    SeparabilityVerdict, WitnessError, WitnessResult, WitnessValidation,
};

use input::{parse_input, parse_partition_flag, parse_witness, InputError};
use report::{digest, emit, Json};

const SCHEMA: &str = "cvwit-report/1";

#[derive(Parser)]
#[command(name = "cvwit", version, about = "Entanglement witnesses from second moments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal witness against full separability of the partition
    Fullywit(SolveArgs),
    /// Optimal witness against bi-separability (genuine multipartite entanglement)
    Multiwit(SolveArgs),
    /// Check the classification conditions for a witness matrix
    Validate {
        /// Witness file: {"z": [[...]]}
        #[arg(long)]
        witness: String,
        /// Party sizes, comma separated (e.g. 1,1)
        #[arg(long)]
        partition: String,
        /// Write the report here instead of stdout
        #[arg(long)]
        output: Option<String>,
    },
    /// Emit a reference covariance matrix as an input file
    State {
        #[command(subcommand)]
        which: StateKind,
    },
    /// Evaluate the product criterion for a witness against a state
    Product {
        /// Witness file: {"z": [[...]]}
        #[arg(long)]
        witness: String,
        /// State file with fields modes, gamma
        #[arg(long)]
        input: String,
        /// Override the input file's partition (comma-separated party sizes)
        #[arg(long)]
        partition: Option<String>,
        /// Detection tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Write the report here instead of stdout
        #[arg(long)]
        output: Option<String>,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Input JSON file with fields modes, gamma, optional constraints
    #[arg(long)]
    input: String,
    /// Solver and verdict tolerance
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<String>,
    /// Override the input file's partition (comma-separated party sizes)
    #[arg(long)]
    partition: Option<String>,
    /// Omit the witness matrix from the report
    #[arg(long)]
    no_witness: bool,
}

#[derive(Subcommand)]
enum StateKind {
    /// The 4-mode bound entangled reference state (partition 2,2)
    Ww {
        #[arg(long)]
        output: Option<String>,
    },
    /// Permutation-invariant N-party squeezed family
    Ghz {
        #[arg(long)]
        parties: usize,
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        #[arg(long)]
        output: Option<String>,
    },
    /// 4-mode pre-measurement state of the swap protocol
    Swap {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        output: Option<String>,
    },
    /// Two-mode squeezed pair
    Tms {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        output: Option<String>,
    },
    /// n-mode vacuum
    Vacuum {
        #[arg(long)]
        modes: usize,
        #[arg(long)]
        output: Option<String>,
    },
    /// Seeded random valid covariance matrix
    Random {
        #[arg(long)]
        modes: usize,
        #[arg(long, default_value_t = 0.0)]
        mix: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: Option<String>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn solver(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(format!("IO_ERROR: {e}"))
    }
}

fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cvwit: {}", f.message);
            std::process::ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Fullywit(args) => solve("fullywit", &args),
        Command::Multiwit(args) => solve("multiwit", &args),
        Command::Validate { witness, partition, output } => {
            validate(&witness, &partition, output.as_deref())
        }
        Command::State { which } => state(which),
        Command::Product { witness, input, partition, tol, output } => {
            product(&witness, &input, partition.as_deref(), tol, output.as_deref())
        }
    }
}

fn parsed_partition(flag: Option<&str>) -> Result<Option<Vec<usize>>, Failure> {
    Ok(match flag {
        Some(text) => Some(parse_partition_flag(text)?),
        None => None,
    })
}

fn verdict_str(v: SeparabilityVerdict) -> &'static str {
    match v {
        SeparabilityVerdict::Separable => "separable",
        SeparabilityVerdict::Entangled => "entangled",
        SeparabilityVerdict::Boundary => "boundary",
    }
}

fn status_str(s: cvwit_core::sdpcore::SdpStatus) -> &'static str {
    use cvwit_core::sdpcore::SdpStatus::*;
    match s {
        Optimal => "optimal",
        PrimalInfeasible => "primal_infeasible",
        DualInfeasible => "dual_infeasible",
        NumericalTrouble => "numerical_trouble",
        IterationLimit => "iteration_limit",
    }
}

fn validation_json(v: &WitnessValidation) -> Json {
    Json::Object(vec![
        ("psd", Json::Bool(v.psd)),
        ("block_str_sum", Json::Float(v.block_str_sum)),
        ("total_str", Json::Float(v.total_str)),
        ("cond_i", Json::Bool(v.cond_i)),
        ("cond_ii", Json::Bool(v.cond_ii)),
        ("cond_iii", Json::Bool(v.cond_iii)),
        ("passes", Json::Bool(v.passes())),
    ])
}

/// Product-criterion value of the witness with its cross-sector entries
/// removed, evaluated on the input state.
fn pinched_product(z: &Mat, gamma: &CovarianceMatrix) -> Json {
    decompose_xp(&pinch_xp(z))
        .and_then(|pw| product_value(&pw, gamma))
        .map_or(Json::Null, Json::Float)
}

fn solve(task: &'static str, args: &SolveArgs) -> Result<(), Failure> {
    let partition_override = parsed_partition(args.partition.as_deref())?;
    let parsed = parse_input(&args.input, partition_override.as_deref())?;
    let run = if task == "fullywit" { fully_wit } else { multi_wit };
    let outcome = run(&parsed.gamma, &parsed.partition, &parsed.constraints, args.tol);

    let mut fields = vec![
        ("schema", Json::Str(SCHEMA.into())),
        ("tool_version", Json::Str(env!("CARGO_PKG_VERSION").into())),
        ("task", Json::Str(task.into())),
        ("input_digest", Json::Str(digest(&parsed.raw))),
        ("tolerance", Json::Float(args.tol)),
    ];
    let (tail, code): (Vec<(&'static str, Json)>, u8) = match &outcome {
        Ok(r) => (solved_fields(r, &parsed.gamma, args), 0),
        Err(WitnessError::ConstraintsInfeasible) => (
            vec![
                ("status", Json::Str("constraints_infeasible".into())),
                ("iterations", Json::Null),
                ("gap", Json::Null),
                ("c", Json::Null),
                ("x_e", Json::Null),
                ("verdict", Json::Null),
                ("p_measure", Json::Null),
                ("validation", Json::Null),
                ("product_value_pinched", Json::Null),
            ],
            3,
        ),
        Err(WitnessError::SolverFailure { status, gap, iterations }) => (
            vec![
                ("status", Json::Str(status_str(*status).into())),
                ("iterations", Json::Int(*iterations as u64)),
                ("gap", Json::Float(*gap)),
                ("c", Json::Null),
                ("x_e", Json::Null),
                ("verdict", Json::Null),
                ("p_measure", Json::Null),
                ("validation", Json::Null),
                ("product_value_pinched", Json::Null),
            ],
            3,
        ),
        Err(other) => return Err(Failure::input(format!("BAD_INPUT: {other}"))),
    };
    fields.extend(tail);
    emit(args.output.as_deref(), &Json::Object(fields).render())?;
    if code == 0 {
        Ok(())
    } else {
        Err(Failure::solver(match outcome {
            Err(e) => e.to_string(),
            Ok(_) => unreachable!(),
        }))
    }
}

fn solved_fields(
    r: &WitnessResult,
    gamma: &CovarianceMatrix,
    args: &SolveArgs,
) -> Vec<(&'static str, Json)> {
    let mut fields = vec![
        ("status", Json::Str(status_str(r.status).into())),
        ("iterations", Json::Int(r.iterations as u64)),
        ("gap", Json::Float(r.gap)),
        ("c", Json::Float(r.c)),
        ("x_e", Json::Float(r.x_e)),
        ("verdict", Json::Str(verdict_str(margin_verdict(r.x_e, args.tol)).into())),
        ("p_measure", p_measure(r.x_e).map_or(Json::Null, Json::Float)),
        ("validation", validation_json(&r.conditions)),
        ("product_value_pinched", pinched_product(&r.z, gamma)),
    ];
    if !args.no_witness {
        fields.push(("witness", Json::matrix(&r.z)));
    }
    fields
}

fn validate(witness: &str, partition: &str, output: Option<&str>) -> Result<(), Failure> {
    let (z, raw) = parse_witness(witness)?;
    let sizes = parse_partition_flag(partition)?;
    let part = ModePartition::new(sizes.clone())
        .map_err(|e| Failure::input(format!("BAD_PARTITION: {e}")))?;
    let conditions =
        validate_witness(&z, &part).map_err(|e| Failure::input(format!("BAD_INPUT: {e}")))?;
    let multipartite = if part.parties() >= 3 {
        let v = validate_multipartite_witness(&z, &part)
            .map_err(|e| Failure::input(format!("BAD_INPUT: {e}")))?;
        validation_json(&v)
    } else {
        Json::Null
    };
    let doc = Json::Object(vec![
        ("schema", Json::Str(SCHEMA.into())),
        ("tool_version", Json::Str(env!("CARGO_PKG_VERSION").into())),
        ("task", Json::Str("validate".into())),
        ("input_digest", Json::Str(digest(&raw))),
        ("partition", Json::Array(sizes.iter().map(|&s| Json::Int(s as u64)).collect())),
        ("conditions", validation_json(&conditions)),
        ("multipartite_conditions", multipartite),
    ]);
    emit(output, &doc.render())?;
    Ok(())
}

fn product(
    witness: &str,
    input: &str,
    partition: Option<&str>,
    tol: f64,
    output: Option<&str>,
) -> Result<(), Failure> {
    let (z, wraw) = parse_witness(witness)?;
    let partition_override = parsed_partition(partition)?;
    let parsed = parse_input(input, partition_override.as_deref())?;
    let pw = decompose_xp(&z).map_err(|e| Failure::input(format!("BAD_INPUT: {e}")))?;
    let detected = detects_product(&pw, &parsed.gamma, &parsed.partition, tol)
        .map_err(|e| Failure::input(format!("NOT_A_WITNESS: {e}")))?;
    let value =
        product_value(&pw, &parsed.gamma).map_err(|e| Failure::input(format!("BAD_INPUT: {e}")))?;
    let doc = Json::Object(vec![
        ("schema", Json::Str(SCHEMA.into())),
        ("tool_version", Json::Str(env!("CARGO_PKG_VERSION").into())),
        ("task", Json::Str("product".into())),
        ("witness_digest", Json::Str(digest(&wraw))),
        ("input_digest", Json::Str(digest(&parsed.raw))),
        ("tolerance", Json::Float(tol)),
        ("product_value", Json::Float(value)),
        ("linear_value", Json::Float(z.dot(parsed.gamma.matrix()))),
        (
            "balance_parameter",
            balance_parameter(&pw, &parsed.gamma).map_or(Json::Null, Json::Float),
        ),
        ("detected", Json::Bool(detected)),
    ]);
    emit(output, &doc.render())?;
    Ok(())
}

fn state(which: StateKind) -> Result<(), Failure> {
    let bad = |e: cvwit_core::states::StateError| Failure::input(format!("BAD_PARAMETER: {e}"));
    let (gamma, modes, output): (CovarianceMatrix, Vec<usize>, Option<String>) = match which {
        StateKind::Ww { output } => (states::ww_state(), vec![2, 2], output),
        StateKind::Ghz { parties, r1, r2, output } => {
            (states::ghz_covariance(parties, r1, r2).map_err(bad)?, vec![1; parties], output)
        }
        StateKind::Swap { r, alpha, output } => {
            (states::swap_state(r, alpha).map_err(bad)?, vec![1; 4], output)
        }
        StateKind::Tms { r, output } => {
            (states::two_mode_squeezed(r).map_err(bad)?, vec![1, 1], output)
        }
        StateKind::Vacuum { modes, output } => {
            if modes == 0 {
                return Err(Failure::input("BAD_PARAMETER: vacuum needs at least one mode"));
            }
            (states::vacuum_state(modes), vec![1; modes], output)
        }
        StateKind::Random { modes, mix, seed, output } => {
            (states::random_covariance(modes, mix, seed).map_err(bad)?, vec![1; modes], output)
        }
    };
    let doc = Json::Object(vec![
        ("modes", Json::Array(modes.iter().map(|&s| Json::Int(s as u64)).collect())),
        ("gamma", Json::matrix(gamma.matrix())),
    ]);
    emit(output.as_deref(), &doc.render())?;
    Ok(())
}
