//! The `hodgeflow` command-line interface.
//!
//! Every subcommand writes its artifacts into the `--out` directory.
//! Exit codes: 0 success, 2 invalid input, 3 solver did not reach an
//! optimal certified solution, 4 I/O failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hodgeflow_core::decomposition::{verify_decomposition, DecompositionReport};
use hodgeflow_core::experiment::{self, ExperimentConfig, StageState, REFERENCE_SEED};
use hodgeflow_core::flow::{decompose_trajectory, default_time_grid, FlowPropagator};
use hodgeflow_core::io::{matrix_to_csv, LaplacianEnvelope, LaplacianPart};
use hodgeflow_core::optimizer::{optimize_weights, OptimizeOptions};
use hodgeflow_core::sdp::SolverOptions;
use hodgeflow_core::{
    ChainSignal, DecompositionMethod, Error, HodgeComponents, HodgeDecomposer, HodgeLaplacian, Objective,
    SimplicialComplex, WeightAssignment, WeightSelection,
};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_OPTIMAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "hodgeflow", version, about = "Weighted Hodge Laplacians, flows and optimal simplex weights")]
pub struct Cli {
    /// Seed for every random quantity (ChaCha20).
    #[arg(long, global = true, default_value_t = REFERENCE_SEED)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Format of the main artifact.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample points on the unit square and build their Vietoris–Rips complex.
    Generate(GenerateArgs),
    /// Assemble a weighted Hodge Laplacian.
    Laplacian(LaplacianArgs),
    /// Hodge-decompose a chain signal.
    Decompose(DecomposeArgs),
    /// Simulate the Hodge Laplacian flow from a signal.
    Flow(FlowArgs),
    /// Optimize simplex weights by semidefinite programming.
    Optimize(OptimizeArgs),
    /// Run generate, both optimizations and the flow comparison.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    /// Number of uniform points on the unit square.
    #[arg(long, default_value_t = 30)]
    pub n_points: usize,
    /// Vietoris–Rips distance threshold.
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Highest simplex order to build.
    #[arg(long, default_value_t = 2)]
    pub max_order: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Debug, Args)]
pub struct ComplexArgs {
    /// Complex JSON file.
    #[arg(long)]
    pub complex: PathBuf,
    /// Weights JSON (`{"0": [...], ...}`); missing orders are all ones.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Simplex order `k`.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PartArg {
    Full,
    Down,
    Up,
    Symmetric,
}

#[derive(Debug, Args)]
pub struct LaplacianArgs {
    #[command(flatten)]
    pub input: ComplexArgs,
    /// Which operator to export; `symmetric` is the symmetrized full Laplacian.
    #[arg(long, value_enum, default_value_t = PartArg::Full)]
    pub part: PartArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Normal,
    Lstsq,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub input: ComplexArgs,
    /// Signal values separated by commas or newlines.
    #[arg(long)]
    pub signal: PathBuf,
    /// How the potentials are solved for.
    #[arg(long, value_enum, default_value_t = MethodArg::Normal)]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub input: ComplexArgs,
    /// Initial condition, values separated by commas or newlines.
    #[arg(long)]
    pub signal: PathBuf,
    /// Final time; defaults to `10 / lambda_min_nonzero`.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of sample times, `0` then log-spaced up to the final time.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Append gradient, harmonic and curl norm columns.
    #[arg(long)]
    pub components: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Trace,
    Lambda,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Trace => Objective::TracePinv,
            ObjectiveArg::Lambda => Objective::LambdaMin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Lower,
    Upper,
}

fn selection(sides: &[SideArg]) -> WeightSelection {
    WeightSelection { lower: sides.contains(&SideArg::Lower), upper: sides.contains(&SideArg::Upper) }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Which neighbouring weights to optimize (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_value = "upper")]
    pub optimize: Vec<SideArg>,
    /// Duality gap tolerance, relative to `max(1, |objective|)`.
    #[arg(long, default_value_t = SolverOptions::default().gap_tol)]
    pub gap_tol: f64,
    /// Primal/dual infeasibility and cone violation tolerance.
    #[arg(long, default_value_t = SolverOptions::default().feas_tol)]
    pub feas_tol: f64,
    /// Interior-point iteration cap.
    #[arg(long, default_value_t = SolverOptions::default().max_iter)]
    pub max_iter: usize,
}

impl SolverArgs {
    fn options(&self) -> Result<OptimizeOptions, Error> {
        if !(self.gap_tol > 0.0 && self.feas_tol > 0.0) {
            return Err(Error::Parse("tolerances must be positive".into()));
        }
        Ok(OptimizeOptions {
            solver: SolverOptions {
                gap_tol: self.gap_tol,
                feas_tol: self.feas_tol,
                max_iter: self.max_iter,
                ..SolverOptions::default()
            },
            ..OptimizeOptions::default()
        })
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Complex JSON file.
    #[arg(long)]
    pub complex: PathBuf,
    /// Order `k` of the Laplacian whose neighbouring weights are optimized.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    /// Minimize `tr L_k^+` or maximize the smallest non-zero eigenvalue.
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Trace)]
    pub objective: ObjectiveArg,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Order `k` of the Laplacian being optimized and simulated.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Samples on each flow trajectory.
    #[arg(long, default_value_t = 200)]
    pub flow_samples: usize,
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_io() {
        EXIT_IO
    } else if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_NOT_OPTIMAL
    }
}

pub fn execute(cli: &Cli) -> Result<i32, Error> {
    fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Laplacian(a) => laplacian(cli, a),
        Command::Decompose(a) => decompose(cli, a),
        Command::Flow(a) => flow(cli, a),
        Command::Optimize(a) => optimize(cli, a),
        Command::Pipeline(a) => pipeline(cli, a),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn read_complex(path: &Path) -> Result<SimplicialComplex, Error> {
    SimplicialComplex::from_json(&fs::read_to_string(path)?)
}

fn read_weights(complex: &SimplicialComplex, path: Option<&PathBuf>) -> Result<WeightAssignment, Error> {
    match path {
        Some(p) => WeightAssignment::from_json(complex, &fs::read_to_string(p)?),
        None => Ok(WeightAssignment::uniform(complex)),
    }
}

fn read_signal(complex: &SimplicialComplex, order: usize, path: &Path) -> Result<ChainSignal, Error> {
    ChainSignal::new(complex, order, ChainSignal::parse_values(&fs::read_to_string(path)?)?)
}

fn experiment_config(cli: &Cli, sampling: &SamplingArgs) -> ExperimentConfig {
    ExperimentConfig {
        seed: cli.seed,
        n_points: sampling.n_points,
        epsilon: sampling.epsilon,
        max_order: sampling.max_order,
        ..ExperimentConfig::default()
    }
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Result<i32, Error> {
    let instance = experiment::generate(&experiment_config(cli, &a.sampling))?;
    let counts = instance.complex.counts();
    eprintln!("simplex counts per order: {counts:?}");
    write(&cli.out, "complex.json", &(instance.complex.to_json()? + "\n"))?;
    write(&cli.out, "points.csv", &instance.points.to_csv())?;
    Ok(EXIT_OK)
}

fn laplacian(cli: &Cli, a: &LaplacianArgs) -> Result<i32, Error> {
    let complex = read_complex(&a.input.complex)?;
    let weights = read_weights(&complex, a.input.weights.as_ref())?;
    let lap = HodgeLaplacian::assemble(&complex, &weights, a.input.order)?;
    let part = match a.part {
        PartArg::Full => LaplacianPart::Full,
        PartArg::Down => LaplacianPart::Down,
        PartArg::Up => LaplacianPart::Up,
        PartArg::Symmetric => LaplacianPart::Symmetric,
    };
    match cli.format {
        Format::Json => write(&cli.out, "laplacian.json", &to_json(&LaplacianEnvelope::new(&lap, part))?)?,
        Format::Csv => write(&cli.out, "laplacian.csv", &matrix_to_csv(&part.select(&lap)))?,
    };
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DecompositionOutput {
    components: HodgeComponents,
    report: DecompositionReport,
}

fn decompose(cli: &Cli, a: &DecomposeArgs) -> Result<i32, Error> {
    let complex = read_complex(&a.input.complex)?;
    let weights = read_weights(&complex, a.input.weights.as_ref())?;
    let signal = read_signal(&complex, a.input.order, &a.signal)?;
    let method = match a.method {
        MethodArg::Normal => DecompositionMethod::NormalEquations,
        MethodArg::Lstsq => DecompositionMethod::LeastSquares,
    };
    let components = HodgeDecomposer::new(&complex, &weights, a.input.order, method)?.decompose(&signal)?;
    let report = verify_decomposition(&components, &complex, &weights, &signal)?;
    match cli.format {
        Format::Json => write(&cli.out, "decomposition.json", &to_json(&DecompositionOutput { components, report })?)?,
        Format::Csv => {
            let mut text = String::from("gradient,harmonic,curl\n");
            for i in 0..signal.values.len() {
                text.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e}\n",
                    components.gradient[i], components.harmonic[i], components.curl[i]
                ));
            }
            write(&cli.out, "decomposition.csv", &text)?
        }
    };
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct FlowJson {
    order: usize,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    gradient_norms: Option<Vec<f64>>,
    harmonic_norms: Option<Vec<f64>>,
    curl_norms: Option<Vec<f64>>,
}

fn flow(cli: &Cli, a: &FlowArgs) -> Result<i32, Error> {
    let complex = read_complex(&a.input.complex)?;
    let weights = read_weights(&complex, a.input.weights.as_ref())?;
    let k = a.input.order;
    let signal = read_signal(&complex, k, &a.signal)?;
    let prop = FlowPropagator::new(&HodgeLaplacian::assemble(&complex, &weights, k)?)?;
    let t_max = match a.t_max {
        Some(t) if t.is_finite() && t > 0.0 => t,
        Some(t) => return Err(Error::Parse(format!("t-max must be positive, got {t}"))),
        None => 10.0 / prop.lambda_min_nonzero()?,
    };
    if a.samples < 2 {
        return Err(Error::Parse("at least two samples are required".into()));
    }
    let traj = prop.simulate(&signal.values, &default_time_grid(t_max, a.samples))?;
    let comps = if a.components {
        let decomposer = HodgeDecomposer::new(&complex, &weights, k, DecompositionMethod::NormalEquations)?;
        Some(decompose_trajectory(&decomposer, &traj)?)
    } else {
        None
    };
    match cli.format {
        Format::Csv => write(&cli.out, "flow.csv", &traj.to_csv(comps.as_ref()))?,
        Format::Json => {
            let json = FlowJson {
                order: k,
                times: traj.times.clone(),
                states: traj.states.row_iter().map(|r| r.iter().copied().collect()).collect(),
                gradient_norms: comps.as_ref().map(|c| c.gradient_norms.clone()),
                harmonic_norms: comps.as_ref().map(|c| c.harmonic_norms.clone()),
                curl_norms: comps.as_ref().map(|c| c.curl_norms.clone()),
            };
            write(&cli.out, "flow.json", &to_json(&json)?)?
        }
    };
    Ok(EXIT_OK)
}

fn optimize(cli: &Cli, a: &OptimizeArgs) -> Result<i32, Error> {
    let complex = read_complex(&a.complex)?;
    let options = a.solver.options()?;
    let result = optimize_weights(&complex, a.order, a.objective.into(), selection(&a.solver.optimize), &options)?;
    write(&cli.out, "optimize.json", &to_json(&result)?)?;
    write(&cli.out, "weights.json", &to_json(&result.weights.to_json_map())?)?;
    eprintln!(
        "{:?}: direct {:.10} vs uniform {:.10} ({:+.3}%), status {:?}",
        result.objective,
        result.direct_objective,
        result.uniform_objective,
        result.improvement_percent,
        result.certificate.status
    );
    Ok(if result.is_optimal() { EXIT_OK } else { EXIT_NOT_OPTIMAL })
}

fn pipeline(cli: &Cli, a: &PipelineArgs) -> Result<i32, Error> {
    let sel = selection(&a.solver.optimize);
    let options = a.solver.options()?;
    let config = ExperimentConfig {
        order: a.order,
        optimize_lower: sel.lower,
        optimize_upper: sel.upper,
        gap_tol: options.solver.gap_tol,
        feas_tol: options.solver.feas_tol,
        max_iter: options.solver.max_iter,
        flow_samples: a.flow_samples,
        ..experiment_config(cli, &a.sampling)
    };
    let output = experiment::run_pipeline(&config)?;
    write(&cli.out, "complex.json", &(output.instance.complex.to_json()? + "\n"))?;
    write(&cli.out, "points.csv", &output.instance.points.to_csv())?;
    write(&cli.out, "report.json", &to_json(&output.report)?)?;
    for t in &output.trajectories {
        write(&cli.out, &format!("{}.csv", t.name), &t.csv)?;
    }
    for (name, stage) in &output.report.stages {
        eprintln!(
            "{name}: {:?}{}",
            stage.status,
            stage.message.as_deref().map(|m| format!(" ({m})")).unwrap_or_default()
        );
    }
    let failed = output.report.stages.values().any(|s| s.status == StageState::Failed);
    Ok(if failed { EXIT_NOT_OPTIMAL } else { EXIT_OK })
}
