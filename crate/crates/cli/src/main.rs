//! `pimc`: validate narrative models, compile them to SPiM and simulate them
//! with either engine.
//!
//! Exit codes: 0 success, 1 semantic failure (invalid model, state cap,
//! failed diff), 2 I/O, parse or usage failure.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pimc_core::compile_map::{build_compile_map_capped, DEFAULT_STATE_CAP};
use pimc_core::ensemble::{
    annotate_closed_form, diff, generated_program, model_traces, program_traces, replicate_seeds, summarize,
    Engine, RunSpec, Schedule,
};
use pimc_core::interp::LoadedProgram;
use pimc_core::pi::{parse_program, render};
use pimc_core::{parse, validate, CompileError, Model, SimError, SpeciesName};

const Z_THRESHOLD: f64 = 3.0;

#[derive(Parser)]
#[command(name = "pimc", version, about = "Compile narrative biochemical models to stochastic pi-calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the well-formedness conditions.
    Validate { input: PathBuf },
    /// Write the SPiM program for a model.
    Compile {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Simulate a model and write a CSV trace.
    Simulate {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = EngineArg::Generated)]
        engine: EngineArg,
        #[command(flatten)]
        run: RunArgs,
        /// Output CSV; stdout if omitted. With several replicates the
        /// standard errors go to `<stem>.se.csv` next to it.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Run both engines and compare their mean traces.
    Diff {
        input: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Compare this SPiM program instead of the generated one.
        #[arg(long)]
        program: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Sample time, baked into `directive sample` when compiling.
    #[arg(long = "time", short = 't', default_value_t = 10.0)]
    time: f64,
    /// Initial count of every species.
    #[arg(long, default_value_t = 1000)]
    population: u64,
    /// Per-species override, e.g. `--set IgG=500`. Repeatable.
    #[arg(long = "set", value_name = "SPECIES=N")]
    overrides: Vec<String>,
    /// Total state cap across species.
    #[arg(long, env = "PIMC_STATE_CAP", default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    replicates: Option<usize>,
    /// Sample points including t = 0 and the end time.
    #[arg(long)]
    points: Option<usize>,
    /// Run replicates on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Generated,
    Direct,
}

enum Failure {
    Semantic(String),
    Environment(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Environment(e)
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Compile(c) => compile_failure(c),
            other => Failure::Environment(other.into()),
        }
    }
}

fn compile_failure(e: CompileError) -> Failure {
    match e {
        CompileError::Invalid(vs) => Failure::Semantic(vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n")),
        other => Failure::Semantic(other.to_string()),
    }
}

type Outcome = Result<(), Failure>;

fn read_model(path: &Path) -> Result<Model, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse(&text).map_err(|ds| {
        let lines: Vec<String> = ds.iter().map(|d| format!("{}: {d}", path.display())).collect();
        Failure::Environment(anyhow!(lines.join("\n")))
    })
}

fn configured_model(path: &Path, args: &ModelArgs) -> Result<Model, Failure> {
    let mut m = read_model(path)?;
    m.set_sample_time(args.time).map_err(|e| Failure::Environment(e.into()))?;
    m.set_default_population(args.population);
    for o in &args.overrides {
        let (name, n) = o
            .split_once('=')
            .ok_or_else(|| anyhow!("expected SPECIES=N, got `{o}`"))?;
        let species = SpeciesName::new(name.trim()).map_err(|e| Failure::Environment(e.into()))?;
        let n: u64 = n.trim().parse().with_context(|| format!("bad population in `{o}`"))?;
        m.set_population(species, n);
    }
    let violations = validate(&m);
    if !violations.is_empty() {
        return Err(compile_failure(CompileError::Invalid(violations)));
    }
    Ok(m)
}

fn spec(run: &RunArgs, until: f64, replicates: usize, points: usize, seed: u64) -> RunSpec {
    RunSpec {
        until,
        points: run.points.unwrap_or(points),
        replicates: run.replicates.unwrap_or(replicates),
        seed,
        schedule: if run.sequential { Schedule::Sequential } else { Schedule::Parallel },
    }
}

fn cmd_validate(input: &Path) -> Outcome {
    let m = read_model(input)?;
    let violations = validate(&m);
    if violations.is_empty() {
        println!("model OK");
        Ok(())
    } else {
        Err(compile_failure(CompileError::Invalid(violations)))
    }
}

fn cmd_compile(input: &Path, output: &Path, args: &ModelArgs) -> Outcome {
    let m = configured_model(input, args)?;
    let map = build_compile_map_capped(&m, args.state_cap).map_err(compile_failure)?;
    let program = generated_program(&m, args.state_cap)?;
    fs::write(output, render(&program)).with_context(|| format!("cannot write {}", output.display()))?;
    for sa in &map.species {
        println!("{}: {} states", sa.species, sa.states.len());
    }
    Ok(())
}

fn companion_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}.se.csv"))
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_simulate(input: &Path, engine: EngineArg, run: &RunArgs, output: Option<&Path>, args: &ModelArgs) -> Outcome {
    let m = configured_model(input, args)?;
    let engine = match engine {
        EngineArg::Generated => Engine::Generated,
        EngineArg::Direct => Engine::Direct,
    };
    let spec = spec(run, args.time, 1, 101, run.seed);
    let traces = model_traces(&m, engine, &spec, args.state_cap)?;
    let mut out = open_output(output)?;
    if let [single] = traces.as_slice() {
        single.write_csv(&mut out).context("writing trace")?;
    } else {
        let summary = summarize(&traces)?;
        summary.write_mean_csv(&mut out).context("writing mean trace")?;
        match output {
            Some(p) => {
                let se = companion_path(p);
                let file = File::create(&se).with_context(|| format!("cannot write {}", se.display()))?;
                summary.write_se_csv(BufWriter::new(file)).context("writing standard errors")?;
            }
            None => eprintln!("note: standard errors are only written alongside an output file"),
        }
    }
    out.flush().context("flushing output")?;
    Ok(())
}

fn cmd_diff(input: &Path, run: &RunArgs, program: Option<&Path>, args: &ModelArgs) -> Outcome {
    let m = configured_model(input, args)?;
    // Both ensemble seeds come from the one seed flag.
    let seeds = replicate_seeds(run.seed, 2);
    let generated = match program {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            let parsed = parse_program(&text).map_err(|e| anyhow!("{}: {e}", p.display()))?;
            let loaded = LoadedProgram::load(&parsed).map_err(SimError::from)?;
            program_traces(&loaded, &spec(run, args.time, 200, 20, seeds[0]))?
        }
        None => model_traces(&m, Engine::Generated, &spec(run, args.time, 200, 20, seeds[0]), args.state_cap)?,
    };
    let direct = model_traces(&m, Engine::Direct, &spec(run, args.time, 200, 20, seeds[1]), args.state_cap)?;
    let a = summarize(&generated)?;
    let b = summarize(&direct)?;
    let mut report = diff(&a, &b, Z_THRESHOLD)?;
    annotate_closed_form(&mut report, &m, &a);
    print!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Semantic(format!(
            "engines disagree: max |z| = {:.3} exceeds {Z_THRESHOLD}",
            report.max_abs_z()
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { input } => cmd_validate(input),
        Command::Compile { input, output, model } => cmd_compile(input, output, model),
        Command::Simulate {
            input,
            engine,
            run,
            output,
            model,
        } => cmd_simulate(input, *engine, run, output.as_deref(), model),
        Command::Diff {
            input,
            run,
            program,
            model,
        } => cmd_diff(input, run, program.as_deref(), model),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Semantic(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Environment(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
