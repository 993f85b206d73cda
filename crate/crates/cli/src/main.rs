//! `qsync`: command-line driver for the spin-1 synchronization simulator.

mod config;

use clap::{Parser, Subcommand};
use qsync_core::experiments::{
    run_preset, write_results, Engine, ExperimentSpec, OutputFormat, Preset,
};
use qsync_core::spin1::build_trotter_step;
use qsync_core::verify::{run_all, run_criterion};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qsync",
    about = "Digital quantum simulation of a dissipative spin-1 limit-cycle oscillator \
             under an external synchronization signal",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset experiment and print or write its result table.
    Run {
        /// Preset name (see `qsync list-presets`).
        preset: String,
        /// Configuration file with `key = value` overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of stochastic trajectories.
        #[arg(long)]
        trajectories: Option<usize>,
        /// Random seed of the counter-based streams.
        #[arg(long)]
        seed: Option<u64>,
        /// Gate and readout noise: on or off.
        #[arg(long)]
        noise: Option<String>,
        /// Engine: trajectory, oracle, or both.
        #[arg(long)]
        engine: Option<String>,
        /// Jump-rate convention: oracle-consistent or paper-literal.
        #[arg(long)]
        convention: Option<String>,
        /// Signal compilation: controlled or uncontrolled.
        #[arg(long)]
        signal: Option<String>,
        /// Relaxation subcircuit: controlled-rotation or two-cnot.
        #[arg(long)]
        dissipation: Option<String>,
        /// Number of Trotter steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Cap at four steps and allocate fresh ancillas per step.
        #[arg(long)]
        hardware_faithful: bool,
        /// Output file; the table prints to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format: csv or json.
        #[arg(long)]
        format: Option<String>,
        /// Print the compiled single-step circuit before running.
        #[arg(long)]
        print_circuit: bool,
    },
    /// List the available presets.
    ListPresets,
    /// Run the verification suite (all criteria, or one by number).
    Verify {
        /// Criterion number (1-12); all when omitted.
        #[arg(long)]
        criterion: Option<usize>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> qsync_core::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::ListPresets => {
            for p in Preset::ALL {
                println!("{:<28} {}", p.name(), p.description());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { criterion } => {
            let reports = match criterion {
                Some(id) => vec![run_criterion(id)?],
                None => run_all()?,
            };
            let mut all = true;
            for r in &reports {
                println!("{}", r.line());
                all &= r.passed;
            }
            Ok(if all { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Run {
            preset,
            config,
            trajectories,
            seed,
            noise,
            engine,
            convention,
            signal,
            dissipation,
            steps,
            hardware_faithful,
            out,
            format,
            print_circuit,
        } => {
            let preset = Preset::from_name(&preset)?;
            let mut spec = ExperimentSpec::preset_defaults(preset);
            let mut out_path = out;
            let mut format_name = format;

            if let Some(path) = config {
                let file_output = config::apply_config_file(&mut spec, &path)?;
                if out_path.is_none() {
                    out_path = file_output.out.map(PathBuf::from);
                }
                if format_name.is_none() {
                    format_name = file_output.format;
                }
            }
            if let Some(n) = trajectories {
                spec.trajectories = n;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(v) = noise {
                spec.noise.enabled = config::parse_bool(&v)?;
            }
            if let Some(v) = engine {
                spec.engine = Engine::from_name(&v)?;
            }
            if let Some(v) = convention {
                spec.variant.jump_convention = config::parse_convention(&v)?;
            }
            if let Some(v) = signal {
                spec.variant.signal_style = config::parse_signal_style(&v)?;
            }
            if let Some(v) = dissipation {
                spec.variant.dissipation_style = config::parse_dissipation_style(&v)?;
            }
            if let Some(n) = steps {
                spec.n_steps = n;
            }
            if hardware_faithful {
                spec.hardware_faithful = true;
            }

            for warning in spec.params.validate(spec.variant.jump_convention)? {
                eprintln!("warning: {warning}");
            }
            if print_circuit {
                let circuit = build_trotter_step(&spec.params, &spec.variant, (2, 2))?;
                eprintln!("{circuit}");
            }

            let table = run_preset(&spec)?;
            match out_path {
                Some(path) => {
                    let fmt = match format_name.as_deref() {
                        Some(name) => OutputFormat::from_name(name)?,
                        None => match path.extension().and_then(|e| e.to_str()) {
                            Some("json") => OutputFormat::Json,
                            _ => OutputFormat::Csv,
                        },
                    };
                    write_results(&table, &path, fmt)?;
                    eprintln!(
                        "wrote {} rows x {} columns to {}",
                        table.n_rows(),
                        table.columns.len(),
                        path.display()
                    );
                }
                None => {
                    let fmt = match format_name.as_deref() {
                        Some(name) => OutputFormat::from_name(name)?,
                        None => OutputFormat::Csv,
                    };
                    match fmt {
                        OutputFormat::Csv => print!("{}", table.to_csv_string()),
                        OutputFormat::Json => println!("{}", table.to_json_string()?),
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
