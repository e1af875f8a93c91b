//! Command-line front end for the design flow: inspect coefficient tables
//! and demands, synthesize adder graphs, emit RTL, evaluate approximation
//! quality, and query the throughput model.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 internal invariant
//! violation (a bug, not a caller mistake).

use clap::{Args, Parser, Subcommand, ValueEnum};
use intra_mcm::filter_tables::{tap_demands, FilterId};
use intra_mcm::hdl_emit::{emit_all, Architecture, EmitConfig};
use intra_mcm::mcm_synth::{
    cost, demand_coefficients, fuse_parallel, normalize, synthesize, Heuristic,
};
use intra_mcm::report::{sweep_to_csv, sweep_to_json, throughput_to_csv, throughput_to_json};
use intra_mcm::{
    cost_sweep, error_eval, image_cases, load_builtin_tables, load_pgm, mode_decision_divergence,
    synthetic_cases, Error, EvalReport, IntraMode, OutputFormat, ThroughputQuery,
};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "intra-mcm", version, about = "Approximate angular intra prediction design flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FilterArg {
    Fc,
    Fg,
    Both,
}

impl FilterArg {
    fn filters(self) -> Vec<FilterId> {
        match self {
            FilterArg::Fc => vec![FilterId::Fc],
            FilterArg::Fg => vec![FilterId::Fg],
            FilterArg::Both => vec![FilterId::Fc, FilterId::Fg],
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HeuristicArg {
    Hcub,
    Csd,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the interpolation tables at a grouping factor.
    Tables {
        /// Grouping factor (1, 2, 4, 8, 16, 32); 1 is precise.
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, value_enum, default_value = "both")]
        filter: FilterArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the per-tap multiplier coefficient demands.
    Demands {
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Synthesize adder graphs for the per-tap demands.
    Mcm {
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, value_enum, default_value = "hcub")]
        heuristic: HeuristicArg,
        /// Fuse the demands of this many parallel samples per reference.
        #[arg(long, default_value_t = 1)]
        parallel: u32,
        /// Datapath input width in bits for the gate estimate.
        #[arg(long, default_value_t = 10)]
        bit_depth: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Emit the RTL file set and manifest for one implementation.
    Emit {
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// Use the multiplier/ROM baseline instead of MCM blocks.
        #[arg(long)]
        mult: bool,
        #[arg(long, default_value_t = 1)]
        parallel: u32,
        /// Sample width in bits.
        #[arg(long, default_value_t = 10)]
        bit_depth: u32,
        /// Output directory for the RTL files and manifest.
        #[arg(long, default_value = "rtl_out")]
        out: PathBuf,
    },
    /// Approximation error and mode-decision divergence on seeded blocks.
    Eval {
        /// Grouping factors to evaluate.
        #[arg(long, value_delimiter = ',', default_values_t = [2u32, 4, 8, 16, 32])]
        n: Vec<u32>,
        /// Mode indices to evaluate.
        #[arg(long, value_delimiter = ',', default_values_t = [2i32, 10, 18, 26, 34, 42, 50, 58, 66])]
        modes: Vec<i32>,
        #[arg(long, value_enum, default_value = "both")]
        filter: FilterArg,
        #[arg(long, default_value_t = 10)]
        bit_depth: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of synthetic block cases.
        #[arg(long, default_value_t = 100)]
        cases: usize,
        /// Block size in samples.
        #[arg(long, default_value_t = 8)]
        block_size: u32,
        /// Evaluate blocks of this binary PGM image instead of synthetic ones.
        #[arg(long)]
        image: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Cycle counts and required clock for a real-time target.
    Throughput {
        /// Samples per cycle.
        #[arg(long, default_value_t = 512)]
        parallel: u64,
        #[arg(long, default_value_t = 30)]
        fps: u64,
        #[arg(long, default_value_t = 1920)]
        frame_width: u64,
        #[arg(long, default_value_t = 1080)]
        frame_height: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Hardware-cost table across every implementation variant.
    Sweep {
        /// Parallelism points to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = [1u32, 4, 8, 16, 32, 64])]
        parallel: Vec<u32>,
        /// Datapath input width in bits.
        #[arg(long, default_value_t = 10)]
        bit_depth: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn deliver(output: &OutputArgs, text: String) -> intra_mcm::Result<()> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(Error::from),
        None => {
            // tolerate a closed pipe (e.g. piping into head)
            use std::io::Write;
            let _ = writeln!(std::io::stdout(), "{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> intra_mcm::Result<()> {
    match cli.command {
        Command::Tables { n, filter, output } => {
            let tables = load_builtin_tables().approximated(n)?;
            match output.format {
                FormatArg::Json => {
                    let picked: Vec<_> = filter
                        .filters()
                        .into_iter()
                        .map(|f| tables.table(f).clone())
                        .collect();
                    deliver(&output, serde_json::to_string_pretty(&picked)?)
                }
                FormatArg::Csv => {
                    let mut text = String::from("filter,k,f0,f1,f2,f3\n");
                    for f in filter.filters() {
                        let t = tables.table(f);
                        for (k, row) in t.rows.iter().enumerate() {
                            text.push_str(&format!(
                                "{},{k},{},{},{},{}\n",
                                f.name(),
                                row[0],
                                row[1],
                                row[2],
                                row[3]
                            ));
                        }
                    }
                    deliver(&output, text)
                }
            }
        }
        Command::Demands { n, output } => {
            let tables = load_builtin_tables().approximated(n)?;
            let demands = tap_demands(&tables);
            match output.format {
                FormatArg::Json => deliver(&output, serde_json::to_string_pretty(&demands)?),
                FormatArg::Csv => {
                    let mut text = String::from("tap,coefficients,bypass_ones,zero_dropped\n");
                    for d in &demands {
                        let coeffs = d
                            .coefficients
                            .iter()
                            .map(|c| c.to_string())
                            .collect::<Vec<_>>()
                            .join(" ");
                        text.push_str(&format!(
                            "{},{coeffs},{},{}\n",
                            d.tap, d.bypass_ones, d.zero_dropped
                        ));
                    }
                    deliver(&output, text)
                }
            }
        }
        Command::Mcm {
            n,
            heuristic,
            parallel,
            bit_depth,
            output,
        } => {
            let tables = load_builtin_tables().approximated(n)?;
            let demands = tap_demands(&tables);
            let heuristic = match heuristic {
                HeuristicArg::Hcub => Heuristic::Hcub,
                HeuristicArg::Csd => Heuristic::Csd,
            };
            let mut text = String::new();
            let work: Vec<(String, intra_mcm::TapDemand)> = if parallel > 1 {
                let fused = fuse_parallel(&demands)?;
                vec![(format!("fused x{parallel}"), fused)]
            } else {
                demands
                    .iter()
                    .map(|d| (format!("tap {}", d.tap), d.clone()))
                    .collect()
            };
            for (label, demand) in work {
                let set = normalize(&demand_coefficients(&demand));
                let graph = synthesize(&set.fundamentals(), heuristic)?;
                let report = cost(&graph, bit_depth, 6);
                text.push_str(&format!(
                    "# {label}: {} adders, depth {}, ~{} gate units\n",
                    report.adder_count, report.depth, report.gate_estimate
                ));
                text.push_str(&graph.dump());
                text.push('\n');
            }
            deliver(&output, text)
        }
        Command::Emit {
            n,
            mult,
            parallel,
            bit_depth,
            out,
        } => {
            let arch = if mult {
                Architecture::Multiplier
            } else {
                Architecture::Mcm { n }
            };
            let config = EmitConfig::new(bit_depth, arch.impl_name(), arch, parallel)?;
            let tables = load_builtin_tables();
            let set = emit_all(&config, &tables)?;
            fs::create_dir_all(&out)?;
            for f in &set.files {
                fs::write(out.join(&f.name), &f.text)?;
            }
            fs::write(
                out.join("manifest.json"),
                serde_json::to_string_pretty(&set.manifest)?,
            )?;
            eprintln!(
                "wrote {} RTL files and manifest.json to {}",
                set.files.len(),
                out.display()
            );
            Ok(())
        }
        Command::Eval {
            n,
            modes,
            filter,
            bit_depth,
            seed,
            cases,
            block_size,
            image,
            output,
        } => {
            let mode_list = modes
                .iter()
                .map(|&m| IntraMode::new(m))
                .collect::<intra_mcm::Result<Vec<_>>>()?;
            let block_cases = match &image {
                Some(path) => image_cases(&load_pgm(fs::File::open(path)?, bit_depth)?, block_size)?,
                None => synthetic_cases(cases, block_size, bit_depth, seed)?,
            };
            let mut report = EvalReport {
                seed,
                bit_depth,
                block_size,
                case_count: block_cases.len() as u64,
                modes,
                errors: Vec::new(),
                divergences: Vec::new(),
            };
            for &grouping in &n {
                report.errors.push(error_eval(
                    &block_cases,
                    &mode_list,
                    &filter.filters(),
                    grouping,
                    bit_depth,
                )?);
                report.divergences.push(mode_decision_divergence(
                    &block_cases,
                    &mode_list,
                    grouping,
                    bit_depth,
                )?);
            }
            let text = match output.format {
                FormatArg::Json => report.to_json()?,
                FormatArg::Csv => report.to_csv()?,
            };
            deliver(&output, text)
        }
        Command::Throughput {
            parallel,
            fps,
            frame_width,
            frame_height,
            output,
        } => {
            let query = ThroughputQuery {
                parallelism: parallel,
                fps,
                frame_width,
                frame_height,
                ..Default::default()
            };
            let report = query.report()?;
            let text = match output.format {
                FormatArg::Json => throughput_to_json(&report)?,
                FormatArg::Csv => throughput_to_csv(&report)?,
            };
            deliver(&output, text)
        }
        Command::Sweep {
            parallel,
            bit_depth,
            output,
        } => {
            let rows = cost_sweep(bit_depth, &parallel)?;
            let text = match output.format {
                FormatArg::Json => sweep_to_json(&rows)?,
                FormatArg::Csv => sweep_to_csv(&rows)?,
            };
            deliver(&output, text)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Invariant(_) | Error::MissingFundamental(_))) => {
            eprintln!("internal error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
