use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::json;

use spikedecode::bufcalc::{latency_vs_kernel_sweep, SweepRow};
use spikedecode::data::DEFAULT_BIN_MS;
use spikedecode::io::{
    load_spike_input, load_trajectory, save_spikes, save_trajectory, write_trajectory_csv,
};
use spikedecode::metrics::{footprint, r2_aligned, resource_report, summarize, ResourceReport};
use spikedecode::model::WeightFile;
use spikedecode::stream::{equivalence_report, run_stream, EquivalenceReport};
use spikedecode::synth::{gen_synth, SynthSpec};
use spikedecode::{NetworkConfig, NetworkModel, NumberFormat, Scalar, SpikeStream, Trajectory};

#[derive(Parser)]
#[command(
    name = "spikedecode",
    version,
    about = "Streaming spiking decoder toolkit"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(clap::Args)]
struct ModelArgs {
    /// Network configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Weight file matching the configuration.
    #[arg(long)]
    weights: PathBuf,
    /// Float precision of the engine.
    #[arg(long, value_enum, default_value = "f32")]
    precision: Precision,
}

#[derive(clap::Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Spike input: SNNS binary, or CSV when the extension is `.csv`.
    #[arg(long)]
    input: PathBuf,
    /// Trajectory CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Bin width for CSV input, in ms.
    #[arg(long, default_value_t = DEFAULT_BIN_MS)]
    bin_ms: f64,
    /// Also run the other inference mode and report the largest difference.
    #[arg(long)]
    report_equivalence: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Buffer plan, latency, execution rate and realtime verdict.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
        /// Also sweep first kernels 1..=N of a doubling stack with the
        /// config's layer count.
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Whole-sequence inference.
    RunOffline(RunArgs),
    /// Bin-by-bin streaming inference.
    RunStream {
        #[command(flatten)]
        run: RunArgs,
        /// Write every stream event as JSON lines.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Synthetic spikes with their ground-truth velocity.
    GenSynth {
        #[arg(long, default_value_t = 96)]
        channels: usize,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0.5)]
        rate_scale: f64,
        #[arg(long, default_value_t = 0.05)]
        smoothness: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BIN_MS)]
        bin_ms: f64,
        /// Spike output (SNNS binary).
        #[arg(long)]
        spikes: PathBuf,
        /// Ground-truth trajectory CSV.
        #[arg(long)]
        truth: PathBuf,
    },
    /// Resource report and accuracy per input file.
    Bench {
        #[command(flatten)]
        model: ModelArgs,
        /// Spike inputs.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Ground-truth trajectories, one per input, in the same order.
        #[arg(long, num_args = 1..)]
        truth: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BIN_MS)]
        bin_ms: f64,
        #[arg(long)]
        json: bool,
    },
    /// Convert a float weight file to the fixed-point formats the config declares.
    Quantize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write seeded random weights for a config.
    InitWeights {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Uniform range is +-gain/sqrt(fan_in).
        #[arg(long, default_value_t = 1.0)]
        gain: f64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match cli.command {
        Command::Analyze {
            config,
            json,
            sweep,
        } => analyze(&config, json, sweep),
        Command::RunOffline(args) => match args.model.precision {
            Precision::F32 => run::<f32>(&args, Mode::Offline, None),
            Precision::F64 => run::<f64>(&args, Mode::Offline, None),
        },
        Command::RunStream { run: args, events } => match args.model.precision {
            Precision::F32 => run::<f32>(&args, Mode::Stream, events.as_deref()),
            Precision::F64 => run::<f64>(&args, Mode::Stream, events.as_deref()),
        },
        Command::GenSynth {
            channels,
            steps,
            rate_scale,
            smoothness,
            seed,
            bin_ms,
            spikes,
            truth,
        } => {
            let spec = SynthSpec {
                channels,
                duration_steps: steps,
                rate_scale,
                smoothness,
                seed,
                bin_ms,
            };
            let (stream, traj) = gen_synth(&spec)?;
            save_spikes(&spikes, &stream)
                .with_context(|| format!("writing {}", spikes.display()))?;
            save_trajectory(&truth, &traj)
                .with_context(|| format!("writing {}", truth.display()))?;
            info!(
                "{} bins x {} channels, {} spikes",
                stream.len(),
                channels,
                stream.total_spikes()
            );
            Ok(())
        }
        Command::Bench {
            model,
            input,
            truth,
            bin_ms,
            json,
        } => match model.precision {
            Precision::F32 => bench::<f32>(&model, &input, &truth, bin_ms, json),
            Precision::F64 => bench::<f64>(&model, &input, &truth, bin_ms, json),
        },
        Command::Quantize {
            config,
            weights,
            output,
        } => quantize(&config, &weights, &output),
        Command::InitWeights {
            config,
            output,
            seed,
            gain,
        } => {
            let cfg = load_config(&config)?;
            let model = NetworkModel::<f32>::random(cfg, seed, gain)?;
            model
                .to_weight_file()
                .save(&output)
                .with_context(|| format!("writing {}", output.display()))?;
            info!("{} parameters written", model.parameter_count());
            Ok(())
        }
    }
}

fn load_config(path: &Path) -> Result<NetworkConfig> {
    NetworkConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn load_model<T: Scalar>(args: &ModelArgs) -> Result<NetworkModel<T>> {
    let cfg = load_config(&args.config)?;
    NetworkModel::load(cfg, &args.weights)
        .with_context(|| format!("loading weights {}", args.weights.display()))
}

fn load_input(path: &Path, bin_ms: f64, cfg: &NetworkConfig) -> Result<SpikeStream> {
    let spikes = load_spike_input(path, bin_ms)
        .with_context(|| format!("reading spikes {}", path.display()))?;
    if (spikes.bin_ms() - cfg.step_ms).abs() > 1e-6 {
        warn!(
            "{}: input bins are {} ms but the model steps {} ms",
            path.display(),
            spikes.bin_ms(),
            cfg.step_ms
        );
    }
    Ok(spikes)
}

fn analyze(config: &Path, json: bool, sweep: Option<usize>) -> Result<()> {
    let cfg = load_config(config)?;
    let plan = cfg.plan()?;
    let verdict = plan.realtime();
    let rows: Vec<SweepRow> = match sweep {
        Some(n) => latency_vs_kernel_sweep(
            &(1..=n).collect::<Vec<_>>(),
            plan.num_conv_layers(),
            plan.stack.step_ms,
        )?,
        None => Vec::new(),
    };
    let mut out = io::stdout().lock();
    if json {
        let report = json!({ "plan": plan, "verdict": verdict, "sweep": rows });
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        return Ok(());
    }
    writeln!(out, "conv kernels        {:?}", plan.stack.conv_kernels)?;
    writeln!(out, "pool kernels        {:?}", plan.stack.pool_kernels)?;
    writeln!(out, "receptive field R   {}", plan.receptive_field)?;
    writeln!(out, "interpolation r     {}", plan.interpolation_factor)?;
    writeln!(out, "keypoint buffers    {:?}", plan.b_keypoints)?;
    writeln!(out, "new-data buffers    {:?}", plan.b_new_data)?;
    writeln!(out, "new-data updates    {:?}", plan.b_new_data_update)?;
    writeln!(
        out,
        "latency             {} steps = {} ms",
        plan.latency_steps, plan.latency_ms
    )?;
    writeln!(out, "execution rate      {} Hz", plan.execution_rate_hz)?;
    if verdict.capable {
        writeln!(out, "verdict             capable")?;
    } else {
        writeln!(out, "verdict             not capable")?;
        for reason in &verdict.reasons {
            writeln!(out, "  - {reason}")?;
        }
    }
    if !rows.is_empty() {
        writeln!(out)?;
        writeln!(
            out,
            "{:>6} {:>8} {:>12} {:>10} {:>8}",
            "k1", "R", "latency_ms", "rate_hz", "realtime"
        )?;
        for row in rows {
            writeln!(
                out,
                "{:>6} {:>8} {:>12} {:>10} {:>8}",
                row.first_kernel,
                row.receptive_field,
                row.latency_ms,
                row.execution_rate_hz,
                row.realtime
            )?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Offline,
    Stream,
}

fn run<T: Scalar>(args: &RunArgs, mode: Mode, events: Option<&Path>) -> Result<()> {
    let model: NetworkModel<T> = load_model(&args.model)?;
    let spikes = load_input(&args.input, args.bin_ms, model.config())?;
    let trajectory: Trajectory<T> = match mode {
        Mode::Offline => model.forward(&spikes)?.trajectory,
        Mode::Stream => {
            let run = run_stream(&model, &spikes)?;
            let t = &run.timing;
            eprintln!(
                "push latency over {} bins: mean {:.2} us, p50 {:.2} us, p90 {:.2} us, p99 {:.2} us, max {:.2} us",
                t.pushes, t.mean_us, t.p50_us, t.p90_us, t.p99_us, t.max_us
            );
            if run.saturations > 0 {
                warn!("{} buffer values saturated", run.saturations);
            }
            if let Some(path) = events {
                let mut w = io::BufWriter::new(fs::File::create(path)?);
                for e in &run.events {
                    let payload = e.payload.map(|p| [p[0].as_f64(), p[1].as_f64()]);
                    let line = json!({ "kind": e.kind, "time_index": e.time_index, "t_ms": e.t_ms, "payload": payload });
                    serde_json::to_writer(&mut w, &line)?;
                    writeln!(w)?;
                }
                w.flush()?;
            }
            run.trajectory
        }
    };
    match &args.output {
        Some(path) => save_trajectory(path, &trajectory)
            .with_context(|| format!("writing {}", path.display()))?,
        None => write_trajectory_csv(io::stdout().lock(), &trajectory)?,
    }
    if args.report_equivalence {
        print_equivalence(&equivalence_report(&model, &spikes)?, args.output.is_none())?;
    }
    Ok(())
}

fn print_equivalence(rep: &EquivalenceReport, to_stderr: bool) -> Result<()> {
    let line = if rep.is_empty() {
        "equivalence: input shorter than the receptive field, nothing to compare".to_string()
    } else {
        format!(
            "equivalence: {} keypoints, {} samples, max abs diff {:e}, max rel diff {:e}, bit exact {}",
            rep.compared_keypoints, rep.compared_samples, rep.max_abs_diff, rep.max_rel_diff, rep.bit_exact
        )
    };
    if to_stderr {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
    Ok(())
}

fn bench<T: Scalar>(
    args: &ModelArgs,
    inputs: &[PathBuf],
    truths: &[PathBuf],
    bin_ms: f64,
    json: bool,
) -> Result<()> {
    if !truths.is_empty() && truths.len() != inputs.len() {
        bail!(
            "{} inputs but {} truth files; give one truth per input",
            inputs.len(),
            truths.len()
        );
    }
    let model: NetworkModel<T> = load_model(args)?;
    let mut rows: Vec<(String, ResourceReport, Option<f64>)> = Vec::new();
    for (i, path) in inputs.iter().enumerate() {
        let spikes = load_input(path, bin_ms, model.config())?;
        let report = resource_report(&model, &spikes)
            .with_context(|| format!("benchmarking {}", path.display()))?;
        let r2 = match truths.get(i) {
            Some(tp) => {
                let truth = load_trajectory(tp)
                    .with_context(|| format!("reading truth {}", tp.display()))?;
                let pred = model.forward(&spikes)?.trajectory.cast::<f64>();
                Some(
                    r2_aligned(&pred, &truth)
                        .with_context(|| format!("scoring {}", path.display()))?,
                )
            }
            None => None,
        };
        rows.push((path.display().to_string(), report, r2));
    }
    let r2s: Vec<f64> = rows.iter().filter_map(|r| r.2).collect();
    let summary = summarize(&r2s);

    let mut out = io::stdout().lock();
    if json {
        let files: Vec<_> = rows
            .iter()
            .map(|(name, rep, r2)| json!({ "input": name, "r2": r2, "report": rep }))
            .collect();
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&json!({ "files": files, "r2_summary": summary }))?
        )?;
        return Ok(());
    }
    writeln!(
        out,
        "{:<28} {:>10} {:>10} {:>12} {:>12} {:>8} {:>8} {:>8}",
        "input", "bytes", "nz_bytes", "macs/step", "acs/step", "conn_sp", "act_sp", "r2"
    )?;
    for (name, rep, r2) in &rows {
        writeln!(
            out,
            "{:<28} {:>10} {:>10} {:>12.1} {:>12.1} {:>8.4} {:>8.4} {:>8}",
            name,
            rep.footprint_bytes,
            rep.footprint_nonzero_bytes,
            rep.macs_per_inference_step,
            rep.acs_per_inference_step,
            rep.connection_sparsity,
            rep.activation_sparsity,
            r2.map_or("-".to_string(), |v| format!("{v:.4}"))
        )?;
    }
    if let Some(s) = summary {
        writeln!(
            out,
            "r2 over {} files: mean {:.4}, std {:.4}",
            s.n, s.mean, s.std
        )?;
    }
    Ok(())
}

fn quantize(config: &Path, weights: &Path, output: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let NumberFormat::Fixed(fmt) = cfg.weight_format else {
        bail!("{} declares float weights; set weight_format to a fixed-point format such as \"1-1-7\"", config.display());
    };
    let file = WeightFile::load(weights)
        .with_context(|| format!("loading weights {}", weights.display()))?;
    if !file.is_float() {
        bail!("{} is already fixed-point", weights.display());
    }
    let float_cfg = NetworkConfig {
        weight_format: NumberFormat::Float,
        buffer_format: NumberFormat::Float,
        ..cfg.clone()
    };
    let float = NetworkModel::<f64>::from_weight_file(float_cfg, &file)?;
    let (fixed, saturated) = float.quantize_weights(fmt);
    let fixed = fixed.with_buffer_format(cfg.buffer_format);
    fixed
        .to_weight_file()
        .save(output)
        .with_context(|| format!("writing {}", output.display()))?;

    let (before, after) = (footprint(&float), footprint(&fixed));
    println!(
        "weights    float32 -> {fmt}, buffers float32 -> {}",
        cfg.buffer_format
    );
    println!(
        "saturated  {} of {} parameters",
        saturated.count(),
        fixed.parameter_count()
    );
    println!(
        "footprint  {} -> {} bytes ({:+} bytes, {:.1}% of original)",
        before.total_bytes(),
        after.total_bytes(),
        after.total_bytes() as i64 - before.total_bytes() as i64,
        100.0 * after.total_bytes() as f64 / before.total_bytes() as f64
    );
    println!(
        "nonzero    {} -> {} bytes",
        before.nonzero_bytes(),
        after.nonzero_bytes()
    );
    Ok(())
}
