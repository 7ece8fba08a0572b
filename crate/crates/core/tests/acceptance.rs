//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::process::{Command, ExitCode};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spikedecode::bufcalc::{receptive_field_and_updates, BufferPlan, StackSpec};
use spikedecode::fxp::{dequantize, quantize, FixedPointFormat};
use spikedecode::metrics::{count_ops, r2_score};
use spikedecode::model::{interpolate_linear, ReadoutMode};
use spikedecode::stream::{equivalence_report, EventKind, StreamState};
use spikedecode::synth::{gen_synth, SynthSpec};
use spikedecode::{NetworkConfig, NetworkModel, Scalar, SpikeStream, Trajectory};

use common::{fmt, random_config, random_spikes};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn config_path(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

// 1 ------------------------------------------------------------------------

fn buffer_calculus_reproduction() -> Outcome {
    let cases = [
        (vec![9, 18], 46, 96.0, 62.5, true, "rtnet.toml"),
        (vec![31, 62, 124], 652, 1308.0, 31.25, false, "bmnet.toml"),
    ];
    for (kernels, r, latency, rate, capable, file) in cases {
        let n = kernels.len();
        let stack = StackSpec::new(kernels.clone(), vec![1; n], vec![2; n], vec![2; n], 4.0)
            .map_err(|e| e.to_string())?;
        let plan = BufferPlan::new(&stack).map_err(|e| e.to_string())?;
        let got = (
            plan.receptive_field,
            plan.latency_ms,
            plan.execution_rate_hz,
            plan.realtime().capable,
        );
        ensure(got == (r, latency, rate, capable), || {
            format!("{kernels:?}: library reports {got:?}")
        })?;

        let out = Command::new(env!("CARGO_BIN_EXE_spikedecode"))
            .args(["analyze", "--json", "--config", &config_path(file)])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!(
                "analyze {file} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            )
        })?;
        let json: serde_json::Value =
            serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        let cli = (
            json["plan"]["receptive_field"].as_u64(),
            json["plan"]["latency_ms"].as_f64(),
            json["plan"]["execution_rate_hz"].as_f64(),
            json["verdict"]["capable"].as_bool(),
        );
        ensure(
            cli == (Some(r as u64), Some(latency), Some(rate), Some(capable)),
            || format!("CLI on {file} reports {cli:?}"),
        )?;
    }
    Ok(
        "R 46 / 96 ms / 62.5 Hz capable; R 652 / 1308 ms / 31.25 Hz not capable (library and CLI)"
            .into(),
    )
}

// 2 ------------------------------------------------------------------------

/// Input indices each layer must see so that the final layer can emit
/// `outputs`, listed input layer first. Pure window bookkeeping.
fn needed_indices(layers: &[(usize, usize)], outputs: &[usize]) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = outputs.to_vec();
    let mut per_layer = Vec::new();
    for &(k, s) in layers.iter().rev() {
        let mut input: Vec<usize> = current.iter().flat_map(|&o| o * s..o * s + k).collect();
        input.sort_unstable();
        input.dedup();
        per_layer.push(input.clone());
        current = input;
    }
    per_layer.reverse();
    per_layer
}

/// Smallest input length that yields one output, by direct search.
fn min_input_len(layers: &[(usize, usize)]) -> usize {
    (1..)
        .find(|&t| {
            let mut len = t;
            for &(k, s) in layers {
                if len < k {
                    return false;
                }
                len = (len - k) / s + 1;
            }
            true
        })
        .expect("some length works")
}

fn random_stack(rng: &mut impl Rng, streamable: bool) -> StackSpec {
    let n = rng.random_range(1..=4);
    let conv_kernels = (0..n).map(|_| rng.random_range(1..=32)).collect();
    let (conv_strides, pool_kernels, pool_strides) = if streamable {
        let s: Vec<usize> = (0..n).map(|_| rng.random_range(1..=4)).collect();
        (vec![1; n], s.clone(), s)
    } else {
        (
            (0..n).map(|_| rng.random_range(1..=4)).collect(),
            (0..n).map(|_| rng.random_range(1..=4)).collect(),
            (0..n).map(|_| rng.random_range(1..=4)).collect(),
        )
    };
    StackSpec::new(conv_kernels, conv_strides, pool_kernels, pool_strides, 4.0).unwrap()
}

fn algorithm_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for _ in 0..200 {
        let stack = random_stack(&mut rng, false);
        let layers: Vec<_> = stack.layers().collect();
        let r = receptive_field_and_updates(&stack).receptive_field;
        let sim = needed_indices(&layers, &[0]);
        let span = sim[0].last().unwrap() + 1;
        let search = min_input_len(&layers);
        ensure(r == span && r == search, || {
            format!("{stack:?}: R {r}, window simulation {span}, length search {search}")
        })?;
        checked += 1;
    }
    for _ in 0..200 {
        let stack = random_stack(&mut rng, true);
        let layers: Vec<_> = stack.layers().collect();
        let plan = BufferPlan::new(&stack).map_err(|e| format!("{stack:?}: {e}"))?;
        let first = needed_indices(&layers, &[0]);
        let second = needed_indices(&layers, &[1]);
        ensure(
            plan.receptive_field == first[0].len()
                && first[0].len() == first[0].last().unwrap() + 1,
            || {
                format!(
                    "{stack:?}: R {} vs simulated {}",
                    plan.receptive_field,
                    first[0].len()
                )
            },
        )?;
        let sim_keypoints: Vec<usize> = first.iter().map(Vec::len).collect();
        ensure(plan.b_keypoints == sim_keypoints, || {
            format!(
                "{stack:?}: keypoint buffers {:?}, simulated {sim_keypoints:?}",
                plan.b_keypoints
            )
        })?;

        // Fresh columns per layer for the next keypoint, and the window
        // needed to produce them.
        let fresh: Vec<BTreeSet<usize>> = first
            .iter()
            .zip(&second)
            .map(|(a, b)| b.iter().copied().filter(|i| !a.contains(i)).collect())
            .collect();
        let sim_update: Vec<usize> = fresh.iter().map(BTreeSet::len).collect();
        ensure(plan.b_new_data_update == sim_update, || {
            format!(
                "{stack:?}: update sizes {:?}, simulated {sim_update:?}",
                plan.b_new_data_update
            )
        })?;
        for (l, &(k, s)) in layers.iter().enumerate() {
            let outputs: Vec<usize> = match fresh.get(l + 1) {
                Some(next) => next.iter().copied().collect(),
                None => vec![1],
            };
            let lo = outputs.iter().min().unwrap() * s;
            let hi = outputs.iter().max().unwrap() * s + k;
            ensure(plan.b_new_data[l] == hi - lo, || {
                format!(
                    "{stack:?}: new-data buffer {l} is {}, simulated {}",
                    plan.b_new_data[l],
                    hi - lo
                )
            })?;
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} random stacks match the sliding-window simulator"
    ))
}

// 3 ------------------------------------------------------------------------

fn streaming_offline_pair<T: Scalar>(
    rng: &mut ChaCha8Rng,
    quantized: bool,
) -> Result<(f64, bool, usize), String> {
    let cfg = random_config(rng, quantized);
    let seed = rng.random();
    let model = NetworkModel::<T>::random(cfg.clone(), seed, rng.random_range(0.5..4.0))
        .map_err(|e| e.to_string())?;
    let plan = model.plan();
    let len = plan.receptive_field
        + 3 * plan.interpolation_factor
        + rng.random_range(0..3 * plan.interpolation_factor);
    let max = rng.random_range(0..=3);
    let spikes = random_spikes(rng, cfg.input_channels, len, max);
    let rep = equivalence_report(&model, &spikes).map_err(|e| e.to_string())?;
    ensure(rep.compared_keypoints >= 4, || {
        format!("only {} keypoints compared", rep.compared_keypoints)
    })?;
    Ok((rep.max_rel_diff, rep.bit_exact, rep.compared_samples))
}

fn streaming_equals_offline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut pairs, mut samples, mut worst_float) = (0, 0, 0.0f64);
    for i in 0..100 {
        for quantized in [true, false] {
            let (rel, exact, n) = if i % 2 == 0 {
                streaming_offline_pair::<f64>(&mut rng, quantized)?
            } else {
                streaming_offline_pair::<f32>(&mut rng, quantized)?
            };
            if quantized {
                ensure(exact, || {
                    format!("quantized pair {i} differs (max rel {rel:e})")
                })?;
            } else {
                ensure(rel <= 1e-6, || {
                    format!("float pair {i} differs by {rel:e} relative")
                })?;
                worst_float = worst_float.max(rel);
            }
            pairs += 1;
            samples += n;
        }
    }
    Ok(format!(
        "{pairs} pairs ({samples} samples); quantized bit-exact, float max rel diff {worst_float:e}"
    ))
}

// 4 ------------------------------------------------------------------------

fn cadence_for(cfg: NetworkConfig, seed: u64) -> Result<usize, String> {
    let model = NetworkModel::<f32>::random(cfg.clone(), seed, 2.0).map_err(|e| e.to_string())?;
    let plan = model.plan();
    let (r, step) = (plan.receptive_field, plan.stack.step_ms);
    let period = plan.b_new_data_update[0];
    let latency = r / 2 + 1;
    ensure(plan.latency_steps == latency, || {
        format!("latency {} != floor(R/2)+1", plan.latency_steps)
    })?;

    let (spikes, _) = gen_synth(&SynthSpec {
        channels: cfg.input_channels,
        duration_steps: r + 7 * period - 1,
        rate_scale: 0.8,
        smoothness: 0.1,
        seed,
        bin_ms: step,
    })
    .map_err(|e| e.to_string())?;
    let mut state = StreamState::new(&model).map_err(|e| e.to_string())?;
    let mut emitted = Vec::new();
    for t in 0..spikes.len() {
        for e in state.push_bin(spikes.bin(t)).map_err(|e| e.to_string())? {
            match e.kind {
                EventKind::Keypoint => {
                    let i = emitted.len();
                    let completed_ms = (t + 1) as f64 * step;
                    ensure(completed_ms - e.t_ms == latency as f64 * step, || {
                        format!("keypoint {i} at bin {t} stamped {} ms", e.t_ms)
                    })?;
                    ensure(e.t_ms == plan.keypoint_time_ms(i), || {
                        format!("keypoint {i} timestamp mismatch")
                    })?;
                    emitted.push((t + 1, e.t_ms));
                }
                EventKind::VelocitySample => {
                    let i = emitted.len() - 1;
                    if e.time_index == (i + 1) * plan.interpolation_factor - 1 {
                        ensure(e.t_ms == emitted[i].1, || {
                            format!("sample for keypoint {i} is not aligned")
                        })?;
                    }
                }
                EventKind::Warmup => ensure(t + 1 < r, || format!("warmup event after bin {t}"))?,
            }
        }
    }
    let expected: Vec<usize> = (0..=6).map(|i| r + i * period).collect();
    let bins: Vec<usize> = emitted.iter().map(|e| e.0).collect();
    ensure(bins == expected, || {
        format!("R {r}: keypoints after bins {bins:?}, expected {expected:?}")
    })?;
    Ok(emitted.len())
}

fn emission_cadence_and_latency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cfgs = vec![NetworkConfig::rtnet(8), NetworkConfig::bmnet(4)];
    cfgs[1].conv.iter_mut().for_each(|c| c.out_channels = 3);
    cfgs.extend((0..20).map(|_| random_config(&mut rng, false)));
    let mut keypoints = 0;
    for (i, cfg) in cfgs.into_iter().enumerate() {
        keypoints += cadence_for(cfg, i as u64)?;
    }
    Ok(format!("22 stacks, {keypoints} keypoints: first after bin R, then every update period, stamped R/2+1 steps back"))
}

// 5 ------------------------------------------------------------------------

fn incrementality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut stacks = 0;
    for _ in 0..25 {
        let quantized = rng.random_bool(0.5);
        let cfg = random_config(&mut rng, quantized);
        let model = NetworkModel::<f64>::random(cfg.clone(), rng.random(), 1.0)
            .map_err(|e| e.to_string())?;
        let plan = model.plan();
        let extra = rng.random_range(1..6);
        let spikes = random_spikes(
            &mut rng,
            cfg.input_channels,
            plan.receptive_field + extra * plan.interpolation_factor,
            2,
        );

        let mut first = 0u64;
        let mut later = 0u64;
        let mut naive = 0u64;
        for (l, conv) in model.conv_layers().iter().enumerate() {
            let per_column = (conv.in_channels * conv.out_channels * conv.kernel) as u64;
            ensure(
                plan.b_new_data[2 * l] - conv.kernel + 1 == plan.b_new_data_update[2 * l],
                || format!("layer {l}: new-data window does not match its update"),
            )?;
            first += (plan.b_keypoints[2 * l] - conv.kernel + 1) as u64 * per_column;
            later += plan.b_new_data_update[2 * l] as u64 * per_column;
            naive += (plan.b_keypoints[2 * l] - conv.kernel + 1) as u64 * per_column;
        }

        let mut state = StreamState::new(&model).map_err(|e| e.to_string())?;
        state.push_stream(&spikes).map_err(|e| e.to_string())?;
        let counts = &state.counters().conv_multiplies_per_keypoint;
        ensure(counts.len() == extra + 1, || {
            format!("{} keypoints, expected {}", counts.len(), extra + 1)
        })?;
        ensure(counts[0] == first, || {
            format!(
                "first keypoint used {} multiplies, expected {first}",
                counts[0]
            )
        })?;
        for (i, &c) in counts.iter().enumerate().skip(1) {
            ensure(c == later, || {
                format!("keypoint {i} used {c} multiplies, expected {later}")
            })?;
            ensure(c <= naive, || {
                format!("keypoint {i} used more than a full recompute")
            })?;
        }
        let offline = model
            .forward(&spikes)
            .map_err(|e| e.to_string())?
            .conv_multiplies;
        ensure(state.counters().conv_multiplies == offline, || {
            format!(
                "stream total {} vs offline {offline}",
                state.counters().conv_multiplies
            )
        })?;
        stacks += 1;
    }
    Ok(format!("{stacks} stacks: per-keypoint conv multiplies equal the new-data counts and the offline total"))
}

// 6 ------------------------------------------------------------------------

fn interpolation_error() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for r in [4usize, 8] {
        for _ in 0..50 {
            // Sum of sinusoids with at least 10 keypoints per period.
            let components: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| {
                    let period = rng.random_range(10.0..40.0) * r as f64;
                    (
                        rng.random_range(0.2..1.0),
                        period,
                        rng.random_range(0.0..TAU),
                    )
                })
                .collect();
            let signal = |t: f64| -> f64 {
                components
                    .iter()
                    .map(|(a, p, ph)| a * (TAU * t / p + ph).sin())
                    .sum()
            };
            let keypoints = 60;
            let kps: Vec<[f64; 2]> = (0..keypoints)
                .map(|k| {
                    let t = (k * r + r - 1) as f64;
                    [signal(t), signal(t + 0.37 * r as f64)]
                })
                .collect();
            let recon = interpolate_linear(&kps, r);
            let (mut err, mut power) = (0.0, 0.0);
            // Skip the leading hold segment, which has no left neighbour.
            for (j, s) in recon.iter().enumerate().skip(r) {
                let t = j as f64;
                let truth = [signal(t), signal(t + 0.37 * r as f64)];
                for d in 0..2 {
                    err += (s[d] - truth[d]).powi(2);
                    power += truth[d].powi(2);
                }
            }
            let rel = (err / power).sqrt();
            ensure(rel <= 0.05, || {
                format!("r = {r}: relative RMS error {rel:.4}")
            })?;
            worst = worst.max(rel);
        }
    }
    Ok(format!(
        "100 band-limited signals at r = 4 and 8: worst relative RMS error {:.2}%",
        100.0 * worst
    ))
}

// 7 ------------------------------------------------------------------------

fn quantization_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let formats = [
        FixedPointFormat::Q1_7,
        FixedPointFormat::Q1_4,
        fmt(3, 12),
        fmt(0, 15),
        fmt(8, 8),
    ];
    for f in formats {
        for _ in 0..100_000 {
            let x = rng.random_range(f.min_value()..=f.max_value());
            let q = quantize(x, f).map_err(|e| e.to_string())?;
            let err = (dequantize(q) - x).abs();
            let bound = 2f64.powi(-(f.fraction_bits() as i32) - 1);
            ensure(err <= bound, || {
                format!("{f}: |q({x}) - x| = {err:e} > {bound:e}")
            })?;
        }
    }

    let q14 = FixedPointFormat::Q1_4;
    let values: Vec<f64> = (q14.min_raw()..=q14.max_raw())
        .map(|r| q14.value_of(r))
        .collect();
    ensure(values.len() == 64, || {
        format!("Q1.4 has {} values", values.len())
    })?;
    for &v in &values {
        let once = dequantize(quantize(v, q14).map_err(|e| e.to_string())?);
        let twice = dequantize(quantize(once, q14).map_err(|e| e.to_string())?);
        ensure(once == v && twice == once, || {
            format!("Q1.4 value {v} is not a fixed point")
        })?;
    }
    // Monotonicity over every representable value, every midpoint between
    // neighbours, and a margin beyond the range.
    let step = q14.step();
    let mut probes: Vec<f64> = Vec::new();
    for &v in &values {
        probes.extend([v - step / 2.0, v - step / 4.0, v, v + step / 4.0]);
    }
    probes.extend([-5.0, -2.5, 2.5, 5.0]);
    probes.sort_by(f64::total_cmp);
    let mapped: Vec<f64> = probes
        .iter()
        .map(|&x| quantize(x, q14).map(dequantize))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    for w in mapped.windows(2) {
        ensure(w[0] <= w[1], || {
            format!("Q1.4 quantization decreases: {} then {}", w[0], w[1])
        })?;
    }
    ensure(
        *mapped.first().unwrap() == -2.0 && *mapped.last().unwrap() == 2.0 - step,
        || "Q1.4 does not saturate to its range".into(),
    )?;
    Ok("round-trip bound over 5 x 10^5 samples; Q1.4 idempotent and monotone exhaustively".into())
}

// 8 ------------------------------------------------------------------------

const TEACHER_KERNEL: usize = 8;
const TEACHER_CHANNELS: usize = 8;

/// One conv layer averaging the channel sum (and the even-channel sum) over
/// eight bins, 2/2 pooling, a LIF layer that never fires and passes its
/// membrane through, and a membrane readout.
fn teacher() -> NetworkModel<f64> {
    let mut cfg = NetworkConfig::doubling(TEACHER_CHANNELS, &[2], TEACHER_KERNEL, &[2]);
    cfg.lif_params.beta = 0.0;
    cfg.lif_params.threshold = 1e9;
    cfg.readout.beta = 0.0;
    cfg.readout.mode = ReadoutMode::Membrane;
    let mut model = NetworkModel::zeros(cfg).unwrap();
    let conv = &model.conv_layers()[0];
    let mut w = vec![0.0; conv.weight.len()];
    for i in 0..TEACHER_CHANNELS {
        for k in 0..TEACHER_KERNEL {
            w[conv.weight_index(0, i, k)] = 1.0 / TEACHER_KERNEL as f64;
            if i % 2 == 0 {
                w[conv.weight_index(1, i, k)] = 1.0 / TEACHER_KERNEL as f64;
            }
        }
    }
    model.set_parameter("conv0.weight", w).unwrap();
    model
        .set_parameter("lif0.w_in", vec![1.0, 0.0, 0.0, 1.0])
        .unwrap();
    model
        .set_parameter("readout.weight", vec![1.0, 0.0, 0.0, 1.0])
        .unwrap();
    model
}

/// The teacher's computation written out directly.
fn teacher_target(spikes: &SpikeStream, plan: &BufferPlan) -> Trajectory<f64> {
    let r = plan.interpolation_factor;
    let keypoints = plan.keypoints_for(spikes.len());
    let avg = |start: usize, even_only: bool| -> f64 {
        let mut sum = 0.0;
        for t in start..start + TEACHER_KERNEL {
            for (c, &n) in spikes.bin(t).iter().enumerate() {
                if !even_only || c % 2 == 0 {
                    sum += n as f64;
                }
            }
        }
        sum / TEACHER_KERNEL as f64
    };
    let f: Vec<[f64; 2]> = (0..keypoints)
        .map(|i| {
            let pooled = |even| (avg(2 * i, even) + avg(2 * i + 1, even)) / 2.0;
            [pooled(false), pooled(true)]
        })
        .collect();
    let mut samples = Vec::new();
    for i in 0..keypoints {
        for q in 0..r {
            let prev = if i == 0 { f[0] } else { f[i - 1] };
            let a = (q + 1) as f64 / r as f64;
            samples.push([
                prev[0] + (f[i][0] - prev[0]) * a,
                prev[1] + (f[i][1] - prev[1]) * a,
            ]);
        }
    }
    Trajectory::new(plan.trajectory_start_ms(), plan.stack.step_ms, samples)
}

fn metrics_sanity() -> Outcome {
    let model = teacher();
    let (spikes, _) = gen_synth(&SynthSpec {
        channels: TEACHER_CHANNELS,
        duration_steps: 800,
        rate_scale: 1.0,
        smoothness: 0.05,
        seed: 8,
        bin_ms: 4.0,
    })
    .map_err(|e| e.to_string())?;
    let target = teacher_target(&spikes, model.plan());
    let pred = model
        .forward(&spikes)
        .map_err(|e| e.to_string())?
        .trajectory;
    let r2 = r2_score(&pred, &target).map_err(|e| e.to_string())?;
    ensure(r2 >= 0.99, || format!("teacher R² {r2}"))?;

    let zero = model
        .map_parameters(|_, _| 0.0)
        .map_err(|e| e.to_string())?;
    let ops = count_ops(&zero, &spikes).map_err(|e| e.to_string())?;
    ensure((ops.macs(), ops.acs()) == (0, 0), || {
        format!("zero model counts {} MACs, {} ACs", ops.macs(), ops.acs())
    })?;
    let zero_pred = zero.forward(&spikes).map_err(|e| e.to_string())?.trajectory;
    let zero_r2 = r2_score(&zero_pred, &target).map_err(|e| e.to_string())?;
    ensure(zero_r2 <= 0.0, || format!("zero model R² {zero_r2}"))?;
    Ok(format!(
        "teacher R² {r2:.6}; zeroed model: 0 MACs, 0 ACs, R² {zero_r2:.3}"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("buffer-calculus reproduction", buffer_calculus_reproduction),
        ("algorithm oracle equivalence", algorithm_oracle_equivalence),
        ("streaming equals offline", streaming_equals_offline),
        ("emission cadence and latency", emission_cadence_and_latency),
        ("incrementality", incrementality),
        ("interpolation error", interpolation_error),
        ("quantization properties", quantization_properties),
        ("metrics sanity", metrics_sanity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
