//! Command-line front end: simulation, transpilation, calibration
//! experiments, benchmark suites and analytic reports, all emitting CSV
//! and JSON artifacts plus a run manifest.

use clap::{Args, Parser, Subcommand};
use starq_core::benchmark::{
    self, fit_decay, mqc_ghz_fidelity, qscore, MqcOptions, QScoreOptions, RbConfig, RbNoise,
};
use starq_core::calib;
use starq_core::device::{load_device_spec, DeviceParams};
use starq_core::gates::JCPhases;
use starq_core::hamiltonian::{self, effective_params_at, zz_landscape, TWO_PI};
use starq_core::noise::{
    ghz_budget, ghz_exponential_model, limit_cz, limit_move, BudgetMode, GhzBudgetOptions,
    LimitOptions,
};
use starq_core::report::{write_csv, write_json, RunManifest};
use starq_core::sim::{
    apply_readout_confusion, assignment_rows, outcome_distribution, sample_from_distribution,
    Executor, NoiseSpec, SimOptions,
};
use starq_core::transpiler::{
    lower_cz, lower_cz_no_reuse, resolve_phases, schedule, validate, Circuit, PhaseMode,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "starq", version, about = "Star-topology qubit-resonator QPU toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Device description: a JSON file path or `preset:paper-qpu`.
    #[arg(long, global = true, default_value = "preset:paper-qpu")]
    device: String,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Stochastic trajectories per ensemble.
    #[arg(long, global = true, default_value_t = 4096)]
    trajectories: usize,
    #[arg(long, global = true, default_value_t = 1024)]
    shots: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "starq-out")]
    out: PathBuf,
    /// Output format of tabulated data.
    #[arg(long, global = true, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run a native circuit file and report measurement statistics.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Circuit file (.qc text format).
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        /// Apply device T1/T2 trajectory noise.
        #[arg(long)]
        noisy: bool,
        /// Track qubit-resonator frame rotation.
        #[arg(long)]
        frame_tracking: bool,
    },
    /// Lower a logical circuit to the native star gate set.
    Transpile {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        /// Output circuit path (defaults to <in>.native.qc).
        #[arg(long)]
        out_circuit: Option<PathBuf>,
        /// Gate-count report path.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Disable the MOVE-reuse pass.
        #[arg(long)]
        no_reuse: bool,
        /// Phase resolution mode.
        #[arg(long, default_value = "fixed", value_parser = ["fixed", "tracking"])]
        resolve: String,
    },
    /// Calibration experiments.
    Calib {
        #[command(flatten)]
        common: Common,
        #[command(subcommand)]
        experiment: CalibCmd,
    },
    /// Benchmark suites.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(subcommand)]
        suite: BenchCmd,
    },
    /// Analytic reports from the closed forms.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[command(subcommand)]
        what: AnalyzeCmd,
    },
}

#[derive(Subcommand)]
enum CalibCmd {
    /// Population chevron of the MOVE or CZ gate point.
    Chevron {
        #[arg(long, default_value = "QB2")]
        qubit: String,
        #[arg(long, default_value = "move", value_parser = ["move", "cz"])]
        kind: String,
        /// Half-width of the frequency windows (GHz).
        #[arg(long, default_value_t = 0.03)]
        span: f64,
        #[arg(long, default_value_t = 31)]
        points: usize,
    },
    /// Fine calibration of the MOVE operating point.
    MoveFine {
        #[arg(long, default_value = "QB2")]
        qubit: String,
        #[arg(long, default_value_t = 4)]
        n_moves: usize,
    },
    /// Virtual-Z calibration of the MOVE pair phase.
    MoveVz {
        #[arg(long, default_value = "QB2")]
        qubit: String,
    },
    /// CZ conditional-phase and VZ-correction extraction.
    CzPhase {
        #[arg(long, default_value = "QB1")]
        cz_qubit: String,
        #[arg(long, default_value = "QB2")]
        move_qubit: String,
    },
    /// Resonator T1 through MOVE-delay-MOVE.
    CrT1 {
        #[arg(long, default_value = "QB2")]
        qubit: String,
    },
    /// Resonator Ramsey: T2* and oscillation frequency.
    CrRamsey {
        #[arg(long, default_value = "QB2")]
        qubit: String,
        /// Virtual detuning (MHz).
        #[arg(long, default_value_t = 280.0)]
        virtual_detuning: f64,
        /// Physical qubit-resonator detuning (MHz).
        #[arg(long, default_value_t = 281.0)]
        detuning: f64,
    },
    /// Resonator frequency via the sawtooth fit over virtual detunings.
    CrFrequency {
        #[arg(long, default_value = "QB2")]
        qubit: String,
        #[arg(long, default_value_t = 281.0)]
        detuning: f64,
    },
    /// Climb the JC ladder with repeated excite-and-move steps.
    JcLadder {
        #[arg(long, default_value = "QB3")]
        qubit: String,
        #[arg(long, default_value = "QB2")]
        spectator: String,
        #[arg(long, default_value_t = 2)]
        steps: usize,
    },
    /// Populated-resonator Ramsey and two-photon phase extraction.
    PopulatedRamsey {
        #[arg(long, default_value = "QB3")]
        load_qubit: String,
        #[arg(long, default_value = "QB2")]
        probe_qubit: String,
        /// Detuning between the probe qubit and the resonator (MHz).
        #[arg(long, default_value_t = 281.0)]
        detuning: f64,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Single-qubit reference randomized benchmarking.
    Rb {
        #[arg(long, default_value = "QB2")]
        qubit: String,
        #[arg(long)]
        noisy: bool,
        /// Per-Clifford depolarizing error probability (overrides --noisy).
        #[arg(long)]
        depolarizing: Option<f64>,
    },
    /// Interleaved double-MOVE randomized benchmarking.
    IrbMove {
        #[arg(long, default_value = "QB2")]
        qubit: String,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        /// Exchange-angle miscalibration epsilon (theta = pi(1+eps)).
        #[arg(long, default_value_t = 0.0)]
        theta_error: f64,
        #[arg(long)]
        noisy: bool,
    },
    /// MOVE-lCZ-MOVE interleaved two-qubit randomized benchmarking.
    IrbCz {
        #[arg(long, default_value = "QB2")]
        move_qubit: String,
        #[arg(long, default_value = "QB1")]
        cz_qubit: String,
        #[arg(long, default_value_t = 3)]
        l_max: usize,
        #[arg(long)]
        noisy: bool,
    },
    /// GHZ state fidelity via multiple quantum coherences.
    Ghz {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value = "QB3")]
        move_qubit: String,
        #[arg(long)]
        mitigate: bool,
        /// Run noiseless (no decoherence, no readout errors).
        #[arg(long)]
        ideal: bool,
    },
    /// Q-score at problem size n.
    Qscore {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 60)]
        graphs: usize,
        #[arg(long)]
        noisy: bool,
        /// Use the virtual-node technique (n = qubits + 1).
        #[arg(long)]
        virtual_node: bool,
    },
    /// TFIM ground-state energy with zero-noise extrapolation.
    Zne {
        /// Two-site gate Pauli-error probability at lambda = 1.
        #[arg(long, default_value_t = 8.3e-3)]
        p2: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        lambdas: Vec<usize>,
    },
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Schrieffer-Wolff effective parameters at a gate configuration.
    Sw {
        #[arg(long, default_value = "QB2")]
        qubit: String,
        /// Coupler frequency during the gate (GHz).
        #[arg(long, default_value_t = 5.2)]
        coupler_freq: f64,
        /// Qubit frequency during the gate (GHz; default: MOVE resonance).
        #[arg(long)]
        qubit_freq: Option<f64>,
    },
    /// ZZ-coupling landscape grid.
    Zz {
        #[arg(long, default_value = "QB2")]
        qubit: String,
        #[arg(long, default_value_t = 4.6)]
        coupler_lo: f64,
        #[arg(long, default_value_t = 6.5)]
        coupler_hi: f64,
        #[arg(long, default_value_t = -0.35)]
        delta_lo: f64,
        #[arg(long, default_value_t = 0.35)]
        delta_hi: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Coherence limits of the native gates and the GHZ budget.
    Limits {
        #[arg(long, default_value = "QB3")]
        move_qubit: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // worker cap; reductions are fixed-order so results do not depend on it
    if let Ok(threads) = std::env::var("STARQ_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

fn load(common: &Common) -> Result<DeviceParams, CliError> {
    load_device_spec(&common.device).map_err(usage)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    match cli.command {
        Command::Simulate { common, r#in, noisy, frame_tracking } => {
            let device = load(&common)?;
            let text = std::fs::read_to_string(&r#in)?;
            let circuit = Circuit::parse(&text).map_err(usage)?;
            if let Err(v) = validate(&circuit) {
                return Err(usage(format!("invalid circuit: {v:?}")));
            }
            let exec = Executor::new(&device, &circuit).map_err(usage)?;
            let qubits = circuit.components.clone();
            let opts = SimOptions {
                noise: if noisy { NoiseSpec::Device { thermal: false } } else { NoiseSpec::None },
                frame_tracking,
                seed: common.seed,
                trajectories: if noisy { common.trajectories } else { 1 },
                ..Default::default()
            };
            let shots_per_run = (common.shots + opts.trajectories - 1) / opts.trajectories;
            let rows = assignment_rows(&device, &qubits);
            let counts: Vec<Vec<u64>> = exec
                .run_ensemble(&circuit, &opts, |o, rng| {
                    let dist = outcome_distribution(&o.state, &qubits);
                    let mut c = vec![0u64; dist.len()];
                    for s in sample_from_distribution(&dist, shots_per_run, rng) {
                        let s = if noisy { apply_readout_confusion(s, &rows, rng) } else { s };
                        c[s] += 1;
                    }
                    c
                })
                .map_err(numerical)?;
            let mut totals = vec![0u64; 1 << qubits.len()];
            for run in counts {
                for (t, c) in totals.iter_mut().zip(run) {
                    *t += c;
                }
            }
            std::fs::create_dir_all(&common.out)?;
            let mut manifest = RunManifest::new("simulate", &common.device, common.seed);
            let path = common.out.join("counts.csv");
            write_csv(
                &path,
                &["outcome", "count"],
                totals.iter().enumerate().map(|(i, c)| vec![i as f64, *c as f64]),
            )?;
            manifest.record(&path);
            let summary = serde_json::json!({
                "qubits": qubits,
                "bit_order": "first listed qubit = most significant bit",
                "shots": totals.iter().sum::<u64>(),
            });
            let spath = common.out.join("summary.json");
            write_json(&spath, &summary)?;
            manifest.record(&spath);
            finish(manifest, &common.out, started)
        }
        Command::Transpile { common, r#in, out_circuit, report, no_reuse, resolve } => {
            let device = load(&common)?;
            let text = std::fs::read_to_string(&r#in)?;
            let logical = Circuit::parse(&text).map_err(usage)?;
            let native = if no_reuse {
                lower_cz_no_reuse(&logical).map_err(usage)?
            } else {
                lower_cz(&logical).map_err(usage)?
            };
            validate(&native)
                .map_err(|v| usage(format!("compiler produced invalid code: {v:?}")))?;
            let mode = if resolve == "tracking" {
                PhaseMode::FrameTracking
            } else {
                PhaseMode::FixedOnly
            };
            let resolved = resolve_phases(&native, &device, mode).map_err(usage)?;
            let out_path = out_circuit.unwrap_or_else(|| {
                let mut p = r#in.clone();
                p.set_extension("native.qc");
                p
            });
            std::fs::write(&out_path, resolved.circuit.to_text())?;
            let counts = resolved.circuit.counts();
            let sched = schedule(&resolved.circuit, &device).map_err(usage)?;
            let report_value = serde_json::json!({
                "counts": counts,
                "schedule_ns": sched.makespan_ns,
                "inserted_phases": resolved.inserted.len(),
            });
            std::fs::create_dir_all(&common.out)?;
            let mut manifest = RunManifest::new("transpile", &common.device, common.seed);
            manifest.record(&out_path);
            if let Some(rp) = report {
                write_json(&rp, &report_value)?;
                manifest.record(&rp);
            }
            println!("{}", serde_json::to_string_pretty(&report_value).unwrap());
            finish(manifest, &common.out, started)
        }
        Command::Calib { common, experiment } => run_calib(common, experiment, started),
        Command::Bench { common, suite } => run_bench(common, suite, started),
        Command::Analyze { common, what } => run_analyze(common, what, started),
    }
}

fn finish(mut manifest: RunManifest, out: &Path, started: Instant) -> Result<(), CliError> {
    manifest.wall_clock_s = started.elapsed().as_secs_f64();
    manifest.save(out)?;
    Ok(())
}

fn run_calib(common: Common, experiment: CalibCmd, started: Instant) -> Result<(), CliError> {
    let device = load(&common)?;
    std::fs::create_dir_all(&common.out)?;
    let mut manifest = RunManifest::new("calib", &common.device, common.seed);
    match experiment {
        CalibCmd::Chevron { qubit, kind, span, points } => {
            let (kind_enum, (f_q, f_c), tau) = if kind == "cz" {
                let gp = calib::cz_gate_point(&device, &qubit).map_err(numerical)?;
                let tau = device.durations_of(&qubit).map_err(usage)?.tau_cz_ns;
                (calib::ChevronKind::Cz, gp, tau)
            } else {
                let gp = calib::move_gate_point(&device, &qubit).map_err(numerical)?;
                let tau = device.durations_of(&qubit).map_err(usage)?.tau_m_ns;
                (calib::ChevronKind::Move, gp, tau)
            };
            let grid_q: Vec<f64> = (0..points)
                .map(|i| f_q - span + 2.0 * span * i as f64 / (points - 1) as f64)
                .collect();
            let grid_c: Vec<f64> = (0..points)
                .map(|i| f_c - span + 2.0 * span * i as f64 / (points - 1) as f64)
                .collect();
            let r = calib::chevron(kind_enum, &device, &qubit, &grid_q, &grid_c, tau)
                .map_err(numerical)?;
            let path = common.out.join(format!("chevron_{kind}.csv"));
            let mut rows = Vec::with_capacity(points * points);
            for (i, fq) in grid_q.iter().enumerate() {
                for (j, fc) in grid_c.iter().enumerate() {
                    rows.push(vec![*fq, *fc, r.data[i * points + j]]);
                }
            }
            write_csv(&path, &["omega_q_GHz", "omega_c_GHz", "p_excited"], rows)?;
            manifest.record(&path);
            let jpath = common.out.join(format!("chevron_{kind}.json"));
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!("operating-point guess: {:?}", r.optimum);
        }
        CalibCmd::MoveFine { qubit, n_moves } => {
            let phi: Vec<f64> = (0..12).map(|j| TWO_PI * j as f64 / 12.0).collect();
            let grid: Vec<f64> = (-12..=12).map(|i| i as f64 * 0.0006).collect();
            let r = calib::move_fine_cal(&device, &qubit, n_moves, &phi, &grid, 0.0)
                .map_err(numerical)?;
            let path = common.out.join("move_fine.csv");
            write_csv(
                &path,
                &["detuning_GHz", "p_excited_avg"],
                grid.iter().zip(&r.data).map(|(d, p)| vec![*d, *p]),
            )?;
            manifest.record(&path);
            let jpath = common.out.join("move_fine.json");
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!("optimal detuning: {:.6} GHz", r.optimum[0]);
        }
        CalibCmd::MoveVz { qubit } => {
            let r =
                calib::move_vz_cal(&device, &qubit, &[2, 4, 6, 8], 48, 0.0).map_err(numerical)?;
            let jpath = common.out.join("move_vz.json");
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!("{}", serde_json::to_string_pretty(&r).unwrap());
        }
        CalibCmd::CzPhase { cz_qubit, move_qubit } => {
            let (f_q, f_c) = calib::cz_gate_point(&device, &cz_qubit).map_err(numerical)?;
            let eff = effective_params_at(&device, &cz_qubit, Some(f_q), Some(f_c))
                .map_err(numerical)?;
            let t = TWO_PI / eff.omega_rabi;
            let (gate, residual) = starq_core::gates::cz_five_level_calibrated(
                &cz_qubit,
                &eff,
                t,
                device.truncation,
            );
            let r = calib::cz_phase_cal(&device, &cz_qubit, &move_qubit, &gate, 1)
                .map_err(numerical)?;
            let jpath = common.out.join("cz_phase.json");
            let out = serde_json::json!({
                "calibration": r,
                "five_level_residual_phase": residual,
                "gate_time_ns": t,
                "operating_point": {"f_q_GHz": f_q, "f_c_GHz": f_c},
            });
            write_json(&jpath, &out)?;
            manifest.record(&jpath);
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
        CalibCmd::CrT1 { qubit } => {
            let delays: Vec<f64> = (0..12).map(|i| 0.3 + i as f64 * 1.3).collect();
            let r = calib::cr_t1(&device, &qubit, &delays, common.trajectories, common.seed)
                .map_err(numerical)?;
            let path = common.out.join("cr_t1.csv");
            write_csv(&path, &["delay_us", "p_excited"], r.points.iter().map(|p| vec![p.0, p.1]))?;
            manifest.record(&path);
            let jpath = common.out.join("cr_t1.json");
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!("fitted resonator T1 = {:.3} us", r.t1_us);
        }
        CalibCmd::CrRamsey { qubit, virtual_detuning, detuning } => {
            let delays: Vec<f64> = (0..72).map(|i| 0.05 + i as f64 * 0.33).collect();
            let r = calib::cr_ramsey(
                &device,
                &qubit,
                &delays,
                virtual_detuning,
                detuning,
                common.trajectories,
                common.seed,
            )
            .map_err(numerical)?;
            let path = common.out.join("cr_ramsey.csv");
            write_csv(&path, &["delay_us", "p_excited"], r.points.iter().map(|p| vec![p.0, p.1]))?;
            manifest.record(&path);
            let jpath = common.out.join("cr_ramsey.json");
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!("fitted T2* = {:.3} us, oscillation {:.3} MHz", r.t2_star_us, r.freq_mhz);
        }
        CalibCmd::CrFrequency { qubit, detuning } => {
            let delays: Vec<f64> = (0..48).map(|i| 0.05 + i as f64 * 0.11).collect();
            let grid: Vec<f64> = (0..11).map(|i| detuning - 4.0 + i as f64 * 0.8).collect();
            let r = calib::cr_frequency(
                &device,
                &qubit,
                &delays,
                &grid,
                detuning,
                common.trajectories.min(1200),
                common.seed,
            )
            .map_err(numerical)?;
            let path = common.out.join("cr_frequency.csv");
            write_csv(
                &path,
                &["virtual_detuning_MHz", "dominant_freq_MHz"],
                r.scan.iter().map(|p| vec![p.0, p.1]),
            )?;
            manifest.record(&path);
            let jpath = common.out.join("cr_frequency.json");
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!("extracted detuning {:.3} MHz (bin {:.3})", r.detuning_mhz, r.bin_width_mhz);
        }
        CalibCmd::JcLadder { qubit, spectator, steps } => {
            let r = calib::jc_ladder(&device, &qubit, &spectator, steps).map_err(numerical)?;
            let jpath = common.out.join("jc_ladder.json");
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!("{}", serde_json::to_string_pretty(&r).unwrap());
        }
        CalibCmd::PopulatedRamsey { load_qubit, probe_qubit, detuning } => {
            let delays: Vec<f64> = (0..160).map(|i| i as f64 * 0.11).collect();
            let r = calib::populated_ramsey(
                &device,
                &load_qubit,
                &probe_qubit,
                &delays,
                detuning,
                &JCPhases::ideal_move(),
                0.0,
                0.0,
            )
            .map_err(numerical)?;
            let path = common.out.join("populated_ramsey.csv");
            write_csv(&path, &["delay_ns", "p_excited"], r.points.iter().map(|p| vec![p.0, p.1]))?;
            manifest.record(&path);
            let jpath = common.out.join("populated_ramsey.json");
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!(
                "phi = {:.4}, phi' = {:.4}, gamma2 = {:.4}, zeta2 = {:.4}",
                r.phi_fit, r.phi_prime_fit, r.gamma2, r.zeta2
            );
        }
    }
    finish(manifest, &common.out, started)
}

fn run_bench(common: Common, suite: BenchCmd, started: Instant) -> Result<(), CliError> {
    let device = load(&common)?;
    std::fs::create_dir_all(&common.out)?;
    let mut manifest = RunManifest::new("bench", &common.device, common.seed);
    match suite {
        BenchCmd::Rb { qubit, noisy, depolarizing } => {
            let noise = match (depolarizing, noisy) {
                (Some(p), _) => RbNoise::DepolarizingPerClifford(p),
                (None, true) => RbNoise::Device,
                (None, false) => RbNoise::None,
            };
            let cfg = RbConfig { noise, seed: common.seed, ..RbConfig::default_1q() };
            let data = benchmark::rb_1q(&device, &qubit, 0, &cfg).map_err(numerical)?;
            let fit = fit_decay(&data.points).map_err(numerical)?;
            let path = common.out.join("rb_survival.csv");
            write_csv(
                &path,
                &["m", "k", "seq_mean", "seq_sem"],
                data.points.iter().map(|p| vec![p.m as f64, p.k as f64, p.mean, p.sem]),
            )?;
            manifest.record(&path);
            let jpath = common.out.join("rb_fit.json");
            let summary = serde_json::json!({
                "fit": fit,
                "clifford_fidelity": benchmark::rb_fidelity(fit.p[0], 2),
            });
            write_json(&jpath, &summary)?;
            manifest.record(&jpath);
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
        }
        BenchCmd::IrbMove { qubit, k_max, theta_error, noisy } => {
            let cfg = RbConfig {
                noise: if noisy { RbNoise::Device } else { RbNoise::None },
                seed: common.seed,
                move_theta: std::f64::consts::PI * (1.0 + theta_error),
                m_list: vec![1, 2, 4, 8, 16, 32],
                ..RbConfig::default_1q()
            };
            let k_list: Vec<usize> = (1..=k_max).collect();
            let r = benchmark::irb_move(&device, &qubit, &k_list, &cfg).map_err(numerical)?;
            let path = common.out.join("irb_move_survival.csv");
            write_csv(
                &path,
                &["m", "k", "seq_mean", "seq_sem"],
                r.all_points.iter().map(|p| vec![p.m as f64, p.k as f64, p.mean, p.sem]),
            )?;
            manifest.record(&path);
            let jpath = common.out.join("irb_move.json");
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!(
                "F_mm = {:.5} (alpha {:.2e}, beta {:.2e})",
                r.gate_fidelity, r.quadratic.alpha, r.quadratic.beta
            );
        }
        BenchCmd::IrbCz { move_qubit, cz_qubit, l_max, noisy } => {
            let cfg = RbConfig {
                noise: if noisy { RbNoise::Device } else { RbNoise::None },
                seed: common.seed,
                ..RbConfig::default_2q()
            };
            let l_list: Vec<usize> = (0..=l_max).collect();
            let r = benchmark::irb_move_lcz(&device, &move_qubit, &cz_qubit, &l_list, &cfg)
                .map_err(numerical)?;
            let path = common.out.join("irb_cz_survival.csv");
            write_csv(
                &path,
                &["m", "k", "seq_mean", "seq_sem"],
                r.all_points.iter().map(|p| vec![p.m as f64, p.k as f64, p.mean, p.sem]),
            )?;
            manifest.record(&path);
            let jpath = common.out.join("irb_cz.json");
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!("F_cz = {:.5} (gamma_m {:.5})", r.gate_fidelity, r.quadratic.gamma);
        }
        BenchCmd::Ghz { n, move_qubit, mitigate, ideal } => {
            let opts = MqcOptions {
                noise: if ideal { NoiseSpec::None } else { NoiseSpec::Device { thermal: true } },
                readout_errors: !ideal,
                mitigate,
                shots: common.shots,
                trajectories: common.trajectories,
                seed: common.seed,
                phase_points: None,
            };
            let r = mqc_ghz_fidelity(&device, n, &move_qubit, &opts).map_err(numerical)?;
            let path = common.out.join("mqc_s_curve.csv");
            write_csv(&path, &["phi_rad", "s"], r.s_curve.iter().map(|p| vec![p.0, p.1]))?;
            manifest.record(&path);
            let jpath = common.out.join("ghz.json");
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!(
                "F_GHZ({n}) = {:.4} (P = {:.4}, C = {:.4})",
                r.fidelity, r.populations, r.coherence
            );
        }
        BenchCmd::Qscore { n, graphs, noisy, virtual_node } => {
            let opts = QScoreOptions {
                n_graphs: graphs,
                shots: common.shots,
                noise: if noisy { NoiseSpec::Device { thermal: false } } else { NoiseSpec::None },
                trajectories: common.trajectories.min(512),
                readout_errors: noisy,
                seed: common.seed,
                virtual_node,
            };
            let r = qscore(&device, n, &opts).map_err(numerical)?;
            let path = common.out.join("qscore_graphs.csv");
            write_csv(
                &path,
                &["graph", "edges", "c_opt", "mean_cut", "ratio"],
                r.per_graph.iter().map(|g| {
                    vec![g.graph_index as f64, g.n_edges as f64, g.c_opt, g.mean_cut, g.ratio]
                }),
            )?;
            manifest.record(&path);
            let jpath = common.out.join("qscore.json");
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!("beta({n}) = {:.4} +- {:.4} (pass: {})", r.beta, r.sem, r.beta > 0.2);
        }
        BenchCmd::Zne { p2, lambdas } => {
            let opts = benchmark::tfim::ZnePipelineOptions {
                lambdas,
                trajectories: common.trajectories.min(768),
                shots_per_trajectory: 64,
                seed: common.seed,
                p2,
                p1: 0.0,
            };
            let r = benchmark::zne_tfim(&device, 1.0, &opts).map_err(numerical)?;
            let path = common.out.join("zne.csv");
            write_csv(
                &path,
                &["lambda", "energy", "sem"],
                r.energies.iter().map(|e| vec![e.0, e.1, e.2]),
            )?;
            manifest.record(&path);
            let jpath = common.out.join("zne.json");
            write_json(&jpath, &r)?;
            manifest.record(&jpath);
            println!(
                "E(lambda=0) = {:.4} (noiseless {:.4}, exact {:.4})",
                r.extrapolated.value, r.noiseless_energy, r.exact_ground
            );
        }
    }
    finish(manifest, &common.out, started)
}

fn run_analyze(common: Common, what: AnalyzeCmd, started: Instant) -> Result<(), CliError> {
    let device = load(&common)?;
    std::fs::create_dir_all(&common.out)?;
    let mut manifest = RunManifest::new("analyze", &common.device, common.seed);
    match what {
        AnalyzeCmd::Sw { qubit, coupler_freq, qubit_freq } => {
            let f_q = match qubit_freq {
                Some(f) => f,
                None => hamiltonian::solve_move_resonance(&device, &qubit, coupler_freq)
                    .map_err(numerical)?,
            };
            let eff = effective_params_at(&device, &qubit, Some(f_q), Some(coupler_freq))
                .map_err(numerical)?;
            let out = serde_json::json!({
                "f_q_GHz": f_q,
                "f_c_GHz": coupler_freq,
                "omega_q_dressed_GHz": eff.omega_q_ghz(),
                "omega_r_dressed_GHz": eff.omega_r_ghz(),
                "g_move_MHz": eff.g_move_mhz(),
                "g_cz_MHz": eff.g_cz_mhz(),
                "sqrt_n_ladder_MHz": eff.g_ladder.iter().map(|g| g / TWO_PI * 1e3).collect::<Vec<_>>(),
                "dispersive_ratios": eff.dispersive_ratios,
                "dispersive_warning": eff.dispersive_ratios.0 > 0.3 || eff.dispersive_ratios.1 > 0.3,
            });
            let jpath = common.out.join("sw.json");
            write_json(&jpath, &out)?;
            manifest.record(&jpath);
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
        AnalyzeCmd::Zz { qubit, coupler_lo, coupler_hi, delta_lo, delta_hi, points } => {
            let grid = zz_landscape(
                &device,
                &qubit,
                (coupler_lo, coupler_hi),
                (delta_lo, delta_hi),
                points,
                points,
            );
            let path = common.out.join("zz_landscape.csv");
            write_csv(
                &path,
                &["omega_c_GHz", "delta_GHz", "zeta_MHz"],
                grid.iter().map(|p| vec![p.omega_c_ghz, p.delta_ghz, p.zeta_mhz]),
            )?;
            manifest.record(&path);
            let max_abs = grid
                .iter()
                .filter(|p| p.zeta_mhz.is_finite())
                .map(|p| p.zeta_mhz.abs())
                .fold(0.0, f64::max);
            println!("max |zeta| = {max_abs:.3} MHz over {points}x{points} grid");
        }
        AnalyzeCmd::Limits { move_qubit } => {
            let opt = LimitOptions { thermal: false, zero_resonator_decay: false };
            let qubits = device.qubit_ids();
            let mut per_qubit = serde_json::Map::new();
            let mut mm_sum = 0.0;
            let mut cz_sum = 0.0;
            for q in &qubits {
                let (f_m, f_mm) = limit_move(&device, q, opt).map_err(numerical)?;
                let f_cz = limit_cz(&device, q, opt).map_err(numerical)?;
                mm_sum += f_mm;
                cz_sum += f_cz;
                per_qubit
                    .insert(q.clone(), serde_json::json!({"F_m": f_m, "F_mm": f_mm, "F_cz": f_cz}));
            }
            let budget =
                ghz_budget(&device, &move_qubit, qubits.len(), &GhzBudgetOptions::default())
                    .map_err(numerical)?;
            let measured = ghz_budget(
                &device,
                &move_qubit,
                qubits.len(),
                &GhzBudgetOptions {
                    mode: BudgetMode::Measured,
                    thermal: false,
                    ..Default::default()
                },
            )
            .ok();
            let zeroed = ghz_budget(
                &device,
                &move_qubit,
                qubits.len(),
                &GhzBudgetOptions { zero_resonator_decay: true, ..Default::default() },
            )
            .map_err(numerical)?;
            let exp_model =
                ghz_exponential_model(&device, qubits.len(), None).map_err(numerical)?;
            let out = serde_json::json!({
                "per_qubit": per_qubit,
                "mean_F_mm_c": mm_sum / qubits.len() as f64,
                "mean_F_cz_c": cz_sum / qubits.len() as f64,
                "ghz_budget_limit": budget,
                "ghz_budget_measured": measured,
                "ghz_budget_zero_resonator_decay": zeroed,
                "exponential_model": exp_model,
            });
            let jpath = common.out.join("limits.json");
            write_json(&jpath, &out)?;
            manifest.record(&jpath);
            println!(
                "mean F_mm^c = {:.4}, mean F_cz^c = {:.4}, F_GHZ limit = {:.4} ({:.4} with readout)",
                mm_sum / qubits.len() as f64,
                cz_sum / qubits.len() as f64,
                budget.total,
                budget.total_with_readout,
            );
        }
    }
    finish(manifest, &common.out, started)
}
