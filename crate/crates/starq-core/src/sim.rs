//! Gate-level circuit executor on the hybrid state: applies native
//! instructions as unitaries, advances trajectory noise along the ASAP
//! schedule, optionally tracks the qubit-resonator frame rotation, and
//! samples measurement outcomes through the readout assignment matrices.
//!
//! Circuits are compiled once (contraction plans, noise windows, frame
//! factors) and the compiled form is shared across trajectories.

use crate::device::DeviceParams;
use crate::gates::{self, CzModel, JCPhases};
use crate::hilbert::{CompiledOp, HilbertError, HybridState, Operator, SubsystemLayout};
use crate::noise::{trajectory_seed, CompiledChannel, NoiseChannel, NoiseError};
use crate::transpiler::{schedule, Circuit, Instr, TranspileError, RESONATOR};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("state error: {0}")]
    Hilbert(#[from] HilbertError),
    #[error("noise error: {0}")]
    Noise(#[from] NoiseError),
    #[error("transpile error: {0}")]
    Transpile(#[from] TranspileError),
    #[error("device error: {0}")]
    Device(#[from] crate::device::DeviceError),
    #[error("cumulative truncation loss {0:.3e} exceeds 1e-6; raise the resonator truncation")]
    TruncationOverflow(f64),
}

#[derive(Debug, Clone)]
pub enum NoiseSpec {
    None,
    /// T1 / T2* / thermal trajectory channels from the device tables.
    Device { thermal: bool },
    /// Uniform non-identity Pauli with probability p1 after each
    /// rotation and p2 after each MOVE / CZ, on the touched qubit.
    Depolarizing { p1: f64, p2: f64 },
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub noise: NoiseSpec,
    /// Track the relative rotating-frame phase of the resonator against
    /// each qubit (chi factors on the JC exchange).
    pub frame_tracking: bool,
    pub seed: u64,
    pub trajectories: usize,
    /// Exchange angle used for every MOVE (pi when calibrated).
    pub move_theta: f64,
    /// Per-manifold JC phases applied to every MOVE.
    pub move_phases: JCPhases,
    pub cz_model: CzModel,
    /// Conditional phase of the ideal CZ.
    pub cz_phase: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            noise: NoiseSpec::None,
            frame_tracking: false,
            seed: 0,
            trajectories: 1,
            move_theta: std::f64::consts::PI,
            move_phases: JCPhases::default(),
            cz_model: CzModel::Ideal,
            cz_phase: std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub state: HybridState,
    /// Probability weight sitting on the truncated |e, n_max> edge just
    /// before JC gates, accumulated over the run.
    pub truncation_loss: f64,
}

enum GateNoise {
    None,
    /// Channels applied for the full gate duration.
    Both { a: usize, b: usize, dt: f64 },
    /// MOVE split: half on the sender, half on the receiver; direction
    /// decided by the runtime occupancy.
    MoveSplit { qubit: usize, resonator: usize, half: f64 },
    Single { chan: usize, dt: f64 },
}

struct CompiledStep {
    op: Option<CompiledOp>,
    /// Noise catch-up (channel index, duration) before the unitary.
    pre_noise: Vec<(usize, f64)>,
    gate_noise: GateNoise,
    /// Depolarizing kick (qubit pauli-op base index, probability).
    depolarize: Option<(usize, f64)>,
    /// MOVE bookkeeping: qubit axis info for guard/trunc tracking.
    move_qubit: Option<String>,
}

/// Circuit compiled against a layout and simulation options.
pub struct CompiledRun {
    steps: Vec<CompiledStep>,
    channels: Vec<CompiledChannel>,
    /// Trailing idle windows for runs without measurements.
    final_noise: Vec<(usize, f64)>,
    /// Per-qubit Pauli triples for depolarizing kicks.
    paulis: Vec<CompiledOp>,
}

pub struct Executor<'d> {
    pub device: &'d DeviceParams,
    pub layout: Arc<SubsystemLayout>,
    pub qubits: Vec<String>,
    n_max: usize,
}

impl<'d> Executor<'d> {
    pub fn new(device: &'d DeviceParams, circuit: &Circuit) -> Result<Self, SimError> {
        let mut qubits = circuit.components.clone();
        qubits.sort();
        qubits.dedup();
        for q in &qubits {
            device.component(q)?;
        }
        let n_max = device.truncation;
        let refs: Vec<&str> = qubits.iter().map(|s| s.as_str()).collect();
        let layout = Arc::new(SubsystemLayout::qubits_and_resonator(&refs, n_max));
        Ok(Self { device, layout, qubits, n_max })
    }

    pub fn ground(&self) -> HybridState {
        HybridState::ground(self.layout.clone())
    }

    pub fn compile(&self, circuit: &Circuit, opts: &SimOptions) -> Result<CompiledRun, SimError> {
        let sched = schedule(circuit, self.device)?;
        let device_noise = matches!(opts.noise, NoiseSpec::Device { .. });
        let channels: Vec<CompiledChannel> = match opts.noise {
            NoiseSpec::Device { thermal } => self
                .qubits
                .iter()
                .map(String::as_str)
                .chain([RESONATOR])
                .map(|c| {
                    let ch = NoiseChannel::from_device(self.device, c, thermal)?;
                    Ok(CompiledChannel::new(&self.layout, &ch)?)
                })
                .collect::<Result<_, SimError>>()?,
            _ => Vec::new(),
        };
        let chan_index = |comp: &str| -> usize {
            channels.iter().position(|c| c.component == comp).unwrap_or(usize::MAX)
        };
        let mut paulis = Vec::new();
        for q in &self.qubits {
            for which in 0..3 {
                paulis.push(pauli(q, which).compile(&self.layout)?);
            }
        }
        let pauli_base =
            |q: &str| -> usize { self.qubits.iter().position(|x| x == q).unwrap() * 3 };

        let f_r = self.device.resonator().frequency_ghz;
        let mut noised_until: BTreeMap<String, f64> = BTreeMap::new();
        let mut steps = Vec::with_capacity(circuit.instrs.len());
        for (instr, item) in circuit.instrs.iter().zip(&sched.items) {
            let touched: Vec<&str> = match instr {
                Instr::Rot { q, .. } => vec![q.as_str()],
                Instr::Vz { .. } | Instr::Barrier => vec![],
                Instr::Cz { a, b } => vec![a.as_str(), b.as_str()],
                Instr::Move { q } => vec![q.as_str(), RESONATOR],
                Instr::Measure { qs } => qs.iter().map(String::as_str).collect(),
            };
            let mut pre_noise = Vec::new();
            if device_noise {
                for c in &touched {
                    let from = noised_until.get(*c).copied().unwrap_or(0.0);
                    if item.start_ns > from {
                        pre_noise.push((chan_index(c), item.start_ns - from));
                    }
                    noised_until
                        .insert(c.to_string(), (item.start_ns + item.duration_ns).max(from));
                }
            }
            let (op, gate_noise, depolarize, move_qubit) = match instr {
                Instr::Rot { q, angle, phase } => {
                    let op = gates::rot(q, *phase, *angle).compile(&self.layout)?;
                    let gn = if device_noise {
                        GateNoise::Single { chan: chan_index(q), dt: item.duration_ns }
                    } else {
                        GateNoise::None
                    };
                    let dep = match opts.noise {
                        NoiseSpec::Depolarizing { p1, .. } if p1 > 0.0 => {
                            Some((pauli_base(q), p1))
                        }
                        _ => None,
                    };
                    (Some(op), gn, dep, None)
                }
                Instr::Vz { comp, angle } => {
                    let dim = self.layout.subsystem_dim(comp)?;
                    let op = gates::vz(comp, *angle, dim).compile(&self.layout)?;
                    (Some(op), GateNoise::None, None, None)
                }
                Instr::Move { q } => {
                    let mut phases = opts.move_phases.clone();
                    phases.theta = opts.move_theta;
                    if opts.frame_tracking {
                        let dw = 2.0 * std::f64::consts::PI
                            * (self.device.component(q)?.frequency_ghz - f_r);
                        let chi = dw * item.start_ns;
                        for n in 1..=self.n_max {
                            let mut m = phases.manifold(n);
                            m.chi += chi;
                            phases.set_manifold(n, m);
                        }
                    }
                    let op = gates::move_op(q, &phases, self.n_max).compile(&self.layout)?;
                    let gn = if device_noise {
                        GateNoise::MoveSplit {
                            qubit: chan_index(q),
                            resonator: chan_index(RESONATOR),
                            half: item.duration_ns / 2.0,
                        }
                    } else {
                        GateNoise::None
                    };
                    let dep = match opts.noise {
                        NoiseSpec::Depolarizing { p2, .. } if p2 > 0.0 => {
                            Some((pauli_base(q), p2))
                        }
                        _ => None,
                    };
                    (Some(op), gn, dep, Some(q.clone()))
                }
                Instr::Cz { a, b } => {
                    let q = if b == RESONATOR { a } else { b };
                    let op = gates::cz(q, opts.cz_phase, 0.0, 0.0, &opts.cz_model, self.n_max)
                        .compile(&self.layout)?;
                    let gn = if device_noise {
                        GateNoise::Both {
                            a: chan_index(q),
                            b: chan_index(RESONATOR),
                            dt: item.duration_ns,
                        }
                    } else {
                        GateNoise::None
                    };
                    let dep = match opts.noise {
                        NoiseSpec::Depolarizing { p2, .. } if p2 > 0.0 => {
                            Some((pauli_base(q), p2))
                        }
                        _ => None,
                    };
                    (Some(op), gn, dep, None)
                }
                Instr::Barrier | Instr::Measure { .. } => (None, GateNoise::None, None, None),
            };
            steps.push(CompiledStep { op, pre_noise, gate_noise, depolarize, move_qubit });
        }
        // trailing idles for fidelity-style runs without measurements
        let mut final_noise = Vec::new();
        if device_noise && !circuit.instrs.iter().any(|i| matches!(i, Instr::Measure { .. })) {
            for c in self.qubits.iter().map(String::as_str).chain([RESONATOR]) {
                let from = noised_until.get(c).copied().unwrap_or(0.0);
                if sched.makespan_ns > from {
                    final_noise.push((chan_index(c), sched.makespan_ns - from));
                }
            }
        }
        Ok(CompiledRun { steps, channels, final_noise, paulis })
    }

    /// Run one stochastic trajectory of `circuit` from the ground state.
    pub fn run_trajectory(
        &self,
        circuit: &Circuit,
        opts: &SimOptions,
        index: u64,
    ) -> Result<SimOutcome, SimError> {
        let run = self.compile(circuit, opts)?;
        let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(opts.seed, index));
        self.run_compiled(&run, self.ground(), &mut rng)
    }

    /// Run one trajectory of a compiled circuit from an arbitrary state.
    pub fn run_compiled(
        &self,
        run: &CompiledRun,
        mut state: HybridState,
        rng: &mut ChaCha8Rng,
    ) -> Result<SimOutcome, SimError> {
        let mut scratch: Vec<C64> = Vec::new();
        let mut trunc_loss = 0.0;
        for step in &run.steps {
            for &(chan, dt) in &step.pre_noise {
                run.channels[chan].advance(&mut state, dt, rng);
            }
            match &step.gate_noise {
                GateNoise::None => {
                    if let Some(op) = &step.op {
                        if let Some(q) = &step.move_qubit {
                            trunc_loss += self.top_edge_weight(&state, q)?;
                        }
                        op.apply(&mut state.amplitudes, &mut scratch);
                    }
                }
                GateNoise::Single { chan, dt } => {
                    step.op.as_ref().expect("gate").apply(&mut state.amplitudes, &mut scratch);
                    run.channels[*chan].advance(&mut state, *dt, rng);
                }
                GateNoise::Both { a, b, dt } => {
                    step.op.as_ref().expect("gate").apply(&mut state.amplitudes, &mut scratch);
                    run.channels[*a].advance(&mut state, *dt, rng);
                    run.channels[*b].advance(&mut state, *dt, rng);
                }
                GateNoise::MoveSplit { qubit, resonator, half } => {
                    let q = step.move_qubit.as_ref().expect("move");
                    trunc_loss += self.top_edge_weight(&state, q)?;
                    // decoherence rides the moving state: sender first half,
                    // receiver second half
                    let moving_out = self.holder_weight(&state, q)? > 0.5;
                    let first = if moving_out { *resonator } else { *qubit };
                    let second = if moving_out { *qubit } else { *resonator };
                    run.channels[first].advance(&mut state, *half, rng);
                    step.op.as_ref().expect("gate").apply(&mut state.amplitudes, &mut scratch);
                    run.channels[second].advance(&mut state, *half, rng);
                }
            }
            if let Some((base, p)) = step.depolarize {
                if rng.gen::<f64>() < p {
                    let which = rng.gen_range(0..3);
                    run.paulis[base + which].apply(&mut state.amplitudes, &mut scratch);
                }
            }
        }
        for &(chan, dt) in &run.final_noise {
            run.channels[chan].advance(&mut state, dt, rng);
        }
        if trunc_loss > 1e-6 {
            return Err(SimError::TruncationOverflow(trunc_loss));
        }
        Ok(SimOutcome { state, truncation_loss: trunc_loss })
    }

    /// Probability on the |e, n_max> edge state cut by the truncation.
    fn top_edge_weight(&self, state: &HybridState, q: &str) -> Result<f64, SimError> {
        let qa = state.layout.index_of(q)?;
        let ra = state.layout.index_of(RESONATOR)?;
        let (sq, sr) = (state.layout.stride(qa), state.layout.stride(ra));
        let nr = self.n_max + 1;
        let mut w = 0.0;
        for (i, a) in state.amplitudes.iter().enumerate() {
            if i / sq % 3 == 1 && i / sr % nr == self.n_max {
                w += a.norm_sqr();
            }
        }
        Ok(w)
    }

    /// Weight of the single-photon resonator manifold with the qubit in
    /// |g>: tells the MOVE direction for the half-half noise split.
    fn holder_weight(&self, state: &HybridState, q: &str) -> Result<f64, SimError> {
        let qa = state.layout.index_of(q)?;
        let ra = state.layout.index_of(RESONATOR)?;
        let (sq, sr) = (state.layout.stride(qa), state.layout.stride(ra));
        let nr = self.n_max + 1;
        let mut w = 0.0;
        for (i, a) in state.amplitudes.iter().enumerate() {
            if i / sq % 3 == 0 && i / sr % nr >= 1 {
                w += a.norm_sqr();
            }
        }
        Ok(w)
    }

    /// Run an ensemble of trajectories with per-trajectory seeds derived
    /// from the master seed; outputs come back in index order,
    /// independent of the worker count.
    pub fn run_ensemble<T: Send>(
        &self,
        circuit: &Circuit,
        opts: &SimOptions,
        map: impl Fn(&SimOutcome, &mut ChaCha8Rng) -> T + Sync,
    ) -> Result<Vec<T>, SimError>
    where
        SimError: Send,
    {
        let run = self.compile(circuit, opts)?;
        (0..opts.trajectories as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(opts.seed, k));
                let outcome = self.run_compiled(&run, self.ground(), &mut rng)?;
                // independent sampling stream per trajectory
                let mut sample_rng = ChaCha8Rng::seed_from_u64(trajectory_seed(
                    opts.seed ^ 0x5a5a_5a5a_5a5a_5a5a,
                    k,
                ));
                Ok(map(&outcome, &mut sample_rng))
            })
            .collect()
    }
}

/// Pauli on the g/e subspace of a transmon (|f> untouched).
pub fn pauli(q: &str, which: usize) -> Operator {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let m = match which {
        0 => vec![z, one, z, one, z, z, z, z, one],  // X
        1 => vec![z, -i, z, i, z, z, z, z, one],     // Y
        _ => vec![one, z, z, z, -one, z, z, z, one], // Z
    };
    Operator::unitary_unchecked(vec![q.to_string()], m)
}

/// Measurement distribution of the listed qubits: probabilities over
/// bitstrings (qubit order as given, first qubit = leftmost bit); the
/// |f> level reads out as excited.
pub fn outcome_distribution(state: &HybridState, qubits: &[String]) -> Vec<f64> {
    let axes: Vec<(usize, usize)> = qubits
        .iter()
        .map(|q| {
            let a = state.layout.index_of(q).expect("qubit in layout");
            (state.layout.stride(a), state.layout.subsystems()[a].dim)
        })
        .collect();
    let mut dist = vec![0.0; 1 << qubits.len()];
    for (i, amp) in state.amplitudes.iter().enumerate() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let mut key = 0usize;
        for (stride, dim) in &axes {
            let lvl = i / stride % dim;
            key = key << 1 | usize::from(lvl >= 1);
        }
        dist[key] += w;
    }
    dist
}

/// Sample `shots` bitstrings from a distribution.
pub fn sample_from_distribution(dist: &[f64], shots: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for p in dist {
        acc += p;
        cdf.push(acc);
    }
    (0..shots)
        .map(|_| {
            let r: f64 = rng.gen::<f64>() * acc;
            cdf.partition_point(|&c| c < r).min(dist.len() - 1)
        })
        .collect()
}

/// Push one sampled outcome through the per-qubit readout assignment
/// matrices (bit-flip with the confusion probability of the true state).
pub fn apply_readout_confusion(
    outcome: usize,
    matrices: &[[f64; 4]],
    rng: &mut impl Rng,
) -> usize {
    let n = matrices.len();
    let mut noisy = 0usize;
    for (k, m) in matrices.iter().enumerate() {
        let bit = outcome >> (n - 1 - k) & 1;
        // rows [p(0|0), p(1|0), p(0|1), p(1|1)]
        let p_flip = if bit == 0 { m[1] } else { m[2] };
        let out_bit = if rng.gen::<f64>() < p_flip { 1 - bit } else { bit };
        noisy = noisy << 1 | out_bit;
    }
    noisy
}

pub fn assignment_rows(device: &DeviceParams, qubits: &[String]) -> Vec<[f64; 4]> {
    qubits
        .iter()
        .map(|q| {
            let m = device.assignment_matrix(q).expect("readout entry");
            [m.0[0][0], m.0[0][1], m.0[1][0], m.0[1][1]]
        })
        .collect()
}

/// Counts over bitstring outcomes.
pub type Counts = BTreeMap<usize, u64>;

pub fn counts_from_samples(samples: &[usize]) -> Counts {
    let mut c = Counts::new();
    for s in samples {
        *c.entry(*s).or_insert(0) += 1;
    }
    c
}
