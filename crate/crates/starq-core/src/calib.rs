//! Simulated re-creations of the calibration experiments: gate-point
//! chevrons on the exact trio Hamiltonian, MOVE fine / virtual-Z
//! calibration, CZ population and conditional-phase extraction, resonator
//! T1 / T2* / frequency measurement, the JC ladder climb, and the
//! populated-resonator Ramsey with two-photon phase extraction.
//!
//! Chevrons and the MOVE fine calibration run on the exact trio model so
//! miscalibration is physically meaningful; the phase-calibration and
//! coherence experiments run on the calibrated gate unitaries.

use crate::benchmark::fits::{levenberg_marquardt, FitError};
use crate::device::DeviceParams;
use crate::gates::{self, wrap_angle, JCPhases, ManifoldPhases};
use crate::hamiltonian::{
    effective_params_at, solve_cz_resonance, solve_move_resonance,
    HamiltonianError, TrioConfig, TrioHamiltonian, TWO_PI,
};
use crate::hilbert::{HybridState, SubsystemLayout};
use crate::noise::{trajectory_seed, trajectory_step, NoiseChannel};
use crate::sim::SimError;
use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("simulation error: {0}")]
    Sim(#[from] SimError),
    #[error("hamiltonian error: {0}")]
    Hamiltonian(#[from] HamiltonianError),
    #[error("device error: {0}")]
    Device(#[from] crate::device::DeviceError),
    #[error("state error: {0}")]
    Hilbert(#[from] crate::hilbert::HilbertError),
    #[error("noise error: {0}")]
    Noise(#[from] crate::noise::NoiseError),
    #[error("fit error: {0}")]
    Fit(#[from] FitError),
    #[error("{0}")]
    Invalid(String),
    #[error("ladder with {steps} steps overflows the n_max = {n_max} truncation")]
    TruncationOverflow { steps: usize, n_max: usize },
    #[error("fitted optimum at the edge of the swept window")]
    OptimumAtEdge,
}

/// Swept-experiment container: axes, data grid (row-major over the axes
/// in order), fitted optimum and diagnostics.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CalibResult {
    pub experiment: String,
    pub axes: Vec<(String, Vec<f64>)>,
    pub data: Vec<f64>,
    pub optimum: Vec<f64>,
    pub extrapolated: bool,
    pub diagnostics: String,
}

// ---------------------------------------------------------------------
// exact-trio piecewise-constant evolution
// ---------------------------------------------------------------------

/// Trio state propagator: piecewise-constant Hamiltonian segments in the
/// interaction picture of the bare idling Hamiltonian (single-qubit
/// pulses are ideal instantaneous rotations).
pub struct TrioEngine {
    pub idle: TrioConfig,
    pub dims: [usize; 3],
}

impl TrioEngine {
    pub fn new(device: &DeviceParams, qubit: &str, res_dim: usize) -> Result<Self, CalibError> {
        Ok(Self {
            idle: TrioConfig::from_device(device, qubit, None, None)?,
            dims: [3, 3, res_dim],
        })
    }

    fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn basis_index(&self, label: [usize; 3]) -> usize {
        (label[0] * self.dims[1] + label[1]) * self.dims[2] + label[2]
    }

    fn bare_energy(&self, label: [usize; 3]) -> f64 {
        let (nq, nc, nr) = (label[0] as f64, label[1] as f64, label[2] as f64);
        TWO_PI
            * (self.idle.f_q * nq + self.idle.alpha_q / 2.0 * nq * (nq - 1.0)
                + self.idle.f_c * nc
                + self.idle.alpha_c / 2.0 * nc * (nc - 1.0)
                + self.idle.f_r * nr)
    }

    fn levels_of(&self, i: usize) -> [usize; 3] {
        [
            i / (self.dims[1] * self.dims[2]),
            i / self.dims[2] % self.dims[1],
            i % self.dims[2],
        ]
    }

    /// Evolve under the full Hamiltonian at a pulse configuration for
    /// `tau` ns, framed against the bare idling energies at the segment
    /// boundaries (t_start, t_start + tau).
    pub fn pulse(&self, state: &mut Vec<C64>, cfg: &TrioConfig, tau: f64, t_start: f64) {
        let h = TrioHamiltonian::new(cfg, self.dims[0], self.dims[2]);
        let eig = SymmetricEigen::new(h.matrix);
        // into the lab frame at t_start
        for (i, a) in state.iter_mut().enumerate() {
            *a *= C64::new(0.0, -self.bare_energy(self.levels_of(i)) * t_start).exp();
        }
        // exact segment propagator
        let dim = self.dim();
        let mut coeff = vec![C64::new(0.0, 0.0); dim];
        for k in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for (i, a) in state.iter().enumerate() {
                acc += eig.eigenvectors[(i, k)] * a;
            }
            coeff[k] = acc * C64::new(0.0, -eig.eigenvalues[k] * tau).exp();
        }
        for (i, a) in state.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (k, c) in coeff.iter().enumerate() {
                acc += eig.eigenvectors[(i, k)] * c;
            }
            *a = acc;
        }
        // back into the rotating frame at the segment end
        let t_end = t_start + tau;
        for (i, a) in state.iter_mut().enumerate() {
            *a *= C64::new(0.0, self.bare_energy(self.levels_of(i)) * t_end).exp();
        }
    }

    /// Ideal instantaneous rotation on the qubit's g/e subspace.
    pub fn rot_qubit(&self, state: &mut [C64], axis_phase: f64, angle: f64) {
        let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        let mi = C64::new(0.0, -1.0);
        let stride = self.dims[1] * self.dims[2];
        for block in 0..self.dims[1] * self.dims[2] {
            let (ig, ie) = (block, stride + block);
            let (ag, ae) = (state[ig], state[ie]);
            state[ig] = C64::new(c, 0.0) * ag + mi * C64::new(0.0, -axis_phase).exp() * s * ae;
            state[ie] = mi * C64::new(0.0, axis_phase).exp() * s * ag + C64::new(c, 0.0) * ae;
        }
    }

    pub fn vz_qubit(&self, state: &mut [C64], angle: f64) {
        let stride = self.dims[1] * self.dims[2];
        for i in 0..self.dim() {
            let l = i / stride;
            state[i] *= C64::new(0.0, angle * l as f64).exp();
        }
    }

    pub fn qubit_populations(&self, state: &[C64]) -> [f64; 3] {
        let stride = self.dims[1] * self.dims[2];
        let mut out = [0.0; 3];
        for (i, a) in state.iter().enumerate() {
            out[i / stride] += a.norm_sqr();
        }
        out
    }

    pub fn population_of(&self, state: &[C64], label: [usize; 3]) -> f64 {
        state[self.basis_index(label)].norm_sqr()
    }
}

/// Coupler frequency at which the effective MOVE coupling matches a
/// half-Rabi exchange in the configured gate duration.
pub fn move_gate_point(device: &DeviceParams, qubit: &str) -> Result<(f64, f64), CalibError> {
    let tau_m = device.durations_of(qubit)?.tau_m_ns;
    let g_target = PI / (2.0 * tau_m); // rad/ns
    let f_c = solve_coupler_for_g(device, qubit, g_target, false)?;
    let f_q = solve_move_resonance(device, qubit, f_c)?;
    Ok((f_q, f_c))
}

/// Gate point of the CZ: full Rabi cycle through |fg0> in tau_cz.
pub fn cz_gate_point(device: &DeviceParams, qubit: &str) -> Result<(f64, f64), CalibError> {
    let tau_cz = device.durations_of(qubit)?.tau_cz_ns;
    let g_target = PI / tau_cz; // Omega = 2 g_cz spans 2 pi in tau
    let f_c = solve_coupler_for_g(device, qubit, g_target, true)?;
    let f_q = solve_cz_resonance(device, qubit, f_c)?;
    Ok((f_q, f_c))
}

fn solve_coupler_for_g(
    device: &DeviceParams,
    qubit: &str,
    g_target: f64,
    cz: bool,
) -> Result<f64, CalibError> {
    let f_r = device.resonator().frequency_ghz;
    let g_of = |f_c: f64| -> Result<f64, CalibError> {
        let f_q = if cz {
            solve_cz_resonance(device, qubit, f_c).unwrap_or(f_r + 0.187)
        } else {
            solve_move_resonance(device, qubit, f_c).unwrap_or(f_r)
        };
        let eff = effective_params_at(device, qubit, Some(f_q), Some(f_c))?;
        Ok(if cz { eff.g_cz.abs() } else { eff.g_move.abs() })
    };
    let (mut lo, mut hi) = (4.75, 5.9);
    let (glo, ghi) = (g_of(lo)?, g_of(hi)?);
    if (glo - g_target) * (ghi - g_target) > 0.0 {
        return Err(CalibError::Invalid(format!(
            "no coupler frequency in [{lo}, {hi}] reaches g = {g_target} rad/ns"
        )));
    }
    let increasing = ghi > glo;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        let g = g_of(mid)?;
        if (g > g_target) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------
// chevrons
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChevronKind {
    Move,
    Cz,
}

/// Population landscape over (qubit, coupler) gate frequencies after a
/// pulse of duration `tـns` on the exact trio model. The returned data
/// grid is the qubit excited-state population; the optimum is the
/// initial operating-point guess at the symmetric full-transfer (MOVE)
/// or mid-pulse |f> transfer (CZ) point.
pub fn chevron(
    kind: ChevronKind,
    device: &DeviceParams,
    qubit: &str,
    f_q_grid: &[f64],
    f_c_grid: &[f64],
    t_ns: f64,
) -> Result<CalibResult, CalibError> {
    let res_dim = 3;
    let engine = TrioEngine::new(device, qubit, res_dim)?;
    let initial = match kind {
        ChevronKind::Move => [1usize, 0, 0],
        ChevronKind::Cz => [1usize, 0, 1],
    };
    let pts: Vec<(usize, usize)> = (0..f_q_grid.len())
        .flat_map(|i| (0..f_c_grid.len()).map(move |j| (i, j)))
        .collect();
    let evals: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|&(i, j)| {
            let cfg = TrioConfig::from_device(device, qubit, Some(f_q_grid[i]), Some(f_c_grid[j]))
                .expect("valid trio");
            let mut state = vec![C64::new(0.0, 0.0); engine.dim()];
            state[engine.basis_index(initial)] = C64::new(1.0, 0.0);
            engine.pulse(&mut state, &cfg, t_ns, 0.0);
            let p_e = engine.qubit_populations(&state)[1];
            // operating-point figure of merit
            let merit = match kind {
                ChevronKind::Move => {
                    // full transfer: resonator holds the excitation
                    let mut s2 = vec![C64::new(0.0, 0.0); engine.dim()];
                    s2[engine.basis_index(initial)] = C64::new(1.0, 0.0);
                    engine.pulse(&mut s2, &cfg, t_ns, 0.0);
                    engine.population_of(&s2, [0, 0, 1])
                }
                ChevronKind::Cz => {
                    // half-pulse transfer into |fg0>
                    let mut s2 = vec![C64::new(0.0, 0.0); engine.dim()];
                    s2[engine.basis_index(initial)] = C64::new(1.0, 0.0);
                    engine.pulse(&mut s2, &cfg, t_ns / 2.0, 0.0);
                    engine.population_of(&s2, [2, 0, 0])
                }
            };
            (p_e, merit)
        })
        .collect();
    let best = evals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(idx, _)| idx)
        .unwrap();
    let (bi, bj) = pts[best];
    Ok(CalibResult {
        experiment: format!("chevron-{:?}", kind).to_lowercase(),
        axes: vec![
            ("omega_q_GHz".into(), f_q_grid.to_vec()),
            ("omega_c_GHz".into(), f_c_grid.to_vec()),
        ],
        data: evals.iter().map(|e| e.0).collect(),
        optimum: vec![f_q_grid[bi], f_c_grid[bj]],
        extrapolated: bi == 0
            || bi + 1 == f_q_grid.len()
            || bj == 0
            || bj + 1 == f_c_grid.len(),
        diagnostics: format!("max transfer merit {:.4}", evals[best].1),
    })
}

// ---------------------------------------------------------------------
// MOVE fine calibration (exact trio)
// ---------------------------------------------------------------------

/// Fig.-style fine calibration of the MOVE operating point: the sequence
/// X_pi; [MOVE; Z_phi]^(N-1); MOVE is swept over a qubit-frequency
/// detuning grid and the relative phase phi; the phi-averaged excited-
/// state probability peaks at the complete-transfer point. A
/// `frequency_offset` models a miscalibrated flux-to-frequency
/// conversion whose negative the calibration recovers.
pub fn move_fine_cal(
    device: &DeviceParams,
    qubit: &str,
    n_moves: usize,
    phi_grid: &[f64],
    detuning_grid_ghz: &[f64],
    frequency_offset_ghz: f64,
) -> Result<CalibResult, CalibError> {
    if n_moves % 2 != 0 {
        return Err(CalibError::Invalid("the MOVE count must be even".into()));
    }
    let engine = TrioEngine::new(device, qubit, 3)?;
    let (f_q_star, f_c_star) = move_gate_point(device, qubit)?;
    let tau_m = device.durations_of(qubit)?.tau_m_ns;
    let averaged: Vec<f64> = detuning_grid_ghz
        .par_iter()
        .map(|&delta| {
            let cfg = TrioConfig::from_device(
                device,
                qubit,
                Some(f_q_star + delta + frequency_offset_ghz),
                Some(f_c_star),
            )
            .expect("valid trio");
            let mut acc = 0.0;
            for &phi in phi_grid {
                let mut state = vec![C64::new(0.0, 0.0); engine.dim()];
                state[engine.basis_index([0, 0, 0])] = C64::new(1.0, 0.0);
                engine.rot_qubit(&mut state, 0.0, PI);
                let mut t = 0.0;
                for m in 0..n_moves {
                    engine.pulse(&mut state, &cfg, tau_m, t);
                    t += tau_m;
                    if m + 1 < n_moves {
                        engine.vz_qubit(&mut state, phi);
                    }
                }
                acc += engine.qubit_populations(&state)[1];
            }
            acc / phi_grid.len() as f64
        })
        .collect();
    // quadratic fit around the maximum
    let imax = averaged
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let at_edge = imax == 0 || imax + 1 == detuning_grid_ghz.len();
    let optimum = if at_edge {
        detuning_grid_ghz[imax]
    } else {
        // parabola through the three points around the peak
        let (x0, x1, x2) =
            (detuning_grid_ghz[imax - 1], detuning_grid_ghz[imax], detuning_grid_ghz[imax + 1]);
        let (y0, y1, y2) = (averaged[imax - 1], averaged[imax], averaged[imax + 1]);
        let denom = (y0 - 2.0 * y1 + y2).min(-1e-15);
        x1 + 0.5 * (y0 - y2) / denom * (x2 - x0) / 2.0 * (-1.0)
    };
    Ok(CalibResult {
        experiment: "move-fine".into(),
        axes: vec![("detuning_GHz".into(), detuning_grid_ghz.to_vec())],
        data: averaged,
        optimum: vec![optimum],
        extrapolated: at_edge,
        diagnostics: format!("gate point f_q = {f_q_star:.6}, f_c = {f_c_star:.6}"),
    })
}

/// Phi-fringe amplitude of the fine-calibration sequence at a fixed
/// detuning: zero at the calibrated point, growing with N off it.
pub fn move_fine_fringe_amplitude(
    device: &DeviceParams,
    qubit: &str,
    n_moves: usize,
    detuning_ghz: f64,
    phi_points: usize,
) -> Result<f64, CalibError> {
    let engine = TrioEngine::new(device, qubit, 3)?;
    let (f_q_star, f_c_star) = move_gate_point(device, qubit)?;
    let tau_m = device.durations_of(qubit)?.tau_m_ns;
    let cfg =
        TrioConfig::from_device(device, qubit, Some(f_q_star + detuning_ghz), Some(f_c_star))?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..phi_points {
        let phi = 2.0 * PI * j as f64 / phi_points as f64;
        let mut state = vec![C64::new(0.0, 0.0); engine.dim()];
        state[engine.basis_index([0, 0, 0])] = C64::new(1.0, 0.0);
        engine.rot_qubit(&mut state, 0.0, PI);
        let mut t = 0.0;
        for m in 0..n_moves {
            engine.pulse(&mut state, &cfg, tau_m, t);
            t += tau_m;
            if m + 1 < n_moves {
                engine.vz_qubit(&mut state, phi);
            }
        }
        let p = engine.qubit_populations(&state)[1];
        lo = lo.min(p);
        hi = hi.max(p);
    }
    Ok(hi - lo)
}

// ---------------------------------------------------------------------
// MOVE VZ calibration (gate level)
// ---------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct MoveVzResult {
    /// Physical Z per MOVE pair restoring the identity (pi for an ideal
    /// pair).
    pub pair_phase: f64,
    /// Estimated single-MOVE frame phase gamma_1 = (pair_phase - pi)/2.
    pub gamma1_estimate: f64,
    /// Fitted total phase per N, for the consistency check across N.
    pub per_n: Vec<(usize, f64)>,
}

/// Calibrate the common MOVE phase: prepare a superposition, move it
/// back and forth N times (even), map the azimuth with the final
/// pi/2-pulse phase sweep. The injected `gamma1` enters every MOVE's
/// single-excitation manifold.
pub fn move_vz_cal(
    device: &DeviceParams,
    qubit: &str,
    n_list: &[usize],
    phi_points: usize,
    injected_gamma1: f64,
) -> Result<MoveVzResult, CalibError> {
    if n_list.iter().any(|n| n % 2 != 0 || *n == 0) {
        return Err(CalibError::Invalid("all N must be even and positive".into()));
    }
    let n_max = device.truncation;
    let layout = Arc::new(SubsystemLayout::qubits_and_resonator(&[qubit], n_max));
    let mut phases = JCPhases::ideal_move();
    phases.set_manifold(1, ManifoldPhases { gamma: injected_gamma1, zeta: 0.0, chi: 0.0 });
    let mv = gates::move_op(qubit, &phases, n_max);
    let mut per_n = Vec::new();
    for &n in n_list {
        let mut best = (0.0f64, f64::NEG_INFINITY);
        // dense sweep, then refine by cosine fit
        let mut xs = Vec::with_capacity(phi_points);
        let mut ys = Vec::with_capacity(phi_points);
        for j in 0..phi_points {
            let phi = 2.0 * PI * j as f64 / phi_points as f64;
            let mut st = HybridState::ground(layout.clone());
            st.apply_in_place(&gates::rot(qubit, 0.0, PI / 2.0))?;
            for _ in 0..n {
                st.apply_in_place(&mv)?;
            }
            st.apply_in_place(&gates::rot(qubit, phi, PI / 2.0))?;
            let p = st.populations(qubit)?[1];
            xs.push(phi);
            ys.push(p);
            if p > best.1 {
                best = (phi, p);
            }
        }
        // P(phi) = 0.5 + 0.5 cos(phi - phi0): extract phi0 by quadrature
        let mut re = 0.0;
        let mut im = 0.0;
        for (&x, &y) in xs.iter().zip(&ys) {
            re += y * x.cos();
            im += y * x.sin();
        }
        let phi0 = im.atan2(re);
        per_n.push((n, wrap_angle(phi0)));
        let _ = best;
    }
    // the pair phase follows unambiguously from two runs differing by
    // one pair (or directly from N = 2)
    let pair_phase = if let Some(w) = per_n.windows(2).find(|w| w[1].0 == w[0].0 + 2) {
        wrap_angle(w[1].1 - w[0].1)
    } else if per_n[0].0 == 2 {
        wrap_angle(per_n[0].1)
    } else {
        return Err(CalibError::Invalid(
            "need N = 2 or two N values differing by 2 to unwrap the pair phase".into(),
        ));
    };
    // consistency: each fitted total must equal (N/2) * pair_phase mod 2 pi
    for &(n, phin) in &per_n {
        let predicted = wrap_angle(pair_phase * n as f64 / 2.0);
        if wrap_angle(predicted - phin).abs() > 1e-6 {
            return Err(CalibError::Invalid(format!(
                "per-N phases inconsistent: N = {n} fitted {phin}, predicted {predicted}"
            )));
        }
    }
    // the sweep peak tracks the negated accumulated phase: an ideal pair
    // accumulates pi, an injected gamma_1 shifts it by -2 gamma_1
    Ok(MoveVzResult {
        pair_phase,
        gamma1_estimate: wrap_angle(PI - pair_phase) / 2.0,
        per_n,
    })
}

// ---------------------------------------------------------------------
// CZ phase calibration (gate level, five-level CZ)
// ---------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct CzPhaseCalResult {
    pub conditional_phase: f64,
    pub vz_cz_qubit: f64,
    pub vz_resonator: f64,
}

/// Extract the conditional phase and both single-component VZ
/// corrections of a CZ gate by Ramsey phase sweeps with and without a
/// control excitation in the resonator. The gate under test may carry
/// injected VZ offsets (a miscalibrated gate); `n_cz` repetitions
/// amplify the phases.
pub fn cz_phase_cal(
    device: &DeviceParams,
    cz_qubit: &str,
    move_qubit: &str,
    gate: &crate::hilbert::Operator,
    n_cz: usize,
) -> Result<CzPhaseCalResult, CalibError> {
    let n_max = device.truncation;
    let layout = Arc::new(SubsystemLayout::qubits_and_resonator(&[move_qubit, cz_qubit], n_max));
    let mv = gates::move_op(move_qubit, &JCPhases::ideal_move(), n_max);
    let phi_points = 24;

    // Ramsey on the CZ qubit, resonator prepared in |0> or |1>
    let ramsey_cz = |control: bool| -> Result<f64, CalibError> {
        let mut re = 0.0;
        let mut im = 0.0;
        for j in 0..phi_points {
            let phi = 2.0 * PI * j as f64 / phi_points as f64;
            let mut st = HybridState::ground(layout.clone());
            if control {
                st.apply_in_place(&gates::rot(move_qubit, 0.0, PI))?;
            }
            st.apply_in_place(&mv)?;
            st.apply_in_place(&gates::rot(cz_qubit, 0.0, PI / 2.0))?;
            for _ in 0..n_cz {
                st.apply_in_place(gate)?;
            }
            st.apply_in_place(&gates::rot(cz_qubit, phi, PI / 2.0))?;
            // depopulate the resonator so the marginal is clean
            st.apply_in_place(&mv)?;
            let p = st.populations(cz_qubit)?[1];
            re += p * phi.cos();
            im += p * phi.sin();
        }
        Ok(im.atan2(re))
    };
    // Ramsey on the MOVE qubit (its state transits the resonator during
    // the CZs): yields the resonator VZ correction
    let ramsey_move = || -> Result<f64, CalibError> {
        let mut re = 0.0;
        let mut im = 0.0;
        for j in 0..phi_points {
            let phi = 2.0 * PI * j as f64 / phi_points as f64;
            let mut st = HybridState::ground(layout.clone());
            st.apply_in_place(&gates::rot(move_qubit, 0.0, PI / 2.0))?;
            st.apply_in_place(&mv)?;
            for _ in 0..n_cz {
                st.apply_in_place(gate)?;
            }
            st.apply_in_place(&mv)?;
            // calibrated MOVE-pair correction
            st.apply_in_place(&gates::vz(move_qubit, PI, 3))?;
            st.apply_in_place(&gates::rot(move_qubit, phi, PI / 2.0))?;
            let p = st.populations(move_qubit)?[1];
            re += p * phi.cos();
            im += p * phi.sin();
        }
        Ok(im.atan2(re))
    };

    let phase_control_off = ramsey_cz(false)?;
    let phase_control_on = ramsey_cz(true)?;
    let phase_move = ramsey_move()?;
    let n = n_cz as f64;
    Ok(CzPhaseCalResult {
        conditional_phase: wrap_angle((phase_control_off - phase_control_on) / n),
        vz_cz_qubit: wrap_angle(-phase_control_off / n),
        vz_resonator: wrap_angle(-phase_move / n),
    })
}

// ---------------------------------------------------------------------
// resonator characterization (gate level + trajectories)
// ---------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct CrT1Result {
    pub t1_us: f64,
    pub points: Vec<(f64, f64)>,
}

/// Resonator relaxation: X_pi; MOVE; delay; MOVE; measure, fitted to
/// A exp(-t/T1) + C over the delays.
pub fn cr_t1(
    device: &DeviceParams,
    probe_qubit: &str,
    delays_us: &[f64],
    trajectories: usize,
    seed: u64,
) -> Result<CrT1Result, CalibError> {
    let n_max = device.truncation;
    let layout = Arc::new(SubsystemLayout::qubits_and_resonator(&[probe_qubit], n_max));
    let mv = gates::move_op(probe_qubit, &JCPhases::ideal_move(), n_max);
    let cr_channel = NoiseChannel::from_device(device, "CR", false)?;
    let points: Vec<(f64, f64)> = delays_us
        .par_iter()
        .map(|&t_us| {
            let survive: usize = (0..trajectories as u64)
                .map(|k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(
                        seed ^ (t_us.to_bits() & 0xffff_ffff),
                        k,
                    ));
                    let mut st = HybridState::ground(layout.clone());
                    st.apply_in_place(&gates::rot(probe_qubit, 0.0, PI)).unwrap();
                    st.apply_in_place(&mv).unwrap();
                    trajectory_step(&mut st, std::slice::from_ref(&cr_channel), t_us * 1e3, &mut rng)
                        .unwrap();
                    st.apply_in_place(&mv).unwrap();
                    let p_e = st.populations(probe_qubit).unwrap()[1];
                    usize::from(rng.gen_bool(p_e.clamp(0.0, 1.0)))
                })
                .sum();
            (t_us, survive as f64 / trajectories as f64)
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let model = |p: &[f64], x: f64| p[0] * (-x / p[1].max(1e-6)).exp() + p[2];
    let (fit, _) = levenberg_marquardt(&model, &xs, &ys, &[1.0, 5.0, 0.0], 400)?;
    Ok(CrT1Result { t1_us: fit[1], points })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CrRamseyResult {
    pub t2_star_us: f64,
    /// Observed oscillation frequency (MHz): |detuning - virtual|.
    pub freq_mhz: f64,
    pub points: Vec<(f64, f64)>,
}

/// Resonator Ramsey with a virtual detuning: X_half; MOVE; delay t;
/// MOVE; X_half(Delta_v t). The qubit-resonator detuning phase advances
/// the stored photon during the delay.
pub fn cr_ramsey(
    device: &DeviceParams,
    probe_qubit: &str,
    delays_us: &[f64],
    virtual_detuning_mhz: f64,
    detuning_mhz: f64,
    trajectories: usize,
    seed: u64,
) -> Result<CrRamseyResult, CalibError> {
    let n_max = device.truncation;
    let layout = Arc::new(SubsystemLayout::qubits_and_resonator(&[probe_qubit], n_max));
    let mv = gates::move_op(probe_qubit, &JCPhases::ideal_move(), n_max);
    let cr_channel = NoiseChannel::from_device(device, "CR", false)?;
    let delta = TWO_PI * detuning_mhz * 1e-3; // rad/ns
    let points: Vec<(f64, f64)> = delays_us
        .par_iter()
        .map(|&t_us| {
            let t_ns = t_us * 1e3;
            let mut acc = 0.0;
            for k in 0..trajectories as u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(
                    seed ^ (t_us.to_bits() >> 16),
                    k,
                ));
                let mut st = HybridState::ground(layout.clone());
                st.apply_in_place(&gates::rot(probe_qubit, 0.0, PI / 2.0)).unwrap();
                st.apply_in_place(&mv).unwrap();
                trajectory_step(&mut st, std::slice::from_ref(&cr_channel), t_ns, &mut rng)
                    .unwrap();
                // frame rotation of the stored photon against the qubit
                st.apply_in_place(&gates::vz_resonator_op(-delta * t_ns, n_max + 1)).unwrap();
                st.apply_in_place(&mv).unwrap();
                st.apply_in_place(&gates::vz(probe_qubit, PI, 3)).unwrap();
                // advance the analysis-pulse axis with the frame drift so
                // the fringes slow to |detuning - virtual|
                let phi = -TWO_PI * virtual_detuning_mhz * 1e-3 * t_ns;
                st.apply_in_place(&gates::rot(probe_qubit, phi, PI / 2.0)).unwrap();
                let p_e = st.populations(probe_qubit).unwrap()[1];
                acc += f64::from(rng.gen_bool(p_e.clamp(0.0, 1.0)));
            }
            (t_us, acc / trajectories as f64)
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    // decaying cosine: p0 e^{-t/p1} cos(2 pi p2 t + p3) + p4, t in us,
    // p2 in MHz
    let guess_freq = (detuning_mhz - virtual_detuning_mhz).abs().max(0.05);
    let model = |p: &[f64], x: f64| {
        p[0] * (-x / p[1].max(1e-6)).exp() * (TWO_PI * p[2] * x + p[3]).cos() + p[4]
    };
    let (fit, _) = levenberg_marquardt(
        &model,
        &xs,
        &ys,
        &[0.5, 10.0, guess_freq, 0.0, 0.5],
        500,
    )?;
    Ok(CrRamseyResult { t2_star_us: fit[1], freq_mhz: fit[2].abs(), points })
}

/// Dominant FFT frequency (MHz) of a uniformly sampled trace, with 4x
/// zero padding and parabolic peak interpolation.
pub fn dominant_frequency_mhz(times_us: &[f64], values: &[f64]) -> f64 {
    let n = values.len();
    let dt = (times_us[n - 1] - times_us[0]) / (n - 1) as f64;
    let mean = values.iter().sum::<f64>() / n as f64;
    let padded = n * 4;
    let mut power = Vec::with_capacity(padded / 2);
    for k in 0..padded / 2 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, v) in values.iter().enumerate() {
            let arg = TWO_PI * k as f64 * j as f64 / padded as f64;
            re += (v - mean) * arg.cos();
            im -= (v - mean) * arg.sin();
        }
        power.push(re * re + im * im);
    }
    let kmax = power
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(k, _)| k)
        .unwrap_or(1);
    // parabolic interpolation around the peak
    let k_refined = if kmax + 1 < power.len() && kmax >= 1 {
        let (y0, y1, y2) = (power[kmax - 1], power[kmax], power[kmax + 1]);
        let denom = y0 - 2.0 * y1 + y2;
        if denom.abs() > 1e-30 {
            kmax as f64 + 0.5 * (y0 - y2) / denom
        } else {
            kmax as f64
        }
    } else {
        kmax as f64
    };
    k_refined / (padded as f64 * dt)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CrFrequencyResult {
    /// Extracted qubit-resonator detuning (MHz).
    pub detuning_mhz: f64,
    /// FFT bin width (MHz) of the underlying traces.
    pub bin_width_mhz: f64,
    pub scan: Vec<(f64, f64)>,
}

/// Resonator frequency extraction: sweep the virtual detuning, FFT the
/// Ramsey trace, and fit the sawtooth |Delta - Delta_v| for the zero
/// crossing nearest the window center.
pub fn cr_frequency(
    device: &DeviceParams,
    probe_qubit: &str,
    delays_us: &[f64],
    virtual_grid_mhz: &[f64],
    detuning_mhz: f64,
    trajectories: usize,
    seed: u64,
) -> Result<CrFrequencyResult, CalibError> {
    let scan: Vec<(f64, f64)> = virtual_grid_mhz
        .iter()
        .map(|&dv| {
            let r = cr_ramsey(device, probe_qubit, delays_us, dv, detuning_mhz, trajectories, seed)?;
            let xs: Vec<f64> = r.points.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = r.points.iter().map(|p| p.1).collect();
            Ok((dv, dominant_frequency_mhz(&xs, &ys)))
        })
        .collect::<Result<_, CalibError>>()?;
    // least squares over the aliasing model f = |Delta - Delta_v| on the
    // sawtooth wings; points in the near-DC trough carry the leakage
    // bias of the finite window and are excluded
    let n = delays_us.len();
    let span = delays_us[n - 1] - delays_us[0];
    let bin = 1.0 / span;
    let center = 0.5 * (virtual_grid_mhz[0] + virtual_grid_mhz[virtual_grid_mhz.len() - 1]);
    let half_width = 0.5 * (virtual_grid_mhz[virtual_grid_mhz.len() - 1] - virtual_grid_mhz[0]);
    let mut best = (center, f64::INFINITY);
    let n_cand = 4001;
    for i in 0..n_cand {
        let cand = center - half_width + 2.0 * half_width * i as f64 / (n_cand - 1) as f64;
        let wing: Vec<&(f64, f64)> = scan.iter().filter(|(_, f)| *f > 1.5 * bin).collect();
        if wing.len() < 3 {
            continue;
        }
        let sse: f64 =
            wing.iter().map(|&&(dv, f)| ((cand - dv).abs() - f).powi(2)).sum::<f64>()
                / wing.len() as f64;
        if sse < best.1 {
            best = (cand, sse);
        }
    }
    Ok(CrFrequencyResult {
        detuning_mhz: best.0,
        bin_width_mhz: 1.0 / span,
        scan,
    })
}

// ---------------------------------------------------------------------
// JC ladder (gate level, guard bypassed)
// ---------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct JcLadderResult {
    pub ladder_qubit_populations: Vec<f64>,
    pub spectator_populations: Vec<f64>,
    pub resonator_populations: Vec<f64>,
}

/// Climb the JC ladder: (X_pi; MOVE) repeated `n_steps` times on the
/// ladder qubit, with an idle spectator read out alongside.
pub fn jc_ladder(
    device: &DeviceParams,
    qubit: &str,
    spectator: &str,
    n_steps: usize,
) -> Result<JcLadderResult, CalibError> {
    let n_max = device.truncation;
    if n_steps >= n_max {
        return Err(CalibError::TruncationOverflow { steps: n_steps, n_max });
    }
    if n_steps < 1 {
        return Err(CalibError::Invalid("need at least one ladder step".into()));
    }
    let layout = Arc::new(SubsystemLayout::qubits_and_resonator(&[qubit, spectator], n_max));
    let mv = gates::move_op(qubit, &JCPhases::ideal_move(), n_max);
    let mut st = HybridState::ground(layout.clone());
    for _ in 0..n_steps {
        st.apply_in_place(&gates::rot(qubit, 0.0, PI))?;
        st.apply_in_place(&mv)?;
    }
    Ok(JcLadderResult {
        ladder_qubit_populations: st.populations(qubit)?,
        spectator_populations: st.populations(spectator)?,
        resonator_populations: st.populations("CR")?,
    })
}

// ---------------------------------------------------------------------
// populated-resonator Ramsey (gate level)
// ---------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct PopulatedRamseyResult {
    /// Fitted offsets of the Delta and 2 Delta components.
    pub phi_fit: f64,
    pub phi_prime_fit: f64,
    /// Extracted two-photon manifold phases.
    pub gamma2: f64,
    pub zeta2: f64,
    pub points: Vec<(f64, f64)>,
}

/// Populated-resonator Ramsey: load one photon through `load_qubit`,
/// run a Ramsey on `probe_qubit` whose MOVEs carry `probe_phases`, with
/// physical Z rotations `varphi` after the first and `varphi_prime`
/// after the second MOVE. Fits
/// P_e = (1 - c2^2 cos(Delta t + phi) + s2^2 cos(2 Delta t + phi'))/2
/// and inverts the phase relations for (gamma_2, zeta_2).
#[allow(clippy::too_many_arguments)]
pub fn populated_ramsey(
    device: &DeviceParams,
    load_qubit: &str,
    probe_qubit: &str,
    delays_ns: &[f64],
    detuning_mhz: f64,
    probe_phases: &JCPhases,
    varphi: f64,
    varphi_prime: f64,
) -> Result<PopulatedRamseyResult, CalibError> {
    let delta = TWO_PI * detuning_mhz * 1e-3; // rad/ns
    let span = delays_ns[delays_ns.len() - 1] - delays_ns[0];
    if delta.abs() * span < TWO_PI {
        return Err(CalibError::Invalid(
            "delay span resolves neither Delta nor 2 Delta".into(),
        ));
    }
    let points: Vec<(f64, f64)> = delays_ns
        .iter()
        .map(|&t| {
            populated_ramsey_point(
                device,
                Some(load_qubit),
                probe_qubit,
                t,
                delta,
                probe_phases,
                varphi,
                varphi_prime,
            )
            .map(|p| (t, p))
        })
        .collect::<Result<_, _>>()?;
    let c2 = (2f64.sqrt() * PI / 2.0).cos();
    let s2 = (2f64.sqrt() * PI / 2.0).sin();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let model = move |p: &[f64], t: f64| {
        0.5 * (1.0 - c2 * c2 * (delta * t + p[0]).cos() + s2 * s2 * (2.0 * delta * t + p[1]).cos())
    };
    // coarse phase grid, then LM refinement
    let mut init = [0.0, 0.0];
    let mut best = f64::INFINITY;
    for i in 0..24 {
        for j in 0..24 {
            let cand = [TWO_PI * i as f64 / 24.0 - PI, TWO_PI * j as f64 / 24.0 - PI];
            let sse: f64 =
                xs.iter().zip(&ys).map(|(&x, &y)| (y - model(&cand, x)).powi(2)).sum();
            if sse < best {
                best = sse;
                init = cand;
            }
        }
    }
    let (fit, _) = levenberg_marquardt(&model, &xs, &ys, &init, 300)?;
    let (phi_fit, phi_prime_fit) = (wrap_angle(fit[0]), wrap_angle(fit[1]));
    // measured offsets: phi = 2 gamma2 + 2 zeta2 - varphi',
    //                   phi' = 2 gamma2 - varphi' + varphi
    let gamma2 = wrap_angle(phi_prime_fit + varphi_prime - varphi) / 2.0;
    let zeta2 = wrap_angle(phi_fit - phi_prime_fit + varphi) / 2.0;
    Ok(PopulatedRamseyResult { phi_fit, phi_prime_fit, gamma2, zeta2, points })
}

/// One delay point of the (optionally) populated Ramsey; `load_qubit`
/// None leaves the resonator in vacuum (the standard-Ramsey limit).
#[allow(clippy::too_many_arguments)]
pub fn populated_ramsey_point(
    device: &DeviceParams,
    load_qubit: Option<&str>,
    probe_qubit: &str,
    t_ns: f64,
    delta_rad_ns: f64,
    probe_phases: &JCPhases,
    varphi: f64,
    varphi_prime: f64,
) -> Result<f64, CalibError> {
    let n_max = device.truncation;
    let qubits: Vec<&str> = match load_qubit {
        Some(l) => vec![l, probe_qubit],
        None => vec![probe_qubit],
    };
    let layout = Arc::new(SubsystemLayout::qubits_and_resonator(&qubits, n_max));
    let mut st = HybridState::ground(layout.clone());
    if let Some(l) = load_qubit {
        st.apply_in_place(&gates::rot(l, 0.0, PI))?;
        st.apply_in_place(&gates::move_op(l, &JCPhases::ideal_move(), n_max))?;
    }
    let mv = gates::move_op(probe_qubit, probe_phases, n_max);
    st.apply_in_place(&gates::rot(probe_qubit, 0.0, PI / 2.0))?;
    st.apply_in_place(&mv)?;
    st.apply_in_place(&gates::vz(probe_qubit, varphi, 3))?;
    // free evolution: the resonator frame advances against the probe
    st.apply_in_place(&gates::vz_resonator_op(-delta_rad_ns * t_ns, n_max + 1))?;
    st.apply_in_place(&mv)?;
    st.apply_in_place(&gates::vz(probe_qubit, varphi_prime, 3))?;
    st.apply_in_place(&gates::rot(probe_qubit, 0.0, PI / 2.0))?;
    Ok(st.populations(probe_qubit)?[1])
}

/// General-n populated Ramsey on an arbitrary initial resonator photon
/// distribution (noiseless, zero phases). Detection filters the
/// contributions beating at optical scales, so neighboring-n coherences
/// do not survive: the simulation averages over initial Fock-phase
/// offsets, leaving exactly the |alpha_n|^2-diagonal closed form.
pub fn populated_ramsey_general(
    device: &DeviceParams,
    probe_qubit: &str,
    resonator_amplitudes: &[C64],
    t_ns: f64,
    delta_rad_ns: f64,
) -> Result<f64, CalibError> {
    let n_max = device.truncation;
    assert!(resonator_amplitudes.len() <= n_max + 1);
    let layout = Arc::new(SubsystemLayout::qubits_and_resonator(&[probe_qubit], n_max));
    let mv = gates::move_op(probe_qubit, &JCPhases::ideal_move(), n_max);
    let k_phases = 8; // kills the delta-n = 1, 2 coherences exactly
    let mut acc = 0.0;
    for k in 0..k_phases {
        let theta = 2.0 * PI * k as f64 / k_phases as f64;
        let mut amps = vec![C64::new(0.0, 0.0); layout.dim()];
        for (n, a) in resonator_amplitudes.iter().enumerate() {
            amps[layout.basis_index(&[0, n])] = *a * C64::new(0.0, theta * n as f64).exp();
        }
        let mut st = HybridState::from_amplitudes(layout.clone(), amps);
        st.renormalize();
        st.apply_in_place(&gates::rot(probe_qubit, 0.0, PI / 2.0))?;
        st.apply_in_place(&mv)?;
        st.apply_in_place(&gates::vz_resonator_op(-delta_rad_ns * t_ns, n_max + 1))?;
        st.apply_in_place(&mv)?;
        st.apply_in_place(&gates::rot(probe_qubit, 0.0, PI / 2.0))?;
        acc += st.populations(probe_qubit)?[1];
    }
    Ok(acc / k_phases as f64)
}

/// Closed-form general-n populated Ramsey probability,
/// P_e = 1/2 sum_n w_n {1 + c_n^2 c_{n+1}^2
///       - (c_{n+1}^2 s_n^2 + c_n^2 s_{n+1}^2) cos(Delta t)
///       + s_n^2 s_{n+1}^2 cos(2 Delta t)}.
/// The constant term is c_n^2 c_{n+1}^2 (it reduces to the published
/// two-photon expression for n <= 1, where c_1 = 0).
pub fn populated_ramsey_closed_form(
    resonator_weights: &[f64],
    t_ns: f64,
    delta_rad_ns: f64,
    theta: f64,
) -> f64 {
    let c = |n: usize| ((n as f64).sqrt() * theta / 2.0).cos();
    let s = |n: usize| ((n as f64).sqrt() * theta / 2.0).sin();
    let dt = delta_rad_ns * t_ns;
    0.5 * resonator_weights
        .iter()
        .enumerate()
        .map(|(n, w)| {
            w * (1.0 + c(n).powi(2) * c(n + 1).powi(2)
                - (c(n + 1).powi(2) * s(n).powi(2) + c(n).powi(2) * s(n + 1).powi(2)) * dt.cos()
                + s(n).powi(2) * s(n + 1).powi(2) * (2.0 * dt).cos())
        })
        .sum::<f64>()
}

use rand::Rng;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::paper_qpu;
    use crate::gates::CzModel;
    use approx::assert_abs_diff_eq;

    fn small_device() -> DeviceParams {
        paper_qpu()
    }

    #[test]
    fn chevron_flat_without_couplings() {
        let mut dev = small_device();
        for c in &mut dev.couplings {
            c.beta = Some(1e-12);
        }
        let r = chevron(ChevronKind::Move, &dev, "QB2", &[4.2, 4.22, 4.24], &[5.0, 5.4], 80.0)
            .unwrap();
        for v in &r.data {
            assert!((v - 1.0).abs() < 1e-6, "population moved: {v}");
        }
    }

    #[test]
    fn move_chevron_full_transfer_on_resonance() {
        let dev = small_device();
        let (f_q, f_c) = move_gate_point(&dev, "QB2").unwrap();
        let tau_m = dev.durations_of("QB2").unwrap().tau_m_ns;
        // half-Rabi transfer at the dressed resonance
        let grid_q: Vec<f64> = (-6..=6).map(|i| f_q + i as f64 * 0.002).collect();
        let r = chevron(ChevronKind::Move, &dev, "QB2", &grid_q, &[f_c], tau_m).unwrap();
        let best_pe = r.data.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(best_pe < 0.01, "deepest transfer P_e = {best_pe}");
        assert!((r.optimum[0] - f_q).abs() < 0.004, "optimum {} vs {}", r.optimum[0], f_q);
    }

    #[test]
    fn cz_chevron_optimum_at_shifted_resonance() {
        let dev = small_device();
        let (f_q, f_c) = cz_gate_point(&dev, "QB2").unwrap();
        let tau = dev.durations_of("QB2").unwrap().tau_cz_ns;
        let step = 0.003;
        let grid_q: Vec<f64> = (-5..=5).map(|i| f_q + i as f64 * step).collect();
        let r = chevron(ChevronKind::Cz, &dev, "QB2", &grid_q, &[f_c], tau).unwrap();
        // the exact |eg1> / |fg0> crossing from trio diagonalization
        let mut best = (f_q, f64::INFINITY);
        for k in 0..=200 {
            let fq = f_q - 0.01 + 0.02 * k as f64 / 200.0;
            let cfg = crate::hamiltonian::TrioConfig::from_device(
                &dev,
                "QB2",
                Some(fq),
                Some(f_c),
            )
            .unwrap();
            let gap = crate::hamiltonian::trio_pair_gap(&cfg, 3, 3, [1, 0, 1], [2, 0, 0]);
            if gap < best.1 {
                best = (fq, gap);
            }
        }
        assert!(
            (r.optimum[0] - best.0).abs() <= step + 1e-9,
            "optimum {} vs exact crossing {}",
            r.optimum[0],
            best.0
        );
        // the dressed resonance condition holds at the coarse-grid level
        let eff = effective_params_at(&dev, "QB2", Some(r.optimum[0]), Some(f_c)).unwrap();
        assert!(
            (eff.delta - eff.alpha_q).abs() / TWO_PI < 0.01,
            "dressed condition off by {} GHz",
            (eff.delta - eff.alpha_q).abs() / TWO_PI
        );
    }

    #[test]
    fn fine_cal_recovers_injected_offset() {
        let dev = small_device();
        let phi: Vec<f64> = (0..8).map(|j| TWO_PI * j as f64 / 8.0).collect();
        let grid: Vec<f64> = (-8..=8).map(|i| i as f64 * 0.0008).collect();
        let reference = move_fine_cal(&dev, "QB2", 4, &phi, &grid, 0.0).unwrap();
        let offset = 0.0024;
        let shifted = move_fine_cal(&dev, "QB2", 4, &phi, &grid, offset).unwrap();
        let step = 0.0008;
        assert!(
            ((shifted.optimum[0] + offset) - reference.optimum[0]).abs() < step + 1e-12,
            "reference {}, shifted {}",
            reference.optimum[0],
            shifted.optimum[0]
        );
    }

    #[test]
    fn fine_cal_fringes_grow_with_moves() {
        let dev = small_device();
        // at the fine-calibrated point the fringes (nearly) vanish; the
        // closed-form gate point retains a small residual from the
        // counter-rotating terms, which the calibration absorbs
        let phi: Vec<f64> = (0..8).map(|j| TWO_PI * j as f64 / 8.0).collect();
        let grid: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.0006).collect();
        let cal = move_fine_cal(&dev, "QB2", 4, &phi, &grid, 0.0).unwrap();
        let delta_star = cal.optimum[0];
        let a0 = move_fine_fringe_amplitude(&dev, "QB2", 4, delta_star, 8).unwrap();
        let a4 = move_fine_fringe_amplitude(&dev, "QB2", 4, delta_star + 0.001, 8).unwrap();
        let a8 = move_fine_fringe_amplitude(&dev, "QB2", 8, delta_star + 0.001, 8).unwrap();
        assert!(a4 > 3.0 * a0, "detuned fringes should appear: {a4} vs {a0}");
        assert!(a8 > 1.5 * a4, "sensitivity grows with N: {a8} vs {a4}");
    }

    #[test]
    fn vz_cal_recovers_injected_phase() {
        let dev = small_device();
        let r0 = move_vz_cal(&dev, "QB2", &[2, 4, 6], 48, 0.0).unwrap();
        assert_abs_diff_eq!(r0.gamma1_estimate, 0.0, epsilon = 1e-9);
        let r = move_vz_cal(&dev, "QB2", &[2, 4, 6], 48, 0.3).unwrap();
        assert_abs_diff_eq!(r.gamma1_estimate, 0.3, epsilon = 1e-3);
        // two disjoint N subsets agree
        let ra = move_vz_cal(&dev, "QB2", &[2, 4], 48, 0.3).unwrap();
        let rb = move_vz_cal(&dev, "QB2", &[6, 8], 48, 0.3).unwrap();
        assert_abs_diff_eq!(ra.pair_phase, rb.pair_phase, epsilon = 1e-6);
    }

    #[test]
    fn cz_phase_cal_ideal_gate() {
        let dev = small_device();
        let gate = gates::cz("QB1", PI, 0.0, 0.0, &CzModel::Ideal, dev.truncation);
        let r = cz_phase_cal(&dev, "QB1", "QB2", &gate, 1).unwrap();
        assert_abs_diff_eq!(wrap_angle(r.conditional_phase - PI), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.vz_cz_qubit, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.vz_resonator, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn cz_phase_cal_recovers_injections_and_five_level_phase() {
        let dev = small_device();
        // injected single-component offsets on an otherwise ideal gate
        let gate = gates::cz("QB1", PI, 0.21, -0.35, &CzModel::Ideal, dev.truncation);
        let r = cz_phase_cal(&dev, "QB1", "QB2", &gate, 1).unwrap();
        assert_abs_diff_eq!(r.vz_cz_qubit, -0.21, epsilon = 1e-3);
        assert_abs_diff_eq!(r.vz_resonator, 0.35, epsilon = 1e-3);
        // five-level gate slightly off the operating point: the measured
        // conditional phase matches the analytic formula
        let f_c = 5.2;
        let f_q = solve_cz_resonance(&dev, "QB1", f_c).unwrap();
        let eff = effective_params_at(&dev, "QB1", Some(f_q + 0.001), Some(f_c)).unwrap();
        let t = TWO_PI / eff.omega_rabi * 1.02;
        let (gate5, _) = gates::cz_five_level_calibrated("QB1", &eff, t, dev.truncation);
        let r5 = cz_phase_cal(&dev, "QB1", "QB2", &gate5, 1).unwrap();
        let expected = crate::hamiltonian::cz_conditional_phase(t, &eff);
        assert!(
            wrap_angle(r5.conditional_phase - expected).abs() < 1e-2,
            "measured {} vs analytic {}",
            r5.conditional_phase,
            expected
        );
    }

    #[test]
    fn jc_ladder_two_steps() {
        let dev = small_device();
        let r = jc_ladder(&dev, "QB3", "QB2", 2).unwrap();
        let s2sq = (2f64.sqrt() * PI / 2.0).sin().powi(2);
        assert_abs_diff_eq!(r.ladder_qubit_populations[0], s2sq, epsilon = 1e-9);
        assert_abs_diff_eq!(r.ladder_qubit_populations[1], 1.0 - s2sq, epsilon = 1e-9);
        assert_abs_diff_eq!(r.spectator_populations[0], 1.0, epsilon = 1e-12);
        // single step fully de-excites into |1>
        let r1 = jc_ladder(&dev, "QB3", "QB2", 1).unwrap();
        assert_abs_diff_eq!(r1.ladder_qubit_populations[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r1.resonator_populations[1], 1.0, epsilon = 1e-12);
        // truncation overflow
        assert!(matches!(
            jc_ladder(&dev, "QB3", "QB2", dev.truncation),
            Err(CalibError::TruncationOverflow { .. })
        ));
    }

    #[test]
    fn ladder_matches_amplitude_product_oracle() {
        // independent oracle: amplitudes over (qubit, n) built from the
        // analytic c_n / s_n branching factors
        let dev = small_device();
        let n_max = dev.truncation;
        for steps in 1..n_max {
            let r = jc_ladder(&dev, "QB3", "QB2", steps).unwrap();
            let mut amps = vec![C64::new(0.0, 0.0); 2 * (n_max + 1)];
            amps[0] = C64::new(1.0, 0.0); // (g, 0)
            let c = |n: usize| ((n as f64).sqrt() * PI / 2.0).cos();
            let s = |n: usize| ((n as f64).sqrt() * PI / 2.0).sin();
            let mi = C64::new(0.0, -1.0);
            for _ in 0..steps {
                // X_pi: swap g <-> e rows with -i
                let mut next = vec![C64::new(0.0, 0.0); amps.len()];
                for n in 0..=n_max {
                    next[n + (n_max + 1)] = mi * amps[n];
                    next[n] = mi * amps[n + (n_max + 1)];
                }
                // MOVE
                let mut after = vec![C64::new(0.0, 0.0); amps.len()];
                for n in 0..=n_max {
                    let g = next[n];
                    if n >= 1 {
                        after[n] += C64::new(c(n), 0.0) * g;
                        after[n - 1 + (n_max + 1)] += mi * C64::new(s(n), 0.0) * g;
                    } else {
                        after[0] += g;
                    }
                    let e = next[n + (n_max + 1)];
                    if n + 1 <= n_max {
                        after[n + (n_max + 1)] += C64::new(c(n + 1), 0.0) * e;
                        after[n + 1] += mi * C64::new(s(n + 1), 0.0) * e;
                    } else {
                        after[n + (n_max + 1)] += e;
                    }
                }
                amps = after;
            }
            let p_g: f64 = (0..=n_max).map(|n| amps[n].norm_sqr()).sum();
            assert_abs_diff_eq!(r.ladder_qubit_populations[0], p_g, epsilon = 1e-10);
        }
    }

    #[test]
    fn populated_ramsey_zero_delay_and_limits() {
        let dev = small_device();
        let s2sq = (2f64.sqrt() * PI / 2.0).sin().powi(2);
        let p0 = populated_ramsey_point(
            &dev,
            Some("QB3"),
            "QB2",
            0.0,
            TWO_PI * 0.281,
            &JCPhases::ideal_move(),
            0.0,
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(p0, s2sq, epsilon = 1e-10);
        // n = 0: standard Ramsey (1 - cos Delta t)/2
        let delta = TWO_PI * 0.281;
        for &t in &[0.0, 1.7, 3.9] {
            let p = populated_ramsey_point(
                &dev,
                None,
                "QB2",
                t,
                delta,
                &JCPhases::ideal_move(),
                0.0,
                0.0,
            )
            .unwrap();
            assert_abs_diff_eq!(p, 0.5 * (1.0 - (delta * t).cos()), epsilon = 1e-10);
        }
    }

    #[test]
    fn populated_ramsey_matches_printed_form_and_recovers_phases() {
        let dev = small_device();
        let delta_mhz = 281.0;
        let delta = TWO_PI * delta_mhz * 1e-3;
        let delays: Vec<f64> = (0..160).map(|i| i as f64 * 0.11).collect();
        // zero phases: matches the two-photon closed form
        let c2 = (2f64.sqrt() * PI / 2.0).cos();
        let s2 = (2f64.sqrt() * PI / 2.0).sin();
        for &t in &[0.9, 2.3, 5.1] {
            let p = populated_ramsey_point(
                &dev,
                Some("QB3"),
                "QB2",
                t,
                delta,
                &JCPhases::ideal_move(),
                0.0,
                0.0,
            )
            .unwrap();
            let expect = 0.5
                * (1.0 - c2 * c2 * (delta * t).cos() + s2 * s2 * (2.0 * delta * t).cos());
            assert_abs_diff_eq!(p, expect, epsilon = 1e-10);
        }
        // inject (gamma2, zeta2), recover through the fit
        let mut phases = JCPhases::ideal_move();
        let (g2, z2) = (0.59, 0.775);
        phases.set_manifold(2, ManifoldPhases { gamma: g2, zeta: z2, chi: 0.3 });
        let r = populated_ramsey(&dev, "QB3", "QB2", &delays, delta_mhz, &phases, 0.0, 0.0)
            .unwrap();
        assert_abs_diff_eq!(r.gamma2, g2, epsilon = 1e-3);
        assert_abs_diff_eq!(r.zeta2, z2, epsilon = 1e-3);
        // applying the derived corrections restores the ideal curve
        let (vphi, vphi_p) = (2.0 * r.zeta2, 2.0 * r.gamma2 + 2.0 * r.zeta2);
        for &t in &[0.7, 1.9, 4.2] {
            let corrected = populated_ramsey_point(
                &dev, Some("QB3"), "QB2", t, delta, &phases, vphi, vphi_p,
            )
            .unwrap();
            let ideal = populated_ramsey_point(
                &dev,
                Some("QB3"),
                "QB2",
                t,
                delta,
                &JCPhases::ideal_move(),
                0.0,
                0.0,
            )
            .unwrap();
            assert_abs_diff_eq!(corrected, ideal, epsilon = 1e-9);
        }
    }

    #[test]
    fn general_superposition_matches_closed_form() {
        let mut dev = small_device();
        dev.truncation = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let delta = TWO_PI * 0.17;
        for _ in 0..5 {
            let mut amps: Vec<C64> = (0..4)
                .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            amps.iter_mut().for_each(|a| *a /= norm);
            let weights: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
            for &t in &[0.8, 2.9, 6.4] {
                let sim =
                    populated_ramsey_general(&dev, "QB2", &amps, t, delta).unwrap();
                let formula = populated_ramsey_closed_form(&weights, t, delta, PI);
                assert_abs_diff_eq!(sim, formula, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn resonator_t1_recovered() {
        let dev = small_device();
        let delays: Vec<f64> = (0..10).map(|i| 0.4 + i as f64 * 1.4).collect();
        let r = cr_t1(&dev, "QB2", &delays, 3000, 7).unwrap();
        assert!(
            (r.t1_us - 5.53).abs() / 5.53 < 0.05,
            "fitted T1 = {} vs configured 5.53",
            r.t1_us
        );
    }

    #[test]
    fn resonator_ramsey_t2_and_frequency() {
        let dev = small_device();
        let delays: Vec<f64> = (0..64).map(|i| 0.05 + i as f64 * 0.35).collect();
        // virtual detuning brings the oscillation near 1 MHz
        let r = cr_ramsey(&dev, "QB2", &delays, 280.0, 281.0, 1500, 3).unwrap();
        assert!(
            (r.t2_star_us - 10.9).abs() / 10.9 < 0.10,
            "fitted T2* = {} vs configured 10.9",
            r.t2_star_us
        );
        assert!((r.freq_mhz - 1.0).abs() < 0.15, "observed freq {}", r.freq_mhz);
    }

    #[test]
    fn sawtooth_frequency_extraction() {
        let dev = small_device();
        let delays: Vec<f64> = (0..48).map(|i| 0.05 + i as f64 * 0.11).collect();
        let grid: Vec<f64> = (0..11).map(|i| 277.0 + i as f64 * 0.8).collect();
        let r = cr_frequency(&dev, "QB2", &delays, &grid, 281.0, 600, 5).unwrap();
        assert!(
            (r.detuning_mhz - 281.0).abs() < r.bin_width_mhz,
            "extracted {} +- bin {}",
            r.detuning_mhz,
            r.bin_width_mhz
        );
    }
}
