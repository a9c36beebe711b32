//! Native gate unitaries in the computational frame: single-qubit
//! rotations, virtual Z, the MOVE operation (Jaynes-Cummings exchange at
//! theta = pi), the qubit-resonator CZ gate, and the general JC gate with
//! per-manifold phases.
//!
//! Local operator convention: two-site gates act on (qubit, resonator)
//! with local index `q * (n_max + 1) + n`, qubit levels g/e/f = 0/1/2.

use crate::hamiltonian::{five_level_propagator, EffectiveCouplings};
use crate::hilbert::{HilbertError, HybridState, Operator};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Phases of one excitation manifold of the JC gate.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ManifoldPhases {
    pub gamma: f64,
    pub zeta: f64,
    pub chi: f64,
}

/// Exchange angle and per-manifold phases parametrizing the JC gate.
/// `manifolds[i]` holds the phases of manifold n = i + 1; missing entries
/// are zero. Defaults to an ideal MOVE (theta = pi, all phases zero).
#[derive(Debug, Clone, PartialEq)]
pub struct JCPhases {
    pub theta: f64,
    pub manifolds: Vec<ManifoldPhases>,
}

impl Default for JCPhases {
    fn default() -> Self {
        Self { theta: PI, manifolds: Vec::new() }
    }
}

impl JCPhases {
    pub fn ideal_move() -> Self {
        Self::default()
    }

    pub fn with_theta(theta: f64) -> Self {
        Self { theta, manifolds: Vec::new() }
    }

    pub fn manifold(&self, n: usize) -> ManifoldPhases {
        assert!(n >= 1);
        self.manifolds.get(n - 1).copied().unwrap_or_default()
    }

    pub fn set_manifold(&mut self, n: usize, phases: ManifoldPhases) {
        assert!(n >= 1);
        if self.manifolds.len() < n {
            self.manifolds.resize(n, ManifoldPhases::default());
        }
        self.manifolds[n - 1] = phases;
    }

    /// Frame factors of a JC gate executed at schedule time `t_ns` with
    /// qubit-resonator detuning `delta_omega` (rad/ns): chi_n = delta * t
    /// for every manifold, gamma = zeta = 0.
    pub fn frame_tracked(theta: f64, delta_omega: f64, t_ns: f64, n_max: usize) -> Self {
        let chi = delta_omega * t_ns;
        Self {
            theta,
            manifolds: (0..n_max).map(|_| ManifoldPhases { gamma: 0.0, zeta: 0.0, chi }).collect(),
        }
    }
}

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

fn phase(p: f64) -> C64 {
    C64::new(0.0, -p).exp()
}

/// General Jaynes-Cummings gate on (qubit, resonator), block diagonal in
/// the total excitation number:
///   |g,n>  ->  c_n^- |g,n> - i s_n^+ |e,n-1>
///   |e,n>  ->  c_{n+1}^+ |e,n> - i s_{n+1}^- |g,n+1>
/// with c_n^± = e^{-i(gamma_n ± zeta_n)} cos(sqrt(n) theta / 2) and
/// s_n^± = e^{-i(gamma_n ± chi_n)} sin(sqrt(n) theta / 2). The qubit |f>
/// level is inert, as is the dangling |e, n_max> state cut by truncation.
pub fn jc_gate(theta: f64, phases: &JCPhases, n_max: usize) -> Operator {
    let nr = n_max + 1;
    let dim = 3 * nr;
    let idx = |q: usize, n: usize| q * nr + n;
    let mut m = vec![czero(); dim * dim];
    let mut set = |r: usize, c: usize, v: C64| m[r * dim + c] = v;
    // f level and the truncated top |e, n_max> act as identity
    for n in 0..nr {
        set(idx(2, n), idx(2, n), C64::new(1.0, 0.0));
    }
    set(idx(1, n_max), idx(1, n_max), C64::new(1.0, 0.0));
    set(idx(0, 0), idx(0, 0), C64::new(1.0, 0.0));
    for n in 1..=n_max {
        let p = phases.manifold(n);
        let half = (n as f64).sqrt() * theta / 2.0;
        let (c, s) = (half.cos(), half.sin());
        let c_minus = phase(p.gamma - p.zeta) * c;
        let c_plus = phase(p.gamma + p.zeta) * c;
        let s_plus = phase(p.gamma + p.chi) * s;
        let s_minus = phase(p.gamma - p.chi) * s;
        let mi = C64::new(0.0, -1.0);
        // column |g,n>
        set(idx(0, n), idx(0, n), c_minus);
        set(idx(1, n - 1), idx(0, n), mi * s_plus);
        // column |e,n-1>
        set(idx(1, n - 1), idx(1, n - 1), c_plus);
        set(idx(0, n), idx(1, n - 1), mi * s_minus);
    }
    Operator::unitary_unchecked(vec![String::new(), "CR".into()], m)
}

/// MOVE operation on `qubit`: the JC gate at the phases' exchange angle
/// (pi for a calibrated move).
pub fn move_op(qubit: &str, phases: &JCPhases, n_max: usize) -> Operator {
    let mut op = jc_gate(phases.theta, phases, n_max);
    op.targets[0] = qubit.to_string();
    op
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuardResult {
    Ok,
    /// Probability found outside the MOVE-safe subspace.
    Violation(f64),
}

/// MOVE is defined only on inputs with at most one excitation in the
/// qubit-resonator pair: any |e, n>=1> or |f, .> weight violates the
/// guard.
pub fn move_guard(state: &HybridState, qubit: &str, tolerance: f64) -> Result<GuardResult, HilbertError> {
    let qa = state.layout.index_of(qubit)?;
    let ra = state.layout.index_of("CR")?;
    let rq = state.layout.stride(qa);
    let rr = state.layout.stride(ra);
    let dq = state.layout.subsystems()[qa].dim;
    let dr = state.layout.subsystems()[ra].dim;
    let mut bad = 0.0;
    for (i, a) in state.amplitudes.iter().enumerate() {
        let q = i / rq % dq;
        let n = i / rr % dr;
        if q == 2 || (q == 1 && n >= 1) {
            bad += a.norm_sqr();
        }
    }
    Ok(if bad > tolerance { GuardResult::Violation(bad) } else { GuardResult::Ok })
}

/// Leakage model of the CZ gate.
#[derive(Debug, Clone)]
pub enum CzModel {
    /// Diagonal (1, 1, 1, e^{i phi}) on the computational subspace.
    Ideal,
    /// exp(-i H t) on the truncated five-level subspace spanned by
    /// {gg0, eg0, gg1, eg1, fg0} in the coupler-dressed frame.
    FiveLevel { eff: EffectiveCouplings, t_ns: f64 },
}

/// Qubit-resonator CZ. `conditional_phase` is applied as e^{+i phi} on
/// |e,1>; `vz_qubit` / `vz_resonator` are composed single-component Z
/// corrections (rad).
pub fn cz(
    qubit: &str,
    conditional_phase: f64,
    vz_qubit: f64,
    vz_resonator: f64,
    model: &CzModel,
    n_max: usize,
) -> Operator {
    let nr = n_max + 1;
    let dim = 3 * nr;
    let idx = |q: usize, n: usize| q * nr + n;
    let mut m = vec![czero(); dim * dim];
    match model {
        CzModel::Ideal => {
            for q in 0..3 {
                for n in 0..nr {
                    let v = if q == 1 && n == 1 {
                        C64::new(0.0, conditional_phase).exp()
                    } else {
                        C64::new(1.0, 0.0)
                    };
                    m[idx(q, n) * dim + idx(q, n)] = v;
                }
            }
        }
        CzModel::FiveLevel { eff, t_ns } => {
            for q in 0..3 {
                for n in 0..nr {
                    m[idx(q, n) * dim + idx(q, n)] = C64::new(1.0, 0.0);
                }
            }
            let u5 = five_level_propagator(eff, true, *t_ns);
            // five-level basis order {gg0, eg0, gg1, eg1, fg0}
            let map = [idx(0, 0), idx(1, 0), idx(0, 1), idx(1, 1), idx(2, 0)];
            for (r, &gr) in map.iter().enumerate() {
                for (c, &gc) in map.iter().enumerate() {
                    m[gr * dim + gc] = u5[r][c];
                }
            }
        }
    }
    let mut op =
        Operator::unitary_unchecked(vec![qubit.to_string(), "CR".into()], m);
    if vz_qubit != 0.0 || vz_resonator != 0.0 {
        let mut corr = vz("q", vz_qubit, 3);
        corr.targets = vec![qubit.to_string()];
        let mut corr_r = vz_resonator_op(vz_resonator, nr);
        corr_r.targets = vec!["CR".into()];
        // lift both to the local two-site space and compose
        let lift_q = lift_first(&corr, nr);
        let lift_r = lift_second(&corr_r, 3);
        op = lift_r.matmul(&lift_q.matmul(&op));
        op.targets = vec![qubit.to_string(), "CR".into()];
    }
    op
}

/// CZ in five-level mode with the single-component Z corrections chosen
/// so the single-excitation diagonal phases are cancelled; returns the
/// gate and the residual conditional phase.
pub fn cz_five_level_calibrated(
    qubit: &str,
    eff: &EffectiveCouplings,
    t_ns: f64,
    n_max: usize,
) -> (Operator, f64) {
    let u5 = five_level_propagator(eff, true, t_ns);
    let vz_q = -u5[1][1].arg();
    let vz_r = -u5[2][2].arg();
    let cond = u5[3][3].arg() + vz_q + vz_r - u5[0][0].arg();
    let op = cz(
        qubit,
        0.0,
        vz_q,
        vz_r,
        &CzModel::FiveLevel { eff: eff.clone(), t_ns },
        n_max,
    );
    (op, wrap_angle(cond))
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    } else if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

fn lift_first(op: &Operator, second_dim: usize) -> Operator {
    let d1 = op.rows;
    let dim = d1 * second_dim;
    let mut m = vec![czero(); dim * dim];
    for r1 in 0..d1 {
        for c1 in 0..d1 {
            let v = op.at(r1, c1);
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            for k in 0..second_dim {
                m[(r1 * second_dim + k) * dim + (c1 * second_dim + k)] = v;
            }
        }
    }
    Operator { rows: dim, cols: dim, elems: m, targets: op.targets.clone(), unitary: op.unitary }
}

fn lift_second(op: &Operator, first_dim: usize) -> Operator {
    let d2 = op.rows;
    let dim = first_dim * d2;
    let mut m = vec![czero(); dim * dim];
    for k in 0..first_dim {
        for r2 in 0..d2 {
            for c2 in 0..d2 {
                let v = op.at(r2, c2);
                if v.re != 0.0 || v.im != 0.0 {
                    m[(k * d2 + r2) * dim + (k * d2 + c2)] = v;
                }
            }
        }
    }
    Operator { rows: dim, cols: dim, elems: m, targets: op.targets.clone(), unitary: op.unitary }
}

/// Single-qubit rotation by `angle` about the equatorial axis at azimuth
/// `axis_phase`, acting on the g/e subspace with |f> inert.
pub fn rot(qubit: &str, axis_phase: f64, angle: f64) -> Operator {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let mi = C64::new(0.0, -1.0);
    let mut m = vec![czero(); 9];
    m[0] = C64::new(c, 0.0);
    m[1] = mi * C64::new(0.0, -axis_phase).exp() * s;
    m[3] = mi * C64::new(0.0, axis_phase).exp() * s;
    m[4] = C64::new(c, 0.0);
    m[8] = C64::new(1.0, 0.0);
    Operator::unitary_unchecked(vec![qubit.to_string()], m)
}

/// Virtual-Z phase on a transmon: diag(1, e^{i phi}, e^{2 i phi}).
pub fn vz(component: &str, angle: f64, dim: usize) -> Operator {
    let mut m = vec![czero(); dim * dim];
    for l in 0..dim {
        m[l * dim + l] = C64::new(0.0, angle * l as f64).exp();
    }
    Operator::unitary_unchecked(vec![component.to_string()], m)
}

/// Virtual-Z on the resonator: phase e^{i n phi} per Fock level. The
/// physical device has no resonator drive; this is the ledger-resolved
/// equivalent applied by the simulator.
pub fn vz_resonator_op(angle: f64, dim: usize) -> Operator {
    vz("CR", angle, dim)
}

/// Per-component frame bookkeeping: accumulated virtual-Z phases and
/// rotating-frame frequencies. Phases are only reduced mod 2 pi when a
/// unitary is constructed from them, never in the ledger itself.
#[derive(Debug, Clone, Default)]
pub struct FrameLedger {
    phases: BTreeMap<String, f64>,
    frame_freq_ghz: BTreeMap<String, f64>,
    pub elapsed_ns: f64,
}

impl FrameLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_frame_freq(&mut self, component: &str, f_ghz: f64) {
        self.frame_freq_ghz.insert(component.to_string(), f_ghz);
    }

    pub fn frame_freq(&self, component: &str) -> f64 {
        self.frame_freq_ghz.get(component).copied().unwrap_or(0.0)
    }

    pub fn add_phase(&mut self, component: &str, rad: f64) {
        *self.phases.entry(component.to_string()).or_insert(0.0) += rad;
    }

    pub fn phase(&self, component: &str) -> f64 {
        self.phases.get(component).copied().unwrap_or(0.0)
    }

    pub fn advance(&mut self, dt_ns: f64) {
        self.elapsed_ns += dt_ns;
    }
}

/// Relative frame phase 2 pi (f_a - f_b) dt accumulated by a state moved
/// between components `a` and `b` over `dt_ns`; the phase is recorded in
/// the ledger against `a` and returned.
pub fn resolve_frame_phase(ledger: &mut FrameLedger, a: &str, b: &str, dt_ns: f64) -> f64 {
    assert!(dt_ns >= 0.0, "dt must be nonnegative");
    let phase = 2.0 * PI * (ledger.frame_freq(a) - ledger.frame_freq(b)) * dt_ns;
    ledger.add_phase(a, phase);
    phase
}
