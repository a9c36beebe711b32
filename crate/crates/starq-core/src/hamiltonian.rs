//! Closed-form Schrieffer-Wolff analytics for the qubit-coupler-resonator
//! trio, exact-diagonalization oracles, the ZZ-coupling landscape, and the
//! five-level CZ population / conditional-phase expressions.
//!
//! Internally everything is angular frequency in rad/ns; public inputs and
//! outputs use ordinary GHz (and MHz/kHz where stated) to match the device
//! tables.

use crate::device::{DeviceError, DeviceParams};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use thiserror::Error;

pub const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("device error: {0}")]
    Device(#[from] DeviceError),
    #[error("singular denominator `{0}` in effective-coupling expression")]
    Singularity(String),
    #[error("eigenstate label {0:?} is ambiguous (max overlap {1:.3} < 0.5)")]
    LabelAmbiguity([usize; 3], f64),
    #[error("no sign change of zeta inside the coupler window [{0}, {1}] GHz")]
    NoIdlingPoint(f64, f64),
    #[error("restricted basis supports at most 2 excitations")]
    BasisOverflow,
}

/// Dressed frequencies and effective interaction strengths from the
/// second-order Schrieffer-Wolff closed forms. All rates are angular
/// (rad/ns).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCouplings {
    pub omega_q: f64,
    pub omega_r: f64,
    pub alpha_q: f64,
    pub g_move: f64,
    pub g_cz: f64,
    /// sqrt(n)-scaled ladder couplings g_{(n-1)e,ng} for n = 1..=n_max.
    pub g_ladder: Vec<f64>,
    /// Dressed detuning omega_r - omega_q.
    pub delta: f64,
    /// Generalized Rabi rate sqrt((delta - alpha_q)^2 + 4 g_cz^2).
    pub omega_rabi: f64,
    pub delta_qc: f64,
    pub delta_rc: f64,
    pub sigma_qc: f64,
    pub sigma_rc: f64,
    /// Dispersive ratios (g_qc/|Delta_qc|, g_rc/|Delta_rc|); callers warn
    /// above 0.3.
    pub dispersive_ratios: (f64, f64),
}

impl EffectiveCouplings {
    pub fn omega_q_ghz(&self) -> f64 {
        self.omega_q / TWO_PI
    }
    pub fn omega_r_ghz(&self) -> f64 {
        self.omega_r / TWO_PI
    }
    pub fn g_move_mhz(&self) -> f64 {
        self.g_move / TWO_PI * 1e3
    }
    pub fn g_cz_mhz(&self) -> f64 {
        self.g_cz / TWO_PI * 1e3
    }
}

/// Raw frequency configuration of one qubit-coupler-resonator trio
/// (ordinary GHz).
#[derive(Debug, Clone, Copy)]
pub struct TrioConfig {
    pub f_q: f64,
    pub f_c: f64,
    pub f_r: f64,
    pub alpha_q: f64,
    pub alpha_c: f64,
    pub g_qc: f64,
    pub g_rc: f64,
    pub g_qr: f64,
}

impl TrioConfig {
    /// Gate-time configuration for `qubit`, with optional overrides of the
    /// qubit and coupler frequencies (couplings re-resolve from beta at
    /// the overridden frequencies).
    pub fn from_device(
        device: &DeviceParams,
        qubit: &str,
        f_q_override: Option<f64>,
        f_c_override: Option<f64>,
    ) -> Result<Self, DeviceError> {
        let q = device.component(qubit)?;
        let c = device.coupler_of(qubit)?;
        let r = device.resonator();
        let f_q = f_q_override.unwrap_or(q.frequency_ghz);
        let f_c = f_c_override.unwrap_or(c.frequency_ghz);
        let tc = c.id.clone();
        Ok(Self {
            f_q,
            f_c,
            f_r: r.frequency_ghz,
            alpha_q: q.anharmonicity_ghz,
            alpha_c: c.anharmonicity_ghz,
            g_qc: device.coupling_g(qubit, &tc, Some((f_q, f_c)))?,
            g_rc: device.coupling_g(&tc, "CR", Some((f_c, r.frequency_ghz)))?,
            g_qr: device.coupling_g(qubit, "CR", Some((f_q, r.frequency_ghz)))?,
        })
    }
}

/// Second-order Schrieffer-Wolff closed forms for the dressed frequencies
/// and the MOVE / CZ effective couplings, evaluated exactly as printed
/// (counter-rotating Sigma terms included; the dressed resonator shift
/// carries Delta_qc in its first denominator).
pub fn effective_params_config(cfg: &TrioConfig, n_max: usize) -> Result<EffectiveCouplings, HamiltonianError> {
    let wq = TWO_PI * cfg.f_q;
    let wc = TWO_PI * cfg.f_c;
    let wr = TWO_PI * cfg.f_r;
    let aq = TWO_PI * cfg.alpha_q;
    let gqc = TWO_PI * cfg.g_qc;
    let grc = TWO_PI * cfg.g_rc;
    let gqr = TWO_PI * cfg.g_qr;
    let delta_qc = wq - wc;
    let delta_rc = wr - wc;
    let sigma_qc = wq + wc;
    let sigma_rc = wr + wc;
    for (name, v) in [
        ("Delta_qc", delta_qc),
        ("Delta_rc", delta_rc),
        ("Sigma_qc", sigma_qc),
        ("Sigma_rc", sigma_rc),
        ("Sigma_qc + alpha_q", sigma_qc + aq),
        ("Delta_qc + alpha_q", delta_qc + aq),
    ] {
        if v.abs() < 1e-12 {
            return Err(HamiltonianError::Singularity(name.to_string()));
        }
    }
    let omega_q = wq + gqc * gqc / delta_qc - 2.0 * gqc * gqc / (sigma_qc + aq) + gqc * gqc / sigma_qc;
    let omega_r = wr + grc * grc / delta_qc - grc * grc / sigma_rc;
    let g_move = gqr
        + gqc * grc / 2.0 * (1.0 / delta_qc + 1.0 / delta_rc - 1.0 / sigma_qc - 1.0 / sigma_rc);
    let g_cz = 2f64.sqrt()
        * (gqr
            + gqc * grc / 2.0
                * (1.0 / delta_rc + 1.0 / (delta_qc + aq) - 1.0 / sigma_rc - 1.0 / (sigma_qc + aq)));
    let delta = omega_r - omega_q;
    let omega_rabi = ((delta - aq).powi(2) + 4.0 * g_cz * g_cz).sqrt();
    let g_ladder = (1..=n_max).map(|n| (n as f64).sqrt() * g_move).collect();
    Ok(EffectiveCouplings {
        omega_q,
        omega_r,
        alpha_q: aq,
        g_move,
        g_cz,
        g_ladder,
        delta,
        omega_rabi,
        delta_qc,
        delta_rc,
        sigma_qc,
        sigma_rc,
        dispersive_ratios: (gqc / delta_qc.abs(), grc / delta_rc.abs()),
    })
}

pub fn effective_params(device: &DeviceParams, qubit: &str) -> Result<EffectiveCouplings, HamiltonianError> {
    let cfg = TrioConfig::from_device(device, qubit, None, None)?;
    effective_params_config(&cfg, device.truncation)
}

pub fn effective_params_at(
    device: &DeviceParams,
    qubit: &str,
    f_q: Option<f64>,
    f_c: Option<f64>,
) -> Result<EffectiveCouplings, HamiltonianError> {
    let cfg = TrioConfig::from_device(device, qubit, f_q, f_c)?;
    effective_params_config(&cfg, device.truncation)
}

/// Exact trio Hamiltonian on (qubit, coupler, resonator) with the
/// counter-rotating coupling terms kept: V = -g (a^dag - a)(b^dag - b).
/// Real symmetric, in rad/ns, basis row-major over (q, c, r) levels.
#[derive(Debug, Clone)]
pub struct TrioHamiltonian {
    pub matrix: DMatrix<f64>,
    pub dims: [usize; 3],
}

impl TrioHamiltonian {
    pub fn new(cfg: &TrioConfig, n_levels: usize, res_dim: usize) -> Self {
        assert!(n_levels >= 3 && res_dim >= 3, "need >= 3 levels per component");
        let dims = [n_levels, n_levels, res_dim];
        let dim: usize = dims.iter().product();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let strides = [dims[1] * dims[2], dims[2], 1usize];
        let level = |i: usize, axis: usize| i / strides[axis] % dims[axis];
        // diagonal ladder energies
        for i in 0..dim {
            let (nq, nc, nr) = (level(i, 0) as f64, level(i, 1) as f64, level(i, 2) as f64);
            h[(i, i)] = TWO_PI
                * (cfg.f_q * nq + cfg.alpha_q / 2.0 * nq * (nq - 1.0)
                    + cfg.f_c * nc
                    + cfg.alpha_c / 2.0 * nc * (nc - 1.0)
                    + cfg.f_r * nr);
        }
        // -g (a^dag - a)(b^dag - b) on the three pairs
        let mut couple = |axis_a: usize, axis_b: usize, g: f64| {
            for i in 0..dim {
                let la = level(i, axis_a);
                let lb = level(i, axis_b);
                // (a^dag - a) entries from state i: up sqrt(la+1), down -sqrt(la)
                let moves_a: [(isize, f64); 2] =
                    [(1, (la as f64 + 1.0).sqrt()), (-1, -(la as f64).sqrt())];
                let moves_b: [(isize, f64); 2] =
                    [(1, (lb as f64 + 1.0).sqrt()), (-1, -(lb as f64).sqrt())];
                for (da, va) in moves_a {
                    let na = la as isize + da;
                    if na < 0 || na as usize >= dims[axis_a] || va == 0.0 {
                        continue;
                    }
                    for (db, vb) in moves_b {
                        let nb = lb as isize + db;
                        if nb < 0 || nb as usize >= dims[axis_b] || vb == 0.0 {
                            continue;
                        }
                        let j = (i as isize
                            + (na - la as isize) * strides[axis_a] as isize
                            + (nb - lb as isize) * strides[axis_b] as isize)
                            as usize;
                        h[(j, i)] += -TWO_PI * g * va * vb;
                    }
                }
            }
        };
        couple(0, 1, cfg.g_qc);
        couple(2, 1, cfg.g_rc);
        couple(0, 2, cfg.g_qr);
        Self { matrix: h, dims }
    }

    pub fn basis_index(&self, label: [usize; 3]) -> usize {
        (label[0] * self.dims[1] + label[1]) * self.dims[2] + label[2]
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.matrix.nrows() {
            for j in 0..i {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }
}

/// One labeled eigenstate of the trio.
#[derive(Debug, Clone)]
pub struct LabeledLevel {
    /// Angular eigenfrequency, rad/ns.
    pub energy: f64,
    /// Uncoupled basis label (n_q, n_c, n_r) of maximum overlap.
    pub label: [usize; 3],
    pub overlap: f64,
    /// Max overlap below 0.5: reported rather than silently mislabeled.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct TrioSpectrum {
    pub levels: Vec<LabeledLevel>,
    pub dims: [usize; 3],
}

impl TrioSpectrum {
    /// Energy of the eigenstate best identified with `label`.
    pub fn energy_of(&self, label: [usize; 3]) -> Result<f64, HamiltonianError> {
        let mut best: Option<&LabeledLevel> = None;
        for l in &self.levels {
            if l.label == label && best.map(|b| b.overlap < l.overlap).unwrap_or(true) {
                best = Some(l);
            }
        }
        match best {
            Some(l) if !l.degenerate => Ok(l.energy),
            Some(l) => Err(HamiltonianError::LabelAmbiguity(label, l.overlap)),
            None => Err(HamiltonianError::LabelAmbiguity(label, 0.0)),
        }
    }

}

pub fn trio_spectrum(
    device: &DeviceParams,
    qubit: &str,
    f_q_override: Option<f64>,
    f_c_override: Option<f64>,
    n_levels: usize,
) -> Result<TrioSpectrum, HamiltonianError> {
    let cfg = TrioConfig::from_device(device, qubit, f_q_override, f_c_override)?;
    let res_dim = (device.truncation + 1).max(3);
    Ok(trio_spectrum_config(&cfg, n_levels, res_dim))
}

pub fn trio_spectrum_config(cfg: &TrioConfig, n_levels: usize, res_dim: usize) -> TrioSpectrum {
    let h = TrioHamiltonian::new(cfg, n_levels, res_dim);
    let eig = SymmetricEigen::new(h.matrix.clone());
    let dim = h.matrix.nrows();
    let mut levels = Vec::with_capacity(dim);
    for k in 0..dim {
        let v = eig.eigenvectors.column(k);
        let mut best = (0usize, 0.0f64);
        for (i, x) in v.iter().enumerate() {
            let w = x * x;
            if w > best.1 {
                best = (i, w);
            }
        }
        let i = best.0;
        let label = [
            i / (h.dims[1] * h.dims[2]),
            i / h.dims[2] % h.dims[1],
            i % h.dims[2],
        ];
        levels.push(LabeledLevel {
            energy: eig.eigenvalues[k],
            label,
            overlap: best.1,
            degenerate: best.1 < 0.5,
        });
    }
    levels.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
    TrioSpectrum { levels, dims: h.dims }
}

/// Half the minimum energy gap between the pair of eigenstates carrying
/// the most weight on span{a, b}, minimized over a qubit-frequency scan.
/// This is the exact-diagonalization oracle for the effective couplings.
pub fn exact_half_splitting(
    device: &DeviceParams,
    qubit: &str,
    f_c: f64,
    a: [usize; 3],
    b: [usize; 3],
    f_q_window: (f64, f64),
    steps: usize,
) -> Result<f64, HamiltonianError> {
    let res_dim = (device.truncation + 1).max(3);
    let mut best = f64::INFINITY;
    for k in 0..=steps {
        let f_q = f_q_window.0 + (f_q_window.1 - f_q_window.0) * k as f64 / steps as f64;
        let cfg = TrioConfig::from_device(device, qubit, Some(f_q), Some(f_c))?;
        let gap = trio_pair_gap(&cfg, 3, res_dim, a, b);
        if gap < best {
            best = gap;
        }
    }
    Ok(best / 2.0)
}

pub fn trio_pair_gap(cfg: &TrioConfig, n_levels: usize, res_dim: usize, a: [usize; 3], b: [usize; 3]) -> f64 {
    let h = TrioHamiltonian::new(cfg, n_levels, res_dim);
    let eig = SymmetricEigen::new(h.matrix.clone());
    let ia = h.basis_index(a);
    let ib = h.basis_index(b);
    let dim = h.matrix.nrows();
    let mut top: [(f64, f64); 2] = [(0.0, 0.0); 2]; // (weight, energy)
    for k in 0..dim {
        let v = eig.eigenvectors.column(k);
        let w = v[ia] * v[ia] + v[ib] * v[ib];
        if w > top[0].0 {
            top[1] = top[0];
            top[0] = (w, eig.eigenvalues[k]);
        } else if w > top[1].0 {
            top[1] = (w, eig.eigenvalues[k]);
        }
    }
    (top[0].1 - top[1].1).abs()
}

/// Longitudinal ZZ coupling between qubit and resonator.
#[derive(Debug, Clone, Copy)]
pub struct ZZResult {
    /// zeta (ordinary), MHz.
    pub zeta_mhz: f64,
    /// The four labeled eigenfrequencies (rad/ns): eg1, gg0, gg1, eg0.
    pub omega_eg1: f64,
    pub omega_gg0: f64,
    pub omega_gg1: f64,
    pub omega_eg0: f64,
}

impl ZZResult {
    pub fn recombine_mhz(&self) -> f64 {
        (self.omega_eg1 + self.omega_gg0 - self.omega_gg1 - self.omega_eg0) / TWO_PI * 1e3
    }
}

/// zeta = w(eg1) + w(gg0) - w(gg1) - w(eg0) from exact trio eigenvalues.
/// `delta` is the bare detuning f_r - f_q in GHz; the coupler sits at
/// `f_c` GHz.
pub fn zz_coupling(
    device: &DeviceParams,
    qubit: &str,
    f_c: f64,
    delta: f64,
) -> Result<ZZResult, HamiltonianError> {
    let f_r = device.resonator().frequency_ghz;
    let cfg = TrioConfig::from_device(device, qubit, Some(f_r - delta), Some(f_c))?;
    zz_coupling_config(&cfg, (device.truncation + 1).max(3).min(3))
}

pub fn zz_coupling_config(cfg: &TrioConfig, res_dim: usize) -> Result<ZZResult, HamiltonianError> {
    let spec = trio_spectrum_config(cfg, 3, res_dim.max(3));
    let omega_eg1 = spec.energy_of([1, 0, 1])?;
    let omega_gg0 = spec.energy_of([0, 0, 0])?;
    let omega_gg1 = spec.energy_of([0, 0, 1])?;
    let omega_eg0 = spec.energy_of([1, 0, 0])?;
    let zeta = omega_eg1 + omega_gg0 - omega_gg1 - omega_eg0;
    Ok(ZZResult {
        zeta_mhz: zeta / TWO_PI * 1e3,
        omega_eg1,
        omega_gg0,
        omega_gg1,
        omega_eg0,
    })
}

/// One row of the ZZ landscape grid.
#[derive(Debug, Clone, Copy)]
pub struct ZZGridPoint {
    pub omega_c_ghz: f64,
    pub delta_ghz: f64,
    /// NaN where eigenstate labeling is ambiguous (near degeneracies).
    pub zeta_mhz: f64,
}

/// Scan zeta over a coupler-frequency x detuning window. Points evaluate
/// independently and in parallel; the output order is row-major over
/// (omega_c, delta) regardless of the worker count.
pub fn zz_landscape(
    device: &DeviceParams,
    qubit: &str,
    f_c_window: (f64, f64),
    delta_window: (f64, f64),
    n_c: usize,
    n_d: usize,
) -> Vec<ZZGridPoint> {
    use rayon::prelude::*;
    let pts: Vec<(usize, usize)> =
        (0..n_c).flat_map(|i| (0..n_d).map(move |j| (i, j))).collect();
    pts.par_iter()
        .map(|&(i, j)| {
            let f_c = f_c_window.0
                + (f_c_window.1 - f_c_window.0) * i as f64 / (n_c.max(2) - 1) as f64;
            let delta = delta_window.0
                + (delta_window.1 - delta_window.0) * j as f64 / (n_d.max(2) - 1) as f64;
            let zeta_mhz = zz_coupling(device, qubit, f_c, delta)
                .map(|z| z.zeta_mhz)
                .unwrap_or(f64::NAN);
            ZZGridPoint { omega_c_ghz: f_c, delta_ghz: delta, zeta_mhz }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct IdlingPoint {
    pub omega_c_ghz: f64,
    /// All couplings vanish: every coupler frequency is a root.
    pub degenerate: bool,
}

/// Root of zeta(omega_c) at the device's idling detuning, by bisection to
/// 1 kHz in the coupler frequency.
pub fn idling_point(
    device: &DeviceParams,
    qubit: &str,
    f_c_window: (f64, f64),
) -> Result<IdlingPoint, HamiltonianError> {
    let f_r = device.resonator().frequency_ghz;
    let f_q = device.component(qubit)?.frequency_ghz;
    let delta = f_r - f_q;
    let zeta = |f_c: f64| -> Result<f64, HamiltonianError> {
        Ok(zz_coupling(device, qubit, f_c, delta)?.zeta_mhz)
    };
    let n_scan = 48;
    let mut prev: Option<(f64, f64)> = None;
    let mut all_tiny = true;
    let mut bracket = None;
    for k in 0..=n_scan {
        let f_c = f_c_window.0 + (f_c_window.1 - f_c_window.0) * k as f64 / n_scan as f64;
        let z = match zeta(f_c) {
            Ok(z) if z.is_finite() => z,
            _ => continue,
        };
        if z.abs() > 1e-9 {
            all_tiny = false;
        }
        if let Some((pf, pz)) = prev {
            if pz.signum() != z.signum() && pz != 0.0 && z != 0.0 {
                bracket = Some((pf, f_c));
                break;
            }
        }
        prev = Some((f_c, z));
    }
    if all_tiny {
        return Ok(IdlingPoint { omega_c_ghz: f_c_window.0, degenerate: true });
    }
    let (mut lo, mut hi) =
        bracket.ok_or(HamiltonianError::NoIdlingPoint(f_c_window.0, f_c_window.1))?;
    let mut z_lo = zeta(lo)?;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        let z_mid = zeta(mid)?;
        if z_mid.signum() == z_lo.signum() {
            lo = mid;
            z_lo = z_mid;
        } else {
            hi = mid;
        }
    }
    Ok(IdlingPoint { omega_c_ghz: 0.5 * (lo + hi), degenerate: false })
}

/// P_|eg1>(t) = 1 - (2 g_cz^2 / Omega^2)(1 - cos(Omega t)); t in ns.
pub fn cz_population(t_ns: f64, eff: &EffectiveCouplings) -> f64 {
    let om = eff.omega_rabi;
    if om == 0.0 {
        return 1.0;
    }
    1.0 - 2.0 * eff.g_cz.powi(2) / om.powi(2) * (1.0 - (om * t_ns).cos())
}

/// Conditional phase phi(t) of the CZ transit, evaluated exactly as
/// printed: a geometric term with a sign-of-cosine branch plus the
/// arctan dynamic term. Radians.
pub fn cz_conditional_phase(t_ns: f64, eff: &EffectiveCouplings) -> f64 {
    let om = eff.omega_rabi;
    let d = eff.delta;
    let aq = eff.alpha_q;
    let geometric =
        0.5 * ((aq - d) * t_ns + PI * (1.0 - (om * t_ns / 2.0).cos().signum()));
    let dynamic = ((d - aq) / om * (om * t_ns / 2.0).tan()).atan();
    geometric + dynamic
}

/// Propagator exp(-i H t) of the truncated five-level subspace
/// {gg0, eg0, gg1, eg1, fg0} in the coupler-dressed frame (ground-state
/// energy zeroed). `include_move` keeps the single-excitation exchange
/// g_move between eg0 and gg1.
pub fn five_level_propagator(eff: &EffectiveCouplings, include_move: bool, t_ns: f64) -> [[C64; 5]; 5] {
    let mut h = DMatrix::<f64>::zeros(5, 5);
    h[(1, 1)] = eff.omega_q;
    h[(2, 2)] = eff.omega_r;
    h[(3, 3)] = eff.omega_q + eff.omega_r;
    h[(4, 4)] = 2.0 * eff.omega_q + eff.alpha_q;
    h[(3, 4)] = eff.g_cz;
    h[(4, 3)] = eff.g_cz;
    if include_move {
        h[(1, 2)] = eff.g_move;
        h[(2, 1)] = eff.g_move;
    }
    let eig = SymmetricEigen::new(h);
    let mut u = [[C64::new(0.0, 0.0); 5]; 5];
    for r in 0..5 {
        for c in 0..5 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..5 {
                let ph = C64::new(0.0, -eig.eigenvalues[k] * t_ns).exp();
                acc += eig.eigenvectors[(r, k)] * eig.eigenvectors[(c, k)] * ph;
            }
            u[r][c] = acc;
        }
    }
    u
}

/// Conditional phase extracted from the five-level propagator, with the
/// single-excitation diagonal phases removed.
pub fn propagator_conditional_phase(eff: &EffectiveCouplings, t_ns: f64) -> f64 {
    let u = five_level_propagator(eff, false, t_ns);
    -(u[3][3].arg() - u[1][1].arg() - u[2][2].arg() + u[0][0].arg())
}

/// Solve the bare qubit frequency at which the dressed MOVE resonance
/// omega_q = omega_r holds, at fixed coupler frequency.
pub fn solve_move_resonance(device: &DeviceParams, qubit: &str, f_c: f64) -> Result<f64, HamiltonianError> {
    solve_resonance(device, qubit, f_c, 0.0)
}

/// Solve the bare qubit frequency at the CZ condition
/// omega_q = omega_r - alpha_q (dressed).
pub fn solve_cz_resonance(device: &DeviceParams, qubit: &str, f_c: f64) -> Result<f64, HamiltonianError> {
    let aq = TWO_PI * device.component(qubit)?.anharmonicity_ghz;
    solve_resonance(device, qubit, f_c, aq)
}

fn solve_resonance(
    device: &DeviceParams,
    qubit: &str,
    f_c: f64,
    target_delta: f64,
) -> Result<f64, HamiltonianError> {
    let f_r = device.resonator().frequency_ghz;
    let mut lo = f_r - target_delta.abs() / TWO_PI - 0.25;
    let mut hi = f_r + target_delta.abs() / TWO_PI + 0.25;
    let f = |fq: f64| -> Result<f64, HamiltonianError> {
        let eff = effective_params_at(device, qubit, Some(fq), Some(f_c))?;
        Ok(eff.delta - target_delta)
    };
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(HamiltonianError::NoIdlingPoint(lo, hi));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Residual couplings between the resonator and one spectator qubit
/// during an active gate.
#[derive(Debug, Clone)]
pub struct SpectatorCoupling {
    pub qubit: String,
    /// Effective transverse coupling, MHz.
    pub g_mhz: f64,
    /// Residual ZZ coupling, kHz.
    pub zeta_khz: f64,
}

/// Full-device analysis restricted to <= 2 total excitations over all 13
/// components (dimension 1 + 13 + 91). The active qubit is tuned to its
/// CZ point with its coupler at `f_c_active`; spectators idle.
pub fn spectator_couplings(
    device: &DeviceParams,
    active_qubit: &str,
    f_c_active: f64,
) -> Result<Vec<SpectatorCoupling>, HamiltonianError> {
    let f_q_active = solve_cz_resonance(device, active_qubit, f_c_active)
        .unwrap_or(device.resonator().frequency_ghz - device.component(active_qubit)?.anharmonicity_ghz);
    let basis = RestrictedDevice::new(device, active_qubit, f_q_active, f_c_active)?;
    let mut out = Vec::new();
    for q in device.qubit_ids() {
        if q == active_qubit {
            continue;
        }
        let zeta_khz = basis.zeta(&q)? / TWO_PI * 1e6;
        let g_mhz = basis.spectator_g(&q)? / TWO_PI * 1e3;
        out.push(SpectatorCoupling { qubit: q, g_mhz, zeta_khz });
    }
    Ok(out)
}

/// Excitation-number-restricted full-device Hamiltonian.
struct RestrictedDevice {
    ids: Vec<String>,
    freqs: Vec<f64>,
    anh: Vec<f64>,
    couplings: Vec<(usize, usize, f64)>,
    basis: Vec<Vec<u8>>,
    index: std::collections::HashMap<Vec<u8>, usize>,
}

impl RestrictedDevice {
    fn new(
        device: &DeviceParams,
        active_qubit: &str,
        f_q_active: f64,
        f_c_active: f64,
    ) -> Result<Self, HamiltonianError> {
        let mut ids = Vec::new();
        let mut freqs = Vec::new();
        let mut anh = Vec::new();
        for c in &device.components {
            ids.push(c.id.clone());
            let f = if c.id == active_qubit {
                f_q_active
            } else if c.id == active_qubit.replace("QB", "TC") {
                f_c_active
            } else {
                c.frequency_ghz
            };
            freqs.push(f);
            anh.push(c.anharmonicity_ghz);
        }
        let mut couplings = Vec::new();
        for cp in &device.couplings {
            let a = ids.iter().position(|i| *i == cp.pair.0).unwrap();
            let b = ids.iter().position(|i| *i == cp.pair.1).unwrap();
            let g = cp.g_ghz.unwrap_or_else(|| {
                cp.beta.unwrap() * (freqs[a] * freqs[b]).sqrt()
            });
            couplings.push((a, b, g));
        }
        let n = ids.len();
        let mut basis: Vec<Vec<u8>> = vec![vec![0; n]];
        for i in 0..n {
            let mut s = vec![0u8; n];
            s[i] = 1;
            basis.push(s);
            let mut d = vec![0u8; n];
            d[i] = 2;
            basis.push(d);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let mut s = vec![0u8; n];
                s[i] = 1;
                s[j] = 1;
                basis.push(s);
            }
        }
        let index = basis.iter().cloned().enumerate().map(|(k, b)| (b, k)).collect();
        Ok(Self { ids, freqs, anh, couplings, basis, index })
    }

    fn hamiltonian(&self) -> DMatrix<f64> {
        let dim = self.basis.len();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for (k, state) in self.basis.iter().enumerate() {
            let mut e = 0.0;
            for (i, &n) in state.iter().enumerate() {
                let nf = n as f64;
                e += self.freqs[i] * nf + self.anh[i] / 2.0 * nf * (nf - 1.0);
            }
            h[(k, k)] = TWO_PI * e;
            for &(a, b, g) in &self.couplings {
                // -g (a^dag - a)(b^dag - b): four excitation-moving terms
                for (da, db) in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)] {
                    let na = state[a] as i8 + da;
                    let nb = state[b] as i8 + db;
                    if na < 0 || nb < 0 || na > 2 || nb > 2 {
                        continue;
                    }
                    let mut to = state.clone();
                    to[a] = na as u8;
                    to[b] = nb as u8;
                    if let Some(&j) = self.index.get(&to) {
                        let va = if da == 1 {
                            (state[a] as f64 + 1.0).sqrt()
                        } else {
                            -(state[a] as f64).sqrt()
                        };
                        let vb = if db == 1 {
                            (state[b] as f64 + 1.0).sqrt()
                        } else {
                            -(state[b] as f64).sqrt()
                        };
                        h[(j, k)] += -TWO_PI * g * va * vb;
                    }
                }
            }
        }
        h
    }

    fn comp(&self, id: &str) -> usize {
        self.ids.iter().position(|i| i == id).expect("component exists")
    }

    fn labeled_energy(&self, target: &[u8]) -> Result<f64, HamiltonianError> {
        let h = self.hamiltonian();
        let eig = SymmetricEigen::new(h);
        let ti = self.index[target];
        let mut best = (0.0f64, 0.0f64);
        for k in 0..self.basis.len() {
            let w = eig.eigenvectors[(ti, k)].powi(2);
            if w > best.0 {
                best = (w, eig.eigenvalues[k]);
            }
        }
        if best.0 < 0.5 {
            return Err(HamiltonianError::LabelAmbiguity([0, 0, 0], best.0));
        }
        Ok(best.1)
    }

    /// zeta for spectator `q`: E(e_q + 1_r) + E(vac) - E(1_r) - E(e_q).
    fn zeta(&self, q: &str) -> Result<f64, HamiltonianError> {
        let n = self.ids.len();
        let qi = self.comp(q);
        let ri = self.comp("CR");
        let mk = |pairs: &[(usize, u8)]| {
            let mut s = vec![0u8; n];
            for &(i, v) in pairs {
                s[i] = v;
            }
            s
        };
        let e_qr = self.labeled_energy(&mk(&[(qi, 1), (ri, 1)]))?;
        let e_vac = self.labeled_energy(&mk(&[]))?;
        let e_r = self.labeled_energy(&mk(&[(ri, 1)]))?;
        let e_q = self.labeled_energy(&mk(&[(qi, 1)]))?;
        Ok(e_qr + e_vac - e_r - e_q)
    }

    /// Transverse coupling of spectator `q` to the resonator: half the
    /// minimum avoided-crossing gap found by sweeping the spectator
    /// frequency through the resonator branch in the single-excitation
    /// block.
    fn spectator_g(&self, q: &str) -> Result<f64, HamiltonianError> {
        let qi = self.comp(q);
        let ri = self.comp("CR");
        let n = self.ids.len();
        // single-excitation block with a movable spectator frequency
        let single: Vec<usize> = (0..n).collect();
        let r_dressed = {
            // dressed resonator frequency from the full restricted model
            let mut s = vec![0u8; n];
            s[ri] = 1;
            self.labeled_energy(&s)? / TWO_PI
        };
        let mut best_gap = f64::INFINITY;
        let steps = 80;
        for k in 0..=steps {
            let f_q = r_dressed - 0.015 + 0.03 * k as f64 / steps as f64;
            let mut h = DMatrix::<f64>::zeros(n, n);
            for (r, &cr) in single.iter().enumerate() {
                h[(r, r)] = TWO_PI * if cr == qi { f_q } else { self.freqs[cr] };
            }
            for &(a, b, g) in &self.couplings {
                // single-excitation exchange element +g (from -g * (-1) cross terms)
                h[(a, b)] += TWO_PI * g;
                h[(b, a)] += TWO_PI * g;
            }
            let eig = SymmetricEigen::new(h);
            let mut top: [(f64, f64); 2] = [(0.0, 0.0); 2];
            for c in 0..n {
                let w = eig.eigenvectors[(qi, c)].powi(2) + eig.eigenvectors[(ri, c)].powi(2);
                if w > top[0].0 {
                    top[1] = top[0];
                    top[0] = (w, eig.eigenvalues[c]);
                } else if w > top[1].0 {
                    top[1] = (w, eig.eigenvalues[c]);
                }
            }
            let gap = (top[0].1 - top[1].1).abs();
            if gap < best_gap {
                best_gap = gap;
            }
        }
        Ok(best_gap / 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::paper_qpu;
    use approx::assert_abs_diff_eq;

    #[test]
    fn direct_coupling_only_limit() {
        // g_qc = g_rc = 0: dressed = bare, g_move = g_qr, g_cz = sqrt(2) g_qr
        let cfg = TrioConfig {
            f_q: 4.3,
            f_c: 6.0,
            f_r: 4.3,
            alpha_q: -0.187,
            alpha_c: -0.11,
            g_qc: 0.0,
            g_rc: 0.0,
            g_qr: 0.002,
        };
        let eff = effective_params_config(&cfg, 4).unwrap();
        assert_abs_diff_eq!(eff.g_move, TWO_PI * 0.002, epsilon = 1e-15);
        assert_abs_diff_eq!(eff.g_cz, 2f64.sqrt() * TWO_PI * 0.002, epsilon = 1e-15);
        assert_abs_diff_eq!(eff.omega_q, TWO_PI * 4.3, epsilon = 1e-12);
        assert_abs_diff_eq!(eff.omega_r, TWO_PI * 4.3, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_n_ladder_identity() {
        let dev = paper_qpu();
        let eff = effective_params(&dev, "QB2").unwrap();
        for (i, g) in eff.g_ladder.iter().enumerate() {
            let n = (i + 1) as f64;
            assert_abs_diff_eq!(g / eff.g_move, n.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_coupler_is_singular() {
        let cfg = TrioConfig {
            f_q: 4.3,
            f_c: 4.3,
            f_r: 4.2,
            alpha_q: -0.187,
            alpha_c: -0.11,
            g_qc: 0.1,
            g_rc: 0.1,
            g_qr: 0.002,
        };
        match effective_params_config(&cfg, 4) {
            Err(HamiltonianError::Singularity(name)) => assert_eq!(name, "Delta_qc"),
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn uncoupled_spectrum_is_ladder_sums() {
        let cfg = TrioConfig {
            f_q: 4.5,
            f_c: 6.1,
            f_r: 4.2,
            alpha_q: -0.2,
            alpha_c: -0.11,
            g_qc: 0.0,
            g_rc: 0.0,
            g_qr: 0.0,
        };
        let spec = trio_spectrum_config(&cfg, 3, 3);
        for l in &spec.levels {
            let [nq, nc, nr] = l.label;
            let expect = TWO_PI
                * (4.5 * nq as f64 - 0.1 * (nq * (nq.max(1) - 1)) as f64
                    + 6.1 * nc as f64
                    - 0.055 * (nc * (nc.max(1) - 1)) as f64
                    + 4.2 * nr as f64);
            assert_abs_diff_eq!(l.energy, expect, epsilon = 1e-9);
            assert!(!l.degenerate);
        }
    }

    #[test]
    fn hamiltonian_is_symmetric() {
        let dev = paper_qpu();
        let cfg = TrioConfig::from_device(&dev, "QB3", None, None).unwrap();
        let h = TrioHamiltonian::new(&cfg, 3, 5);
        assert_eq!(h.hermiticity_deviation(), 0.0);
    }

    #[test]
    fn move_splitting_matches_effective_coupling() {
        let dev = paper_qpu();
        let f_c = 5.2;
        let fq_star = solve_move_resonance(&dev, "QB2", f_c).unwrap();
        let eff = effective_params_at(&dev, "QB2", Some(fq_star), Some(f_c)).unwrap();
        let half = exact_half_splitting(
            &dev,
            "QB2",
            f_c,
            [1, 0, 0],
            [0, 0, 1],
            (fq_star - 0.02, fq_star + 0.02),
            400,
        )
        .unwrap();
        let rel = (eff.g_move.abs() - half).abs() / half;
        assert!(rel < 0.05, "relative deviation {rel}");
    }

    #[test]
    fn sw_matches_exact_over_randomized_draws() {
        // randomized dispersive configurations: the closed forms track the
        // exact avoided-crossing splitting within 5% whenever the
        // dispersive ratios stay below 0.12 and the direct and mediated
        // couplings do not mutually cancel (a relative comparison loses
        // meaning when the total coupling nearly vanishes)
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let mut dev = paper_qpu();
        let mut checked = 0;
        while checked < 12 {
            let scale = rng.gen_range(0.3..1.0);
            for c in &mut dev.couplings {
                let base = match c.role {
                    crate::device::CouplingRole::QubitCoupler => 0.0219,
                    crate::device::CouplingRole::CouplerResonator => 0.02264,
                    crate::device::CouplingRole::QubitResonator => 0.00197,
                };
                c.beta = Some(base * scale);
            }
            let f_c = rng.gen_range(5.1..6.8);
            let Ok(fq_star) = solve_move_resonance(&dev, "QB2", f_c) else { continue };
            let eff = effective_params_at(&dev, "QB2", Some(fq_star), Some(f_c)).unwrap();
            if eff.dispersive_ratios.0 > 0.12 || eff.dispersive_ratios.1 > 0.12 {
                continue;
            }
            let g_qr = TWO_PI * dev.coupling_g("QB2", "CR", Some((fq_star, 4.22))).unwrap();
            if eff.g_move.abs() < 0.35 * g_qr {
                continue; // cancellation regime
            }
            let half = exact_half_splitting(
                &dev,
                "QB2",
                f_c,
                [1, 0, 0],
                [0, 0, 1],
                (fq_star - 0.02, fq_star + 0.02),
                300,
            )
            .unwrap();
            let rel = (eff.g_move.abs() - half).abs() / half;
            assert!(
                rel < 0.05,
                "draw {checked}: f_c = {f_c:.3}, scale {scale:.2}: rel = {rel:.4}"
            );
            checked += 1;
        }
    }

    #[test]
    fn zz_zero_without_couplings() {
        let cfg = TrioConfig {
            f_q: 4.4,
            f_c: 6.0,
            f_r: 4.2,
            alpha_q: -0.187,
            alpha_c: -0.11,
            g_qc: 0.0,
            g_rc: 0.0,
            g_qr: 0.0,
        };
        let z = zz_coupling_config(&cfg, 3).unwrap();
        assert_abs_diff_eq!(z.zeta_mhz, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(z.zeta_mhz, z.recombine_mhz(), epsilon = 1e-12);
    }

    #[test]
    fn cz_population_analytics() {
        let dev = paper_qpu();
        let f_c = 5.2;
        let fq = solve_cz_resonance(&dev, "QB2", f_c).unwrap();
        let eff = effective_params_at(&dev, "QB2", Some(fq), Some(f_c)).unwrap();
        assert_abs_diff_eq!(cz_population(0.0, &eff), 1.0, epsilon = 1e-15);
        // on resonance, a full oscillation restores the population
        let t = TWO_PI / eff.omega_rabi;
        assert_abs_diff_eq!(cz_population(t, &eff), 1.0, epsilon = 1e-9);
        // and the conditional phase is pi
        let phi = cz_conditional_phase(t, &eff);
        assert_abs_diff_eq!(crate::gates::wrap_angle(phi - PI), 0.0, epsilon = 1e-3);
        assert_abs_diff_eq!(cz_conditional_phase(0.0, &eff), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cz_formulas_match_propagator_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut checked = 0;
        while checked < 100 {
            let wq = TWO_PI * rng.gen_range(4.0..4.8);
            let aq = TWO_PI * rng.gen_range(-0.25..-0.15);
            let gcz = TWO_PI * rng.gen_range(0.004..0.02);
            let delta = aq + TWO_PI * rng.gen_range(-0.02..0.02);
            let om = ((delta - aq).powi(2) + 4.0 * gcz * gcz).sqrt();
            let t = rng.gen_range(5.0..250.0);
            if (om * t / 2.0).cos().abs() < 0.05 {
                continue; // stay away from the branch discontinuity
            }
            let eff = EffectiveCouplings {
                omega_q: wq,
                omega_r: wq + delta,
                alpha_q: aq,
                g_move: 0.0,
                g_cz: gcz,
                g_ladder: vec![],
                delta,
                omega_rabi: om,
                delta_qc: 1.0,
                delta_rc: 1.0,
                sigma_qc: 1.0,
                sigma_rc: 1.0,
                dispersive_ratios: (0.0, 0.0),
            };
            let u = five_level_propagator(&eff, false, t);
            let p_prop = u[3][3].norm_sqr();
            assert_abs_diff_eq!(cz_population(t, &eff), p_prop, epsilon = 1e-6);
            let phi_prop = propagator_conditional_phase(&eff, t);
            let d = crate::gates::wrap_angle(cz_conditional_phase(t, &eff) - phi_prop);
            assert!(d.abs() < 1e-2, "phase mismatch {d}");
            checked += 1;
        }
    }

    #[test]
    fn zz_matches_independent_diagonalization_points() {
        // frozen from a scipy.linalg.eigh evaluation of the same
        // three-level trio Hamiltonian
        let dev = paper_qpu();
        let cases = [
            (5.2, -0.10, 0.643315251),
            (4.7, -0.168, 15.895412346),
            (6.0, 0.2, -0.002512603),
        ];
        for (f_c, delta, expect) in cases {
            let z = zz_coupling(&dev, "QB2", f_c, delta).unwrap();
            assert_abs_diff_eq!(z.zeta_mhz, expect, epsilon = 1e-6);
            assert_abs_diff_eq!(z.zeta_mhz, z.recombine_mhz(), epsilon = 1e-12);
        }
    }

    #[test]
    fn zz_reaches_tens_of_mhz_with_zero_contour() {
        let dev = paper_qpu();
        // focused subwindow around the two-photon resonance ridge
        let ridge = zz_landscape(&dev, "QB2", (4.6, 5.2), (-0.25, -0.05), 41, 41);
        let max_abs = ridge
            .iter()
            .filter(|p| p.zeta_mhz.is_finite())
            .map(|p| p.zeta_mhz.abs())
            .fold(0.0, f64::max);
        assert!(max_abs > 20.0, "max |zeta| = {max_abs} MHz");
        // sign change over the wider window
        let grid = zz_landscape(&dev, "QB2", (4.6, 6.5), (-0.35, 0.35), 21, 21);
        let has_pos = grid.iter().any(|p| p.zeta_mhz > 0.01);
        let has_neg = grid.iter().any(|p| p.zeta_mhz < -0.01);
        assert!(has_pos && has_neg, "zero contour missing");
    }

    #[test]
    fn idling_point_bisection() {
        // configuration with a known crossing: qubit 0.12 GHz above the
        // resonator, coupler swept above the band
        let mut dev = paper_qpu();
        for c in &mut dev.components {
            if c.id == "QB2" {
                c.frequency_ghz = 4.34;
            }
        }
        let root = idling_point(&dev, "QB2", (5.0, 7.0)).unwrap();
        assert!(!root.degenerate);
        let f_r = dev.resonator().frequency_ghz;
        let f_q = dev.component("QB2").unwrap().frequency_ghz;
        let z = zz_coupling(&dev, "QB2", root.omega_c_ghz, f_r - f_q).unwrap();
        assert!(z.zeta_mhz.abs() < 0.01, "|zeta(root)| = {} MHz", z.zeta_mhz);
    }
}
