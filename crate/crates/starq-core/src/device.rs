//! Device parameter model: component frequencies, couplings, coherence
//! times, gate durations and readout fidelities, with JSON ingestion and a
//! built-in preset for the six-qubit star QPU.
//!
//! Units are fixed across the artifact: ordinary frequencies in GHz (angular
//! values are derived as 2*pi*f where needed), lifetimes in microseconds,
//! gate durations in nanoseconds, temperatures in millikelvin.

use crate::hilbert::SubsystemKind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const PLANCK_OVER_BOLTZMANN_K_S: f64 = 4.799243073e-11; // h/kB in K*s

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema violation at `{path}`: {msg}")]
    Schema { path: String, msg: String },
    #[error("physical invariant violated for `{id}`: {msg}")]
    Invariant { id: String, msg: String },
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("unknown preset `{0}` (available: paper-qpu)")]
    UnknownPreset(String),
}

fn schema_err(path: &str, msg: impl Into<String>) -> DeviceError {
    DeviceError::Schema { path: path.to_string(), msg: msg.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentParams {
    pub id: String,
    pub kind: SubsystemKind,
    /// Transition frequency (ordinary), GHz.
    pub frequency_ghz: f64,
    /// Anharmonicity (ordinary), GHz; 0 for the resonator.
    pub anharmonicity_ghz: f64,
    pub t1_us: f64,
    pub t2_star_us: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_echo_us: Option<f64>,
    /// Effective temperature, mK.
    pub temperature_mk: f64,
}

impl ComponentParams {
    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency_ghz
    }

    fn validate(&self) -> Result<(), DeviceError> {
        let inv = |msg: String| DeviceError::Invariant { id: self.id.clone(), msg };
        if self.t1_us <= 0.0 || self.t2_star_us <= 0.0 {
            return Err(inv("T1 and T2* must be positive".into()));
        }
        // measurement slack factor 1.05 on the T2* <= 2 T1 bound
        if self.t2_star_us > 2.1 * self.t1_us {
            return Err(inv(format!(
                "T2* = {} exceeds 2.1*T1 = {}",
                self.t2_star_us,
                2.1 * self.t1_us
            )));
        }
        match self.kind {
            SubsystemKind::Resonator => {
                if self.anharmonicity_ghz != 0.0 {
                    return Err(inv("resonator anharmonicity must be 0".into()));
                }
            }
            _ => {
                if self.anharmonicity_ghz >= 0.0 {
                    return Err(inv("transmon anharmonicity must be negative".into()));
                }
            }
        }
        Ok(())
    }
}

/// Decoherence rates and thermal occupation derived from component params.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedRates {
    /// Energy relaxation rate 1/T1, 1/us.
    pub gamma1: f64,
    /// Pure dephasing rate 1/T2* - 1/(2 T1), clamped at zero, 1/us.
    pub gamma_phi: f64,
    /// Bose-Einstein occupation at (frequency, temperature).
    pub n_th: f64,
}

pub fn derived_rates(params: &ComponentParams) -> DerivedRates {
    let gamma1 = 1.0 / params.t1_us;
    let gamma_phi = (1.0 / params.t2_star_us - 0.5 / params.t1_us).max(0.0);
    DerivedRates { gamma1, gamma_phi, n_th: bose_einstein(params.frequency_ghz, params.temperature_mk) }
}

pub fn bose_einstein(frequency_ghz: f64, temperature_mk: f64) -> f64 {
    if temperature_mk <= 0.0 {
        return 0.0;
    }
    let x = PLANCK_OVER_BOLTZMANN_K_S * frequency_ghz * 1e9 / (temperature_mk * 1e-3);
    1.0 / x.exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingRole {
    QubitCoupler,
    CouplerResonator,
    QubitResonator,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingParams {
    pub pair: (String, String),
    pub role: CouplingRole,
    /// Dimensionless coupling beta = g/omega.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Absolute coupling (ordinary), GHz. Overrides beta when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_ghz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitDurations {
    pub tau_s_ns: f64,
    pub tau_m_ns: f64,
    pub tau_cz_ns: f64,
    pub tau_ro_ns: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutEntry {
    /// Single-number readout fidelity; expands to a symmetric 2x2
    /// assignment matrix unless `matrix` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    /// Explicit assignment matrix rows: P(measured j | prepared i).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[f64; 2]; 2]>,
}

/// Per-qubit 2x2 readout assignment matrix, rows indexed by prepared state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignmentMatrix(pub [[f64; 2]; 2]);

impl AssignmentMatrix {
    pub fn from_fidelity(f: f64) -> Self {
        AssignmentMatrix([[f, 1.0 - f], [1.0 - f, f]])
    }

    pub fn is_stochastic(&self) -> bool {
        self.0.iter().all(|row| {
            row.iter().all(|p| (0.0..=1.0).contains(p)) && (row[0] + row[1] - 1.0).abs() < 1e-9
        })
    }

    pub fn determinant(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn inverse(&self) -> Option<[[f64; 2]; 2]> {
        let det = self.determinant();
        if det.abs() < 1e-12 {
            return None;
        }
        Some([
            [self.0[1][1] / det, -self.0[0][1] / det],
            [-self.0[1][0] / det, self.0[0][0] / det],
        ])
    }
}

/// Optional measured benchmark fidelities (used by the measured-fidelity
/// mode of the GHZ coherence budget).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuredFidelities {
    #[serde(default)]
    pub f_sq_sim: BTreeMap<String, f64>,
    #[serde(default)]
    pub f_mm: BTreeMap<String, f64>,
    #[serde(default)]
    pub f_cz: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    pub components: Vec<ComponentParams>,
    pub couplings: Vec<CouplingParams>,
    pub durations: BTreeMap<String, QubitDurations>,
    pub readout: BTreeMap<String, ReadoutEntry>,
    /// Resonator Fock truncation n_max (dimension n_max + 1).
    pub truncation: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<MeasuredFidelities>,
}

impl DeviceParams {
    pub fn component(&self, id: &str) -> Result<&ComponentParams, DeviceError> {
        self.components
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| DeviceError::UnknownComponent(id.to_string()))
    }

    pub fn qubit_ids(&self) -> Vec<String> {
        self.components
            .iter()
            .filter(|c| c.kind == SubsystemKind::Qubit)
            .map(|c| c.id.clone())
            .collect()
    }

    pub fn resonator(&self) -> &ComponentParams {
        self.components
            .iter()
            .find(|c| c.kind == SubsystemKind::Resonator)
            .expect("device has a resonator")
    }

    /// Tunable coupler belonging to a qubit (TCi for QBi).
    pub fn coupler_of(&self, qubit: &str) -> Result<&ComponentParams, DeviceError> {
        let tc = qubit.replace("QB", "TC");
        self.component(&tc)
    }

    pub fn rates(&self, id: &str) -> Result<DerivedRates, DeviceError> {
        Ok(derived_rates(self.component(id)?))
    }

    pub fn durations_of(&self, qubit: &str) -> Result<&QubitDurations, DeviceError> {
        self.durations.get(qubit).ok_or_else(|| DeviceError::UnknownComponent(qubit.to_string()))
    }

    /// Absolute coupling (ordinary GHz) between two components, resolving
    /// beta via g = beta * sqrt(omega_a * omega_b) when no absolute value
    /// is stored. Frequencies may be overridden (gate configurations tune
    /// components away from idle).
    pub fn coupling_g(
        &self,
        a: &str,
        b: &str,
        freq_override: Option<(f64, f64)>,
    ) -> Result<f64, DeviceError> {
        let cp = self
            .couplings
            .iter()
            .find(|c| (c.pair.0 == a && c.pair.1 == b) || (c.pair.0 == b && c.pair.1 == a))
            .ok_or_else(|| DeviceError::UnknownComponent(format!("coupling {a}-{b}")))?;
        if let Some(g) = cp.g_ghz {
            return Ok(g);
        }
        let beta = cp.beta.expect("validated: beta or g present");
        let (fa, fb) = match freq_override {
            Some(x) => x,
            None => (self.component(a)?.frequency_ghz, self.component(b)?.frequency_ghz),
        };
        Ok(beta * (fa * fb).sqrt())
    }

    pub fn assignment_matrix(&self, qubit: &str) -> Result<AssignmentMatrix, DeviceError> {
        let e = self
            .readout
            .get(qubit)
            .ok_or_else(|| DeviceError::UnknownComponent(qubit.to_string()))?;
        let m = match (e.matrix, e.fidelity) {
            (Some(m), _) => AssignmentMatrix(m),
            (None, Some(f)) => AssignmentMatrix::from_fidelity(f),
            (None, None) => {
                return Err(schema_err(&format!("readout.{qubit}"), "needs fidelity or matrix"))
            }
        };
        if !m.is_stochastic() {
            return Err(DeviceError::Invariant {
                id: qubit.to_string(),
                msg: "assignment matrix rows must be stochastic".into(),
            });
        }
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if self.truncation < 1 {
            return Err(schema_err("truncation", "n_max must be >= 1"));
        }
        let n_res =
            self.components.iter().filter(|c| c.kind == SubsystemKind::Resonator).count();
        if n_res != 1 {
            return Err(schema_err("components", format!("expected 1 resonator, found {n_res}")));
        }
        for c in &self.components {
            c.validate()?;
        }
        for cp in &self.couplings {
            self.component(&cp.pair.0)?;
            self.component(&cp.pair.1)?;
            match (cp.beta, cp.g_ghz) {
                (None, None) => {
                    return Err(schema_err("couplings", "each coupling needs beta or g_ghz"))
                }
                (Some(b), _) if b <= 0.0 => {
                    return Err(schema_err("couplings", "beta must be positive"))
                }
                _ => {}
            }
        }
        for q in self.qubit_ids() {
            let d = self.durations_of(&q)?;
            if d.tau_s_ns <= 0.0 || d.tau_m_ns <= 0.0 || d.tau_cz_ns <= 0.0 || d.tau_ro_ns <= 0.0 {
                return Err(DeviceError::Invariant {
                    id: q.clone(),
                    msg: "gate durations must be positive".into(),
                });
            }
            self.assignment_matrix(&q)?;
            // each qubit carries its full coupling triple
            let tc = q.replace("QB", "TC");
            self.coupling_g(&q, &tc, None)?;
            self.coupling_g(&tc, "CR", None)?;
            self.coupling_g(&q, "CR", None)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), DeviceError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Load a device description: either `preset:<name>` or a JSON file path.
pub fn load_device_spec(spec: &str) -> Result<DeviceParams, DeviceError> {
    if let Some(name) = spec.strip_prefix("preset:") {
        return preset(name);
    }
    load_device(std::path::Path::new(spec))
}

pub fn load_device(path: &std::path::Path) -> Result<DeviceParams, DeviceError> {
    let text = std::fs::read_to_string(path)?;
    let params: DeviceParams = serde_json::from_str(&text)
        .map_err(|e| schema_err(&path.display().to_string(), e.to_string()))?;
    params.validate()?;
    Ok(params)
}

pub fn preset(name: &str) -> Result<DeviceParams, DeviceError> {
    match name {
        "paper-qpu" => Ok(paper_qpu()),
        other => Err(DeviceError::UnknownPreset(other.to_string())),
    }
}

/// The six-qubit star device. Qubit and resonator parameters follow the
/// characterization tables; couplings use the simulation values
/// beta_qr = 0.00197, beta_qc = 0.0219, beta_cr = 0.02264. The resonator
/// temperature cannot be measured directly and is set to the hottest
/// qubit (46.3 mK) as a worst case.
pub fn paper_qpu() -> DeviceParams {
    const QUBITS: [(&str, f64, f64, f64, Option<f64>, f64); 6] = [
        ("QB1", 4.67, 25.6, 36.5, Some(44.2), 46.3),
        ("QB2", 4.47, 44.0, 27.1, Some(56.0), 42.0),
        ("QB3", 4.41, 55.3, 29.0, Some(42.3), 43.6),
        ("QB4", 4.52, 46.2, 22.2, Some(29.9), 40.9),
        ("QB5", 4.63, 45.9, 51.5, Some(58.6), 43.0),
        ("QB6", 4.93, 30.6, 31.9, Some(43.8), 45.8),
    ];
    const ALPHA_Q: f64 = -0.187;
    const ALPHA_C: f64 = -0.11;
    const TC_IDLE_GHZ: f64 = 6.0;
    const F_RO: [f64; 6] = [0.983, 0.986, 0.987, 0.991, 0.989, 0.987];
    const TAU_M: [f64; 6] = [88.0, 80.0, 96.0, 80.0, 96.0, 96.0];
    const TAU_CZ: [f64; 6] = [96.0, 80.0, 80.0, 112.0, 96.0, 80.0];
    const F_SQ_SIM: [f64; 6] = [0.9993, 0.9992, 0.9996, 0.9995, 0.9959, 0.9987];
    const F_MM: [f64; 6] = [0.9911, 0.9934, 0.9900, 0.9930, 0.9831, 0.9795];
    const F_CZ: [f64; 6] = [0.9890, 0.9875, 0.9897, 0.9804, 0.9853, 0.9661];
    const BETA_QR: f64 = 0.00197;
    const BETA_QC: f64 = 0.0219;
    const BETA_CR: f64 = 0.02264;

    let mut components = Vec::new();
    let mut couplings = Vec::new();
    let mut durations = BTreeMap::new();
    let mut readout = BTreeMap::new();
    let mut measured = MeasuredFidelities::default();
    for (i, (id, f, t1, t2, t2e, tq)) in QUBITS.iter().enumerate() {
        components.push(ComponentParams {
            id: id.to_string(),
            kind: SubsystemKind::Qubit,
            frequency_ghz: *f,
            anharmonicity_ghz: ALPHA_Q,
            t1_us: *t1,
            t2_star_us: *t2,
            t2_echo_us: *t2e,
            temperature_mk: *tq,
        });
        let tc = format!("TC{}", i + 1);
        components.push(ComponentParams {
            id: tc.clone(),
            kind: SubsystemKind::Coupler,
            frequency_ghz: TC_IDLE_GHZ,
            anharmonicity_ghz: ALPHA_C,
            // coupler decoherence is a non-goal; placeholder coherence
            t1_us: 20.0,
            t2_star_us: 20.0,
            t2_echo_us: None,
            temperature_mk: 45.0,
        });
        couplings.push(CouplingParams {
            pair: (id.to_string(), tc.clone()),
            role: CouplingRole::QubitCoupler,
            beta: Some(BETA_QC),
            g_ghz: None,
        });
        couplings.push(CouplingParams {
            pair: (tc.clone(), "CR".into()),
            role: CouplingRole::CouplerResonator,
            beta: Some(BETA_CR),
            g_ghz: None,
        });
        couplings.push(CouplingParams {
            pair: (id.to_string(), "CR".into()),
            role: CouplingRole::QubitResonator,
            beta: Some(BETA_QR),
            g_ghz: None,
        });
        durations.insert(
            id.to_string(),
            QubitDurations {
                tau_s_ns: 40.0,
                tau_m_ns: TAU_M[i],
                tau_cz_ns: TAU_CZ[i],
                tau_ro_ns: 800.0,
            },
        );
        readout.insert(id.to_string(), ReadoutEntry { fidelity: Some(F_RO[i]), matrix: None });
        measured.f_sq_sim.insert(id.to_string(), F_SQ_SIM[i]);
        measured.f_mm.insert(id.to_string(), F_MM[i]);
        measured.f_cz.insert(id.to_string(), F_CZ[i]);
    }
    components.push(ComponentParams {
        id: "CR".into(),
        kind: SubsystemKind::Resonator,
        frequency_ghz: 4.22,
        anharmonicity_ghz: 0.0,
        t1_us: 5.53,
        t2_star_us: 10.9,
        t2_echo_us: None,
        temperature_mk: 46.3,
    });
    let params = DeviceParams {
        components,
        couplings,
        durations,
        readout,
        truncation: 4,
        measured: Some(measured),
    };
    params.validate().expect("preset is valid");
    params
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn preset_matches_characterization_tables() {
        let dev = paper_qpu();
        let qb2 = dev.component("QB2").unwrap();
        assert_eq!(qb2.frequency_ghz, 4.47);
        assert_eq!(qb2.t1_us, 44.0);
        let cr = dev.component("CR").unwrap();
        assert_eq!(cr.t1_us, 5.53);
        assert_eq!(cr.t2_star_us, 10.9);
        assert_eq!(cr.frequency_ghz, 4.22);
    }

    #[test]
    fn derived_rates_cases() {
        // T1 = T2*/2 is the T1-limited case: no pure dephasing
        let c = ComponentParams {
            id: "QB1".into(),
            kind: SubsystemKind::Qubit,
            frequency_ghz: 4.5,
            anharmonicity_ghz: -0.2,
            t1_us: 10.0,
            t2_star_us: 20.0,
            t2_echo_us: None,
            temperature_mk: 0.0,
        };
        let r = derived_rates(&c);
        assert_abs_diff_eq!(r.gamma1, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(r.gamma_phi, 0.0, epsilon = 1e-15);
        assert_eq!(r.n_th, 0.0);

        // resonator coherence is limited by energy relaxation: gamma_phi ~ 0
        let dev = paper_qpu();
        let r = dev.rates("CR").unwrap();
        assert!(r.gamma_phi < 0.01 * r.gamma1);
    }

    #[test]
    fn thermal_occupation_scale() {
        // ~1% occupation at ~4.5 GHz and ~45 mK
        let n = bose_einstein(4.47, 42.0);
        assert!(n > 0.003 && n < 0.02, "n_th = {n}");
        assert_eq!(bose_einstein(4.47, 0.0), 0.0);
    }

    #[test]
    fn zero_t1_rejected() {
        let mut dev = paper_qpu();
        dev.components[0].t1_us = 0.0;
        assert!(matches!(dev.validate(), Err(DeviceError::Invariant { .. })));
    }

    #[test]
    fn t2_bound_enforced() {
        let mut dev = paper_qpu();
        dev.components[0].t2_star_us = dev.components[0].t1_us * 2.2;
        assert!(dev.validate().is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let dev = paper_qpu();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dev.json");
        dev.save(&path).unwrap();
        let back = load_device(&path).unwrap();
        assert_eq!(dev.to_json(), back.to_json());
        for (a, b) in dev.components.iter().zip(&back.components) {
            assert_eq!(a.frequency_ghz.to_bits(), b.frequency_ghz.to_bits());
            assert_eq!(a.t1_us.to_bits(), b.t1_us.to_bits());
            assert_eq!(a.t2_star_us.to_bits(), b.t2_star_us.to_bits());
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let dev = paper_qpu();
        let mut v: serde_json::Value = serde_json::from_str(&dev.to_json()).unwrap();
        v.as_object_mut().unwrap().insert("bogus".into(), serde_json::json!(1));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dev.json");
        std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
        assert!(matches!(load_device(&path), Err(DeviceError::Schema { .. })));
    }

    #[test]
    fn assignment_matrix_stochastic() {
        let dev = paper_qpu();
        for q in dev.qubit_ids() {
            let m = dev.assignment_matrix(&q).unwrap();
            assert!(m.is_stochastic());
            assert!(m.determinant() > 0.5);
        }
    }

    #[test]
    fn coupling_resolution_from_beta() {
        let dev = paper_qpu();
        let g = dev.coupling_g("QB2", "CR", None).unwrap();
        assert_abs_diff_eq!(g, 0.00197 * (4.47f64 * 4.22).sqrt(), epsilon = 1e-15);
        let g2 = dev.coupling_g("QB2", "CR", Some((4.22, 4.22))).unwrap();
        assert_abs_diff_eq!(g2, 0.00197 * 4.22, epsilon = 1e-15);
    }
}
