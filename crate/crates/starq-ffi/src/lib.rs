//! C ABI for the star-topology QPU toolkit: opaque device handles,
//! integer error codes, and allocated strings for structured results.
//!
//! Conventions:
//! - Functions returning `StarqStatus` report failure details through
//!   `starq_last_error_message()` (thread-local, caller frees).
//! - Strings returned by the library are heap-allocated and must be
//!   released with `starq_string_free`.
//! - The `StarqDevice` handle is immutable and safe to share across
//!   threads; free it once with `starq_device_free`.

use starq_core::benchmark::{mqc_ghz_fidelity, MqcOptions};
use starq_core::device::{load_device, preset, DeviceParams};
use starq_core::hamiltonian::{effective_params_at, zz_coupling};
use starq_core::noise::{ghz_budget, BudgetMode, GhzBudgetOptions};
use starq_core::sim::{
    outcome_distribution, sample_from_distribution, Executor, NoiseSpec, SimOptions,
};
use starq_core::transpiler::{
    lower_cz, lower_cz_no_reuse, resolve_phases, validate, Circuit, Instr, PhaseMode,
};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarqStatus {
    Ok = 0,
    InvalidArgument = 1,
    NumericalFailure = 2,
    NullPointer = 3,
}

/// Opaque device handle.
pub struct StarqDevice {
    inner: DeviceParams,
}

/// Gate counts of a (transpiled) circuit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct StarqGateCounts {
    pub moves: u64,
    pub czs: u64,
    pub logical_czs: u64,
    pub rots: u64,
    pub vzs: u64,
    pub measures: u64,
}

/// Dressed frequencies and effective couplings of one qubit-coupler-
/// resonator trio configuration.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct StarqEffectiveParams {
    pub omega_q_dressed_ghz: f64,
    pub omega_r_dressed_ghz: f64,
    pub g_move_mhz: f64,
    pub g_cz_mhz: f64,
    pub dispersive_ratio_qc: f64,
    pub dispersive_ratio_rc: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into()).unwrap_or_else(|_| CString::new("invalid error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(code: StarqStatus, msg: impl Into<String>) -> StarqStatus {
    set_error(msg);
    code
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

fn alloc_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(std::ptr::null_mut())
}

/// Last error message of this thread, or null. Caller frees with
/// `starq_string_free`.
#[no_mangle]
pub extern "C" fn starq_last_error_message() -> *mut c_char {
    LAST_ERROR
        .with(|slot| slot.borrow().as_ref().map(|c| c.clone().into_raw()))
        .unwrap_or(std::ptr::null_mut())
}

/// Release a string allocated by this library.
///
/// # Safety
/// `ptr` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn starq_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        drop(CString::from_raw(ptr));
    }
}

/// Library version string (static, do not free).
#[no_mangle]
pub extern "C" fn starq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Create a device from a built-in preset name (`paper-qpu`).
///
/// # Safety
/// `name` must be a valid NUL-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn starq_device_new_preset(name: *const c_char) -> *mut StarqDevice {
    let Some(name) = cstr(name) else {
        set_error("preset name is null or not UTF-8");
        return std::ptr::null_mut();
    };
    match preset(name) {
        Ok(inner) => Box::into_raw(Box::new(StarqDevice { inner })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Load a device from a JSON file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn starq_device_load(path: *const c_char) -> *mut StarqDevice {
    let Some(path) = cstr(path) else {
        set_error("path is null or not UTF-8");
        return std::ptr::null_mut();
    };
    match load_device(Path::new(path)) {
        Ok(inner) => Box::into_raw(Box::new(StarqDevice { inner })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `dev` must be a live handle from this library (or null).
#[no_mangle]
pub unsafe extern "C" fn starq_device_free(dev: *mut StarqDevice) {
    if !dev.is_null() {
        drop(Box::from_raw(dev));
    }
}

/// Serialized device parameters as JSON.
///
/// # Safety
/// `dev` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn starq_device_to_json(dev: *const StarqDevice) -> *mut c_char {
    let Some(dev) = dev.as_ref() else {
        set_error("device handle is null");
        return std::ptr::null_mut();
    };
    alloc_string(dev.inner.to_json())
}

/// Lower a logical circuit (text format) to the native gate set and
/// resolve phases. On success `out_circuit` receives the native text and
/// `out_counts` the gate counts.
///
/// # Safety
/// Pointers must be valid; `circuit_text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn starq_transpile(
    dev: *const StarqDevice,
    circuit_text: *const c_char,
    use_reuse_pass: bool,
    frame_tracking: bool,
    out_circuit: *mut *mut c_char,
    out_counts: *mut StarqGateCounts,
) -> StarqStatus {
    let Some(dev) = dev.as_ref() else {
        return fail(StarqStatus::NullPointer, "device handle is null");
    };
    let Some(text) = cstr(circuit_text) else {
        return fail(StarqStatus::NullPointer, "circuit text is null or not UTF-8");
    };
    let logical = match Circuit::parse(text) {
        Ok(c) => c,
        Err(e) => return fail(StarqStatus::InvalidArgument, e.to_string()),
    };
    let lowered =
        match if use_reuse_pass { lower_cz(&logical) } else { lower_cz_no_reuse(&logical) } {
            Ok(c) => c,
            Err(e) => return fail(StarqStatus::InvalidArgument, e.to_string()),
        };
    if let Err(v) = validate(&lowered) {
        return fail(StarqStatus::NumericalFailure, format!("invalid native circuit: {v:?}"));
    }
    let mode = if frame_tracking { PhaseMode::FrameTracking } else { PhaseMode::FixedOnly };
    let resolved = match resolve_phases(&lowered, &dev.inner, mode) {
        Ok(r) => r,
        Err(e) => return fail(StarqStatus::InvalidArgument, e.to_string()),
    };
    let counts = resolved.circuit.counts();
    if !out_counts.is_null() {
        *out_counts = StarqGateCounts {
            moves: counts.moves as u64,
            czs: counts.czs as u64,
            logical_czs: counts.logical_czs as u64,
            rots: counts.rots as u64,
            vzs: counts.vzs as u64,
            measures: counts.measures as u64,
        };
    }
    if !out_circuit.is_null() {
        *out_circuit = alloc_string(resolved.circuit.to_text());
    }
    StarqStatus::Ok
}

/// Schrieffer-Wolff effective parameters at a gate configuration
/// (frequencies in GHz).
///
/// # Safety
/// Pointers must be valid; `qubit` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn starq_effective_params(
    dev: *const StarqDevice,
    qubit: *const c_char,
    f_q_ghz: f64,
    f_c_ghz: f64,
    out: *mut StarqEffectiveParams,
) -> StarqStatus {
    let Some(dev) = dev.as_ref() else {
        return fail(StarqStatus::NullPointer, "device handle is null");
    };
    let Some(qubit) = cstr(qubit) else {
        return fail(StarqStatus::NullPointer, "qubit id is null or not UTF-8");
    };
    if out.is_null() {
        return fail(StarqStatus::NullPointer, "output pointer is null");
    }
    match effective_params_at(&dev.inner, qubit, Some(f_q_ghz), Some(f_c_ghz)) {
        Ok(eff) => {
            *out = StarqEffectiveParams {
                omega_q_dressed_ghz: eff.omega_q_ghz(),
                omega_r_dressed_ghz: eff.omega_r_ghz(),
                g_move_mhz: eff.g_move_mhz(),
                g_cz_mhz: eff.g_cz_mhz(),
                dispersive_ratio_qc: eff.dispersive_ratios.0,
                dispersive_ratio_rc: eff.dispersive_ratios.1,
            };
            StarqStatus::Ok
        }
        Err(e) => fail(StarqStatus::NumericalFailure, e.to_string()),
    }
}

/// Longitudinal ZZ coupling (MHz) at a coupler frequency and bare
/// detuning delta = f_r - f_q (GHz).
///
/// # Safety
/// Pointers must be valid; `qubit` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn starq_zz_coupling(
    dev: *const StarqDevice,
    qubit: *const c_char,
    f_c_ghz: f64,
    delta_ghz: f64,
    out_zeta_mhz: *mut f64,
) -> StarqStatus {
    let Some(dev) = dev.as_ref() else {
        return fail(StarqStatus::NullPointer, "device handle is null");
    };
    let Some(qubit) = cstr(qubit) else {
        return fail(StarqStatus::NullPointer, "qubit id is null or not UTF-8");
    };
    if out_zeta_mhz.is_null() {
        return fail(StarqStatus::NullPointer, "output pointer is null");
    }
    match zz_coupling(&dev.inner, qubit, f_c_ghz, delta_ghz) {
        Ok(z) => {
            *out_zeta_mhz = z.zeta_mhz;
            StarqStatus::Ok
        }
        Err(e) => fail(StarqStatus::NumericalFailure, e.to_string()),
    }
}

/// GHZ coherence budget. `mode` 0 = coherence-limit, 1 = measured
/// fidelities. Outputs the bare limit and the readout-multiplied one.
///
/// # Safety
/// Pointers must be valid; `move_qubit` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn starq_ghz_budget(
    dev: *const StarqDevice,
    move_qubit: *const c_char,
    n_qubits: u32,
    mode: u32,
    thermal: bool,
    zero_resonator_decay: bool,
    out_total: *mut f64,
    out_with_readout: *mut f64,
) -> StarqStatus {
    let Some(dev) = dev.as_ref() else {
        return fail(StarqStatus::NullPointer, "device handle is null");
    };
    let Some(move_qubit) = cstr(move_qubit) else {
        return fail(StarqStatus::NullPointer, "move qubit id is null or not UTF-8");
    };
    let opts = GhzBudgetOptions {
        mode: if mode == 1 { BudgetMode::Measured } else { BudgetMode::Limit },
        thermal,
        zero_resonator_decay,
    };
    match ghz_budget(&dev.inner, move_qubit, n_qubits as usize, &opts) {
        Ok(b) => {
            if !out_total.is_null() {
                *out_total = b.total;
            }
            if !out_with_readout.is_null() {
                *out_with_readout = b.total_with_readout;
            }
            StarqStatus::Ok
        }
        Err(e) => fail(StarqStatus::NumericalFailure, e.to_string()),
    }
}

/// Simulate a native circuit and accumulate sampled measurement outcomes
/// into `out_counts` (length 2^qubits, bitstring order with the first
/// declared qubit as the most significant bit).
///
/// # Safety
/// Pointers must be valid; `out_counts` must hold `counts_len` entries.
#[no_mangle]
pub unsafe extern "C" fn starq_simulate_counts(
    dev: *const StarqDevice,
    circuit_text: *const c_char,
    shots: u64,
    seed: u64,
    noisy: bool,
    trajectories: u64,
    out_counts: *mut u64,
    counts_len: u64,
) -> StarqStatus {
    let Some(dev) = dev.as_ref() else {
        return fail(StarqStatus::NullPointer, "device handle is null");
    };
    let Some(text) = cstr(circuit_text) else {
        return fail(StarqStatus::NullPointer, "circuit text is null or not UTF-8");
    };
    let circuit = match Circuit::parse(text) {
        Ok(c) => c,
        Err(e) => return fail(StarqStatus::InvalidArgument, e.to_string()),
    };
    if let Err(v) = validate(&circuit) {
        return fail(StarqStatus::InvalidArgument, format!("invalid circuit: {v:?}"));
    }
    let exec = match Executor::new(&dev.inner, &circuit) {
        Ok(e) => e,
        Err(e) => return fail(StarqStatus::InvalidArgument, e.to_string()),
    };
    let qubits = circuit.components.clone();
    let needed = 1u64 << qubits.len();
    if out_counts.is_null() || counts_len < needed {
        return fail(
            StarqStatus::InvalidArgument,
            format!("counts buffer needs {needed} entries, got {counts_len}"),
        );
    }
    let runs = if noisy { trajectories.max(1) as usize } else { 1 };
    let opts = SimOptions {
        noise: if noisy { NoiseSpec::Device { thermal: false } } else { NoiseSpec::None },
        seed,
        trajectories: runs,
        ..Default::default()
    };
    let shots_per_run = ((shots as usize) + runs - 1) / runs;
    let per_run = match exec.run_ensemble(&circuit, &opts, |o, rng| {
        let dist = outcome_distribution(&o.state, &qubits);
        let mut c = vec![0u64; dist.len()];
        for s in sample_from_distribution(&dist, shots_per_run, rng) {
            c[s] += 1;
        }
        c
    }) {
        Ok(r) => r,
        Err(e) => return fail(StarqStatus::NumericalFailure, e.to_string()),
    };
    let mut totals = vec![0u64; needed as usize];
    for run in per_run {
        for (t, c) in totals.iter_mut().zip(run) {
            *t += c;
        }
    }
    std::ptr::copy_nonoverlapping(totals.as_ptr(), out_counts, totals.len());
    StarqStatus::Ok
}

/// GHZ fidelity through the multiple-quantum-coherences protocol.
///
/// # Safety
/// Pointers must be valid; `move_qubit` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn starq_mqc_ghz_fidelity(
    dev: *const StarqDevice,
    n_qubits: u32,
    move_qubit: *const c_char,
    noisy: bool,
    mitigate: bool,
    shots: u64,
    trajectories: u64,
    seed: u64,
    out_fidelity: *mut f64,
) -> StarqStatus {
    let Some(dev) = dev.as_ref() else {
        return fail(StarqStatus::NullPointer, "device handle is null");
    };
    let Some(move_qubit) = cstr(move_qubit) else {
        return fail(StarqStatus::NullPointer, "move qubit id is null or not UTF-8");
    };
    if out_fidelity.is_null() {
        return fail(StarqStatus::NullPointer, "output pointer is null");
    }
    let opts = MqcOptions {
        noise: if noisy { NoiseSpec::Device { thermal: false } } else { NoiseSpec::None },
        readout_errors: noisy,
        mitigate,
        shots: shots as usize,
        trajectories: trajectories as usize,
        seed,
        phase_points: None,
    };
    match mqc_ghz_fidelity(&dev.inner, n_qubits as usize, move_qubit, &opts) {
        Ok(r) => {
            *out_fidelity = r.fidelity;
            StarqStatus::Ok
        }
        Err(e) => fail(StarqStatus::NumericalFailure, e.to_string()),
    }
}

/// Build the native N-qubit GHZ preparation circuit in text form.
///
/// # Safety
/// `move_qubit` must be NUL-terminated or null.
#[no_mangle]
pub unsafe extern "C" fn starq_ghz_circuit_text(
    dev: *const StarqDevice,
    n_qubits: u32,
    move_qubit: *const c_char,
    with_measurement: bool,
) -> *mut c_char {
    let Some(dev) = dev.as_ref() else {
        set_error("device handle is null");
        return std::ptr::null_mut();
    };
    let Some(move_qubit) = cstr(move_qubit) else {
        set_error("move qubit id is null or not UTF-8");
        return std::ptr::null_mut();
    };
    let qubits = dev.inner.qubit_ids();
    if !(2..=qubits.len()).contains(&(n_qubits as usize))
        || !qubits.iter().any(|q| q == move_qubit)
    {
        set_error("n out of range or unknown move qubit");
        return std::ptr::null_mut();
    }
    let g = starq_core::transpiler::ghz_circuit(&qubits, move_qubit, n_qubits as usize);
    let resolved = match resolve_phases(&g.native, &dev.inner, PhaseMode::FixedOnly) {
        Ok(r) => r,
        Err(e) => {
            set_error(e.to_string());
            return std::ptr::null_mut();
        }
    };
    let mut circuit = resolved.circuit;
    if with_measurement {
        let qs = circuit.components.clone();
        circuit.push(Instr::Measure { qs });
    }
    alloc_string(circuit.to_text())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn preset_roundtrip_through_abi() {
        unsafe {
            let dev = starq_device_new_preset(c("paper-qpu").as_ptr());
            assert!(!dev.is_null());
            let json = starq_device_to_json(dev);
            assert!(!json.is_null());
            let text = CStr::from_ptr(json).to_str().unwrap().to_string();
            assert!(text.contains("QB3"));
            starq_string_free(json);
            starq_device_free(dev);
        }
    }

    #[test]
    fn unknown_preset_reports_error() {
        unsafe {
            let dev = starq_device_new_preset(c("nope").as_ptr());
            assert!(dev.is_null());
            let err = starq_last_error_message();
            assert!(!err.is_null());
            let msg = CStr::from_ptr(err).to_str().unwrap().to_string();
            assert!(msg.contains("nope"));
            starq_string_free(err);
        }
    }

    #[test]
    fn transpile_ghz_counts_through_abi() {
        unsafe {
            let dev = starq_device_new_preset(c("paper-qpu").as_ptr());
            let text =
                c("PRX q1 1.5707963 1.5707963\nCZ q3 q1\nCZ q3 q2\nCZ q3 q4\nCZ q3 q5\nCZ q3 q6\n");
            let mut out: *mut c_char = std::ptr::null_mut();
            let mut counts = StarqGateCounts::default();
            let status = starq_transpile(dev, text.as_ptr(), true, false, &mut out, &mut counts);
            assert_eq!(status, StarqStatus::Ok);
            assert_eq!(counts.moves, 2);
            assert_eq!(counts.czs, 5);
            assert!(!out.is_null());
            starq_string_free(out);
            starq_device_free(dev);
        }
    }

    #[test]
    fn budget_and_zz_through_abi() {
        unsafe {
            let dev = starq_device_new_preset(c("paper-qpu").as_ptr());
            let mut total = 0.0;
            let mut with_ro = 0.0;
            let status = starq_ghz_budget(
                dev,
                c("QB3").as_ptr(),
                6,
                0,
                true,
                false,
                &mut total,
                &mut with_ro,
            );
            assert_eq!(status, StarqStatus::Ok);
            assert!((total - 0.910).abs() < 0.010, "budget {total}");
            assert!((with_ro - 0.842).abs() < 0.012);
            let mut zeta = 0.0;
            let status = starq_zz_coupling(dev, c("QB2").as_ptr(), 5.2, -0.10, &mut zeta);
            assert_eq!(status, StarqStatus::Ok);
            assert!((zeta - 0.643315251).abs() < 1e-6);
            starq_device_free(dev);
        }
    }

    #[test]
    fn simulate_ghz_counts_through_abi() {
        unsafe {
            let dev = starq_device_new_preset(c("paper-qpu").as_ptr());
            let circuit = starq_ghz_circuit_text(dev, 3, c("QB3").as_ptr(), true);
            assert!(!circuit.is_null());
            let mut counts = vec![0u64; 8];
            let status = starq_simulate_counts(
                dev,
                circuit,
                4096,
                7,
                false,
                1,
                counts.as_mut_ptr(),
                counts.len() as u64,
            );
            assert_eq!(status, StarqStatus::Ok);
            let total: u64 = counts.iter().sum();
            assert_eq!(total, 4096);
            // only the two GHZ branches appear
            assert_eq!(counts[0] + counts[7], total);
            assert!(counts[0] > 1500 && counts[7] > 1500);
            starq_string_free(circuit);
            starq_device_free(dev);
        }
    }
}
