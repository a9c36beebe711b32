//! Circuit intermediate representation and the compiler passes that lower
//! qubit-qubit circuits onto the native star gate set (PRX, VZ, MOVE,
//! qubit-resonator CZ): MOVE-qubit selection with reuse across CZ
//! cascades, occupancy validation, phase resolution and ASAP scheduling.

use crate::device::{DeviceError, DeviceParams};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

pub const RESONATOR: &str = "CR";

#[derive(Debug, Error)]
pub enum TranspileError {
    #[error("instruction {0} is native; lower_cz expects a logical-level circuit")]
    NotLogical(usize),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation failed: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("missing duration for `{0}`")]
    MissingDuration(String),
    #[error("instruction {0} is not invertible inside a folded region")]
    NonInvertible(usize),
    #[error("fold factor must be >= 1")]
    BadFoldFactor,
    #[error("device error: {0}")]
    Device(#[from] DeviceError),
    #[error("CZ at instruction {0} targets a component holding no state")]
    EmptyCz(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instr {
    /// PRX rotation: angle about the equatorial axis at `phase`.
    Rot { q: String, angle: f64, phase: f64 },
    Vz { comp: String, angle: f64 },
    /// Qubit-qubit (logical) or qubit-resonator (native, b = CR) CZ.
    Cz { a: String, b: String },
    Move { q: String },
    Barrier,
    Measure { qs: Vec<String> },
}

impl Instr {
    pub fn is_native_two_site(&self) -> bool {
        matches!(self, Instr::Move { .. }) || matches!(self, Instr::Cz { b, .. } if b == RESONATOR)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Circuit {
    pub components: Vec<String>,
    pub instrs: Vec<Instr>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct GateCounts {
    pub moves: usize,
    pub czs: usize,
    pub logical_czs: usize,
    pub rots: usize,
    pub vzs: usize,
    pub measures: usize,
}

impl Circuit {
    pub fn new(components: Vec<String>) -> Self {
        Self { components, instrs: Vec::new() }
    }

    pub fn push(&mut self, instr: Instr) {
        for c in instr_components(&instr) {
            if c != RESONATOR && !self.components.contains(&c) {
                self.components.push(c);
            }
        }
        self.instrs.push(instr);
    }

    pub fn counts(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for i in &self.instrs {
            match i {
                Instr::Rot { .. } => c.rots += 1,
                Instr::Vz { .. } => c.vzs += 1,
                Instr::Move { .. } => c.moves += 1,
                Instr::Cz { b, .. } if b == RESONATOR => c.czs += 1,
                Instr::Cz { .. } => c.logical_czs += 1,
                Instr::Measure { qs } => c.measures += qs.len(),
                Instr::Barrier => {}
            }
        }
        c
    }

    pub fn is_native(&self) -> bool {
        self.counts().logical_czs == 0
    }

    /// Line-oriented text form: `PRX q1 <angle> <phase>`, `VZ q1 <angle>`,
    /// `CZ q1 q2` / `CZ q1 CR`, `MOVE q1`, `BARRIER`, `MEASURE q1 ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in &self.instrs {
            match i {
                Instr::Rot { q, angle, phase } => {
                    writeln!(out, "PRX {} {} {}", fmt_comp(q), angle, phase).unwrap()
                }
                Instr::Vz { comp, angle } => {
                    writeln!(out, "VZ {} {}", fmt_comp(comp), angle).unwrap()
                }
                Instr::Cz { a, b } => {
                    writeln!(out, "CZ {} {}", fmt_comp(a), fmt_comp(b)).unwrap()
                }
                Instr::Move { q } => writeln!(out, "MOVE {}", fmt_comp(q)).unwrap(),
                Instr::Barrier => writeln!(out, "BARRIER").unwrap(),
                Instr::Measure { qs } => {
                    let names: Vec<String> = qs.iter().map(|q| fmt_comp(q)).collect();
                    writeln!(out, "MEASURE {}", names.join(" ")).unwrap()
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, TranspileError> {
        let mut circuit = Circuit::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: &str| TranspileError::Parse { line: lineno + 1, msg: msg.into() };
            let instr = match toks[0].to_ascii_uppercase().as_str() {
                "PRX" => {
                    if toks.len() != 4 {
                        return Err(err("PRX takes qubit, angle, phase"));
                    }
                    Instr::Rot {
                        q: parse_comp(toks[1], lineno)?,
                        angle: parse_f64(toks[2], lineno)?,
                        phase: parse_f64(toks[3], lineno)?,
                    }
                }
                "VZ" => {
                    if toks.len() != 3 {
                        return Err(err("VZ takes component, angle"));
                    }
                    Instr::Vz {
                        comp: parse_comp(toks[1], lineno)?,
                        angle: parse_f64(toks[2], lineno)?,
                    }
                }
                "CZ" => {
                    if toks.len() != 3 {
                        return Err(err("CZ takes two components"));
                    }
                    Instr::Cz { a: parse_comp(toks[1], lineno)?, b: parse_comp(toks[2], lineno)? }
                }
                "MOVE" => {
                    if toks.len() != 2 {
                        return Err(err("MOVE takes one qubit"));
                    }
                    Instr::Move { q: parse_comp(toks[1], lineno)? }
                }
                "BARRIER" => Instr::Barrier,
                "MEASURE" => {
                    if toks.len() < 2 {
                        return Err(err("MEASURE takes at least one qubit"));
                    }
                    Instr::Measure {
                        qs: toks[1..]
                            .iter()
                            .map(|t| parse_comp(t, lineno))
                            .collect::<Result<_, _>>()?,
                    }
                }
                other => return Err(err(&format!("unknown instruction `{other}`"))),
            };
            circuit.push(instr);
        }
        circuit.components.sort();
        Ok(circuit)
    }
}

fn instr_components(i: &Instr) -> Vec<String> {
    match i {
        Instr::Rot { q, .. } => vec![q.clone()],
        Instr::Vz { comp, .. } => vec![comp.clone()],
        Instr::Cz { a, b } => vec![a.clone(), b.clone()],
        Instr::Move { q } => vec![q.clone()],
        Instr::Barrier => vec![],
        Instr::Measure { qs } => qs.clone(),
    }
}

/// Text format uses q<i> for QB<i> and CR for the resonator.
fn fmt_comp(id: &str) -> String {
    if let Some(n) = id.strip_prefix("QB") {
        format!("q{n}")
    } else {
        id.to_string()
    }
}

fn parse_comp(tok: &str, lineno: usize) -> Result<String, TranspileError> {
    if tok.eq_ignore_ascii_case("cr") {
        return Ok(RESONATOR.to_string());
    }
    if let Some(n) = tok.strip_prefix('q').or_else(|| tok.strip_prefix('Q')) {
        if n.chars().all(|c| c.is_ascii_digit()) && !n.is_empty() {
            return Ok(format!("QB{n}"));
        }
    }
    if tok.starts_with("QB") {
        return Ok(tok.to_string());
    }
    Err(TranspileError::Parse { line: lineno + 1, msg: format!("bad component `{tok}`") })
}

fn parse_f64(tok: &str, lineno: usize) -> Result<f64, TranspileError> {
    tok.parse().map_err(|_| TranspileError::Parse {
        line: lineno + 1,
        msg: format!("bad number `{tok}`"),
    })
}

// ---------------------------------------------------------------------
// lowering with MOVE reuse
// ---------------------------------------------------------------------

/// Length of the upcoming CZ chain involving `q`, scanning forward from
/// `from`: counts CZs that involve q, stops at the first rotation or
/// measurement on q, a barrier, or a CZ not involving q.
fn chain_len(instrs: &[Instr], from: usize, q: &str) -> usize {
    let mut n = 0;
    for i in &instrs[from..] {
        match i {
            Instr::Cz { a, b } => {
                if a == q || b == q {
                    n += 1;
                } else {
                    break;
                }
            }
            Instr::Rot { q: rq, .. } if rq == q => break,
            Instr::Measure { qs } if qs.iter().any(|x| x == q) => break,
            Instr::Barrier => break,
            _ => {}
        }
    }
    n
}

/// Lower qubit-qubit CZs onto MOVE / CZ(q, CR) sandwiches. Consecutive
/// CZs sharing a holder merge into one sandwich; the holder is the qubit
/// with the longest upcoming CZ chain (ties break to the lowest id).
pub fn lower_cz(circuit: &Circuit) -> Result<Circuit, TranspileError> {
    let mut out = Circuit::new(circuit.components.clone());
    let mut holder: Option<String> = None;
    let close = |out: &mut Circuit, holder: &mut Option<String>| {
        if let Some(h) = holder.take() {
            out.push(Instr::Move { q: h });
        }
    };
    for (idx, instr) in circuit.instrs.iter().enumerate() {
        match instr {
            Instr::Move { .. } => return Err(TranspileError::NotLogical(idx)),
            Instr::Cz { b, .. } if b == RESONATOR => return Err(TranspileError::NotLogical(idx)),
            Instr::Cz { a, b } => {
                let h = holder.clone();
                let target = match h.as_deref() {
                    Some(h) if h == a => b.clone(),
                    Some(h) if h == b => a.clone(),
                    _ => {
                        close(&mut out, &mut holder);
                        let (ca, cb) = (chain_len(&circuit.instrs, idx, a), chain_len(&circuit.instrs, idx, b));
                        let new_holder = if ca > cb || (ca == cb && a <= b) { a } else { b };
                        out.push(Instr::Move { q: new_holder.clone() });
                        holder = Some(new_holder.clone());
                        if new_holder == a {
                            b.clone()
                        } else {
                            a.clone()
                        }
                    }
                };
                out.push(Instr::Cz { a: target, b: RESONATOR.into() });
            }
            Instr::Rot { q, .. } if holder.as_deref() == Some(q) => {
                close(&mut out, &mut holder);
                out.push(instr.clone());
            }
            Instr::Vz { comp, angle } if holder.as_deref() == Some(comp) => {
                // the logical state sits in the resonator: phase it there
                out.push(Instr::Vz { comp: RESONATOR.into(), angle: *angle });
            }
            Instr::Measure { qs } if holder.as_deref().map(|h| qs.iter().any(|q| q == h)).unwrap_or(false) => {
                close(&mut out, &mut holder);
                out.push(instr.clone());
            }
            Instr::Barrier => {
                close(&mut out, &mut holder);
                out.push(Instr::Barrier);
            }
            other => out.push(other.clone()),
        }
    }
    close(&mut out, &mut holder);
    Ok(out)
}

/// Naive lowering without the reuse pass: every logical CZ costs two
/// MOVEs.
pub fn lower_cz_no_reuse(circuit: &Circuit) -> Result<Circuit, TranspileError> {
    let mut out = Circuit::new(circuit.components.clone());
    for (idx, instr) in circuit.instrs.iter().enumerate() {
        match instr {
            Instr::Move { .. } => return Err(TranspileError::NotLogical(idx)),
            Instr::Cz { b, .. } if b == RESONATOR => return Err(TranspileError::NotLogical(idx)),
            Instr::Cz { a, b } => {
                out.push(Instr::Move { q: a.clone() });
                out.push(Instr::Cz { a: b.clone(), b: RESONATOR.into() });
                out.push(Instr::Move { q: a.clone() });
            }
            other => out.push(other.clone()),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// occupancy validation
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Rule {
    /// (i) rotation on a qubit whose state is in the resonator
    RotOnHolder,
    /// (ii) MOVE while a different qubit holds the resonator
    MoveWhileHeld,
    /// (iii) CZ(q, CR) while q itself holds the resonator
    CzOnHolder,
    /// (iv) measurement of a holding qubit
    MeasureHolder,
    /// MOVEs unbalanced at the end of the circuit
    UnbalancedMove,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Violation {
    pub index: usize,
    pub rule: Rule,
    pub msg: String,
}

/// Abstract interpretation over the resonator occupancy.
pub fn validate(circuit: &Circuit) -> Result<(), Vec<Violation>> {
    let mut holder: Option<String> = None;
    let mut violations = Vec::new();
    for (idx, instr) in circuit.instrs.iter().enumerate() {
        match instr {
            Instr::Move { q } => match holder.as_deref() {
                None => holder = Some(q.clone()),
                Some(h) if h == q => holder = None,
                Some(h) => violations.push(Violation {
                    index: idx,
                    rule: Rule::MoveWhileHeld,
                    msg: format!("MOVE({q}) while {h} holds the resonator"),
                }),
            },
            Instr::Cz { a, b } if b == RESONATOR => {
                if holder.as_deref() == Some(a) {
                    violations.push(Violation {
                        index: idx,
                        rule: Rule::CzOnHolder,
                        msg: format!("CZ({a}, CR) while {a} holds the resonator"),
                    });
                } else if holder.is_none() {
                    violations.push(Violation {
                        index: idx,
                        rule: Rule::CzOnHolder,
                        msg: format!("CZ({a}, CR) on an empty resonator"),
                    });
                }
            }
            Instr::Rot { q, .. } => {
                if holder.as_deref() == Some(q) {
                    violations.push(Violation {
                        index: idx,
                        rule: Rule::RotOnHolder,
                        msg: format!("rotation on {q} whose state is in the resonator"),
                    });
                }
            }
            Instr::Measure { qs } => {
                if let Some(h) = holder.as_deref() {
                    if qs.iter().any(|q| q == h) {
                        violations.push(Violation {
                            index: idx,
                            rule: Rule::MeasureHolder,
                            msg: format!("measurement of holding qubit {h}"),
                        });
                    }
                }
            }
            _ => {}
        }
    }
    if let Some(h) = holder {
        violations.push(Violation {
            index: circuit.instrs.len(),
            rule: Rule::UnbalancedMove,
            msg: format!("circuit ends with {h} still holding the resonator"),
        });
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

// ---------------------------------------------------------------------
// phase resolution
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// Computational-frame simulation: only the fixed per-pair MOVE
    /// correction (pi) is inserted.
    FixedOnly,
    /// Physical frame tracking: additionally cancel the qubit-resonator
    /// frame rotation accumulated while the state sits in the resonator.
    FrameTracking,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertedPhase {
    /// Index of the closing MOVE in the resolved circuit.
    pub after_index: usize,
    pub qubit: String,
    pub fixed: f64,
    pub time_dependent: f64,
}

#[derive(Debug, Clone)]
pub struct ResolvedCircuit {
    pub circuit: Circuit,
    pub inserted: Vec<InsertedPhase>,
}

/// Insert the per-MOVE-pair VZ corrections: a fixed pi (the calibrated
/// double-MOVE phase; under frame tracking it also carries the opening
/// gate's own duration) plus the time-dependent detuning phase
/// (omega_q - omega_r) * T for the interval the state spends in the
/// resonator.
pub fn resolve_phases(
    circuit: &Circuit,
    device: &DeviceParams,
    mode: PhaseMode,
) -> Result<ResolvedCircuit, TranspileError> {
    let sched = schedule(circuit, device)?;
    let mut out = Circuit::new(circuit.components.clone());
    let mut inserted = Vec::new();
    // open MOVE per qubit: (start time of opening move)
    let mut open: BTreeMap<String, f64> = BTreeMap::new();
    let f_r = device.resonator().frequency_ghz;
    for (idx, instr) in circuit.instrs.iter().enumerate() {
        out.push(instr.clone());
        if let Instr::Move { q } = instr {
            let t = sched.items[idx].start_ns;
            match open.remove(q) {
                None => {
                    open.insert(q.clone(), t);
                }
                Some(t_open) => {
                    let tau_m = device.durations_of(q)?.tau_m_ns;
                    let between = t - (t_open + tau_m);
                    let delta_omega =
                        2.0 * PI * (device.component(q)?.frequency_ghz - f_r);
                    let (fixed, time_dependent) = match mode {
                        PhaseMode::FixedOnly => (PI, 0.0),
                        PhaseMode::FrameTracking => {
                            (PI + delta_omega * tau_m, delta_omega * between)
                        }
                    };
                    out.push(Instr::Vz { comp: q.clone(), angle: fixed + time_dependent });
                    inserted.push(InsertedPhase {
                        after_index: out.instrs.len() - 1,
                        qubit: q.clone(),
                        fixed,
                        time_dependent,
                    });
                }
            }
        }
    }
    Ok(ResolvedCircuit { circuit: out, inserted })
}

// ---------------------------------------------------------------------
// scheduling
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledItem {
    pub start_ns: f64,
    pub duration_ns: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub items: Vec<ScheduledItem>,
    pub makespan_ns: f64,
}

/// As-soon-as-possible schedule: resonator-touching operations
/// serialize, disjoint single-qubit operations run in parallel.
pub fn schedule(circuit: &Circuit, device: &DeviceParams) -> Result<Schedule, TranspileError> {
    let mut avail: BTreeMap<String, f64> = BTreeMap::new();
    let mut items = Vec::with_capacity(circuit.instrs.len());
    let mut makespan = 0.0f64;
    for instr in &circuit.instrs {
        let comps: Vec<String> = match instr {
            Instr::Barrier => {
                let t = avail.values().fold(0.0f64, |a, &b| a.max(b));
                for v in avail.values_mut() {
                    *v = t;
                }
                items.push(ScheduledItem { start_ns: t, duration_ns: 0.0 });
                continue;
            }
            Instr::Move { q } => vec![q.clone(), RESONATOR.into()],
            Instr::Cz { a, b } => vec![a.clone(), b.clone()],
            other => instr_components(other),
        };
        let duration = match instr {
            Instr::Rot { q, .. } => device.durations_of(q)?.tau_s_ns,
            Instr::Vz { .. } => 0.0,
            Instr::Move { q } => device.durations_of(q)?.tau_m_ns,
            Instr::Cz { a, b } => {
                let q = if b == RESONATOR { a } else { b };
                device.durations_of(q)?.tau_cz_ns
            }
            Instr::Measure { qs } => qs
                .iter()
                .map(|q| device.durations_of(q).map(|d| d.tau_ro_ns))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .fold(0.0f64, f64::max),
            Instr::Barrier => unreachable!(),
        };
        let start = comps.iter().map(|c| avail.get(c).copied().unwrap_or(0.0)).fold(0.0, f64::max);
        for c in &comps {
            avail.insert(c.clone(), start + duration);
        }
        makespan = makespan.max(start + duration);
        items.push(ScheduledItem { start_ns: start, duration_ns: duration });
    }
    Ok(Schedule { items, makespan_ns: makespan })
}

// ---------------------------------------------------------------------
// circuit constructors and folding
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GhzCircuits {
    pub logical: Circuit,
    pub native: Circuit,
}

/// GHZ state over `qubits[..n]` with `move_qubit` as the resonator
/// shuttle: Y_half on all, MOVE, a CZ cascade on the other qubits, MOVE,
/// then Y_half and X_pi on the CZ qubits.
pub fn ghz_circuit(qubits: &[String], move_qubit: &str, n: usize) -> GhzCircuits {
    assert!((2..=qubits.len()).contains(&n), "need 2 <= N <= {}", qubits.len());
    assert!(qubits.iter().any(|q| q == move_qubit));
    let mut chosen: Vec<String> = vec![move_qubit.to_string()];
    chosen.extend(qubits.iter().filter(|q| *q != move_qubit).take(n - 1).cloned());
    let mut logical = Circuit::new(chosen.clone());
    let mut native = Circuit::new(chosen.clone());
    for q in &chosen {
        let ry = Instr::Rot { q: q.clone(), angle: PI / 2.0, phase: PI / 2.0 };
        logical.push(ry.clone());
        native.push(ry);
    }
    native.push(Instr::Move { q: move_qubit.to_string() });
    for q in chosen.iter().filter(|q| *q != move_qubit) {
        logical.push(Instr::Cz { a: move_qubit.to_string(), b: q.clone() });
        native.push(Instr::Cz { a: q.clone(), b: RESONATOR.into() });
    }
    native.push(Instr::Move { q: move_qubit.to_string() });
    // step boundary: the basis-change rotations follow the depopulating MOVE
    native.push(Instr::Barrier);
    for q in chosen.iter().filter(|q| *q != move_qubit) {
        for instr in [
            Instr::Rot { q: q.clone(), angle: PI / 2.0, phase: PI / 2.0 },
            Instr::Rot { q: q.clone(), angle: PI, phase: 0.0 },
        ] {
            logical.push(instr.clone());
            native.push(instr);
        }
    }
    GhzCircuits { logical, native }
}

/// Inverse of one native instruction, as a gate sequence.
pub fn instr_inverse(instr: &Instr) -> Option<Vec<Instr>> {
    match instr {
        Instr::Rot { q, angle, phase } => {
            Some(vec![Instr::Rot { q: q.clone(), angle: -angle, phase: *phase }])
        }
        Instr::Vz { comp, angle } => Some(vec![Instr::Vz { comp: comp.clone(), angle: -angle }]),
        Instr::Cz { a, b } => Some(vec![Instr::Cz { a: a.clone(), b: b.clone() }]),
        // on the guarded single-excitation subspace MOVE^-1 = Z Z_CR MOVE
        Instr::Move { q } => Some(vec![
            Instr::Vz { comp: q.clone(), angle: PI },
            Instr::Vz { comp: RESONATOR.into(), angle: PI },
            Instr::Move { q: q.clone() },
        ]),
        Instr::Barrier => Some(vec![Instr::Barrier]),
        Instr::Measure { .. } => None,
    }
}

/// Inverse of a measurement-free circuit.
pub fn invert(circuit: &Circuit) -> Result<Circuit, TranspileError> {
    let mut out = Circuit::new(circuit.components.clone());
    for (idx, instr) in circuit.instrs.iter().enumerate().rev() {
        let inv = instr_inverse(instr).ok_or(TranspileError::NonInvertible(idx))?;
        for i in inv {
            out.push(i);
        }
    }
    Ok(out)
}

/// Unitary folding for noise amplification: odd factors give
/// U (U^dag U)^((lambda-1)/2); even factors fold a half-depth
/// sub-unitary first, U_h^dag U_h preceding U. Trailing measurements
/// stay outside the folded region.
pub fn fold(circuit: &Circuit, lambda: usize) -> Result<Circuit, TranspileError> {
    if lambda == 0 {
        return Err(TranspileError::BadFoldFactor);
    }
    // split off trailing measurements
    let mut body_end = circuit.instrs.len();
    while body_end > 0 && matches!(circuit.instrs[body_end - 1], Instr::Measure { .. }) {
        body_end -= 1;
    }
    if let Some(pos) =
        circuit.instrs[..body_end].iter().position(|i| matches!(i, Instr::Measure { .. }))
    {
        return Err(TranspileError::NonInvertible(pos));
    }
    let body = Circuit { components: circuit.components.clone(), instrs: circuit.instrs[..body_end].to_vec() };
    let tail = &circuit.instrs[body_end..];
    let inv = invert(&body)?;
    let mut out = Circuit::new(circuit.components.clone());
    if lambda % 2 == 1 {
        for _ in 0..1 {
            for i in &body.instrs {
                out.push(i.clone());
            }
        }
        for _ in 0..(lambda - 1) / 2 {
            for i in inv.instrs.iter().chain(&body.instrs) {
                out.push(i.clone());
            }
        }
    } else {
        // half depth counted in two-site (MOVE / CZ) gates
        let total_two_site = body.instrs.iter().filter(|i| i.is_native_two_site()).count();
        let mut split = body.instrs.len();
        if total_two_site > 0 {
            let mut seen = 0;
            for (k, i) in body.instrs.iter().enumerate() {
                if i.is_native_two_site() {
                    seen += 1;
                    if seen * 2 >= total_two_site {
                        split = k + 1;
                        break;
                    }
                }
            }
        } else {
            split = body.instrs.len() / 2;
        }
        let half = Circuit {
            components: circuit.components.clone(),
            instrs: body.instrs[..split].to_vec(),
        };
        let half_inv = invert(&half)?;
        for i in half.instrs.iter().chain(&half_inv.instrs) {
            out.push(i.clone());
        }
        for _ in 0..(lambda - 2) / 2 {
            for i in body.instrs.iter().chain(&inv.instrs) {
                out.push(i.clone());
            }
        }
        for i in &body.instrs {
            out.push(i.clone());
        }
    }
    for i in tail {
        out.push(i.clone());
    }
    Ok(out)
}

/// Cost-layer + mixer QAOA circuit for an edge list (MaxCut / TFIM ring
/// form): each ZZ interaction is two qubit-resonator-mediated CZs with
/// the single-qubit phases on the second vertex.
pub fn qaoa_circuit(
    qubits: &[String],
    edges: &[(usize, usize)],
    gammas: &[f64],
    betas: &[f64],
    node_weights: Option<&[f64]>,
) -> Circuit {
    assert_eq!(gammas.len(), betas.len());
    let mut c = Circuit::new(qubits.to_vec());
    for q in qubits {
        // |+> preparation
        c.push(Instr::Rot { q: q.clone(), angle: PI / 2.0, phase: PI / 2.0 });
    }
    for (gamma, beta) in gammas.iter().zip(betas) {
        for &(i, j) in edges {
            rzz(&mut c, &qubits[i], &qubits[j], 2.0 * gamma);
        }
        if let Some(w) = node_weights {
            for (q, wi) in qubits.iter().zip(w) {
                if *wi != 0.0 {
                    c.push(Instr::Vz { comp: q.clone(), angle: 2.0 * gamma * wi });
                }
            }
        }
        for q in qubits {
            // e^{-i beta X}: PRX about x by 2 beta
            c.push(Instr::Rot { q: q.clone(), angle: 2.0 * beta, phase: 0.0 });
        }
    }
    c
}

/// RZZ(theta) = e^{-i theta/2 Z Z}, exactly: H_b CZ Rx_b(theta) CZ H_b.
/// The single-qubit gates sit on `b`, so `a` is the natural MOVE holder.
fn rzz(c: &mut Circuit, a: &str, b: &str, theta: f64) {
    let hadamard = |c: &mut Circuit| {
        // H = Ry(pi/2) . Z
        c.push(Instr::Vz { comp: b.to_string(), angle: PI });
        c.push(Instr::Rot { q: b.to_string(), angle: PI / 2.0, phase: PI / 2.0 });
    };
    hadamard(c);
    c.push(Instr::Cz { a: a.to_string(), b: b.to_string() });
    c.push(Instr::Rot { q: b.to_string(), angle: theta, phase: 0.0 });
    c.push(Instr::Cz { a: a.to_string(), b: b.to_string() });
    hadamard(c);
}
