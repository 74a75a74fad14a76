//! Gate-count models for history-state preparation.
//!
//! Trotter accounting: one step of a product formula costs `gamma l (eps t)^alpha`
//! gates for evolution time `eps t`, and making it controlled multiplies the
//! cost by `beta l`. The sequential approach runs every `t = 1..N-1`
//! separately; the clock register needs one controlled block per clock qubit,
//! of durations `eps 2^j`. All totals are exact finite sums.
//!
//! The audit side counts the gate logs of the circuits this crate builds and
//! compares them with the matching structural models.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::qcore::{Circuit, GateClass, GateCounts};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateCountModel {
    /// Trotter prefactor.
    pub gamma: f64,
    /// Control overhead per local term.
    pub beta: f64,
    /// Number of local terms.
    pub l: f64,
    /// Trotter error exponent.
    pub alpha_exp: f64,
    pub epsilon: f64,
    /// Number of times; a power of two, at least 2.
    pub n_times: u64,
}

impl Default for GateCountModel {
    fn default() -> Self {
        GateCountModel { gamma: 1.0, beta: 2.0, l: 1.0, alpha_exp: 2.0, epsilon: 1.0, n_times: 2 }
    }
}

impl GateCountModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.gamma, self.beta, self.l, self.alpha_exp, self.epsilon];
        if !positive.iter().all(|x| x.is_finite() && *x > 0.0) {
            return Err(Error::Invalid("gate-count model parameters must be positive and finite".into()));
        }
        if self.n_times < 2 || !self.n_times.is_power_of_two() {
            return Err(Error::Invalid(format!("N = {} is not a power of two >= 2", self.n_times)));
        }
        Ok(())
    }

    pub fn with_n_times(&self, n_times: u64) -> Self {
        GateCountModel { n_times, ..self.clone() }
    }

    fn log_n(&self) -> u32 {
        self.n_times.trailing_zeros()
    }

    /// `gamma l sum_{t=1}^{N-1} (eps t)^alpha`.
    pub fn seq_total(&self) -> f64 {
        let s: f64 = (1..self.n_times).map(|t| (self.epsilon * t as f64).powf(self.alpha_exp)).sum();
        self.gamma * self.l * s
    }

    /// `gamma beta l^2 sum_{j=0}^{log N - 1} (eps 2^j)^alpha`.
    pub fn par_total(&self) -> f64 {
        let s: f64 = (0..self.log_n()).map(|j| (self.epsilon * (1u64 << j) as f64).powf(self.alpha_exp)).sum();
        self.gamma * self.beta * self.l * self.l * s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthReport {
    pub n_times: u64,
    pub seq_total: f64,
    pub par_total: f64,
    /// `par_total / seq_total`; tends to `beta l / N` up to an `alpha`-dependent constant.
    pub ratio: f64,
    pub crossover_n: u64,
    /// Gate total of the diagonalized clock circuit, when a system size is attached.
    pub diag_par_total: Option<u64>,
}

pub fn trotter_counts(m: &GateCountModel) -> Result<DepthReport> {
    m.validate()?;
    let seq_total = m.seq_total();
    let par_total = m.par_total();
    Ok(DepthReport {
        n_times: m.n_times,
        seq_total,
        par_total,
        ratio: par_total / seq_total,
        crossover_n: crossover(m)?,
        diag_par_total: None,
    })
}

/// Smallest power of two `N >= 2` at which the parallel total does not exceed
/// the sequential one. `m.n_times` is ignored.
///
/// At `N = 2` both sums have one term and the ratio is exactly `beta l`, so
/// `beta l <= 1` gives `N* = 2`.
pub fn crossover(m: &GateCountModel) -> Result<u64> {
    m.with_n_times(2).validate()?;
    let mut n = 2u64;
    // Running sums: doubling N appends t = N..2N-1 and one clock term.
    let mut seq = 0.0;
    let mut par = 0.0;
    let mut next_t = 1u64;
    let mut log_n = 0u32;
    loop {
        while next_t < n {
            seq += (m.epsilon * next_t as f64).powf(m.alpha_exp);
            next_t += 1;
        }
        while log_n < n.trailing_zeros() {
            par += (m.epsilon * (1u64 << log_n) as f64).powf(m.alpha_exp);
            log_n += 1;
        }
        if m.beta * m.l * par <= seq {
            return Ok(n);
        }
        // alpha > 0 makes the ratio decay like 1/N, so this only trips on absurd models.
        if n >= 1 << 40 {
            return Err(Error::Invalid("no crossover below N = 2^40".into()));
        }
        n *= 2;
    }
}

/// Gate tallies of the diagonalized clock circuit: Hadamards, controlled Z
/// rotations and the two ansatz applications around them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DiagonalizedCounts {
    pub hadamards: u64,
    pub controlled_rotations: u64,
    pub w_gates: u64,
    pub total: u64,
}

/// `m n + 2 w + m`, or `m n + w + m` when the trailing ansatz application is
/// dropped for entanglement-only runs.
pub fn diagonalized_counts(n: u64, m_clock: u64, w_gate_count: u64, entanglement_only: bool) -> DiagonalizedCounts {
    let w_gates = if entanglement_only { w_gate_count } else { 2 * w_gate_count };
    let controlled_rotations = m_clock * n;
    DiagonalizedCounts {
        hadamards: m_clock,
        controlled_rotations,
        w_gates,
        total: m_clock + controlled_rotations + w_gates,
    }
}

impl DepthReport {
    pub fn with_diagonalized(mut self, d: &DiagonalizedCounts) -> Self {
        self.diag_par_total = Some(d.total);
        self
    }
}

/// Counted totals of a simulated circuit's gate log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GateAudit {
    pub counts: GateCounts,
    pub by_label: BTreeMap<String, usize>,
}

pub fn audit_gate_log(circuit: &Circuit) -> GateAudit {
    GateAudit { counts: circuit.counts(), by_label: circuit.counts_by_label() }
}

fn controlled_block(n: usize) -> GateCounts {
    let mut c = GateCounts::default();
    c.record(if n == 1 {
        GateClass::ControlledOneQubit
    } else {
        GateClass::ControlledMulti
    });
    c
}

fn add(a: GateCounts, b: GateCounts, times: usize) -> GateCounts {
    GateCounts {
        one_qubit: a.one_qubit + times * b.one_qubit,
        two_qubit: a.two_qubit + times * b.two_qubit,
        multi_qubit: a.multi_qubit + times * b.multi_qubit,
        controlled_one_qubit: a.controlled_one_qubit + times * b.controlled_one_qubit,
        controlled_multi: a.controlled_multi + times * b.controlled_multi,
    }
}

/// Clock circuit: `m` Hadamards and `m` controlled evolutions on `n` system qubits.
pub fn history_model(n: usize, m: usize) -> GateCounts {
    let h = GateCounts { one_qubit: m, ..Default::default() };
    add(h, controlled_block(n), m)
}

/// Clock-register Hadamard test: the clock circuit plus two ancilla Hadamards
/// (and an `S^dagger` for the imaginary branch), two controlled Paulis and `m`
/// controlled phases.
pub fn f_parallel_model(n: usize, m: usize, imaginary: bool) -> GateCounts {
    let mut c = history_model(n, m);
    c.one_qubit += 2 + usize::from(imaginary);
    c = add(c, controlled_block(n), 2);
    c.controlled_one_qubit += m;
    c
}

/// Clock circuit followed by a Bell-basis change (CNOT, H) on each of the `n`
/// system/reference pairs.
pub fn loschmidt_parallel_model(n: usize, m: usize) -> GateCounts {
    let mut c = history_model(n, m);
    c.controlled_one_qubit += n;
    c.one_qubit += n;
    c
}

/// Diagonalized clock circuit with a brickwork ansatz of `layers` layers.
pub fn diagonalized_model(n: usize, m: usize, layers: usize, entanglement_only: bool) -> GateCounts {
    let w = 2 * n.saturating_sub(1) * layers;
    GateCounts {
        one_qubit: m,
        two_qubit: if entanglement_only { w } else { 2 * w },
        controlled_one_qubit: m * n,
        ..Default::default()
    }
}

/// One table row keyed by `(n, N, model)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthRow {
    pub n: usize,
    pub n_times: u64,
    pub model: String,
    pub seq_total: f64,
    pub par_total: f64,
    pub ratio: f64,
    pub crossover_n: u64,
    pub diag_par_total: Option<u64>,
}

impl DepthRow {
    pub fn new(n: usize, model: impl Into<String>, r: &DepthReport) -> Self {
        DepthRow {
            n,
            n_times: r.n_times,
            model: model.into(),
            seq_total: r.seq_total,
            par_total: r.par_total,
            ratio: r.ratio,
            crossover_n: r.crossover_n,
            diag_par_total: r.diag_par_total,
        }
    }
}

const HEADER: [&str; 8] = ["n", "N", "model", "seq_total", "par_total", "ratio", "crossover_N", "diag_par_total"];

fn cells(r: &DepthRow) -> [String; 8] {
    [
        r.n.to_string(),
        r.n_times.to_string(),
        r.model.clone(),
        format!("{:.16e}", r.seq_total),
        format!("{:.16e}", r.par_total),
        format!("{:.16e}", r.ratio),
        r.crossover_n.to_string(),
        r.diag_par_total.map(|d| d.to_string()).unwrap_or_default(),
    ]
}

fn sorted(rows: &[DepthRow]) -> Vec<&DepthRow> {
    let mut v: Vec<&DepthRow> = rows.iter().collect();
    v.sort_by(|a, b| (a.n, a.n_times, &a.model).cmp(&(b.n, b.n_times, &b.model)));
    v
}

pub fn render_csv(rows: &[DepthRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(HEADER).map_err(io)?;
    for r in sorted(rows) {
        w.write_record(cells(r)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn render_markdown(rows: &[DepthRow]) -> String {
    let mut out = format!("| {} |\n|{}\n", HEADER.join(" | "), "---|".repeat(HEADER.len()));
    for r in sorted(rows) {
        out.push_str(&format!("| {} |\n", cells(r).join(" | ")));
    }
    out
}
