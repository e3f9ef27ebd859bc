//! Gate-count accounting.
//!
//! Raw counts are exact and independent of the cost model. The cost model
//! only turns them into elementary two-qubit gate totals: a gate conditioned
//! on `k >= 2` qubits costs `c * k` elementary gates, single-qubit and
//! singly-controlled gates cost one.
//!
//! The two shipped models differ only for the chi passes (steps 3 and 5).
//! `Paper` charges one `nu`-controlled gate per register per pass, giving the
//! `O(nu * eta)` total usually quoted for these steps. `NaiveDecoder` charges
//! every gate the circuit actually emits, `eta * N` per pass.

use std::collections::BTreeMap;

use crate::analytic::eta_schedule;
use crate::circuit::{Circuit, Gate, StepLabel};
use crate::error::{Error, Result};
use crate::oracle::{log2_exact, BooleanPredicate, SearchParameters};

/// Non-normative placeholder for the `O(nu)` decomposition constant.
pub const DEFAULT_CONTROL_COST: u64 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostModelKind {
    Paper,
    NaiveDecoder,
}

impl CostModelKind {
    pub fn name(self) -> &'static str {
        match self {
            CostModelKind::Paper => "paper",
            CostModelKind::NaiveDecoder => "naive_decoder",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModel {
    pub kind: CostModelKind,
    pub control_cost: u64,
}

impl CostModel {
    pub fn new(kind: CostModelKind, control_cost: u64) -> Result<Self> {
        if control_cost == 0 {
            return Err(Error::domain("control cost constant must be positive"));
        }
        Ok(Self { kind, control_cost })
    }

    pub fn paper() -> Self {
        Self {
            kind: CostModelKind::Paper,
            control_cost: DEFAULT_CONTROL_COST,
        }
    }

    pub fn naive_decoder() -> Self {
        Self {
            kind: CostModelKind::NaiveDecoder,
            control_cost: DEFAULT_CONTROL_COST,
        }
    }

    /// Elementary gates for a gate conditioned on `controls` qubits.
    pub fn cost_of_multi_controlled(&self, controls: usize) -> u64 {
        if controls <= 1 {
            1
        } else {
            self.control_cost * controls as u64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepCounts {
    pub hadamards: u64,
    pub sigma_z: u64,
    pub multi_controlled_flips: u64,
    pub multi_controlled_phases: u64,
    pub elementary: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateTally {
    pub model: CostModel,
    pub hadamards: u64,
    pub sigma_z: u64,
    pub multi_controlled_flips: u64,
    pub multi_controlled_phases: u64,
    pub elementary_total: u64,
    pub classical_sort_comparisons: u64,
    pub by_step: BTreeMap<StepLabel, StepCounts>,
}

impl GateTally {
    /// Per-category raw counts: hadamards, sigma_z, flips, phases.
    pub fn raw_counts(&self) -> [u64; 4] {
        [
            self.hadamards,
            self.sigma_z,
            self.multi_controlled_flips,
            self.multi_controlled_phases,
        ]
    }

    fn from_steps(model: CostModel, by_step: BTreeMap<StepLabel, StepCounts>, eta: usize) -> Self {
        let sum = |f: fn(&StepCounts) -> u64| by_step.values().map(f).sum::<u64>();
        GateTally {
            model,
            hadamards: sum(|s| s.hadamards),
            sigma_z: sum(|s| s.sigma_z),
            multi_controlled_flips: sum(|s| s.multi_controlled_flips),
            multi_controlled_phases: sum(|s| s.multi_controlled_phases),
            elementary_total: sum(|s| s.elementary),
            classical_sort_comparisons: sort_comparisons(eta),
            by_step,
        }
    }
}

/// `ceil(eta * log2 eta)`.
pub fn sort_comparisons(eta: usize) -> u64 {
    if eta <= 1 {
        return 0;
    }
    let e = eta as f64;
    (e * e.log2()).ceil() as u64
}

/// Elementary cost of one chi pass under `model`.
fn chi_pass_cost(model: &CostModel, nu: usize, eta: usize, n_items: usize) -> u64 {
    let per_gate = model.cost_of_multi_controlled(nu);
    let population = match model.kind {
        CostModelKind::Paper => eta as u64,
        CostModelKind::NaiveDecoder => (eta * n_items) as u64,
    };
    population * per_gate
}

/// Closed-form tally for the circuit built from `params` and `pred`.
pub fn predict_tally(
    params: &SearchParameters,
    pred: &BooleanPredicate,
    model: CostModel,
) -> GateTally {
    let (nu, eta, n) = (
        params.nu() as u64,
        params.eta() as u64,
        params.n_items() as u64,
    );
    let t = pred.marked_count() as u64;
    let phase_cost = model.cost_of_multi_controlled(params.nu());
    let chi_cost = chi_pass_cost(&model, params.nu(), params.eta(), params.n_items());

    let mut by_step = BTreeMap::new();
    by_step.insert(StepLabel::Step1, StepCounts::default());
    by_step.insert(
        StepLabel::Step2a,
        StepCounts {
            hadamards: nu * eta + 1,
            elementary: nu * eta + 1,
            ..Default::default()
        },
    );
    by_step.insert(
        StepLabel::Step2b,
        StepCounts {
            sigma_z: 1,
            elementary: 1,
            ..Default::default()
        },
    );
    let chi = StepCounts {
        multi_controlled_flips: eta * n,
        elementary: chi_cost,
        ..Default::default()
    };
    by_step.insert(StepLabel::Step3, chi);
    by_step.insert(
        StepLabel::Step4,
        StepCounts {
            multi_controlled_flips: t,
            elementary: t * model.cost_of_multi_controlled(1),
            ..Default::default()
        },
    );
    by_step.insert(StepLabel::Step5, chi);
    by_step.insert(
        StepLabel::Step6,
        StepCounts {
            hadamards: 2 * nu * eta,
            multi_controlled_phases: eta,
            elementary: 2 * nu * eta + eta * phase_cost,
            ..Default::default()
        },
    );
    GateTally::from_steps(model, by_step, params.eta())
}

/// Tally obtained by walking an emitted gate list.
pub fn tally_circuit(circuit: &Circuit, model: CostModel) -> GateTally {
    let layout = circuit.layout();
    let mut by_step: BTreeMap<StepLabel, StepCounts> = BTreeMap::new();
    for block in circuit.blocks() {
        let counts = by_step.entry(block.label).or_default();
        for gate in &block.gates {
            match gate {
                Gate::Hadamard { .. } => {
                    counts.hadamards += 1;
                    counts.elementary += 1;
                }
                Gate::SigmaZ { .. } => {
                    counts.sigma_z += 1;
                    counts.elementary += 1;
                }
                Gate::ValueControlledFlip { controls, .. } => {
                    counts.multi_controlled_flips += 1;
                    counts.elementary += model.cost_of_multi_controlled(controls.len());
                }
                Gate::ValueControlledPhase { controls, .. } => {
                    counts.multi_controlled_phases += 1;
                    counts.elementary += model.cost_of_multi_controlled(controls.len());
                }
            }
        }
    }
    // The paper model charges one gate per register for each chi pass.
    if model.kind == CostModelKind::Paper {
        let cost = chi_pass_cost(&model, layout.nu(), layout.eta(), layout.n_items());
        for step in [StepLabel::Step3, StepLabel::Step5] {
            if let Some(c) = by_step.get_mut(&step) {
                c.elementary = cost;
            }
        }
    }
    GateTally::from_steps(model, by_step, layout.eta())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticReport {
    pub n_items: usize,
    pub eta: usize,
    pub nu_eta_term: u64,
    pub eta_log_eta_term: f64,
    pub n_eta_term: u64,
    /// `N^2 (log2 N)^2`.
    pub paper_total_claim: u64,
}

pub fn asymptotic_report(n_items: usize, constant_c: f64) -> Result<AsymptoticReport> {
    let nu = log2_exact(n_items)? as u64;
    let eta = eta_schedule(n_items, constant_c)?;
    let n = n_items as u64;
    let e = eta as f64;
    Ok(AsymptoticReport {
        n_items,
        eta,
        nu_eta_term: nu * eta as u64,
        eta_log_eta_term: if eta > 1 { e * e.log2() } else { 0.0 },
        n_eta_term: n * eta as u64,
        paper_total_claim: n * n * nu * nu,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryComparison {
    pub complex_queries: u64,
    pub elementary_queries: u64,
}

/// One complex query against `ceil(c * sqrt(N / t))` elementary ones.
pub fn query_count_comparison(
    n_items: usize,
    marked_count: usize,
    grover_constant: f64,
) -> Result<QueryComparison> {
    if marked_count == 0 {
        return Err(Error::domain(
            "query comparison needs t >= 1: sqrt(N/t) is undefined without a target",
        ));
    }
    if marked_count > n_items {
        return Err(Error::domain(format!(
            "marked count {marked_count} exceeds {n_items} items"
        )));
    }
    if !(grover_constant > 0.0 && grover_constant.is_finite()) {
        return Err(Error::domain("query-count constant must be positive"));
    }
    let ratio = n_items as f64 / marked_count as f64;
    Ok(QueryComparison {
        complex_queries: 1,
        elementary_queries: (grover_constant * ratio.sqrt()).ceil() as u64,
    })
}
