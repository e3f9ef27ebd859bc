//! The search circuit: gate-list construction, execution with optional
//! snapshots of the intermediate states, measurement of the sample
//! registers and the classical majority vote.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{analytic_product_state, AmplitudeModel};
use crate::error::{Error, Result};
use crate::oracle::{BooleanPredicate, SampleTuple, SearchParameters};
use crate::statevector::{fidelity_mod_phase, make_basis_state, RegisterLayout, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StepLabel {
    Step1,
    Step2a,
    Step2b,
    Step3,
    Step4,
    Step5,
    Step6,
}

impl StepLabel {
    pub const ALL: [StepLabel; 7] = [
        StepLabel::Step1,
        StepLabel::Step2a,
        StepLabel::Step2b,
        StepLabel::Step3,
        StepLabel::Step4,
        StepLabel::Step5,
        StepLabel::Step6,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StepLabel::Step1 => "step1",
            StepLabel::Step2a => "step2a",
            StepLabel::Step2b => "step2b",
            StepLabel::Step3 => "step3",
            StepLabel::Step4 => "step4",
            StepLabel::Step5 => "step5",
            StepLabel::Step6 => "step6",
        }
    }
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StepLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StepLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::domain(format!("unknown step label {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    Hadamard {
        qubit: usize,
    },
    SigmaZ {
        qubit: usize,
    },
    ValueControlledFlip {
        controls: Vec<usize>,
        value: u64,
        target: usize,
    },
    ValueControlledPhase {
        controls: Vec<usize>,
        value: u64,
    },
}

impl Gate {
    pub fn kind(&self) -> &'static str {
        match self {
            Gate::Hadamard { .. } => "hadamard",
            Gate::SigmaZ { .. } => "sigma_z",
            Gate::ValueControlledFlip { .. } => "value_controlled_flip",
            Gate::ValueControlledPhase { .. } => "value_controlled_phase",
        }
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        match self {
            Gate::Hadamard { qubit } => state.apply_hadamard(*qubit),
            Gate::SigmaZ { qubit } => state.apply_sigma_z(*qubit),
            Gate::ValueControlledFlip {
                controls,
                value,
                target,
            } => state.apply_value_controlled_flip(controls, *value, *target),
            Gate::ValueControlledPhase { controls, value } => {
                state.apply_value_controlled_phase(controls, *value)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GateRecord {
    pub step: StepLabel,
    pub gate: Gate,
}

fn join(qubits: &[usize]) -> String {
    qubits
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// One trace line: `<step> <kind> <qubits> <value>`, where flips write their
/// qubits as `controls->target` and gates without a value write `-`.
impl fmt::Display for GateRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (qubits, value) = match &self.gate {
            Gate::Hadamard { qubit } | Gate::SigmaZ { qubit } => (qubit.to_string(), None),
            Gate::ValueControlledFlip {
                controls,
                value,
                target,
            } => (format!("{}->{target}", join(controls)), Some(*value)),
            Gate::ValueControlledPhase { controls, value } => (join(controls), Some(*value)),
        };
        let value = value.map_or_else(|| "-".to_string(), |v| v.to_string());
        write!(f, "{} {} {} {}", self.step, self.gate.kind(), qubits, value)
    }
}

fn parse_qubits(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| Error::domain(format!("invalid qubit index {p:?}")))
        })
        .collect()
}

impl FromStr for GateRecord {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [step, kind, qubits, value] = fields[..] else {
            return Err(Error::domain(format!("malformed trace line {line:?}")));
        };
        let step = step.parse()?;
        let value = match value {
            "-" => None,
            v => Some(
                v.parse::<u64>()
                    .map_err(|_| Error::domain(format!("invalid control value {v:?}")))?,
            ),
        };
        let single = |qubits: &str| -> Result<usize> {
            qubits
                .parse()
                .map_err(|_| Error::domain(format!("invalid qubit index {qubits:?}")))
        };
        let missing = || Error::domain(format!("trace line {line:?} lacks a control value"));
        let gate = match kind {
            "hadamard" => Gate::Hadamard {
                qubit: single(qubits)?,
            },
            "sigma_z" => Gate::SigmaZ {
                qubit: single(qubits)?,
            },
            "value_controlled_flip" => {
                let (controls, target) = qubits
                    .split_once("->")
                    .ok_or_else(|| Error::domain(format!("flip without target in {line:?}")))?;
                Gate::ValueControlledFlip {
                    controls: parse_qubits(controls)?,
                    value: value.ok_or_else(missing)?,
                    target: single(target)?,
                }
            }
            "value_controlled_phase" => Gate::ValueControlledPhase {
                controls: parse_qubits(qubits)?,
                value: value.ok_or_else(missing)?,
            },
            other => return Err(Error::domain(format!("unknown gate kind {other:?}"))),
        };
        Ok(GateRecord { step, gate })
    }
}

/// The gates emitted by one step of the algorithm. Every step has exactly
/// one block, even when it emits no gates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepBlock {
    pub label: StepLabel,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    layout: RegisterLayout,
    blocks: Vec<StepBlock>,
}

impl Circuit {
    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn blocks(&self) -> &[StepBlock] {
        &self.blocks
    }

    pub fn block(&self, label: StepLabel) -> Option<&StepBlock> {
        self.blocks.iter().find(|b| b.label == label)
    }

    pub fn records(&self) -> impl Iterator<Item = GateRecord> + '_ {
        self.blocks.iter().flat_map(|b| {
            b.gates.iter().map(move |g| GateRecord {
                step: b.label,
                gate: g.clone(),
            })
        })
    }

    /// Number of complex-query (step 4) blocks; always one for a built
    /// circuit.
    pub fn oracle_block_count(&self) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.label == StepLabel::Step4)
            .count()
    }

    pub fn to_trace(&self) -> String {
        self.records().map(|r| format!("{r}\n")).collect()
    }
}

pub fn parse_trace(text: &str) -> Result<Vec<GateRecord>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::parse)
        .collect()
}

/// Emits the gate list of steps 1 to 6.
pub fn build_circuit(
    params: &SearchParameters,
    pred: &BooleanPredicate,
    qubit_cap: usize,
) -> Result<Circuit> {
    if pred.size() != params.n_items() {
        return Err(Error::domain(format!(
            "predicate over {} items used with N = {}",
            pred.size(),
            params.n_items()
        )));
    }
    let layout = RegisterLayout::new(params);
    if layout.total_qubits() > qubit_cap {
        return Err(capacity_error(&layout, qubit_cap));
    }
    let ancilla = layout.ancilla();
    let registers: Vec<Vec<usize>> = (1..=layout.eta())
        .map(|i| layout.sample_register(i))
        .collect();

    let step2a = layout
        .sample_qubits()
        .into_iter()
        .chain([ancilla])
        .map(|qubit| Gate::Hadamard { qubit })
        .collect();
    let step2b = vec![Gate::SigmaZ { qubit: ancilla }];

    // chi_j: flip incidence qubit j once for every register holding item j
    let chi_pass: Vec<Gate> = registers
        .iter()
        .flat_map(|register| {
            (1..=layout.n_items()).map(|j| Gate::ValueControlledFlip {
                controls: register.clone(),
                value: (j - 1) as u64,
                target: layout.incidence_qubit(j),
            })
        })
        .collect();

    // f~(X) = sum_j f(j) chi_j mod 2, kicked back through the |0>-|1> ancilla
    let step4 = pred
        .marks()
        .into_iter()
        .map(|j| Gate::ValueControlledFlip {
            controls: vec![layout.incidence_qubit(j)],
            value: 1,
            target: ancilla,
        })
        .collect();

    let step6 = registers
        .iter()
        .flat_map(|register| {
            let h = register.iter().map(|&qubit| Gate::Hadamard { qubit });
            h.clone()
                .chain([Gate::ValueControlledPhase {
                    controls: register.clone(),
                    value: 0,
                }])
                .chain(h)
                .collect::<Vec<_>>()
        })
        .collect();

    let blocks = vec![
        StepBlock {
            label: StepLabel::Step1,
            gates: Vec::new(),
        },
        StepBlock {
            label: StepLabel::Step2a,
            gates: step2a,
        },
        StepBlock {
            label: StepLabel::Step2b,
            gates: step2b,
        },
        StepBlock {
            label: StepLabel::Step3,
            gates: chi_pass.clone(),
        },
        StepBlock {
            label: StepLabel::Step4,
            gates: step4,
        },
        StepBlock {
            label: StepLabel::Step5,
            gates: chi_pass,
        },
        StepBlock {
            label: StepLabel::Step6,
            gates: step6,
        },
    ];
    Ok(Circuit { layout, blocks })
}

fn capacity_error(layout: &RegisterLayout, cap: usize) -> Error {
    Error::capacity(format!(
        "the circuit needs nu*eta + N + 1 = {}*{} + {} + 1 = {} qubits, simulator cap is {cap}",
        layout.nu(),
        layout.eta(),
        layout.n_items(),
        layout.total_qubits()
    ))
}

/// The states psi_1 .. psi_6, captured after steps 1, 2b, 3, 4, 5 and 6.
#[derive(Debug, Clone)]
pub struct Intermediates {
    pub psi: Vec<StateVector>,
}

impl Intermediates {
    /// `psi(k)` for `k` in `1..=6`.
    pub fn psi(&self, k: usize) -> &StateVector {
        &self.psi[k - 1]
    }
}

#[derive(Debug, Clone)]
pub struct CircuitRun {
    pub circuit: Circuit,
    pub final_state: StateVector,
    pub intermediates: Option<Intermediates>,
}

pub fn run_circuit(
    params: &SearchParameters,
    pred: &BooleanPredicate,
    capture: bool,
    qubit_cap: usize,
) -> Result<CircuitRun> {
    let circuit = build_circuit(params, pred, qubit_cap)?;
    let mut state = make_basis_state(circuit.layout(), qubit_cap)?;
    let mut snapshots = Vec::new();
    for block in circuit.blocks() {
        for gate in &block.gates {
            gate.apply(&mut state)?;
        }
        if capture && block.label != StepLabel::Step2a {
            snapshots.push(state.clone());
        }
    }
    Ok(CircuitRun {
        circuit,
        final_state: state,
        intermediates: capture.then_some(Intermediates { psi: snapshots }),
    })
}

/// Draws one value per sample register from that register's marginal.
pub fn measure_samples(
    state: &StateVector,
    layout: &RegisterLayout,
    seed: u64,
) -> Result<SampleTuple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (1..=layout.eta())
        .map(|i| {
            let marginal = state.marginal_distribution(&layout.sample_register(i))?;
            let dist = WeightedIndex::new(&marginal)
                .map_err(|e| Error::domain(format!("degenerate register marginal: {e}")))?;
            Ok(dist.sample(&mut rng) + 1)
        })
        .collect::<Result<Vec<_>>>()?;
    SampleTuple::new(layout.n_items(), values)
}

/// Rule for choosing among items that share the maximal frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    LowestIndex,
    /// Uniform choice among the tied items. The seed drives
    /// [`majority_postprocess`]; Monte Carlo estimation uses its own per-trial
    /// streams and exact computation credits ties fractionally.
    Random {
        seed: u64,
    },
}

impl TieBreak {
    pub fn name(&self) -> &'static str {
        match self {
            TieBreak::LowestIndex => "lowest",
            TieBreak::Random { .. } => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub samples: SampleTuple,
    pub frequencies: BTreeMap<usize, usize>,
    pub winner: usize,
    pub winner_satisfies: bool,
    pub tie_detected: bool,
}

/// Picks the winner from per-item counts (`counts[j - 1]` for item `j`).
/// `rng` is consulted only on a tie and only when given.
pub(crate) fn select_winner<R: Rng>(counts: &[usize], rng: Option<&mut R>) -> (usize, bool) {
    let max = counts.iter().copied().max().unwrap_or(0);
    let tied: Vec<usize> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == max)
        .map(|(i, _)| i + 1)
        .collect();
    let tie = tied.len() > 1;
    let winner = match rng {
        Some(rng) if tie => tied[rng.gen_range(0..tied.len())],
        _ => tied[0],
    };
    (winner, tie)
}

pub fn majority_postprocess(
    samples: &SampleTuple,
    pred: &BooleanPredicate,
    tie_break: TieBreak,
) -> Result<SearchOutcome> {
    if samples.is_empty() {
        return Err(Error::domain("majority vote over an empty sample set"));
    }
    if samples.n_items() != pred.size() {
        return Err(Error::domain("samples and predicate disagree on N"));
    }
    let mut counts = vec![0usize; samples.n_items()];
    for &x in samples.values() {
        counts[x - 1] += 1;
    }
    let (winner, tie_detected) = match tie_break {
        TieBreak::LowestIndex => select_winner::<ChaCha8Rng>(&counts, None),
        TieBreak::Random { seed } => {
            select_winner(&counts, Some(&mut ChaCha8Rng::seed_from_u64(seed)))
        }
    };
    let frequencies = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i + 1, c))
        .collect();
    Ok(SearchOutcome {
        samples: samples.clone(),
        frequencies,
        winner,
        winner_satisfies: pred.is_marked(winner),
        tie_detected,
    })
}

/// Runs steps 1 to 8 and returns the majority-vote outcome.
pub fn run_search(
    params: &SearchParameters,
    pred: &BooleanPredicate,
    seed: u64,
    tie_break: TieBreak,
    qubit_cap: usize,
) -> Result<SearchOutcome> {
    let run = run_circuit(params, pred, false, qubit_cap)?;
    assert_eq!(run.circuit.oracle_block_count(), 1);
    let samples = measure_samples(&run.final_state, run.circuit.layout(), seed)?;
    majority_postprocess(&samples, pred, tie_break)
}

/// `sample_state (x) |0...0> (x) (|0> - |1>)/sqrt(2)` on the full layout.
pub fn embed_sample_state(
    layout: &RegisterLayout,
    sample_state: &StateVector,
    qubit_cap: usize,
) -> Result<StateVector> {
    if sample_state.n_qubits() != layout.sample_qubit_count() {
        return Err(Error::domain(
            "sample state does not match the sample registers",
        ));
    }
    let incidence = StateVector::zero(layout.n_items(), qubit_cap)?;
    let minus = StateVector::from_amplitudes(vec![1.0.into(), (-1.0).into()])?;
    sample_state
        .tensor_high(&incidence, qubit_cap)?
        .tensor_high(&minus, qubit_cap)
}

/// `(sum_x (-1)^{f(x)} |x>)^{(x) eta}`, normalized.
pub fn phase_kickback_state(
    pred: &BooleanPredicate,
    eta: usize,
    qubit_cap: usize,
) -> Result<StateVector> {
    let register: Vec<f64> = (1..=pred.size())
        .map(|x| if pred.is_marked(x) { -1.0 } else { 1.0 })
        .collect();
    StateVector::register_product(&register, eta, qubit_cap)
}

/// Verification values derived from captured intermediates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitChecks {
    /// Probability that the incidence register reads all-zero after step 5.
    pub disentanglement_probability: f64,
    /// Fidelity of psi_5 with the phase-kicked product state.
    pub phase_kickback_fidelity: f64,
    /// Fidelity of psi_6 with the analytic product state.
    pub factorization_fidelity: f64,
}

pub fn circuit_checks(
    run: &CircuitRun,
    pred: &BooleanPredicate,
    qubit_cap: usize,
) -> Result<CircuitChecks> {
    let inter = run
        .intermediates
        .as_ref()
        .ok_or_else(|| Error::domain("circuit checks need captured intermediates"))?;
    let layout = run.circuit.layout();
    let psi5 = inter.psi(5);
    let psi6 = inter.psi(6);

    let disentanglement_probability = psi5.marginal_distribution(&layout.incidence_qubits())?[0];
    let kicked = embed_sample_state(
        layout,
        &phase_kickback_state(pred, layout.eta(), qubit_cap)?,
        qubit_cap,
    )?;
    let model = AmplitudeModel::new(layout.n_items(), pred.marked_count())?;
    let analytic = analytic_product_state(&model, pred, layout.eta(), qubit_cap)?;
    let analytic = embed_sample_state(layout, &analytic, qubit_cap)?;
    Ok(CircuitChecks {
        disentanglement_probability,
        phase_kickback_fidelity: fidelity_mod_phase(psi5, &kicked)?,
        factorization_fidelity: fidelity_mod_phase(psi6, &analytic)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::DEFAULT_QUBIT_CAP;
    use proptest::prelude::*;

    const CAP: usize = DEFAULT_QUBIT_CAP;

    fn params(n: usize, eta: usize) -> SearchParameters {
        SearchParameters::new(n, eta).unwrap()
    }

    fn pred(n: usize, marks: &[usize]) -> BooleanPredicate {
        BooleanPredicate::from_marks(n, marks).unwrap()
    }

    fn count(c: &Circuit, step: StepLabel, kind: &str) -> usize {
        c.records()
            .filter(|r| r.step == step && r.gate.kind() == kind)
            .count()
    }

    #[test]
    fn gate_counts_small_instance() {
        let c = build_circuit(&params(2, 2), &pred(2, &[1]), CAP).unwrap();
        assert_eq!(count(&c, StepLabel::Step2a, "hadamard"), 3);
        assert_eq!(count(&c, StepLabel::Step3, "value_controlled_flip"), 4);
        assert_eq!(count(&c, StepLabel::Step5, "value_controlled_flip"), 4);
        assert_eq!(count(&c, StepLabel::Step4, "value_controlled_flip"), 1);
        assert_eq!(c.block(StepLabel::Step1).unwrap().gates.len(), 0);
        assert_eq!(c.oracle_block_count(), 1);
        assert_eq!(
            c.block(StepLabel::Step3),
            c.block(StepLabel::Step5)
                .map(|b| StepBlock {
                    label: StepLabel::Step3,
                    gates: b.gates.clone()
                })
                .as_ref()
        );
    }

    #[test]
    fn empty_predicate_still_has_oracle_block() {
        let c = build_circuit(&params(4, 2), &pred(4, &[]), CAP).unwrap();
        assert_eq!(c.oracle_block_count(), 1);
        assert!(c.block(StepLabel::Step4).unwrap().gates.is_empty());
    }

    #[test]
    fn build_rejects_over_cap() {
        let err = build_circuit(&params(32, 4), &pred(32, &[]), CAP).unwrap_err();
        assert!(err.is_capacity());
        assert!(err.to_string().contains("53"));
        assert!(build_circuit(&params(4, 1), &pred(2, &[]), CAP).is_err());
    }

    #[test]
    fn psi2_is_uniform() {
        let run = run_circuit(&params(4, 2), &pred(4, &[2]), true, CAP).unwrap();
        let psi2 = run.intermediates.as_ref().unwrap().psi(2);
        let expected = 2f64.powf(-(2.0 * 2.0 + 1.0) / 2.0);
        let nonzero: Vec<_> = psi2
            .amplitudes()
            .iter()
            .filter(|a| a.norm() > 1e-14)
            .collect();
        assert_eq!(nonzero.len(), 1 << 5);
        assert!(nonzero.iter().all(|a| (a.norm() - expected).abs() < 1e-12));
        let layout = run.circuit.layout();
        let anc = psi2.marginal_distribution(&[layout.ancilla()]).unwrap();
        assert!((anc[0] - 0.5).abs() < 1e-12 && (anc[1] - 0.5).abs() < 1e-12);
        let reg = psi2
            .marginal_distribution(&layout.sample_register(1))
            .unwrap();
        assert!(reg.iter().all(|p| (p - 0.25).abs() < 1e-12));
    }

    #[test]
    fn psi1_is_all_zero() {
        let run = run_circuit(&params(2, 1), &pred(2, &[1]), true, CAP).unwrap();
        let inter = run.intermediates.unwrap();
        assert_eq!(inter.psi.len(), 6);
        assert_eq!(inter.psi(1).amplitudes()[0].re, 1.0);
    }

    #[test]
    fn psi5_disentangles_and_psi6_factorizes() {
        for table in 0..16u64 {
            let p = BooleanPredicate::from_truth_table(4, table);
            let run = run_circuit(&params(4, 2), &p, true, CAP).unwrap();
            let checks = circuit_checks(&run, &p, CAP).unwrap();
            assert!(checks.disentanglement_probability >= 1.0 - 1e-10);
            assert!(checks.phase_kickback_fidelity >= 1.0 - 1e-10);
            assert!(checks.factorization_fidelity >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn certain_success_puts_all_weight_on_mark() {
        let run = run_circuit(&params(4, 1), &pred(4, &[2]), false, CAP).unwrap();
        let m = run
            .final_state
            .marginal_distribution(&run.circuit.layout().sample_register(1))
            .unwrap();
        assert!((m[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measurement_is_deterministic_per_seed() {
        let run = run_circuit(&params(4, 3), &pred(4, &[1, 2]), false, CAP).unwrap();
        let a = measure_samples(&run.final_state, run.circuit.layout(), 42).unwrap();
        let b = measure_samples(&run.final_state, run.circuit.layout(), 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn measurement_on_certain_instance() {
        let run = run_circuit(&params(4, 3), &pred(4, &[3]), false, CAP).unwrap();
        for seed in 0..20 {
            let s = measure_samples(&run.final_state, run.circuit.layout(), seed).unwrap();
            assert_eq!(s.values(), &[3, 3, 3]);
        }
    }

    #[test]
    fn measurement_statistics_n2() {
        // k^2 = l^2 = 1/2 at N=2, t=1: measure a single-register state 1000 times
        let run = run_circuit(&params(2, 1), &pred(2, &[1]), false, CAP).unwrap();
        let eta = 1000;
        let hits = (0..eta)
            .filter(|&seed| {
                measure_samples(&run.final_state, run.circuit.layout(), seed)
                    .unwrap()
                    .values()[0]
                    == 1
            })
            .count() as f64;
        let sigma = (eta as f64 * 0.25).sqrt();
        assert!(
            (hits - eta as f64 / 2.0).abs() <= 3.0 * sigma,
            "hits {hits}"
        );
    }

    #[test]
    fn joint_marginal_is_product_of_register_marginals() {
        // measuring registers independently equals collapsing the joint state
        let p = pred(4, &[1, 4]);
        let run = run_circuit(&params(4, 3), &p, false, CAP).unwrap();
        let layout = run.circuit.layout();
        let joint = run
            .final_state
            .marginal_distribution(&layout.sample_qubits())
            .unwrap();
        let regs: Vec<Vec<f64>> = (1..=3)
            .map(|i| {
                run.final_state
                    .marginal_distribution(&layout.sample_register(i))
                    .unwrap()
            })
            .collect();
        for (idx, &p_joint) in joint.iter().enumerate() {
            let product: f64 = (0..3).map(|i| regs[i][idx >> (2 * i) & 3]).product();
            assert!((p_joint - product).abs() < 1e-12);
        }
    }

    #[test]
    fn majority_examples() {
        let p = pred(4, &[3]);
        let s = |v: &[usize]| SampleTuple::new(4, v.to_vec()).unwrap();
        let o = majority_postprocess(&s(&[3, 3, 1]), &p, TieBreak::LowestIndex).unwrap();
        assert_eq!(
            (o.winner, o.tie_detected, o.winner_satisfies),
            (3, false, true)
        );
        assert_eq!(o.frequencies, BTreeMap::from([(1, 1), (3, 2)]));
        let o = majority_postprocess(&s(&[1, 2]), &p, TieBreak::LowestIndex).unwrap();
        assert_eq!((o.winner, o.tie_detected), (1, true));
        let o = majority_postprocess(&s(&[2, 2, 2]), &p, TieBreak::LowestIndex).unwrap();
        assert_eq!(o.winner, 2);
        assert!(majority_postprocess(&s(&[]), &p, TieBreak::LowestIndex).is_err());

        let winners: std::collections::BTreeSet<usize> = (0..64)
            .map(|seed| {
                majority_postprocess(&s(&[1, 2, 4]), &p, TieBreak::Random { seed })
                    .unwrap()
                    .winner
            })
            .collect();
        assert_eq!(winners, [1, 2, 4].into());
    }

    #[test]
    fn run_search_examples() {
        for seed in 0..10 {
            let o = run_search(
                &params(4, 3),
                &pred(4, &[3]),
                seed,
                TieBreak::LowestIndex,
                CAP,
            )
            .unwrap();
            assert_eq!(o.winner, 3);
            assert!(o.winner_satisfies);
        }
        let o = run_search(&params(2, 5), &pred(2, &[]), 9, TieBreak::LowestIndex, CAP).unwrap();
        assert!(!o.winner_satisfies);
        let o = run_search(
            &params(4, 2),
            &pred(4, &[1, 2, 3, 4]),
            9,
            TieBreak::LowestIndex,
            CAP,
        )
        .unwrap();
        assert!(o.winner_satisfies);
    }

    #[test]
    fn trace_round_trip() {
        let c = build_circuit(&params(4, 2), &pred(4, &[2, 3]), CAP).unwrap();
        let trace = c.to_trace();
        assert!(trace.starts_with("step2a hadamard 0 -\n"));
        assert!(trace.contains("step3 value_controlled_flip 0,1->4 0\n"));
        assert!(trace.contains("step4 value_controlled_flip 5->8 1\n"));
        assert!(trace.contains("step6 value_controlled_phase 0,1 0\n"));
        let parsed = parse_trace(&trace).unwrap();
        assert_eq!(parsed, c.records().collect::<Vec<_>>());
        assert!(parse_trace("step9 hadamard 0 -").is_err());
        assert!(parse_trace("step3 value_controlled_flip 0,1 0").is_err());
    }

    proptest! {
        #[test]
        fn gate_record_display_parses_back(
            step in 0usize..7,
            controls in proptest::collection::vec(0usize..40, 1..5),
            value in any::<u64>(),
            target in 0usize..40,
            kind in 0u8..4,
        ) {
            let gate = match kind {
                0 => Gate::Hadamard { qubit: target },
                1 => Gate::SigmaZ { qubit: target },
                2 => Gate::ValueControlledFlip { controls, value, target },
                _ => Gate::ValueControlledPhase { controls, value },
            };
            let rec = GateRecord { step: StepLabel::ALL[step], gate };
            prop_assert_eq!(rec.to_string().parse::<GateRecord>().unwrap(), rec);
        }
    }
}
