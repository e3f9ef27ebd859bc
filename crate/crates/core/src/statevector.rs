//! Dense statevector simulation restricted to the gates the search circuit
//! uses.
//!
//! Qubit `q` is bit `q` of the basis-state index (least significant first).
//! Multi-qubit values spelled on an ordered qubit list put bit `k` of the
//! value on the `k`-th listed qubit.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oracle::SearchParameters;

/// Default upper bound on simulated qubits (2^24 amplitudes, 256 MiB).
pub const DEFAULT_QUBIT_CAP: usize = 24;

/// Qubit assignment for `nu * eta + N + 1` qubits: the `eta` sample
/// registers occupy the low qubits, followed by the `N` incidence qubits and
/// the ancilla on top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    nu: usize,
    eta: usize,
    n_items: usize,
}

impl RegisterLayout {
    pub fn new(params: &SearchParameters) -> Self {
        Self {
            nu: params.nu(),
            eta: params.eta(),
            n_items: params.n_items(),
        }
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn sample_qubit_count(&self) -> usize {
        self.nu * self.eta
    }

    pub fn total_qubits(&self) -> usize {
        self.sample_qubit_count() + self.n_items + 1
    }

    /// Qubits of sample register `i` (1-based), least significant first.
    pub fn sample_register(&self, i: usize) -> Vec<usize> {
        assert!(
            (1..=self.eta).contains(&i),
            "sample register {i} out of range"
        );
        ((i - 1) * self.nu..i * self.nu).collect()
    }

    pub fn sample_qubits(&self) -> Vec<usize> {
        (0..self.sample_qubit_count()).collect()
    }

    /// Qubit holding `chi_j` (1-based item `j`).
    pub fn incidence_qubit(&self, j: usize) -> usize {
        assert!((1..=self.n_items).contains(&j), "item {j} out of range");
        self.sample_qubit_count() + j - 1
    }

    pub fn incidence_qubits(&self) -> Vec<usize> {
        (1..=self.n_items)
            .map(|j| self.incidence_qubit(j))
            .collect()
    }

    pub fn ancilla(&self) -> usize {
        self.sample_qubit_count() + self.n_items
    }
}

/// Normalized amplitudes over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

fn check_cap(n_qubits: usize, cap: usize) -> Result<()> {
    if n_qubits > cap {
        return Err(Error::capacity(format!(
            "{n_qubits} qubits requested, simulator cap is {cap}"
        )));
    }
    Ok(())
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize, cap: usize) -> Result<Self> {
        check_cap(n_qubits, cap)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps an amplitude vector of length `2^n`, normalizing it.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::domain(format!(
                "amplitude vector length {len} is not a power of two"
            )));
        }
        let mut state = Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        };
        let norm = state.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::domain(
                "amplitude vector has zero or non-finite norm",
            ));
        }
        state.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(Complex64::norm_sqr)
            .sum::<f64>()
            .sqrt()
    }

    /// Tensor product with `high` placed on the qubits above this state's.
    pub fn tensor_high(&self, high: &StateVector, cap: usize) -> Result<StateVector> {
        let n_qubits = self.n_qubits + high.n_qubits;
        check_cap(n_qubits, cap)?;
        let amplitudes = high
            .amplitudes
            .iter()
            .flat_map(|h| self.amplitudes.iter().map(move |l| h * l))
            .collect();
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    /// `copies`-fold tensor power of a single-register state with real
    /// amplitudes `register` (normalized), copy `i` on the `i`-th block of
    /// qubits from the bottom.
    pub fn register_product(register: &[f64], copies: usize, cap: usize) -> Result<StateVector> {
        if copies == 0 {
            return Err(Error::domain("tensor power needs at least one copy"));
        }
        let single = StateVector::from_amplitudes(register.iter().map(|&a| a.into()).collect())?;
        check_cap(single.n_qubits * copies, cap)?;
        let mut state = single.clone();
        for _ in 1..copies {
            state = state.tensor_high(&single, cap)?;
        }
        Ok(state)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::domain(format!(
                "qubit {q} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Mask and bit pattern selecting basis states whose `controls` spell
    /// `value`.
    fn control_pattern(&self, controls: &[usize], value: u64) -> Result<(usize, usize)> {
        if controls.len() >= 64 || value >> controls.len() != 0 {
            return Err(Error::domain(format!(
                "control value {value} does not fit in {} control qubits",
                controls.len()
            )));
        }
        let mut mask = 0usize;
        let mut pattern = 0usize;
        for (k, &q) in controls.iter().enumerate() {
            self.check_qubit(q)?;
            if mask & 1 << q != 0 {
                return Err(Error::domain(format!("control qubit {q} listed twice")));
            }
            mask |= 1 << q;
            if value >> k & 1 == 1 {
                pattern |= 1 << q;
            }
        }
        Ok((mask, pattern))
    }

    pub fn apply_hadamard(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let stride = 1 << qubit;
        let h = FRAC_1_SQRT_2;
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = (x + y) * h;
                *b = (x - y) * h;
            }
        }
        Ok(())
    }

    /// Multiplies the `|1>` component of `qubit` by -1.
    pub fn apply_sigma_z(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let bit = 1 << qubit;
        self.amplitudes
            .iter_mut()
            .enumerate()
            .filter(|(idx, _)| idx & bit != 0)
            .for_each(|(_, a)| *a = -*a);
        Ok(())
    }

    /// Flips `target` on every basis state whose `controls` spell
    /// `control_value`.
    pub fn apply_value_controlled_flip(
        &mut self,
        controls: &[usize],
        control_value: u64,
        target: usize,
    ) -> Result<()> {
        self.check_qubit(target)?;
        if controls.contains(&target) {
            return Err(Error::domain(format!(
                "target qubit {target} is also a control"
            )));
        }
        let (mask, pattern) = self.control_pattern(controls, control_value)?;
        let tbit = 1 << target;
        for idx in 0..self.amplitudes.len() {
            if idx & tbit == 0 && idx & mask == pattern {
                self.amplitudes.swap(idx, idx | tbit);
            }
        }
        Ok(())
    }

    /// Negates every basis state whose `controls` spell `control_value`.
    pub fn apply_value_controlled_phase(
        &mut self,
        controls: &[usize],
        control_value: u64,
    ) -> Result<()> {
        let (mask, pattern) = self.control_pattern(controls, control_value)?;
        self.amplitudes
            .iter_mut()
            .enumerate()
            .filter(|(idx, _)| idx & mask == pattern)
            .for_each(|(_, a)| *a = -*a);
        Ok(())
    }

    /// `H^{(x)nu} . diag(-1, 1, ..., 1) . H^{(x)nu}` on `register`, which is
    /// `I - 2|s><s|`: the usual diffusion operator times -1.
    pub fn apply_inversion_about_average(&mut self, register: &[usize]) -> Result<()> {
        for &q in register {
            self.apply_hadamard(q)?;
        }
        self.apply_value_controlled_phase(register, 0)?;
        for &q in register {
            self.apply_hadamard(q)?;
        }
        Ok(())
    }

    /// Probability of every bit pattern on `qubits` (bit `k` of the pattern
    /// index is `qubits[k]`).
    pub fn marginal_distribution(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        self.control_pattern(qubits, 0)?;
        let mut probs = vec![0.0; 1 << qubits.len()];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let pattern = qubits
                .iter()
                .enumerate()
                .fold(0usize, |acc, (k, &q)| acc | (idx >> q & 1) << k);
            probs[pattern] += p;
        }
        Ok(probs)
    }

    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::domain(format!(
                "states of dimension {} and {} cannot be compared",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// `|<a|b>|`, insensitive to a global phase.
pub fn fidelity_mod_phase(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner_product(b)?.norm())
}

/// Initial state `|psi_1>` for a layout.
pub fn make_basis_state(layout: &RegisterLayout, cap: usize) -> Result<StateVector> {
    let n = layout.total_qubits();
    if n > cap {
        return Err(Error::capacity(format!(
            "layout needs nu*eta + N + 1 = {}*{} + {} + 1 = {n} qubits, simulator cap is {cap}",
            layout.nu(),
            layout.eta(),
            layout.n_items()
        )));
    }
    StateVector::zero(n, cap)
}
