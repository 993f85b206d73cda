//! Parametric gate and readout error models.
//!
//! Gate noise is a stochastic Pauli insertion: after a gate, with probability
//! `p`, one uniformly random non-identity Pauli is applied to the involved
//! qubits (3 choices on one qubit, 15 on two). Averaged over draws this is
//! the depolarizing channel (1−p)·ρ + p·(uniform non-identity Pauli twirl).
//! Readout errors flip recorded bits with asymmetric probabilities. Defaults
//! reflect typical device numbers: two-qubit gate errors at the percent
//! level, single-qubit errors an order of magnitude below, readout around
//! one percent.

use crate::linalg::{C64, CMat, ONE, ZERO};
use crate::statevec::StateVector;
use serde::{Deserialize, Serialize};

/// Error-model parameters. `enabled == false` makes every hook a no-op
/// regardless of the probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Depolarizing probability after each two-qubit gate.
    pub p_cnot: f64,
    /// Depolarizing probability after each single-qubit gate.
    pub p_1q: f64,
    /// Probability of reading 1 when the true outcome is 0.
    pub p_read0: f64,
    /// Probability of reading 0 when the true outcome is 1.
    pub p_read1: f64,
    /// Optional per-step amplitude-damping probability on each system qubit.
    /// Off by default; gate durations would be needed to calibrate it.
    pub p_damp_per_step: f64,
    pub enabled: bool,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            p_cnot: 0.02,
            p_1q: 0.002,
            p_read0: 0.01,
            p_read1: 0.01,
            p_damp_per_step: 0.0,
            enabled: false,
        }
    }
}

impl NoiseParams {
    /// Device-like noise switched on.
    pub fn nisq() -> Self {
        NoiseParams { enabled: true, ..Default::default() }
    }

    /// All channels off.
    pub fn off() -> Self {
        NoiseParams {
            p_cnot: 0.0,
            p_1q: 0.0,
            p_read0: 0.0,
            p_read1: 0.0,
            p_damp_per_step: 0.0,
            enabled: false,
        }
    }

    pub fn is_active(&self) -> bool {
        self.enabled
    }

    pub fn validate(&self) -> crate::Result<()> {
        for (name, p) in [
            ("p_cnot", self.p_cnot),
            ("p_1q", self.p_1q),
            ("p_read0", self.p_read0),
            ("p_read1", self.p_read1),
            ("p_damp_per_step", self.p_damp_per_step),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(crate::Error::InvalidParams(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// 2×2 Pauli matrices, indexed I, X, Y, Z.
pub fn pauli(idx: usize) -> [[C64; 2]; 2] {
    let i = C64::new(0.0, 1.0);
    match idx {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -i], [i, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("pauli index {idx} out of range"),
    }
}

fn apply_pauli(state: &mut StateVector, qubit: usize, idx: usize) {
    if idx == 0 {
        return;
    }
    let m = pauli(idx);
    let bit = 1usize << qubit;
    let n = 1usize << state.n_qubits();
    let mut new = vec![ZERO; n];
    for (i, a) in state.amplitudes().iter().enumerate() {
        if *a == ZERO {
            continue;
        }
        let b = usize::from(i & bit != 0);
        let j = if idx == 3 { i } else { i ^ bit }; // X, Y flip the bit; Z keeps it
        new[j] += m[usize::from(j & bit != 0)][b] * a;
    }
    *state = StateVector::from_amplitudes(new).expect("Pauli preserves normalization");
}

/// Sampled depolarizing hit on one or two qubits.
///
/// `accept_draw` decides whether an error fires (draw < p); `pauli_draw`
/// selects the non-identity Pauli uniformly. Norm is always preserved.
pub fn apply_depolarizing_sample(
    state: &mut StateVector,
    qubits: &[usize],
    p: f64,
    accept_draw: f64,
    pauli_draw: f64,
) {
    debug_assert!(matches!(qubits.len(), 1 | 2));
    if accept_draw >= p {
        return;
    }
    match qubits {
        [q] => {
            let idx = 1 + ((pauli_draw * 3.0) as usize).min(2);
            apply_pauli(state, *q, idx);
        }
        [qa, qb] => {
            let idx = 1 + ((pauli_draw * 15.0) as usize).min(14);
            apply_pauli(state, *qa, idx / 4);
            apply_pauli(state, *qb, idx % 4);
        }
        _ => unreachable!(),
    }
}

/// Readout bit flip: 0→1 with `p_read0`, 1→0 with `p_read1`.
pub fn apply_readout_flip(outcome: u8, p_read0: f64, p_read1: f64, draw: f64) -> u8 {
    let p = if outcome == 0 { p_read0 } else { p_read1 };
    if draw < p {
        outcome ^ 1
    } else {
        outcome
    }
}

/// Deterministic depolarizing channel on a density matrix over `n_qubits`:
/// ρ → (1−p)·ρ + p/(4^k − 1) · Σ_{P≠I} P ρ P, with k = qubits.len().
pub fn depolarizing_channel(rho: &CMat, n_qubits: usize, qubits: &[usize], p: f64) -> CMat {
    debug_assert!(matches!(qubits.len(), 1 | 2));
    if p == 0.0 {
        return rho.clone();
    }
    let mut acc = rho.scale(C64::new(1.0 - p, 0.0));
    let combos: Vec<Vec<usize>> = match qubits.len() {
        1 => (1..4).map(|a| vec![a]).collect(),
        _ => (1..16).map(|idx| vec![idx / 4, idx % 4]).collect(),
    };
    let weight = C64::new(p / combos.len() as f64, 0.0);
    for combo in combos {
        let mut u = CMat::identity(1 << n_qubits);
        for (q, &pi) in qubits.iter().zip(&combo) {
            u = embed_single(n_qubits, *q, pauli(pi)).matmul(&u);
        }
        acc = acc.add(&rho.conjugate_with(&u).scale(weight));
    }
    acc
}

/// Embed a 2×2 matrix on one qubit of an `n`-qubit register.
pub fn embed_single(n_qubits: usize, qubit: usize, m: [[C64; 2]; 2]) -> CMat {
    let dim = 1usize << n_qubits;
    let bit = 1usize << qubit;
    let mut out = CMat::zeros(dim);
    for col in 0..dim {
        let b = usize::from(col & bit != 0);
        for rbit in 0..2 {
            let row = (col & !bit) | (rbit * bit);
            let v = m[rbit][b];
            if v != ZERO {
                out.add_to(row, col, v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn zero_probability_never_fires() {
        let mut s = StateVector::zero_state(2);
        let before = s.clone();
        apply_depolarizing_sample(&mut s, &[0], 0.0, 0.0, 0.9);
        assert_eq!(s, before);
        assert_eq!(apply_readout_flip(0, 0.0, 0.0, 0.1), 0);
    }

    #[test]
    fn certain_readout_flip() {
        assert_eq!(apply_readout_flip(0, 1.0, 0.0, 0.999), 1);
        assert_eq!(apply_readout_flip(1, 0.0, 1.0, 0.999), 0);
    }

    #[test]
    fn readout_flip_frequency_is_binomial() {
        let st = Stream::new(6);
        let n = 100_000u64;
        let mut flips = 0u64;
        for k in 0..n {
            flips += u64::from(apply_readout_flip(0, 0.01, 0.01, st.uniform(&[k])));
        }
        let freq = flips as f64 / n as f64;
        let sigma = (0.01f64 * 0.99 / n as f64).sqrt();
        assert!((freq - 0.01).abs() < 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn sampled_paulis_preserve_norm() {
        let st = Stream::new(8);
        let mut s = StateVector::zero_state(2);
        s.apply(&crate::statevec::GateOp::u3(0, 1.1, 0.3, -0.2)).unwrap();
        s.apply(&crate::statevec::GateOp::cnot(0, 1)).unwrap();
        for k in 0..2000u64 {
            apply_depolarizing_sample(
                &mut s,
                &[0, 1],
                0.8,
                st.uniform(&[k, 0]),
                st.uniform(&[k, 1]),
            );
            apply_depolarizing_sample(&mut s, &[1], 0.8, st.uniform(&[k, 2]), st.uniform(&[k, 3]));
        }
        assert!((s.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn certain_error_ensemble_matches_uniform_pauli_twirl() {
        // p = 1 from |0>: average of X|0><0|X, Y..Y, Z..Z = diag(1/3, 2/3)
        let st = Stream::new(21);
        let n = 100_000u64;
        let mut pop1 = 0.0;
        for k in 0..n {
            let mut s = StateVector::zero_state(1);
            apply_depolarizing_sample(&mut s, &[0], 1.0, st.uniform(&[k, 0]), st.uniform(&[k, 1]));
            pop1 += s.prob_one(0);
        }
        let mean = pop1 / n as f64;
        let sigma = (2.0f64 / 9.0 / n as f64).sqrt();
        assert!((mean - 2.0 / 3.0).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn sampled_channel_agrees_with_deterministic_channel() {
        // Ensemble-average the sampled single-qubit channel on a nontrivial
        // state and compare to the analytic map, entrywise within 3 sigma.
        let p = 0.3;
        let st = Stream::new(55);
        let mut base = StateVector::zero_state(1);
        base.apply(&crate::statevec::GateOp::u3(0, 1.0, 0.5, 0.0)).unwrap();
        let n = 100_000u64;
        let mut acc = CMat::zeros(2);
        for k in 0..n {
            let mut s = base.clone();
            apply_depolarizing_sample(&mut s, &[0], p, st.uniform(&[k, 0]), st.uniform(&[k, 1]));
            for r in 0..2 {
                for c in 0..2 {
                    acc.add_to(r, c, s.amp(r) * s.amp(c).conj());
                }
            }
        }
        let mean = acc.scale(C64::new(1.0 / n as f64, 0.0));
        let mut rho = CMat::zeros(2);
        for r in 0..2 {
            for c in 0..2 {
                rho.set(r, c, base.amp(r) * base.amp(c).conj());
            }
        }
        let expect = depolarizing_channel(&rho, 1, &[0], p);
        assert!(mean.sub(&expect).max_abs() < 3.0 / (n as f64).sqrt() + 1e-3);
    }

    #[test]
    fn two_qubit_channel_is_trace_preserving() {
        let mut rho = CMat::zeros(4);
        rho.set(0, 0, C64::new(0.5, 0.0));
        rho.set(0, 3, C64::new(0.5, 0.0));
        rho.set(3, 0, C64::new(0.5, 0.0));
        rho.set(3, 3, C64::new(0.5, 0.0));
        let out = depolarizing_channel(&rho, 2, &[0, 1], 0.37);
        assert!((out.trace().re - 1.0).abs() < 1e-12);
        assert!(out.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn params_validate_ranges() {
        let p = NoiseParams { p_cnot: 1.5, ..Default::default() };
        assert!(p.validate().is_err());
        assert!(NoiseParams::default().validate().is_ok());
    }
}
