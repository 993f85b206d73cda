//! Minimal pure-state circuit engine for few qubits.
//!
//! Qubit 0 is the least-significant bit of the basis index throughout; a
//! basis state is written |q_{n-1} … q_1 q_0⟩. Gate matrices follow the
//! hardware-basis convention
//!
//! ```text
//! U3(θ,φ,λ) |0⟩ =            cos(θ/2) |0⟩ + e^{iφ}      sin(θ/2) |1⟩
//! U3(θ,φ,λ) |1⟩ = −e^{iλ}    sin(θ/2) |0⟩ + e^{i(λ+φ)}  cos(θ/2) |1⟩
//! ```
//!
//! including the e^{i(λ+φ)} diagonal phase; global phases are never stripped,
//! so controlled versions of these gates carry physical relative phases.

use crate::linalg::{C64, ONE, ZERO};
use crate::{Error, Result};
use std::fmt;

/// 2×2 unitary of the U3(θ, φ, λ) gate; `[row][col]`, columns are the images
/// of |0⟩ and |1⟩.
pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> [[C64; 2]; 2] {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    [
        [C64::new(c, 0.0), -(C64::new(0.0, lambda).exp()) * s],
        [C64::new(0.0, phi).exp() * s, C64::new(0.0, lambda + phi).exp() * c],
    ]
}

/// Control fires on |0⟩ (open circle) or on |1⟩ (solid circle).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlPolarity {
    OnZero,
    OnOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    U3,
    Cnot,
    ControlledU3,
}

/// A single gate: a U3 rotation, optionally conditioned on a control qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    /// (θ, φ, λ); fixed to (π, 0, π) for CNOT.
    pub params: [f64; 3],
    pub target: usize,
    pub control: Option<usize>,
    pub polarity: ControlPolarity,
}

impl GateOp {
    pub fn u3(target: usize, theta: f64, phi: f64, lambda: f64) -> Self {
        GateOp {
            kind: GateKind::U3,
            params: [theta, phi, lambda],
            target,
            control: None,
            polarity: ControlPolarity::OnOne,
        }
    }

    /// Phase gate U1(λ) = U3(0, 0, λ).
    pub fn u1(target: usize, lambda: f64) -> Self {
        Self::u3(target, 0.0, 0.0, lambda)
    }

    /// U2(φ, λ) = U3(π/2, φ, λ).
    pub fn u2(target: usize, phi: f64, lambda: f64) -> Self {
        Self::u3(target, std::f64::consts::FRAC_PI_2, phi, lambda)
    }

    pub fn x(target: usize) -> Self {
        Self::u3(target, std::f64::consts::PI, 0.0, std::f64::consts::PI)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp {
            kind: GateKind::Cnot,
            params: [std::f64::consts::PI, 0.0, std::f64::consts::PI],
            target,
            control: Some(control),
            polarity: ControlPolarity::OnOne,
        }
    }

    pub fn controlled_u3(
        control: usize,
        polarity: ControlPolarity,
        target: usize,
        theta: f64,
        phi: f64,
        lambda: f64,
    ) -> Self {
        GateOp {
            kind: GateKind::ControlledU3,
            params: [theta, phi, lambda],
            target,
            control: Some(control),
            polarity,
        }
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        u3_matrix(self.params[0], self.params[1], self.params[2])
    }

    pub fn is_two_qubit(&self) -> bool {
        self.control.is_some()
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.target >= n_qubits {
            return Err(Error::QubitOutOfRange { index: self.target, n_qubits });
        }
        if let Some(c) = self.control {
            if c >= n_qubits {
                return Err(Error::QubitOutOfRange { index: c, n_qubits });
            }
            if c == self.target {
                return Err(Error::ControlEqualsTarget { qubit: c });
            }
        }
        Ok(())
    }
}

/// One circuit element: a gate, or a projective ancilla measurement followed
/// by a reset to |0⟩ whose outcome is recorded under `label`.
#[derive(Debug, Clone, PartialEq)]
pub enum CircuitOp {
    Gate(GateOp),
    MeasureReset { target: usize, label: String },
}

/// Ordered list of gates and measure-reset markers on a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCircuit {
    n_qubits: usize,
    ops: Vec<CircuitOp>,
}

impl QuantumCircuit {
    pub fn new(n_qubits: usize) -> Self {
        QuantumCircuit { n_qubits, ops: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[CircuitOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push_gate(&mut self, gate: GateOp) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.ops.push(CircuitOp::Gate(gate));
        Ok(())
    }

    pub fn push_measure_reset(&mut self, target: usize, label: impl Into<String>) -> Result<()> {
        if target >= self.n_qubits {
            return Err(Error::QubitOutOfRange { index: target, n_qubits: self.n_qubits });
        }
        self.ops.push(CircuitOp::MeasureReset { target, label: label.into() });
        Ok(())
    }

    /// Append all ops of `other` (same register width required).
    pub fn extend(&mut self, other: &QuantumCircuit) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: other.n_qubits - 1,
                n_qubits: self.n_qubits,
            });
        }
        self.ops.extend(other.ops.iter().cloned());
        Ok(())
    }

    pub fn count_gates(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, CircuitOp::Gate(_))).count()
    }

    pub fn count_measure_resets(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, CircuitOp::MeasureReset { .. })).count()
    }
}

impl fmt::Display for QuantumCircuit {
    /// One op per line: kind, qubits, angles.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "circuit on {} qubits", self.n_qubits)?;
        for op in &self.ops {
            match op {
                CircuitOp::Gate(g) => {
                    let [t, p, l] = g.params;
                    match (g.kind, g.control) {
                        (GateKind::Cnot, Some(c)) => {
                            writeln!(f, "cnot    ctrl q{c} -> q{}", g.target)?
                        }
                        (_, Some(c)) => {
                            let pol = match g.polarity {
                                ControlPolarity::OnZero => "0",
                                ControlPolarity::OnOne => "1",
                            };
                            writeln!(
                                f,
                                "cu3     ctrl q{c}@{pol} -> q{}  ({t:.6}, {p:.6}, {l:.6})",
                                g.target
                            )?
                        }
                        (_, None) => {
                            writeln!(f, "u3      q{}  ({t:.6}, {p:.6}, {l:.6})", g.target)?
                        }
                    }
                }
                CircuitOp::MeasureReset { target, label } => {
                    writeln!(f, "mreset  q{target}  [{label}]")?
                }
            }
        }
        Ok(())
    }
}

/// Normalized pure state of an `n_qubits` register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// |0…0⟩.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        StateVector { n_qubits, amps }
    }

    /// Computational basis state with the given index.
    pub fn basis_state(n_qubits: usize, index: usize) -> Self {
        assert!(index < (1 << n_qubits), "basis index out of range");
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        StateVector { n_qubits, amps }
    }

    /// Build from explicit amplitudes; the length must be a power of two and
    /// the norm must already be 1 (checked to 1e-8).
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || len & (len - 1) != 0 {
            return Err(Error::InvalidState(format!("length {len} is not a power of two")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Probability of reading 1 on `target`.
    pub fn prob_one(&self, target: usize) -> f64 {
        let bit = 1usize << target;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Apply a gate, validating indices against the register.
    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    /// Apply a gate whose indices are already known to be valid (e.g. they
    /// came from a validated [`QuantumCircuit`]).
    pub fn apply_unchecked(&mut self, gate: &GateOp) {
        let m = gate.matrix();
        let tbit = 1usize << gate.target;
        match gate.control {
            None => {
                for i0 in 0..self.amps.len() {
                    if i0 & tbit != 0 {
                        continue;
                    }
                    let i1 = i0 | tbit;
                    let a0 = self.amps[i0];
                    let a1 = self.amps[i1];
                    self.amps[i0] = m[0][0] * a0 + m[0][1] * a1;
                    self.amps[i1] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
            Some(c) => {
                let cbit = 1usize << c;
                let want = match gate.polarity {
                    ControlPolarity::OnOne => cbit,
                    ControlPolarity::OnZero => 0,
                };
                for i0 in 0..self.amps.len() {
                    if i0 & tbit != 0 || i0 & cbit != want {
                        continue;
                    }
                    let i1 = i0 | tbit;
                    let a0 = self.amps[i0];
                    let a1 = self.amps[i1];
                    self.amps[i0] = m[0][0] * a0 + m[0][1] * a1;
                    self.amps[i1] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
    }

    /// Run every unitary in the circuit, ignoring measure-reset markers.
    pub fn apply_unitaries(&mut self, circuit: &QuantumCircuit) -> Result<()> {
        if circuit.n_qubits() > self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: circuit.n_qubits() - 1,
                n_qubits: self.n_qubits,
            });
        }
        for op in circuit.ops() {
            if let CircuitOp::Gate(g) = op {
                self.apply_unchecked(g);
            }
        }
        Ok(())
    }

    /// Projective measurement of `target` in the computational basis.
    ///
    /// The outcome is 1 iff `random_draw` < P(1); the state collapses to the
    /// renormalized projection. Passing draws from a keyed stream makes the
    /// measurement reproducible.
    pub fn measure_qubit(&mut self, target: usize, random_draw: f64) -> Result<u8> {
        if target >= self.n_qubits {
            return Err(Error::QubitOutOfRange { index: target, n_qubits: self.n_qubits });
        }
        let p1 = self.prob_one(target);
        let outcome = u8::from(random_draw < p1);
        let p_branch = if outcome == 1 { p1 } else { 1.0 - p1 };
        // A branch with zero weight can never be selected by a draw in [0,1).
        assert!(p_branch > 0.0, "measurement selected a zero-probability branch");
        let tbit = 1usize << target;
        let keep_set = outcome == 1;
        let renorm = 1.0 / p_branch.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & tbit != 0) == keep_set {
                *a *= renorm;
            } else {
                *a = ZERO;
            }
        }
        Ok(outcome)
    }

    /// Force `target` to |0⟩ after it has been measured (ancilla reset).
    /// If the measured outcome was 1 the excitation is discarded, i.e. the
    /// amplitudes are relabeled from the target-1 block to the target-0 block.
    pub fn reset_measured_qubit(&mut self, target: usize, outcome: u8) {
        if outcome == 0 {
            return;
        }
        let tbit = 1usize << target;
        for i in 0..self.amps.len() {
            if i & tbit == 0 {
                self.amps[i] = self.amps[i | tbit];
                self.amps[i | tbit] = ZERO;
            }
        }
    }

    /// Inner product ⟨self|other⟩.
    pub fn overlap(&self, other: &StateVector) -> C64 {
        assert_eq!(self.n_qubits, other.n_qubits);
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use std::f64::consts::PI;

    fn assert_close(a: C64, b: C64, tol: f64) {
        assert!((a - b).norm() < tol, "{a} vs {b}");
    }

    #[test]
    fn u3_pauli_x_case() {
        let m = u3_matrix(PI, 0.0, PI);
        assert_close(m[0][0], ZERO, 1e-15);
        assert_close(m[0][1], ONE, 1e-15);
        assert_close(m[1][0], ONE, 1e-15);
        assert_close(m[1][1], ZERO, 1e-15);
    }

    #[test]
    fn u3_phase_gate_case() {
        let lam = 0.7321;
        let m = u3_matrix(0.0, 0.0, lam);
        assert_close(m[0][0], ONE, 1e-15);
        assert_close(m[1][1], C64::new(0.0, lam).exp(), 1e-15);
        assert_close(m[0][1], ZERO, 1e-15);
        assert_close(m[1][0], ZERO, 1e-15);
    }

    #[test]
    fn u3_half_theta_matches_u2_definition() {
        let (phi, lam) = (0.3, -1.1);
        let m = u3_matrix(PI / 2.0, phi, lam);
        let r = 0.5f64.sqrt();
        assert_close(m[0][0], C64::new(r, 0.0), 1e-14);
        assert_close(m[0][1], -C64::new(0.0, lam).exp() * r, 1e-14);
        assert_close(m[1][0], C64::new(0.0, phi).exp() * r, 1e-14);
        assert_close(m[1][1], C64::new(0.0, lam + phi).exp() * r, 1e-14);
    }

    #[test]
    fn u3_is_unitary() {
        let st = Stream::new(11);
        for k in 0..50u64 {
            let t = st.uniform(&[k, 0]) * 8.0 - 4.0;
            let p = st.uniform(&[k, 1]) * 8.0 - 4.0;
            let l = st.uniform(&[k, 2]) * 8.0 - 4.0;
            let m = u3_matrix(t, p, l);
            // columns orthonormal
            let c0 = m[0][0].norm_sqr() + m[1][0].norm_sqr();
            let c1 = m[0][1].norm_sqr() + m[1][1].norm_sqr();
            let dot = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
            assert!((c0 - 1.0).abs() < 1e-14);
            assert!((c1 - 1.0).abs() < 1e-14);
            assert!(dot.norm() < 1e-14);
        }
    }

    #[test]
    fn x_flips_qubit_zero() {
        let mut s = StateVector::zero_state(2);
        s.apply(&GateOp::x(0)).unwrap();
        assert_close(s.amp(0b01), ONE, 1e-15);
        assert_close(s.amp(0b00), ZERO, 1e-15);
    }

    #[test]
    fn open_circle_control_fires_on_zero() {
        // ControlledU3(pi,0,pi), control=1 on_zero, target=0
        let gate = GateOp::controlled_u3(1, ControlPolarity::OnZero, 0, PI, 0.0, PI);
        let mut s = StateVector::zero_state(2); // |00>
        s.apply(&gate).unwrap();
        assert_close(s.amp(0b01), ONE, 1e-15);
        let mut s = StateVector::basis_state(2, 0b10); // |10>
        s.apply(&gate).unwrap();
        assert_close(s.amp(0b10), ONE, 1e-15);
    }

    #[test]
    fn cnot_agrees_with_controlled_u3_on_all_basis_states() {
        let cnot = GateOp::cnot(1, 0);
        let cu3 = GateOp::controlled_u3(1, ControlPolarity::OnOne, 0, PI, 0.0, PI);
        for idx in 0..4 {
            let mut a = StateVector::basis_state(2, idx);
            let mut b = StateVector::basis_state(2, idx);
            a.apply(&cnot).unwrap();
            b.apply(&cu3).unwrap();
            for k in 0..4 {
                assert_close(a.amp(k), b.amp(k), 1e-15);
            }
        }
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        let st = Stream::new(seed);
        let mut amps: Vec<C64> = (0..1usize << n)
            .map(|k| {
                let (re, im) = st.normal_pair(&[k as u64]);
                C64::new(re, im)
            })
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector::from_amplitudes(amps).unwrap()
    }

    fn random_gate(n: usize, st: &Stream, k: u64) -> GateOp {
        let t = st.uniform(&[k, 10]) * 8.0 - 4.0;
        let p = st.uniform(&[k, 11]) * 8.0 - 4.0;
        let l = st.uniform(&[k, 12]) * 8.0 - 4.0;
        let target = (st.uniform(&[k, 13]) * n as f64) as usize;
        match (st.uniform(&[k, 14]) * 3.0) as usize {
            0 => GateOp::u3(target, t, p, l),
            1 => {
                let control = (target + 1 + (st.uniform(&[k, 15]) * (n - 1) as f64) as usize) % n;
                GateOp::cnot(control, target)
            }
            _ => {
                let control = (target + 1 + (st.uniform(&[k, 15]) * (n - 1) as f64) as usize) % n;
                let pol = if st.uniform(&[k, 16]) < 0.5 {
                    ControlPolarity::OnZero
                } else {
                    ControlPolarity::OnOne
                };
                GateOp::controlled_u3(control, pol, target, t, p, l)
            }
        }
    }

    #[test]
    fn norm_preserved_under_many_random_gates() {
        let st = Stream::new(99);
        let mut s = random_state(2, 3);
        for k in 0..10_000u64 {
            s.apply_unchecked(&random_gate(2, &st, k));
        }
        assert!((s.norm() - 1.0).abs() < 1e-10, "cumulative norm drift");
    }

    #[test]
    fn u3_inverse_composition_returns_input() {
        let st = Stream::new(17);
        for k in 0..200u64 {
            let t = st.uniform(&[k, 0]) * 8.0 - 4.0;
            let p = st.uniform(&[k, 1]) * 8.0 - 4.0;
            let l = st.uniform(&[k, 2]) * 8.0 - 4.0;
            let mut s = random_state(2, k + 1000);
            let orig = s.clone();
            s.apply(&GateOp::u3(0, t, p, l)).unwrap();
            s.apply(&GateOp::u3(0, -t, -l, -p)).unwrap(); // U3(θ,φ,λ)^{-1} = U3(−θ,−λ,−φ)
            for i in 0..4 {
                assert_close(s.amp(i), orig.amp(i), 1e-12);
            }
        }
    }

    #[test]
    fn measurement_of_definite_state_is_deterministic() {
        let mut s = StateVector::basis_state(1, 1);
        let before = s.clone();
        let out = s.measure_qubit(0, 0.999_999).unwrap();
        assert_eq!(out, 1);
        assert_eq!(s, before);
    }

    #[test]
    fn born_rule_on_equal_superposition() {
        let amps = vec![C64::new(0.5f64.sqrt(), 0.0); 2];
        let mut s = StateVector::from_amplitudes(amps).unwrap();
        let out = s.measure_qubit(0, 0.3).unwrap(); // draw < P(1) = 0.5
        assert_eq!(out, 1);
        assert_close(s.amp(1), ONE, 1e-12);
        assert_eq!(s.amp(0), ZERO);
    }

    #[test]
    fn measurement_statistics_match_born_probabilities() {
        // 3-sigma binomial check over 1e5 draws on a biased state
        let p1: f64 = 0.37;
        let amps = vec![C64::new((1.0 - p1).sqrt(), 0.0), C64::new(p1.sqrt(), 0.0)];
        let proto = StateVector::from_amplitudes(amps).unwrap();
        let st = Stream::new(2024);
        let n = 100_000u64;
        let mut ones = 0u64;
        for k in 0..n {
            let mut s = proto.clone();
            ones += u64::from(s.measure_qubit(0, st.uniform(&[k])).unwrap());
        }
        let freq = ones as f64 / n as f64;
        let sigma = (p1 * (1.0 - p1) / n as f64).sqrt();
        assert!((freq - p1).abs() < 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn out_of_range_and_coincident_indices_are_rejected() {
        let mut s = StateVector::zero_state(2);
        assert!(matches!(
            s.apply(&GateOp::x(2)),
            Err(Error::QubitOutOfRange { index: 2, n_qubits: 2 })
        ));
        assert!(matches!(
            s.apply(&GateOp::cnot(1, 1)),
            Err(Error::ControlEqualsTarget { qubit: 1 })
        ));
        let mut c = QuantumCircuit::new(2);
        assert!(c.push_gate(GateOp::u3(5, 0.1, 0.2, 0.3)).is_err());
        assert!(c.push_measure_reset(3, "a").is_err());
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(StateVector::from_amplitudes(vec![ONE; 3]).is_err());
        assert!(StateVector::from_amplitudes(vec![ONE, ONE]).is_err());
    }

    #[test]
    fn circuit_display_lists_one_op_per_line() {
        let mut c = QuantumCircuit::new(3);
        c.push_gate(GateOp::u3(0, 0.1, 0.2, 0.3)).unwrap();
        c.push_gate(GateOp::cnot(1, 0)).unwrap();
        c.push_gate(GateOp::controlled_u3(2, ControlPolarity::OnZero, 1, 1.0, 2.0, 3.0))
            .unwrap();
        c.push_measure_reset(2, "d_plus").unwrap();
        let text = c.to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("u3"));
        assert!(lines[2].starts_with("cnot"));
        assert!(lines[3].contains("ctrl q2@0"));
        assert!(lines[4].contains("d_plus"));
    }
}
