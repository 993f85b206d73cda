//! Deterministic density-matrix propagation of circuits.
//!
//! Propagating ρ through a circuit (unitary conjugation per gate, the exact
//! two-outcome Kraus map at each measure-and-reset, and optional analytic
//! depolarizing insertions) gives the exact trajectory-ensemble average
//! without Monte Carlo error. This is what the Trotter-order scans, the
//! leakage scaling fits, and the noise-degradation checks run on, and it is
//! also the limit the stochastic engine must converge to.

use crate::linalg::{C64, CMat, ZERO};
use crate::noise::{depolarizing_channel, embed_single, NoiseParams};
use crate::statevec::{CircuitOp, ControlPolarity, GateOp, QuantumCircuit};

/// Full 2^n × 2^n unitary of a single gate.
pub fn gate_unitary(n_qubits: usize, gate: &GateOp) -> CMat {
    let m = gate.matrix();
    match gate.control {
        None => embed_single(n_qubits, gate.target, m),
        Some(c) => {
            let dim = 1usize << n_qubits;
            let cbit = 1usize << c;
            let tbit = 1usize << gate.target;
            let want = match gate.polarity {
                ControlPolarity::OnOne => cbit,
                ControlPolarity::OnZero => 0,
            };
            let mut u = CMat::zeros(dim);
            for col in 0..dim {
                if col & cbit != want {
                    u.set(col, col, crate::linalg::ONE);
                    continue;
                }
                let b = usize::from(col & tbit != 0);
                for rbit in 0..2 {
                    let row = (col & !tbit) | (rbit * tbit);
                    let v = m[rbit][b];
                    if v != ZERO {
                        u.add_to(row, col, v);
                    }
                }
            }
            u
        }
    }
}

/// Measure `target` and reset it to |0⟩, tracing out the record:
/// ρ → Σ_m (|0⟩⟨m|)_target ρ (|m⟩⟨0|)_target.
pub fn measure_reset_channel(rho: &CMat, n_qubits: usize, target: usize) -> CMat {
    let dim = 1usize << n_qubits;
    debug_assert_eq!(rho.dim(), dim);
    let bit = 1usize << target;
    let mut out = CMat::zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            if (r & bit) != (c & bit) {
                continue; // cross terms between outcomes dephase away
            }
            let v = rho.get(r, c);
            if v != ZERO {
                out.add_to(r & !bit, c & !bit, v);
            }
        }
    }
    out
}

/// Amplitude-damping channel |1⟩→|0⟩ with probability `p` on one qubit.
pub fn amplitude_damping_channel(rho: &CMat, n_qubits: usize, qubit: usize, p: f64) -> CMat {
    if p == 0.0 {
        return rho.clone();
    }
    let k0 = [
        [crate::linalg::ONE, ZERO],
        [ZERO, C64::new((1.0 - p).sqrt(), 0.0)],
    ];
    let k1 = [[ZERO, C64::new(p.sqrt(), 0.0)], [ZERO, ZERO]];
    let m0 = embed_single(n_qubits, qubit, k0);
    let m1 = embed_single(n_qubits, qubit, k1);
    rho.conjugate_with(&m0).add(&rho.conjugate_with(&m1))
}

/// Propagate ρ through the whole circuit. With `noise` active, a
/// depolarizing channel follows every gate (p_cnot on two-qubit gates, p_1q
/// on single-qubit ones). Readout flips do not enter here: they scramble
/// records, not post-reset states.
pub fn apply_circuit_channel(
    rho: &CMat,
    circuit: &QuantumCircuit,
    noise: Option<&NoiseParams>,
) -> CMat {
    let n = circuit.n_qubits();
    debug_assert_eq!(rho.dim(), 1 << n);
    let mut out = rho.clone();
    for op in circuit.ops() {
        match op {
            CircuitOp::Gate(g) => {
                let u = gate_unitary(n, g);
                out = out.conjugate_with(&u);
                if let Some(np) = noise.filter(|np| np.is_active()) {
                    match g.control {
                        Some(c) => {
                            out = depolarizing_channel(&out, n, &[g.target, c], np.p_cnot)
                        }
                        None => out = depolarizing_channel(&out, n, &[g.target], np.p_1q),
                    }
                }
            }
            CircuitOp::MeasureReset { target, .. } => {
                out = measure_reset_channel(&out, n, *target);
            }
        }
    }
    out
}

/// Exact ensemble average of the trajectory protocol: propagate a two-qubit
/// density matrix through `n_steps` repetitions of the step circuit (with an
/// optional per-step damping hook on the system qubits) and return the
/// reduced state after every step, 0 through `n_steps`.
pub fn circuit_channel_series(
    step: &QuantumCircuit,
    rho0: &CMat,
    n_steps: usize,
    noise: Option<&NoiseParams>,
) -> Vec<CMat> {
    let n = step.n_qubits();
    let mut rho = embed_two_qubit_density(rho0, n);
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(extract_two_qubit_density(&rho));
    let p_damp = noise.filter(|np| np.is_active()).map_or(0.0, |np| np.p_damp_per_step);
    for _ in 0..n_steps {
        rho = apply_circuit_channel(&rho, step, noise);
        if p_damp > 0.0 {
            rho = amplitude_damping_channel(&rho, n, 0, p_damp);
            rho = amplitude_damping_channel(&rho, n, 1, p_damp);
        }
        out.push(extract_two_qubit_density(&rho));
    }
    out
}

/// Embed a two-qubit density matrix into an `n`-qubit register whose other
/// qubits are in |0⟩ (two-qubit block = qubits 0 and 1).
pub fn embed_two_qubit_density(rho4: &CMat, n_qubits: usize) -> CMat {
    debug_assert_eq!(rho4.dim(), 4);
    let mut out = CMat::zeros(1 << n_qubits);
    for r in 0..4 {
        for c in 0..4 {
            out.set(r, c, rho4.get(r, c));
        }
    }
    out
}

/// Reduce back to the two-qubit block assuming every other qubit is in |0⟩
/// (true after all ancillas have been measured and reset).
pub fn extract_two_qubit_density(rho: &CMat) -> CMat {
    let mut out = CMat::zeros(4);
    for r in 0..4 {
        for c in 0..4 {
            out.set(r, c, rho.get(r, c));
        }
    }
    out
}
