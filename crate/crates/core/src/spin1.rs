//! Spin-1 model, two-qubit encoding, and Trotter-step circuit compilation.
//!
//! The three spin-1 levels are stored in two qubits as
//!
//! ```text
//! |+1⟩ = |1⟩_{q1} |0⟩_{q0}     |0⟩  = |0⟩_{q1} |0⟩_{q0}
//! |−1⟩ = |0⟩_{q1} |1⟩_{q0}     |X⟩  = |1⟩_{q1} |1⟩_{q0}   (surplus state)
//! ```
//!
//! so the limit-cycle state |0⟩ is the joint qubit ground state and the
//! dissipative stabilization becomes plain energy relaxation of q1 and q0.
//! One timestep dt of the master-equation dynamics compiles into: phase gates
//! for the free precession, controlled (or uncontrolled) rotations for the
//! two semiclassical signal components, a three-controlled-gate block for the
//! squeezing component, and one measure-and-reset dissipation subcircuit per
//! decay channel.
//!
//! The unitary gates are arranged as a palindrome (half-angle outer layers
//! around a full-angle core), which makes the per-step splitting error third
//! order in dt for arbitrary parameters. A plain left-to-right concatenation
//! is second order whenever the free evolution or both signal components are
//! active, which is measurably too coarse for the dt³ checks this crate runs.

use crate::linalg::{C64, CMat, ONE, ZERO};
use crate::statevec::{ControlPolarity, GateOp, QuantumCircuit, StateVector};
use crate::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI};

/// Labels for the spin-1 levels plus the surplus two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinState {
    Plus1,
    Zero,
    Minus1,
    /// |X⟩ = |11⟩, outside the spin-1 subspace.
    Surplus,
}

impl SpinState {
    pub const SPIN: [SpinState; 3] = [SpinState::Plus1, SpinState::Zero, SpinState::Minus1];
    pub const ALL: [SpinState; 4] =
        [SpinState::Plus1, SpinState::Zero, SpinState::Minus1, SpinState::Surplus];

    /// Row/column index in the 3×3 spin basis ordered (+1, 0, −1).
    pub fn spin_index(self) -> Option<usize> {
        match self {
            SpinState::Plus1 => Some(0),
            SpinState::Zero => Some(1),
            SpinState::Minus1 => Some(2),
            SpinState::Surplus => None,
        }
    }
}

/// Placement of the two encoding qubits in a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinEncoding {
    pub q0: usize,
    pub q1: usize,
}

impl Default for SpinEncoding {
    fn default() -> Self {
        SpinEncoding { q0: 0, q1: 1 }
    }
}

impl SpinEncoding {
    /// Basis index of the encoded state in a register of `n` qubits
    /// (qubit 0 = least-significant bit).
    pub fn basis_index(&self, s: SpinState) -> usize {
        let (b1, b0) = match s {
            SpinState::Plus1 => (1, 0),
            SpinState::Zero => (0, 0),
            SpinState::Minus1 => (0, 1),
            SpinState::Surplus => (1, 1),
        };
        (b1 << self.q1) | (b0 << self.q0)
    }

    /// Map a two-qubit density matrix index (for the default q0=0, q1=1
    /// layout) of each of the 4 encoded states.
    pub fn two_qubit_index(&self, s: SpinState) -> usize {
        debug_assert!(self.q0 < 2 && self.q1 < 2);
        self.basis_index(s)
    }
}

/// Signal gates conditioned on the partner qubit, or plain rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalStyle {
    #[default]
    Controlled,
    Uncontrolled,
}

/// Which compilation of the relaxation subcircuit to emit. Both produce the
/// same joint unitary; they differ in gate count on hardware.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DissipationStyle {
    /// Controlled rotation on the ancilla followed by one CNOT back.
    #[default]
    ControlledRotation,
    /// Equivalent form using two CNOT gates and single-qubit rotations.
    TwoCnot,
}

/// Relation between the model rate Γ and the per-step jump probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpConvention {
    /// p = 2·Γ·dt. The master-equation dissipator Γ·D[S∓Sz] moves population
    /// |∓1⟩→|0⟩ at rate 2Γ (the jump operator has norm √2), so an encoded
    /// qubit relaxing with probability 2Γ·dt per step reproduces it exactly.
    /// Ensembles run under this convention match the density-matrix solver.
    #[default]
    OracleConsistent,
    /// p = Γ·dt, the literal circuit-angle parameterization
    /// θ = 2·arcsin(√(Γ·dt)). Provided to reproduce plotted parameter values
    /// taken at face value.
    PaperLiteral,
}

/// Full compilation choice for one Trotter step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrotterVariant {
    pub signal_style: SignalStyle,
    pub dissipation_style: DissipationStyle,
    pub jump_convention: JumpConvention,
}

impl TrotterVariant {
    pub fn controlled() -> Self {
        TrotterVariant { signal_style: SignalStyle::Controlled, ..Default::default() }
    }

    pub fn uncontrolled() -> Self {
        TrotterVariant { signal_style: SignalStyle::Uncontrolled, ..Default::default() }
    }
}

impl JumpConvention {
    /// Effective qubit relaxation rate for a model rate Γ.
    pub fn effective_rate(self, gamma: f64) -> f64 {
        match self {
            JumpConvention::OracleConsistent => 2.0 * gamma,
            JumpConvention::PaperLiteral => gamma,
        }
    }
}

/// Model parameters of the driven dissipative spin-1 oscillator.
///
/// `delta` is the detuning, `epsilon` the overall signal strength, the
/// `gamma_*` are the decay rates toward |0⟩, and the complex `j_*`
/// coefficients set amplitude and phase of the three signal transitions
/// (+1↔0, 0↔−1, −1↔+1). `dt` is the Trotter timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinModelParams {
    pub delta: f64,
    pub epsilon: f64,
    pub gamma_m10: f64,
    pub gamma_10: f64,
    pub j_01: C64,
    pub j_0m1: C64,
    pub j_m11: C64,
    pub dt: f64,
}

impl Default for SpinModelParams {
    fn default() -> Self {
        SpinModelParams {
            delta: 0.0,
            epsilon: 0.0,
            gamma_m10: 0.0,
            gamma_10: 0.0,
            j_01: ZERO,
            j_0m1: ZERO,
            j_m11: ZERO,
            dt: 0.1,
        }
    }
}

impl SpinModelParams {
    /// Validate rates, signs and step size. Returns human-readable warnings
    /// when the step is formally valid but coarse (jump probability above
    /// 0.25 per step strains the short-step assumption of the unraveling).
    pub fn validate(&self, convention: JumpConvention) -> Result<Vec<String>> {
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !nonneg(self.gamma_10) || !nonneg(self.gamma_m10) {
            return Err(Error::InvalidParams("decay rates must be nonnegative".into()));
        }
        if !nonneg(self.epsilon) {
            return Err(Error::InvalidParams("signal strength must be nonnegative".into()));
        }
        if !nonneg(self.dt) {
            return Err(Error::InvalidParams("timestep must be nonnegative".into()));
        }
        let finite = self.delta.is_finite()
            && [self.j_01, self.j_0m1, self.j_m11]
                .iter()
                .all(|j| j.re.is_finite() && j.im.is_finite());
        if !finite {
            return Err(Error::InvalidParams("detuning and signal coefficients must be finite".into()));
        }
        let mut warnings = Vec::new();
        for (name, gamma) in [("gamma_10", self.gamma_10), ("gamma_m10", self.gamma_m10)] {
            let p = convention.effective_rate(gamma) * self.dt;
            if p >= 1.0 {
                return Err(Error::JumpProbabilityOutOfRange { p });
            }
            if p > 0.25 {
                warnings.push(format!(
                    "{name}: per-step jump probability {p:.3} exceeds 0.25; \
                     the discrete unraveling is getting coarse"
                ));
            }
        }
        Ok(warnings)
    }
}

// ---------------------------------------------------------------------------
// Spin-1 operators and the signal Hamiltonian (3×3, basis +1, 0, −1)
// ---------------------------------------------------------------------------

/// Ŝz = diag(1, 0, −1).
pub fn sz_matrix() -> CMat {
    let mut m = CMat::zeros(3);
    m.set(0, 0, ONE);
    m.set(2, 2, -ONE);
    m
}

/// Raising operator: Ŝ₊|0⟩ = √2|+1⟩, Ŝ₊|−1⟩ = √2|0⟩.
pub fn s_plus_matrix() -> CMat {
    let r2 = C64::new(2f64.sqrt(), 0.0);
    let mut m = CMat::zeros(3);
    m.set(0, 1, r2);
    m.set(1, 2, r2);
    m
}

pub fn s_minus_matrix() -> CMat {
    s_plus_matrix().adjoint()
}

/// Signal Hamiltonian
/// H = j_{0,1}·ŜzŜ₊/√2 − j_{0,−1}·ŜzŜ₋/√2 + j_{−1,1}·Ŝ₊²/2 + H.c.
pub fn signal_hamiltonian(params: &SpinModelParams) -> CMat {
    let sz = sz_matrix();
    let sp = s_plus_matrix();
    let sm = s_minus_matrix();
    let inv_r2 = C64::new(1.0 / 2f64.sqrt(), 0.0);
    let half = C64::new(0.5, 0.0);

    let t1 = sz.matmul(&sp).scale(params.j_01 * inv_r2);
    let t2 = sz.matmul(&sm).scale(-params.j_0m1 * inv_r2);
    let t3 = sp.matmul(&sp).scale(params.j_m11 * half);
    let h = t1.add(&t2).add(&t3);
    h.add(&h.adjoint())
}

/// Full 3×3 Hamiltonian Δ·Ŝz + ε·H_signal.
pub fn full_hamiltonian(params: &SpinModelParams) -> CMat {
    sz_matrix()
        .scale(C64::new(params.delta, 0.0))
        .add(&signal_hamiltonian(params).scale(C64::new(params.epsilon, 0.0)))
}

// ---------------------------------------------------------------------------
// Gate-angle mapping and circuit builders
// ---------------------------------------------------------------------------

/// Angles of the signal gate U(t) = U3(−2ε|j|t, arg j − 3π/2, −arg j − π/2).
///
/// This U3 equals exp(−iεt·(j|1⟩⟨0| + j*|0⟩⟨1|)) on the driven pair exactly,
/// with no residual diagonal phase. For j = 0 the rotation angle is zero and
/// the phase angles take their arg(0) = 0 values.
pub fn signal_gate_angles(j: C64, epsilon: f64, t: f64) -> (f64, f64, f64) {
    let a = if j == ZERO { 0.0 } else { j.arg() };
    (-2.0 * epsilon * j.norm() * t, a - 3.0 * FRAC_PI_2, -a - FRAC_PI_2)
}

fn signal_gate(j: C64, epsilon: f64, t: f64, target: usize) -> GateOp {
    let (theta, phi, lambda) = signal_gate_angles(j, epsilon, t);
    GateOp::u3(target, theta, phi, lambda)
}

/// Encoded two-qubit basis state of a spin level (register = q0, q1).
pub fn encode_basis_state(s: SpinState) -> StateVector {
    let enc = SpinEncoding::default();
    StateVector::basis_state(2, enc.basis_index(s))
}

/// Squeezing-signal block: on span{|+1⟩, |−1⟩} = span{|10⟩, |01⟩} it applies
/// exp(−iεt·(j|+1⟩⟨−1| + j*|−1⟩⟨+1|)); |00⟩ and |11⟩ are left untouched.
/// Three controlled gates: CNOT(q0→q1) · CU3(q1→q0) · CNOT(q0→q1).
pub fn build_squeeze_subcircuit(j_m11: C64, epsilon: f64, t: f64) -> Result<QuantumCircuit> {
    if j_m11 == ZERO {
        return Err(Error::InvalidParams("squeeze subcircuit needs j_m11 != 0".into()));
    }
    let enc = SpinEncoding::default();
    let tau = j_m11.arg();
    let theta = 2.0 * epsilon * j_m11.norm() * t;
    let mut c = QuantumCircuit::new(2);
    c.push_gate(GateOp::cnot(enc.q0, enc.q1))?;
    c.push_gate(GateOp::controlled_u3(
        enc.q1,
        ControlPolarity::OnOne,
        enc.q0,
        theta,
        -tau - FRAC_PI_2,
        tau + FRAC_PI_2,
    ))?;
    c.push_gate(GateOp::cnot(enc.q0, enc.q1))?;
    Ok(c)
}

/// Relaxation subcircuit on (system qubit `q`, ancilla `a`): entangle the
/// excited system amplitude with the ancilla at angle θ = 2·arcsin(√p),
/// transfer the excitation, then measure and reset the ancilla. A recorded 1
/// is a quantum jump |1⟩_q → |0⟩_q with probability p·|β|².
pub fn build_dissipation_subcircuit(
    gamma: f64,
    dt: f64,
    style: DissipationStyle,
    convention: JumpConvention,
    q: usize,
    a: usize,
    label: &str,
) -> Result<QuantumCircuit> {
    if q == a {
        return Err(Error::ControlEqualsTarget { qubit: q });
    }
    let p = convention.effective_rate(gamma) * dt;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::JumpProbabilityOutOfRange { p });
    }
    let theta = 2.0 * p.sqrt().asin();
    let n = q.max(a) + 1;
    let mut c = QuantumCircuit::new(n);
    match style {
        DissipationStyle::ControlledRotation => {
            c.push_gate(GateOp::controlled_u3(q, ControlPolarity::OnOne, a, theta, 0.0, 0.0))?;
            c.push_gate(GateOp::cnot(a, q))?;
        }
        DissipationStyle::TwoCnot => {
            c.push_gate(GateOp::u2(q, -PI, 0.0))?;
            c.push_gate(GateOp::u3(a, -theta / 2.0, -FRAC_PI_2, PI))?;
            c.push_gate(GateOp::cnot(a, q))?;
            c.push_gate(GateOp::u2(q, -FRAC_PI_2, 0.0))?;
            c.push_gate(GateOp::u3(a, -theta / 2.0, PI, FRAC_PI_2))?;
            c.push_gate(GateOp::cnot(a, q))?;
            c.push_gate(GateOp::u1(q, -FRAC_PI_2))?;
            c.push_gate(GateOp::u1(a, -FRAC_PI_2))?;
        }
    }
    c.push_measure_reset(a, label)?;
    Ok(c)
}

/// Emitter of one unitary layer at a given duration.
type LayerEmitter = Box<dyn Fn(f64, &mut QuantumCircuit) -> Result<()>>;

/// Unitary layers of one step, innermost last. Each layer is the exact
/// exponential of its own Hamiltonian term for the given duration.
fn unitary_layers(params: &SpinModelParams, style: SignalStyle) -> Vec<LayerEmitter> {
    let enc = SpinEncoding::default();
    let mut layers: Vec<LayerEmitter> = Vec::new();

    if params.delta != 0.0 && params.dt != 0.0 {
        let delta = params.delta;
        layers.push(Box::new(move |t, c| {
            c.push_gate(GateOp::u1(enc.q1, -delta * t))?;
            c.push_gate(GateOp::u1(enc.q0, delta * t))
        }));
    }
    let eps = params.epsilon;
    if eps * params.j_01.norm() * params.dt != 0.0 {
        let j = params.j_01;
        layers.push(Box::new(move |t, c| {
            let g = signal_gate(j, eps, t, enc.q1);
            match style {
                SignalStyle::Controlled => c.push_gate(GateOp::controlled_u3(
                    enc.q0,
                    ControlPolarity::OnZero,
                    enc.q1,
                    g.params[0],
                    g.params[1],
                    g.params[2],
                )),
                SignalStyle::Uncontrolled => c.push_gate(g),
            }
        }));
    }
    if eps * params.j_0m1.norm() * params.dt != 0.0 {
        let j = params.j_0m1;
        layers.push(Box::new(move |t, c| {
            let g = signal_gate(j, eps, t, enc.q0);
            match style {
                SignalStyle::Controlled => c.push_gate(GateOp::controlled_u3(
                    enc.q1,
                    ControlPolarity::OnZero,
                    enc.q0,
                    g.params[0],
                    g.params[1],
                    g.params[2],
                )),
                SignalStyle::Uncontrolled => c.push_gate(g),
            }
        }));
    }
    if eps * params.j_m11.norm() * params.dt != 0.0 {
        let j = params.j_m11;
        layers.push(Box::new(move |t, c| {
            let sub = build_squeeze_subcircuit(j, eps, t)?;
            c.extend(&sub)
        }));
    }
    layers
}

/// Compile one Trotter step of the full dynamics into a circuit on the
/// register {q0, q1, ancillas}.
///
/// The unitary part is a palindrome: every layer except the innermost active
/// one is split into two half-duration applications around the core, making
/// the per-step splitting error O(dt³). The two relaxation subcircuits
/// follow, on (q1, `ancillas.0`) at rate Γ_{1,0} and (q0, `ancillas.1`) at
/// rate Γ_{−1,0}.
pub fn build_trotter_step(
    params: &SpinModelParams,
    variant: &TrotterVariant,
    ancillas: (usize, usize),
) -> Result<QuantumCircuit> {
    let enc = SpinEncoding::default();
    let (a1, a0) = ancillas;
    for a in [a1, a0] {
        if a == enc.q0 || a == enc.q1 {
            return Err(Error::ControlEqualsTarget { qubit: a });
        }
    }
    params.validate(variant.jump_convention)?;

    let has_diss_1 = params.gamma_10 * params.dt > 0.0;
    let has_diss_0 = params.gamma_m10 * params.dt > 0.0;
    let n_qubits = [enc.q0 + 1, enc.q1 + 1]
        .into_iter()
        .chain(has_diss_1.then_some(a1 + 1))
        .chain(has_diss_0.then_some(a0 + 1))
        .max()
        .unwrap();
    let mut circuit = QuantumCircuit::new(n_qubits);

    let layers = unitary_layers(params, variant.signal_style);
    if let Some((core, outer)) = layers.split_last() {
        for layer in outer {
            layer(params.dt / 2.0, &mut circuit)?;
        }
        core(params.dt, &mut circuit)?;
        for layer in outer.iter().rev() {
            layer(params.dt / 2.0, &mut circuit)?;
        }
    }

    if has_diss_1 {
        let sub = build_dissipation_subcircuit(
            params.gamma_10,
            params.dt,
            variant.dissipation_style,
            variant.jump_convention,
            enc.q1,
            a1,
            "d_plus1",
        )?;
        circuit.extend(&sub)?;
    }
    if has_diss_0 {
        let sub = build_dissipation_subcircuit(
            params.gamma_m10,
            params.dt,
            variant.dissipation_style,
            variant.jump_convention,
            enc.q0,
            a0,
            "d_minus1",
        )?;
        circuit.extend(&sub)?;
    }
    Ok(circuit)
}

/// 4×4 matrix of the unitary part of one step (measure-reset markers are
/// skipped), columns = images of the two-qubit basis states.
pub fn step_unitary_matrix(circuit: &QuantumCircuit) -> CMat {
    assert!(circuit.n_qubits() >= 2);
    let mut m = CMat::zeros(4);
    for col in 0..4usize {
        let mut s = StateVector::basis_state(circuit.n_qubits(), col);
        s.apply_unitaries(circuit).expect("validated circuit");
        for (idx, amp) in s.amplitudes().iter().enumerate() {
            if idx < 4 {
                m.set(idx, col, *amp);
            } else {
                debug_assert!(amp.norm() < 1e-12, "unitary part left the two-qubit block");
            }
        }
    }
    m
}
