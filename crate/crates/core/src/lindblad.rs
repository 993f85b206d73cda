//! Master-equation right-hand side and reference integrator.
//!
//! The model is
//!
//! ```text
//! dρ/dt = −i[Δ·Ŝz + ε·H_signal, ρ] + Γ_{−1,0}·D[Ŝ₊Ŝz]ρ + Γ_{1,0}·D[Ŝ₋Ŝz]ρ
//! ```
//!
//! with `D[O]ρ = OρO† − ½{O†O, ρ}`. Everything downstream (trajectory
//! ensembles, presets, scaling fits) is validated against this integrator,
//! in the native 3×3 spin basis or in the 4×4 two-qubit encoding whose jump
//! operators are the qubit lowering operators at twice the model rates.
//!
//! The solver is classical fixed-step RK4 under Richardson control: the step
//! count doubles until two consecutive refinements agree entrywise within
//! the requested tolerance. At dimension ≤ 4 simplicity beats cleverness.

use crate::channel::{apply_circuit_channel, embed_two_qubit_density, extract_two_qubit_density};
use crate::linalg::{expm_hermitian, log_log_slope, min_eigenvalue, C64, CMat, I, ONE};
use crate::spin1::{
    build_trotter_step, full_hamiltonian, s_minus_matrix, s_plus_matrix, signal_hamiltonian,
    step_unitary_matrix, sz_matrix, SignalStyle, SpinEncoding, SpinModelParams, SpinState,
    TrotterVariant,
};
use crate::{Error, Result};

/// Trace-one positive-semidefinite complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    pub const HERMITICITY_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-12;
    pub const EIGENVALUE_TOL: f64 = -1e-10;

    /// Validate Hermiticity, unit trace and positivity.
    pub fn from_matrix(mat: CMat) -> Result<Self> {
        let h = mat.hermiticity_defect();
        if h > Self::HERMITICITY_TOL {
            return Err(Error::InvalidDensity(format!("hermiticity defect {h:.3e}")));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > Self::TRACE_TOL || tr.im.abs() > Self::TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let lam = min_eigenvalue(&mat.hermitize());
        if lam < Self::EIGENVALUE_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {lam:.3e}")));
        }
        Ok(DensityMatrix { mat })
    }

    /// Wrap without validating (for matrices produced by exact algebra).
    pub fn from_matrix_unchecked(mat: CMat) -> Self {
        DensityMatrix { mat }
    }

    /// |ψ⟩⟨ψ| from normalized amplitudes.
    pub fn pure(amps: &[C64]) -> Self {
        let dim = amps.len();
        let mut mat = CMat::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                mat.set(r, c, amps[r] * amps[c].conj());
            }
        }
        DensityMatrix { mat }
    }

    /// Basis-state projector |k⟩⟨k|.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut mat = CMat::zeros(dim);
        mat.set(k, k, ONE);
        DensityMatrix { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn entry(&self, r: usize, c: usize) -> C64 {
        self.mat.get(r, c)
    }

    pub fn purity(&self) -> f64 {
        self.mat.matmul(&self.mat).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.mat.hermitize())
    }

    /// Trace distance ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let d = self.mat.sub(&other.mat).hermitize();
        let (w, _) = crate::linalg::hermitian_eigen(&d);
        0.5 * w.iter().map(|x| x.abs()).sum::<f64>()
    }
}

/// Hamiltonian plus weighted jump operators.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub hamiltonian: CMat,
    pub jump_ops: Vec<(CMat, f64)>,
}

impl LindbladModel {
    pub fn new(hamiltonian: CMat, jump_ops: Vec<(CMat, f64)>) -> Result<Self> {
        if hamiltonian.hermiticity_defect() > 1e-12 {
            return Err(Error::InvalidParams("hamiltonian must be Hermitian".into()));
        }
        for (op, rate) in &jump_ops {
            if *rate < 0.0 {
                return Err(Error::InvalidParams("jump rates must be nonnegative".into()));
            }
            if op.dim() != hamiltonian.dim() {
                return Err(Error::DimensionMismatch {
                    expected: hamiltonian.dim(),
                    got: op.dim(),
                });
            }
        }
        Ok(LindbladModel { hamiltonian, jump_ops })
    }

    /// Native 3×3 model: H = Δ·Ŝz + ε·H_signal with jump operators
    /// (Ŝ₊Ŝz, Γ_{−1,0}) and (Ŝ₋Ŝz, Γ_{1,0}).
    pub fn spin_model(params: &SpinModelParams) -> Self {
        let sz = sz_matrix();
        LindbladModel {
            hamiltonian: full_hamiltonian(params),
            jump_ops: vec![
                (s_plus_matrix().matmul(&sz), params.gamma_m10),
                (s_minus_matrix().matmul(&sz), params.gamma_10),
            ],
        }
    }

    /// Two-qubit encoded model (dimension 4). The Hamiltonian is the encoded
    /// spin Hamiltonian, plus the surplus-state couplings that plain
    /// single-qubit signal rotations generate when `style` is uncontrolled.
    /// The dissipators are the qubit lowering operators at twice the model
    /// rates, the matching fixed by the jump-convention analysis.
    pub fn encoded_model(params: &SpinModelParams, style: SignalStyle) -> Self {
        let enc = SpinEncoding::default();
        let ip = enc.two_qubit_index(SpinState::Plus1);
        let iz = enc.two_qubit_index(SpinState::Zero);
        let im = enc.two_qubit_index(SpinState::Minus1);
        let ix = enc.two_qubit_index(SpinState::Surplus);

        let h3 = signal_hamiltonian(params);
        let map = [ip, iz, im]; // spin row order (+1, 0, −1) -> encoded index
        let mut h = CMat::zeros(4);
        for r in 0..3 {
            for c in 0..3 {
                h.set(map[r], map[c], h3.get(r, c) * params.epsilon);
            }
        }
        h.add_to(ip, ip, C64::new(params.delta, 0.0));
        h.add_to(im, im, C64::new(-params.delta, 0.0));
        if style == SignalStyle::Uncontrolled {
            // rotations on q1 also couple |−1⟩↔|X⟩ with j_01, rotations on
            // q0 also couple |+1⟩↔|X⟩ with j_0m1
            let e = C64::new(params.epsilon, 0.0);
            h.add_to(ix, im, e * params.j_01);
            h.add_to(im, ix, (e * params.j_01).conj());
            h.add_to(ix, ip, e * params.j_0m1);
            h.add_to(ip, ix, (e * params.j_0m1).conj());
        }

        let mut lower_q1 = CMat::zeros(4); // |0><1| on q1: |+1>->|0>, |X>->|-1>
        lower_q1.set(iz, ip, ONE);
        lower_q1.set(im, ix, ONE);
        let mut lower_q0 = CMat::zeros(4); // |0><1| on q0: |-1>->|0>, |X>->|+1>
        lower_q0.set(iz, im, ONE);
        lower_q0.set(ip, ix, ONE);

        LindbladModel {
            hamiltonian: h,
            jump_ops: vec![
                (lower_q1, 2.0 * params.gamma_10),
                (lower_q0, 2.0 * params.gamma_m10),
            ],
        }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }
}

/// dρ/dt = −i[H, ρ] + Σ_k Γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ}).
pub fn lindblad_rhs(model: &LindbladModel, rho: &CMat) -> CMat {
    assert_eq!(rho.dim(), model.dim(), "dimension mismatch");
    let mut out = model.hamiltonian.commutator(rho).scale(-I);
    for (l, rate) in &model.jump_ops {
        if *rate == 0.0 {
            continue;
        }
        let ld = l.adjoint();
        let ldl = ld.matmul(l);
        let gain = l.matmul(rho).matmul(&ld);
        let loss = ldl.matmul(rho).add(&rho.matmul(&ldl)).scale(C64::new(0.5, 0.0));
        out = out.add(&gain.sub(&loss).scale(C64::new(*rate, 0.0)));
    }
    out
}

fn rk4_step(model: &LindbladModel, rho: &CMat, h: f64) -> CMat {
    let k1 = lindblad_rhs(model, rho);
    let k2 = lindblad_rhs(model, &rho.add(&k1.scale(C64::new(h / 2.0, 0.0))));
    let k3 = lindblad_rhs(model, &rho.add(&k2.scale(C64::new(h / 2.0, 0.0))));
    let k4 = lindblad_rhs(model, &rho.add(&k3.scale(C64::new(h, 0.0))));
    let incr = k1
        .add(&k2.scale(C64::new(2.0, 0.0)))
        .add(&k3.scale(C64::new(2.0, 0.0)))
        .add(&k4)
        .scale(C64::new(h / 6.0, 0.0));
    rho.add(&incr)
}

/// Fixed-step RK4 over [0, T] with `n` steps; re-symmetrized each step so
/// Hermiticity cannot drift (positivity is still checked by callers).
pub fn integrate_fixed(model: &LindbladModel, rho0: &CMat, t_final: f64, n: usize) -> CMat {
    if t_final == 0.0 || n == 0 {
        return rho0.clone();
    }
    let h = t_final / n as f64;
    let mut rho = rho0.clone();
    for _ in 0..n {
        rho = rk4_step(model, &rho, h).hermitize();
    }
    rho
}

/// RK4 without re-symmetrization, for propagating non-Hermitian basis
/// matrices when assembling superoperators.
pub fn integrate_fixed_raw(model: &LindbladModel, rho0: &CMat, t_final: f64, n: usize) -> CMat {
    if t_final == 0.0 || n == 0 {
        return rho0.clone();
    }
    let h = t_final / n as f64;
    let mut rho = rho0.clone();
    for _ in 0..n {
        rho = rk4_step(model, &rho, h);
    }
    rho
}

/// Integrate to time `t_final`, doubling the step count until halving the
/// step changes no entry by more than `tol`.
pub fn integrate_lindblad(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_final: f64,
    tol: f64,
) -> Result<DensityMatrix> {
    if t_final < 0.0 {
        return Err(Error::InvalidParams("negative integration time".into()));
    }
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: rho0.dim() });
    }
    if t_final == 0.0 {
        return Ok(rho0.clone());
    }
    let mut n = 64usize;
    let mut current = integrate_fixed(model, rho0.matrix(), t_final, n);
    const MAX_STEPS: usize = 1 << 21;
    while n < MAX_STEPS {
        n *= 2;
        let refined = integrate_fixed(model, rho0.matrix(), t_final, n);
        let diff = refined.sub(&current).max_abs();
        current = refined;
        if diff < tol {
            let lam = min_eigenvalue(&current);
            if lam < DensityMatrix::EIGENVALUE_TOL {
                return Err(Error::InvalidDensity(format!(
                    "integration lost positivity: min eigenvalue {lam:.3e}"
                )));
            }
            return Ok(DensityMatrix::from_matrix_unchecked(current));
        }
    }
    Err(Error::ToleranceUnreachable { tol })
}

/// One row of a Trotter-order scan.
#[derive(Debug, Clone, Copy)]
pub struct TrotterErrorRow {
    pub dt: f64,
    /// Frobenius error of the step's unitary part against the exact
    /// propagator, restricted to the spin-1 input subspace (Γ = 0).
    pub unitary_error: f64,
    /// Worst-case Frobenius error of the full one-step channel (unitary +
    /// dissipation, ancilla traced out) against the integrated generator.
    pub channel_error: f64,
}

#[derive(Debug, Clone)]
pub struct TrotterErrorScan {
    pub rows: Vec<TrotterErrorRow>,
    pub unitary_slope: f64,
    pub channel_slope: f64,
}

/// Per-step error of the compiled circuit against the exact dynamics, over a
/// grid of timesteps, with fitted log-log slopes. Uses the controlled signal
/// variant, whose unitary part targets the spin-block propagator exactly.
pub fn trotter_error_scan(params: &SpinModelParams, dt_grid: &[f64]) -> Result<TrotterErrorScan> {
    let variant = TrotterVariant::controlled();
    let enc = SpinEncoding::default();
    let spin_cols: Vec<usize> = SpinState::SPIN.iter().map(|s| enc.two_qubit_index(*s)).collect();

    let mut rows = Vec::with_capacity(dt_grid.len());
    for &dt in dt_grid {
        let p = SpinModelParams { dt, ..*params };

        // Unitary part: zero the rates, compare 4x4 circuit unitary with the
        // exact encoded propagator on spin-basis input columns.
        let unitary_params = SpinModelParams { gamma_10: 0.0, gamma_m10: 0.0, ..p };
        let circ = build_trotter_step(&unitary_params, &variant, (2, 3))?;
        let u_circ = step_unitary_matrix(&circ);
        let h_enc = LindbladModel::encoded_model(&unitary_params, SignalStyle::Controlled).hamiltonian;
        let u_exact = expm_hermitian(&h_enc, -I * dt);
        let mut err2 = 0.0;
        for &col in &spin_cols {
            for row in 0..4 {
                err2 += (u_circ.get(row, col) - u_exact.get(row, col)).norm_sqr();
            }
        }
        let unitary_error = err2.sqrt();

        // Full channel: one step on the 3-qubit register (shared ancilla),
        // compared against tightly integrated exact dynamics, worst case
        // over a spanning set of two-qubit inputs.
        let channel_error = if params.gamma_10 > 0.0 || params.gamma_m10 > 0.0 {
            let circ = build_trotter_step(&p, &variant, (2, 2))?;
            let model = LindbladModel::encoded_model(&p, SignalStyle::Controlled);
            let mut worst = 0.0f64;
            for a in 0..4usize {
                for b in 0..4usize {
                    let mut unit = CMat::zeros(4);
                    unit.set(a, b, ONE);
                    let big = embed_two_qubit_density(&unit, circ.n_qubits());
                    let through = extract_two_qubit_density(&apply_circuit_channel(
                        &big, &circ, None,
                    ));
                    let exact = integrate_fixed_raw(&model, &unit, dt, 256);
                    worst = worst.max(through.sub(&exact).frobenius_norm());
                }
            }
            worst
        } else {
            0.0
        };

        rows.push(TrotterErrorRow { dt, unitary_error, channel_error });
    }

    let dts: Vec<f64> = rows.iter().map(|r| r.dt).collect();
    let uerr: Vec<f64> = rows.iter().map(|r| r.unitary_error.max(1e-300)).collect();
    let unitary_slope = log_log_slope(&dts, &uerr);
    let channel_slope = if rows.iter().any(|r| r.channel_error > 0.0) {
        let cerr: Vec<f64> = rows.iter().map(|r| r.channel_error.max(1e-300)).collect();
        log_log_slope(&dts, &cerr)
    } else {
        f64::NAN
    };
    Ok(TrotterErrorScan { rows, unitary_slope, channel_slope })
}

/// Spin-block view of an encoded 4×4 density matrix: the 3×3 block in the
/// (+1, 0, −1) order, its raw trace 1 − ρ_XX, the surplus population, and
/// the three surplus coherences (ρ_{+1,X}, ρ_{0,X}, ρ_{−1,X}).
#[derive(Debug, Clone)]
pub struct SpinBlockView {
    pub spin: CMat,
    pub raw_trace: f64,
    pub rho_xx: f64,
    pub leak: [C64; 3],
}

/// Decompose an encoded two-qubit density matrix; the spin block is
/// renormalized by 1/(1 − ρ_XX). Fails when ρ_XX is within 1e-9 of 1.
pub fn spin_block_view(rho4: &CMat) -> Result<SpinBlockView> {
    assert_eq!(rho4.dim(), 4);
    let enc = SpinEncoding::default();
    let ix = enc.two_qubit_index(SpinState::Surplus);
    let rho_xx = rho4.get(ix, ix).re;
    let raw_trace = 1.0 - rho_xx;
    if rho_xx >= 1.0 - 1e-9 {
        return Err(Error::DegenerateRenormalization { rho_xx });
    }
    let map: Vec<usize> = SpinState::SPIN.iter().map(|s| enc.two_qubit_index(*s)).collect();
    let mut spin = CMat::zeros(3);
    for r in 0..3 {
        for c in 0..3 {
            spin.set(r, c, rho4.get(map[r], map[c]) / raw_trace);
        }
    }
    let leak = [rho4.get(map[0], ix), rho4.get(map[1], ix), rho4.get(map[2], ix)];
    Ok(SpinBlockView { spin, raw_trace, rho_xx, leak })
}
