//! Photon-counting quantum-trajectory engine.
//!
//! Each shot runs N Trotter steps of the compiled circuit on a pure state.
//! At every measure-and-reset the ancilla is measured with a draw from a
//! counter-based stream keyed by (seed, trajectory, step, draw site), the
//! outcome is logged (a 1 is a detected quantum jump), and the ancilla
//! returns to |0⟩ for reuse. Averaging |ψ⟩⟨ψ| over shots recovers the
//! density matrix of the master equation.
//!
//! Ensembles reduce in fixed-size chunks that are summed in index order, so
//! the mean is bit-identical whether chunks are processed serially or across
//! worker threads.
//!
//! In hardware-faithful mode the register instead grows by two fresh
//! ancillas per step (at most four steps), and every ancilla is measured
//! after the full evolution, mirroring devices without mid-circuit reset.

use crate::lindblad::{spin_block_view, SpinBlockView};
use crate::linalg::{hermitian_eigen, C64, CMat, ZERO};
use crate::noise::{apply_depolarizing_sample, apply_readout_flip, NoiseParams};
use crate::rng::{purpose, Stream};
use crate::spin1::{
    build_trotter_step, encode_basis_state, SpinModelParams, SpinState, TrotterVariant,
};
use crate::statevec::{CircuitOp, StateVector};
use crate::{Error, Result};
use rayon::prelude::*;

/// Starting state of every trajectory.
#[derive(Debug, Clone)]
pub enum InitialState {
    Spin(SpinState),
    /// Explicit two-qubit pure state.
    Pure(StateVector),
    /// Mixed two-qubit state; each shot samples a pure eigenstate with the
    /// eigenvalue as its weight.
    Mixed(CMat),
}

/// Everything a shot needs: model, compilation choice, horizon, seeding.
#[derive(Debug, Clone)]
pub struct TrajectoryConfig {
    pub n_steps: usize,
    pub n_trajectories: usize,
    pub seed: u64,
    pub params: SpinModelParams,
    pub variant: TrotterVariant,
    pub initial: InitialState,
    pub noise: NoiseParams,
    /// Cap the horizon at four steps and spend fresh ancillas per step.
    pub hardware_faithful: bool,
}

impl TrajectoryConfig {
    pub fn new(params: SpinModelParams, variant: TrotterVariant, n_steps: usize) -> Self {
        TrajectoryConfig {
            n_steps,
            n_trajectories: 1,
            seed: 0,
            params,
            variant,
            initial: InitialState::Spin(SpinState::Zero),
            noise: NoiseParams::off(),
            hardware_faithful: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_trajectories == 0 {
            return Err(Error::InvalidParams("need at least one trajectory".into()));
        }
        self.params.validate(self.variant.jump_convention)?;
        self.noise.validate()?;
        if self.hardware_faithful && self.n_steps > HARDWARE_MAX_STEPS {
            return Err(Error::HardwareStepLimit {
                requested: self.n_steps,
                max: HARDWARE_MAX_STEPS,
            });
        }
        Ok(())
    }
}

/// Device-style step cap: one fresh ancilla pair per step, four connected
/// ancillas available.
pub const HARDWARE_MAX_STEPS: usize = 4;

/// Outcome record of a single shot.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    /// Ancilla outcomes, one bit per dissipation channel per step
    /// (step-major, channels in circuit order).
    pub jump_log: Vec<u8>,
    /// Labels of the dissipation channels, in the per-step order of
    /// `jump_log`.
    pub channel_labels: Vec<String>,
    /// Final two-qubit pure state on (q1, q0).
    pub final_state: StateVector,
}

/// Ensemble mean of |ψ⟩⟨ψ| with per-entry standard errors.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub mean_density: CMat,
    /// Standard error of the mean, real parts.
    pub stderr_re: [[f64; 4]; 4],
    /// Standard error of the mean, imaginary parts.
    pub stderr_im: [[f64; 4]; 4],
    pub n_samples: usize,
}

impl EnsembleStats {
    /// Largest of the real/imaginary standard errors at one entry.
    pub fn stderr(&self, r: usize, c: usize) -> f64 {
        self.stderr_re[r][c].max(self.stderr_im[r][c])
    }
}

fn initial_state_vector(config: &TrajectoryConfig, stream: &Stream, traj: u64) -> StateVector {
    match &config.initial {
        InitialState::Spin(s) => encode_basis_state(*s),
        InitialState::Pure(sv) => sv.clone(),
        InitialState::Mixed(rho) => {
            let (w, v) = hermitian_eigen(rho);
            let draw = stream.uniform(&[purpose::INITIAL_STATE, traj]);
            let mut acc = 0.0;
            let mut pick = w.len() - 1;
            for (k, &wk) in w.iter().enumerate() {
                acc += wk.max(0.0);
                if draw < acc {
                    pick = k;
                    break;
                }
            }
            let amps: Vec<C64> = (0..rho.dim()).map(|r| v.get(r, pick)).collect();
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect())
                .expect("eigenvector is normalized")
        }
    }
}

/// Stochastic amplitude damping on one qubit: jump |1⟩→|0⟩ with probability
/// p·P(1), otherwise damp the excited amplitude and renormalize.
fn sample_amplitude_damping(state: &mut StateVector, qubit: usize, p: f64, draw: f64) {
    let p1 = state.prob_one(qubit);
    let p_jump = p * p1;
    let bit = 1usize << qubit;
    let n = state.amplitudes().len();
    let mut amps = state.amplitudes().to_vec();
    if draw < p_jump {
        for i in 0..n {
            if i & bit == 0 {
                amps[i] = amps[i | bit] / C64::new(p1.sqrt(), 0.0);
                amps[i | bit] = ZERO;
            }
        }
    } else {
        let damp = C64::new((1.0 - p).sqrt(), 0.0);
        let renorm = C64::new(1.0 / (1.0 - p_jump).sqrt(), 0.0);
        for (i, a) in amps.iter_mut().enumerate() {
            *a *= if i & bit != 0 { damp * renorm } else { renorm };
        }
    }
    *state = StateVector::from_amplitudes(amps).expect("damping preserves normalization");
}

/// Run one step circuit in place, drawing measurements and noise from the
/// keyed stream. Returns the recorded ancilla bits in op order.
fn run_step(
    state: &mut StateVector,
    circuit: &crate::statevec::QuantumCircuit,
    config: &TrajectoryConfig,
    stream: &Stream,
    traj: u64,
    step: u64,
) -> Vec<u8> {
    let noise_on = config.noise.is_active();
    let mut records = Vec::new();
    for (op_idx, op) in circuit.ops().iter().enumerate() {
        let site = op_idx as u64;
        match op {
            CircuitOp::Gate(g) => {
                state.apply_unchecked(g);
                if noise_on {
                    let accept = stream.uniform(&[purpose::NOISE_ACCEPT, traj, step, site]);
                    let pick = stream.uniform(&[purpose::NOISE_PAULI, traj, step, site]);
                    match g.control {
                        Some(c) => apply_depolarizing_sample(
                            state,
                            &[g.target, c],
                            config.noise.p_cnot,
                            accept,
                            pick,
                        ),
                        None => apply_depolarizing_sample(
                            state,
                            &[g.target],
                            config.noise.p_1q,
                            accept,
                            pick,
                        ),
                    }
                }
            }
            CircuitOp::MeasureReset { target, .. } => {
                let draw = stream.uniform(&[purpose::MEASURE, traj, step, site]);
                let outcome = state.measure_qubit(*target, draw).expect("validated circuit");
                state.reset_measured_qubit(*target, outcome);
                let recorded = if noise_on {
                    let flip = stream.uniform(&[purpose::READOUT_FLIP, traj, step, site]);
                    apply_readout_flip(outcome, config.noise.p_read0, config.noise.p_read1, flip)
                } else {
                    outcome
                };
                records.push(recorded);
            }
        }
    }
    if noise_on && config.noise.p_damp_per_step > 0.0 {
        for q in [0usize, 1usize] {
            let draw = stream.uniform(&[purpose::DAMPING, traj, step, q as u64]);
            sample_amplitude_damping(state, q, config.noise.p_damp_per_step, draw);
        }
    }
    records
}

fn channel_labels(circuit: &crate::statevec::QuantumCircuit) -> Vec<String> {
    circuit
        .ops()
        .iter()
        .filter_map(|op| match op {
            CircuitOp::MeasureReset { label, .. } => Some(label.clone()),
            _ => None,
        })
        .collect()
}

fn extract_two_qubit_state(state: &StateVector) -> StateVector {
    let amps: Vec<C64> = (0..4).map(|k| state.amp(k)).collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    debug_assert!((norm - 1.0).abs() < 1e-9, "ancillas not disentangled");
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect())
        .expect("system block is normalized after ancilla resets")
}

fn run_trajectory_reused(
    config: &TrajectoryConfig,
    circuit: &crate::statevec::QuantumCircuit,
    stream: &Stream,
    traj: u64,
) -> ShotRecord {
    let labels = channel_labels(circuit);
    let mut state = {
        let sys = initial_state_vector(config, stream, traj);
        if circuit.n_qubits() == 2 {
            sys
        } else {
            let mut amps = vec![ZERO; 1 << circuit.n_qubits()];
            for k in 0..4 {
                amps[k] = sys.amp(k);
            }
            StateVector::from_amplitudes(amps).expect("embedding keeps the norm")
        }
    };
    let mut jump_log = Vec::with_capacity(config.n_steps * labels.len());
    for step in 0..config.n_steps {
        let recs = run_step(&mut state, circuit, config, stream, traj, step as u64);
        jump_log.extend(recs);
    }
    let final_state =
        if circuit.n_qubits() == 2 { state } else { extract_two_qubit_state(&state) };
    ShotRecord { jump_log, channel_labels: labels, final_state }
}

/// Hardware-faithful shot: fresh ancilla pair per step, all ancilla
/// measurements deferred to the end of the evolution.
fn run_trajectory_fresh_ancillas(
    config: &TrajectoryConfig,
    stream: &Stream,
    traj: u64,
) -> Result<ShotRecord> {
    let n_steps = config.n_steps;
    let mut deferred: Vec<(usize, String, u64, u64)> = Vec::new(); // target, label, step, site
    let n_qubits = 2 + 2 * n_steps.max(1);
    let mut state = {
        let sys = initial_state_vector(config, stream, traj);
        let mut amps = vec![ZERO; 1 << n_qubits];
        for k in 0..4 {
            amps[k] = sys.amp(k);
        }
        StateVector::from_amplitudes(amps).expect("embedding keeps the norm")
    };

    let noise_on = config.noise.is_active();
    for step in 0..n_steps {
        let ancillas = (2 + 2 * step, 3 + 2 * step);
        let circuit = build_trotter_step(&config.params, &config.variant, ancillas)?;
        for (op_idx, op) in circuit.ops().iter().enumerate() {
            let site = op_idx as u64;
            match op {
                CircuitOp::Gate(g) => {
                    state.apply_unchecked(g);
                    if noise_on {
                        let accept =
                            stream.uniform(&[purpose::NOISE_ACCEPT, traj, step as u64, site]);
                        let pick =
                            stream.uniform(&[purpose::NOISE_PAULI, traj, step as u64, site]);
                        match g.control {
                            Some(c) => apply_depolarizing_sample(
                                &mut state,
                                &[g.target, c],
                                config.noise.p_cnot,
                                accept,
                                pick,
                            ),
                            None => apply_depolarizing_sample(
                                &mut state,
                                &[g.target],
                                config.noise.p_1q,
                                accept,
                                pick,
                            ),
                        }
                    }
                }
                CircuitOp::MeasureReset { target, label } => {
                    deferred.push((*target, label.clone(), step as u64, site));
                }
            }
        }
        if noise_on && config.noise.p_damp_per_step > 0.0 {
            for q in [0usize, 1usize] {
                let draw = stream.uniform(&[purpose::DAMPING, traj, step as u64, q as u64]);
                sample_amplitude_damping(&mut state, q, config.noise.p_damp_per_step, draw);
            }
        }
    }

    // Measure every ancilla now, in the order the resets were scheduled.
    let mut jump_log = Vec::with_capacity(deferred.len());
    let mut labels_per_step = Vec::new();
    for (target, label, step, site) in &deferred {
        let draw = stream.uniform(&[purpose::MEASURE, traj, *step, *site]);
        let outcome = state.measure_qubit(*target, draw).expect("validated circuit");
        state.reset_measured_qubit(*target, outcome);
        let recorded = if noise_on {
            let flip = stream.uniform(&[purpose::READOUT_FLIP, traj, *step, *site]);
            apply_readout_flip(outcome, config.noise.p_read0, config.noise.p_read1, flip)
        } else {
            outcome
        };
        jump_log.push(recorded);
        if *step == 0 {
            labels_per_step.push(label.clone());
        }
    }

    Ok(ShotRecord {
        jump_log,
        channel_labels: labels_per_step,
        final_state: extract_two_qubit_state(&state),
    })
}

/// Run one stochastic shot. Identical inputs give identical records.
pub fn run_trajectory(config: &TrajectoryConfig, trajectory_index: usize) -> Result<ShotRecord> {
    config.validate()?;
    let stream = Stream::new(config.seed);
    if config.hardware_faithful {
        run_trajectory_fresh_ancillas(config, &stream, trajectory_index as u64)
    } else {
        let circuit = build_trotter_step(&config.params, &config.variant, (2, 2))?;
        Ok(run_trajectory_reused(config, &circuit, &stream, trajectory_index as u64))
    }
}

/// Chunk size of the deterministic ensemble reduction.
const CHUNK: usize = 1024;

#[derive(Clone)]
struct Accum {
    sum: [[C64; 4]; 4],
    sumsq_re: [[f64; 4]; 4],
    sumsq_im: [[f64; 4]; 4],
    n: usize,
}

impl Accum {
    fn new() -> Self {
        Accum {
            sum: [[ZERO; 4]; 4],
            sumsq_re: [[0.0; 4]; 4],
            sumsq_im: [[0.0; 4]; 4],
            n: 0,
        }
    }

    fn absorb_state(&mut self, sv: &StateVector) {
        for r in 0..4 {
            for c in 0..4 {
                let v = sv.amp(r) * sv.amp(c).conj();
                self.sum[r][c] += v;
                self.sumsq_re[r][c] += v.re * v.re;
                self.sumsq_im[r][c] += v.im * v.im;
            }
        }
        self.n += 1;
    }

    fn merge(&mut self, other: &Accum) {
        for r in 0..4 {
            for c in 0..4 {
                self.sum[r][c] += other.sum[r][c];
                self.sumsq_re[r][c] += other.sumsq_re[r][c];
                self.sumsq_im[r][c] += other.sumsq_im[r][c];
            }
        }
        self.n += other.n;
    }

    fn finish(&self) -> EnsembleStats {
        let n = self.n as f64;
        let mut mean = CMat::zeros(4);
        let mut stderr_re = [[0.0; 4]; 4];
        let mut stderr_im = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                let m = self.sum[r][c] / n;
                mean.set(r, c, m);
                if self.n > 1 {
                    let var_re = (self.sumsq_re[r][c] / n - m.re * m.re).max(0.0) * n / (n - 1.0);
                    let var_im = (self.sumsq_im[r][c] / n - m.im * m.im).max(0.0) * n / (n - 1.0);
                    stderr_re[r][c] = (var_re / n).sqrt();
                    stderr_im[r][c] = (var_im / n).sqrt();
                }
            }
        }
        EnsembleStats { mean_density: mean, stderr_re, stderr_im, n_samples: self.n }
    }
}

/// Average |ψ⟩⟨ψ| over `n_trajectories` shots.
///
/// Shots are grouped into fixed chunks; each chunk accumulates in trajectory
/// order and chunks merge in chunk order, so the result does not depend on
/// how the chunks were scheduled across threads.
pub fn run_ensemble(config: &TrajectoryConfig) -> Result<EnsembleStats> {
    config.validate()?;
    let stream = Stream::new(config.seed);
    let n = config.n_trajectories;
    let shared_circuit = if config.hardware_faithful {
        None
    } else {
        Some(build_trotter_step(&config.params, &config.variant, (2, 2))?)
    };

    let n_chunks = n.div_ceil(CHUNK);
    let chunk_accums: Vec<Result<Accum>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(n);
            let mut acc = Accum::new();
            for traj in lo..hi {
                let rec = match &shared_circuit {
                    Some(circ) => run_trajectory_reused(config, circ, &stream, traj as u64),
                    None => run_trajectory_fresh_ancillas(config, &stream, traj as u64)?,
                };
                acc.absorb_state(&rec.final_state);
            }
            Ok(acc)
        })
        .collect();

    let mut total = Accum::new();
    for acc in chunk_accums {
        total.merge(&acc?);
    }
    let stats = total.finish();
    debug_assert!(stats.mean_density.hermiticity_defect() < 1e-12);
    debug_assert!((stats.mean_density.trace().re - 1.0).abs() < 1e-12);
    Ok(stats)
}

/// Spin-block decomposition of the ensemble mean (renormalized 3×3 block,
/// surplus population, surplus coherences).
pub fn ensemble_density_matrix(stats: &EnsembleStats) -> Result<SpinBlockView> {
    spin_block_view(&stats.mean_density)
}

/// Ensemble statistics after every step, 0 through `n_steps`, from a single
/// pass over the shots (the keyed draws make each prefix of a shot identical
/// to a shorter run).
pub fn run_ensemble_series(config: &TrajectoryConfig) -> Result<Vec<EnsembleStats>> {
    config.validate()?;
    if config.hardware_faithful {
        // Deferred measurement entangles ancillas across steps; snapshots
        // come from separate runs per horizon instead.
        let mut out = Vec::with_capacity(config.n_steps + 1);
        for n in 0..=config.n_steps {
            let sub = TrajectoryConfig { n_steps: n, ..config.clone() };
            out.push(run_ensemble(&sub)?);
        }
        return Ok(out);
    }
    let stream = Stream::new(config.seed);
    let circuit = build_trotter_step(&config.params, &config.variant, (2, 2))?;
    let n = config.n_trajectories;
    let n_chunks = n.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<Accum>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(n);
            let mut accs = vec![Accum::new(); config.n_steps + 1];
            for traj in lo..hi {
                let mut state = {
                    let sys = initial_state_vector(config, &stream, traj as u64);
                    if circuit.n_qubits() == 2 {
                        sys
                    } else {
                        let mut amps = vec![ZERO; 1 << circuit.n_qubits()];
                        for k in 0..4 {
                            amps[k] = sys.amp(k);
                        }
                        StateVector::from_amplitudes(amps).expect("embedding keeps the norm")
                    }
                };
                accs[0].absorb_state(&if circuit.n_qubits() == 2 {
                    state.clone()
                } else {
                    extract_two_qubit_state(&state)
                });
                for step in 0..config.n_steps {
                    run_step(&mut state, &circuit, config, &stream, traj as u64, step as u64);
                    let sys = if circuit.n_qubits() == 2 {
                        state.clone()
                    } else {
                        extract_two_qubit_state(&state)
                    };
                    accs[step + 1].absorb_state(&sys);
                }
            }
            accs
        })
        .collect();

    let mut totals = vec![Accum::new(); config.n_steps + 1];
    for chunk in &per_chunk {
        for (t, a) in totals.iter_mut().zip(chunk) {
            t.merge(a);
        }
    }
    Ok(totals.iter().map(Accum::finish).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{integrate_lindblad, DensityMatrix, LindbladModel};
    use crate::linalg::ONE;
    use crate::spin1::{JumpConvention, SignalStyle};
    use std::f64::consts::PI;

    fn polar(r: f64, a: f64) -> C64 {
        C64::from_polar(r, a)
    }

    fn decay_config(p_eff: f64, n_steps: usize) -> TrajectoryConfig {
        // paper-literal convention so the per-step jump probability is
        // gamma*dt directly
        let params = SpinModelParams {
            gamma_10: p_eff,
            gamma_m10: p_eff,
            dt: 1.0,
            ..Default::default()
        };
        let variant = TrotterVariant {
            jump_convention: JumpConvention::PaperLiteral,
            ..TrotterVariant::controlled()
        };
        let mut config = TrajectoryConfig::new(params, variant, n_steps);
        config.initial = InitialState::Spin(SpinState::Plus1);
        config
    }

    #[test]
    fn trivial_config_reaches_ground_state_with_empty_log() {
        let params = SpinModelParams::default();
        let config = TrajectoryConfig::new(params, TrotterVariant::controlled(), 5);
        let rec = run_trajectory(&config, 0).unwrap();
        assert!(rec.jump_log.is_empty());
        assert_eq!(rec.final_state.amp(0), ONE);
    }

    #[test]
    fn shots_are_deterministic() {
        let mut config = decay_config(0.2, 4);
        config.seed = 7;
        config.noise = NoiseParams::nisq();
        let a = run_trajectory(&config, 3).unwrap();
        let b = run_trajectory(&config, 3).unwrap();
        assert_eq!(a, b);
        let c = run_trajectory(&config, 4).unwrap();
        assert!(a != c, "different trajectories should differ");
    }

    #[test]
    fn jump_probability_matches_geometric_law() {
        // From |+1⟩ with per-step jump probability 0.2 on q1, the chance of
        // at least one jump in 4 steps is 1 - 0.8^4 = 0.5904.
        let mut config = decay_config(0.2, 4);
        config.n_trajectories = 100_000;
        config.seed = 11;
        let stream = Stream::new(config.seed);
        let circuit = build_trotter_step(&config.params, &config.variant, (2, 2)).unwrap();
        let mut hits = 0u64;
        for traj in 0..config.n_trajectories {
            let rec = run_trajectory_reused(&config, &circuit, &stream, traj as u64);
            // q1 jumps are the d_plus1 channel: even slots of each step pair
            let jumped = rec
                .jump_log
                .chunks(2)
                .any(|pair| pair[0] == 1);
            hits += u64::from(jumped);
        }
        let freq = hits as f64 / config.n_trajectories as f64;
        let p = 1.0 - 0.8f64.powi(4);
        let sigma = (p * (1.0 - p) / config.n_trajectories as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * sigma, "freq {freq} vs {p}");
    }

    #[test]
    fn ensemble_populations_match_closed_form_decay() {
        let mut config = decay_config(0.2, 4);
        config.n_trajectories = 100_000;
        config.seed = 2;
        let stats = run_ensemble(&config).unwrap();
        let view = ensemble_density_matrix(&stats).unwrap();
        let expect = 0.8f64.powi(4); // 0.4096
        let sigma = stats.stderr(2, 2).max(1e-4);
        assert!(
            (view.spin.get(0, 0).re - expect).abs() < 3.0 * sigma,
            "rho_(+1,+1) = {} vs {expect}",
            view.spin.get(0, 0).re
        );
        assert!((view.spin.get(1, 1).re - (1.0 - expect)).abs() < 3.0 * sigma);
    }

    #[test]
    fn single_trajectory_stats_are_a_pure_projector() {
        let mut config = decay_config(0.2, 3);
        config.n_trajectories = 1;
        let stats = run_ensemble(&config).unwrap();
        assert_eq!(stats.n_samples, 1);
        let purity = stats.mean_density.matmul(&stats.mean_density).trace().re;
        assert!((purity - 1.0).abs() < 1e-12);
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(stats.stderr(r, c), 0.0);
            }
        }
    }

    #[test]
    fn serial_and_parallel_reductions_agree_bitwise() {
        let mut config = decay_config(0.3, 3);
        config.n_trajectories = 3000; // spans multiple chunks
        config.seed = 13;
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let serial = pool1.install(|| run_ensemble(&config)).unwrap();
        let parallel = pool8.install(|| run_ensemble(&config)).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(serial.mean_density.get(r, c), parallel.mean_density.get(r, c));
                assert_eq!(serial.stderr_re[r][c], parallel.stderr_re[r][c]);
            }
        }
    }

    #[test]
    fn onset_ensemble_tracks_the_master_equation() {
        // Signal + dissipation; ensemble mean must agree with the encoded
        // Lindblad solution entrywise within max(3 sigma, splitting error).
        let params = SpinModelParams {
            delta: 0.0,
            epsilon: 0.25,
            gamma_10: 1.0,
            gamma_m10: 1.0,
            j_01: polar(2.0, -PI / 6.0),
            j_0m1: polar(1.0, PI / 3.0),
            j_m11: ZERO,
            dt: 0.2,
        };
        let n_steps = 4;
        let mut config = TrajectoryConfig::new(params, TrotterVariant::controlled(), n_steps);
        config.n_trajectories = 60_000;
        config.seed = 5;
        let stats = run_ensemble(&config).unwrap();

        let model = LindbladModel::encoded_model(&params, SignalStyle::Controlled);
        let oracle = integrate_lindblad(
            &model,
            &DensityMatrix::basis(4, 0),
            n_steps as f64 * params.dt,
            1e-10,
        )
        .unwrap();

        let budget = 5.0 * n_steps as f64 * params.dt.powi(3);
        for r in 0..4 {
            for c in 0..4 {
                let diff = (stats.mean_density.get(r, c) - oracle.entry(r, c)).norm();
                let tol = (3.0 * stats.stderr(r, c)).max(budget);
                assert!(diff < tol, "entry ({r},{c}): diff {diff:.2e} tol {tol:.2e}");
            }
        }
    }

    #[test]
    fn hardware_faithful_matches_reused_ancilla_statistics() {
        let mut config = decay_config(0.2, 4);
        config.n_trajectories = 40_000;
        config.seed = 19;
        let reused = run_ensemble(&config).unwrap();
        config.hardware_faithful = true;
        let fresh = run_ensemble(&config).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let tol = 3.0 * (reused.stderr(r, c) + fresh.stderr(r, c)) + 1e-6;
                assert!(
                    (reused.mean_density.get(r, c) - fresh.mean_density.get(r, c)).norm() < tol
                );
            }
        }
    }

    #[test]
    fn hardware_faithful_rejects_long_horizons() {
        let mut config = decay_config(0.2, 5);
        config.hardware_faithful = true;
        assert!(matches!(
            run_trajectory(&config, 0),
            Err(Error::HardwareStepLimit { requested: 5, max: 4 })
        ));
    }

    #[test]
    fn explicit_pure_initial_state_is_honored() {
        let r = 0.5f64.sqrt();
        let psi = StateVector::from_amplitudes(vec![
            C64::new(r, 0.0),
            ZERO,
            C64::new(0.0, r),
            ZERO,
        ])
        .unwrap();
        let params = SpinModelParams::default();
        let mut config = TrajectoryConfig::new(params, TrotterVariant::controlled(), 0);
        config.initial = InitialState::Pure(psi.clone());
        let stats = run_ensemble(&config).unwrap();
        for r_ in 0..4 {
            for c in 0..4 {
                let expect = psi.amp(r_) * psi.amp(c).conj();
                assert!((stats.mean_density.get(r_, c) - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn mixed_initial_state_reproduces_eigenvalue_weights() {
        let mut rho = CMat::zeros(4);
        rho.set(0, 0, C64::new(0.25, 0.0));
        rho.set(2, 2, C64::new(0.75, 0.0));
        let params = SpinModelParams::default();
        let mut config = TrajectoryConfig::new(params, TrotterVariant::controlled(), 0);
        config.initial = InitialState::Mixed(rho);
        config.n_trajectories = 50_000;
        config.seed = 3;
        let stats = run_ensemble(&config).unwrap();
        let sigma = (0.75f64 * 0.25 / 50_000f64).sqrt();
        assert!((stats.mean_density.get(2, 2).re - 0.75).abs() < 3.0 * sigma);
        assert!((stats.mean_density.get(0, 0).re - 0.25).abs() < 3.0 * sigma);
    }

    #[test]
    fn damping_hook_matches_the_analytic_channel() {
        // per-step amplitude damping on both system qubits, ensemble vs the
        // deterministic channel composition
        let p_damp = 0.15;
        let params = SpinModelParams::default();
        let mut config = TrajectoryConfig::new(params, TrotterVariant::controlled(), 3);
        config.initial = InitialState::Spin(SpinState::Plus1);
        config.noise = NoiseParams { p_damp_per_step: p_damp, enabled: true, ..NoiseParams::off() };
        config.n_trajectories = 50_000;
        config.seed = 29;
        let stats = run_ensemble(&config).unwrap();
        // |+1> = q1 excited: survival (1 - p)^3
        let expect = (1.0 - p_damp).powi(3);
        let sigma = stats.stderr(2, 2).max(1e-4);
        assert!(
            (stats.mean_density.get(2, 2).re - expect).abs() < 3.0 * sigma,
            "pop {} vs {expect}",
            stats.mean_density.get(2, 2).re
        );
    }

    #[test]
    fn noiseless_flag_is_bit_identical_to_disabled_noise() {
        let mut config = decay_config(0.25, 4);
        config.seed = 23;
        let base = run_trajectory(&config, 17).unwrap();
        config.noise = NoiseParams { enabled: true, ..NoiseParams::off() };
        let with_zero_noise = run_trajectory(&config, 17).unwrap();
        assert_eq!(base, with_zero_noise);
    }
}
