//! Simulated-shot state tomography and readout-error mitigation.
//!
//! The reconstruction pipeline mirrors the measurement protocol of the
//! experiment: rotate into the X/Y/Z bases, collect shot counts, convert to
//! Pauli expectation values, invert linearly, and project onto the physical
//! state space when shot noise pushes the estimate outside it. Readout
//! errors are measured by calibration circuits and undone by constrained
//! least squares (plain matrix inversion can return negative
//! probabilities). The full spin-1 density matrix is assembled from the
//! single-qubit tomographies of q1 and q0 under a product ansatz, which is
//! exact for the sequential single-qubit-circuit protocol; the (+1, −1)
//! coherence of that assembly is implied by the product structure rather
//! than measured, and is flagged as such.

use crate::linalg::{hermitian_eigen, solve_real, C64, CMat};
use crate::noise::{apply_readout_flip, NoiseParams};
use crate::rng::Stream;
use crate::spin1::{SpinEncoding, SpinState};
use crate::statevec::{GateOp, QuantumCircuit, StateVector};
use crate::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI};

/// Measurement basis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliBasis {
    X,
    Y,
    Z,
}

impl PauliBasis {
    pub const ALL: [PauliBasis; 3] = [PauliBasis::X, PauliBasis::Y, PauliBasis::Z];

    pub fn label(self) -> &'static str {
        match self {
            PauliBasis::X => "x",
            PauliBasis::Y => "y",
            PauliBasis::Z => "z",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(PauliBasis::X),
            "y" => Ok(PauliBasis::Y),
            "z" => Ok(PauliBasis::Z),
            other => Err(Error::MalformedTable(format!("unknown basis `{other}`"))),
        }
    }
}

/// Shot counts for one measured basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsTable {
    pub basis: PauliBasis,
    pub shots: u64,
    /// Outcome histogram; index = outcome bit pattern.
    pub counts: Vec<u64>,
}

impl CountsTable {
    pub fn new(basis: PauliBasis, counts: Vec<u64>) -> Self {
        let shots = counts.iter().sum();
        CountsTable { basis, shots, counts }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.shots as f64).collect()
    }
}

/// Serialize counts tables to the line format `basis,outcome,count`.
pub fn write_counts(tables: &[CountsTable]) -> String {
    let mut out = String::new();
    for t in tables {
        for (outcome, count) in t.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", t.basis.label(), outcome, count));
        }
    }
    out
}

/// Parse the `basis,outcome,count` line format (outcomes per basis must be
/// dense from zero).
pub fn parse_counts(text: &str) -> Result<Vec<CountsTable>> {
    let mut tables: Vec<(PauliBasis, Vec<u64>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::MalformedTable(format!("line {}: `{line}`", lineno + 1)));
        }
        let basis = PauliBasis::from_label(parts[0])?;
        let outcome: usize = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::MalformedTable(format!("line {}: bad outcome", lineno + 1)))?;
        let count: u64 = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::MalformedTable(format!("line {}: bad count", lineno + 1)))?;
        let entry = match tables.iter_mut().find(|(b, _)| *b == basis) {
            Some((_, v)) => v,
            None => {
                tables.push((basis, Vec::new()));
                &mut tables.last_mut().unwrap().1
            }
        };
        if entry.len() != outcome {
            return Err(Error::MalformedTable(format!(
                "line {}: outcomes must be dense in order",
                lineno + 1
            )));
        }
        entry.push(count);
    }
    Ok(tables.into_iter().map(|(b, v)| CountsTable::new(b, v)).collect())
}

/// Pre-measurement rotations turning a Z-basis readout into an X, Y or Z
/// measurement of `target`: H for X, U2(0, π/2) for Y, nothing for Z.
pub fn tomography_circuits(target: usize) -> [QuantumCircuit; 3] {
    let n = target + 1;
    let mut x = QuantumCircuit::new(n);
    x.push_gate(GateOp::u2(target, 0.0, PI)).expect("valid index");
    let mut y = QuantumCircuit::new(n);
    y.push_gate(GateOp::u2(target, 0.0, FRAC_PI_2)).expect("valid index");
    let z = QuantumCircuit::new(n);
    [x, y, z]
}

fn basis_circuit(target: usize, basis: PauliBasis) -> QuantumCircuit {
    let [x, y, z] = tomography_circuits(target);
    match basis {
        PauliBasis::X => x,
        PauliBasis::Y => y,
        PauliBasis::Z => z,
    }
}

/// Pauli expectation values with standard errors.
#[derive(Debug, Clone, Copy)]
pub struct PauliExpectations {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub se_x: f64,
    pub se_y: f64,
    pub se_z: f64,
}

/// ⟨P⟩ = (n₀ − n₁)/shots per basis, standard error √((1 − ⟨P⟩²)/shots).
pub fn estimate_pauli_expectations(tables: &[CountsTable]) -> Result<PauliExpectations> {
    let mut vals = [(0.0, 0.0); 3];
    let mut seen = [false; 3];
    for t in tables {
        if t.shots == 0 || t.counts.len() != 2 {
            return Err(Error::EmptyCounts);
        }
        let shots = t.shots as f64;
        let exp = (t.counts[0] as f64 - t.counts[1] as f64) / shots;
        let se = ((1.0 - exp * exp).max(0.0) / shots).sqrt();
        let idx = match t.basis {
            PauliBasis::X => 0,
            PauliBasis::Y => 1,
            PauliBasis::Z => 2,
        };
        vals[idx] = (exp, se);
        seen[idx] = true;
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::EmptyCounts);
    }
    Ok(PauliExpectations {
        x: vals[0].0,
        y: vals[1].0,
        z: vals[2].0,
        se_x: vals[0].1,
        se_y: vals[1].1,
        se_z: vals[2].1,
    })
}

/// Closest density matrix (Frobenius norm) to a Hermitian trace-1 matrix:
/// eigendecompose, then walk the eigenvalues in ascending order, zeroing
/// negatives and spreading the accumulated deficit evenly over the rest.
pub fn ml_project(candidate: &CMat) -> CMat {
    let (w, v) = hermitian_eigen(&candidate.hermitize());
    let d = w.len();
    let mut lam = w;
    let mut deficit = 0.0;
    for i in 0..d {
        let remaining = (d - i) as f64;
        if lam[i] + deficit / remaining < 0.0 {
            deficit += lam[i];
            lam[i] = 0.0;
        } else {
            for l in lam.iter_mut().skip(i) {
                *l += deficit / remaining;
            }
            break;
        }
    }
    let mut out = CMat::zeros(d);
    for k in 0..d {
        if lam[k] == 0.0 {
            continue;
        }
        for r in 0..d {
            let vr = v.get(r, k);
            for c in 0..d {
                out.add_to(r, c, vr * v.get(c, k).conj() * lam[k]);
            }
        }
    }
    out
}

/// Linear inversion ρ = (I + ⟨X⟩σx + ⟨Y⟩σy + ⟨Z⟩σz)/2, projected back into
/// the Bloch ball when the estimate falls outside it.
pub fn reconstruct_single_qubit(exp: &PauliExpectations) -> CMat {
    let (x, y, z) = (exp.x, exp.y, exp.z);
    let mut rho = CMat::zeros(2);
    rho.set(0, 0, C64::new((1.0 + z) / 2.0, 0.0));
    rho.set(1, 1, C64::new((1.0 - z) / 2.0, 0.0));
    rho.set(0, 1, C64::new(x / 2.0, -y / 2.0));
    rho.set(1, 0, C64::new(x / 2.0, y / 2.0));
    if (x * x + y * y + z * z) > 1.0 {
        ml_project(&rho)
    } else {
        rho
    }
}

/// Column-stochastic readout confusion matrix: `m[i][j] = P(read i | prepared j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationMatrix {
    m: Vec<Vec<f64>>,
}

impl CalibrationMatrix {
    pub fn from_matrix(m: Vec<Vec<f64>>) -> Result<Self> {
        let dim = m.len();
        if !(dim == 2 || dim == 4) || m.iter().any(|row| row.len() != dim) {
            return Err(Error::InvalidParams("calibration matrix must be 2x2 or 4x4".into()));
        }
        for j in 0..dim {
            let col: f64 = (0..dim).map(|i| m[i][j]).sum();
            if (col - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParams(format!("column {j} sums to {col}")));
            }
            for row in &m {
                if !(0.0..=1.0).contains(&row[j]) {
                    return Err(Error::InvalidParams("entries must lie in [0, 1]".into()));
                }
            }
        }
        Ok(CalibrationMatrix { m })
    }

    /// Exact confusion matrix of independent per-qubit readout flips.
    pub fn analytic(noise: &NoiseParams, n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut m = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            for (i, row) in m.iter_mut().enumerate() {
                let mut p = 1.0;
                for q in 0..n_qubits {
                    let true_bit = (j >> q) & 1;
                    let read_bit = (i >> q) & 1;
                    let flip = if true_bit == 0 { noise.p_read0 } else { noise.p_read1 };
                    p *= if read_bit == true_bit { 1.0 - flip } else { flip };
                }
                row[j] = p;
            }
        }
        CalibrationMatrix { m }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    /// M·p.
    pub fn forward(&self, p: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|i| (0..dim).map(|j| self.m[i][j] * p[j]).sum()).collect()
    }
}

/// Measure the confusion matrix from simulated prepare-and-measure
/// calibration circuits (one per basis state) through the readout-flip
/// channel.
pub fn build_calibration(
    noise: &NoiseParams,
    n_qubits: usize,
    shots: u64,
    seed: u64,
) -> Result<CalibrationMatrix> {
    if shots == 0 {
        return Err(Error::EmptyCounts);
    }
    noise.validate()?;
    let dim = 1usize << n_qubits;
    let stream = Stream::new(seed);
    let mut m = vec![vec![0.0; dim]; dim];
    for prepared in 0..dim {
        let mut counts = vec![0u64; dim];
        for s in 0..shots {
            let mut read = 0usize;
            for q in 0..n_qubits {
                let bit = ((prepared >> q) & 1) as u8;
                let draw = stream.uniform(&[0xca1, prepared as u64, s, q as u64]);
                let flipped = apply_readout_flip(bit, noise.p_read0, noise.p_read1, draw);
                read |= (flipped as usize) << q;
            }
            counts[read] += 1;
        }
        for i in 0..dim {
            m[i][prepared] = counts[i] as f64 / shots as f64;
        }
    }
    CalibrationMatrix::from_matrix(m)
}

/// Constrained least squares: minimize ‖M·p − p_raw‖² subject to p ≥ 0 and
/// Σp = 1. Solved exactly by enumerating active sets (dimension ≤ 4).
pub fn mitigate_counts(raw: &CountsTable, cal: &CalibrationMatrix) -> Result<Vec<f64>> {
    if raw.shots == 0 {
        return Err(Error::EmptyCounts);
    }
    if raw.counts.len() != cal.dim() {
        return Err(Error::DimensionMismatch { expected: cal.dim(), got: raw.counts.len() });
    }
    let q = raw.frequencies();
    mitigate_probabilities(&q, cal)
}

/// Same constrained solve for an already-normalized frequency vector.
pub fn mitigate_probabilities(q: &[f64], cal: &CalibrationMatrix) -> Result<Vec<f64>> {
    let dim = cal.dim();
    if q.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: q.len() });
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for support in 1u32..(1 << dim) {
        let idx: Vec<usize> = (0..dim).filter(|k| support & (1 << k) != 0).collect();
        let k = idx.len();
        // KKT system for min ||M_S p - q||^2 s.t. 1' p = 1 on the support:
        // [2 M_S' M_S, 1; 1', 0] [p; mu] = [2 M_S' q; 1]
        let mut a = vec![vec![0.0; k + 1]; k + 1];
        let mut b = vec![0.0; k + 1];
        for (r, &ir) in idx.iter().enumerate() {
            for (c, &ic) in idx.iter().enumerate() {
                a[r][c] = 2.0 * (0..dim).map(|i| cal.entry(i, ir) * cal.entry(i, ic)).sum::<f64>();
            }
            a[r][k] = 1.0;
            a[k][r] = 1.0;
            b[r] = 2.0 * (0..dim).map(|i| cal.entry(i, ir) * q[i]).sum::<f64>();
        }
        b[k] = 1.0;
        let Some(sol) = solve_real(&a, &b) else { continue };
        if sol[..k].iter().any(|&p| p < -1e-12) {
            continue;
        }
        let mut p = vec![0.0; dim];
        for (r, &ir) in idx.iter().enumerate() {
            p[ir] = sol[r].max(0.0);
        }
        let resid: f64 = {
            let mp = cal.forward(&p);
            mp.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
        };
        if best.as_ref().is_none_or(|(r, _)| resid < *r - 1e-15) {
            best = Some((resid, p));
        }
    }
    best.map(|(_, p)| p).ok_or_else(|| {
        Error::InvalidParams("no feasible mitigation solution (singular calibration)".into())
    })
}

/// Spin-1 density matrix assembled from the two single-qubit tomographies.
#[derive(Debug, Clone)]
pub struct SpinAssembly {
    /// 3×3 spin block in the (+1, 0, −1) order, renormalized by 1/(1 − ρ_XX).
    pub spin: CMat,
    /// Surplus-state weight of the product state before renormalization.
    pub rho_xx: f64,
    /// The (+1, −1) coherence of this assembly follows from the product
    /// ansatz; the sequential protocol cannot measure it independently.
    pub coherence_p1_m1_derived: bool,
}

/// Form ρ_q1 ⊗ ρ_q0, cut out the spin-1 block, renormalize.
pub fn assemble_spin1_density(rho_q1: &CMat, rho_q0: &CMat) -> Result<SpinAssembly> {
    for rho in [rho_q1, rho_q0] {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: rho.dim() });
        }
        if rho.hermiticity_defect() > 1e-10 || (rho.trace().re - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDensity("qubit input is not a density matrix".into()));
        }
    }
    // index = 2*q1 + q0
    let product = rho_q1.kron(rho_q0);
    let enc = SpinEncoding::default();
    let ix = enc.two_qubit_index(SpinState::Surplus);
    let rho_xx = product.get(ix, ix).re;
    if rho_xx >= 1.0 - 1e-9 {
        return Err(Error::DegenerateRenormalization { rho_xx });
    }
    let map: Vec<usize> = SpinState::SPIN.iter().map(|s| enc.two_qubit_index(*s)).collect();
    let mut spin = CMat::zeros(3);
    for r in 0..3 {
        for c in 0..3 {
            spin.set(r, c, product.get(map[r], map[c]) / (1.0 - rho_xx));
        }
    }
    Ok(SpinAssembly { spin, rho_xx, coherence_p1_m1_derived: true })
}

/// Simulate `shots` measurements of a single-qubit state in one basis,
/// through the readout-flip channel when noise is active. Draws are keyed by
/// (`salt`, basis, shot), so different tomography experiments can share a
/// stream without collisions.
pub fn simulate_single_qubit_counts(
    state: &StateVector,
    basis: PauliBasis,
    shots: u64,
    noise: &NoiseParams,
    stream: &Stream,
    salt: u64,
) -> CountsTable {
    assert_eq!(state.n_qubits(), 1);
    let mut rotated = state.clone();
    rotated.apply_unitaries(&basis_circuit(0, basis)).expect("one-qubit circuit");
    let p1 = rotated.prob_one(0);
    let bidx = basis as u64;
    let mut counts = vec![0u64; 2];
    for s in 0..shots {
        let outcome = u8::from(stream.uniform(&[0x70b0, salt, bidx, s]) < p1);
        let read = if noise.is_active() {
            let flip = stream.uniform(&[0x70b1, salt, bidx, s]);
            apply_readout_flip(outcome, noise.p_read0, noise.p_read1, flip)
        } else {
            outcome
        };
        counts[read as usize] += 1;
    }
    CountsTable::new(basis, counts)
}

/// Full single-qubit tomography: simulate all three bases, mitigate counts
/// against the calibration when provided, reconstruct.
pub fn tomograph_single_qubit(
    state: &StateVector,
    shots: u64,
    noise: &NoiseParams,
    calibration: Option<&CalibrationMatrix>,
    stream: &Stream,
    salt: u64,
) -> Result<CMat> {
    let mut tables = Vec::new();
    for basis in PauliBasis::ALL {
        let mut t = simulate_single_qubit_counts(state, basis, shots, noise, stream, salt);
        if let Some(cal) = calibration {
            let p = mitigate_counts(&t, cal)?;
            // keep integer counts for the expectation-value formulas
            let c0 = (p[0] * shots as f64).round() as u64;
            t = CountsTable::new(basis, vec![c0, shots - c0.min(shots)]);
        }
        tables.push(t);
    }
    let exp = estimate_pauli_expectations(&tables)?;
    Ok(reconstruct_single_qubit(&exp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::DensityMatrix;

    fn diag(entries: &[f64]) -> CMat {
        let mut m = CMat::zeros(entries.len());
        for (k, &v) in entries.iter().enumerate() {
            m.set(k, k, C64::new(v, 0.0));
        }
        m
    }

    #[test]
    fn tomography_circuits_measure_the_right_paulis() {
        let [x, y, z] = tomography_circuits(0);
        assert!(z.is_empty());
        // |+> through the X circuit reads 0 with certainty
        let r = 0.5f64.sqrt();
        let mut plus = StateVector::from_amplitudes(vec![C64::new(r, 0.0), C64::new(r, 0.0)])
            .unwrap();
        plus.apply_unitaries(&x).unwrap();
        assert!((plus.prob_one(0)).abs() < 1e-12);
        // |+i> through the Y circuit reads 0 with certainty
        let mut plus_i =
            StateVector::from_amplitudes(vec![C64::new(r, 0.0), C64::new(0.0, r)]).unwrap();
        plus_i.apply_unitaries(&y).unwrap();
        assert!((plus_i.prob_one(0)).abs() < 1e-12);
    }

    #[test]
    fn basis_rotations_reproduce_direct_expectations() {
        // <P> from rotated Z-readout == tr(P rho) on random states
        let st = Stream::new(61);
        for k in 0..20u64 {
            let (a, b) = st.normal_pair(&[k, 0]);
            let (c, d) = st.normal_pair(&[k, 1]);
            let mut amps = vec![C64::new(a, b), C64::new(c, d)];
            let norm: f64 = amps.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            amps.iter_mut().for_each(|x| *x /= norm);
            let sv = StateVector::from_amplitudes(amps.clone()).unwrap();
            for (bi, basis) in PauliBasis::ALL.iter().enumerate() {
                let mut rot = sv.clone();
                rot.apply_unitaries(&basis_circuit(0, *basis)).unwrap();
                let from_counts = 1.0 - 2.0 * rot.prob_one(0);
                let p = crate::noise::pauli(bi + 1);
                let mut direct = 0.0;
                for r in 0..2 {
                    for cc in 0..2 {
                        direct += (amps[r].conj() * p[r][cc] * amps[cc]).re;
                    }
                }
                assert!((from_counts - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expectation_values_and_errors() {
        let t = CountsTable::new(PauliBasis::Z, vec![8192, 0]);
        let x = CountsTable::new(PauliBasis::X, vec![6144, 2048]);
        let y = CountsTable::new(PauliBasis::Y, vec![4096, 4096]);
        let exp = estimate_pauli_expectations(&[t, x, y]).unwrap();
        assert_eq!(exp.z, 1.0);
        assert_eq!(exp.se_z, 0.0);
        assert!((exp.x - 0.5).abs() < 1e-15);
        assert!((exp.y - 0.0).abs() < 1e-15);
        assert!((exp.se_y - 1.0 / 8192f64.sqrt()).abs() < 1e-12);
        assert!(estimate_pauli_expectations(&[]).is_err());
    }

    #[test]
    fn reconstruction_basic_cases() {
        let pure0 = PauliExpectations { x: 0.0, y: 0.0, z: 1.0, se_x: 0.0, se_y: 0.0, se_z: 0.0 };
        let rho = reconstruct_single_qubit(&pure0);
        assert!((rho.get(0, 0).re - 1.0).abs() < 1e-14);

        let mixed = PauliExpectations { x: 0.0, y: 0.0, z: 0.0, se_x: 0.0, se_y: 0.0, se_z: 0.0 };
        let rho = reconstruct_single_qubit(&mixed);
        assert!((rho.get(0, 0).re - 0.5).abs() < 1e-14);
        assert!(rho.get(0, 1).norm() < 1e-14);
    }

    #[test]
    fn reconstruction_projects_outside_bloch_ball() {
        // (0.8, 0, 0.8): norm > 1, projects to the pure state along (1,0,1)/sqrt2
        let exp = PauliExpectations {
            x: 0.8,
            y: 0.0,
            z: 0.8,
            se_x: 0.0,
            se_y: 0.0,
            se_z: 0.0,
        };
        let rho = reconstruct_single_qubit(&exp);
        let bx = 2.0 * rho.get(1, 0).re;
        let bz = rho.get(0, 0).re - rho.get(1, 1).re;
        let by = 2.0 * rho.get(1, 0).im;
        let r = 0.5f64.sqrt();
        assert!((bx - r).abs() < 1e-10, "bx {bx}");
        assert!(by.abs() < 1e-10);
        assert!((bz - r).abs() < 1e-10);
        assert!(((bx * bx + by * by + bz * bz) - 1.0).abs() < 1e-9);
        assert!(DensityMatrix::from_matrix(rho).is_ok());
    }

    #[test]
    fn ml_project_frozen_examples() {
        let out = ml_project(&diag(&[0.6, 0.5, -0.1]));
        let (w, _) = hermitian_eigen(&out);
        assert!((w[0] - 0.0).abs() < 1e-12);
        assert!((w[1] - 0.45).abs() < 1e-12);
        assert!((w[2] - 0.55).abs() < 1e-12);

        let out = ml_project(&diag(&[1.5, -0.25, -0.25]));
        let (w, _) = hermitian_eigen(&out);
        assert!(w[0].abs() < 1e-12);
        assert!(w[1].abs() < 1e-12);
        assert!((w[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ml_project_is_idempotent_and_keeps_psd_inputs() {
        let st = Stream::new(71);
        for k in 0..50u64 {
            let mut m = CMat::zeros(3);
            for r in 0..3 {
                for c in 0..3 {
                    let (a, b) = st.normal_pair(&[k, r as u64, c as u64]);
                    m.set(r, c, C64::new(0.3 * a, 0.3 * b));
                }
            }
            let mut m = m.hermitize();
            // force trace 1
            let tr = m.trace().re;
            for d in 0..3 {
                m.add_to(d, d, C64::new((1.0 - tr) / 3.0, 0.0));
            }
            let once = ml_project(&m);
            let twice = ml_project(&once);
            assert!(once.sub(&twice).max_abs() < 1e-12, "idempotence");
            assert!((once.trace().re - 1.0).abs() < 1e-12);
            assert!(crate::linalg::min_eigenvalue(&once) > -1e-12);
        }
        // already-PSD input returns unchanged
        let psd = diag(&[0.7, 0.2, 0.1]);
        assert!(ml_project(&psd).sub(&psd).max_abs() < 1e-13);
    }

    /// Exhaustive KKT search over supports of the simplex projection, as an
    /// independent check of the truncate-and-redistribute algorithm.
    fn brute_force_simplex_projection(lam: &[f64]) -> Vec<f64> {
        let d = lam.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for support in 1u32..(1 << d) {
            let idx: Vec<usize> = (0..d).filter(|k| support & (1 << k) != 0).collect();
            let s: f64 = idx.iter().map(|&i| lam[i]).sum();
            let theta = (s - 1.0) / idx.len() as f64;
            let mut x = vec![0.0; d];
            let mut ok = true;
            for &i in &idx {
                x[i] = lam[i] - theta;
                if x[i] < -1e-12 {
                    ok = false;
                }
            }
            if !ok {
                continue;
            }
            let dist: f64 = (0..d).map(|i| (x[i] - lam[i]).powi(2)).sum();
            if best.as_ref().is_none_or(|(b, _)| dist < *b) {
                best = Some((dist, x));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn ml_project_matches_brute_force_on_random_inputs() {
        let st = Stream::new(72);
        for k in 0..100u64 {
            let mut m = CMat::zeros(3);
            for r in 0..3 {
                for c in 0..3 {
                    let (a, b) = st.normal_pair(&[k, r as u64, c as u64]);
                    m.set(r, c, C64::new(0.5 * a, 0.5 * b));
                }
            }
            let mut m = m.hermitize();
            let tr = m.trace().re;
            for d in 0..3 {
                m.add_to(d, d, C64::new((1.0 - tr) / 3.0, 0.0));
            }
            let fast = ml_project(&m);
            let (w, v) = hermitian_eigen(&m);
            let xs = brute_force_simplex_projection(&w);
            let mut slow = CMat::zeros(3);
            for e in 0..3 {
                for r in 0..3 {
                    for c in 0..3 {
                        slow.add_to(r, c, v.get(r, e) * v.get(c, e).conj() * xs[e]);
                    }
                }
            }
            assert!(fast.sub(&slow).frobenius_norm() < 1e-8);
        }
    }

    #[test]
    fn calibration_matrices() {
        let noiseless = NoiseParams::off();
        let cal = build_calibration(&noiseless, 1, 1000, 1).unwrap();
        assert_eq!(cal.entry(0, 0), 1.0);
        assert_eq!(cal.entry(1, 1), 1.0);

        let asym = NoiseParams { p_read0: 0.02, p_read1: 0.01, enabled: true, ..NoiseParams::off() };
        let exact = CalibrationMatrix::analytic(&asym, 1);
        assert!((exact.entry(0, 0) - 0.98).abs() < 1e-15);
        assert!((exact.entry(1, 0) - 0.02).abs() < 1e-15);
        assert!((exact.entry(0, 1) - 0.01).abs() < 1e-15);
        assert!((exact.entry(1, 1) - 0.99).abs() < 1e-15);

        // finite-shot estimate within 3 sigma of the analytic channel
        let shots = 100_000u64;
        let sym = NoiseParams { p_read0: 0.01, p_read1: 0.01, enabled: true, ..NoiseParams::off() };
        let cal = build_calibration(&sym, 1, shots, 7).unwrap();
        let sigma = (0.01f64 * 0.99 / shots as f64).sqrt();
        assert!((cal.entry(1, 0) - 0.01).abs() < 3.0 * sigma);
        assert!((cal.entry(0, 1) - 0.01).abs() < 3.0 * sigma);
    }

    #[test]
    fn mitigation_identity_and_exact_inverse_cases() {
        let id = CalibrationMatrix::from_matrix(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let raw = CountsTable::new(PauliBasis::Z, vec![700, 300]);
        let p = mitigate_counts(&raw, &id).unwrap();
        assert!((p[0] - 0.7).abs() < 1e-12);

        let m = CalibrationMatrix::from_matrix(vec![vec![0.99, 0.01], vec![0.01, 0.99]]).unwrap();
        let raw = CountsTable::new(PauliBasis::Z, vec![9900, 100]);
        let p = mitigate_counts(&raw, &m).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-10, "boundary solution p = (1, 0)");
        assert!(p[1].abs() < 1e-10);
    }

    #[test]
    fn mitigation_output_is_always_a_distribution() {
        let m = CalibrationMatrix::from_matrix(vec![vec![0.95, 0.03], vec![0.05, 0.97]]).unwrap();
        // frequencies outside the image simplex of M
        let p = mitigate_probabilities(&[1.0, 0.0], &m).unwrap();
        assert!(p.iter().all(|&x| x >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn assembly_product_cases() {
        let q0 = diag(&[1.0, 0.0]);
        let q1 = diag(&[1.0, 0.0]);
        let asm = assemble_spin1_density(&q1, &q0).unwrap();
        assert!((asm.spin.get(1, 1).re - 1.0).abs() < 1e-14, "|0><0| spin state");
        assert_eq!(asm.rho_xx, 0.0);
        assert!(asm.coherence_p1_m1_derived);

        // rho_q1 = I/2, rho_q0 = |0><0|: spin diag(1/2, 1/2, 0)
        let asm = assemble_spin1_density(&diag(&[0.5, 0.5]), &diag(&[1.0, 0.0])).unwrap();
        assert!((asm.spin.get(0, 0).re - 0.5).abs() < 1e-14);
        assert!((asm.spin.get(1, 1).re - 0.5).abs() < 1e-14);
        assert!(asm.spin.get(2, 2).norm() < 1e-14);

        // both excited: rho_XX = 1, degenerate
        assert!(matches!(
            assemble_spin1_density(&diag(&[0.0, 1.0]), &diag(&[0.0, 1.0])),
            Err(Error::DegenerateRenormalization { .. })
        ));
    }

    #[test]
    fn assembly_matches_direct_four_by_four_construction() {
        let st = Stream::new(93);
        for k in 0..20u64 {
            let mk = |salt: u64| {
                let (a, b) = st.normal_pair(&[k, salt, 0]);
                let (c, d) = st.normal_pair(&[k, salt, 1]);
                let mut amps = [C64::new(a, b), C64::new(c, d)];
                let norm: f64 = amps.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                amps.iter_mut().for_each(|x| *x /= norm);
                let mut rho = CMat::zeros(2);
                for r in 0..2 {
                    for c in 0..2 {
                        rho.set(r, c, amps[r] * amps[c].conj());
                    }
                }
                rho
            };
            let (r1, r0) = (mk(1), mk(2));
            let asm = assemble_spin1_density(&r1, &r0).unwrap();
            let full = r1.kron(&r0);
            let view = crate::lindblad::spin_block_view(&full).unwrap();
            assert!(asm.spin.sub(&view.spin).max_abs() < 1e-12);
            assert!((asm.rho_xx - view.rho_xx).abs() < 1e-14);
        }
    }

    #[test]
    fn mitigated_noisy_tomography_recovers_the_state() {
        let noise =
            NoiseParams { p_read0: 0.03, p_read1: 0.03, enabled: true, ..NoiseParams::off() };
        let cal = build_calibration(&noise, 1, 200_000, 17).unwrap();
        let st = Stream::new(95);
        let shots = 8192;
        for k in 0..20u64 {
            let (a, b) = st.normal_pair(&[k, 0]);
            let (c, d) = st.normal_pair(&[k, 1]);
            let mut amps = vec![C64::new(a, b), C64::new(c, d)];
            let norm: f64 = amps.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            amps.iter_mut().for_each(|x| *x /= norm);
            let sv = StateVector::from_amplitudes(amps.clone()).unwrap();

            let mitigated =
                tomograph_single_qubit(&sv, shots, &noise, Some(&cal), &st, k).unwrap();
            let raw = tomograph_single_qubit(&sv, shots, &noise, None, &st, k).unwrap();
            let truth = crate::lindblad::DensityMatrix::pure(&amps);
            let d_mit = crate::lindblad::DensityMatrix::from_matrix_unchecked(mitigated)
                .trace_distance(&truth);
            let d_raw = crate::lindblad::DensityMatrix::from_matrix_unchecked(raw)
                .trace_distance(&truth);
            // mitigation brings the estimate within shot noise of the truth;
            // 3% symmetric flips alone shrink the Bloch vector by up to 6%
            assert!(d_mit < 0.05, "state {k}: mitigated distance {d_mit}");
            assert!(d_mit < d_raw + 0.02, "state {k}: mitigation made things worse");
        }
    }

    #[test]
    fn counts_round_trip_through_text_format() {
        let tables = vec![
            CountsTable::new(PauliBasis::X, vec![6144, 2048]),
            CountsTable::new(PauliBasis::Y, vec![4096, 4096]),
            CountsTable::new(PauliBasis::Z, vec![8192, 0]),
        ];
        let text = write_counts(&tables);
        assert!(text.lines().next().unwrap() == "x,0,6144");
        let parsed = parse_counts(&text).unwrap();
        assert_eq!(parsed, tables);
        assert!(parse_counts("x,0\n").is_err());
        assert!(parse_counts("q,0,5\n").is_err());
    }
}
