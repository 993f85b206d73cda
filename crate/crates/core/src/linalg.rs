//! Dense complex matrices for small Hilbert spaces (dims ≤ 16).
//!
//! Everything here is sized for the registers this simulator actually uses
//! (3×3 spin, 4×4 two-qubit, 8×8 with one ancilla), so the implementations
//! favor clarity over asymptotics: row-major `Vec<Complex64>`, cyclic Jacobi
//! for Hermitian eigenproblems, and spectral propagators.

use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.set(k, k, ONE);
        }
        m
    }

    /// Build from a nested row slice; panics if rows are ragged.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "ragged matrix rows");
            for (c, &v) in row.iter().enumerate() {
                m.set(r, c, v);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
    }

    #[inline]
    pub fn add_to(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] += v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        CMat { dim: self.dim, data }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        CMat { dim: self.dim, data }
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat { dim: self.dim, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = CMat::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.add_to(r, c, a * other.get(k, c));
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMat {
        let n = self.dim;
        let mut out = CMat::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// ‖A − A†‖ in the max-abs sense.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                d = d.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        d
    }

    /// (A + A†)/2.
    pub fn hermitize(&self) -> CMat {
        let n = self.dim;
        let mut out = CMat::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, (self.get(r, c) + self.get(c, r).conj()) * 0.5);
            }
        }
        out
    }

    pub fn kron(&self, other: &CMat) -> CMat {
        let (n, m) = (self.dim, other.dim);
        let mut out = CMat::zeros(n * m);
        for r1 in 0..n {
            for c1 in 0..n {
                let a = self.get(r1, c1);
                if a == ZERO {
                    continue;
                }
                for r2 in 0..m {
                    for c2 in 0..m {
                        out.set(r1 * m + r2, c1 * m + c2, a * other.get(r2, c2));
                    }
                }
            }
        }
        out
    }

    /// U ρ U† for a unitary of the same dimension.
    pub fn conjugate_with(&self, u: &CMat) -> CMat {
        u.matmul(self).matmul(&u.adjoint())
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![ZERO; self.dim];
        for r in 0..self.dim {
            let mut acc = ZERO;
            for c in 0..self.dim {
                acc += self.get(r, c) * v[c];
            }
            out[r] = acc;
        }
        out
    }

    /// [A, B] = AB − BA.
    pub fn commutator(&self, other: &CMat) -> CMat {
        self.matmul(other).sub(&other.matmul(self))
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Returns eigenvalues in ascending order and the matching unitary whose
/// columns are the eigenvectors: `a ≈ v · diag(w) · v†`.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.dim();
    let mut m = a.hermitize();
    let mut v = CMat::identity(n);
    let scale = m.frobenius_norm().max(1e-300);

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                // Zero the (p,q) element with J = [[c, -phase*s], [conj(phase)*s, c]].
                let kappa = (app - aqq) / (2.0 * r);
                let t = kappa.signum() / (kappa.abs() + (kappa * kappa + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let (jc, js) = (C64::new(c, 0.0), C64::new(s, 0.0));
                let jpq = -phase * js;
                let jqp = phase.conj() * js;
                // m <- J† m J, applied as column then row updates.
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, mkp * jc + mkq * jqp);
                    m.set(k, q, mkp * jpq + mkq * jc);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, jc * mpk + jqp.conj() * mqk);
                    m.set(q, k, jpq.conj() * mpk + jc * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * jc + vkq * jqp);
                    v.set(k, q, vkp * jpq + vkq * jc);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let evs: Vec<f64> = (0..n).map(|k| m.get(k, k).re).collect();
    order.sort_by(|&i, &j| evs[i].partial_cmp(&evs[j]).unwrap());
    let w: Vec<f64> = order.iter().map(|&k| evs[k]).collect();
    let mut vs = CMat::zeros(n);
    for (newc, &oldc) in order.iter().enumerate() {
        for r in 0..n {
            vs.set(r, newc, v.get(r, oldc));
        }
    }
    (w, vs)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMat) -> f64 {
    hermitian_eigen(a).0[0]
}

/// exp(z·H) for Hermitian H, via the spectral decomposition.
///
/// With z = −i·t this is the unitary propagator of H.
pub fn expm_hermitian(h: &CMat, z: C64) -> CMat {
    let n = h.dim();
    let (w, v) = hermitian_eigen(h);
    let mut out = CMat::zeros(n);
    for k in 0..n {
        let e = (z * w[k]).exp();
        for r in 0..n {
            let vr = v.get(r, k);
            if vr == ZERO {
                continue;
            }
            for c in 0..n {
                out.add_to(r, c, e * vr * v.get(c, k).conj());
            }
        }
    }
    out
}

/// Solve the dense real system `a · x = b` by Gaussian elimination with
/// partial pivoting. Panics on dimension mismatch; returns `None` if the
/// matrix is numerically singular.
pub fn solve_real(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n);
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            assert_eq!(row.len(), n);
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| aug[i][col].abs().partial_cmp(&aug[j][col].abs()).unwrap())?;
        if aug[piv][col].abs() < 1e-13 {
            return None;
        }
        aug.swap(col, piv);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = aug[row][col] / aug[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..=n {
                aug[row][k] -= f * aug[col][k];
            }
        }
    }
    Some((0..n).map(|k| aug[k][n] / aug[k][k]).collect())
}

/// Least-squares slope of y against x.
pub fn linear_fit_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Slope of log y vs log x; inputs must be positive.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit_slope(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn random_hermitian(dim: usize, seed: u64) -> CMat {
        let st = Stream::new(seed);
        let mut m = CMat::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                let re = st.uniform(&[1, r as u64, c as u64]) - 0.5;
                let im = st.uniform(&[2, r as u64, c as u64]) - 0.5;
                m.set(r, c, C64::new(re, im));
            }
        }
        m.hermitize()
    }

    #[test]
    fn eigen_reconstructs_random_hermitian() {
        for seed in 0..20u64 {
            let dim = 2 + (seed % 3) as usize * 2; // 2, 4, 6
            let a = random_hermitian(dim, seed);
            let (w, v) = hermitian_eigen(&a);
            // v unitary
            let vv = v.adjoint().matmul(&v);
            assert!(vv.sub(&CMat::identity(dim)).max_abs() < 1e-12);
            // a v_k = w_k v_k
            for k in 0..dim {
                let col: Vec<C64> = (0..dim).map(|r| v.get(r, k)).collect();
                let av = a.mul_vec(&col);
                for r in 0..dim {
                    assert!((av[r] - col[r] * w[k]).norm() < 1e-11);
                }
            }
            // ascending order
            for k in 1..dim {
                assert!(w[k] >= w[k - 1]);
            }
        }
    }

    #[test]
    fn eigen_known_two_by_two() {
        // sigma_x has eigenvalues -1, +1
        let sx = CMat::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]);
        let (w, _) = hermitian_eigen(&sx);
        assert!((w[0] + 1.0).abs() < 1e-14);
        assert!((w[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn expm_rotates_as_expected() {
        // exp(-i (pi/2) sigma_x) = -i sigma_x  (up to nothing: cos - i sin X)
        let sx = CMat::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]);
        let u = expm_hermitian(&sx, -I * std::f64::consts::FRAC_PI_2);
        let expect = sx.scale(-I);
        assert!(u.sub(&expect).max_abs() < 1e-13);
        // unitarity
        let uu = u.adjoint().matmul(&u);
        assert!(uu.sub(&CMat::identity(2)).max_abs() < 1e-13);
    }

    #[test]
    fn solve_real_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_real(&a, &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        let singular = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_real(&singular, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let x: Vec<f64> = (1..8).map(|k| 10f64.powi(-k)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.5 * v.powi(3)).collect();
        assert!((log_log_slope(&x, &y) - 3.0).abs() < 1e-10);
    }
}
