//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest dimension handled by a full SVD in [`operator_norm`].
pub const SVD_LIMIT: usize = 512;
pub const POWER_ITERATIONS: usize = 500;
pub const POWER_TOL: f64 = 1e-12;

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return 0.0;
    }
    if m.iter().all(|z| *z == Complex64::default()) {
        return 0.0;
    }
    if r.max(c) <= SVD_LIMIT {
        return m.clone().singular_values().max();
    }
    if r.min(c) <= SVD_LIMIT {
        // thin case: eigenvalues of the small Gram matrix
        let gram = if r < c { m * m.adjoint() } else { m.adjoint() * m };
        let top = gram.symmetric_eigen().eigenvalues.max();
        return top.max(0.0).sqrt();
    }
    power_norm(m)
}

fn power_norm(m: &CMatrix) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut v = DVector::from_fn(m.ncols(), |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    v /= Complex64::from(v.norm());
    let mut est = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = m.adjoint() * (m * &v);
        let nrm = w.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        v = w / Complex64::from(nrm);
        let next = nrm.sqrt();
        if (next - est).abs() <= POWER_TOL * next {
            return next;
        }
        est = next;
    }
    est
}

/// `‖U*U − I‖` in operator norm.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    operator_norm(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// `‖H − H*‖_max`.
pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    max_abs(&(h - h.adjoint()))
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `exp(i s H)` for Hermitian `H` via its eigendecomposition.
pub fn hermitian_exp_i(h: &CMatrix, s: f64) -> CMatrix {
    let n = h.nrows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    // symmetrize against rounding so the solver sees an exactly Hermitian input
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, s * l));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, p) in phases.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= p;
        }
    }
    scaled * v.adjoint()
}

#[derive(Clone, Debug)]
pub struct UnitaryEigen {
    /// Eigenphases in `[0, 2π)`, ascending.
    pub phases: Vec<f64>,
    /// Columns are orthonormal (Euclidean) eigenvectors in the same order.
    pub vectors: CMatrix,
    /// `max_j ‖U v_j − e^{iθ_j} v_j‖`.
    pub residual: f64,
}

/// Eigendecomposition of a unitary matrix through its complex Schur form.
pub fn unitary_eigen(u: &CMatrix) -> Result<UnitaryEigen> {
    let n = u.nrows();
    if n == 0 {
        return Ok(UnitaryEigen {
            phases: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
            residual: 0.0,
        });
    }
    let schur = u
        .clone()
        .try_schur(1e-15, 100_000)
        .ok_or_else(|| Error::Internal("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let tau = std::f64::consts::TAU;
    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|j| {
            let th = t[(j, j)].arg().rem_euclid(tau);
            (if th >= tau { 0.0 } else { th }, j)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut vectors = CMatrix::zeros(n, n);
    let mut phases = Vec::with_capacity(n);
    for (k, &(th, j)) in order.iter().enumerate() {
        let mut col = q.column(j).into_owned();
        fix_phase(col.as_mut_slice());
        vectors.set_column(k, &col);
        phases.push(th);
    }
    let lambda = CMatrix::from_diagonal(&DVector::from_iterator(
        n,
        phases.iter().map(|&th| Complex64::from_polar(1.0, th)),
    ));
    let residual = (u * &vectors - &vectors * lambda)
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    Ok(UnitaryEigen {
        phases,
        vectors,
        residual,
    })
}

/// Rotates `v` so its largest-modulus entry (first on ties) is real positive.
pub fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = a;
        }
    }
    if best_abs > 0.0 {
        let rot = v[best].conj() / best_abs;
        v.iter_mut().for_each(|z| *z *= rot);
        v[best] = Complex64::new(v[best].re, 0.0);
    }
}

/// Rotates `v` so its first nonzero entry (above `tol`) is real positive.
pub fn fix_phase_first(v: &mut [Complex64], tol: f64) {
    if let Some(z) = v.iter().copied().find(|z| z.norm() > tol) {
        let rot = z.conj() / z.norm();
        v.iter_mut().for_each(|w| *w *= rot);
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Precondition(format!(
            "line fit needs ≥ 2 paired samples, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("line fit with constant abscissa".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(fit_line(&lx, &ly)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(n: usize, m: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, m, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn norm_paths_agree() {
        let m = random_matrix(40, 30, 1);
        let svd = m.clone().singular_values().max();
        assert!((power_norm(&m) - svd).abs() < 1e-8 * svd);
        assert_eq!(operator_norm(&CMatrix::zeros(5, 5)), 0.0);
        assert!((operator_norm(&CMatrix::identity(7, 7)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exp_of_hermitian_is_unitary() {
        let a = random_matrix(12, 12, 2);
        let h = &a + a.adjoint();
        let u = hermitian_exp_i(&h, 0.7);
        assert!(unitarity_defect(&u) < 1e-12);
        // first-order check against the series
        let small = hermitian_exp_i(&h, 1e-6);
        let approx = CMatrix::identity(12, 12) + &h * Complex64::new(0.0, 1e-6);
        assert!(max_abs(&(small - approx)) < 1e-10);
    }

    #[test]
    fn eigen_of_diagonal_unitary() {
        let phases = [0.3, 5.9, 2.0, 0.3];
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            4,
            phases.iter().map(|&t| Complex64::from_polar(1.0, t)),
        ));
        let a = random_matrix(4, 4, 3);
        let q = a.qr().q();
        let u = &q * d * q.adjoint();
        let eig = unitary_eigen(&u).unwrap();
        let mut sorted = phases.to_vec();
        sorted.sort_by(f64::total_cmp);
        for (got, want) in eig.phases.iter().zip(&sorted) {
            assert!((got - want).abs() < 1e-10);
        }
        assert!(eig.residual < 1e-10);
        assert!(unitarity_defect(&eig.vectors) < 1e-10);
    }

    #[test]
    fn line_fit() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let (s, c) = fit_line(&x, &y).unwrap();
        assert!((s + 2.0).abs() < 1e-14 && (c - 3.0).abs() < 1e-14);
        assert!(fit_line(&[1.0], &[1.0]).is_err());
        let xs = [8.0, 16.0, 32.0];
        let ys: Vec<f64> = xs.iter().map(|v: &f64| 5.0 / v).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_fixing() {
        let mut v = vec![Complex64::new(0.0, 0.5), Complex64::new(0.0, -2.0)];
        fix_phase(&mut v);
        assert!((v[1] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        let mut w = vec![Complex64::default(), Complex64::new(-1.0, 0.0), Complex64::new(3.0, 0.0)];
        fix_phase_first(&mut w, 1e-12);
        assert!((w[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
