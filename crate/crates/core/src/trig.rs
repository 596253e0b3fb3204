//! Trigonometric polynomials on `T^{2d}` with exact coefficient arithmetic.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{omega, SymplecticMatrix};

/// `f(x) = Σ f̂(n) e(n·x)` with finitely many nonzero `f̂(n)`, `n ∈ Z^{2d}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial {
    d: usize,
    terms: BTreeMap<Vec<i64>, Complex64>,
}

impl TrigPolynomial {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, c: Complex64) -> Self {
        Self::monomial(d, vec![0; 2 * d], c).expect("zero frequency has the right length")
    }

    pub fn monomial(d: usize, n: Vec<i64>, c: Complex64) -> Result<Self> {
        let mut f = Self::zero(d);
        f.add_term(n, c)?;
        Ok(f)
    }

    /// `amplitude · cos(2π n·x)`.
    pub fn cosine(d: usize, n: &[i64], amplitude: f64) -> Result<Self> {
        let neg: Vec<i64> = n.iter().map(|x| -x).collect();
        let mut f = Self::monomial(d, n.to_vec(), Complex64::new(amplitude / 2.0, 0.0))?;
        f.add_term(neg, Complex64::new(amplitude / 2.0, 0.0))?;
        Ok(f)
    }

    /// `amplitude · sin(2π n·x)`.
    pub fn sine(d: usize, n: &[i64], amplitude: f64) -> Result<Self> {
        let neg: Vec<i64> = n.iter().map(|x| -x).collect();
        let mut f = Self::monomial(d, n.to_vec(), Complex64::new(0.0, -amplitude / 2.0))?;
        f.add_term(neg, Complex64::new(0.0, amplitude / 2.0))?;
        Ok(f)
    }

    pub fn from_terms<I>(d: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, Complex64)>,
    {
        let mut f = Self::zero(d);
        for (n, c) in terms {
            f.add_term(n, c)?;
        }
        Ok(f)
    }

    /// Adds `c·e_n`, dropping the entry if it cancels exactly.
    pub fn add_term(&mut self, n: Vec<i64>, c: Complex64) -> Result<()> {
        if n.len() != 2 * self.d {
            return Err(Error::Dimension(format!(
                "frequency {n:?} has length {}, expected {}",
                n.len(),
                2 * self.d
            )));
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(n) {
            Entry::Vacant(v) => {
                if c != Complex64::default() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == Complex64::default() {
                    o.remove();
                }
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coefficient(&self, n: &[i64]) -> Complex64 {
        self.terms.get(n).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn max_frequency(&self) -> i64 {
        self.terms
            .keys()
            .flat_map(|n| n.iter().map(|x| x.abs()))
            .max()
            .unwrap_or(0)
    }

    /// True iff `f̂(−n) = conj f̂(n)` within `tol` for every stored `n`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.terms.iter().all(|(n, c)| {
            let neg: Vec<i64> = n.iter().map(|x| -x).collect();
            (self.coefficient(&neg) - c.conj()).norm() <= tol
        })
    }

    pub fn require_real(&self, tol: f64) -> Result<()> {
        if self.is_real(tol) {
            Ok(())
        } else {
            Err(Error::Validation(
                "coefficients violate f̂(−n) = conj f̂(n)".into(),
            ))
        }
    }

    /// Pointwise complex conjugate `f̄`.
    pub fn conj(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(n, c)| (n.iter().map(|x| -x).collect(), c.conj()))
            .collect();
        Self { d: self.d, terms }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.d);
        for (n, c) in &self.terms {
            out.add_term(n.clone(), c * s).expect("same dimension");
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (n, c) in &other.terms {
            out.add_term(n.clone(), *c)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Pointwise product by coefficient convolution.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = Self::zero(self.d);
        for (m, a) in &self.terms {
            for (n, b) in &other.terms {
                let k = m.iter().zip(n).map(|(x, y)| x + y).collect();
                out.add_term(k, a * b)?;
            }
        }
        Ok(out)
    }

    /// `{f, g} = Σ_j ∂_{p_j} f ∂_{q_j} g − ∂_{q_j} f ∂_{p_j} g`.
    pub fn poisson_bracket(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = Self::zero(self.d);
        for (m, a) in &self.terms {
            for (n, b) in &other.terms {
                let w = omega(m, n);
                if w == 0 {
                    continue;
                }
                let k = m.iter().zip(n).map(|(x, y)| x + y).collect();
                out.add_term(k, a * b * (-4.0 * PI * PI * w as f64))?;
            }
        }
        Ok(out)
    }

    /// `f ∘ A`, i.e. `e_n ↦ e_{nA}`.
    pub fn compose_linear(&self, a: &SymplecticMatrix) -> Result<Self> {
        if a.d() != self.d {
            return Err(Error::Dimension(format!(
                "matrix acts on d={}, polynomial has d={}",
                a.d(),
                self.d
            )));
        }
        Self::from_terms(
            self.d,
            self.terms.iter().map(|(n, c)| (a.act_on_frequency(n), *c)),
        )
    }

    pub fn evaluate(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(n, c)| c * Complex64::from_polar(1.0, 2.0 * PI * dot(n, x)))
            .sum()
    }

    /// Real part of the gradient `(∂_{p_1}..∂_{p_d}, ∂_{q_1}..∂_{q_d})`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; 2 * self.d];
        for (n, c) in &self.terms {
            let v = c * Complex64::from_polar(1.0, 2.0 * PI * dot(n, x)) * Complex64::new(0.0, 2.0 * PI);
            for (gi, &ni) in g.iter_mut().zip(n) {
                *gi += ni as f64 * v.re;
            }
        }
        g
    }

    /// Removes coefficients below `threshold` in modulus.
    pub fn truncate(&self, threshold: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(_, c)| c.norm() >= threshold)
            .map(|(n, c)| (n.clone(), *c))
            .collect();
        Self { d: self.d, terms }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(Error::Dimension(format!(
                "polynomials on d={} and d={}",
                self.d, other.d
            )));
        }
        Ok(())
    }
}

fn dot(n: &[i64], x: &[f64]) -> f64 {
    n.iter().zip(x).map(|(&a, b)| a as f64 * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{validate_symplectic, IntMatrix};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn cosine_is_real_and_evaluates() {
        let f = TrigPolynomial::cosine(1, &[1, 0], 1.0).unwrap();
        assert!(f.is_real(0.0));
        assert!((f.evaluate(&[0.25, 0.7]).re).abs() < 1e-15);
        assert!((f.evaluate(&[0.5, 0.1]).re + 1.0).abs() < 1e-15);
        let s = TrigPolynomial::sine(1, &[0, 1], 2.0).unwrap();
        assert!(s.is_real(0.0));
        assert!((s.evaluate(&[0.3, 0.25]).re - 2.0).abs() < 1e-14);
        let bad = TrigPolynomial::monomial(1, vec![1, 0], c(1.0)).unwrap();
        assert!(bad.require_real(1e-12).is_err());
    }

    #[test]
    fn product_matches_pointwise() {
        let f = TrigPolynomial::cosine(1, &[1, 0], 1.0).unwrap();
        let g = TrigPolynomial::cosine(1, &[1, 1], 0.5).unwrap();
        let fg = f.mul(&g).unwrap();
        for x in [[0.1, 0.2], [0.7, 0.33], [0.0, 0.9]] {
            let lhs = fg.evaluate(&x);
            let rhs = f.evaluate(&x) * g.evaluate(&x);
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn cancellation_drops_terms() {
        let f = TrigPolynomial::cosine(1, &[1, 0], 1.0).unwrap();
        assert!(f.sub(&f).unwrap().is_empty());
    }

    #[test]
    fn bracket_of_coordinates() {
        // {sin 2πp, sin 2πq} at the origin equals 4π²
        let f = TrigPolynomial::sine(1, &[1, 0], 1.0).unwrap();
        let g = TrigPolynomial::sine(1, &[0, 1], 1.0).unwrap();
        let b = f.poisson_bracket(&g).unwrap();
        assert!((b.evaluate(&[0.0, 0.0]).re - 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn bracket_matches_gradients() {
        let f = TrigPolynomial::cosine(2, &[1, 0, 2, -1], 0.7)
            .unwrap()
            .add(&TrigPolynomial::sine(2, &[0, 1, 1, 0], 0.3).unwrap())
            .unwrap();
        let g = TrigPolynomial::cosine(2, &[1, 1, 0, 1], 1.1).unwrap();
        let b = f.poisson_bracket(&g).unwrap();
        let x = [0.13, 0.52, 0.77, 0.31];
        let (gf, gg) = (f.gradient(&x), g.gradient(&x));
        let expected = (0..2).map(|j| gf[j] * gg[2 + j] - gf[2 + j] * gg[j]).sum::<f64>();
        assert!((b.evaluate(&x).re - expected).abs() < 1e-10);
    }

    #[test]
    fn composition_with_matrix() {
        let a = validate_symplectic(&IntMatrix::from_rows(&[vec![2, 1], vec![3, 2]], 2).unwrap()).unwrap();
        let f = TrigPolynomial::cosine(1, &[1, 2], 1.0).unwrap();
        let fa = f.compose_linear(&a).unwrap();
        let x = [0.21, 0.64];
        let ax: Vec<f64> = a.act_on_point(&x);
        assert!((fa.evaluate(&x) - f.evaluate(&ax)).norm() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        assert!(TrigPolynomial::monomial(2, vec![1, 0], c(1.0)).is_err());
        let f = TrigPolynomial::constant(1, c(1.0));
        let g = TrigPolynomial::constant(2, c(1.0));
        assert!(f.add(&g).is_err());
    }
}
