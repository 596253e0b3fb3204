//! Exact integer linear algebra for the classical scaffold: symplectic
//! matrices, invariant isotropic lattices, dual bases, fixed points, the
//! quotient action on the invariant subtorus and representative systems for
//! `Z^{2d}/Λ`.
//!
//! Coordinates are ordered `(p_1..p_d, q_1..q_d)`, `J = [[0, I], [-I, 0]]` and
//! `ω(m, n) = m J nᵀ = m_p·n_q − m_q·n_p`. Frequencies act on the right
//! (`n ↦ nA`), points on the left (`x ↦ Ax`).

pub mod intmat;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::Zero;

use crate::error::{Error, Result};
pub use intmat::{IntMatrix, RatMatrix, Rational};

/// `ω(m, n)` for vectors of length `2d`.
pub fn symplectic_form(m: &[i64], n: &[i64], d: usize) -> Result<i64> {
    if m.len() != 2 * d || n.len() != 2 * d {
        return Err(Error::Dimension(format!(
            "symplectic form needs vectors of length {}, got {} and {}",
            2 * d,
            m.len(),
            n.len()
        )));
    }
    Ok(omega(m, n))
}

/// Unchecked `ω`; the caller guarantees equal even lengths.
#[inline]
pub(crate) fn omega(m: &[i64], n: &[i64]) -> i64 {
    let d = m.len() / 2;
    let mut acc = 0i64;
    for j in 0..d {
        acc += m[j] * n[d + j] - m[d + j] * n[j];
    }
    acc
}

/// Row vector times `J`: `(n_p, n_q) ↦ (−n_q, n_p)`.
fn times_j(n: &[i64]) -> Vec<i64> {
    let d = n.len() / 2;
    let mut out = vec![0; 2 * d];
    for j in 0..d {
        out[j] = -n[d + j];
        out[d + j] = n[j];
    }
    out
}

pub fn standard_j(d: usize) -> IntMatrix {
    let mut j = IntMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1;
        j[(d + i, i)] = -1;
    }
    j
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymplecticMatrix {
    d: usize,
    entries: IntMatrix,
}

impl SymplecticMatrix {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.entries
    }

    /// `nA` for a frequency row vector.
    pub fn act_on_frequency(&self, n: &[i64]) -> Vec<i64> {
        self.entries
            .left_apply(n)
            .expect("frequency length checked against validated matrix")
    }

    /// `Ax mod 1` for a point of the torus.
    pub fn act_on_point(&self, x: &[f64]) -> Vec<f64> {
        let n = 2 * self.d;
        (0..n)
            .map(|i| {
                let s: f64 = (0..n).map(|j| self.entries[(i, j)] as f64 * x[j]).sum();
                s.rem_euclid(1.0)
            })
            .collect()
    }

    pub fn inverse(&self) -> SymplecticMatrix {
        // A⁻¹ = −J Aᵀ J
        let j = standard_j(self.d);
        let inv = j
            .mul(&self.entries.transpose())
            .and_then(|m| m.mul(&j))
            .expect("square products of validated size");
        let mut neg = IntMatrix::zeros(2 * self.d, 2 * self.d);
        for r in 0..2 * self.d {
            for c in 0..2 * self.d {
                neg[(r, c)] = -inv[(r, c)];
            }
        }
        SymplecticMatrix {
            d: self.d,
            entries: neg,
        }
    }

    /// Restriction to a set of symplectic coordinate pairs, if the matrix
    /// couples them to nothing else.
    pub fn sub_block(&self, pairs: &[usize]) -> Option<SymplecticMatrix> {
        let d = self.d;
        let idx: Vec<usize> = pairs.iter().copied().chain(pairs.iter().map(|&j| d + j)).collect();
        for &r in &idx {
            for c in 0..2 * d {
                if !idx.contains(&c) && (self.entries[(r, c)] != 0 || self.entries[(c, r)] != 0) {
                    return None;
                }
            }
        }
        let k = pairs.len();
        let mut m = IntMatrix::zeros(2 * k, 2 * k);
        for (a, &r) in idx.iter().enumerate() {
            for (b, &c) in idx.iter().enumerate() {
                m[(a, b)] = self.entries[(r, c)];
            }
        }
        Some(SymplecticMatrix { d: k, entries: m })
    }
}

/// Checks `A J Aᵀ = J` and `Aᵀ J A = J` exactly, plus `det A = ±1`.
pub fn validate_symplectic(a: &IntMatrix) -> Result<SymplecticMatrix> {
    if !a.is_square() || a.rows() % 2 != 0 || a.rows() == 0 {
        return Err(Error::Validation(format!(
            "symplectic matrix must be square of positive even size, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let d = a.rows() / 2;
    let j = standard_j(d);
    let checks = [
        ("A J Aᵀ", a.mul(&j)?.mul(&a.transpose())?),
        ("Aᵀ J A", a.transpose().mul(&j)?.mul(a)?),
    ];
    for (label, prod) in checks {
        for r in 0..2 * d {
            for c in 0..2 * d {
                if prod[(r, c)] != j[(r, c)] {
                    return Err(Error::Validation(format!(
                        "{label} differs from J at entry ({r},{c}): {} != {}",
                        prod[(r, c)],
                        j[(r, c)]
                    )));
                }
            }
        }
    }
    let det = a.determinant()?;
    if det.abs() != 1 {
        return Err(Error::Validation(format!("det A = {det}, expected ±1")));
    }
    Ok(SymplecticMatrix {
        d,
        entries: a.clone(),
    })
}

#[derive(Clone, Debug)]
pub struct HyperbolicityReport {
    pub hyperbolic: bool,
    /// Eigenvalue moduli in ascending order.
    pub moduli: Vec<f64>,
}

pub const HYPERBOLIC_TOL: f64 = 1e-9;

pub fn is_hyperbolic(a: &SymplecticMatrix, tol: f64) -> HyperbolicityReport {
    spectrum_report(a.matrix(), tol)
}

pub(crate) fn spectrum_report(m: &IntMatrix, tol: f64) -> HyperbolicityReport {
    let mut moduli: Vec<f64> = if m.rows() == 0 {
        Vec::new()
    } else {
        m.to_f64().complex_eigenvalues().iter().map(|z| z.norm()).collect()
    };
    moduli.sort_by(f64::total_cmp);
    HyperbolicityReport {
        hyperbolic: moduli.iter().all(|&r| (r - 1.0).abs() > tol),
        moduli,
    }
}

/// Basis (Hermite form) of the saturation `span_Q(rows) ∩ Z^n`.
pub fn saturate_lattice(rows: &IntMatrix) -> Result<IntMatrix> {
    let h = intmat::hermite_rows(rows)?;
    if h.rank < rows.rows() {
        return Err(Error::Rank(format!(
            "{} rows have rational rank {}",
            rows.rows(),
            h.rank
        )));
    }
    if rows.rows() == 0 {
        return Ok(rows.clone());
    }
    // annihilator of the annihilator
    let annihilator = intmat::integer_kernel(rows)?;
    intmat::integer_kernel(&annihilator)
}

pub fn is_saturated(basis: &IntMatrix) -> Result<bool> {
    Ok(intmat::elementary_divisors(basis)?.iter().all(|&e| e == 1)
        && intmat::hermite_rows(basis)?.rank == basis.rows())
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsotropicLattice {
    d: usize,
    basis: IntMatrix,
    /// `n_i A = Σ_j T_ij n_j`.
    certificate: IntMatrix,
}

impl IsotropicLattice {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn certificate(&self) -> &IntMatrix {
        &self.certificate
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        if self.rank() == 0 {
            return v.iter().all(|&x| x == 0);
        }
        matches!(intmat::lattice_coordinates(&self.basis, v), Ok(Some(_)))
    }

    /// Same lattice, different basis. The caller guarantees equality of spans.
    fn with_basis(&self, basis: IntMatrix, a: Option<&SymplecticMatrix>) -> Result<Self> {
        let certificate = match a {
            Some(a) => invariance_certificate(a, &basis)?,
            None => self.certificate.clone(),
        };
        Ok(Self {
            d: self.d,
            basis,
            certificate,
        })
    }
}

fn invariance_certificate(a: &SymplecticMatrix, basis: &IntMatrix) -> Result<IntMatrix> {
    let k = basis.rows();
    let mut t = IntMatrix::zeros(k, k);
    for i in 0..k {
        let image = a.act_on_frequency(basis.row(i));
        match intmat::lattice_coordinates(basis, &image)? {
            Some(c) => {
                for (j, cj) in c.into_iter().enumerate() {
                    t[(i, j)] = cj;
                }
            }
            None => {
                return Err(Error::Validation(format!(
                    "lattice not invariant: {:?}·A = {:?} is not in the lattice",
                    basis.row(i),
                    image
                )))
            }
        }
    }
    Ok(t)
}

pub fn check_invariant_isotropic(a: &SymplecticMatrix, basis: &IntMatrix) -> Result<IsotropicLattice> {
    let d = a.d();
    if basis.cols() != 2 * d {
        return Err(Error::Dimension(format!(
            "lattice rows have length {}, expected {}",
            basis.cols(),
            2 * d
        )));
    }
    if basis.rows() > 0 && !is_saturated(basis)? {
        return Err(Error::Validation(
            "lattice basis is not saturated (elementary divisors ≠ 1)".into(),
        ));
    }
    for i in 0..basis.rows() {
        for j in i + 1..basis.rows() {
            let w = omega(basis.row(i), basis.row(j));
            if w != 0 {
                return Err(Error::Validation(format!(
                    "lattice not isotropic: ω({:?}, {:?}) = {w}",
                    basis.row(i),
                    basis.row(j)
                )));
            }
        }
    }
    let certificate = invariance_certificate(a, basis)?;
    Ok(IsotropicLattice {
        d,
        basis: basis.clone(),
        certificate,
    })
}

/// Λ basis `n_i` together with vectors `m_j` such that `ω(n_i, m_j) = δ_ij`.
#[derive(Clone, Debug)]
pub struct DualSystem {
    pub lattice: IsotropicLattice,
    pub m_basis: IntMatrix,
}

impl DualSystem {
    pub fn n_basis(&self) -> &IntMatrix {
        self.lattice.basis()
    }
}

fn content(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

/// Some `m` with `ω(n, m) = 1` for a primitive `n`.
fn unit_partner(n: &[i64]) -> Result<Vec<i64>> {
    let w = times_j(n);
    // extended gcd over the components of w
    let mut coef = vec![0i64; w.len()];
    let mut g = 0i64;
    for (k, &wk) in w.iter().enumerate() {
        if wk == 0 {
            continue;
        }
        if g == 0 {
            g = wk;
            coef[k] = 1;
            continue;
        }
        let e = g.extended_gcd(&wk);
        for c in coef.iter_mut().take(k) {
            *c *= e.x;
        }
        coef[k] = e.y;
        g = e.gcd;
    }
    match g.abs() {
        1 => Ok(coef.into_iter().map(|c| c * g.signum()).collect()),
        _ => Err(Error::Internal(format!("vector {n:?} is not primitive"))),
    }
}

pub fn symplectic_dual_basis(lattice: &IsotropicLattice) -> Result<DualSystem> {
    let d = lattice.d();
    let mut ns: Vec<Vec<i64>> = Vec::new();
    let mut ms: Vec<Vec<i64>> = Vec::new();
    for l in 0..lattice.rank() {
        let tilde = lattice.basis().row(l);
        let mut n: Vec<i64> = tilde.to_vec();
        for (ni, mi) in ns.iter().zip(&ms) {
            let c = omega(tilde, mi);
            for (x, y) in n.iter_mut().zip(ni) {
                *x -= c * y;
            }
        }
        let g = content(&n);
        if g == 0 {
            return Err(Error::Internal("dependent lattice basis".into()));
        }
        n.iter_mut().for_each(|x| *x /= g);
        let tilde_m = unit_partner(&n)?;
        let mut m = tilde_m.clone();
        for (ni, mi) in ns.iter().zip(&ms) {
            let c = omega(ni, &tilde_m);
            for (x, y) in m.iter_mut().zip(mi) {
                *x -= c * y;
            }
        }
        ns.push(n);
        ms.push(m);
    }
    for (i, ni) in ns.iter().enumerate() {
        for (j, mj) in ms.iter().enumerate() {
            if omega(ni, mj) != i64::from(i == j) {
                return Err(Error::Internal("dual basis construction failed".into()));
            }
        }
    }
    let n_basis = IntMatrix::from_rows(&ns, 2 * d)?;
    let m_basis = IntMatrix::from_rows(&ms, 2 * d)?;
    // every x ∈ Λ has integer coordinates ω(x, m_j), so n_basis spans Λ
    let lattice = lattice.with_basis(n_basis, None)?;
    Ok(DualSystem { lattice, m_basis })
}

/// Dual system with a recomputed invariance certificate for the new basis.
pub fn symplectic_dual_basis_for(a: &SymplecticMatrix, lattice: &IsotropicLattice) -> Result<DualSystem> {
    let dual = symplectic_dual_basis(lattice)?;
    let relabeled = dual.lattice.with_basis(dual.lattice.basis().clone(), Some(a))?;
    Ok(DualSystem {
        lattice: relabeled,
        m_basis: dual.m_basis,
    })
}

/// Saturated basis of `Λ^⊥ = {m : ω(n, m) = 0 ∀ n ∈ Λ}`.
pub fn lambda_perp(lattice: &IsotropicLattice) -> Result<IntMatrix> {
    let d = lattice.d();
    let rows: Vec<Vec<i64>> = (0..lattice.rank()).map(|i| times_j(lattice.basis().row(i))).collect();
    intmat::integer_kernel(&IntMatrix::from_rows(&rows, 2 * d)?)
}

#[derive(Clone, Debug)]
pub struct QuotientSystem {
    /// Rows are a basis of `Ω = W ∩ Z^{2d}`, `W = {x : n·x = 0 ∀ n ∈ V}`.
    pub omega_basis: IntMatrix,
    /// `A ω_j = Σ_i B_ij ω_i`.
    pub b_matrix: IntMatrix,
    pub det_b: i64,
    pub report: HyperbolicityReport,
}

pub fn quotient_action(a: &SymplecticMatrix, lattice: &IsotropicLattice) -> Result<QuotientSystem> {
    let omega_basis = intmat::integer_kernel(lattice.basis())?;
    let r = omega_basis.rows();
    let mut b = IntMatrix::zeros(r, r);
    for j in 0..r {
        let image = a.matrix().apply(omega_basis.row(j))?;
        let c = intmat::lattice_coordinates(&omega_basis, &image)?.ok_or_else(|| {
            Error::Validation(format!("A does not preserve Ω: image {image:?} left the lattice"))
        })?;
        for (i, ci) in c.into_iter().enumerate() {
            b[(i, j)] = ci;
        }
    }
    let det_b = b.determinant()?;
    let report = spectrum_report(&b, HYPERBOLIC_TOL);
    Ok(QuotientSystem {
        omega_basis,
        b_matrix: b,
        det_b,
        report,
    })
}

/// A rational point `numerator / denominator` of the torus fixed by `A`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FixedPoint {
    pub numerator: Vec<i64>,
    pub denominator: i64,
    /// `R = det(A − I)`.
    pub r: i64,
}

impl FixedPoint {
    /// Validates `(A − I)ξ ∈ Z^{2d}`; the representation is reduced to
    /// lowest terms with numerators in `[0, q)`.
    pub fn new(a: &SymplecticMatrix, numerator: &[i64], denominator: i64) -> Result<Self> {
        if denominator <= 0 {
            return Err(Error::Validation("fixed point denominator must be positive".into()));
        }
        if numerator.len() != 2 * a.d() {
            return Err(Error::Dimension(format!(
                "fixed point has {} coordinates, expected {}",
                numerator.len(),
                2 * a.d()
            )));
        }
        let r = a_minus_identity(a).determinant()?;
        let image = a_minus_identity(a).apply(numerator)?;
        if let Some((i, v)) = image.iter().enumerate().find(|(_, v)| *v % denominator != 0) {
            return Err(Error::Validation(format!(
                "ξ is not fixed: coordinate {i} of (A−I)ξ is {v}/{denominator}"
            )));
        }
        let num: Vec<i64> = numerator.iter().map(|x| x.rem_euclid(denominator)).collect();
        let g = num.iter().fold(denominator, |g, &x| g.gcd(&x));
        let point = FixedPoint {
            numerator: num.iter().map(|x| x / g).collect(),
            denominator: denominator / g,
            r,
        };
        if r != 0 && r % point.denominator != 0 {
            return Err(Error::Internal(format!(
                "fixed point denominator {} does not divide R = {r}",
                point.denominator
            )));
        }
        Ok(point)
    }

    pub fn origin(a: &SymplecticMatrix) -> Result<Self> {
        Self::new(a, &vec![0; 2 * a.d()], 1)
    }

    pub fn is_origin(&self) -> bool {
        self.numerator.iter().all(|&x| x == 0)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.numerator
            .iter()
            .map(|&x| x as f64 / self.denominator as f64)
            .collect()
    }

    /// `n·ξ mod 1` as an exact fraction `(k, q)` with `0 ≤ k < q`.
    pub fn pairing(&self, n: &[i64]) -> (i64, i64) {
        let s: i128 = n
            .iter()
            .zip(&self.numerator)
            .map(|(&a, &b)| a as i128 * b as i128)
            .sum();
        let q = self.denominator as i128;
        (s.rem_euclid(q) as i64, self.denominator)
    }

    /// `e_n(ξ) = e(n·ξ)`.
    pub fn character(&self, n: &[i64]) -> Complex64 {
        let (k, q) = self.pairing(n);
        crate::quantum::e_frac(k as i128, q as i128)
    }
}

fn a_minus_identity(a: &SymplecticMatrix) -> IntMatrix {
    a.matrix().sub(&IntMatrix::identity(2 * a.d()))
}

/// All fixed points of `x ↦ Ax` on the torus, by brute force over the
/// `(1/|R|)`-grid.
pub fn fixed_points(a: &SymplecticMatrix) -> Result<Vec<FixedPoint>> {
    let a_minus_i = a_minus_identity(a);
    let r = a_minus_i.determinant()?;
    if r == 0 {
        return Err(Error::Degenerate("det(A − I) = 0".into()));
    }
    let q = r.abs();
    let n = 2 * a.d();
    let total = (q as u128).checked_pow(n as u32).filter(|&t| t <= 1 << 26).ok_or_else(|| {
        Error::CostCap(format!("fixed point grid |R|^{n} with |R| = {q} is too large"))
    })?;
    let mut out = Vec::new();
    let mut digits = vec![0i64; n];
    for _ in 0..total {
        let image = a_minus_i.apply(&digits)?;
        if image.iter().all(|v| v % q == 0) {
            out.push(FixedPoint::new(a, &digits, q)?);
        }
        for dgt in digits.iter_mut() {
            *dgt += 1;
            if *dgt < q {
                break;
            }
            *dgt = 0;
        }
    }
    if out.len() as i64 != q {
        return Err(Error::Internal(format!(
            "found {} fixed points, expected |R| = {q}",
            out.len()
        )));
    }
    Ok(out)
}

/// Representatives for `Z^{2d}/Λ` built from the orthogonal projections onto
/// `V = span_Q Λ` and its complement `U`.
#[derive(Clone, Debug)]
pub struct RepresentativeSystem {
    d: usize,
    pub denominator: i64,
    pub p_v: RatMatrix,
    pub p_u: RatMatrix,
    pub c_sigma: f64,
    lattice: IntMatrix,
    /// `Λ X = I`; `k ↦ (kX)·Λ` is an integral projection onto Λ.
    left_inverse: IntMatrix,
}

impl RepresentativeSystem {
    pub fn new(lattice: &IsotropicLattice) -> Result<Self> {
        let d = lattice.d();
        let n = 2 * d;
        let k = lattice.rank();
        let basis = lattice.basis();
        let (p_v, left_inverse) = if k == 0 {
            let data = vec![Rational::zero(); n * n];
            (
                RatMatrix { rows: n, cols: n, data },
                IntMatrix::zeros(n, 0),
            )
        } else {
            let b = RatMatrix::from(basis);
            let bt = RatMatrix::from(&basis.transpose());
            let gram_inv = b.mul(&bt).inverse()?;
            let p_v = bt.mul(&gram_inv).mul(&b);
            let h = intmat::hermite_rows(&basis.transpose())?;
            let top: Vec<Vec<i64>> = (0..k).map(|i| h.form.row(i).to_vec()).collect();
            if IntMatrix::from_rows(&top, k)? != IntMatrix::identity(k) {
                return Err(Error::Validation("lattice basis is not saturated".into()));
            }
            let rows: Vec<Vec<i64>> = (0..k).map(|i| h.transform.row(i).to_vec()).collect();
            (p_v, IntMatrix::from_rows(&rows, n)?.transpose())
        };
        let p_u = RatMatrix::identity(n).sub(&p_v);
        let denominator = i64::try_from(p_v.denominator_lcm()).map_err(|_| Error::Overflow("projection denominator"))?;
        let c_sigma = (1.0 + p_v.inf_norm())
            * (1.0 + p_u.inf_norm())
            * (1.0 + denominator as f64 * (n as f64).sqrt()).powi(2);
        Ok(Self {
            d,
            denominator,
            p_v,
            p_u,
            c_sigma,
            lattice: basis.clone(),
            left_inverse,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `k = n + m` with `m = P_V(k − r) ∈ Λ`, `n = P_U(k − r) + r`, where
    /// `r ∈ {1..D}^{2d}` and `r ≡ k (mod D)`.
    pub fn decompose(&self, k: &[i64]) -> (Vec<i64>, Vec<i64>) {
        let dd = self.denominator;
        let r: Vec<i64> = k.iter().map(|&x| (x - 1).rem_euclid(dd) + 1).collect();
        let shifted: Vec<i64> = k.iter().zip(&r).map(|(a, b)| a - b).collect();
        let to_int = |v: Vec<Rational>| -> Vec<i64> {
            v.into_iter()
                .map(|x| {
                    debug_assert!(x.is_integer());
                    x.to_integer() as i64
                })
                .collect()
        };
        let m = to_int(self.p_v.left_apply(&shifted));
        let n: Vec<i64> = to_int(self.p_u.left_apply(&shifted))
            .into_iter()
            .zip(&r)
            .map(|(a, b)| a + b)
            .collect();
        (n, m)
    }

    /// `k = n + m` with `m ∈ Λ` and `n` depending only on the class `k + Λ`.
    pub fn canonical_split(&self, k: &[i64]) -> (Vec<i64>, Vec<i64>) {
        let rank = self.lattice.rows();
        if rank == 0 {
            return (k.to_vec(), vec![0; k.len()]);
        }
        let coords = self.left_inverse.left_apply(k).expect("length checked by caller");
        let m = self.lattice.left_apply(&coords).expect("coordinate count matches rank");
        let n = k.iter().zip(&m).map(|(a, b)| a - b).collect();
        (n, m)
    }
}
