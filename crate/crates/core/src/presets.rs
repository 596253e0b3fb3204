//! Reference models used by the tests, the acceptance suite and the shipped
//! configuration files.

use num_complex::Complex64;

use crate::classical::SubmanifoldSpec;
use crate::error::Result;
use crate::lattice::{check_invariant_isotropic, validate_symplectic, FixedPoint, IntMatrix, SymplecticMatrix};
use crate::trig::TrigPolynomial;

pub const CAT: [[i64; 2]; 2] = [[2, 1], [3, 2]];
pub const EPSILON: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct Model {
    pub a: SymplecticMatrix,
    pub h: TrigPolynomial,
    /// Absent when the lattice is trivial.
    pub spec: Option<SubmanifoldSpec>,
    pub observables: Vec<(String, TrigPolynomial)>,
}

fn unit(d: usize, hot: &[usize]) -> Vec<i64> {
    let mut v = vec![0; 2 * d];
    for &i in hot {
        v[i] += 1;
    }
    v
}

/// `e_{a} − e_{b}`, which vanishes on `X_0` when `a − b ∈ Λ`.
fn difference(d: usize, a: &[usize], b: &[usize]) -> Result<TrigPolynomial> {
    TrigPolynomial::from_terms(
        d,
        [
            (unit(d, a), Complex64::new(1.0, 0.0)),
            (unit(d, b), Complex64::new(-1.0, 0.0)),
        ],
    )
}

/// `d = 1` cat map with `H = κ cos 2πq`.
pub fn model_a(kappa: f64) -> Result<Model> {
    let a = validate_symplectic(&IntMatrix::from_rows(&[CAT[0].to_vec(), CAT[1].to_vec()], 2)?)?;
    let h = TrigPolynomial::cosine(1, &[0, 1], kappa)?;
    let observables = vec![
        ("cos_q".to_string(), TrigPolynomial::cosine(1, &[0, 1], 1.0)?),
        ("cos_p".to_string(), TrigPolynomial::cosine(1, &[1, 0], 1.0)?),
        ("cos_p_plus_q".to_string(), TrigPolynomial::cosine(1, &[1, 1], 1.0)?),
    ];
    Ok(Model {
        a,
        h,
        spec: None,
        observables,
    })
}

/// `diag(P, P^{−T})` rows on `(p₁, p₂, q₁, q₂)`.
fn block_rows() -> Vec<Vec<i64>> {
    vec![
        vec![2, 1, 0, 0],
        vec![1, 1, 0, 0],
        vec![0, 0, 1, -1],
        vec![0, 0, -1, 2],
    ]
}

/// `d = 2` block map, `Λ = span{e₁, e₂}`, `ξ = 0`, momentum-only `H`.
pub fn model_b(epsilon: f64) -> Result<Model> {
    let a = validate_symplectic(&IntMatrix::from_rows(&block_rows(), 4)?)?;
    let lattice = check_invariant_isotropic(&a, &IntMatrix::from_rows(&[unit(2, &[0]), unit(2, &[1])], 4)?)?;
    let xi = FixedPoint::origin(&a)?;
    let spec = SubmanifoldSpec::new(lattice, xi)?;
    let mut h = TrigPolynomial::cosine(2, &unit(2, &[0]), epsilon)?;
    h = h.add(&TrigPolynomial::cosine(2, &unit(2, &[0, 1]), 0.5 * epsilon)?)?;
    let observables = vec![
        ("cos_q1".to_string(), TrigPolynomial::cosine(2, &unit(2, &[2]), 1.0)?),
        ("cos_p1".to_string(), TrigPolynomial::cosine(2, &unit(2, &[0]), 1.0)?),
    ];
    Ok(Model {
        a,
        h,
        spec: Some(spec),
        observables,
    })
}

/// `d = 3`: the block map on pairs 1–2 and the cat map on pair 3, with
/// `H = ε (cos 2πq₃ + ½ cos 2π(p₁ + p₃))`.
pub fn model_c(epsilon: f64) -> Result<Model> {
    let d = 3;
    let b = block_rows();
    let mut rows = vec![vec![0i64; 6]; 6];
    // block indices (p1, p2, q1, q2) -> (0, 1, 3, 4); cat on (2, 5)
    let map = [0usize, 1, 3, 4];
    for (i, &ri) in map.iter().enumerate() {
        for (j, &cj) in map.iter().enumerate() {
            rows[ri][cj] = b[i][j];
        }
    }
    rows[2][2] = CAT[0][0];
    rows[2][5] = CAT[0][1];
    rows[5][2] = CAT[1][0];
    rows[5][5] = CAT[1][1];
    let a = validate_symplectic(&IntMatrix::from_rows(&rows, 6)?)?;
    let lattice = check_invariant_isotropic(&a, &IntMatrix::from_rows(&[unit(d, &[0]), unit(d, &[1])], 6)?)?;
    let xi = FixedPoint::origin(&a)?;
    let spec = SubmanifoldSpec::new(lattice, xi)?;
    let h = TrigPolynomial::cosine(d, &unit(d, &[5]), epsilon)?
        .add(&TrigPolynomial::cosine(d, &unit(d, &[0, 2]), 0.5 * epsilon)?)?;
    let observables = vec![
        ("cos_q3".to_string(), TrigPolynomial::cosine(d, &unit(d, &[5]), 1.0)?),
        ("cos_p3".to_string(), TrigPolynomial::cosine(d, &unit(d, &[2]), 1.0)?),
        ("cos_p3_plus_q3".to_string(), TrigPolynomial::cosine(d, &unit(d, &[2, 5]), 1.0)?),
    ];
    Ok(Model {
        a,
        h,
        spec: Some(spec),
        observables,
    })
}

/// Observables on `T^6` vanishing on `X_0` of [`model_c`].
pub fn vanishing_family_c() -> Result<Vec<(String, TrigPolynomial)>> {
    let d = 3;
    Ok(vec![
        ("p1q1_minus_q1".to_string(), difference(d, &[0, 3], &[3])?),
        ("p1q3_minus_q3".to_string(), difference(d, &[0, 5], &[5])?),
        (
            "p2q1q2_minus_q1q2".to_string(),
            difference(d, &[1, 3, 4], &[3, 4])?.add(&difference(d, &[0, 1, 4], &[4])?)?,
        ),
    ])
}
