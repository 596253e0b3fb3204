//! Dense integer matrices and the exact normal forms used by the lattice code.
//!
//! Storage is `i64`; the reductions run in `i128` and convert back with an
//! overflow check, which is ample for the small unimodular data handled here.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    /// Builds a matrix from row vectors. `cols` is needed to describe an
    /// empty row set.
    pub fn from_rows(rows: &[Vec<i64>], cols: usize) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has length {}, expected {cols}",
                    r.len()
                )));
            }
            m.data[i * cols..(i + 1) * cols].copy_from_slice(r);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc: i128 = 0;
                for k in 0..self.cols {
                    acc += self[(i, k)] as i128 * other[(k, j)] as i128;
                }
                out[(i, j)] = narrow(acc, "matrix product")?;
            }
        }
        Ok(out)
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.rows {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} rows",
                v.len(),
                self.rows
            )));
        }
        (0..self.cols)
            .map(|j| {
                let acc: i128 = (0..self.rows)
                    .map(|i| v[i] as i128 * self[(i, j)] as i128)
                    .sum();
                narrow(acc, "row action")
            })
            .collect()
    }

    /// Matrix times column vector.
    pub fn apply(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        (0..self.rows)
            .map(|i| {
                let acc: i128 = (0..self.cols)
                    .map(|j| self[(i, j)] as i128 * v[j] as i128)
                    .sum();
                narrow(acc, "column action")
            })
            .collect()
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] as f64)
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<i64> {
        if !self.is_square() {
            return Err(Error::Dimension("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(1);
        }
        let mut a = self.to_wide();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n - 1 {
            if a[k][k] == 0 {
                match (k + 1..n).find(|&i| a[i][k] != 0) {
                    Some(i) => {
                        a.swap(k, i);
                        sign = -sign;
                    }
                    None => return Ok(0),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
            }
            prev = a[k][k];
        }
        narrow(sign * a[n - 1][n - 1], "determinant")
    }

    fn to_wide(&self) -> Vec<Vec<i128>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|&x| x as i128).collect())
            .collect()
    }

    fn from_wide(a: &[Vec<i128>], cols: usize) -> Result<Self> {
        let mut m = IntMatrix::zeros(a.len(), cols);
        for (i, r) in a.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                m[(i, j)] = narrow(x, "normal form")?;
            }
        }
        Ok(m)
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = i64;
    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.cols + j]
    }
}

fn narrow(x: i128, what: &'static str) -> Result<i64> {
    i64::try_from(x).map_err(|_| Error::Overflow(what))
}

/// Row-style Hermite normal form `H = U·M` with `U` unimodular.
///
/// Nonzero rows of `H` come first, pivots are positive and entries above a
/// pivot are reduced into `[0, pivot)`.
pub struct Hermite {
    pub form: IntMatrix,
    pub transform: IntMatrix,
    pub rank: usize,
}

pub fn hermite_rows(m: &IntMatrix) -> Result<Hermite> {
    let rows = m.rows();
    let cols = m.cols();
    let mut a = m.to_wide();
    let mut u: Vec<Vec<i128>> = (0..rows)
        .map(|i| (0..rows).map(|j| i128::from(i == j)).collect())
        .collect();
    let mut pivot_row = 0;
    let mut pivots = Vec::new();
    for col in 0..cols {
        if pivot_row == rows {
            break;
        }
        loop {
            // smallest nonzero entry in this column at or below pivot_row
            let best = (pivot_row..rows)
                .filter(|&i| a[i][col] != 0)
                .min_by_key(|&i| a[i][col].abs());
            let Some(best) = best else { break };
            a.swap(pivot_row, best);
            u.swap(pivot_row, best);
            let mut clean = true;
            for i in pivot_row + 1..rows {
                if a[i][col] != 0 {
                    let q = Integer::div_floor(&a[i][col], &a[pivot_row][col]);
                    for j in 0..cols {
                        a[i][j] -= q * a[pivot_row][j];
                    }
                    for j in 0..rows {
                        u[i][j] -= q * u[pivot_row][j];
                    }
                    if a[i][col] != 0 {
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
        if a[pivot_row][col] == 0 {
            continue;
        }
        if a[pivot_row][col] < 0 {
            a[pivot_row].iter_mut().for_each(|x| *x = -*x);
            u[pivot_row].iter_mut().for_each(|x| *x = -*x);
        }
        let p = a[pivot_row][col];
        for i in 0..pivot_row {
            let q = Integer::div_floor(&a[i][col], &p);
            if q != 0 {
                for j in 0..cols {
                    a[i][j] -= q * a[pivot_row][j];
                }
                for j in 0..rows {
                    u[i][j] -= q * u[pivot_row][j];
                }
            }
        }
        pivots.push(col);
        pivot_row += 1;
    }
    Ok(Hermite {
        form: IntMatrix::from_wide(&a, cols)?,
        transform: IntMatrix::from_wide(&u, rows)?,
        rank: pivot_row,
    })
}

/// Basis (as rows) of the integer kernel `{x ∈ Z^n : M xᵀ = 0}`.
///
/// The rows are part of a unimodular matrix, so the returned lattice is
/// saturated.
pub fn integer_kernel(m: &IntMatrix) -> Result<IntMatrix> {
    let n = m.cols();
    if m.rows() == 0 {
        return Ok(IntMatrix::identity(n));
    }
    let h = hermite_rows(&m.transpose())?;
    let kernel: Vec<Vec<i64>> = (h.rank..n).map(|i| h.transform.row(i).to_vec()).collect();
    let kernel = IntMatrix::from_rows(&kernel, n)?;
    // canonical form for reproducible output
    if kernel.rows() == 0 {
        return Ok(kernel);
    }
    let hk = hermite_rows(&kernel)?;
    let rows: Vec<Vec<i64>> = (0..hk.rank).map(|i| hk.form.row(i).to_vec()).collect();
    IntMatrix::from_rows(&rows, n)
}

/// Elementary divisors (Smith normal form diagonal) of `m`, nonzero ones only.
pub fn elementary_divisors(m: &IntMatrix) -> Result<Vec<i64>> {
    let rows = m.rows();
    let cols = m.cols();
    let mut a = m.to_wide();
    let mut divisors = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if a[i][j] != 0 && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        a.swap(t, bi);
        for r in a.iter_mut() {
            r.swap(t, bj);
        }
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                if a[i][t] != 0 {
                    let q = Integer::div_floor(&a[i][t], &a[t][t]);
                    for j in t..cols {
                        a[i][j] -= q * a[t][j];
                    }
                    clean &= a[i][t] == 0;
                }
            }
            for j in t + 1..cols {
                if a[t][j] != 0 {
                    let q = Integer::div_floor(&a[t][j], &a[t][t]);
                    for r in a.iter_mut().skip(t) {
                        r[j] -= q * r[t];
                    }
                    clean &= a[t][j] == 0;
                }
            }
            if !clean {
                // move the smallest remaining entry of row/column t to the pivot
                let mut best = (t, t);
                for i in t + 1..rows {
                    if a[i][t] != 0 && a[i][t].abs() < a[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..cols {
                    if a[t][j] != 0 && a[t][j].abs() < a[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                if best.0 != t {
                    a.swap(t, best.0);
                }
                if best.1 != t {
                    for r in a.iter_mut() {
                        r.swap(t, best.1);
                    }
                }
                continue;
            }
            let p = a[t][t];
            let offender = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a[i][j] % p != 0));
            match offender {
                Some(i) => {
                    for j in t..cols {
                        a[t][j] += a[i][j];
                    }
                }
                None => break,
            }
        }
        divisors.push(narrow(a[t][t].abs(), "elementary divisors")?);
        t += 1;
    }
    Ok(divisors)
}

pub type Rational = Ratio<i128>;

/// Exact coordinates `c` with `c · basis = v`, if `v` lies in the rational
/// row span of `basis` (rows assumed linearly independent).
pub fn rational_coordinates(basis: &IntMatrix, v: &[i64]) -> Result<Option<Vec<Rational>>> {
    let k = basis.rows();
    let n = basis.cols();
    if v.len() != n {
        return Err(Error::Dimension(format!(
            "vector length {} against lattice ambient dimension {n}",
            v.len()
        )));
    }
    // augmented system basisᵀ c = v : n equations, k unknowns
    let mut a: Vec<Vec<Rational>> = (0..n)
        .map(|j| {
            let mut row: Vec<Rational> = (0..k).map(|i| Rational::from(basis[(i, j)] as i128)).collect();
            row.push(Rational::from(v[j] as i128));
            row
        })
        .collect();
    let mut r = 0;
    let mut pivot_cols = Vec::new();
    for c in 0..k {
        let Some(p) = (r..n).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= inv;
        }
        for i in 0..n {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c];
                for j in 0..=k {
                    let t = a[r][j] * f;
                    a[i][j] -= t;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    if pivot_cols.len() < k {
        return Err(Error::Rank(format!(
            "basis has rank {} < {k} rows",
            pivot_cols.len()
        )));
    }
    if a[r..].iter().any(|row| !row[k].is_zero()) {
        return Ok(None);
    }
    let mut c = vec![Rational::zero(); k];
    for (i, &pc) in pivot_cols.iter().enumerate() {
        c[pc] = a[i][k];
    }
    Ok(Some(c))
}

/// Integer coordinates of `v` in the lattice spanned by `basis`, or `None`
/// when `v` is not a lattice vector.
pub fn lattice_coordinates(basis: &IntMatrix, v: &[i64]) -> Result<Option<Vec<i64>>> {
    let Some(c) = rational_coordinates(basis, v)? else {
        return Ok(None);
    };
    if c.iter().any(|x| !x.is_integer()) {
        return Ok(None);
    }
    c.iter()
        .map(|x| narrow(x.to_integer(), "lattice coordinates"))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Dense rational matrix used for the representative projections.
#[derive(Clone, Debug, PartialEq)]
pub struct RatMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Rational>,
}

impl RatMatrix {
    pub fn get(&self, i: usize, j: usize) -> Rational {
        self.data[i * self.cols + j]
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![Rational::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = Rational::one();
        }
        Self { rows: n, cols: n, data }
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        let mut data = vec![Rational::zero(); self.rows * other.cols];
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Rational::zero();
                for k in 0..self.cols {
                    acc += self.get(i, k) * other.get(k, j);
                }
                data[i * other.cols + j] = acc;
            }
        }
        RatMatrix {
            rows: self.rows,
            cols: other.cols,
            data,
        }
    }

    pub fn sub(&self, other: &RatMatrix) -> RatMatrix {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Row vector times matrix with an integer input.
    pub fn left_apply(&self, v: &[i64]) -> Vec<Rational> {
        (0..self.cols)
            .map(|j| {
                (0..self.rows).fold(Rational::zero(), |acc, i| {
                    acc + self.get(i, j) * Rational::from(v[i] as i128)
                })
            })
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| {
                        let x = self.get(i, j).abs();
                        *x.numer() as f64 / *x.denom() as f64
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn denominator_lcm(&self) -> i128 {
        self.data.iter().fold(1i128, |acc, x| acc.lcm(x.denom()))
    }

    /// Inverse of a square nonsingular matrix.
    pub fn inverse(&self) -> Result<RatMatrix> {
        let n = self.rows;
        let mut a: Vec<Vec<Rational>> = (0..n)
            .map(|i| {
                let mut r: Vec<Rational> = (0..n).map(|j| self.get(i, j)).collect();
                r.extend((0..n).map(|j| Rational::from(i128::from(i == j))));
                r
            })
            .collect();
        for c in 0..n {
            let p = (c..n)
                .find(|&i| !a[i][c].is_zero())
                .ok_or_else(|| Error::Degenerate("singular rational matrix".into()))?;
            a.swap(c, p);
            let inv = a[c][c].recip();
            for x in a[c].iter_mut() {
                *x *= inv;
            }
            for i in 0..n {
                if i != c && !a[i][c].is_zero() {
                    let f = a[i][c];
                    for j in 0..2 * n {
                        let t = a[c][j] * f;
                        a[i][j] -= t;
                    }
                }
            }
        }
        let data = a.into_iter().flat_map(|r| r.into_iter().skip(n)).collect();
        Ok(RatMatrix { rows: n, cols: n, data })
    }
}

impl From<&IntMatrix> for RatMatrix {
    fn from(m: &IntMatrix) -> Self {
        RatMatrix {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data.iter().map(|&x| Rational::from(x as i128)).collect(),
        }
    }
}

/// Characteristic polynomial coefficients `[1, c_{n-1}, ..., c_0]` of a
/// square integer matrix (Faddeev–LeVerrier, exact).
pub fn characteristic_polynomial(m: &IntMatrix) -> Result<Vec<i128>> {
    if !m.is_square() {
        return Err(Error::Dimension("characteristic polynomial of non-square matrix".into()));
    }
    let n = m.rows();
    let a = m.to_wide();
    let mut coeffs = vec![1i128];
    // M_0 = 0, c_n = 1; M_k = A M_{k-1} + c_{n-k+1} I; c_{n-k} = -tr(A M_k)/k
    let mut mk = vec![vec![0i128; n]; n];
    let mut c_prev = 1i128;
    for k in 1..=n {
        let mut next = vec![vec![0i128; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i128;
                for l in 0..n {
                    acc += a[i][l] * mk[l][j];
                }
                next[i][j] = acc + if i == j { c_prev } else { 0 };
            }
        }
        mk = next;
        let mut tr = 0i128;
        for i in 0..n {
            for l in 0..n {
                tr += a[i][l] * mk[l][i];
            }
        }
        if tr % k as i128 != 0 {
            return Err(Error::Internal("non-integral characteristic coefficient".into()));
        }
        c_prev = -tr / k as i128;
        coeffs.push(c_prev);
    }
    Ok(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        let cols = rows.first().map_or(0, |r| r.len());
        IntMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), cols).unwrap()
    }

    #[test]
    fn determinant_small() {
        assert_eq!(m(&[&[2, 1], &[3, 2]]).determinant().unwrap(), 1);
        assert_eq!(m(&[&[1, 1], &[1, 1]]).determinant().unwrap(), 0);
        assert_eq!(
            m(&[&[0, 2, 1], &[1, 0, 0], &[3, 1, 4]]).determinant().unwrap(),
            -7
        );
    }

    #[test]
    fn hermite_transform_is_consistent() {
        let a = m(&[&[2, 4, 6], &[1, 3, 5], &[0, 2, 4]]);
        let h = hermite_rows(&a).unwrap();
        assert_eq!(h.transform.mul(&a).unwrap(), h.form);
        assert_eq!(h.transform.determinant().unwrap().abs(), 1);
        assert_eq!(h.rank, 2);
    }

    #[test]
    fn kernel_of_symplectic_pairing() {
        // rows e1, e2 in d=3 times J: kernel of the pairing is span{e1,e2,e3,e6}
        let a = m(&[&[0, 0, 0, 1, 0, 0], &[0, 0, 0, 0, 1, 0]]);
        let k = integer_kernel(&a).unwrap();
        assert_eq!(k.rows(), 4);
        for i in 0..4 {
            assert_eq!(a.apply(k.row(i)).unwrap(), vec![0, 0]);
        }
    }

    #[test]
    fn divisors() {
        assert_eq!(
            elementary_divisors(&m(&[&[2, 2, 0, 0], &[0, 4, 0, 0]])).unwrap(),
            vec![2, 4]
        );
        assert_eq!(elementary_divisors(&m(&[&[2, 4], &[6, 8]])).unwrap(), vec![2, 4]);
        assert_eq!(elementary_divisors(&IntMatrix::identity(3)).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn charpoly_cat() {
        assert_eq!(
            characteristic_polynomial(&m(&[&[2, 1], &[1, 1]])).unwrap(),
            vec![1, -3, 1]
        );
    }

    #[test]
    fn coordinates() {
        let b = m(&[&[1, 1, 0, 0], &[0, 2, 0, 0]]);
        assert_eq!(lattice_coordinates(&b, &[1, 3, 0, 0]).unwrap(), Some(vec![1, 1]));
        assert_eq!(lattice_coordinates(&b, &[0, 1, 0, 0]).unwrap(), None);
        assert!(rational_coordinates(&b, &[0, 1, 0, 0]).unwrap().is_some());
        assert_eq!(rational_coordinates(&b, &[0, 0, 1, 0]).unwrap(), None);
    }
}
