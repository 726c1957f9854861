//! Exact linear algebra over the rationals.
//!
//! Rank, null spaces, solves and inverses used for stoichiometric structure
//! are all computed here with `BigRational` arithmetic, never floating point,
//! so conservation laws and the rank-preservation checks of the enlargement
//! operators are exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Dense integer matrix, row major. Used for stoichiometric data where
/// entries are genuinely integral.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i64>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IMat {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        IMat {
            rows: r,
            cols: c,
            data,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_qmat(&self) -> QMat {
        QMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| rat(v)).collect(),
        }
    }

    /// Matrix-vector product with an f64 vector.
    pub fn mul_vec_f64(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) as f64 * v[j]).sum())
            .collect()
    }
}

/// Dense rational matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Rat>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rat::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row);
        }
        QMat {
            rows: r,
            cols: c,
            data,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<Rat> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn transpose(&self) -> QMat {
        let mut t = QMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows);
        let mut out = QMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j).clone() + a.clone() * other.get(k, j).clone();
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = Rat::zero();
                for j in 0..self.cols {
                    if !self.get(i, j).is_zero() && !v[j].is_zero() {
                        acc += self.get(i, j).clone() * v[j].clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| rat_to_f64(self.get(i, j))).collect())
            .collect()
    }

    /// Reduced row echelon form. Returns (rref, pivot column indices).
    pub fn rref(&self) -> (QMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            // find a pivot row
            let mut piv = None;
            for i in r..m.rows {
                if !m.get(i, c).is_zero() {
                    piv = Some(i);
                    break;
                }
            }
            let Some(p) = piv else { continue };
            // swap into place
            if p != r {
                for j in 0..m.cols {
                    let a = m.get(r, j).clone();
                    let b = m.get(p, j).clone();
                    m.set(r, j, b);
                    m.set(p, j, a);
                }
            }
            // scale pivot row to leading 1
            let inv = Rat::one() / m.get(r, c).clone();
            for j in c..m.cols {
                let v = m.get(r, j).clone() * inv.clone();
                m.set(r, j, v);
            }
            // eliminate everywhere else
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let factor = m.get(i, c).clone();
                for j in c..m.cols {
                    let v = m.get(i, j).clone() - factor.clone() * m.get(r, j).clone();
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right null space {v : A v = 0}, one row per basis vector,
    /// returned in reduced echelon form for determinism.
    pub fn right_nullspace(&self) -> QMat {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Vec::new();
        for &fc in &free {
            let mut v = vec![Rat::zero(); self.cols];
            v[fc] = Rat::one();
            for (pi, &pc) in pivots.iter().enumerate() {
                v[pc] = -r.get(pi, fc).clone();
            }
            basis.push(v);
        }
        if basis.is_empty() {
            return QMat::zeros(0, self.cols);
        }
        let (canon, _) = QMat::from_rows(basis).rref();
        canon
    }

    /// Basis of the left null space {w : w^T A = 0}, one row per basis vector,
    /// in reduced echelon form.
    pub fn left_nullspace(&self) -> QMat {
        self.transpose().right_nullspace()
    }

    /// Solve A X = B exactly for square nonsingular A.
    pub fn solve(&self, b: &QMat) -> Option<QMat> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.rows, self.rows);
        let n = self.rows;
        let mut aug = QMat::zeros(n, n + b.cols);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            for j in 0..b.cols {
                aug.set(i, n + j, b.get(i, j).clone());
            }
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        let mut x = QMat::zeros(n, b.cols);
        for i in 0..n {
            for j in 0..b.cols {
                x.set(i, j, r.get(i, n + j).clone());
            }
        }
        Some(x)
    }

    /// Solve the consistent (possibly overdetermined) system A X = B where A
    /// has full column rank. Returns None if inconsistent or rank deficient.
    pub fn solve_full_column_rank(&self, b: &QMat) -> Option<QMat> {
        let at = self.transpose();
        let ata = at.mul(self);
        let atb = at.mul(b);
        let x = ata.solve(&atb)?;
        // verify consistency exactly
        let ax = self.mul(&x);
        if ax == *b {
            Some(x)
        } else {
            None
        }
    }

    pub fn inverse(&self) -> Option<QMat> {
        self.solve(&QMat::identity(self.rows))
    }

    /// Indices of the lexicographically first maximal linearly independent
    /// column set, found by greedy exact elimination.
    pub fn lex_independent_columns(&self) -> Vec<usize> {
        let mut chosen: Vec<usize> = Vec::new();
        let mut current = QMat::zeros(self.rows, 0);
        for j in 0..self.cols {
            let mut cand = QMat::zeros(self.rows, current.cols + 1);
            for i in 0..self.rows {
                for k in 0..current.cols {
                    cand.set(i, k, current.get(i, k).clone());
                }
                cand.set(i, current.cols, self.get(i, j).clone());
            }
            if cand.rank() > current.cols {
                chosen.push(j);
                current = cand;
            }
        }
        chosen
    }

    /// Indices of the lexicographically first row set of size `count` forming
    /// a matrix of rank `count`, or None if the whole matrix has lower rank.
    pub fn lex_independent_rows(&self, count: usize) -> Option<Vec<usize>> {
        let t = self.transpose();
        let cols = t.lex_independent_columns();
        if cols.len() >= count {
            Some(cols[..count].to_vec())
        } else {
            None
        }
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    // exact for the small numerators/denominators seen here; falls back to
    // a quotient of approximations otherwise
    let n = r.numer();
    let d = r.denom();
    match (n.to_string().parse::<f64>(), d.to_string().parse::<f64>()) {
        (Ok(nf), Ok(df)) => nf / df,
        _ => f64::NAN,
    }
}

/// Divide an integer vector by the gcd of its entries (gcd of absolute
/// values; the zero vector is returned unchanged).
pub fn reduce_by_gcd(v: &[i64]) -> Vec<i64> {
    let mut g: i64 = 0;
    for &x in v {
        g = gcd_i64(g, x.abs());
    }
    if g <= 1 {
        return v.to_vec();
    }
    v.iter().map(|&x| x / g).collect()
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// True iff every entry of the rational vector is an integer.
pub fn all_integer(v: &[Rat]) -> bool {
    v.iter()
        .all(|r| r.denom().is_one() || (-r.denom().clone()).is_one())
}

pub fn rat_is_positive(r: &Rat) -> bool {
    r.is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: Vec<Vec<i64>>) -> QMat {
        IMat::from_rows(rows).to_qmat()
    }

    #[test]
    fn rank_and_rref() {
        let a = m(vec![vec![-1, 1], vec![1, -1]]);
        assert_eq!(a.rank(), 1);
        let b = m(vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(b.rank(), 2);
        let c = m(vec![vec![0, 0], vec![0, 0]]);
        assert_eq!(c.rank(), 0);
    }

    #[test]
    fn left_nullspace_of_r0() {
        // Gamma of X1+2X2 -> 3X2, X2 -> X1
        let g = m(vec![vec![-1, 1], vec![1, -1]]);
        let w = g.left_nullspace();
        assert_eq!(w.rows, 1);
        assert_eq!(w.row(0), vec![rat(1), rat(1)]);
    }

    #[test]
    fn nullspace_orthogonality() {
        let g = m(vec![
            vec![-1, 1, 0],
            vec![1, -1, -1],
            vec![0, 0, 1],
            vec![0, 0, -1],
        ]);
        let gt = g.transpose(); // 3 species x 4 reactions? here rows are reactions
        let w = gt.left_nullspace();
        for i in 0..w.rows {
            let prod = gt.transpose().mul_vec(&w.row(i));
            assert!(prod.iter().all(|r| r.is_zero()));
        }
        assert_eq!(gt.rank() + w.rows, gt.rows);
    }

    #[test]
    fn exact_solve_and_inverse() {
        let a = m(vec![vec![2, 1], vec![1, 1]]);
        let b = m(vec![vec![3], vec![2]]);
        let x = a.solve(&b).unwrap();
        assert_eq!(x.get(0, 0), &rat(1));
        assert_eq!(x.get(1, 0), &rat(1));
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), QMat::identity(2));
    }

    #[test]
    fn solve_full_column_rank_consistent() {
        // Gamma0 = (-1, 1)^T, solve Gamma0 * s = (-2, 2)^T -> s = 2
        let a = m(vec![vec![-1], vec![1]]);
        let b = m(vec![vec![-2], vec![2]]);
        let x = a.solve_full_column_rank(&b).unwrap();
        assert_eq!(x.get(0, 0), &rat(2));
        // inconsistent right-hand side
        let b2 = m(vec![vec![1], vec![1]]);
        assert!(a.solve_full_column_rank(&b2).is_none());
    }

    #[test]
    fn lex_columns_picks_first_basis() {
        let a = m(vec![vec![-1, 1, -1], vec![1, -1, 1]]);
        assert_eq!(a.lex_independent_columns(), vec![0]);
        let b = m(vec![vec![0, 1, 1], vec![0, 0, 1]]);
        assert_eq!(b.lex_independent_columns(), vec![1, 2]);
    }

    #[test]
    fn gcd_reduction() {
        assert_eq!(reduce_by_gcd(&[-2, 2, 4]), vec![-1, 1, 2]);
        assert_eq!(reduce_by_gcd(&[0, 0]), vec![0, 0]);
        assert_eq!(reduce_by_gcd(&[3]), vec![1]);
    }
}
