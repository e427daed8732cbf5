//! Arithmetic modulo a prime and dense linear algebra over it.
//!
//! Elements are plain `u64` residues in `0..p`; the [`Field`] value carries
//! the modulus. The default modulus is the Mersenne prime `2^61 - 1`, which
//! gets a shift-and-add reduction; any other prime below `2^62` uses `u128`
//! remainder.

use rand::Rng;

use crate::error::{Error, Result};

pub const MERSENNE_61: u64 = (1 << 61) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Field {
    p: u64,
}

impl Default for Field {
    fn default() -> Self {
        Field { p: MERSENNE_61 }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for small in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(small) {
            return n == small;
        }
    }
    // deterministic Miller-Rabin for 64-bit inputs
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        r
    };
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl Field {
    /// Odd primes below `2^62` are accepted; characteristic 2 is not supported.
    pub fn new(p: u64) -> Result<Self> {
        if !(3..1 << 62).contains(&p) || !is_prime(p) {
            return Err(Error::input(format!(
                "field modulus {p} must be an odd prime below 2^62"
            )));
        }
        Ok(Field { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let z = a as u128 * b as u128;
        if self.p == MERSENNE_61 {
            let lo = (z as u64) & MERSENNE_61;
            let hi = (z >> 61) as u64;
            let s = lo + hi;
            if s >= MERSENNE_61 {
                s - MERSENNE_61
            } else {
                s
            }
        } else {
            (z % self.p as u128) as u64
        }
    }

    pub fn pow(&self, mut b: u64, mut e: u64) -> u64 {
        let mut r = 1;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }

    /// Multiplicative inverse of a nonzero element.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a != 0, "inverse of zero");
        self.pow(a, self.p - 2)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.p)
    }

    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(1..self.p)
    }
}

/// Dense row-major matrix over a prime field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl FieldMatrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        FieldMatrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Entries are reduced modulo `p`.
    pub fn from_rows(field: Field, rows: &[Vec<u64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        FieldMatrix {
            field,
            rows: r,
            cols: c,
            data: rows.iter().flatten().map(|&x| field.reduce(x)).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(field: Field, rows: usize, cols: usize, rng: &mut R) -> Self {
        FieldMatrix {
            field,
            rows,
            cols,
            data: (0..rows * cols).map(|_| field.random(rng)).collect(),
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, x: u64) {
        self.data[r * self.cols + c] = self.field.reduce(x);
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut t = FieldMatrix::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn select_columns(&self, cols: &[usize]) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(self.field, self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out.data[r * cols.len() + j] = self.get(r, c);
            }
        }
        out
    }

    pub fn mul(&self, other: &FieldMatrix) -> FieldMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let f = self.field;
        let mut out = FieldMatrix::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d = f.add(*d, f.mul(a, b));
                }
            }
        }
        out
    }

    /// Rank via Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_echelon().len()
    }

    /// In-place forward elimination; the pivot is the first nonzero entry in
    /// row-major scan order of the remaining rows. Returns pivot columns.
    fn row_echelon(&mut self) -> Vec<usize> {
        let f = self.field;
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            if p != r {
                for j in 0..cols {
                    self.data.swap(p * cols + j, r * cols + j);
                }
            }
            let inv = f.inv(self.get(r, c));
            for j in c..cols {
                let x = self.get(r, j);
                self.data[r * cols + j] = f.mul(x, inv);
            }
            for i in r + 1..self.rows {
                let factor = self.get(i, c);
                if factor == 0 {
                    continue;
                }
                for j in c..cols {
                    let x = f.sub(self.get(i, j), f.mul(factor, self.get(r, j)));
                    self.data[i * cols + j] = x;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    /// Solves `self * X = rhs` for square `self`; `None` when singular.
    pub fn solve(&self, rhs: &FieldMatrix) -> Option<FieldMatrix> {
        assert_eq!(self.rows, self.cols, "solve needs a square matrix");
        assert_eq!(self.rows, rhs.rows, "dimension mismatch");
        let f = self.field;
        let n = self.rows;
        let w = n + rhs.cols;
        // augmented [A | B], eliminated in place
        let mut aug = vec![0u64; n * w];
        for i in 0..n {
            aug[i * w..i * w + n].copy_from_slice(self.row(i));
            aug[i * w + n..(i + 1) * w].copy_from_slice(rhs.row(i));
        }
        for c in 0..n {
            let p = (c..n).find(|&i| aug[i * w + c] != 0)?;
            if p != c {
                for j in 0..w {
                    aug.swap(p * w + j, c * w + j);
                }
            }
            let inv = f.inv(aug[c * w + c]);
            for j in c..w {
                aug[c * w + j] = f.mul(aug[c * w + j], inv);
            }
            let (head, tail) = aug.split_at_mut((c + 1) * w);
            let pivot_row = &head[c * w..];
            for row in tail.chunks_exact_mut(w) {
                let factor = row[c];
                if factor == 0 {
                    continue;
                }
                for j in c..w {
                    if pivot_row[j] != 0 {
                        row[j] = f.sub(row[j], f.mul(factor, pivot_row[j]));
                    }
                }
            }
        }
        // back substitution on the right-hand block
        let k = rhs.cols;
        for c in (0..n).rev() {
            for i in 0..c {
                let factor = aug[i * w + c];
                if factor == 0 {
                    continue;
                }
                aug[i * w + c] = 0;
                for j in 0..k {
                    let src = aug[c * w + n + j];
                    if src != 0 {
                        let dst = i * w + n + j;
                        aug[dst] = f.sub(aug[dst], f.mul(factor, src));
                    }
                }
            }
        }
        let mut out = FieldMatrix::zeros(f, n, k);
        for i in 0..n {
            out.data[i * k..(i + 1) * k].copy_from_slice(&aug[i * w + n..(i + 1) * w]);
        }
        Some(out)
    }
}

/// Incrementally built basis in echelon form; each stored vector is scaled so
/// its pivot entry is 1 and is zero on the pivots of earlier vectors.
#[derive(Clone, Debug)]
pub struct EchelonBasis {
    field: Field,
    dim: usize,
    pivots: Vec<usize>,
    vectors: Vec<Vec<u64>>,
}

impl EchelonBasis {
    pub fn new(field: Field, dim: usize) -> Self {
        EchelonBasis {
            field,
            dim,
            pivots: Vec::new(),
            vectors: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_full(&self) -> bool {
        self.vectors.len() == self.dim
    }

    /// Adds `v` if it is independent of the current span; reports whether it was.
    pub fn insert(&mut self, mut v: Vec<u64>) -> bool {
        assert_eq!(v.len(), self.dim, "vector length mismatch");
        let f = self.field;
        for (&p, b) in self.pivots.iter().zip(&self.vectors) {
            let factor = v[p];
            if factor == 0 {
                continue;
            }
            for (x, &y) in v.iter_mut().zip(b) {
                if y != 0 {
                    *x = f.sub(*x, f.mul(factor, y));
                }
            }
        }
        let Some(p) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = f.inv(v[p]);
        for x in v.iter_mut() {
            *x = f.mul(*x, inv);
        }
        self.pivots.push(p);
        self.vectors.push(v);
        true
    }
}

/// Rank of `m`.
pub fn rank(m: &FieldMatrix) -> usize {
    m.rank()
}

/// Greedy-by-index maximal set of linearly independent columns.
pub fn maximal_independent_columns(m: &FieldMatrix) -> Vec<usize> {
    let mut basis = EchelonBasis::new(m.field(), m.rows());
    let mut chosen = Vec::new();
    for c in 0..m.cols() {
        if basis.is_full() {
            break;
        }
        if basis.insert(m.column(c)) {
            chosen.push(c);
        }
    }
    chosen
}

/// For `m = [I_r | P]` returns `[-P^T | I_{n-r}]`, a representation of the
/// dual matroid on the same column order.
pub fn dual_representation(m: &FieldMatrix) -> Result<FieldMatrix> {
    let f = m.field();
    let (r, n) = (m.rows(), m.cols());
    if r > n {
        return Err(Error::input("more rows than columns: not full row rank"));
    }
    for i in 0..r {
        for j in 0..r {
            if m.get(i, j) != u64::from(i == j) {
                return Err(Error::input(
                    "matrix is not in [I | P] form; row-reduce and drop zero rows first",
                ));
            }
        }
    }
    let k = n - r;
    let mut d = FieldMatrix::zeros(f, k, n);
    for i in 0..k {
        for j in 0..r {
            d.set(i, j, f.neg(m.get(j, r + i)));
        }
        d.set(i, r + i, 1);
    }
    Ok(d)
}

/// `R * m` for a seeded uniformly random `target × rows(m)` matrix `R`.
pub fn random_projection(m: &FieldMatrix, target: usize, seed: u64) -> Result<FieldMatrix> {
    if target > m.rows() {
        return Err(Error::input(format!(
            "projection target {target} exceeds row count {}",
            m.rows()
        )));
    }
    let mut rng = crate::rng::rng(seed);
    let r = FieldMatrix::random(m.field(), target, m.rows(), &mut rng);
    Ok(r.mul(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use rand::Rng;

    fn small() -> Field {
        Field::new(101).unwrap()
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(Field::new(2).is_err());
        assert!(Field::new(100).is_err());
        assert!(Field::new(1 << 62).is_err());
        assert!(Field::new(101).is_ok());
        assert!(Field::new(MERSENNE_61).is_ok());
    }

    #[test]
    fn field_axioms_on_random_triples() {
        let mut rng = crate::rng::rng(5);
        for f in [Field::default(), small(), Field::new(1_000_000_007).unwrap()] {
            for _ in 0..10_000 {
                let (a, b, c) = (f.random(&mut rng), f.random(&mut rng), f.random(&mut rng));
                assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                assert_eq!(f.add(a, f.neg(a)), 0);
                assert_eq!(f.sub(a, b), f.add(a, f.neg(b)));
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a)), 1);
                }
            }
        }
    }

    #[test]
    fn mersenne_mul_matches_wide_remainder() {
        let f = Field::default();
        let mut rng = crate::rng::rng(9);
        for _ in 0..10_000 {
            let (a, b) = (f.random(&mut rng), f.random(&mut rng));
            let wide = ((a as u128 * b as u128) % MERSENNE_61 as u128) as u64;
            assert_eq!(f.mul(a, b), wide);
        }
        assert_eq!(f.mul(MERSENNE_61 - 1, MERSENNE_61 - 1), 1);
    }

    #[test]
    fn identity_and_zero_rank() {
        let f = Field::default();
        assert_eq!(rank(&FieldMatrix::identity(f, 4)), 4);
        assert_eq!(rank(&FieldMatrix::zeros(f, 3, 5)), 0);
    }

    #[test]
    fn vandermonde_three_by_five() {
        let f = Field::default();
        let pts = [2u64, 3, 5, 7, 11];
        let rows: Vec<Vec<u64>> = (0..3).map(|i| pts.iter().map(|&x| f.pow(x, i)).collect()).collect();
        let m = FieldMatrix::from_rows(f, &rows);
        assert_eq!(rank(&m), 3);
        for cols in (0..5).combinations(3) {
            assert_eq!(m.select_columns(&cols).rank(), 3);
        }
    }

    #[test]
    fn rank_of_transpose() {
        let mut rng = crate::rng::rng(1);
        for _ in 0..50 {
            let f = small();
            let r = rng.gen_range(1..7);
            let c = rng.gen_range(1..7);
            let mut m = FieldMatrix::random(f, r, c, &mut rng);
            // inject dependencies now and then
            if r > 1 && rng.gen_bool(0.5) {
                for j in 0..c {
                    let x = m.get(0, j);
                    m.set(1, j, f.mul(x, 3));
                }
            }
            assert_eq!(m.rank(), m.transpose().rank());
        }
    }

    #[test]
    fn independent_columns_of_identity_and_repeats() {
        let f = Field::default();
        assert_eq!(maximal_independent_columns(&FieldMatrix::identity(f, 3)), vec![0, 1, 2]);
        let m = FieldMatrix::from_rows(f, &[vec![1, 1, 0], vec![2, 2, 1]]);
        assert_eq!(maximal_independent_columns(&m), vec![0, 2]);
    }

    #[test]
    fn independent_columns_are_maximal_and_deterministic() {
        let f = Field::default();
        let mut rng = crate::rng::rng(3);
        for _ in 0..20 {
            let m = FieldMatrix::random(f, 6, 10, &mut rng);
            let cols = maximal_independent_columns(&m);
            assert_eq!(cols.len(), m.rank());
            assert_eq!(cols, maximal_independent_columns(&m));
            assert_eq!(m.select_columns(&cols).rank(), cols.len());
            for extra in (0..10).filter(|c| !cols.contains(c)) {
                let mut more = cols.clone();
                more.push(extra);
                assert_eq!(m.select_columns(&more).rank(), cols.len());
            }
        }
    }

    #[test]
    fn dual_of_identity_block() {
        let f = Field::default();
        let m = FieldMatrix::from_rows(f, &[vec![1, 0, 0, 0], vec![0, 1, 0, 0]]);
        let d = dual_representation(&m).unwrap();
        assert_eq!(d, FieldMatrix::from_rows(f, &[vec![0, 0, 1, 0], vec![0, 0, 0, 1]]));
    }

    #[test]
    fn dual_of_u12() {
        let f = Field::default();
        let m = FieldMatrix::from_rows(f, &[vec![1, 1]]);
        let d = dual_representation(&m).unwrap();
        assert_eq!(d, FieldMatrix::from_rows(f, &[vec![f.neg(1), 1]]));
        // U_{1,2} is self-dual: singletons independent, the pair dependent
        for rep in [&m, &d] {
            assert_eq!(rep.select_columns(&[0]).rank(), 1);
            assert_eq!(rep.select_columns(&[1]).rank(), 1);
            assert_eq!(rep.select_columns(&[0, 1]).rank(), 1);
        }
    }

    #[test]
    fn dual_bases_are_complements() {
        let f = Field::default();
        let mut rng = crate::rng::rng(8);
        let p = FieldMatrix::random(f, 3, 4, &mut rng);
        let mut m = FieldMatrix::zeros(f, 3, 7);
        for i in 0..3 {
            m.set(i, i, 1);
            for j in 0..4 {
                m.set(i, 3 + j, p.get(i, j));
            }
        }
        let d = dual_representation(&m).unwrap();
        assert_eq!(d.rank(), 4);
        for basis in (0..7).combinations(3) {
            let rest: Vec<usize> = (0..7).filter(|c| !basis.contains(c)).collect();
            assert_eq!(
                m.select_columns(&basis).rank() == 3,
                d.select_columns(&rest).rank() == 4
            );
        }
    }

    #[test]
    fn dual_requires_standard_form() {
        let f = Field::default();
        let m = FieldMatrix::from_rows(f, &[vec![2, 0, 1], vec![0, 1, 1]]);
        assert!(dual_representation(&m).is_err());
    }

    #[test]
    fn full_projection_keeps_independence() {
        let f = Field::default();
        let mut rng = crate::rng::rng(2);
        let m = FieldMatrix::random(f, 4, 6, &mut rng);
        let pm = random_projection(&m, 4, 77).unwrap();
        for k in 1..=4 {
            for cols in (0..6).combinations(k) {
                assert_eq!(m.select_columns(&cols).rank(), pm.select_columns(&cols).rank());
            }
        }
    }

    #[test]
    fn identity_projected_to_two() {
        let f = Field::default();
        let pm = random_projection(&FieldMatrix::identity(f, 4), 2, 13).unwrap();
        for pair in (0..4).combinations(2) {
            assert_eq!(pm.select_columns(&pair).rank(), 2);
        }
        assert_eq!(pm.rank(), 2);
    }

    #[test]
    fn projection_truncates_rank() {
        let f = Field::default();
        let m = FieldMatrix::from_rows(f, &[vec![1, 0, 0, 1], vec![0, 1, 0, 1], vec![0, 0, 1, 1]]);
        assert_eq!(m.rank(), 3);
        assert_eq!(random_projection(&m, 2, 4).unwrap().rank(), 2);
        assert!(random_projection(&m, 4, 4).is_err());
    }

    #[test]
    fn solve_recovers_inverse() {
        let f = Field::default();
        let mut rng = crate::rng::rng(21);
        let a = FieldMatrix::random(f, 12, 12, &mut rng);
        let inv = a.solve(&FieldMatrix::identity(f, 12)).unwrap();
        assert_eq!(a.mul(&inv), FieldMatrix::identity(f, 12));
        let singular = FieldMatrix::from_rows(f, &[vec![1, 2], vec![2, 4]]);
        assert!(singular.solve(&FieldMatrix::identity(f, 2)).is_none());
    }
}
