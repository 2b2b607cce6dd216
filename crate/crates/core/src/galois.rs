//! Exact arithmetic and linear algebra over a prime field GF(q).
//!
//! Every symbol, channel coefficient and observation in the simulator lives in
//! one of these fields. Matrices are dense and row-major; elimination always
//! picks the first nonzero entry in column scan order as pivot so results are
//! reproducible.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaloisError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands belong to different fields (GF({0}) vs GF({1}))")]
    FieldMismatch(u32, u32),
    #[error("value {value} out of range for GF({q})")]
    OutOfRange { value: u64, q: u32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("linear system does not determine the requested unknowns")]
    Underdetermined,
}

/// A prime field GF(q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Field {
    q: u32,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Field {
    pub fn new(q: u64) -> Result<Self, GaloisError> {
        if q > u64::from(u32::MAX) || !is_prime(q) {
            return Err(GaloisError::NotPrime(q));
        }
        Ok(Field { q: q as u32 })
    }

    pub fn modulus(&self) -> u32 {
        self.q
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            value: 0,
            field: *self,
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            value: 1 % self.q,
            field: *self,
        }
    }

    /// Element with the given canonical value; rejects values `>= q`.
    pub fn element(&self, value: u64) -> Result<FieldElement, GaloisError> {
        if value >= u64::from(self.q) {
            return Err(GaloisError::OutOfRange { value, q: self.q });
        }
        Ok(FieldElement {
            value: value as u32,
            field: *self,
        })
    }

    /// Element congruent to `value` mod q.
    pub fn reduce(&self, value: i64) -> FieldElement {
        let v = value.rem_euclid(i64::from(self.q));
        FieldElement {
            value: v as u32,
            field: *self,
        }
    }

    /// All elements in increasing value order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q).map(move |value| FieldElement {
            value,
            field: *self,
        })
    }

    /// Uniform draw from the nonzero elements.
    pub fn rand_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        let value = rng.gen_range(1..self.q);
        FieldElement {
            value,
            field: *self,
        }
    }

    /// Uniform draw from the whole field.
    pub fn rand_element<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        let value = rng.gen_range(0..self.q);
        FieldElement {
            value,
            field: *self,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

/// An element of a prime field. The canonical value is always in `[0, q)`.
///
/// The operator impls panic when the operands come from different fields;
/// the `checked_*` methods report that as [`GaloisError::FieldMismatch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    field: Field,
}

impl FieldElement {
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &FieldElement) -> Result<u64, GaloisError> {
        if self.field != other.field {
            return Err(GaloisError::FieldMismatch(self.field.q, other.field.q));
        }
        Ok(u64::from(self.field.q))
    }

    fn with(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value as u32,
            field: self.field,
        }
    }

    pub fn checked_add(&self, other: &FieldElement) -> Result<FieldElement, GaloisError> {
        let q = self.same_field(other)?;
        Ok(self.with((u64::from(self.value) + u64::from(other.value)) % q))
    }

    pub fn checked_sub(&self, other: &FieldElement) -> Result<FieldElement, GaloisError> {
        let q = self.same_field(other)?;
        Ok(self.with((u64::from(self.value) + q - u64::from(other.value)) % q))
    }

    pub fn checked_mul(&self, other: &FieldElement) -> Result<FieldElement, GaloisError> {
        let q = self.same_field(other)?;
        Ok(self.with(u64::from(self.value) * u64::from(other.value) % q))
    }

    pub fn checked_div(&self, other: &FieldElement) -> Result<FieldElement, GaloisError> {
        self.same_field(other)?;
        self.checked_mul(&other.inv()?)
    }

    /// Multiplicative inverse via Fermat: a^(q-2).
    pub fn inv(&self) -> Result<FieldElement, GaloisError> {
        if self.is_zero() {
            return Err(GaloisError::DivisionByZero);
        }
        Ok(self.pow(u64::from(self.field.q) - 2))
    }

    pub fn pow(&self, mut exp: u64) -> FieldElement {
        let q = u64::from(self.field.q);
        let mut base = u64::from(self.value);
        let mut acc = 1 % q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % q;
            }
            base = base * base % q;
            exp >>= 1;
        }
        self.with(acc)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

macro_rules! forward_op {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                self.$checked(&rhs)
                    .expect("field element operands from different fields")
            }
        }
    };
}

forward_op!(Add, add, checked_add);
forward_op!(Sub, sub, checked_sub);
forward_op!(Mul, mul, checked_mul);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        let q = self.field.q;
        self.with(u64::from((q - self.value) % q))
    }
}

/// Dense row-major matrix over a prime field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    entries: Vec<FieldElement>,
}

impl FieldMatrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        FieldMatrix {
            field,
            rows,
            cols,
            entries: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    /// Build from integer rows, reducing each entry mod q.
    pub fn from_rows(field: Field, rows: &[Vec<i64>]) -> Result<Self, GaloisError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(GaloisError::DimensionMismatch("ragged rows".into()));
        }
        let entries = rows.iter().flatten().map(|&v| field.reduce(v)).collect();
        Ok(FieldMatrix {
            field,
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub fn from_elements(
        field: Field,
        rows: usize,
        cols: usize,
        entries: Vec<FieldElement>,
    ) -> Result<Self, GaloisError> {
        if entries.len() != rows * cols {
            return Err(GaloisError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|e| e.field != field) {
            return Err(GaloisError::FieldMismatch(field.q, bad.field.q));
        }
        Ok(FieldMatrix {
            field,
            rows,
            cols,
            entries,
        })
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

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        assert_eq!(v.field, self.field, "entry from a different field");
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &FieldMatrix) -> Result<FieldMatrix, GaloisError> {
        if self.field != other.field {
            return Err(GaloisError::FieldMismatch(self.field.q, other.field.q));
        }
        if self.rows != other.rows {
            return Err(GaloisError::DimensionMismatch(format!(
                "hstack of {} and {} rows",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut entries = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            entries.extend_from_slice(self.row(r));
            entries.extend_from_slice(other.row(r));
        }
        Ok(FieldMatrix {
            field: self.field,
            rows: self.rows,
            cols,
            entries,
        })
    }

    pub fn mul_vec(&self, x: &[FieldElement]) -> Result<Vec<FieldElement>, GaloisError> {
        if x.len() != self.cols {
            return Err(GaloisError::DimensionMismatch(format!(
                "{}-column matrix times length-{} vector",
                self.cols,
                x.len()
            )));
        }
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .try_fold(self.field.zero(), |acc, (a, b)| {
                        acc.checked_add(&a.checked_mul(b)?)
                    })
            })
            .collect()
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    fn reduce_rows(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for c in 0..self.cols {
            if pivot_row == self.rows {
                break;
            }
            let Some(p) = (pivot_row..self.rows).find(|&r| !self.get(r, c).is_zero()) else {
                continue;
            };
            self.swap_rows(pivot_row, p);
            let inv = self.get(pivot_row, c).inv().expect("pivot is nonzero");
            for k in 0..self.cols {
                let v = self.get(pivot_row, k) * inv;
                self.set(pivot_row, k, v);
            }
            for r in 0..self.rows {
                if r == pivot_row {
                    continue;
                }
                let factor = self.get(r, c);
                if factor.is_zero() {
                    continue;
                }
                for k in 0..self.cols {
                    let v = self.get(r, k) - factor * self.get(pivot_row, k);
                    self.set(r, k, v);
                }
            }
            pivots.push(c);
            pivot_row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().reduce_rows().len()
    }

    /// Solve `A x = y` requiring the solution to be unique in every coordinate.
    pub fn solve(&self, y: &[FieldElement]) -> Result<Vec<FieldElement>, GaloisError> {
        let all: Vec<usize> = (0..self.cols).collect();
        self.solve_for(y, &all)
    }

    /// Solve `A x = y` and return only the coordinates in `wanted`.
    ///
    /// Succeeds when the system is consistent and every solution agrees on the
    /// wanted coordinates, even if other coordinates stay free.
    pub fn solve_for(
        &self,
        y: &[FieldElement],
        wanted: &[usize],
    ) -> Result<Vec<FieldElement>, GaloisError> {
        if y.len() != self.rows {
            return Err(GaloisError::DimensionMismatch(format!(
                "{} rows but right-hand side of length {}",
                self.rows,
                y.len()
            )));
        }
        if let Some(&c) = wanted.iter().find(|&&c| c >= self.cols) {
            return Err(GaloisError::DimensionMismatch(format!(
                "unknown {c} out of range for {} columns",
                self.cols
            )));
        }
        let rhs = FieldMatrix::from_elements(self.field, self.rows, 1, y.to_vec())?;
        let mut aug = self.hstack(&rhs)?;
        let pivots = aug.reduce_rows();
        if pivots.last() == Some(&self.cols) {
            return Err(GaloisError::Inconsistent);
        }
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        wanted
            .iter()
            .map(|&c| {
                let row = pivots
                    .iter()
                    .position(|&p| p == c)
                    .ok_or(GaloisError::Underdetermined)?;
                // In RREF a pivot variable is pinned iff its row has no free-column entries.
                if free.iter().any(|&f| !aug.get(row, f).is_zero()) {
                    return Err(GaloisError::Underdetermined);
                }
                Ok(aug.get(row, self.cols))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf(q: u64) -> Field {
        Field::new(q).unwrap()
    }

    #[test]
    fn field_construction() {
        assert_eq!(gf(7).modulus(), 7);
        assert_eq!(gf(257).modulus(), 257);
        assert_eq!(Field::new(6), Err(GaloisError::NotPrime(6)));
        assert_eq!(Field::new(1), Err(GaloisError::NotPrime(1)));
        assert_eq!(Field::new(0), Err(GaloisError::NotPrime(0)));
        assert!(Field::new(2).is_ok());
    }

    #[test]
    fn small_arithmetic() {
        let f = gf(7);
        let e = |v| f.element(v).unwrap();
        assert_eq!(e(3) + e(4), e(0));
        assert_eq!(e(3).inv().unwrap(), e(5));
        assert_eq!(-e(3), e(4));
        assert_eq!(-e(0), e(0));
        assert_eq!(e(2).checked_div(&e(4)).unwrap(), e(4));
        for x in 1..7 {
            assert_eq!(e(x).inv().unwrap() * e(x), f.one());
        }
        assert_eq!(e(0).inv(), Err(GaloisError::DivisionByZero));
        assert_eq!(e(1).checked_div(&e(0)), Err(GaloisError::DivisionByZero));
        assert!(f.element(7).is_err());
    }

    #[test]
    fn mixed_fields_rejected() {
        let a = gf(7).one();
        let b = gf(11).one();
        assert_eq!(a.checked_add(&b), Err(GaloisError::FieldMismatch(7, 11)));
        assert_eq!(a.checked_mul(&b), Err(GaloisError::FieldMismatch(7, 11)));
        assert!(a.checked_div(&b).is_err());
    }

    #[test]
    #[should_panic(expected = "different fields")]
    fn mixed_field_operator_panics() {
        let _ = gf(7).one() + gf(5).one();
    }

    #[test]
    fn field_axioms_exhaustive_small_primes() {
        for q in [2u64, 3, 5, 7, 11, 13] {
            let f = gf(q);
            let els: Vec<_> = f.elements().collect();
            for &a in &els {
                assert_eq!(a + f.zero(), a);
                assert_eq!(a * f.one(), a);
                assert_eq!(a + (-a), f.zero());
                if !a.is_zero() {
                    assert_eq!(a * a.inv().unwrap(), f.one());
                }
                for &b in &els {
                    assert_eq!(a + b, b + a);
                    assert_eq!(a * b, b * a);
                    assert_eq!((a - b) + b, a);
                    for &c in &els {
                        assert_eq!((a + b) + c, a + (b + c));
                        assert_eq!((a * b) * c, a * (b * c));
                        assert_eq!(a * (b + c), a * b + a * c);
                    }
                }
            }
        }
    }

    #[test]
    fn rank_examples() {
        let f = gf(7);
        assert_eq!(
            FieldMatrix::from_rows(f, &[vec![1, 2], vec![2, 4]])
                .unwrap()
                .rank(),
            1
        );
        assert_eq!(FieldMatrix::identity(f, 3).rank(), 3);
        assert_eq!(FieldMatrix::zeros(f, 2, 3).rank(), 0);
        assert_eq!(FieldMatrix::zeros(f, 0, 0).rank(), 0);
    }

    #[test]
    fn solve_examples() {
        let f = gf(7);
        let v = |xs: &[u64]| {
            xs.iter()
                .map(|&x| f.element(x).unwrap())
                .collect::<Vec<_>>()
        };
        let id = FieldMatrix::identity(f, 2);
        assert_eq!(id.solve(&v(&[3, 5])).unwrap(), v(&[3, 5]));

        let ones = FieldMatrix::from_rows(f, &[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(ones.solve(&v(&[2, 3])), Err(GaloisError::Inconsistent));
        assert_eq!(ones.solve(&v(&[2, 2])), Err(GaloisError::Underdetermined));

        // 2*3 = 6 and 3*2 = 6 in GF(7)
        let diag = FieldMatrix::from_rows(f, &[vec![2, 0], vec![0, 3]]).unwrap();
        let x = diag.solve(&v(&[6, 6])).unwrap();
        assert_eq!(x, v(&[3, 2]));
        assert_eq!(diag.mul_vec(&x).unwrap(), v(&[6, 6]));

        assert!(matches!(
            diag.solve(&v(&[1])),
            Err(GaloisError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn solve_for_partial_unknowns() {
        let f = gf(7);
        let v = |xs: &[u64]| {
            xs.iter()
                .map(|&x| f.element(x).unwrap())
                .collect::<Vec<_>>()
        };
        // x0 pinned, x1 + x2 = 4 leaves x1, x2 free
        let a = FieldMatrix::from_rows(f, &[vec![1, 0, 0], vec![0, 1, 1]]).unwrap();
        assert_eq!(a.solve_for(&v(&[5, 4]), &[0]).unwrap(), v(&[5]));
        assert_eq!(
            a.solve_for(&v(&[5, 4]), &[1]),
            Err(GaloisError::Underdetermined)
        );
        assert_eq!(a.solve(&v(&[5, 4])), Err(GaloisError::Underdetermined));
    }

    #[test]
    fn rand_nonzero_gf2_is_one() {
        let f = gf(2);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            assert_eq!(f.rand_nonzero(&mut rng), f.one());
        }
    }

    #[test]
    fn rand_nonzero_deterministic() {
        let f = gf(101);
        let a = f.rand_nonzero(&mut ChaCha8Rng::seed_from_u64(5));
        let b = f.rand_nonzero(&mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn rand_nonzero_uniform() {
        let f = gf(101);
        let draws = 100_000u32;
        let mut counts = [0u32; 101];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..draws {
            counts[f.rand_nonzero(&mut rng).value() as usize] += 1;
        }
        assert_eq!(counts[0], 0);
        let p = 1.0 / 100.0;
        let mean = f64::from(draws) * p;
        let sigma = (f64::from(draws) * p * (1.0 - p)).sqrt();
        let mut chi2 = 0.0;
        for &c in &counts[1..] {
            assert!(
                (f64::from(c) - mean).abs() <= 5.0 * sigma,
                "count {c} vs mean {mean}"
            );
            chi2 += (f64::from(c) - mean).powi(2) / mean;
        }
        // 99 degrees of freedom; 99 + 5*sqrt(2*99) is a very loose ceiling
        assert!(chi2 < 99.0 + 5.0 * (198.0f64).sqrt(), "chi2 = {chi2}");
    }
}
