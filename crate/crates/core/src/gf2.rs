//! Dense linear algebra over GF(2).
//!
//! Vectors are packed 64 bits to a word; bit `i` of a vector lives in word
//! `i / 64` at position `i % 64`. Padding bits above `len` are always zero, so
//! word-level popcounts and comparisons are exact.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

const WORD: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid bit character {0:?}")]
    InvalidBit(char),
}

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; words_for(len)] }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self { len, words: vec![u64::MAX; words_for(len)] };
        v.clear_padding();
        v
    }

    /// Vector of length `len` with ones exactly at `positions`.
    pub fn from_positions(len: usize, positions: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for p in positions {
            v.set(p, true);
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_positions(bits.len(), bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i))
    }

    /// Builds a vector of length `len` from the low bits of `value` (bit `i` of the value is entry `i`).
    pub fn from_u64(len: usize, value: u64) -> Self {
        assert!(len <= WORD);
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = value;
            v.clear_padding();
        }
        v
    }

    fn clear_padding(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn check_len(&self, other: &Self) -> Result<(), Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::DimensionMismatch { expected: self.len, found: other.len });
        }
        Ok(())
    }

    /// Entry-wise (AND) product.
    pub fn entrywise_product(&self, other: &Self) -> Result<Self, Gf2Error> {
        self.check_len(other)?;
        Ok(Self {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        })
    }

    pub fn xor(&self, other: &Self) -> Result<Self, Gf2Error> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    pub fn xor_assign(&mut self, other: &Self) -> Result<(), Gf2Error> {
        self.check_len(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        Ok(())
    }

    /// Weight of the entry-wise product, without allocating.
    pub fn overlap(&self, other: &Self) -> Result<usize, Gf2Error> {
        self.check_len(other)?;
        Ok(self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum())
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &Self) -> Result<bool, Gf2Error> {
        Ok(self.overlap(other)? % 2 == 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Positions of the one-entries in increasing order.
    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let tz = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(wi * WORD + tz)
            })
        })
    }

    /// Copy of the entries `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.len);
        Self::from_positions(len, (0..len).filter(|&i| self.get(start + i)))
    }

    pub fn first_one(&self) -> Option<usize> {
        self.ones_iter().next()
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Gf2Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.chars().collect();
        let mut v = Self::zeros(chars.len());
        for (i, c) in chars.into_iter().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                other => return Err(Gf2Error::InvalidBit(other)),
            }
        }
        Ok(v)
    }
}

/// Hamming weight of `v`.
pub fn weight(v: &BitVector) -> usize {
    v.weight()
}

/// Entry-wise product `u · v`.
pub fn entrywise_product(u: &BitVector, v: &BitVector) -> Result<BitVector, Gf2Error> {
    u.entrywise_product(v)
}

/// `|u · v · w|`, the weight of the triple entry-wise product.
pub fn triple_product_weight(u: &BitVector, v: &BitVector, w: &BitVector) -> Result<usize, Gf2Error> {
    u.check_len(v)?;
    u.check_len(w)?;
    Ok(u.words
        .iter()
        .zip(&v.words)
        .zip(&w.words)
        .map(|((a, b), c)| (a & b & c).count_ones() as usize)
        .sum())
}

/// A dense matrix over GF(2), stored as rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVector>,
}

/// Reduced row echelon form together with its rank and pivot columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Echelon {
    pub matrix: BitMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { cols, rows: vec![BitVector::zeros(cols); rows] }
    }

    pub fn identity(n: usize) -> Self {
        Self { cols: n, rows: (0..n).map(|i| BitVector::from_positions(n, [i])).collect() }
    }

    /// An empty (0-row) matrix with the given column count.
    pub fn empty(cols: usize) -> Self {
        Self { cols, rows: Vec::new() }
    }

    pub fn from_rows(cols: usize, rows: Vec<BitVector>) -> Result<Self, Gf2Error> {
        for r in &rows {
            if r.len() != cols {
                return Err(Gf2Error::DimensionMismatch { expected: cols, found: r.len() });
            }
        }
        Ok(Self { cols, rows })
    }

    /// Parses rows written as strings of `0`/`1`. All rows must have equal length.
    pub fn from_strs(rows: &[&str]) -> Result<Self, Gf2Error> {
        let parsed: Vec<BitVector> = rows.iter().map(|r| r.parse()).collect::<Result<_, _>>()?;
        let cols = parsed.first().map_or(0, BitVector::len);
        Self::from_rows(cols, parsed)
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn col_count(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.rows[i]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value);
    }

    pub fn push_row(&mut self, row: BitVector) -> Result<(), Gf2Error> {
        if row.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch { expected: self.cols, found: row.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, c: usize) -> BitVector {
        BitVector::from_positions(self.rows.len(), (0..self.rows.len()).filter(|&r| self.get(r, c)))
    }

    pub fn transpose(&self) -> Self {
        Self { cols: self.rows.len(), rows: (0..self.cols).map(|c| self.column(c)).collect() }
    }

    /// Stacks `other` below `self`.
    pub fn stack(&self, other: &Self) -> Result<Self, Gf2Error> {
        if self.cols != other.cols {
            return Err(Gf2Error::DimensionMismatch { expected: self.cols, found: other.cols });
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Self { cols: self.cols, rows })
    }

    /// `M · vᵀ`: one parity bit per row.
    pub fn mul_vec(&self, v: &BitVector) -> Result<BitVector, Gf2Error> {
        if v.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch { expected: self.cols, found: v.len() });
        }
        let mut out = BitVector::zeros(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            if r.dot(v)? {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// `coeffs · M`: the row combination selected by `coeffs`.
    pub fn combine_rows(&self, coeffs: &BitVector) -> Result<BitVector, Gf2Error> {
        if coeffs.len() != self.rows.len() {
            return Err(Gf2Error::DimensionMismatch { expected: self.rows.len(), found: coeffs.len() });
        }
        let mut out = BitVector::zeros(self.cols);
        for i in coeffs.ones_iter() {
            out.xor_assign(&self.rows[i])?;
        }
        Ok(out)
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self, Gf2Error> {
        if self.cols != other.rows.len() {
            return Err(Gf2Error::DimensionMismatch { expected: self.cols, found: other.rows.len() });
        }
        let rows = self.rows.iter().map(|r| other.combine_rows(r)).collect::<Result<_, _>>()?;
        Ok(Self { cols: other.cols, rows })
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(BitVector::is_zero)
    }

    /// Reduced row echelon form. Pivots are chosen at the lowest available
    /// column, and among candidate rows the lowest index, so the result is
    /// canonical for a given row space.
    pub fn rref(&self) -> Echelon {
        let mut rows = self.rows.clone();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(found) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, found);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot_row).expect("rows share a length");
                }
            }
            pivots.push(col);
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        Echelon { matrix: Self { cols: self.cols, rows }, rank, pivots }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// The nonzero rows of the reduced echelon form: a canonical basis of the row space.
    pub fn row_basis(&self) -> Self {
        let e = self.rref();
        Self { cols: self.cols, rows: e.matrix.rows.into_iter().take(e.rank).collect() }
    }

    /// Basis (as rows) of `{x : M·xᵀ = 0}`.
    pub fn nullspace(&self) -> Self {
        let e = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !e.pivots.contains(c)).collect();
        let rows = free
            .iter()
            .map(|&f| {
                let mut v = BitVector::zeros(self.cols);
                v.set(f, true);
                for (i, &p) in e.pivots.iter().enumerate() {
                    if e.matrix.get(i, f) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect();
        Self { cols: self.cols, rows }
    }

    /// Some `x` with `M·xᵀ = b`, or `None` when the system is inconsistent.
    pub fn solve(&self, b: &BitVector) -> Result<Option<BitVector>, Gf2Error> {
        if b.len() != self.rows.len() {
            return Err(Gf2Error::DimensionMismatch { expected: self.rows.len(), found: b.len() });
        }
        // Eliminate on the augmented matrix [M | b].
        let mut aug: Vec<(BitVector, bool)> =
            self.rows.iter().cloned().zip(b.iter()).collect();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(found) = (rank..aug.len()).find(|&r| aug[r].0.get(col)) else {
                continue;
            };
            aug.swap(rank, found);
            let (prow, pb) = aug[rank].clone();
            for (r, (row, rb)) in aug.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&prow)?;
                    *rb ^= pb;
                }
            }
            pivots.push(col);
            rank += 1;
        }
        if aug[rank..].iter().any(|(_, rb)| *rb) {
            return Ok(None);
        }
        let mut x = BitVector::zeros(self.cols);
        for (i, &p) in pivots.iter().enumerate() {
            if aug[i].1 {
                x.set(p, true);
            }
        }
        Ok(Some(x))
    }

    /// Whether `v` lies in the row space.
    pub fn spans(&self, v: &BitVector) -> Result<bool, Gf2Error> {
        Ok(self.transpose().solve(v)?.is_some())
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows.len(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}

/// Incremental reducer for membership tests against a fixed row space.
#[derive(Debug, Clone)]
pub struct RowReducer {
    basis: Vec<(usize, BitVector)>,
}

impl RowReducer {
    pub fn new(m: &BitMatrix) -> Self {
        let e = m.rref();
        let basis = e.pivots.iter().zip(e.matrix.rows).map(|(&p, r)| (p, r)).collect();
        Self { basis }
    }

    /// Reduces `v` against the basis; the result is zero iff `v` is in the row space.
    pub fn reduce(&self, v: &BitVector) -> BitVector {
        let mut out = v.clone();
        for (p, row) in &self.basis {
            if out.get(*p) {
                out.xor_assign(row).expect("same length");
            }
        }
        out
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        self.reduce(v).is_zero()
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    // Independent oracle: rank by counting distinct row combinations.
    fn rank_by_span_size(m: &BitMatrix) -> usize {
        let mut span = std::collections::HashSet::new();
        for mask in 0u64..(1u64 << m.row_count()) {
            let coeffs = BitVector::from_u64(m.row_count(), mask);
            span.insert(m.combine_rows(&coeffs).unwrap());
        }
        span.len().trailing_zeros() as usize
    }

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> BitMatrix {
        let rows = (0..rows)
            .map(|_| BitVector::from_bools(&(0..cols).map(|_| rng.gen()).collect::<Vec<_>>()))
            .collect();
        BitMatrix::from_rows(cols, rows).unwrap()
    }

    #[test]
    fn weights() {
        assert_eq!(weight(&bv("0000")), 0);
        assert_eq!(weight(&bv("1111")), 4);
        assert_eq!(weight(&bv("1011010")), 4);
        let long = BitVector::ones(130);
        assert_eq!(long.weight(), 130);
    }

    #[test]
    fn products() {
        assert_eq!(entrywise_product(&bv("1100"), &bv("1010")).unwrap(), bv("1000"));
        let v = bv("1011001");
        assert_eq!(entrywise_product(&v, &BitVector::ones(7)).unwrap(), v);
        assert_eq!(entrywise_product(&v, &BitVector::zeros(7)).unwrap(), BitVector::zeros(7));
        assert!(matches!(
            entrywise_product(&bv("10"), &bv("101")),
            Err(Gf2Error::DimensionMismatch { .. })
        ));
        assert_eq!(triple_product_weight(&bv("1111"), &bv("1111"), &bv("1111")).unwrap(), 4);
        assert_eq!(triple_product_weight(&bv("1100"), &bv("0011"), &bv("1111")).unwrap(), 0);
        assert_eq!(triple_product_weight(&bv("1110"), &bv("0111"), &bv("1011")).unwrap(), 1);
    }

    #[test]
    fn triple_product_matches_bitwise_oracle() {
        // (1110, 0111, 1011): only position 2 is set in all three.
        let (u, v, w) = (bv("1110"), bv("0111"), bv("1011"));
        let oracle = (0..4).filter(|&i| u.get(i) && v.get(i) && w.get(i)).count();
        assert_eq!(triple_product_weight(&u, &v, &w).unwrap(), oracle);
    }

    #[test]
    fn rref_examples() {
        let id = BitMatrix::identity(3);
        let e = id.rref();
        assert_eq!(e.matrix, id);
        assert_eq!(e.rank, 3);
        assert_eq!(e.pivots, vec![0, 1, 2]);
        let dup = BitMatrix::from_strs(&["1010", "1010"]).unwrap();
        assert_eq!(dup.rank(), 1);
    }

    #[test]
    fn rref_rank_matches_span_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 5, 8);
            assert_eq!(m.rank(), rank_by_span_size(&m));
        }
    }

    #[test]
    fn nullspace_examples() {
        assert_eq!(BitMatrix::identity(5).nullspace().row_count(), 0);
        let single = BitMatrix::from_strs(&["11"]).unwrap();
        assert_eq!(single.nullspace().rows(), &[bv("11")]);
        let m = BitMatrix::from_strs(&["1100", "0011"]).unwrap();
        let ns = m.nullspace();
        assert_eq!(ns.row_count(), 2);
        let reducer = RowReducer::new(&ns);
        for x in 0u64..16 {
            let v = BitVector::from_u64(4, x);
            let in_kernel = m.mul_vec(&v).unwrap().is_zero();
            assert_eq!(reducer.contains(&v), in_kernel, "vector {v}");
        }
    }

    #[test]
    fn solve_examples() {
        let b = bv("101");
        assert_eq!(BitMatrix::identity(3).solve(&b).unwrap(), Some(b.clone()));
        assert_eq!(BitMatrix::zeros(3, 3).solve(&b).unwrap(), None);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 6, 9);
            let x0 = BitVector::from_bools(&(0..9).map(|_| rng.gen()).collect::<Vec<_>>());
            let rhs = m.mul_vec(&x0).unwrap();
            let x = m.solve(&rhs).unwrap().expect("consistent by construction");
            assert_eq!(m.mul_vec(&x).unwrap(), rhs);
        }
        assert!(BitMatrix::identity(3).solve(&bv("10")).is_err());
    }

    fn matrix_strategy(max_rows: usize, max_cols: usize) -> impl Strategy<Value = BitMatrix> {
        (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), c), r).prop_map(move |rows| {
                BitMatrix::from_rows(c, rows.iter().map(|b| BitVector::from_bools(b)).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn overlap_parity_is_inner_product(a in proptest::collection::vec(any::<bool>(), 1..100), seed in any::<u64>()) {
            let u = BitVector::from_bools(&a);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = BitVector::from_bools(&(0..a.len()).map(|_| rng.gen()).collect::<Vec<_>>());
            let parity = (0..a.len()).fold(false, |acc, i| acc ^ (u.get(i) & v.get(i)));
            prop_assert_eq!(entrywise_product(&u, &v).unwrap().weight() % 2 == 1, parity);
        }

        #[test]
        fn nullspace_is_annihilated_and_complements_rank(m in matrix_strategy(12, 12)) {
            let ns = m.nullspace();
            for r in ns.rows() {
                prop_assert!(m.mul_vec(r).unwrap().is_zero());
            }
            prop_assert_eq!(m.rank() + ns.rank(), m.col_count());
            prop_assert_eq!(ns.rank(), ns.row_count());
        }

        #[test]
        fn nullspace_matches_exhaustive_enumeration(m in matrix_strategy(12, 12)) {
            let reducer = RowReducer::new(&m.nullspace());
            let n = m.col_count();
            let mut count = 0usize;
            for x in 0u64..(1u64 << n) {
                let v = BitVector::from_u64(n, x);
                let in_kernel = m.mul_vec(&v).unwrap().is_zero();
                count += usize::from(in_kernel);
                prop_assert_eq!(reducer.contains(&v), in_kernel);
            }
            prop_assert_eq!(count, 1usize << (n - m.rank()));
        }

        #[test]
        fn rref_is_idempotent(m in matrix_strategy(10, 16)) {
            let once = m.rref().matrix;
            prop_assert_eq!(once.rref().matrix, once);
        }
    }
}
