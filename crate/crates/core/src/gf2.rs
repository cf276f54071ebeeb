//! Linear algebra over F₂ on packed bit vectors.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, indices: I) -> Self {
        let mut v = Self::zeros(len);
        for i in indices {
            v.flip(i);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Parity of the intersection with `other`.
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// Concatenation `self ‖ other`.
    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.len + other.len);
        for i in self.ones() {
            out.set(i, true);
        }
        for i in other.ones() {
            out.set(self.len + i, true);
        }
        out
    }

    pub fn slice(&self, start: usize, end: usize) -> BitVec {
        BitVec::from_indices(end - start, self.ones().filter(|&i| i >= start && i < end).map(|i| i - start))
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        write!(f, "BitVec({s})")
    }
}

/// Fully reduced row-echelon basis of a subspace of F₂ⁿ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis {
    dim: usize,
    /// Rows sorted by pivot; each pivot column is zero in every other row.
    rows: Vec<(usize, BitVec)>,
}

impl Basis {
    pub fn new(dim: usize) -> Self {
        Basis { dim, rows: Vec::new() }
    }

    pub fn spanned_by<'a, I: IntoIterator<Item = &'a BitVec>>(dim: usize, vectors: I) -> Self {
        let mut b = Self::new(dim);
        for v in vectors {
            b.insert(v.clone());
        }
        b
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn vectors(&self) -> impl Iterator<Item = &BitVec> {
        self.rows.iter().map(|(_, v)| v)
    }

    pub fn reduce(&self, v: &BitVec) -> BitVec {
        let mut v = v.clone();
        for (p, row) in &self.rows {
            if v.get(*p) {
                v.xor_assign(row);
            }
        }
        v
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        self.reduce(v).is_zero()
    }

    /// Add a vector; returns whether the rank grew.
    pub fn insert(&mut self, v: BitVec) -> bool {
        assert_eq!(v.len(), self.dim);
        let v = self.reduce(&v);
        let Some(p) = v.first_one() else {
            return false;
        };
        for (_, row) in self.rows.iter_mut() {
            if row.get(p) {
                row.xor_assign(&v);
            }
        }
        let at = self.rows.partition_point(|(q, _)| *q < p);
        self.rows.insert(at, (p, v));
        true
    }

    pub fn sum(&self, other: &Basis) -> Basis {
        let mut out = self.clone();
        for v in other.vectors() {
            out.insert(v.clone());
        }
        out
    }

    pub fn is_subspace_of(&self, other: &Basis) -> bool {
        self.vectors().all(|v| other.contains(v))
    }

    /// Intersection by the Zassenhaus algorithm on `(u|u)` and `(v|0)` rows.
    pub fn intersect(&self, other: &Basis) -> Basis {
        let n = self.dim;
        let zero = BitVec::zeros(n);
        let mut big = Basis::new(2 * n);
        for u in self.vectors() {
            big.insert(u.concat(u));
        }
        for v in other.vectors() {
            big.insert(v.concat(&zero));
        }
        let mut out = Basis::new(n);
        for (p, row) in &big.rows {
            if *p >= n {
                out.insert(row.slice(n, 2 * n));
            }
        }
        out
    }

    /// All 2^rank elements; intended for small ranks.
    pub fn elements(&self) -> Vec<BitVec> {
        assert!(self.rank() < 28, "refusing to enumerate 2^{} elements", self.rank());
        let mut out = vec![BitVec::zeros(self.dim)];
        for v in self.vectors() {
            let extra: Vec<BitVec> = out.iter().map(|e| e.xor(v)).collect();
            out.extend(extra);
        }
        out
    }
}

impl PartialOrd for Basis {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Basis {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.dim, &self.rows).cmp(&(other.dim, &other.rows))
    }
}
