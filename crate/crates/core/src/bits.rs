//! Fixed-width bitsets used as cube-complex orientations.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(b: &[bool]) -> Self {
        let mut out = Bits::zeros(b.len());
        for (i, &x) in b.iter().enumerate() {
            if x {
                out.set(i, true);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        if v {
            self.words[i >> 6] |= 1 << (i & 63);
        } else {
            self.words[i >> 6] &= !(1 << (i & 63));
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i >> 6] ^= 1 << (i & 63);
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut b = self.clone();
        b.flip(i);
        b
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn hamming(&self, other: &Bits) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn intersects(&self, other: &Bits) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn and_not_count(&self, other: &Bits) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as usize)
            .sum()
    }

    pub fn and_count(&self, other: &Bits) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn complement(&self) -> Bits {
        let mut b = Bits {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        b.trim();
        b
    }

    fn trim(&mut self) {
        let r = self.len & 63;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// Coordinatewise majority.
    pub fn majority(a: &Bits, b: &Bits, c: &Bits) -> Bits {
        Bits {
            words: a
                .words
                .iter()
                .zip(&b.words)
                .zip(&c.words)
                .map(|((x, y), z)| (x & y) | (y & z) | (x & z))
                .collect(),
            len: a.len,
        }
    }

    /// Keep only the listed positions, in order.
    pub fn select(&self, keep: &[usize]) -> Bits {
        let mut out = Bits::zeros(keep.len());
        for (j, &i) in keep.iter().enumerate() {
            if self.get(i) {
                out.set(j, true);
            }
        }
        out
    }
}
