//! Compact sets of packet indices.

use std::fmt;

/// A set of packet indices (positions in a [`MediaTrace`](crate::MediaTrace)),
/// stored as a 64-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PacketSet(u64);

impl PacketSet {
    pub const MAX_PACKETS: usize = 64;

    pub const fn empty() -> Self {
        PacketSet(0)
    }

    pub const fn from_bits(bits: u64) -> Self {
        PacketSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// All indices `0..n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= Self::MAX_PACKETS);
        if n == 64 {
            PacketSet(u64::MAX)
        } else {
            PacketSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        PacketSet(1u64 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1u64 << i;
    }

    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1u64 << i);
    }

    pub fn with(self, i: usize) -> Self {
        PacketSet(self.0 | 1u64 << i)
    }

    pub fn without(self, i: usize) -> Self {
        PacketSet(self.0 & !(1u64 << i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        PacketSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        PacketSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        PacketSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> Iter {
        Iter(self.0)
    }

    /// Every subset of `self`, including the empty set and `self`.
    pub fn subsets(self) -> Subsets {
        Subsets {
            mask: self.0,
            next: Some(0),
        }
    }
}

impl FromIterator<usize> for PacketSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = PacketSet::empty();
        for i in iter {
            set.insert(i);
        }
        set
    }
}

impl fmt::Debug for PacketSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct Iter(u64);

impl Iterator for Iter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Iter {}

/// Submask enumeration in increasing numeric order.
pub struct Subsets {
    mask: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = PacketSet;

    fn next(&mut self) -> Option<PacketSet> {
        let cur = self.next?;
        self.next = if cur == self.mask {
            None
        } else {
            Some((cur.wrapping_sub(self.mask)) & self.mask)
        };
        Some(PacketSet(cur))
    }
}

impl serde::Serialize for PacketSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}
