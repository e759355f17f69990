//! Excitation-number subspaces of the cavity + N emitter Hilbert space.

use std::cmp::{Ordering, Reverse};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest excitation level needed for two-photon transport.
pub const MAX_LEVEL: usize = 2;

/// A product state `|n⟩ ⊗ |emitters in `excited` up⟩`; emitter indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisState {
    pub photons: usize,
    pub excited: Vec<usize>,
}

impl BasisState {
    pub fn excitations(&self) -> usize {
        self.photons + self.excited.len()
    }

    fn key(&self) -> (Reverse<usize>, &[usize]) {
        (Reverse(self.photons), &self.excited)
    }
}

impl Ord for BasisState {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for BasisState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonically ordered basis of the level-`m` subspace: photon number
/// descending, then excited sets in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcitationBasis {
    pub level: usize,
    pub emitters: usize,
    pub states: Vec<BasisState>,
}

impl ExcitationBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, s: &BasisState) -> Option<usize> {
        self.states.binary_search(s).ok()
    }
}

/// Dimension of the level-`m` subspace with `n` emitters, `Σ_k C(n, k)` over `k ≤ m`.
pub fn subspace_dim(m: usize, n: usize) -> usize {
    (0..=m.min(n)).map(|k| binomial(n, k)).sum()
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

pub fn build_basis(m: usize, n: usize) -> Result<ExcitationBasis> {
    if m > MAX_LEVEL {
        return Err(Error::UnsupportedLevel(m));
    }
    let mut states = Vec::with_capacity(subspace_dim(m, n));
    for photons in (0..=m).rev() {
        let k = m - photons;
        if k > n {
            continue;
        }
        for_each_subset(n, k, |set| states.push(BasisState { photons, excited: set.to_vec() }));
    }
    Ok(ExcitationBasis { level: m, emitters: n, states })
}

/// Visits the `k`-subsets of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Advance the rightmost index that still has room.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
