//! Exact algebra on the symmetric group S_p.
//!
//! Permutations are stored in one-line notation with 1-based images:
//! position `j` (0-based in the slice) holds the image of item `j + 1`.
//! Composition follows `(tau ∘ sigma)(j) = tau(sigma(j))` everywhere in the crate.
//!
//! [`PermIndex`] is the 1-based position of a permutation in the lexicographic
//! listing of one-line words, so index 1 is the identity and index `p!` is the
//! full reversal.

use std::fmt;

use crate::error::PermError;

/// Largest supported number of items.
pub const MAX_ITEMS: usize = 8;

/// Largest `p` for which the full `p! × p!` composition table is materialised.
/// Above this, compositions are computed on demand from the unranked words.
pub const MAX_TABULATED_ITEMS: usize = 6;

/// `n!` for `n <= 20`.
pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// 1-based lexicographic index of a permutation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PermIndex(usize);

impl PermIndex {
    pub const IDENTITY: PermIndex = PermIndex(1);

    /// Wraps a 1-based index. Range against `p!` is checked by the consumers
    /// that know `p`.
    pub fn new(k: usize) -> Result<Self, PermError> {
        if k == 0 {
            return Err(PermError::IndexOutOfRange { index: k, size: 0 });
        }
        Ok(PermIndex(k))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub(crate) fn from_zero_based(i: usize) -> Self {
        PermIndex(i + 1)
    }

    pub(crate) fn zero_based(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for PermIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A permutation of `{1, …, p}` in one-line notation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<u8>,
}

impl Permutation {
    /// Validates that `images` is a bijection of `{1, …, p}`.
    pub fn new(images: Vec<u8>) -> Result<Self, PermError> {
        let p = images.len();
        if p == 0 || p > MAX_ITEMS {
            return Err(PermError::UnsupportedSize(p));
        }
        let mut seen = [false; MAX_ITEMS + 1];
        for &v in &images {
            let v = v as usize;
            if v == 0 || v > p || seen[v] {
                return Err(PermError::NotABijection(images.clone()));
            }
            seen[v] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(p: usize) -> Self {
        Permutation {
            images: (1..=p as u8).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[u8] {
        &self.images
    }

    /// Image of item `j` (1-based).
    pub fn apply(&self, j: usize) -> usize {
        self.images[j - 1] as usize
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(j, &v)| v as usize == j + 1)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u8; self.images.len()];
        for (j, &v) in self.images.iter().enumerate() {
            inv[v as usize - 1] = (j + 1) as u8;
        }
        Permutation { images: inv }
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.images.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}

/// The `k`-th permutation of `{1, …, p}` in lexicographic order (factorial
/// number system).
pub fn unrank(k: PermIndex, p: usize) -> Result<Permutation, PermError> {
    if p == 0 || p > MAX_ITEMS {
        return Err(PermError::UnsupportedSize(p));
    }
    let size = factorial(p);
    if k.0 > size {
        return Err(PermError::IndexOutOfRange { index: k.0, size });
    }
    let mut rest = k.0 - 1;
    let mut pool: Vec<u8> = (1..=p as u8).collect();
    let mut images = Vec::with_capacity(p);
    for pos in (0..p).rev() {
        let block = factorial(pos);
        let digit = rest / block;
        rest %= block;
        images.push(pool.remove(digit));
    }
    Ok(Permutation { images })
}

/// Lexicographic index of `sigma`; inverse of [`unrank`].
pub fn rank(sigma: &Permutation) -> PermIndex {
    let p = sigma.len();
    let mut index = 0;
    for (pos, &v) in sigma.images.iter().enumerate() {
        let smaller_later = sigma.images[pos + 1..].iter().filter(|&&w| w < v).count();
        index += smaller_later * factorial(p - 1 - pos);
    }
    PermIndex(index + 1)
}

/// `tau ∘ sigma`, i.e. `j ↦ tau(sigma(j))`.
pub fn compose(tau: &Permutation, sigma: &Permutation) -> Result<Permutation, PermError> {
    if tau.len() != sigma.len() {
        return Err(PermError::SizeMismatch(tau.len(), sigma.len()));
    }
    let images = sigma
        .images
        .iter()
        .map(|&s| tau.images[s as usize - 1])
        .collect();
    Ok(Permutation { images })
}

/// Number of disjoint cycles, fixed points counted as 1-cycles.
pub fn cycle_count(sigma: &Permutation) -> usize {
    let p = sigma.len();
    let mut visited = [false; MAX_ITEMS];
    let mut cycles = 0;
    for start in 0..p {
        if visited[start] {
            continue;
        }
        cycles += 1;
        let mut j = start;
        while !visited[j] {
            visited[j] = true;
            j = sigma.images[j] as usize - 1;
        }
    }
    cycles
}

/// Cayley distance `p - |tau ∘ alpha⁻¹|`: the minimum number of transpositions
/// turning one ranking into the other.
pub fn cayley_distance(tau: &Permutation, alpha: &Permutation) -> Result<usize, PermError> {
    let rel = compose(tau, &alpha.inverse())?;
    Ok(tau.len() - cycle_count(&rel))
}

/// Precomputed lookup tables over `S_p` shared by every sampler and oracle.
///
/// Immutable after construction.
#[derive(Clone, Debug)]
pub struct GroupTables {
    p: usize,
    size: usize,
    perms: Vec<Permutation>,
    compose: Option<Vec<u32>>,
    inverse: Vec<u32>,
    cycles: Vec<u8>,
}

impl GroupTables {
    /// Builds the tables for `p` items. The composition table is stored in
    /// full for `p <= MAX_TABULATED_ITEMS`, otherwise computed on demand.
    pub fn build(p: usize) -> Result<Self, PermError> {
        if p == 0 || p > MAX_ITEMS {
            return Err(PermError::UnsupportedSize(p));
        }
        let size = factorial(p);
        let perms: Vec<Permutation> = (0..size)
            .map(|i| unrank(PermIndex::from_zero_based(i), p))
            .collect::<Result<_, _>>()?;
        let inverse = perms
            .iter()
            .map(|s| rank(&s.inverse()).zero_based() as u32)
            .collect();
        let cycles = perms.iter().map(|s| cycle_count(s) as u8).collect();
        let compose = if p <= MAX_TABULATED_ITEMS {
            let mut table = vec![0u32; size * size];
            for (k, tau) in perms.iter().enumerate() {
                for (r, sigma) in perms.iter().enumerate() {
                    let c = compose(tau, sigma)?;
                    table[k * size + r] = rank(&c).zero_based() as u32;
                }
            }
            Some(table)
        } else {
            None
        };
        Ok(GroupTables {
            p,
            size,
            perms,
            compose,
            inverse,
            cycles,
        })
    }

    pub fn items(&self) -> usize {
        self.p
    }

    /// `p!`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_tabulated(&self) -> bool {
        self.compose.is_some()
    }

    pub fn perm(&self, k: PermIndex) -> &Permutation {
        &self.perms[k.zero_based()]
    }

    pub fn indices(&self) -> impl Iterator<Item = PermIndex> + '_ {
        (0..self.size).map(PermIndex::from_zero_based)
    }

    pub fn check(&self, k: PermIndex) -> Result<PermIndex, PermError> {
        if k.0 == 0 || k.0 > self.size {
            Err(PermError::IndexOutOfRange {
                index: k.0,
                size: self.size,
            })
        } else {
            Ok(k)
        }
    }

    /// Index of `ζ_k ∘ ζ_r`.
    pub fn compose_index(&self, k: PermIndex, r: PermIndex) -> PermIndex {
        PermIndex::from_zero_based(self.compose0(k.zero_based(), r.zero_based()))
    }

    pub fn inverse_index(&self, k: PermIndex) -> PermIndex {
        PermIndex::from_zero_based(self.inverse[k.zero_based()] as usize)
    }

    /// `|ζ_k|`, the cycle count of the `k`-th permutation.
    pub fn cycles(&self, k: PermIndex) -> usize {
        self.cycles[k.zero_based()] as usize
    }

    // Zero-based accessors for the hot loops inside the crate.

    pub(crate) fn compose0(&self, k: usize, r: usize) -> usize {
        match &self.compose {
            Some(table) => table[k * self.size + r] as usize,
            None => {
                let tau = &self.perms[k];
                let sigma = &self.perms[r];
                let images: Vec<u8> = sigma
                    .images
                    .iter()
                    .map(|&s| tau.images[s as usize - 1])
                    .collect();
                rank(&Permutation { images }).zero_based()
            }
        }
    }

    pub(crate) fn inverse0(&self, k: usize) -> usize {
        self.inverse[k] as usize
    }
}
