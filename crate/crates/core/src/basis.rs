//! Hardcore-boson Fock bases at fixed particle number.
//!
//! A [`FockState`] stores the occupation of chain site `i` in bit `i - 1`.
//! Textual patterns are written site 1 first, so the domain wall on four sites
//! reads `"1100"` while its bit word is `0b0011`.
//!
//! States of a [`SectorBasis`] are ordered by integer value and indexed with
//! the combinatorial number system: the rank of a state with occupied bit
//! positions `p_1 < ... < p_N` is `sum_j C(p_j, j)`.

use std::fmt;

use crate::error::{invalid, Result};

/// Largest chain handled unless a caller raises the limit explicitly.
pub const DEFAULT_MAX_SITES: usize = 24;

/// Hard ceiling imposed by the 64-bit occupation word.
pub const MAX_REPRESENTABLE_SITES: usize = 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FockState(u64);

impl FockState {
    pub const fn new(bits: u64) -> Self {
        FockState(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub const fn particle_count(self) -> u32 {
        self.0.count_ones()
    }

    /// Occupation of 1-based chain site `site`.
    pub const fn is_occupied(self, site: usize) -> bool {
        (self.0 >> (site - 1)) & 1 == 1
    }

    /// Parses a `'1'`/`'0'` pattern, leftmost character = site 1.
    pub fn from_pattern(pattern: &str) -> Result<Self> {
        let sites = pattern.chars().count();
        if sites == 0 || sites > MAX_REPRESENTABLE_SITES {
            return Err(invalid(format!(
                "pattern length {sites} outside 1..={MAX_REPRESENTABLE_SITES}"
            )));
        }
        let mut bits = 0u64;
        for (i, c) in pattern.chars().enumerate() {
            match c {
                '1' => bits |= 1 << i,
                '0' => {}
                other => {
                    return Err(invalid(format!("invalid occupation character {other:?}")))
                }
            }
        }
        Ok(FockState(bits))
    }

    /// Renders the occupation of sites `1..=sites`.
    pub fn pattern(self, sites: usize) -> String {
        (1..=sites)
            .map(|s| if self.is_occupied(s) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Binary for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Binary::fmt(&self.0, f)
    }
}

fn site_mask(sites: usize) -> u64 {
    if sites >= 64 {
        u64::MAX
    } else {
        (1u64 << sites) - 1
    }
}

/// Pascal triangle `C(n, k)` for `0 <= k <= n <= max_n`.
#[derive(Clone, Debug)]
pub struct BinomialTable {
    rows: Vec<Vec<u64>>,
}

impl BinomialTable {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            let mut row = vec![1u64; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        BinomialTable { rows }
    }

    /// `C(n, k)`, zero when `k > n`.
    pub fn get(&self, n: usize, k: usize) -> u64 {
        if k > n {
            0
        } else {
            self.rows[n][k]
        }
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // exact: acc * (n - i) is divisible by (i + 1)
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// All Fock states of `sites` sites holding `particles` bosons.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    sites: usize,
    particles: usize,
    states: Vec<FockState>,
    binom: BinomialTable,
}

impl SectorBasis {
    /// Builds the sector for an even chain of at most [`DEFAULT_MAX_SITES`]
    /// sites. `sites = 2` is accepted as the smallest even chain.
    pub fn new(sites: usize, particles: usize) -> Result<Self> {
        Self::with_max_sites(sites, particles, DEFAULT_MAX_SITES)
    }

    pub fn with_max_sites(sites: usize, particles: usize, max_sites: usize) -> Result<Self> {
        if sites % 2 != 0 {
            return Err(invalid(format!("site count must be even and positive, got {sites}")));
        }
        Self::segment(sites, particles, max_sites)
    }

    /// Fock states of an open segment of any length, e.g. one side of a bipartition.
    pub(crate) fn segment(sites: usize, particles: usize, max_sites: usize) -> Result<Self> {
        let max_sites = max_sites.min(MAX_REPRESENTABLE_SITES);
        if sites == 0 {
            return Err(invalid("site count must be positive"));
        }
        if sites > max_sites {
            return Err(invalid(format!("site count {sites} exceeds the maximum {max_sites}")));
        }
        if particles > sites {
            return Err(invalid(format!(
                "particle number {particles} outside 0..={sites}"
            )));
        }
        let binom = BinomialTable::new(sites);
        let dim = binom.get(sites, particles) as usize;
        let mut states = Vec::with_capacity(dim);
        if particles == 0 {
            states.push(FockState(0));
        } else {
            // Gosper's hack walks fixed-popcount words in increasing order.
            let limit = 1u64 << sites;
            let mut v: u64 = (1u64 << particles) - 1;
            while v < limit {
                states.push(FockState(v));
                let t = v | (v - 1);
                let w = (t + 1) | (((!t & t.wrapping_add(1)) - 1) >> (v.trailing_zeros() + 1));
                if w <= v {
                    break;
                }
                v = w;
            }
        }
        debug_assert_eq!(states.len(), dim);
        Ok(SectorBasis {
            sites,
            particles,
            states,
            binom,
        })
    }

    /// Half-filled sector `N = L / 2`.
    pub fn half_filled(sites: usize) -> Result<Self> {
        Self::new(sites, sites / 2)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> FockState {
        self.states[index]
    }

    pub fn is_half_filled(&self) -> bool {
        2 * self.particles == self.sites
    }

    /// Combinadic index of `state`; never scans the state list.
    pub fn rank(&self, state: FockState) -> Result<usize> {
        if state.bits() & !site_mask(self.sites) != 0 {
            return Err(invalid(format!(
                "state {:b} has bits beyond site {}",
                state, self.sites
            )));
        }
        if state.particle_count() as usize != self.particles {
            return Err(invalid(format!(
                "state {:b} holds {} particles, sector has {}",
                state,
                state.particle_count(),
                self.particles
            )));
        }
        Ok(self.rank_unchecked(state))
    }

    /// Rank without validation; callers guarantee the particle number.
    #[inline]
    pub(crate) fn rank_unchecked(&self, state: FockState) -> usize {
        let mut bits = state.bits();
        let mut rank = 0u64;
        let mut j = 1;
        while bits != 0 {
            let p = bits.trailing_zeros() as usize;
            rank += self.binom.get(p, j);
            j += 1;
            bits &= bits - 1;
        }
        rank as usize
    }

    /// Inverse of [`rank`](Self::rank), computed from the combinadic digits.
    pub fn unrank(&self, index: usize) -> Result<FockState> {
        if index >= self.dim() {
            return Err(invalid(format!("index {index} outside sector of dimension {}", self.dim())));
        }
        let mut k = index as u64;
        let mut bits = 0u64;
        let mut upper = self.sites;
        for j in (1..=self.particles).rev() {
            let mut p = upper;
            while p > 0 {
                p -= 1;
                if self.binom.get(p, j) <= k {
                    break;
                }
            }
            bits |= 1 << p;
            k -= self.binom.get(p, j);
            upper = p;
        }
        Ok(FockState(bits))
    }

    /// Unit vector in this basis selecting `state`.
    pub fn basis_vector(&self, state: FockState) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dim()];
        v[self.rank(state)?] = 1.0;
        Ok(v)
    }
}

/// Sites `1..=L/2` occupied, the rest empty.
pub fn domain_wall_state(sites: usize) -> Result<FockState> {
    if sites == 0 || sites % 2 != 0 || sites > MAX_REPRESENTABLE_SITES {
        return Err(invalid(format!("domain wall needs an even site count, got {sites}")));
    }
    Ok(FockState(site_mask(sites / 2)))
}

/// Alternating runs of `block_len` occupied and `block_len` empty sites,
/// starting occupied. The last run is truncated at the chain end; the pattern
/// must land on half filling.
pub fn block_state(sites: usize, block_len: usize) -> Result<FockState> {
    if sites == 0 || sites % 2 != 0 || sites > MAX_REPRESENTABLE_SITES {
        return Err(invalid(format!("block state needs an even site count, got {sites}")));
    }
    if block_len == 0 {
        return Err(invalid("block length must be positive"));
    }
    let mut bits = 0u64;
    for site in 1..=sites {
        if ((site - 1) / block_len) % 2 == 0 {
            bits |= 1 << (site - 1);
        }
    }
    let state = FockState(bits);
    if 2 * state.particle_count() as usize != sites {
        return Err(invalid(format!(
            "blocks of {block_len} on {sites} sites hold {} particles, not {}",
            state.particle_count(),
            sites / 2
        )));
    }
    Ok(state)
}

/// Block lengths whose [`block_state`] reaches half filling, longest first.
pub fn half_filling_block_lengths(sites: usize) -> Vec<usize> {
    (1..=sites / 2)
        .rev()
        .filter(|&b| block_state(sites, b).is_ok())
        .collect()
}

/// Occupation complement on the low `sites` bits (hardcore bosons: no sign).
pub fn ph_complement(state: FockState, sites: usize) -> FockState {
    FockState(!state.bits() & site_mask(sites))
}

/// Eigenvalue label of the particle-hole transformation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn from_sign(sign: i32) -> Result<Self> {
        match sign {
            1 => Ok(Parity::Even),
            -1 => Ok(Parity::Odd),
            other => Err(invalid(format!("parity must be +1 or -1, got {other}"))),
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => write!(f, "+1"),
            Parity::Odd => write!(f, "-1"),
        }
    }
}

/// One particle-hole sector of the half-filled basis.
///
/// Basis vector `a` is `(|n_a> + p |~n_a>) / sqrt(2)` where `n_a < ~n_a` and
/// `p` is the parity sign. At half filling no state is its own complement, so
/// each sector has exactly half the parent dimension.
#[derive(Clone, Debug)]
pub struct PhSectorBasis {
    sites: usize,
    parity: Parity,
    parent_dim: usize,
    /// Parent indices `(state, complement)` per sector vector.
    pairs: Vec<(usize, usize)>,
    /// Parent index -> (sector index, coefficient of the parent state).
    embedding: Vec<(usize, f64)>,
    /// Parent index -> parent index of its complement.
    complement: Vec<usize>,
}

impl PhSectorBasis {
    pub fn new(parent: &SectorBasis, parity: Parity) -> Result<Self> {
        if !parent.is_half_filled() {
            return Err(invalid(format!(
                "particle-hole sectors need half filling, got N = {} on L = {}",
                parent.particles(),
                parent.sites()
            )));
        }
        let sites = parent.sites();
        let dim = parent.dim();
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        let mut complement = vec![0usize; dim];
        let mut embedding = vec![(usize::MAX, 0.0); dim];
        let mut pairs = Vec::with_capacity(dim / 2);
        for (k, &s) in parent.states().iter().enumerate() {
            let partner = parent.rank_unchecked(ph_complement(s, sites));
            complement[k] = partner;
            if k < partner {
                let a = pairs.len();
                pairs.push((k, partner));
                embedding[k] = (a, amp);
                embedding[partner] = (a, parity.sign() * amp);
            }
        }
        debug_assert_eq!(2 * pairs.len(), dim);
        Ok(PhSectorBasis {
            sites,
            parity,
            parent_dim: dim,
            pairs,
            embedding,
            complement,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn parent_dim(&self) -> usize {
        self.parent_dim
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Sector index and coefficient carried by parent state `parent_index`.
    pub fn embedding(&self, parent_index: usize) -> (usize, f64) {
        self.embedding[parent_index]
    }

    pub fn complement_index(&self, parent_index: usize) -> usize {
        self.complement[parent_index]
    }

    /// Sector coordinates -> parent Fock coordinates.
    pub fn lift(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(invalid(format!("vector length {} != sector dim {}", v.len(), self.dim())));
        }
        let mut out = vec![0.0; self.parent_dim];
        for (k, &(a, c)) in self.embedding.iter().enumerate() {
            out[k] = c * v[a];
        }
        Ok(out)
    }

    /// Orthogonal projection of a parent vector onto the sector, in sector
    /// coordinates.
    pub fn restrict(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.parent_dim {
            return Err(invalid(format!(
                "vector length {} != parent dim {}",
                v.len(),
                self.parent_dim
            )));
        }
        let mut out = vec![0.0; self.dim()];
        for (k, &(a, c)) in self.embedding.iter().enumerate() {
            out[a] += c * v[k];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> FockState {
        FockState::from_pattern(s).unwrap()
    }

    #[test]
    fn sector_dimensions() {
        assert_eq!(SectorBasis::new(12, 6).unwrap().dim(), 924);
        assert_eq!(SectorBasis::new(14, 7).unwrap().dim(), 3432);
        let b = SectorBasis::new(2, 1).unwrap();
        assert_eq!(b.states(), &[FockState::new(0b01), FockState::new(0b10)]);
        let b = SectorBasis::new(4, 2).unwrap();
        assert_eq!(b.dim(), 6);
        assert_eq!(b.state(0).bits(), 0b0011);
    }

    #[test]
    fn sector_rejects_bad_sizes() {
        assert!(SectorBasis::new(7, 3).is_err());
        assert!(SectorBasis::new(26, 13).is_err());
        assert!(SectorBasis::new(4, 5).is_err());
        assert!(SectorBasis::with_max_sites(26, 2, 30).is_ok());
    }

    #[test]
    fn rank_examples() {
        let b = SectorBasis::new(4, 2).unwrap();
        assert_eq!(b.rank(FockState::new(0b0011)).unwrap(), 0);
        assert_eq!(b.rank(FockState::new(0b1100)).unwrap(), 5);
        assert!(b.rank(FockState::new(0b0111)).is_err());
        let b = SectorBasis::new(12, 6).unwrap();
        assert_eq!(b.rank(b.unrank(517).unwrap()).unwrap(), 517);
    }

    #[test]
    fn rank_unrank_exhaustive_small() {
        for sites in (2..=12).step_by(2) {
            for n in 0..=sites {
                let b = SectorBasis::new(sites, n).unwrap();
                assert_eq!(b.dim() as u64, binomial(sites, n));
                for (k, &s) in b.states().iter().enumerate() {
                    assert_eq!(b.rank(s).unwrap(), k);
                    assert_eq!(b.unrank(k).unwrap(), s);
                }
                assert!(b.states().windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn domain_wall_patterns() {
        assert_eq!(domain_wall_state(4).unwrap().pattern(4), "1100");
        assert_eq!(domain_wall_state(12).unwrap().pattern(12), "111111000000");
        assert_eq!(domain_wall_state(2).unwrap().pattern(2), "10");
        assert!(domain_wall_state(5).is_err());
    }

    #[test]
    fn block_patterns() {
        assert_eq!(block_state(12, 6).unwrap(), domain_wall_state(12).unwrap());
        assert_eq!(block_state(12, 3).unwrap().pattern(12), "111000111000");
        assert_eq!(block_state(12, 2).unwrap().pattern(12), "110011001100");
        assert!(block_state(12, 4).is_err());
        assert!(block_state(12, 0).is_err());
        assert_eq!(half_filling_block_lengths(12), vec![6, 3, 2, 1]);
    }

    #[test]
    fn complement_examples() {
        assert_eq!(ph_complement(pat("111111000000"), 12), pat("000000111111"));
        assert_eq!(ph_complement(pat("10"), 2), pat("01"));
        let s = pat("101100");
        assert_eq!(ph_complement(ph_complement(s, 6), 6), s);
    }

    #[test]
    fn pattern_round_trip() {
        let s = pat("0110");
        assert_eq!(s.bits(), 0b0110);
        assert_eq!(s.pattern(4), "0110");
        assert!(FockState::from_pattern("01x").is_err());
    }

    #[test]
    fn ph_sector_dimensions() {
        let parent = SectorBasis::new(12, 6).unwrap();
        assert_eq!(PhSectorBasis::new(&parent, Parity::Even).unwrap().dim(), 462);
        let parent = SectorBasis::new(14, 7).unwrap();
        assert_eq!(PhSectorBasis::new(&parent, Parity::Even).unwrap().dim(), 1716);
        let off = SectorBasis::new(12, 5).unwrap();
        assert!(PhSectorBasis::new(&off, Parity::Even).is_err());
    }

    #[test]
    fn ph_sector_two_sites() {
        let parent = SectorBasis::new(2, 1).unwrap();
        let sector = PhSectorBasis::new(&parent, Parity::Even).unwrap();
        assert_eq!(sector.dim(), 1);
        let v = sector.lift(&[1.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(v, vec![h, h]);
        let odd = PhSectorBasis::new(&parent, Parity::Odd).unwrap();
        assert_eq!(odd.lift(&[1.0]).unwrap(), vec![h, -h]);
    }
}
