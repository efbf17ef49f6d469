//! Sawtooth-ladder Hamiltonian and related operators.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::ops::{AddAssign, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{FockState, PhSectorBasis, SectorBasis};
use crate::error::{invalid, Error, Result};

/// Relative magnitude below which assembled matrix elements are dropped.
const DROP_TOLERANCE: f64 = 1e-15;

/// Largest |[H, PH]| entry tolerated by [`project_to_ph_sector`].
pub const PH_SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Couplings of the sawtooth Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub sites: usize,
    /// `J`: nearest-neighbor hopping on every bond `(i, i + 1)`.
    pub hopping: f64,
    /// `J'`: hopping between consecutive odd (A) sites.
    pub odd_hopping: f64,
    /// `V`: nearest-neighbor density-density repulsion.
    pub interaction: f64,
}

impl ModelParams {
    pub fn new(sites: usize, hopping: f64, odd_hopping: f64, interaction: f64) -> Result<Self> {
        let p = ModelParams {
            sites,
            hopping,
            odd_hopping,
            interaction,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 || self.sites % 2 != 0 {
            return Err(invalid(format!("site count must be even, got {}", self.sites)));
        }
        if ![self.hopping, self.odd_hopping, self.interaction]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(invalid("couplings must be finite"));
        }
        Ok(())
    }
}

/// How the density-density term is written.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum InteractionConvention {
    /// `V n_i n_{i+1}` per bond.
    #[default]
    Plain,
    /// `V (n_i - 1/2)(n_{i+1} - 1/2)` per bond; commutes with the occupation
    /// complement on the open chain.
    Symmetrized,
}

impl std::str::FromStr for InteractionConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Self::Plain),
            "symmetrized" => Ok(Self::Symmetrized),
            other => Err(invalid(format!("unknown interaction convention {other:?}"))),
        }
    }
}

impl std::fmt::Display for InteractionConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Plain => "plain",
            Self::Symmetrized => "symmetrized",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BondKind {
    /// `(i, i + 1)`, amplitude `J`.
    Nearest,
    /// `(i, i + 2)` for odd `i`, amplitude `J'`.
    OddNext,
}

/// Hopping bond between 1-based sites `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub kind: BondKind,
}

impl Bond {
    fn mask(&self) -> u64 {
        (1u64 << (self.a - 1)) | (1u64 << (self.b - 1))
    }
}

/// Hopping bonds of the open sawtooth chain: `L - 1` nearest-neighbor bonds
/// followed by `L/2 - 1` bonds between consecutive odd sites.
pub fn sawtooth_bonds(sites: usize) -> Vec<Bond> {
    let mut bonds: Vec<Bond> = (1..sites)
        .map(|a| Bond {
            a,
            b: a + 1,
            kind: BondKind::Nearest,
        })
        .collect();
    bonds.extend((1..sites.saturating_sub(1)).step_by(2).map(|a| Bond {
        a,
        b: a + 2,
        kind: BondKind::OddNext,
    }));
    bonds
}

/// Real symmetric matrix stored as its diagonal plus strictly-upper entries
/// sorted by `(row, col)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    diag: Vec<f64>,
    offdiag: Vec<(usize, usize, f64)>,
}

impl SparseOperator {
    /// Validates and canonicalizes the storage: entries are sorted and tiny
    /// values (relative to the largest magnitude) are dropped. Duplicate or
    /// lower-triangle entries are rejected.
    pub fn new(dim: usize, diag: Vec<f64>, mut offdiag: Vec<(usize, usize, f64)>) -> Result<Self> {
        if diag.len() != dim {
            return Err(invalid(format!("diagonal length {} != dim {dim}", diag.len())));
        }
        for &(r, c, _) in &offdiag {
            if r >= c || c >= dim {
                return Err(invalid(format!("entry ({r}, {c}) is not strictly upper in dim {dim}")));
            }
        }
        offdiag.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        if offdiag.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(invalid("duplicate off-diagonal entry"));
        }
        let scale = diag
            .iter()
            .map(|x| x.abs())
            .chain(offdiag.iter().map(|e| e.2.abs()))
            .fold(0.0, f64::max);
        let cut = DROP_TOLERANCE * scale;
        offdiag.retain(|e| e.2.abs() > cut);
        let diag = diag
            .into_iter()
            .map(|x| if x.abs() > cut { x } else { 0.0 })
            .collect();
        Ok(SparseOperator { dim, diag, offdiag })
    }

    pub fn identity(dim: usize) -> Self {
        SparseOperator {
            dim,
            diag: vec![1.0; dim],
            offdiag: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[(usize, usize, f64)] {
        &self.offdiag
    }

    pub fn nnz_upper(&self) -> usize {
        self.diag.iter().filter(|x| **x != 0.0).count() + self.offdiag.len()
    }

    /// Matrix element `(row, col)` of the full symmetric matrix.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        if row == col {
            return self.diag[row];
        }
        let key = (row.min(col), row.max(col));
        self.offdiag
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map(|i| self.offdiag[i].2)
            .unwrap_or(0.0)
    }

    /// `w = H v`, summed in storage order.
    pub fn apply<T>(&self, v: &[T]) -> Result<Vec<T>>
    where
        T: Copy + AddAssign + Mul<f64, Output = T>,
    {
        if v.len() != self.dim {
            return Err(invalid(format!("vector length {} != operator dim {}", v.len(), self.dim)));
        }
        let mut w: Vec<T> = v.iter().zip(&self.diag).map(|(&x, &d)| x * d).collect();
        for &(r, c, x) in &self.offdiag {
            w[r] += v[c] * x;
            w[c] += v[r] * x;
        }
        Ok(w)
    }

    /// `<v|H|v>` for a real vector.
    pub fn expectation(&self, v: &[f64]) -> Result<f64> {
        let w = self.apply(v)?;
        Ok(crate::numeric::dot(v, &w))
    }

    /// `<v|H|v>` for a complex vector; real because the matrix is symmetric.
    pub fn expectation_complex(&self, v: &[Complex64]) -> Result<f64> {
        let w = self.apply(v)?;
        Ok(crate::numeric::compensated_sum(
            v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re),
        ))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag));
        for &(r, c, x) in &self.offdiag {
            m[(r, c)] = x;
            m[(c, r)] = x;
        }
        m
    }

    pub fn trace(&self) -> f64 {
        crate::numeric::compensated_sum(self.diag.iter().copied())
    }

    /// Coordinate-format dump: header `# dim=<dim> sym=upper`, then one
    /// `row col value` line per stored upper-triangle entry (diagonal included),
    /// 0-based, sorted by `(row, col)`.
    pub fn write_coo<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# dim={} sym=upper", self.dim)?;
        let mut entries: Vec<(usize, usize, f64)> = self
            .diag
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(i, &x)| (i, i, x))
            .chain(self.offdiag.iter().copied())
            .collect();
        entries.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        for (r, c, x) in entries {
            writeln!(out, "{r} {c} {x:.17e}")?;
        }
        Ok(())
    }

    pub fn read_coo<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| invalid("empty operator file"))??;
        let dim = header
            .trim()
            .strip_prefix("# dim=")
            .and_then(|rest| rest.split_whitespace().next())
            .and_then(|d| d.parse::<usize>().ok())
            .ok_or_else(|| invalid(format!("bad operator header {header:?}")))?;
        let mut diag = vec![0.0; dim];
        let mut offdiag = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse_err = || invalid(format!("bad operator line {line:?}"));
            let r: usize = it.next().and_then(|x| x.parse().ok()).ok_or_else(parse_err)?;
            let c: usize = it.next().and_then(|x| x.parse().ok()).ok_or_else(parse_err)?;
            let x: f64 = it.next().and_then(|x| x.parse().ok()).ok_or_else(parse_err)?;
            if r == c {
                if r >= dim {
                    return Err(parse_err());
                }
                diag[r] = x;
            } else {
                offdiag.push((r, c, x));
            }
        }
        SparseOperator::new(dim, diag, offdiag)
    }
}

fn interaction_energy(state: FockState, sites: usize, v: f64, convention: InteractionConvention) -> f64 {
    let bits = state.bits();
    match convention {
        InteractionConvention::Plain => {
            let pairs = bits & (bits >> 1);
            v * pairs.count_ones() as f64
        }
        InteractionConvention::Symmetrized => (1..sites)
            .map(|i| {
                let a = ((bits >> (i - 1)) & 1) as f64 - 0.5;
                let b = ((bits >> i) & 1) as f64 - 0.5;
                v * a * b
            })
            .sum(),
    }
}

/// Assembles the many-body Hamiltonian in `basis`.
///
/// A hop along a bond contributes only when exactly one of its two sites is
/// occupied; the hardcore constraint is therefore structural.
pub fn build_hamiltonian(
    params: &ModelParams,
    basis: &SectorBasis,
    convention: InteractionConvention,
) -> Result<SparseOperator> {
    params.validate()?;
    if params.sites != basis.sites() {
        return Err(invalid(format!(
            "model has {} sites but basis has {}",
            params.sites,
            basis.sites()
        )));
    }
    let sites = params.sites;
    let bonds = sawtooth_bonds(sites);
    let rows: Vec<(f64, Vec<(usize, usize, f64)>)> = basis
        .states()
        .par_iter()
        .enumerate()
        .map(|(row, &state)| {
            let diag = interaction_energy(state, sites, params.interaction, convention);
            let mut entries = Vec::new();
            for bond in &bonds {
                let amplitude = match bond.kind {
                    BondKind::Nearest => params.hopping,
                    BondKind::OddNext => params.odd_hopping,
                };
                if amplitude == 0.0 {
                    continue;
                }
                let mask = bond.mask();
                let occ = (state.bits() & mask).count_ones();
                if occ != 1 {
                    continue;
                }
                let col = basis.rank_unchecked(FockState::new(state.bits() ^ mask));
                if col > row {
                    entries.push((row, col, amplitude));
                }
            }
            (diag, entries)
        })
        .collect();
    let mut diag = Vec::with_capacity(basis.dim());
    let mut offdiag = Vec::new();
    for (d, e) in rows {
        diag.push(d);
        offdiag.extend(e);
    }
    SparseOperator::new(basis.dim(), diag, offdiag)
}

/// `L x L` one-body hopping matrix.
pub fn single_particle_hamiltonian(params: &ModelParams) -> DMatrix<f64> {
    let n = params.sites;
    let mut h = DMatrix::zeros(n, n);
    for bond in sawtooth_bonds(n) {
        let t = match bond.kind {
            BondKind::Nearest => params.hopping,
            BondKind::OddNext => params.odd_hopping,
        };
        h[(bond.a - 1, bond.b - 1)] = t;
        h[(bond.b - 1, bond.a - 1)] = t;
    }
    h
}

/// Compact localized single-particle state of cell `cell` (1-based,
/// `1..=L/2 - 1`).
///
/// The state lives on the A site `2 cell + 1` and its two B neighbors
/// `2 cell`, `2 cell + 2`, with amplitudes `(1/2, -1/sqrt(2), 1/2)`. At
/// `J = sqrt(2) J'` the leakage onto the neighboring A sites cancels between
/// the `J` and `J'` paths, which makes it an exact eigenvector.
pub fn cl_state(sites: usize, cell: usize) -> Result<Vec<f64>> {
    if sites < 4 || sites % 2 != 0 {
        return Err(invalid(format!("compact localized states need even L >= 4, got {sites}")));
    }
    if cell == 0 || cell > sites / 2 - 1 {
        return Err(invalid(format!("cell {cell} outside 1..={}", sites / 2 - 1)));
    }
    let mut v = vec![0.0; sites];
    let center = 2 * cell + 1;
    v[center - 2] = 0.5;
    v[center - 1] = -std::f64::consts::FRAC_1_SQRT_2;
    v[center] = 0.5;
    Ok(v)
}

/// Largest `|H[r, c] - H[~r, ~c]|` over the half-filled basis, where `~`
/// is the occupation complement. Zero iff `H` commutes with the particle-hole
/// map.
pub fn ph_commutator_norm(h: &SparseOperator, sector: &PhSectorBasis) -> Result<f64> {
    if h.dim() != sector.parent_dim() {
        return Err(invalid(format!(
            "operator dim {} != half-filled dim {}",
            h.dim(),
            sector.parent_dim()
        )));
    }
    let mut worst: f64 = 0.0;
    for (k, &d) in h.diag().iter().enumerate() {
        worst = worst.max((d - h.diag()[sector.complement_index(k)]).abs());
    }
    for &(r, c, x) in h.offdiag() {
        let mirrored = h.get(sector.complement_index(r), sector.complement_index(c));
        worst = worst.max((x - mirrored).abs());
    }
    Ok(worst)
}

/// Block of `h` in the particle-hole sector, `T^T H T` with `T` the sector
/// embedding. Fails when `h` does not commute with the complement map.
pub fn project_to_ph_sector(h: &SparseOperator, sector: &PhSectorBasis) -> Result<SparseOperator> {
    let violation = ph_commutator_norm(h, sector)?;
    if violation > PH_SYMMETRY_TOLERANCE {
        return Err(Error::SymmetryViolation(violation));
    }
    let dim = sector.dim();
    let mut diag = vec![0.0; dim];
    let mut upper: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut add = |a: usize, b: usize, x: f64| {
        if a == b {
            diag[a] += x;
        } else if a < b {
            *upper.entry((a, b)).or_insert(0.0) += x;
        }
    };
    for (k, &d) in h.diag().iter().enumerate() {
        let (a, ca) = sector.embedding(k);
        add(a, a, ca * ca * d);
    }
    for &(r, c, x) in h.offdiag() {
        let (a, ca) = sector.embedding(r);
        let (b, cb) = sector.embedding(c);
        let w = ca * cb * x;
        // full symmetric sum visits (r, c) and (c, r)
        if a == b {
            add(a, a, 2.0 * w);
        } else {
            add(a.min(b), a.max(b), w);
        }
    }
    let offdiag = upper.into_iter().map(|((a, b), x)| (a, b, x)).collect();
    SparseOperator::new(dim, diag, offdiag)
}

/// `O = (1/L) sum_i (sx_i sx_{i+1} + sy_i sy_{i+1}) = (2/L) sum_i (c+_i c_{i+1} + h.c.)`
/// over the `L - 1` nearest-neighbor bonds.
pub fn hopping_observable(basis: &SectorBasis) -> SparseOperator {
    let sites = basis.sites();
    let amplitude = 2.0 / sites as f64;
    let mut offdiag = Vec::new();
    for (row, &state) in basis.states().iter().enumerate() {
        for i in 1..sites {
            let mask = 0b11u64 << (i - 1);
            if (state.bits() & mask).count_ones() == 1 {
                let col = basis.rank_unchecked(FockState::new(state.bits() ^ mask));
                if col > row {
                    offdiag.push((row, col, amplitude));
                }
            }
        }
    }
    SparseOperator::new(basis.dim(), vec![0.0; basis.dim()], offdiag)
        .expect("hopping observable storage is canonical")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{domain_wall_state, Parity};

    fn params(sites: usize, j: f64, jp: f64, v: f64) -> ModelParams {
        ModelParams::new(sites, j, jp, v).unwrap()
    }

    #[test]
    fn two_site_matrix() {
        let basis = SectorBasis::new(2, 1).unwrap();
        let h = build_hamiltonian(&params(2, 0.7, 0.3, 1.0), &basis, InteractionConvention::Plain)
            .unwrap();
        let d = h.to_dense();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[0.0, 0.7, 0.7, 0.0]));
    }

    #[test]
    fn size_mismatch_rejected() {
        let basis = SectorBasis::new(4, 2).unwrap();
        assert!(build_hamiltonian(&params(6, 1.0, 1.0, 1.0), &basis, InteractionConvention::Plain)
            .is_err());
    }

    #[test]
    fn bond_counts() {
        let bonds = sawtooth_bonds(12);
        assert_eq!(bonds.iter().filter(|b| b.kind == BondKind::Nearest).count(), 11);
        let odd: Vec<_> = bonds
            .iter()
            .filter(|b| b.kind == BondKind::OddNext)
            .map(|b| (b.a, b.b))
            .collect();
        assert_eq!(odd, vec![(1, 3), (3, 5), (5, 7), (7, 9), (9, 11)]);
    }

    #[test]
    fn domain_wall_row() {
        let basis = SectorBasis::new(12, 6).unwrap();
        let (j, jp, v) = (-0.3, -0.45, 1.3);
        let h = build_hamiltonian(&params(12, j, jp, v), &basis, InteractionConvention::Plain)
            .unwrap();
        let dw = domain_wall_state(12).unwrap();
        let row = basis.rank(dw).unwrap();

        // oracle: occupied neighbor pairs of 111111000000, counted site by site
        let pattern: Vec<bool> = dw.pattern(12).chars().map(|c| c == '1').collect();
        let occupied_bonds = pattern.windows(2).filter(|w| w[0] && w[1]).count();
        assert_eq!(occupied_bonds, 5);
        assert!((h.get(row, row) - occupied_bonds as f64 * v).abs() < 1e-15);

        // oracle: apply every hopping term to the pattern by hand
        let mut expected = Vec::new();
        for (a, b, t) in (1..12)
            .map(|a| (a, a + 1, j))
            .chain((1..11).step_by(2).map(|a| (a, a + 2, jp)))
        {
            if pattern[a - 1] != pattern[b - 1] {
                let mut p = pattern.clone();
                p.swap(a - 1, b - 1);
                let s: String = p.iter().map(|&x| if x { '1' } else { '0' }).collect();
                expected.push((basis.rank(FockState::from_pattern(&s).unwrap()).unwrap(), t));
            }
        }
        expected.sort_by_key(|e| e.0);
        let mut got: Vec<(usize, f64)> = (0..basis.dim())
            .filter(|&c| c != row && h.get(row, c) != 0.0)
            .map(|c| (c, h.get(row, c)))
            .collect();
        got.sort_by_key(|e| e.0);
        assert_eq!(got.len(), 2);
        assert_eq!(got, expected);
    }

    #[test]
    fn single_particle_tridiagonal() {
        let h = single_particle_hamiltonian(&params(4, 1.0, 0.0, 0.0));
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[0., 1., 0., 0., 1., 0., 1., 0., 0., 1., 0., 1., 0., 0., 1., 0.],
        );
        assert_eq!(h, expected);
    }

    fn degenerate_cluster_size(values: &[f64], tol: f64) -> usize {
        let mut best = 0;
        for &x in values {
            best = best.max(values.iter().filter(|&&y| (x - y).abs() < tol).count());
        }
        best
    }

    #[test]
    fn flat_band_count() {
        for sites in (6..=16).step_by(2) {
            let h = single_particle_hamiltonian(&params(sites, 2f64.sqrt(), 1.0, 0.0));
            let eig = h.symmetric_eigenvalues();
            assert_eq!(
                degenerate_cluster_size(eig.as_slice(), 1e-8),
                sites / 2 - 1,
                "L = {sites}"
            );
        }
    }

    fn eigen_residual(h: &DMatrix<f64>, v: &[f64]) -> (f64, f64) {
        let v = nalgebra::DVector::from_column_slice(v);
        let hv = h * &v;
        let e = v.dot(&hv);
        ((hv - &v * e).norm(), e)
    }

    #[test]
    fn compact_localized_states() {
        let flat = single_particle_hamiltonian(&params(10, 2f64.sqrt(), 1.0, 0.0));
        let off = single_particle_hamiltonian(&params(10, 1.0, 1.0, 0.0));
        for cell in 1..=4 {
            let v = cl_state(10, cell).unwrap();
            let norm: f64 = v.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-15);
            let (res, e) = eigen_residual(&flat, &v);
            assert!(res < 1e-10, "cell {cell}: residual {res}");
            assert!((e + 2.0).abs() < 1e-12);
            let (res, _) = eigen_residual(&off, &v);
            assert!(res > 0.1);
        }
        assert!(cl_state(10, 0).is_err());
        assert!(cl_state(10, 5).is_err());
    }

    #[test]
    fn plain_breaks_ph_symmetry() {
        let basis = SectorBasis::new(12, 6).unwrap();
        let sector = PhSectorBasis::new(&basis, Parity::Even).unwrap();
        let p = params(12, -0.4, -0.3, 1.0);
        let plain = build_hamiltonian(&p, &basis, InteractionConvention::Plain).unwrap();
        assert!(matches!(
            project_to_ph_sector(&plain, &sector),
            Err(Error::SymmetryViolation(_))
        ));
        let sym = build_hamiltonian(&p, &basis, InteractionConvention::Symmetrized).unwrap();
        assert_eq!(project_to_ph_sector(&sym, &sector).unwrap().dim(), 462);
    }

    #[test]
    fn conventions_differ_by_boundary_operator() {
        // H_plain - H_sym = V [ N - (n_1 + n_L)/2 - (L - 1)/4 ] in a fixed-N sector
        let basis = SectorBasis::new(4, 2).unwrap();
        let p = params(4, 0.8, -0.6, 1.7);
        let plain = build_hamiltonian(&p, &basis, InteractionConvention::Plain).unwrap().to_dense();
        let sym = build_hamiltonian(&p, &basis, InteractionConvention::Symmetrized)
            .unwrap()
            .to_dense();
        let diff = plain - sym;
        for (k, s) in basis.states().iter().enumerate() {
            let edge = (s.is_occupied(1) as u8 + s.is_occupied(4) as u8) as f64;
            let expected = 1.7 * (2.0 - edge / 2.0 - 0.75);
            for c in 0..basis.dim() {
                let want = if c == k { expected } else { 0.0 };
                assert!((diff[(k, c)] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn observable_structure() {
        let basis = SectorBasis::new(2, 1).unwrap();
        let o = hopping_observable(&basis).to_dense();
        assert_eq!(o, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));

        let basis = SectorBasis::new(12, 6).unwrap();
        let o = hopping_observable(&basis);
        let dw = basis.basis_vector(domain_wall_state(12).unwrap()).unwrap();
        assert_eq!(o.expectation(&dw).unwrap(), 0.0);
        for &(r, c, _) in o.offdiag() {
            assert_eq!(basis.state(r).particle_count(), basis.state(c).particle_count());
        }
    }

    #[test]
    fn apply_matches_columns_and_dense() {
        let basis = SectorBasis::new(8, 4).unwrap();
        let h = build_hamiltonian(&params(8, -0.7, 0.4, 1.0), &basis, InteractionConvention::Plain)
            .unwrap();
        let dense = h.to_dense();
        for k in [0, 17, 69] {
            let mut e = vec![0.0; basis.dim()];
            e[k] = 1.0;
            let col = h.apply(&e).unwrap();
            for r in 0..basis.dim() {
                assert_eq!(col[r], dense[(r, k)]);
            }
        }
        let v: Vec<f64> = (0..basis.dim()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let w = h.apply(&v).unwrap();
        let w_dense = &dense * nalgebra::DVector::from_column_slice(&v);
        for r in 0..basis.dim() {
            assert!((w[r] - w_dense[r]).abs() < 1e-12);
        }
        assert!(h.apply(&v[1..]).is_err());
    }

    #[test]
    fn coo_round_trip() {
        let basis = SectorBasis::new(6, 3).unwrap();
        let h = build_hamiltonian(&params(6, -0.7, 0.4, 1.0), &basis, InteractionConvention::Plain)
            .unwrap();
        let mut buf = Vec::new();
        h.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# dim=20 sym=upper\n"));
        let back = SparseOperator::read_coo(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn storage_validation() {
        assert!(SparseOperator::new(2, vec![0.0, 0.0], vec![(1, 0, 1.0)]).is_err());
        assert!(SparseOperator::new(2, vec![0.0, 0.0], vec![(0, 1, 1.0), (0, 1, 2.0)]).is_err());
        let op = SparseOperator::new(2, vec![1.0, 0.0], vec![(0, 1, 1e-20)]).unwrap();
        assert!(op.offdiag().is_empty());
    }
}
