//! Planar surface-code geometry.
//!
//! Vertices sit on `m + 1` rows and `n` columns. Every vertex row carries
//! `n + 1` horizontal edges, the outermost two of which dangle past the left
//! and right edge of the patch (the open boundaries). Between consecutive
//! vertex rows there are `n` vertical edges. Qubits live on edge midpoints.
//!
//! Qubit ids are assigned row-major: for vertex row `r` the horizontal edges
//! `h(r, 0..=n)` come first, followed by the vertical edges `v(r, 0..n)` of
//! the band between rows `r` and `r + 1`.
//!
//! Positions are stored in units of the lattice constant: `h(r, k)` sits at
//! `(k, r)` and `v(r, c)` at `(c + 1/2, r + 1/2)`, so perpendicular edges
//! meeting at a vertex are `a/√2` apart.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Largest qubit count representable by [`QubitSet`].
pub const MAX_QUBITS: usize = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice needs n >= 1 and m >= 1, got n={n}, m={m}")]
    EmptyLattice { n: usize, m: usize },
    #[error("lattice constant must be positive and finite, got {0}")]
    BadConstant(f64),
    #[error("lattice has {0} qubits, more than the supported {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("column index {index} out of range (0..={max})")]
    ColumnOutOfRange { index: usize, max: usize },
    #[error("row index {index} out of range (0..={max})")]
    RowOutOfRange { index: usize, max: usize },
}

/// Bitmask over qubit ids.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitSet(pub u128);

impl QubitSet {
    pub const EMPTY: QubitSet = QubitSet(0);

    pub fn from_ids<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        ids.into_iter().fold(Self::EMPTY, |s, q| s.with(q))
    }

    #[inline]
    pub fn with(self, q: usize) -> Self {
        debug_assert!(q < MAX_QUBITS);
        QubitSet(self.0 | (1u128 << q))
    }

    #[inline]
    pub fn contains(self, q: usize) -> bool {
        q < MAX_QUBITS && (self.0 >> q) & 1 == 1
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Number of qubits shared with `other`.
    #[inline]
    pub fn overlap(self, other: QubitSet) -> usize {
        (self.0 & other.0).count_ones() as usize
    }

    #[inline]
    pub fn symmetric_difference(self, other: QubitSet) -> Self {
        QubitSet(self.0 ^ other.0)
    }

    /// Ids in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let q = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(q)
            }
        })
    }

    /// Lower-case hex, most significant digit first, no prefix.
    pub fn to_hex(self) -> String {
        format!("{:x}", self.0)
    }
}

impl fmt::Debug for QubitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_lattice_constant")]
    pub a: f64,
}

fn default_lattice_constant() -> f64 {
    1.0
}

impl LatticeSpec {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m, a: 1.0 }
    }

    pub fn square(n: usize) -> Self {
        Self::new(n, n)
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if self.n == 0 || self.m == 0 {
            return Err(LatticeError::EmptyLattice { n: self.n, m: self.m });
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(LatticeError::BadConstant(self.a));
        }
        let count = self.qubit_count();
        if count > MAX_QUBITS {
            return Err(LatticeError::TooManyQubits(count));
        }
        Ok(())
    }

    /// `nm` vertical plus `(n+1)(m+1)` horizontal edges.
    pub fn qubit_count(&self) -> usize {
        self.n * self.m + (self.n + 1) * (self.m + 1)
    }

    pub fn star_count(&self) -> usize {
        (self.m + 1) * self.n
    }

    pub fn plaquette_count(&self) -> usize {
        (self.n + 1) * self.m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub spec: LatticeSpec,
    /// Positions in units of `spec.a`, indexed by qubit id.
    pub positions: Vec<[f64; 2]>,
    pub stars: Vec<QubitSet>,
    pub plaquettes: Vec<QubitSet>,
    /// Canonical X̄ path through the middle tile column.
    pub gamma_x: QubitSet,
    /// Canonical Z̄ path through the middle vertex row.
    pub gamma_z: QubitSet,
    horizontal: Vec<usize>,
    vertical: Vec<usize>,
}

impl Lattice {
    pub fn n_qubits(&self) -> usize {
        self.positions.len()
    }

    /// Id of the horizontal edge `k` (0..=n) in vertex row `r` (0..=m).
    pub fn horizontal_edge(&self, r: usize, k: usize) -> usize {
        self.horizontal[r * (self.spec.n + 1) + k]
    }

    /// Id of the vertical edge below vertex `(r, c)`, `r < m`, `c < n`.
    pub fn vertical_edge(&self, r: usize, c: usize) -> usize {
        self.vertical[r * self.spec.n + c]
    }

    /// Physical distance between two qubits.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let [xi, yi] = self.positions[i];
        let [xj, yj] = self.positions[j];
        self.spec.a * (xi - xj).hypot(yi - yj)
    }

    /// All-qubit mask.
    pub fn all_qubits(&self) -> QubitSet {
        QubitSet::from_ids(0..self.n_qubits())
    }

    pub fn to_json(&self) -> LatticeJson {
        LatticeJson {
            spec: self.spec,
            n_qubits: self.n_qubits(),
            positions: self.positions.clone(),
            stars: self.stars.iter().map(|s| s.to_hex()).collect(),
            plaquettes: self.plaquettes.iter().map(|s| s.to_hex()).collect(),
            gamma_x: self.gamma_x.to_hex(),
            gamma_z: self.gamma_z.to_hex(),
        }
    }
}

/// Debug export of a lattice; masks are hex strings of the qubit bitmask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeJson {
    pub spec: LatticeSpec,
    pub n_qubits: usize,
    pub positions: Vec<[f64; 2]>,
    pub stars: Vec<String>,
    pub plaquettes: Vec<String>,
    pub gamma_x: String,
    pub gamma_z: String,
}

pub fn build_lattice(spec: LatticeSpec) -> Result<Lattice, LatticeError> {
    spec.validate()?;
    let LatticeSpec { n, m, .. } = spec;

    let mut positions = Vec::with_capacity(spec.qubit_count());
    let mut horizontal = vec![usize::MAX; (m + 1) * (n + 1)];
    let mut vertical = vec![usize::MAX; m * n];
    for r in 0..=m {
        for k in 0..=n {
            horizontal[r * (n + 1) + k] = positions.len();
            positions.push([k as f64, r as f64]);
        }
        if r < m {
            for c in 0..n {
                vertical[r * n + c] = positions.len();
                positions.push([c as f64 + 0.5, r as f64 + 0.5]);
            }
        }
    }
    let h = |r: usize, k: usize| horizontal[r * (n + 1) + k];
    let v = |r: usize, c: usize| vertical[r * n + c];

    // Stars at vertex (r, c): left/right horizontal edges plus the vertical
    // edges above and below; the top and bottom rows lose one of those.
    let mut stars = Vec::with_capacity(spec.star_count());
    for r in 0..=m {
        for c in 0..n {
            let mut s = QubitSet::EMPTY.with(h(r, c)).with(h(r, c + 1));
            if r > 0 {
                s = s.with(v(r - 1, c));
            }
            if r < m {
                s = s.with(v(r, c));
            }
            stars.push(s);
        }
    }

    // Tile (r, k) lies between vertex rows r and r+1, left of vertex column k.
    // Tiles k = 0 and k = n are the partial tiles on the open boundaries.
    let mut plaquettes = Vec::with_capacity(spec.plaquette_count());
    for r in 0..m {
        for k in 0..=n {
            let mut p = QubitSet::EMPTY.with(h(r, k)).with(h(r + 1, k));
            if k > 0 {
                p = p.with(v(r, k - 1));
            }
            if k < n {
                p = p.with(v(r, k));
            }
            plaquettes.push(p);
        }
    }

    let mut lattice = Lattice {
        spec,
        positions,
        stars,
        plaquettes,
        gamma_x: QubitSet::EMPTY,
        gamma_z: QubitSet::EMPTY,
        horizontal,
        vertical,
    };
    lattice.gamma_x = logical_x_path(&lattice, n / 2)?;
    lattice.gamma_z = logical_z_path(&lattice, m / 2)?;
    Ok(lattice)
}

/// X̄ representative crossing tile column `column` (0..=n) from top to
/// bottom: the horizontal edge `k = column` of every vertex row.
pub fn logical_x_path(lattice: &Lattice, column: usize) -> Result<QubitSet, LatticeError> {
    let LatticeSpec { n, m, .. } = lattice.spec;
    if column > n {
        return Err(LatticeError::ColumnOutOfRange { index: column, max: n });
    }
    Ok(QubitSet::from_ids(
        (0..=m).map(|r| lattice.horizontal_edge(r, column)),
    ))
}

/// Z̄ representative along vertex row `row` (0..=m), running between the
/// dangling edges of the two open boundaries.
pub fn logical_z_path(lattice: &Lattice, row: usize) -> Result<QubitSet, LatticeError> {
    let LatticeSpec { n, m, .. } = lattice.spec;
    if row > m {
        return Err(LatticeError::RowOutOfRange { index: row, max: m });
    }
    Ok(QubitSet::from_ids(
        (0..=n).map(|k| lattice.horizontal_edge(row, k)),
    ))
}

/// Unordered pairs `(i, j, distance)` with `i < j` and distance at most
/// `range` (physical units). Pairs come out sorted by `(i, j)`.
pub fn neighbor_pairs(lattice: &Lattice, range: f64) -> Vec<(usize, usize, f64)> {
    // Relative slack so that exactly a/√2 is included despite rounding.
    let limit = range * (1.0 + 1e-12);
    let n = lattice.n_qubits();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = lattice.distance(i, j);
            if d <= limit {
                out.push((i, j, d));
            }
        }
    }
    out
}

/// Nearest-neighbour range `a/√2`.
pub fn nearest_neighbor_range(spec: &LatticeSpec) -> f64 {
    spec.a * std::f64::consts::FRAC_1_SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(n: usize, m: usize) -> Lattice {
        build_lattice(LatticeSpec::new(n, m)).unwrap()
    }

    #[test]
    fn reference_sizes() {
        for (n, nq, np, ns) in [(1, 5, 2, 2), (3, 25, 12, 12), (4, 41, 20, 20)] {
            let l = lat(n, n);
            assert_eq!(l.n_qubits(), nq);
            assert_eq!(l.plaquettes.len(), np);
            assert_eq!(l.stars.len(), ns);
        }
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(
            build_lattice(LatticeSpec::new(0, 2)),
            Err(LatticeError::EmptyLattice { .. })
        ));
        assert!(build_lattice(LatticeSpec::new(2, 0)).is_err());
        assert!(build_lattice(LatticeSpec { n: 2, m: 2, a: 0.0 }).is_err());
        assert!(matches!(
            build_lattice(LatticeSpec::new(9, 9)),
            Err(LatticeError::TooManyQubits(_))
        ));
    }

    #[test]
    fn path_lengths() {
        let l = lat(3, 3);
        assert_eq!(logical_x_path(&l, 1).unwrap().len(), 4);
        let l = lat(1, 1);
        assert_eq!(logical_x_path(&l, 0).unwrap().len(), 2);
        let z = logical_z_path(&l, 0).unwrap();
        assert_eq!(z, QubitSet::from_ids([l.horizontal_edge(0, 0), l.horizontal_edge(0, 1)]));
        assert!(logical_x_path(&l, 2).is_err());
        assert!(logical_z_path(&l, 2).is_err());
    }

    #[test]
    fn boundary_weights() {
        let l = lat(3, 2);
        for (idx, s) in l.stars.iter().enumerate() {
            let r = idx / 3;
            let expect = if r == 0 || r == 2 { 3 } else { 4 };
            assert_eq!(s.len(), expect, "star {idx}");
        }
        for (idx, p) in l.plaquettes.iter().enumerate() {
            let k = idx % 4;
            let expect = if k == 0 || k == 3 { 3 } else { 4 };
            assert_eq!(p.len(), expect, "plaquette {idx}");
        }
    }

    #[test]
    fn neighbor_ranges() {
        let l = lat(3, 3);
        assert!(neighbor_pairs(&l, 1e-6).is_empty());
        assert_eq!(neighbor_pairs(&l, 3.0 * 2f64.sqrt()).len(), 300);
        for (i, j, d) in neighbor_pairs(&l, nearest_neighbor_range(&l.spec)) {
            assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
            let q = QubitSet::EMPTY.with(i).with(j);
            let shared = l.stars.iter().chain(&l.plaquettes).any(|s| s.overlap(q) == 2);
            assert!(shared, "pair ({i},{j}) shares no stabilizer");
        }
    }

    #[test]
    fn qubit_set_basics() {
        let s = QubitSet::from_ids([0, 3, 100]);
        assert_eq!(s.len(), 3);
        assert!(s.contains(100) && !s.contains(1));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 3, 100]);
        assert_eq!(QubitSet::from_ids([0, 4]).to_hex(), "11");
    }
}
