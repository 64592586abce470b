//! Exact sums over the star-constrained x-basis configurations.
//!
//! Configurations are flip masks relative to the all-up state. The allowed
//! set is the span of the plaquette masks together with its translate by the
//! Z̄ path, `2^(N_□ + 1)` states in total. The ensemble is traversed in
//! Gray-code order in fixed-size chunks so that every step flips one
//! generator and the work split never depends on the worker count.

mod sum;

pub use sum::{ComplexSum, Neumaier};

use crate::bath::{CouplingMatrix, CouplingSource};
use crate::lattice::{nearest_neighbor_range, neighbor_pairs, Lattice, QubitSet};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Version tag of the traversal order; bumped whenever output order changes.
pub const ENUMERATION_ORDERING: &str = "gray-chunked-v1";

/// Configurations per work unit.
pub const CHUNK_LEN: u64 = 1 << 12;

/// Largest ensemble (in generator bits) that will be enumerated.
pub const MAX_ENSEMBLE_BITS: u32 = 30;

/// Largest qubit count accepted by [`brute_force_amplitudes`].
pub const MAX_BRUTE_FORCE_QUBITS: usize = 25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinModelError {
    #[error("generators are dependent: rank {rank}, expected {expected}")]
    DependentGenerators { rank: usize, expected: usize },
    #[error("generated configuration {config:?} violates star {star}")]
    StarViolation { star: usize, config: QubitSet },
    #[error("coupling matrix has size {couplings}, lattice has {qubits} qubits")]
    SizeMismatch { couplings: usize, qubits: usize },
    #[error("ensemble of 2^{bits} states exceeds the 2^{max} enumeration limit")]
    TooLarge { bits: u32, max: u32 },
    #[error("{qubits} qubits exceed the brute-force limit of {max}")]
    BruteForceTooLarge { qubits: usize, max: usize },
    #[error("inverse temperature must be finite and non-negative, got {0}")]
    InvalidBeta(f64),
    #[error("β·ΔE overflows at β = {beta} (energy spread {spread})")]
    Overflow { beta: f64, spread: f64 },
    #[error("A vanishes at β = {beta}; fidelity undefined")]
    DegenerateAmplitude { beta: f64 },
    #[error("density of states needs uniform nearest-neighbour couplings")]
    NotNearestNeighbor,
    #[error("β grid must be non-empty and ascending")]
    UnsortedGrid,
}

/// x-basis configuration; bit `i` set means `s_i = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    pub flips: QubitSet,
}

impl SpinConfig {
    pub const ALL_UP: SpinConfig = SpinConfig { flips: QubitSet::EMPTY };

    #[inline]
    pub fn spin(self, i: usize) -> i8 {
        if self.flips.contains(i) {
            -1
        } else {
            1
        }
    }

    /// All star operators evaluate to +1.
    pub fn satisfies_stars(self, lattice: &Lattice) -> bool {
        lattice.stars.iter().all(|s| s.overlap(self.flips) % 2 == 0)
    }

    /// `⟨S|X̄|S⟩ = ∏_{i∈Γ_X} s_i`.
    pub fn logical_x_sign(self, lattice: &Lattice) -> i8 {
        if self.flips.overlap(lattice.gamma_x).is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedEnsemble {
    pub generators: Vec<QubitSet>,
    pub coset_shift: QubitSet,
}

impl RestrictedEnsemble {
    /// Generator bits: one per plaquette plus the coset bit.
    pub fn bits(&self) -> u32 {
        self.generators.len() as u32 + 1
    }

    pub fn count(&self) -> u64 {
        1u64 << self.bits()
    }

    /// Flip mask for generator `g`; the last index is the coset shift.
    #[inline]
    pub fn generator(&self, g: u32) -> QubitSet {
        let g = g as usize;
        if g < self.generators.len() {
            self.generators[g]
        } else {
            self.coset_shift
        }
    }

    /// Product of the generators selected by the bits of `subset`.
    pub fn config(&self, subset: u64) -> SpinConfig {
        let mut flips = QubitSet::EMPTY;
        let mut rest = subset;
        while rest != 0 {
            let g = rest.trailing_zeros();
            flips = flips.symmetric_difference(self.generator(g));
            rest &= rest - 1;
        }
        SpinConfig { flips }
    }

    /// Configuration visited at traversal position `t`.
    pub fn config_at(&self, t: u64) -> SpinConfig {
        self.config(gray(t))
    }

    fn guard(&self) -> Result<(), SpinModelError> {
        if self.bits() > MAX_ENSEMBLE_BITS {
            return Err(SpinModelError::TooLarge {
                bits: self.bits(),
                max: MAX_ENSEMBLE_BITS,
            });
        }
        Ok(())
    }

    fn chunk_count(&self) -> u64 {
        self.count().div_ceil(CHUNK_LEN)
    }

    /// Runs `f` over every chunk in parallel and returns the results in
    /// chunk order.
    pub fn map_chunks<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(ChunkWalk<'_>) -> T + Sync,
    {
        let total = self.count();
        (0..self.chunk_count())
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK_LEN;
                let end = (start + CHUNK_LEN).min(total);
                f(ChunkWalk {
                    ensemble: self,
                    start,
                    end,
                })
            })
            .collect()
    }
}

/// Gray-code walk over one chunk of traversal positions.
#[derive(Debug, Clone, Copy)]
pub struct ChunkWalk<'a> {
    ensemble: &'a RestrictedEnsemble,
    pub start: u64,
    pub end: u64,
}

impl ChunkWalk<'_> {
    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    /// Calls `visit(t, config, next_flip)` for each position, where
    /// `next_flip` is the generator applied to reach position `t + 1`
    /// (`None` at the end of the chunk).
    pub fn walk(&self, mut visit: impl FnMut(u64, SpinConfig, Option<QubitSet>)) {
        let mut config = self.ensemble.config_at(self.start);
        for t in self.start..self.end {
            if t + 1 < self.end {
                let flip = self.ensemble.generator((t + 1).trailing_zeros());
                visit(t, config, Some(flip));
                config.flips = config.flips.symmetric_difference(flip);
            } else {
                visit(t, config, None);
            }
        }
    }
}

#[inline]
fn gray(t: u64) -> u64 {
    t ^ (t >> 1)
}

/// Rank over GF(2) of a list of masks.
fn gf2_rank(masks: &[QubitSet]) -> usize {
    let mut basis: Vec<u128> = Vec::new();
    for m in masks {
        let mut v = m.0;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Plaquette generators plus the Z̄ coset; checks independence and that
/// every generator commutes with every star.
pub fn build_ensemble(lattice: &Lattice) -> Result<RestrictedEnsemble, SpinModelError> {
    let generators = lattice.plaquettes.clone();
    let mut all = generators.clone();
    all.push(lattice.gamma_z);
    let rank = gf2_rank(&all);
    if rank != all.len() {
        return Err(SpinModelError::DependentGenerators {
            rank,
            expected: all.len(),
        });
    }
    for g in &all {
        let config = SpinConfig { flips: *g };
        if let Some(star) = lattice.stars.iter().position(|s| s.overlap(*g) % 2 != 0) {
            return Err(SpinModelError::StarViolation { star, config: config.flips });
        }
    }
    let ensemble = RestrictedEnsemble {
        generators,
        coset_shift: lattice.gamma_z,
    };
    ensemble.guard()?;
    Ok(ensemble)
}

fn check_size(lattice: &Lattice, couplings: &CouplingMatrix) -> Result<(), SpinModelError> {
    if couplings.size() != lattice.n_qubits() {
        return Err(SpinModelError::SizeMismatch {
            couplings: couplings.size(),
            qubits: lattice.n_qubits(),
        });
    }
    Ok(())
}

/// `E_S = Σ_{i≠j} J_ij s_i s_j`, evaluated as `2 Σ_{i<j}`.
pub fn energy(config: SpinConfig, couplings: &CouplingMatrix) -> Complex64 {
    let n = couplings.size();
    let mut e = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let si = config.spin(i) as f64;
        for j in (i + 1)..n {
            e += couplings.get(i, j) * (si * config.spin(j) as f64);
        }
    }
    2.0 * e
}

/// Energy and `⟨X̄⟩` sign of every ensemble member in traversal order.
#[derive(Debug, Clone)]
pub struct EnergyTable {
    pub energies: Vec<Complex64>,
    pub negative_x: Vec<bool>,
    min_re: f64,
    max_re: f64,
}

impl EnergyTable {
    pub fn build(
        lattice: &Lattice,
        ensemble: &RestrictedEnsemble,
        couplings: &CouplingMatrix,
    ) -> Result<Self, SpinModelError> {
        check_size(lattice, couplings)?;
        ensemble.guard()?;
        let adjacency = couplings.adjacency();
        let parts = ensemble.map_chunks(|chunk| {
            let mut energies = Vec::with_capacity(chunk.len());
            let mut signs = Vec::with_capacity(chunk.len());
            let first = ensemble.config_at(chunk.start);
            let mut e = energy(first, couplings);
            chunk.walk(|_, config, next| {
                energies.push(e);
                signs.push(config.logical_x_sign(lattice) < 0);
                if let Some(flip) = next {
                    // pairs straddling the flipped set change sign
                    let mut cross = Complex64::new(0.0, 0.0);
                    for i in flip.iter() {
                        let si = config.spin(i) as f64;
                        for &(j, jij) in &adjacency[i] {
                            if !flip.contains(j) {
                                cross += jij * (si * config.spin(j) as f64);
                            }
                        }
                    }
                    e -= 4.0 * cross;
                }
            });
            (energies, signs)
        });
        let mut energies = Vec::with_capacity(ensemble.count() as usize);
        let mut negative_x = Vec::with_capacity(ensemble.count() as usize);
        for (e, s) in parts {
            energies.extend(e);
            negative_x.extend(s);
        }
        let (min_re, max_re) = energies
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.re), hi.max(e.re)));
        Ok(Self {
            energies,
            negative_x,
            min_re,
            max_re,
        })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `min Re E`, the default stabilising offset.
    pub fn min_real_energy(&self) -> f64 {
        self.min_re
    }

    pub fn amplitudes(&self, beta: f64) -> Result<AmplitudeResult, SpinModelError> {
        self.amplitudes_with_offset(beta, self.min_re)
    }

    /// `A`, `B` with weights `exp[-β(E - offset)]`.
    pub fn amplitudes_with_offset(&self, beta: f64, offset: f64) -> Result<AmplitudeResult, SpinModelError> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(SpinModelError::InvalidBeta(beta));
        }
        let spread = (self.max_re - offset).abs().max((self.min_re - offset).abs());
        if !(beta * spread).is_finite() || beta * (offset - self.min_re) > f64::MAX_EXP as f64 * std::f64::consts::LN_2 {
            return Err(SpinModelError::Overflow { beta, spread });
        }
        let parts: Vec<(ComplexSum, ComplexSum)> = self
            .energies
            .par_chunks(CHUNK_LEN as usize)
            .zip(self.negative_x.par_chunks(CHUNK_LEN as usize))
            .map(|(es, signs)| {
                let mut a = ComplexSum::default();
                let mut b = ComplexSum::default();
                for (e, &neg) in es.iter().zip(signs) {
                    let w = (-beta * (e - offset)).exp();
                    a.add(w);
                    if neg {
                        b.add(-w);
                    } else {
                        b.add(w);
                    }
                }
                (a, b)
            })
            .collect();
        let mut a = ComplexSum::default();
        let mut b = ComplexSum::default();
        for (pa, pb) in &parts {
            a.merge(pa);
            b.merge(pb);
        }
        AmplitudeResult::new(beta, a.value(), b.value(), offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeResult {
    pub beta: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub fidelity: f64,
    pub energy_offset: f64,
}

impl AmplitudeResult {
    /// Prefactors common to `A` and `B` (`χ/2^N`, the star normalisation)
    /// are left out; they cancel in the fidelity.
    pub fn new(beta: f64, a: Complex64, b: Complex64, energy_offset: f64) -> Result<Self, SpinModelError> {
        let mut r = Self {
            beta,
            a,
            b,
            fidelity: f64::NAN,
            energy_offset,
        };
        r.fidelity = fidelity(&r)?;
        Ok(r)
    }

    /// Multiplies `A` and `B` by a common positive prefactor.
    pub fn with_prefactor(self, c: f64) -> Result<Self, SpinModelError> {
        Self::new(self.beta, self.a * c, self.b * c, self.energy_offset)
    }
}

/// `F = 1/√(1 + |B/A|²)`.
pub fn fidelity(result: &AmplitudeResult) -> Result<f64, SpinModelError> {
    if result.a.norm() == 0.0 || !result.a.norm().is_finite() {
        return Err(SpinModelError::DegenerateAmplitude { beta: result.beta });
    }
    let ratio = result.b.norm() / result.a.norm();
    Ok(1.0 / (1.0 + ratio * ratio).sqrt())
}

/// Direct enumeration of `A` and `B` at one inverse temperature.
pub fn amplitudes(
    lattice: &Lattice,
    ensemble: &RestrictedEnsemble,
    couplings: &CouplingMatrix,
    beta: f64,
) -> Result<AmplitudeResult, SpinModelError> {
    EnergyTable::build(lattice, ensemble, couplings)?.amplitudes(beta)
}

/// Amplitudes over an ascending β grid, sharing one energy table.
pub fn fidelity_sweep(
    lattice: &Lattice,
    couplings: &CouplingMatrix,
    beta_grid: &[f64],
) -> Result<Vec<AmplitudeResult>, SpinModelError> {
    if beta_grid.is_empty() || beta_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(SpinModelError::UnsortedGrid);
    }
    let ensemble = build_ensemble(lattice)?;
    let table = EnergyTable::build(lattice, &ensemble, couplings)?;
    beta_grid.iter().map(|&b| table.amplitudes(b)).collect()
}

/// Configuration counts keyed by the number of antiparallel nearest-neighbour
/// pairs, split by the sign of `⟨X̄⟩`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DosHistogram {
    pub pair_count: usize,
    pub j: Complex64,
    /// `key → (g_plus, g_minus)`.
    pub entries: BTreeMap<usize, (u64, u64)>,
}

impl DosHistogram {
    pub fn total(&self) -> u64 {
        self.entries.values().map(|(p, m)| p + m).sum()
    }

    /// `E = 2J(P_aligned - P_anti) = 2J(P - 2k)`.
    pub fn energy(&self, key: usize) -> Complex64 {
        2.0 * self.j * (self.pair_count as f64 - 2.0 * key as f64)
    }

    pub fn amplitudes(&self, beta: f64) -> Result<AmplitudeResult, SpinModelError> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(SpinModelError::InvalidBeta(beta));
        }
        let offset = self
            .entries
            .keys()
            .map(|&k| self.energy(k).re)
            .fold(f64::INFINITY, f64::min);
        let mut a = ComplexSum::default();
        let mut b = ComplexSum::default();
        for (&k, &(plus, minus)) in &self.entries {
            let w = (-beta * (self.energy(k) - offset)).exp();
            a.add(w * (plus + minus) as f64);
            b.add(w * (plus as f64 - minus as f64));
        }
        AmplitudeResult::new(beta, a.value(), b.value(), offset)
    }
}

/// Uniform value of `couplings` if they are non-zero exactly on the
/// nearest-neighbour pairs.
pub fn nearest_neighbor_value(lattice: &Lattice, couplings: &CouplingMatrix) -> Option<Complex64> {
    if let CouplingSource::NearestNeighbor { j } = couplings.source {
        if j == Complex64::new(0.0, 0.0) {
            return None;
        }
    }
    let j = couplings.uniform_value()?;
    let pairs = neighbor_pairs(lattice, nearest_neighbor_range(&lattice.spec));
    let nonzero: usize = couplings.adjacency().iter().map(Vec::len).sum();
    let all_nn = pairs.iter().all(|&(a, b, _)| couplings.get(a, b) == j);
    (all_nn && nonzero == 2 * pairs.len()).then_some(j)
}

pub fn density_of_states(
    lattice: &Lattice,
    ensemble: &RestrictedEnsemble,
    couplings: &CouplingMatrix,
) -> Result<DosHistogram, SpinModelError> {
    check_size(lattice, couplings)?;
    ensemble.guard()?;
    let j = nearest_neighbor_value(lattice, couplings).ok_or(SpinModelError::NotNearestNeighbor)?;
    let pairs = neighbor_pairs(lattice, nearest_neighbor_range(&lattice.spec));
    let neighbors = {
        let mut nb = vec![Vec::new(); lattice.n_qubits()];
        for &(a, b, _) in &pairs {
            nb[a].push(b);
            nb[b].push(a);
        }
        nb
    };
    let antiparallel = |config: SpinConfig| pairs.iter().filter(|&&(a, b, _)| config.spin(a) != config.spin(b)).count();
    let parts = ensemble.map_chunks(|chunk| {
        let mut local: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
        let mut k = antiparallel(ensemble.config_at(chunk.start)) as i64;
        chunk.walk(|_, config, next| {
            let slot = local.entry(k as usize).or_default();
            if config.logical_x_sign(lattice) > 0 {
                slot.0 += 1;
            } else {
                slot.1 += 1;
            }
            if let Some(flip) = next {
                for i in flip.iter() {
                    for &nbr in &neighbors[i] {
                        if !flip.contains(nbr) {
                            k += if config.spin(i) == config.spin(nbr) { 1 } else { -1 };
                        }
                    }
                }
            }
        });
        local
    });
    let mut entries = BTreeMap::new();
    for part in parts {
        for (k, (p, m)) in part {
            let slot: &mut (u64, u64) = entries.entry(k).or_default();
            slot.0 += p;
            slot.1 += m;
        }
    }
    Ok(DosHistogram {
        pair_count: pairs.len(),
        j,
        entries,
    })
}

/// Reference sum over all `2^N` x-configurations, keeping only those that
/// satisfy every star constraint.
pub fn brute_force_amplitudes(
    lattice: &Lattice,
    couplings: &CouplingMatrix,
    beta: f64,
) -> Result<AmplitudeResult, SpinModelError> {
    let n = lattice.n_qubits();
    if n > MAX_BRUTE_FORCE_QUBITS {
        return Err(SpinModelError::BruteForceTooLarge {
            qubits: n,
            max: MAX_BRUTE_FORCE_QUBITS,
        });
    }
    check_size(lattice, couplings)?;
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(SpinModelError::InvalidBeta(beta));
    }
    let members: Vec<(Complex64, i8)> = (0..1u128 << n)
        .map(|mask| SpinConfig { flips: QubitSet(mask) })
        .filter(|c| c.satisfies_stars(lattice))
        .map(|c| (energy(c, couplings), c.logical_x_sign(lattice)))
        .collect();
    let offset = members.iter().map(|(e, _)| e.re).fold(f64::INFINITY, f64::min);
    let mut a = ComplexSum::default();
    let mut b = ComplexSum::default();
    for (e, sign) in members {
        let w = (-beta * (e - offset)).exp();
        a.add(w);
        b.add(w * sign as f64);
    }
    AmplitudeResult::new(beta, a.value(), b.value(), offset)
}
