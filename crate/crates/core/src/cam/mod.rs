//! Critical coupling of the nearest-neighbour model: cluster mean-field
//! self-consistency (coherent anomaly method), finite-size extrapolation and
//! the low-temperature self-avoiding-walk estimate.
//!
//! For a cluster Ω with central spin S₀ and boundary ∂Ω the mean-field
//! condition `1 - β|J| Σ_{i∈∂Ω} ⟨S₀ S_i⟩ = 0` fixes β_c; the effective field
//! drops out of this condition and is never represented.

use crate::lattice::{build_lattice, nearest_neighbor_range, neighbor_pairs, Lattice, LatticeError, LatticeSpec, QubitSet};
use crate::spinmodel::{build_ensemble, SpinConfig, SpinModelError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CamError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    SpinModel(#[from] SpinModelError),
    #[error("coupling must be finite and non-zero, got {0}")]
    InvalidCoupling(f64),
    #[error("inverse temperature must be finite and non-negative, got {0}")]
    InvalidBeta(f64),
    #[error("no sign change of the self-consistency residual on β|J| ∈ [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("bracket [{lo}, {hi}] is not a positive interval")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("extrapolation needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("extrapolation needs at least two distinct sizes and positive β_c")]
    DegenerateFit,
    #[error("fit intercept {0} is not a positive temperature")]
    NonPositiveIntercept(f64),
    #[error("invalid estimate parameters: mu = {mu}, coord = {coord}")]
    InvalidEstimate { mu: f64, coord: u32 },
}

/// How nearest-neighbour bonds enter the cluster energy
/// `E = c·J·Σ_{⟨ij⟩} s_i s_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondCounting {
    /// Each pair once, `c = 1`.
    Single,
    /// Ordered pairs `i ≠ j`, `c = 2` (the fidelity-model convention).
    Double,
}

impl BondCounting {
    fn factor(self) -> f64 {
        match self {
            Self::Single => 1.0,
            Self::Double => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelatorVariant {
    /// `⟨S₀ S_i⟩`.
    Raw,
    /// `⟨S₀ S_i⟩ - ⟨S₀⟩⟨S_i⟩`.
    Connected,
}

/// Linear size assigned to an `n × n` cluster for the extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeConvention {
    /// `L = n + 1`, the length of the shortest logical path.
    CodeDistance,
    /// `L = n`.
    Rows,
}

impl SizeConvention {
    pub fn linear_size(self, spec: &LatticeSpec) -> f64 {
        let n = spec.n.min(spec.m) as f64;
        match self {
            Self::CodeDistance => n + 1.0,
            Self::Rows => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CamOptions {
    pub bonds: BondCounting,
    pub variant: CorrelatorVariant,
    pub size_convention: SizeConvention,
    /// Search interval for `β|J|`.
    pub bracket: (f64, f64),
    /// Bisection stops once the interval is this small relative to β.
    pub rel_tol: f64,
}

impl Default for CamOptions {
    fn default() -> Self {
        Self {
            bonds: BondCounting::Single,
            variant: CorrelatorVariant::Raw,
            size_convention: SizeConvention::CodeDistance,
            bracket: (1e-4, 2.0),
            rel_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CamCluster {
    pub lattice: Lattice,
    pub central: usize,
    pub boundary: QubitSet,
    pub j: f64,
    pub bonds: BondCounting,
}

impl CamCluster {
    /// Central spin: qubit closest to the centroid, lowest id on ties.
    /// Boundary: every other qubit on the outermost row or column of edges.
    pub fn new(lattice: Lattice, j: f64, bonds: BondCounting) -> Result<Self, CamError> {
        if !(j.is_finite() && j != 0.0) {
            return Err(CamError::InvalidCoupling(j));
        }
        let n = lattice.n_qubits() as f64;
        let (sx, sy) = lattice.positions.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
        let (cx, cy) = (sx / n, sy / n);
        let dist = |p: &[f64; 2]| (p[0] - cx).hypot(p[1] - cy);
        let mut central = 0;
        for (q, p) in lattice.positions.iter().enumerate() {
            if dist(p) < dist(&lattice.positions[central]) - 1e-12 {
                central = q;
            }
        }
        let (xmin, xmax, ymin, ymax) = lattice.positions.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| (a.min(p[0]), b.max(p[0]), c.min(p[1]), d.max(p[1])),
        );
        let boundary = QubitSet::from_ids(lattice.positions.iter().enumerate().filter_map(|(q, p)| {
            let outer = p[0] == xmin || p[0] == xmax || p[1] == ymin || p[1] == ymax;
            (outer && q != central).then_some(q)
        }));
        Ok(Self {
            lattice,
            central,
            boundary,
            j,
            bonds,
        })
    }

    pub fn square(n: usize, j: f64, bonds: BondCounting) -> Result<Self, CamError> {
        Self::new(build_lattice(LatticeSpec::square(n))?, j, bonds)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Level {
    count: u64,
    central: i64,
    /// Per boundary site, `Σ s₀ s_i` and `Σ s_i`.
    products: Vec<i64>,
    spins: Vec<i64>,
}

/// Exact boundary correlations of a cluster, grouped by the number of
/// antiparallel nearest-neighbour pairs so that any β costs O(levels).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    pub j: f64,
    pub bonds: BondCounting,
    pub pair_count: usize,
    pub boundary_size: usize,
    levels: BTreeMap<usize, Level>,
}

impl CorrelationProfile {
    pub fn build(cluster: &CamCluster) -> Result<Self, CamError> {
        let lattice = &cluster.lattice;
        let ensemble = build_ensemble(lattice)?;
        let pairs = neighbor_pairs(lattice, nearest_neighbor_range(&lattice.spec));
        let boundary: Vec<usize> = cluster.boundary.iter().collect();
        let nb = boundary.len();
        let s0 = cluster.central;
        let parts = ensemble.map_chunks(|chunk| {
            let mut local: BTreeMap<usize, Level> = BTreeMap::new();
            chunk.walk(|_, config: SpinConfig, _| {
                let k = pairs.iter().filter(|&&(a, b, _)| config.spin(a) != config.spin(b)).count();
                let level = local.entry(k).or_insert_with(|| Level {
                    count: 0,
                    central: 0,
                    products: vec![0; nb],
                    spins: vec![0; nb],
                });
                let c = config.spin(s0) as i64;
                level.count += 1;
                level.central += c;
                for (slot, &q) in boundary.iter().enumerate() {
                    let s = config.spin(q) as i64;
                    level.products[slot] += c * s;
                    level.spins[slot] += s;
                }
            });
            local
        });
        let mut levels: BTreeMap<usize, Level> = BTreeMap::new();
        for part in parts {
            for (k, l) in part {
                match levels.get_mut(&k) {
                    None => {
                        levels.insert(k, l);
                    }
                    Some(acc) => {
                        acc.count += l.count;
                        acc.central += l.central;
                        for i in 0..nb {
                            acc.products[i] += l.products[i];
                            acc.spins[i] += l.spins[i];
                        }
                    }
                }
            }
        }
        Ok(Self {
            j: cluster.j,
            bonds: cluster.bonds,
            pair_count: pairs.len(),
            boundary_size: nb,
            levels,
        })
    }

    pub fn total(&self) -> u64 {
        self.levels.values().map(|l| l.count).sum()
    }

    fn energy(&self, k: usize) -> f64 {
        self.bonds.factor() * self.j * (self.pair_count as f64 - 2.0 * k as f64)
    }

    /// `Σ_{i∈∂Ω} ⟨S₀ S_i⟩` (or its connected version) at inverse temperature β.
    pub fn boundary_sum(&self, beta: f64, variant: CorrelatorVariant) -> Result<f64, CamError> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(CamError::InvalidBeta(beta));
        }
        let offset = self.levels.keys().map(|&k| self.energy(k)).fold(f64::INFINITY, f64::min);
        let mut z = 0.0;
        let mut corr = 0.0;
        let mut m0 = 0.0;
        let mut mi = vec![0.0; self.boundary_size];
        for (&k, l) in &self.levels {
            let w = (-beta * (self.energy(k) - offset)).exp();
            z += w * l.count as f64;
            corr += w * l.products.iter().sum::<i64>() as f64;
            m0 += w * l.central as f64;
            for (acc, &s) in mi.iter_mut().zip(&l.spins) {
                *acc += w * s as f64;
            }
        }
        let raw = corr / z;
        Ok(match variant {
            CorrelatorVariant::Raw => raw,
            CorrelatorVariant::Connected => raw - (m0 / z) * mi.iter().map(|m| m / z).sum::<f64>(),
        })
    }

    /// `1 - β|J| Σ⟨S₀ S_i⟩` as a function of `x = β|J|`.
    pub fn residual(&self, x: f64, variant: CorrelatorVariant) -> Result<f64, CamError> {
        Ok(1.0 - x * self.boundary_sum(x / self.j.abs(), variant)?)
    }
}

/// Convenience wrapper that enumerates the cluster for a single β.
pub fn boundary_correlation_sum(
    cluster: &CamCluster,
    beta: f64,
    variant: CorrelatorVariant,
) -> Result<f64, CamError> {
    CorrelationProfile::build(cluster)?.boundary_sum(beta, variant)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CamSolution {
    pub beta_c: f64,
    pub beta_c_j: f64,
    pub residual: f64,
    pub iterations: u32,
}

/// Bisection for the root of the self-consistency residual in `β|J|`.
pub fn solve_beta_c(profile: &CorrelationProfile, opts: &CamOptions) -> Result<CamSolution, CamError> {
    let (mut lo, mut hi) = opts.bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(CamError::InvalidBracket { lo, hi });
    }
    let f_lo = profile.residual(lo, opts.variant)?;
    let f_hi = profile.residual(hi, opts.variant)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(CamError::NoSignChange { lo, hi });
    }
    let mut iterations = 0;
    while hi - lo > opts.rel_tol * hi && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = profile.residual(mid, opts.variant)?;
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let x = 0.5 * (lo + hi);
    Ok(CamSolution {
        beta_c: x / profile.j.abs(),
        beta_c_j: x,
        residual: profile.residual(x, opts.variant)?,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the intercept (zero for an exact fit).
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub fit: LinearFit,
    pub beta_c: f64,
    pub beta_c_stderr: f64,
}

/// Least-squares fit of `T_c = 1/β_c` against `1/L`; the intercept is the
/// infinite-size temperature.
pub fn extrapolate(points: &[(f64, f64)]) -> Result<Extrapolation, CamError> {
    if points.len() < 3 {
        return Err(CamError::TooFewPoints(points.len()));
    }
    if points.iter().any(|&(l, b)| !(l > 0.0 && b > 0.0 && l.is_finite() && b.is_finite())) {
        return Err(CamError::DegenerateFit);
    }
    let xs: Vec<f64> = points.iter().map(|&(l, _)| 1.0 / l).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, b)| 1.0 / b).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-14 * xs.iter().map(|x| x * x).sum::<f64>() {
        return Err(CamError::DegenerateFit);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let sigma2 = if points.len() > 2 { ssr / (n - 2.0) } else { 0.0 };
    let sum_x2: f64 = xs.iter().map(|x| x * x).sum();
    let stderr = (sigma2 * sum_x2 / (n * sxx)).sqrt();
    if !(intercept > 0.0) {
        return Err(CamError::NonPositiveIntercept(intercept));
    }
    Ok(Extrapolation {
        fit: LinearFit { slope, intercept, stderr },
        beta_c: 1.0 / intercept,
        beta_c_stderr: stderr / (intercept * intercept),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub n: usize,
    pub m: usize,
    pub qubits: usize,
    pub linear_size: f64,
    pub central: usize,
    pub boundary_size: usize,
    pub beta_c_j: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CamResult {
    pub per_cluster: Vec<ClusterResult>,
    pub extrapolation: Extrapolation,
    pub abscissa: String,
    pub options: CamOptions,
}

/// Solves every square cluster of the given sizes and extrapolates.
pub fn run_cam(sizes: &[usize], j: f64, opts: &CamOptions) -> Result<CamResult, CamError> {
    let mut per_cluster = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let cluster = CamCluster::square(n, j, opts.bonds)?;
        let profile = CorrelationProfile::build(&cluster)?;
        let sol = solve_beta_c(&profile, opts)?;
        per_cluster.push(ClusterResult {
            n,
            m: n,
            qubits: cluster.lattice.n_qubits(),
            linear_size: opts.size_convention.linear_size(&cluster.lattice.spec),
            central: cluster.central,
            boundary_size: profile.boundary_size,
            beta_c_j: sol.beta_c_j,
            residual: sol.residual,
        });
    }
    let points: Vec<(f64, f64)> = per_cluster.iter().map(|c| (c.linear_size, c.beta_c_j)).collect();
    Ok(CamResult {
        extrapolation: extrapolate(&points)?,
        per_cluster,
        abscissa: "1/L".into(),
        options: *opts,
    })
}

/// Connective constant `mu` of the self-avoiding walks and the number
/// `coord` of neighbours each flipped qubit interacts with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateParams {
    pub mu: f64,
    pub coord: u32,
}

impl Default for EstimateParams {
    fn default() -> Self {
        Self { mu: 2.64, coord: 4 }
    }
}

impl EstimateParams {
    pub fn validate(&self) -> Result<(), CamError> {
        if !(self.mu >= 1.0 && self.mu.is_finite() && self.coord >= 1) {
            return Err(CamError::InvalidEstimate {
                mu: self.mu,
                coord: self.coord,
            });
        }
        Ok(())
    }
}

/// Energy–entropy balance of a logical-error walk: `β_c J = ln μ / (2n)`.
pub fn low_t_estimate(params: &EstimateParams) -> Result<f64, CamError> {
    params.validate()?;
    Ok(params.mu.ln() / (2.0 * params.coord as f64))
}

/// Upper bound on the threshold flip probability, `ln μ / (4n)`.
pub fn p_threshold_bound(params: &EstimateParams) -> Result<f64, CamError> {
    params.validate()?;
    Ok(params.mu.ln() / (4.0 * params.coord as f64))
}
