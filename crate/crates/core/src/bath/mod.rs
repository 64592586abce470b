//! Bosonic-bath correlators in two spatial dimensions, the effective
//! couplings they induce, and single-qubit flip probabilities.
//!
//! Units follow the caller: lengths, times and frequencies only need to be
//! mutually consistent (the usual choice is `a = v = ω0 = 1`). Imaginary
//! parts are stored as the real number `g` with `𝒢^(I) = i·g`.

pub mod quadrature;

use crate::lattice::{nearest_neighbor_range, neighbor_pairs, Lattice};
use num_complex::Complex64;
use quadrature::{hankel_integral, Estimate, HankelKernel, KernelTerm, QuadratureError, QuadratureOptions, Trig};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Spatial dimension of the bath.
pub const BATH_DIMENSION: u32 = 2;

/// Relative half-width of the excluded ring around `d = vΔ` for `s = +1/2`.
pub const LIGHT_CONE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BathError {
    #[error("spectral exponent {0} unsupported (use -0.5, 0 or 0.5)")]
    UnsupportedExponent(f64),
    #[error("invalid bath parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("on-site correlator diverges for s = {0}; supply a UV cutoff")]
    CutoffRequired(f64),
    #[error("distance {d} lies on the light cone vΔ = {light_cone}")]
    LightConeSingularity { d: f64, light_cone: f64 },
    #[error("negative distance {0}")]
    NegativeDistance(f64),
    #[error("flip probability must lie in [0, 1/2), got {0}")]
    ProbabilityOutOfRange(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Exponent `s` of the coupling `|k|^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum SpectralExponent {
    SubOhmic,
    Ohmic,
    SuperOhmic,
}

impl SpectralExponent {
    pub fn value(self) -> f64 {
        match self {
            Self::SubOhmic => -0.5,
            Self::Ohmic => 0.0,
            Self::SuperOhmic => 0.5,
        }
    }

    pub const ALL: [SpectralExponent; 3] = [Self::SubOhmic, Self::Ohmic, Self::SuperOhmic];

    /// On-site `𝒢^(R)` is UV divergent when `D + 2s ≥ 2`.
    pub fn needs_cutoff(self) -> bool {
        BATH_DIMENSION as f64 + 2.0 * self.value() >= 2.0
    }
}

impl TryFrom<f64> for SpectralExponent {
    type Error = BathError;
    fn try_from(s: f64) -> Result<Self, BathError> {
        if s == -0.5 {
            Ok(Self::SubOhmic)
        } else if s == 0.0 {
            Ok(Self::Ohmic)
        } else if s == 0.5 {
            Ok(Self::SuperOhmic)
        } else {
            Err(BathError::UnsupportedExponent(s))
        }
    }
}

impl From<SpectralExponent> for f64 {
    fn from(s: SpectralExponent) -> f64 {
        s.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathParams {
    pub s: SpectralExponent,
    #[serde(default = "one")]
    pub v: f64,
    #[serde(default = "one")]
    pub omega0: f64,
    pub delta: f64,
    pub lambda: f64,
    #[serde(default)]
    pub cutoff: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl BathParams {
    /// Dimensionless defaults `v = ω0 = 1`, no cutoff.
    pub fn new(s: SpectralExponent, delta: f64, lambda: f64) -> Self {
        Self {
            s,
            v: 1.0,
            omega0: 1.0,
            delta,
            lambda,
            cutoff: None,
        }
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    pub fn validate(&self) -> Result<(), BathError> {
        let positive = [("v", self.v), ("omega0", self.omega0), ("delta", self.delta)];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(BathError::InvalidParameter { name, value });
            }
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(BathError::InvalidParameter {
                name: "lambda",
                value: self.lambda,
            });
        }
        if let Some(c) = self.cutoff {
            if !(c.is_finite() && c > 0.0) {
                return Err(BathError::InvalidParameter { name: "cutoff", value: c });
            }
        }
        Ok(())
    }

    /// Light-cone radius `vΔ`.
    pub fn light_cone(&self) -> f64 {
        self.v * self.delta
    }

    fn check_distance(&self, d: f64) -> Result<(), BathError> {
        self.validate()?;
        if d < 0.0 || d.is_nan() {
            return Err(BathError::NegativeDistance(d));
        }
        if self.s == SpectralExponent::SuperOhmic && d > 0.0 {
            let c = self.light_cone();
            if (d - c).abs() <= LIGHT_CONE_EPS * c {
                return Err(BathError::LightConeSingularity { d, light_cone: c });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorValue {
    pub real_part: f64,
    pub imag_magnitude: f64,
}

/// Closed-form `𝒢^(R)(d)`. At `d = 0` the Ohmic and super-Ohmic cases need
/// `bath.cutoff`; the Ohmic value uses the regularisation
/// `ln(2vΔΛ)/(πω0²)`, the super-Ohmic one the hard-cutoff integral.
pub fn g_real(bath: &BathParams, d: f64) -> Result<f64, BathError> {
    bath.check_distance(d)?;
    let BathParams { v, omega0: w, delta, .. } = *bath;
    let c = bath.light_cone();
    let value = match bath.s {
        SpectralExponent::SubOhmic => {
            if d <= c {
                -d / (PI * v * w) + delta / (2.0 * w)
            } else {
                let x = c / d;
                -d / (PI * v * w) + delta / (PI * w) * (x.asin() + ((d / c).powi(2) - 1.0).sqrt())
            }
        }
        SpectralExponent::Ohmic => {
            if d == 0.0 {
                let cutoff = bath.cutoff.ok_or(BathError::CutoffRequired(0.0))?;
                (2.0 * c * cutoff).ln() / (PI * w * w)
            } else if d <= c {
                (c / d).acosh() / (PI * w * w)
            } else {
                0.0
            }
        }
        SpectralExponent::SuperOhmic => {
            let pref = v / (PI * w.powi(3));
            if d == 0.0 {
                let cutoff = bath.cutoff.ok_or(BathError::CutoffRequired(0.5))?;
                pref * (cutoff - (cutoff * c).sin() / c)
            } else if d < c {
                pref / d
            } else {
                pref * (1.0 / d - 1.0 / (d * d - c * c).sqrt())
            }
        }
    };
    Ok(value)
}

/// Closed-form `g` with `𝒢^(I)(d) = i·g`. Zero at `d = 0`.
pub fn g_imag(bath: &BathParams, d: f64) -> Result<f64, BathError> {
    bath.check_distance(d)?;
    if d == 0.0 {
        return Ok(0.0);
    }
    let BathParams { v, omega0: w, delta, .. } = *bath;
    let c = bath.light_cone();
    let value = match bath.s {
        SpectralExponent::SubOhmic => {
            if d < c {
                let x = c / d;
                -delta / (PI * w) * ((x * x - 1.0).sqrt() + x).ln() + delta / (PI * w) * (1.0 - (d / c).powi(2)).sqrt()
            } else {
                0.0
            }
        }
        SpectralExponent::Ohmic => {
            if d <= c {
                0.5 / (w * w)
            } else {
                (c / d).asin() / (PI * w * w)
            }
        }
        SpectralExponent::SuperOhmic => {
            if d < c {
                v / (PI * w.powi(3)) / (c * c - d * d).sqrt()
            } else {
                0.0
            }
        }
    };
    Ok(value)
}

pub fn correlator(bath: &BathParams, d: f64) -> Result<CorrelatorValue, BathError> {
    Ok(CorrelatorValue {
        real_part: g_real(bath, d)?,
        imag_magnitude: g_imag(bath, d)?,
    })
}

/// Common prefactor `(v/ω0)^{2+2s} / (π v²)` of the momentum integrals.
fn integral_prefactor(bath: &BathParams) -> f64 {
    let s = bath.s.value();
    (bath.v / bath.omega0).powf(2.0 + 2.0 * s) / (PI * bath.v * bath.v)
}

/// `𝒢^(R)` from its defining integral
/// `∫ dk k^{2s-1} J0(kd) [1 - cos(kvΔ)]`, over `[0, Λ]` when a cutoff is set
/// and over `[0, ∞)` otherwise.
pub fn g_real_quadrature(
    bath: &BathParams,
    d: f64,
    opts: &QuadratureOptions,
) -> Result<Estimate, BathError> {
    bath.check_distance(d)?;
    let c = bath.light_cone();
    let kernel = HankelKernel {
        power: 2.0 * bath.s.value() - 1.0,
        radius: d,
        terms: vec![
            KernelTerm { coeff: 1.0, extra_power: 0, freq: 0.0, trig: Trig::Cos },
            KernelTerm { coeff: -1.0, extra_power: 0, freq: c, trig: Trig::Cos },
        ],
    };
    scaled(bath, hankel_integral(&kernel, bath.cutoff, opts)?)
}

/// `g` from the time-ordered commutator integral. For `s = -1/2` the kernel is
/// `-[kvΔ - sin(kvΔ)]`; for `s = 0, +1/2` the equal-time contact term is
/// dropped and the kernel reduces to `sin(kvΔ)`.
pub fn g_imag_quadrature(
    bath: &BathParams,
    d: f64,
    opts: &QuadratureOptions,
) -> Result<Estimate, BathError> {
    bath.check_distance(d)?;
    if d == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            abs_error: 0.0,
        });
    }
    let c = bath.light_cone();
    let sine = KernelTerm { coeff: 1.0, extra_power: 0, freq: c, trig: Trig::Sin };
    let terms = match bath.s {
        SpectralExponent::SubOhmic => vec![
            KernelTerm { coeff: -c, extra_power: 1, freq: 0.0, trig: Trig::Cos },
            sine,
        ],
        SpectralExponent::Ohmic | SpectralExponent::SuperOhmic => vec![sine],
    };
    let kernel = HankelKernel {
        power: 2.0 * bath.s.value() - 1.0,
        radius: d,
        terms,
    };
    scaled(bath, hankel_integral(&kernel, bath.cutoff, opts)?)
}

fn scaled(bath: &BathParams, est: Estimate) -> Result<Estimate, BathError> {
    let p = integral_prefactor(bath);
    Ok(Estimate {
        value: p * est.value,
        abs_error: p * est.abs_error,
    })
}

/// `Φ = (𝒢^(R) + 𝒢^(I)) / 2`.
pub fn phi(bath: &BathParams, d: f64) -> Result<Complex64, BathError> {
    let g = correlator(bath, d)?;
    Ok(0.5 * Complex64::new(g.real_part, g.imag_magnitude))
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FictitiousTemperature {
    pub beta: f64,
}

/// `β = (1/2π)(λ/ω0)² (ω0Δ)^{-(D+2s-2)}`.
pub fn beta_of(bath: &BathParams) -> FictitiousTemperature {
    let exponent = BATH_DIMENSION as f64 + 2.0 * bath.s.value() - 2.0;
    let beta = (bath.lambda / bath.omega0).powi(2) / (2.0 * PI) * (bath.omega0 * bath.delta).powf(-exponent);
    FictitiousTemperature { beta }
}

/// `λ²/(2β) = π ω0² (ω0Δ)^{D+2s-2}`, independent of `λ`.
fn coupling_normalization(bath: &BathParams) -> f64 {
    let exponent = BATH_DIMENSION as f64 + 2.0 * bath.s.value() - 2.0;
    PI * bath.omega0 * bath.omega0 * (bath.omega0 * bath.delta).powf(exponent)
}

/// `J(d) = (λ²/2β) Φ(d)` for one pair at distance `d`.
pub fn pair_coupling(bath: &BathParams, d: f64) -> Result<Complex64, BathError> {
    Ok(coupling_normalization(bath) * phi(bath, d)?)
}

/// Where a coupling matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSource {
    Bath { params: BathParams, beta: f64 },
    NearestNeighbor { j: Complex64 },
}

/// Symmetric complex couplings `J_ij` with zero diagonal. The spin-model
/// energy is `Σ_{i≠j} J_ij s_i s_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    size: usize,
    entries: Vec<Complex64>,
    pub source: CouplingSource,
}

impl CouplingMatrix {
    pub fn zeros(size: usize, source: CouplingSource) -> Self {
        Self {
            size,
            entries: vec![Complex64::new(0.0, 0.0); size * size],
            source,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.size + j]
    }

    /// Sets both `J_ij` and `J_ji`. Diagonal entries are ignored.
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        if i != j {
            self.entries[i * self.size + j] = value;
            self.entries[j * self.size + i] = value;
        }
    }

    /// Non-zero couplings of each site, ascending by partner id.
    pub fn adjacency(&self) -> Vec<Vec<(usize, Complex64)>> {
        (0..self.size)
            .map(|i| {
                (0..self.size)
                    .filter_map(|j| {
                        let v = self.get(i, j);
                        (v != Complex64::new(0.0, 0.0)).then_some((j, v))
                    })
                    .collect()
            })
            .collect()
    }

    /// Uniform value if every non-zero coupling equals it.
    pub fn uniform_value(&self) -> Option<Complex64> {
        let mut found: Option<Complex64> = None;
        for &v in &self.entries {
            if v != Complex64::new(0.0, 0.0) {
                match found {
                    None => found = Some(v),
                    Some(u) if u != v => return None,
                    _ => {}
                }
            }
        }
        found
    }
}

/// `J_ij = (λ²/2β) Φ(|r_i - r_j|)` for every pair of distinct qubits.
pub fn coupling_matrix(lattice: &Lattice, bath: &BathParams) -> Result<CouplingMatrix, BathError> {
    bath.validate()?;
    let n = lattice.n_qubits();
    let mut out = CouplingMatrix::zeros(
        n,
        CouplingSource::Bath {
            params: *bath,
            beta: beta_of(bath).beta,
        },
    );
    for i in 0..n {
        for j in (i + 1)..n {
            out.set(i, j, pair_coupling(bath, lattice.distance(i, j))?);
        }
    }
    Ok(out)
}

/// `J_ij = j` for qubits at most `a/√2` apart, zero otherwise.
pub fn nn_coupling_matrix(lattice: &Lattice, j: Complex64) -> CouplingMatrix {
    let mut out = CouplingMatrix::zeros(lattice.n_qubits(), CouplingSource::NearestNeighbor { j });
    if j != Complex64::new(0.0, 0.0) {
        for (a, b, _) in neighbor_pairs(lattice, nearest_neighbor_range(&lattice.spec)) {
            out.set(a, b, j);
        }
    }
    out
}

/// `κ` in `ln(1 - 2p) = -κ β`, i.e. `(λ²/4) 𝒢^(R)_rr / β`.
fn flip_rate(bath: &BathParams) -> Result<f64, BathError> {
    let exponent = BATH_DIMENSION as f64 + 2.0 * bath.s.value() - 2.0;
    let onsite = g_real(bath, 0.0)?;
    Ok(0.5 * PI * bath.omega0 * bath.omega0 * (bath.omega0 * bath.delta).powf(exponent) * onsite)
}

/// `p = ½{1 - exp[-(λ²/4) 𝒢^(R)_rr]}`.
pub fn flip_probability(bath: &BathParams) -> Result<f64, BathError> {
    let onsite = g_real(bath, 0.0)?;
    Ok(0.5 * (1.0 - (-0.25 * bath.lambda * bath.lambda * onsite).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapDirection {
    BetaToP,
    PToBeta,
}

/// `β ↔ p` at fixed bath geometry (`s`, `v`, `ω0`, `Δ`, cutoff); `λ` is
/// ignored since `β` stands in for it.
pub fn beta_p_map(bath: &BathParams, direction: MapDirection, value: f64) -> Result<f64, BathError> {
    bath.validate()?;
    let rate = flip_rate(bath)?;
    match direction {
        MapDirection::BetaToP => {
            if !(value >= 0.0) {
                return Err(BathError::InvalidParameter { name: "beta", value });
            }
            Ok(0.5 * (1.0 - (-rate * value).exp()))
        }
        MapDirection::PToBeta => {
            if !(0.0..0.5).contains(&value) {
                return Err(BathError::ProbabilityOutOfRange(value));
            }
            Ok(-(1.0 - 2.0 * value).ln() / rate)
        }
    }
}

/// `χ = exp[-(λ²/4) Σ_i Φ_ii]`.
pub fn chi(lattice: &Lattice, bath: &BathParams) -> Result<f64, BathError> {
    let onsite = phi(bath, 0.0)?.re;
    let n = lattice.n_qubits() as f64;
    Ok((-0.25 * bath.lambda * bath.lambda * n * onsite).exp())
}
