//! Numerical evaluation of the Hankel-type integrals behind the bath
//! correlators,
//!
//! ```text
//! ∫_0^U dk k^q J0(k d) T(k),   T(k) = Σ c · k^e · trig(ω k),
//! ```
//!
//! with `U` either a hard cutoff or infinity. The head of the range is
//! integrated panel by panel with adaptive Gauss–Kronrod. For the infinite
//! tail, `J0` is written in modulus–phase form `J0(x) = M(x) cos θ(x)` with
//! `M² = J0² + Y0²` and `θ = atan2(Y0, J0)` (unwrapped), which splits the
//! integrand into waves with a single monotone phase each. Every wave is
//! summed over half-period cells and the partial sums are extrapolated with
//! Wynn's epsilon algorithm.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("integral diverges: {0}")]
    Divergent(&'static str),
    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    NotConverged { tolerance: f64, estimate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Absolute target for the whole integral.
    pub abs_tol: f64,
    /// Relative target; the looser of the two applies.
    pub rel_tol: f64,
    /// Cap on the number of half-period cells summed per tail wave.
    pub max_tail_cells: usize,
    /// Cap on bisections per adaptive Gauss–Kronrod call.
    pub max_subdivisions: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-12,
            max_tail_cells: 600,
            max_subdivisions: 200,
        }
    }
}

/// Value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            abs_error: self.abs_error + rhs.abs_error,
        }
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// 10-point Gauss weights, paired with the odd entries of XGK.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// One Gauss–Kronrod 21-point rule on `[a, b]`.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for (j, &x) in XGK[..10].iter().enumerate() {
        let dx = half * x;
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    // QUADPACK-style rescaling tends to be too optimistic on the smooth panels
    // we feed it; keep the raw Kronrod-Gauss difference, floored at rounding.
    let floor = 50.0 * f64::EPSILON * value.abs();
    Estimate {
        value,
        abs_error: err.max(floor),
    }
}

/// Globally adaptive Gauss–Kronrod on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Estimate {
    if a == b {
        return Estimate {
            value: 0.0,
            abs_error: 0.0,
        };
    }
    let mut intervals = vec![(a, b, gk21(f, a, b))];
    loop {
        let value: f64 = intervals.iter().map(|iv| iv.2.value).sum();
        let error: f64 = intervals.iter().map(|iv| iv.2.abs_error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || intervals.len() > max_subdivisions {
            return Estimate {
                value,
                abs_error: error,
            };
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.abs_error.total_cmp(&y.1 .2.abs_error))
            .expect("non-empty");
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval cannot be split further in floating point.
            let value: f64 = intervals.iter().map(|iv| iv.2.value).sum();
            return Estimate {
                value,
                abs_error: error,
            };
        }
        intervals.push((lo, mid, gk21(f, lo, mid)));
        intervals.push((mid, hi, gk21(f, mid, hi)));
    }
}

/// Wynn's epsilon extrapolation of a sequence of partial sums. Returns the
/// latest even-column estimate and the spread of the last few estimates.
fn wynn_epsilon(partial_sums: &[f64]) -> Option<(f64, f64)> {
    let n = partial_sums.len();
    if n < 3 {
        return None;
    }
    // eps[k] holds column k; column 0 is the partial sums, column -1 zero.
    let mut prev: Vec<f64> = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial_sums.to_vec();
    let mut estimates = Vec::new();
    let mut col = 0;
    while cur.len() > 1 {
        let next: Vec<f64> = (0..cur.len() - 1)
            .map(|i| {
                let diff = cur[i + 1] - cur[i];
                if diff == 0.0 {
                    f64::INFINITY
                } else {
                    prev[i + 1] + 1.0 / diff
                }
            })
            .collect();
        prev = cur;
        cur = next;
        col += 1;
        if col % 2 == 0 {
            if let Some(&last) = cur.last() {
                if last.is_finite() {
                    estimates.push(last);
                } else {
                    break;
                }
            }
        }
        if cur.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    let best = *estimates.last()?;
    let spread = if estimates.len() >= 2 {
        (estimates[estimates.len() - 1] - estimates[estimates.len() - 2]).abs()
    } else {
        f64::INFINITY
    };
    Some((best, spread))
}

/// Trigonometric factor of one kernel term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trig {
    Cos,
    Sin,
}

/// One term `coeff · k^extra_power · trig(freq · k)` of `T(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTerm {
    pub coeff: f64,
    pub extra_power: i32,
    pub freq: f64,
    pub trig: Trig,
}

/// Integrand `k^power · J0(k · radius) · Σ terms`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelKernel {
    pub power: f64,
    pub radius: f64,
    pub terms: Vec<KernelTerm>,
}

impl HankelKernel {
    pub fn eval(&self, k: f64) -> f64 {
        let bessel = if self.radius == 0.0 {
            1.0
        } else {
            libm::j0(k * self.radius)
        };
        let t: f64 = self
            .terms
            .iter()
            .map(|t| {
                let arg = t.freq * k;
                let trig = match t.trig {
                    Trig::Cos => arg.cos(),
                    Trig::Sin => arg.sin(),
                };
                t.coeff * k.powi(t.extra_power) * trig
            })
            .sum();
        k.powf(self.power) * bessel * t
    }

    fn fastest_frequency(&self) -> f64 {
        let w = self.terms.iter().map(|t| t.freq.abs()).fold(0.0, f64::max);
        self.radius + w
    }

    /// Single-phase pieces of the integrand, valid for every `k > 0`.
    fn waves(&self) -> Vec<Wave> {
        let mut out = Vec::new();
        for t in &self.terms {
            let power = self.power + f64::from(t.extra_power);
            // trig(ωk) = cos(ωk + shift)
            let shift = match t.trig {
                Trig::Cos => 0.0,
                Trig::Sin => -FRAC_PI_2,
            };
            if self.radius == 0.0 {
                out.push(Wave {
                    coeff: t.coeff,
                    power,
                    radius: 0.0,
                    theta_sign: 0.0,
                    freq: t.freq,
                    phase: shift,
                });
            } else {
                // cos θ · cos(ωk + φ) = ½cos(θ + ωk + φ) + ½cos(−θ + ωk + φ)
                for sign in [1.0, -1.0] {
                    out.push(Wave {
                        coeff: 0.5 * t.coeff,
                        power,
                        radius: self.radius,
                        theta_sign: sign,
                        freq: t.freq,
                        phase: shift,
                    });
                }
            }
        }
        out
    }
}

/// Modulus and unwrapped phase of `J0 + i Y0`.
fn bessel_modulus_phase(x: f64) -> (f64, f64) {
    let j = libm::j0(x);
    let y = libm::y0(x);
    let reference = x - FRAC_PI_4;
    let raw = y.atan2(j);
    let mut delta = (raw - reference) % (2.0 * PI);
    if delta > PI {
        delta -= 2.0 * PI;
    } else if delta <= -PI {
        delta += 2.0 * PI;
    }
    (j.hypot(y), reference + delta)
}

/// `coeff · k^power · M(k r) · cos(s θ(k r) + ω k + phase)`; `M ≡ 1`,
/// `θ ≡ 0` when `radius == 0`.
#[derive(Debug, Clone, Copy)]
struct Wave {
    coeff: f64,
    power: f64,
    radius: f64,
    theta_sign: f64,
    freq: f64,
    phase: f64,
}

impl Wave {
    fn eval(&self, k: f64) -> f64 {
        let (modulus, theta) = if self.radius == 0.0 {
            (1.0, 0.0)
        } else {
            bessel_modulus_phase(k * self.radius)
        };
        self.coeff
            * k.powf(self.power)
            * modulus
            * (self.theta_sign * theta + self.freq * k + self.phase).cos()
    }

    /// Asymptotic angular frequency of the phase.
    fn frequency(&self) -> f64 {
        self.theta_sign * self.radius + self.freq
    }

    /// Decay exponent of the amplitude.
    fn amplitude_power(&self) -> f64 {
        if self.radius == 0.0 {
            self.power
        } else {
            self.power - 0.5
        }
    }

    fn tail(&self, start: f64, opts: &QuadratureOptions) -> Result<Estimate, QuadratureError> {
        let p = self.amplitude_power();
        let omega = self.frequency().abs();
        if omega <= 1e-12 * (self.radius + self.freq.abs()).max(1.0) {
            if p >= -1.0 {
                return Err(QuadratureError::Divergent("non-oscillating tail decays too slowly"));
            }
            if self.radius == 0.0 {
                let value = self.coeff * self.phase.cos() * start.powf(p + 1.0) / (-p - 1.0);
                return Ok(Estimate {
                    value,
                    abs_error: f64::EPSILON * value.abs(),
                });
            }
            return Err(QuadratureError::Divergent("tail on the light cone"));
        }
        if p >= 0.0 {
            return Err(QuadratureError::Divergent("oscillating amplitude does not decay"));
        }
        let cell = PI / omega;
        let f = |k: f64| self.eval(k);
        let cell_tol = opts.abs_tol * 1e-2;
        let mut sums = Vec::with_capacity(opts.max_tail_cells);
        let mut running = 0.0;
        let mut quad_err = 0.0;
        let mut last: Option<(f64, f64)> = None;
        let mut tiny_run = 0usize;
        for j in 0..opts.max_tail_cells {
            let a = start + j as f64 * cell;
            let piece = integrate(&f, a, a + cell, cell_tol, opts.rel_tol, opts.max_subdivisions);
            running += piece.value;
            quad_err += piece.abs_error;
            sums.push(running);
            tiny_run = if piece.value.abs() <= 1e-3 * opts.abs_tol { tiny_run + 1 } else { 0 };
            if tiny_run >= 6 {
                return Ok(Estimate {
                    value: running,
                    abs_error: quad_err + 6.0 * 1e-3 * opts.abs_tol,
                });
            }
            // The epsilon table is O(n²); only the recent window matters.
            let window = &sums[sums.len().saturating_sub(40)..];
            if let Some((est, spread)) = wynn_epsilon(window) {
                if let Some((prev_est, _)) = last {
                    let change = (est - prev_est).abs();
                    let err = spread.max(change);
                    if j >= 8 && err <= 0.1 * opts.abs_tol.max(opts.rel_tol * est.abs()) {
                        return Ok(Estimate {
                            value: est,
                            abs_error: err + quad_err,
                        });
                    }
                }
                last = Some((est, spread));
            }
        }
        let estimate = last.map_or(f64::INFINITY, |(_, s)| s);
        Err(QuadratureError::NotConverged {
            tolerance: opts.abs_tol,
            estimate,
        })
    }
}

/// Integrates `kernel` over `[0, upper]`, `upper = None` meaning infinity.
pub fn hankel_integral(
    kernel: &HankelKernel,
    upper: Option<f64>,
    opts: &QuadratureOptions,
) -> Result<Estimate, QuadratureError> {
    let fastest = kernel.fastest_frequency();
    let panel = if fastest > 0.0 { PI / fastest } else { 1.0 };
    let f = |k: f64| kernel.eval(k);
    let panel_tol = opts.abs_tol * 1e-3;

    let head_end = match upper {
        Some(cutoff) => cutoff,
        None => tail_start(kernel),
    };
    let mut total = Estimate {
        value: 0.0,
        abs_error: 0.0,
    };
    let panels = (head_end / panel).ceil().max(1.0) as usize;
    let width = head_end / panels as f64;
    for i in 0..panels {
        let a = i as f64 * width;
        let b = if i + 1 == panels { head_end } else { a + width };
        total = total + integrate(&f, a, b, panel_tol, opts.rel_tol, opts.max_subdivisions);
    }
    if upper.is_none() {
        for wave in kernel.waves() {
            total = total + wave.tail(head_end, opts)?;
        }
    }
    let target = opts.abs_tol.max(opts.rel_tol * total.value.abs());
    if total.abs_error > target {
        return Err(QuadratureError::NotConverged {
            tolerance: target,
            estimate: total.abs_error,
        });
    }
    Ok(total)
}

/// Where the modulus–phase split takes over: far enough out that the
/// difference-frequency phase is monotone.
fn tail_start(kernel: &HankelKernel) -> f64 {
    let d = kernel.radius;
    let mut start: f64 = 1.0;
    if d > 0.0 {
        start = start.max(10.0 / d);
    }
    for t in &kernel.terms {
        let w = t.freq.abs();
        if w > 0.0 {
            start = start.max(10.0 / w);
            let gap = (d - w).abs();
            if d > 0.0 && gap > 0.0 {
                start = start.max(2.0 / (d * gap).sqrt());
            }
        }
    }
    start.min(1e6)
}
