//! Built-in oracle suite run by the `validate` subcommand.

use super::config::Tolerances;
use crate::bath::{g_imag, g_imag_quadrature, g_real, g_real_quadrature, nn_coupling_matrix, BathParams, SpectralExponent};
use crate::cam::extrapolate;
use crate::lattice::{build_lattice, LatticeSpec};
use crate::spinmodel::{brute_force_amplitudes, build_ensemble, EnergyTable};
use num_complex::Complex64;
use serde::Serialize;

/// Relative tolerance of closed forms against quadrature; exact zeros are
/// compared with the quadrature's absolute tolerance instead.
pub const CORRELATOR_REL_TOL: f64 = 1e-6;
pub const AMPLITUDE_REL_TOL: f64 = 1e-12;
pub const OFFSET_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed deviation.
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: deviation <= tolerance,
            deviation,
            tolerance,
        }
    }

    fn failed(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: false,
            deviation: f64::INFINITY,
            tolerance,
        }
    }
}

/// Distance grid `d/vΔ ∈ [0.1, 3]` used by the correlator comparison,
/// minus the super-Ohmic singular ring.
pub fn correlator_grid(s: SpectralExponent) -> Vec<f64> {
    (0..12)
        .map(|k| 0.1 + 2.9 * k as f64 / 11.0)
        .filter(|d| s != SpectralExponent::SuperOhmic || (d - 1.0).abs() > 0.05)
        .collect()
}

/// Scaled deviation: relative error for non-zero references, otherwise the
/// absolute error measured in units of `abs_floor / rel_tol`.
pub fn correlator_deviation(exact: f64, numeric: f64, abs_floor: f64) -> f64 {
    let err = (exact - numeric).abs();
    if exact != 0.0 {
        err / exact.abs()
    } else {
        err / abs_floor * CORRELATOR_REL_TOL
    }
}

fn correlator_checks(tol: &Tolerances) -> Vec<Check> {
    let opts = tol.quadrature();
    SpectralExponent::ALL
        .iter()
        .map(|&s| {
            let bath = BathParams::new(s, 1.0, 1.0);
            let mut worst = 0.0f64;
            for d in correlator_grid(s) {
                let pairs = [
                    (g_real(&bath, d), g_real_quadrature(&bath, d, &opts)),
                    (g_imag(&bath, d), g_imag_quadrature(&bath, d, &opts)),
                ];
                for (exact, numeric) in pairs {
                    match (exact, numeric) {
                        (Ok(e), Ok(q)) => worst = worst.max(correlator_deviation(e, q.value, 10.0 * opts.abs_tol)),
                        _ => return Check::failed(format!("correlators s={}", s.value()), CORRELATOR_REL_TOL),
                    }
                }
            }
            Check::new(format!("correlators s={}", s.value()), worst, CORRELATOR_REL_TOL)
        })
        .collect()
}

fn amplitude_checks() -> Vec<Check> {
    let betas = [0.0, 0.05, 0.15, 0.4, 1.0];
    let mut out = Vec::new();
    for n in [1, 2] {
        let lattice = build_lattice(LatticeSpec::square(n)).expect("small lattice");
        let ensemble = build_ensemble(&lattice).expect("ensemble");
        let expected = 1u64 << (lattice.plaquettes.len() + 1);
        out.push(Check::new(
            format!("ensemble count N={}", lattice.n_qubits()),
            (ensemble.count() as f64 - expected as f64).abs(),
            0.0,
        ));
        for j in [Complex64::new(-1.0, 0.0), Complex64::new(-1.0, 0.7)] {
            let m = nn_coupling_matrix(&lattice, j);
            let name = format!("enumeration vs brute force N={} J={}", lattice.n_qubits(), j);
            let table = match EnergyTable::build(&lattice, &ensemble, &m) {
                Ok(t) => t,
                Err(_) => {
                    out.push(Check::failed(name, AMPLITUDE_REL_TOL));
                    continue;
                }
            };
            let mut worst = 0.0f64;
            let mut ok = true;
            for &beta in &betas {
                match (table.amplitudes(beta), brute_force_amplitudes(&lattice, &m, beta)) {
                    (Ok(g), Ok(b)) => {
                        let scale = b.a.norm();
                        worst = worst.max((g.a - b.a).norm() / scale).max((g.b - b.b).norm() / scale);
                    }
                    _ => ok = false,
                }
            }
            out.push(if ok {
                Check::new(name, worst, AMPLITUDE_REL_TOL)
            } else {
                Check::failed(name, AMPLITUDE_REL_TOL)
            });
        }
    }
    out
}

fn infinite_temperature_check() -> Check {
    let lattice = build_lattice(LatticeSpec::square(2)).expect("lattice");
    let ensemble = build_ensemble(&lattice).expect("ensemble");
    let m = nn_coupling_matrix(&lattice, Complex64::new(-1.0, 0.3));
    match EnergyTable::build(&lattice, &ensemble, &m).and_then(|t| t.amplitudes(0.0)) {
        Ok(r) => Check::new("B(beta=0) = 0", r.b.norm(), 0.0),
        Err(_) => Check::failed("B(beta=0) = 0", 0.0),
    }
}

fn offset_check() -> Check {
    let lattice = build_lattice(LatticeSpec::square(2)).expect("lattice");
    let ensemble = build_ensemble(&lattice).expect("ensemble");
    let m = nn_coupling_matrix(&lattice, Complex64::new(-1.0, 0.5));
    let Ok(table) = EnergyTable::build(&lattice, &ensemble, &m) else {
        return Check::failed("offset invariance", OFFSET_TOL);
    };
    let mut worst = 0.0f64;
    for beta in [0.1, 0.3, 0.8] {
        let base = table.amplitudes(beta);
        for shift in [-2.5, 1.0, 7.0] {
            let shifted = table.amplitudes_with_offset(beta, table.min_real_energy() + shift);
            match (&base, shifted) {
                (Ok(a), Ok(b)) => worst = worst.max((a.fidelity - b.fidelity).abs()),
                _ => return Check::failed("offset invariance", OFFSET_TOL),
            }
        }
    }
    Check::new("offset invariance", worst, OFFSET_TOL)
}

fn fit_check() -> Check {
    let pts: Vec<(f64, f64)> = [2.0, 3.0, 4.0].iter().map(|&l| (l, 1.0 / (5.0 + 1.0 / l))).collect();
    match extrapolate(&pts) {
        Ok(e) => Check::new("extrapolation recovers T_c = 5", (e.fit.intercept - 5.0).abs(), 1e-12),
        Err(_) => Check::failed("extrapolation recovers T_c = 5", 1e-12),
    }
}

pub fn oracle_suite(tol: &Tolerances) -> Vec<Check> {
    let mut checks = correlator_checks(tol);
    checks.extend(amplitude_checks());
    checks.push(infinite_temperature_check());
    checks.push(offset_check());
    checks.push(fit_check());
    checks
}
