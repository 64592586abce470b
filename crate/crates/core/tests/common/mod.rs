//! Reference computations written independently of the library's
//! enumeration, energy and quadrature code.

#![allow(dead_code)]

use num_complex::Complex64;
use surfcode_bath::lattice::Lattice;

/// Every x-configuration (as a flip mask) whose overlap with each star is
/// even, found by scanning all `2^N` masks.
pub fn star_filtered(lattice: &Lattice) -> Vec<u128> {
    let n = lattice.n_qubits();
    (0..1u128 << n)
        .filter(|&mask| lattice.stars.iter().all(|s| (s.0 & mask).count_ones() % 2 == 0))
        .collect()
}

/// Nearest-neighbour adjacency from a plain distance scan.
pub fn nn_matrix(lattice: &Lattice) -> Vec<Vec<bool>> {
    let n = lattice.n_qubits();
    let cutoff = lattice.spec.a / 2f64.sqrt() + 1e-9;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (p, q) = (lattice.positions[i], lattice.positions[j]);
                    i != j && lattice.spec.a * (p[0] - q[0]).hypot(p[1] - q[1]) <= cutoff
                })
                .collect()
        })
        .collect()
}

fn spin(mask: u128, i: usize) -> f64 {
    if mask >> i & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Literal double sum over ordered pairs `i ≠ j`.
pub fn ordered_pair_energy(mask: u128, adj: &[Vec<bool>], j: Complex64) -> Complex64 {
    let mut e = Complex64::new(0.0, 0.0);
    for (a, row) in adj.iter().enumerate() {
        for (b, &linked) in row.iter().enumerate() {
            if linked {
                e += j * spin(mask, a) * spin(mask, b);
            }
        }
    }
    e
}

pub fn x_sign(mask: u128, lattice: &Lattice) -> f64 {
    lattice.gamma_x.iter().map(|q| spin(mask, q)).product()
}

/// `(A, B)` from the full star-filtered sum with weights
/// `exp[-β(E - min Re E)]`.
pub fn reference_amplitudes(lattice: &Lattice, j: Complex64, beta: f64) -> (Complex64, Complex64) {
    let adj = nn_matrix(lattice);
    let states: Vec<(Complex64, f64)> = star_filtered(lattice)
        .into_iter()
        .map(|m| (ordered_pair_energy(m, &adj, j), x_sign(m, lattice)))
        .collect();
    let offset = states.iter().map(|(e, _)| e.re).fold(f64::INFINITY, f64::min);
    let mut a = Complex64::new(0.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    for (e, s) in states {
        let w = (-beta * (e - offset)).exp();
        a += w;
        b += w * s;
    }
    (a, b)
}

/// Raw boundary correlation sum of a cluster with bond-once energy
/// `J Σ_{⟨ij⟩} s_i s_j`, from the full star-filtered sum.
pub fn reference_boundary_sum(lattice: &Lattice, central: usize, boundary: &[usize], j: f64, beta: f64) -> f64 {
    let adj = nn_matrix(lattice);
    let states = star_filtered(lattice);
    let energies: Vec<f64> = states
        .iter()
        .map(|&m| 0.5 * ordered_pair_energy(m, &adj, Complex64::new(j, 0.0)).re)
        .collect();
    let emin = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut z = 0.0;
    let mut c = 0.0;
    for (&m, &e) in states.iter().zip(&energies) {
        let w = (-beta * (e - emin)).exp();
        z += w;
        c += w * boundary.iter().map(|&q| spin(m, central) * spin(m, q)).sum::<f64>();
    }
    c / z
}

/// Plain bisection on `[lo, hi]` to absolute width `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "root not bracketed");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Interior local extrema of a sampled curve, ignoring wiggles smaller
/// than `prominence`.
pub fn count_extrema(f: &[f64], prominence: f64) -> usize {
    let mut count = 0;
    let mut direction = 0i8;
    let mut pivot = f[0];
    for &x in &f[1..] {
        let d = x - pivot;
        if d.abs() <= prominence {
            continue;
        }
        let dir = if d > 0.0 { 1 } else { -1 };
        if direction != 0 && dir != direction {
            count += 1;
        }
        direction = dir;
        pivot = x;
    }
    count
}

/// Largest `|ΔF/Δβ|` between consecutive samples.
pub fn max_slope(betas: &[f64], f: &[f64]) -> f64 {
    betas
        .windows(2)
        .zip(f.windows(2))
        .map(|(b, y)| ((y[1] - y[0]) / (b[1] - b[0])).abs())
        .fold(0.0, f64::max)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

pub fn rel_err(a: Complex64, b: Complex64, scale: f64) -> f64 {
    (a - b).norm() / scale
}
