mod common;

use surfcode_bath::lattice::{
    build_lattice, logical_x_path, logical_z_path, nearest_neighbor_range, neighbor_pairs, Lattice, LatticeSpec, QubitSet,
};

fn lat(n: usize, m: usize) -> Lattice {
    build_lattice(LatticeSpec::new(n, m)).unwrap()
}

/// An X-type string commutes with every Z-type plaquette and a Z-type string
/// with every X-type star exactly when the overlaps are even.
fn commutes_with_stabilizers(lattice: &Lattice, x_type: &[usize], z_type: &[usize]) -> bool {
    let overlap = |a: &[usize], b: QubitSet| a.iter().filter(|&&q| b.contains(q)).count();
    lattice.plaquettes.iter().all(|p| overlap(x_type, *p) % 2 == 0)
        && lattice.stars.iter().all(|s| overlap(z_type, *s) % 2 == 0)
}

#[test]
fn counting_identities() {
    for n in 1..=6 {
        for m in 1..=6 {
            let l = lat(n, m);
            assert_eq!(l.n_qubits(), n * m + (n + 1) * (m + 1));
            assert_eq!(l.plaquettes.len(), (n + 1) * m);
            assert_eq!(l.stars.len(), (m + 1) * n);
            assert_eq!(l.positions.len(), l.n_qubits());
        }
    }
}

#[test]
fn stabilizers_commute_and_have_boundary_weights() {
    for (n, m) in [(1, 1), (2, 3), (3, 3), (4, 2), (4, 4)] {
        let l = lat(n, m);
        for s in &l.stars {
            assert!(matches!(s.len(), 3 | 4));
            for p in &l.plaquettes {
                assert_eq!(s.overlap(*p) % 2, 0);
            }
        }
        for p in &l.plaquettes {
            assert!(matches!(p.len(), 3 | 4));
        }
        // only bits below N are ever set
        let all = l.all_qubits();
        for s in l.stars.iter().chain(&l.plaquettes).chain([&l.gamma_x, &l.gamma_z]) {
            assert_eq!(s.0 & !all.0, 0);
        }
    }
}

#[test]
fn logical_paths_by_brute_force() {
    for (n, column, expected_len) in [(3, 1, 4), (1, 0, 2)] {
        let l = lat(n, n);
        let x: Vec<usize> = logical_x_path(&l, column).unwrap().iter().collect();
        assert_eq!(x.len(), expected_len);
        let z: Vec<usize> = l.gamma_z.iter().collect();
        assert!(commutes_with_stabilizers(&l, &x, &z));
        let anticommuting = x.iter().filter(|q| z.contains(q)).count();
        assert_eq!(anticommuting, 1);
    }
    let l = lat(1, 1);
    let z = logical_z_path(&l, 0).unwrap();
    assert_eq!(z.len(), 2);
    assert!(commutes_with_stabilizers(&l, &[], &z.iter().collect::<Vec<_>>()));
}

#[test]
fn every_path_choice_is_logical() {
    let l = lat(3, 3);
    for column in 0..=3 {
        for row in 0..=3 {
            let x = logical_x_path(&l, column).unwrap();
            let z = logical_z_path(&l, row).unwrap();
            assert_eq!(x.overlap(z) % 2, 1);
            assert!(commutes_with_stabilizers(&l, &x.iter().collect::<Vec<_>>(), &z.iter().collect::<Vec<_>>()));
        }
    }
    assert!(logical_x_path(&l, 4).is_err());
    assert!(logical_z_path(&l, 4).is_err());
}

#[test]
fn neighbor_pairs_match_distance_scan() {
    for (n, m) in [(1, 1), (2, 2), (3, 2)] {
        let l = lat(n, m);
        let adj = common::nn_matrix(&l);
        let scanned: usize = adj.iter().map(|row| row.iter().filter(|&&b| b).count()).sum::<usize>() / 2;
        assert_eq!(neighbor_pairs(&l, nearest_neighbor_range(&l.spec)).len(), scanned);
    }
    let l = lat(3, 3);
    assert!(neighbor_pairs(&l, 1e-9).is_empty());
    assert_eq!(neighbor_pairs(&l, 3.0 * 2f64.sqrt()).len(), 300);
}

#[test]
fn nearest_pairs_are_not_exactly_the_stabilizer_sharing_pairs() {
    // Every nearest pair shares a star or plaquette, but opposite edges of a
    // plaquette share it without being nearest neighbours.
    let l = lat(2, 2);
    let nn = neighbor_pairs(&l, nearest_neighbor_range(&l.spec));
    let sharing: usize = (0..l.n_qubits())
        .flat_map(|i| (i + 1..l.n_qubits()).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            let q = QubitSet::from_ids([i, j]);
            l.stars.iter().chain(&l.plaquettes).any(|s| s.overlap(q) == 2)
        })
        .count();
    assert!(sharing > nn.len());
}

#[test]
fn scaled_lattice_constant() {
    let spec = LatticeSpec { n: 2, m: 2, a: 2.5 };
    let l = build_lattice(spec).unwrap();
    let unit = lat(2, 2);
    assert_eq!(l.positions, unit.positions);
    assert!((l.distance(0, 1) - 2.5 * unit.distance(0, 1)).abs() < 1e-15);
    assert_eq!(
        neighbor_pairs(&l, nearest_neighbor_range(&spec)).len(),
        neighbor_pairs(&unit, nearest_neighbor_range(&unit.spec)).len()
    );
}

#[test]
fn deterministic_and_exportable() {
    let a = lat(3, 2);
    let b = lat(3, 2);
    assert_eq!(a.positions, b.positions);
    assert_eq!(a.stars, b.stars);
    let json = serde_json::to_string(&a.to_json()).unwrap();
    assert_eq!(json, serde_json::to_string(&b.to_json()).unwrap());
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["stars"].as_array().unwrap().len(), a.stars.len());
    let first = u128::from_str_radix(v["plaquettes"][0].as_str().unwrap(), 16).unwrap();
    assert_eq!(first, a.plaquettes[0].0);
}
