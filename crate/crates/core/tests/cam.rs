mod common;

use surfcode_bath::cam::{
    boundary_correlation_sum, extrapolate, low_t_estimate, p_threshold_bound, run_cam, solve_beta_c, BondCounting,
    CamCluster, CamError, CamOptions, CorrelationProfile, CorrelatorVariant, EstimateParams, SizeConvention,
};

fn boundary_ids(cluster: &CamCluster) -> Vec<usize> {
    cluster.boundary.iter().collect()
}

#[test]
fn correlation_sum_matches_the_filtered_sum() {
    for n in [1, 2] {
        let cluster = CamCluster::square(n, -1.0, BondCounting::Single).unwrap();
        let boundary = boundary_ids(&cluster);
        for beta in [0.0, 0.2, 0.7, 1.5] {
            let fast = boundary_correlation_sum(&cluster, beta, CorrelatorVariant::Raw).unwrap();
            let slow = common::reference_boundary_sum(&cluster.lattice, cluster.central, &boundary, -1.0, beta);
            assert!((fast - slow).abs() < 1e-12 * slow.abs().max(1.0), "n={n} β={beta}");
        }
    }
}

#[test]
fn critical_coupling_of_the_smallest_clusters() {
    for n in [1, 2] {
        let cluster = CamCluster::square(n, -1.0, BondCounting::Single).unwrap();
        let boundary = boundary_ids(&cluster);
        let oracle = common::bisect(
            |x| 1.0 - x * common::reference_boundary_sum(&cluster.lattice, cluster.central, &boundary, -1.0, x),
            1e-4,
            2.0,
            1e-13,
        );
        let profile = CorrelationProfile::build(&cluster).unwrap();
        let sol = solve_beta_c(&profile, &CamOptions::default()).unwrap();
        assert!((sol.beta_c_j - oracle).abs() < 1e-11, "n={n}: {} vs {oracle}", sol.beta_c_j);
        assert!(sol.residual.abs() < 1e-10);
    }
    let cluster = CamCluster::square(2, -1.0, BondCounting::Single).unwrap();
    let sol = solve_beta_c(&CorrelationProfile::build(&cluster).unwrap(), &CamOptions::default()).unwrap();
    assert!((sol.beta_c_j - 0.315_273_188_274_208_6).abs() < 1e-11);
}

#[test]
fn coupling_scale_only_rescales_beta() {
    let opts = CamOptions::default();
    let unit = solve_beta_c(&CorrelationProfile::build(&CamCluster::square(2, -1.0, BondCounting::Single).unwrap()).unwrap(), &opts).unwrap();
    let scaled = solve_beta_c(&CorrelationProfile::build(&CamCluster::square(2, -2.5, BondCounting::Single).unwrap()).unwrap(), &opts).unwrap();
    assert!((unit.beta_c_j - scaled.beta_c_j).abs() < 1e-12);
    assert!((scaled.beta_c - unit.beta_c / 2.5).abs() < 1e-12);
}

#[test]
fn double_counting_halves_the_critical_coupling() {
    let opts = CamOptions::default();
    let single = CorrelationProfile::build(&CamCluster::square(2, -1.0, BondCounting::Single).unwrap()).unwrap();
    let double = CorrelationProfile::build(&CamCluster::square(2, -1.0, BondCounting::Double).unwrap()).unwrap();
    for beta in [0.1, 0.4] {
        let a = single.boundary_sum(2.0 * beta, CorrelatorVariant::Raw).unwrap();
        let b = double.boundary_sum(beta, CorrelatorVariant::Raw).unwrap();
        assert!((a - b).abs() < 1e-13);
    }
    assert!(solve_beta_c(&double, &opts).unwrap().beta_c_j < solve_beta_c(&single, &opts).unwrap().beta_c_j);
}

#[test]
fn correlations_grow_with_beta() {
    let profile = CorrelationProfile::build(&CamCluster::square(3, -1.0, BondCounting::Single).unwrap()).unwrap();
    let mut last = profile.boundary_sum(0.0, CorrelatorVariant::Raw).unwrap();
    assert!(last.abs() < 1e-15);
    for i in 1..60 {
        let s = profile.boundary_sum(0.05 * i as f64, CorrelatorVariant::Raw).unwrap();
        assert!(s >= last - 1e-12);
        assert!(s <= profile.boundary_size as f64 + 1e-12);
        last = s;
    }
}

#[test]
fn connected_variant_is_bounded_by_raw() {
    let profile = CorrelationProfile::build(&CamCluster::square(2, -1.0, BondCounting::Single).unwrap()).unwrap();
    for beta in [0.0, 0.3, 1.0] {
        let raw = profile.boundary_sum(beta, CorrelatorVariant::Raw).unwrap();
        let connected = profile.boundary_sum(beta, CorrelatorVariant::Connected).unwrap();
        assert!(connected <= raw + 1e-12);
    }
}

#[test]
fn cluster_geometry() {
    let cluster = CamCluster::square(2, -1.0, BondCounting::Single).unwrap();
    assert!(!cluster.boundary.contains(cluster.central));
    let p = cluster.lattice.positions[cluster.central];
    assert_eq!(p, [1.0, 1.0]);
    assert!(matches!(CamCluster::square(2, 0.0, BondCounting::Single), Err(CamError::InvalidCoupling(_))));
}

#[test]
fn extrapolation_recovers_an_exact_line() {
    let t0 = 5.2;
    let slope = 1.7;
    let points: Vec<(f64, f64)> = [3.0, 4.0, 5.0].iter().map(|&l| (l, 1.0 / (t0 + slope / l))).collect();
    let fit = extrapolate(&points).unwrap();
    assert!((fit.fit.intercept - t0).abs() < 1e-12);
    assert!((fit.fit.slope - slope).abs() < 1e-12);
    assert!(fit.fit.stderr < 1e-12);
    assert!((fit.beta_c - 1.0 / t0).abs() < 1e-14);
    assert!(matches!(extrapolate(&points[..2]), Err(CamError::TooFewPoints(2))));
    assert!(matches!(extrapolate(&[(3.0, 1.0), (3.0, 2.0), (3.0, 3.0)]), Err(CamError::DegenerateFit)));
}

#[test]
fn full_run_and_conventions() {
    let r = run_cam(&[1, 2, 3], -1.0, &CamOptions::default()).unwrap();
    assert_eq!(r.per_cluster.iter().map(|c| c.linear_size).collect::<Vec<_>>(), vec![2.0, 3.0, 4.0]);
    assert_eq!(r.abscissa, "1/L");
    // larger clusters order at higher temperature
    assert!(r.per_cluster.windows(2).all(|w| w[1].beta_c_j < w[0].beta_c_j));
    assert!(r.extrapolation.beta_c < r.per_cluster[2].beta_c_j);
    let rows = CamOptions {
        size_convention: SizeConvention::Rows,
        ..CamOptions::default()
    };
    let by_rows = run_cam(&[1, 2, 3], -1.0, &rows).unwrap();
    assert_eq!(by_rows.per_cluster.iter().map(|c| c.linear_size).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
    for (a, b) in by_rows.per_cluster.iter().zip(&r.per_cluster) {
        assert_eq!(a.beta_c_j, b.beta_c_j);
    }
    assert!((by_rows.extrapolation.beta_c - r.extrapolation.beta_c).abs() > 1e-3);
    let narrow = CamOptions {
        bracket: (1.0, 2.0),
        ..CamOptions::default()
    };
    assert!(matches!(run_cam(&[2, 3, 4], -1.0, &narrow), Err(CamError::NoSignChange { .. })));
}

#[test]
fn low_temperature_estimates() {
    let p = EstimateParams::default();
    let b = low_t_estimate(&p).unwrap();
    assert!((b - 2.64f64.ln() / 8.0).abs() < 1e-15);
    assert!((p_threshold_bound(&p).unwrap() - b / 2.0).abs() < 1e-15);
    assert!(low_t_estimate(&EstimateParams { mu: 0.5, coord: 4 }).is_err());
    assert!(p_threshold_bound(&EstimateParams { mu: 2.0, coord: 0 }).is_err());
}
