use stbc_lab::constellation::Constellation;
use stbc_lab::numerics::{theta4, RealMatrix};
use stbc_lab::rotation::*;

/// Exhaustive minimum of `∏|(R·δ)_k|` over all nonzero `δ` with
/// coordinates drawn from pairwise level differences.
fn brute_dp_min(r: &RealMatrix, levels: &[f64]) -> f64 {
    let mut diffs: Vec<f64> = levels.iter().flat_map(|a| levels.iter().map(move |b| a - b)).collect();
    diffs.sort_by(f64::total_cmp);
    diffs.dedup();
    let m = r.nrows();
    let total = diffs.len().pow(m as u32);
    let mut best = f64::INFINITY;
    for code in 0..total {
        let mut c = code;
        let delta: Vec<f64> = (0..m)
            .map(|_| {
                let v = diffs[c % diffs.len()];
                c /= diffs.len();
                v
            })
            .collect();
        if delta.iter().all(|&v| v == 0.0) {
            continue;
        }
        let p: f64 = (0..m).map(|i| (0..m).map(|j| r[(i, j)] * delta[j]).sum::<f64>().abs()).product();
        best = best.min(p);
    }
    best
}

#[test]
fn theta_alone_loses_diversity() {
    let c = Constellation::from_name("4qam").unwrap();
    let d = DifferenceSet::qstbc_group(&c).unwrap();
    let p = product_distance(&theta4(), &d).unwrap();
    assert!(p.dp_min < 1e-12);
    assert!(brute_dp_min(&theta4(), &[-1.0, 1.0]) < 1e-12);
}

#[test]
fn product_distance_matches_brute_force() {
    for m in 2..=4 {
        let r = default_rotation(m).unwrap();
        for levels in [vec![-1.0, 1.0], vec![-3.0, -1.0, 1.0, 3.0]] {
            let d = DifferenceSet::from_levels(&levels, m, 1.0).unwrap();
            let lib = product_distance(r.matrix(), &d).unwrap().dp_min;
            let oracle = brute_dp_min(r.matrix(), &levels);
            assert!((lib - oracle).abs() < 1e-12 * oracle.max(1.0), "m={m}: {lib} vs {oracle}");
            assert!(oracle > 0.1);
        }
    }
}

#[test]
fn optimizer_reports_what_it_achieves() {
    let d = DifferenceSet::from_levels(&[-1.0, 1.0], 3, 1.0).unwrap();
    let few = optimize_rotation(&d, &OptimizerSettings { restarts: 2, seed: 4, ..Default::default() }).unwrap();
    let more = optimize_rotation(&d, &OptimizerSettings { restarts: 6, seed: 4, ..Default::default() }).unwrap();
    assert!((few.dp_min - brute_dp_min(few.rotation.matrix(), &[-1.0, 1.0])).abs() < 1e-12);
    assert!(more.dp_min >= few.dp_min);
    assert!(more.dp_min > 0.3);
    // Deterministic for fixed settings.
    let again = optimize_rotation(&d, &OptimizerSettings { restarts: 2, seed: 4, ..Default::default() }).unwrap();
    assert_eq!(again, few);
}

#[test]
fn refinement_never_loses_ground() {
    let d = DifferenceSet::from_levels(&[-3.0, -1.0, 1.0, 3.0], 2, 1.0).unwrap();
    let start = RotationMatrix::from_givens(2, &[0.3]).unwrap();
    let before = product_distance(start.matrix(), &d).unwrap().dp_min;
    let after = refine_rotation(&d, &start, &OptimizerSettings::default()).unwrap();
    assert!(after.dp_min >= before);
}

#[test]
fn sast_difference_set_needs_product_constellation() {
    let hex = Constellation::from_name("8qam-s").unwrap();
    assert!(DifferenceSet::sast_group(&hex, 3).is_err());
    let rect = Constellation::from_name("8qam-r").unwrap();
    let d = DifferenceSet::sast_group(&rect, 2).unwrap();
    assert_eq!(d.dim(), 2);
}

#[test]
fn rotation_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.txt");
    let r = default_rotation(4).unwrap();
    std::fs::write(&path, r.to_text()).unwrap();
    let back = RotationMatrix::load(&path).unwrap();
    assert!((back.matrix() - r.matrix()).amax() < 1e-15);
    assert!(RotationMatrix::load(&dir.path().join("missing.txt")).is_err());
}
