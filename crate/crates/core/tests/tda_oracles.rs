use progspace_core::distmat::{compute_matrix, ComputeOptions};
use progspace_core::metric::Metric;
use progspace_core::oracle::{betti_numbers_at, mst_edge_weights};
use progspace_core::synth::random_metric;
use progspace_core::tda::{
    betti_curve, rename_cycle_adjacency, rename_cycle_fixture, vr_h0, vr_h1, FiltrationConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn h0_deaths_are_mst_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let n = rng.gen_range(2..=40);
        let m = random_metric(&mut rng, n);
        let pairs = vr_h0(&m);
        let mut deaths: Vec<f64> = pairs
            .iter()
            .filter(|p| !p.is_infinite())
            .map(|p| p.death)
            .collect();
        deaths.sort_by(f64::total_cmp);
        assert_eq!(deaths, mst_edge_weights(&m));
        assert_eq!(pairs.len(), n);
    }
}

#[test]
fn betti_curves_match_rank_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..30 {
        let n = rng.gen_range(3..=14);
        let m = random_metric(&mut rng, n);
        let mut radii: Vec<f64> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| m.dist(i, j))
            .collect();
        radii.push(0.0);
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let mut pairs = vr_h0(&m);
        pairs.extend(vr_h1(&m, &FiltrationConfig::default()).unwrap());
        let b0 = betti_curve(&pairs, 0, &radii).unwrap();
        let b1 = betti_curve(&pairs, 1, &radii).unwrap();
        for (k, &r) in radii.iter().enumerate() {
            assert_eq!(
                (b0.counts[k], b1.counts[k]),
                betti_numbers_at(&m, r).unwrap(),
                "r = {r}"
            );
        }
    }
}

#[test]
fn duplicate_point_adds_zero_length_component() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let pts = progspace_core::synth::uniform_points(&mut rng, 8);
    let mut doubled = pts.clone();
    doubled.push(pts[3]);
    let a = vr_h0(&progspace_core::metric::RealMatrix::euclidean(&pts));
    let b = vr_h0(&progspace_core::metric::RealMatrix::euclidean(&doubled));
    assert_eq!(b.len(), a.len() + 1);
    assert_eq!(b.iter().filter(|p| p.death == 0.0).count(), 1);
}

#[test]
fn rename_cycle_has_a_loop() {
    let corpus = rename_cycle_fixture();
    let (m, _) = compute_matrix(&corpus, &ComputeOptions::default()).unwrap();
    for (i, j) in rename_cycle_adjacency() {
        assert_eq!(m.get(i, j), 1);
    }
    let h1 = vr_h1(&m, &FiltrationConfig::default()).unwrap();
    assert!(h1.iter().any(|p| p.birth == 1.0));
    let (b0, b1) = betti_numbers_at(&m, 1.0).unwrap();
    assert_eq!(b0, 1);
    assert!(b1 >= 1);
}
