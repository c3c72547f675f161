use progspace_core::oracle::{ted_oracle, ted_oracle_with};
use progspace_core::synth::random_tree;
use progspace_core::ted::{ted, EditCosts};
use progspace_core::tree::SyntaxTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn d(a: &SyntaxTree, b: &SyntaxTree) -> u64 {
    ted(a, b, EditCosts::UNIT).unwrap()
}

const LABELS: &[&str] = &["a", "b", "c", "d"];

#[test]
fn metric_axioms_on_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let t: Vec<_> = (0..3)
            .map(|_| {
                let n = rng.gen_range(1..=30);
                random_tree(&mut rng, n, LABELS)
            })
            .collect();
        let (ab, ba) = (d(&t[0], &t[1]), d(&t[1], &t[0]));
        assert_eq!(ab, ba);
        assert_eq!(d(&t[0], &t[0]), 0);
        assert!(ab <= d(&t[0], &t[2]) + d(&t[2], &t[1]));
        let (s, r) = (t[0].size() as u64, t[1].size() as u64);
        assert!(ab >= s.abs_diff(r));
        assert!(ab <= s + r);
    }
}

#[test]
fn matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let (n1, n2) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let a = random_tree(&mut rng, n1, LABELS);
        let b = random_tree(&mut rng, n2, LABELS);
        assert_eq!(
            ted(&a, &b, EditCosts::UNIT).unwrap(),
            ted_oracle(&a, &b).unwrap(),
            "{a} vs {b}"
        );
    }
}

#[test]
fn matches_oracle_with_weighted_costs() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let costs = EditCosts::new(3, 2, 4).unwrap();
    for _ in 0..100 {
        let (n1, n2) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let a = random_tree(&mut rng, n1, LABELS);
        let b = random_tree(&mut rng, n2, LABELS);
        assert_eq!(
            ted(&a, &b, costs).unwrap(),
            ted_oracle_with(&a, &b, costs).unwrap()
        );
    }
}
