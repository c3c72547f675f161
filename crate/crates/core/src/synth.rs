//! Seeded random inputs for property checks and synthetic fixtures.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::metric::RealMatrix;
use crate::tree::SyntaxTree;

/// Random ordered tree with exactly `nodes` nodes (at least one), labels drawn
/// from `alphabet`. Each new node attaches under a uniformly chosen existing
/// node, appended as its last child.
pub fn random_tree(rng: &mut impl Rng, nodes: usize, alphabet: &[&str]) -> SyntaxTree {
    let nodes = nodes.max(1);
    let mut parent = vec![usize::MAX; nodes];
    for (k, p) in parent.iter_mut().enumerate().skip(1) {
        *p = rng.gen_range(0..k);
    }
    let labels: Vec<&str> = (0..nodes)
        .map(|_| *alphabet.choose(rng).expect("non-empty alphabet"))
        .collect();
    // Children always have larger indices than their parent, so building from
    // the back finishes every subtree before it is attached.
    let mut built: Vec<Option<SyntaxTree>> =
        labels.iter().map(|l| Some(SyntaxTree::leaf(*l))).collect();
    for k in (1..nodes).rev() {
        let child = built[k].take().expect("built once");
        built[parent[k]]
            .as_mut()
            .expect("parent pending")
            .children
            .insert(0, child);
    }
    built[0].take().expect("root")
}

/// `n` points uniform in the unit square.
pub fn uniform_points(rng: &mut impl Rng, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| [rng.gen::<f64>(), rng.gen::<f64>()])
        .collect()
}

/// Random finite metric. Half of the draws are Euclidean distances of random
/// planar points; the rest take integer values in `[k, 2k]`, which always
/// satisfy the triangle inequality and produce many ties.
pub fn random_metric(rng: &mut impl Rng, n: usize) -> RealMatrix {
    if rng.gen_bool(0.5) {
        RealMatrix::euclidean(&uniform_points(rng, n))
    } else {
        let k = rng.gen_range(1..=6u32);
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = rng.gen_range(k..=2 * k) as f64;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        RealMatrix::from_row_major(n, values).expect("valid metric")
    }
}

/// Small random Python program: assignments, a loop or a branch, and a print.
/// Always syntactically valid.
pub fn random_program(rng: &mut impl Rng) -> String {
    const NAMES: [&str; 5] = ["img", "x", "y", "total", "k"];
    const OPS: [&str; 4] = ["+", "-", "*", "//"];
    let name = |rng: &mut dyn rand::RngCore| NAMES[rng.gen_range(0..NAMES.len())];
    let expr = |rng: &mut dyn rand::RngCore| -> String {
        let a = rng.gen_range(0..10);
        if rng.gen_bool(0.5) {
            a.to_string()
        } else {
            format!(
                "{} {} {}",
                NAMES[rng.gen_range(0..NAMES.len())],
                OPS[rng.gen_range(0..OPS.len())],
                a
            )
        }
    };
    let mut src = String::new();
    if rng.gen_bool(0.3) {
        src.push_str("import numpy as np\n");
    }
    for name in NAMES.iter().take(rng.gen_range(1..=3)) {
        src.push_str(&format!("{name} = {}\n", rng.gen_range(0..10)));
    }
    for _ in 0..rng.gen_range(0..4) {
        match rng.gen_range(0..3) {
            0 => src.push_str(&format!("{} = {}\n", name(rng), expr(rng))),
            1 => src.push_str(&format!(
                "for i in range({}):\n    {} = {}\n",
                rng.gen_range(1..5),
                name(rng),
                expr(rng)
            )),
            _ => src.push_str(&format!(
                "if {} > {}:\n    {} = {}\nelse:\n    {} = 0\n",
                name(rng),
                rng.gen_range(0..5),
                name(rng),
                expr(rng),
                name(rng)
            )),
        }
    }
    src.push_str(&format!("print({})\n", name(rng)));
    src
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Metric;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn programs_parse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let src = random_program(&mut rng);
            crate::python::parse_program(&src).unwrap_or_else(|e| panic!("{e}: {src}"));
        }
    }

    #[test]
    fn tree_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..20 {
            assert_eq!(random_tree(&mut rng, n, &["a", "b"]).size(), n);
        }
    }

    #[test]
    fn metrics_satisfy_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let m = random_metric(&mut rng, 12);
            for i in 0..12 {
                for j in 0..12 {
                    for k in 0..12 {
                        assert!(m.dist(i, j) <= m.dist(i, k) + m.dist(k, j) + 1e-12);
                    }
                }
            }
        }
    }
}
