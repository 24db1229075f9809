use std::time::Instant;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinglass::matching::{min_weight_perfect_matching, WeightedGraph};
use spinglass::tts::{fit_scaling, FitModel, ScalingRow};

fn graph() -> impl Strategy<Value = WeightedGraph> {
    (1usize..=6).prop_flat_map(|half| {
        let n = 2 * half;
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let m = pairs.len();
        proptest::collection::vec(proptest::option::weighted(0.7, 0i64..100), m).prop_map(move |ws| {
            let mut g = WeightedGraph::new(n);
            for (&(u, v), w) in pairs.iter().zip(ws) {
                if let Some(w) = w {
                    g.add_edge(u, v, w);
                }
            }
            g
        })
    })
}

fn complete(n: usize, weights: &[i64]) -> WeightedGraph {
    let mut g = WeightedGraph::new(n);
    let mut k = 0;
    for u in 0..n {
        for v in u + 1..n {
            g.add_edge(u, v, weights[k]);
            k += 1;
        }
    }
    g
}

proptest! {
    #[test]
    fn scaling_weights_keeps_the_matching(g in graph(), factor in 1i64..50) {
        let Ok(base) = min_weight_perfect_matching(&g) else { return Ok(()); };
        let mut scaled = g.clone();
        for e in &mut scaled.edges {
            e.2 *= factor;
        }
        let m = min_weight_perfect_matching(&scaled).unwrap();
        prop_assert_eq!(&m.pairs, &base.pairs);
        prop_assert_eq!(m.total_weight, factor * base.total_weight);
    }

    #[test]
    fn shifting_weights_shifts_the_total(
        half in 1usize..=5,
        weights in proptest::collection::vec(0i64..100, 45),
        shift in 0i64..1000,
    ) {
        let n = 2 * half;
        let g = complete(n, &weights);
        let base = min_weight_perfect_matching(&g).unwrap();
        let mut shifted = g.clone();
        for e in &mut shifted.edges {
            e.2 += shift;
        }
        let m = min_weight_perfect_matching(&shifted).unwrap();
        prop_assert_eq!(m.total_weight, base.total_weight + shift * half as i64);
        prop_assert_eq!(m.pairs, base.pairs);
    }
}

#[test]
fn dense_graph_runtime_is_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut rows = Vec::new();
    for n in [64usize, 128, 256, 512] {
        let mut times = Vec::new();
        for _ in 0..3 {
            let weights: Vec<i64> = (0..n * (n - 1) / 2).map(|_| rng.gen_range(0..1000)).collect();
            let g = complete(n, &weights);
            let start = Instant::now();
            min_weight_perfect_matching(&g).unwrap();
            times.push(start.elapsed().as_secs_f64() * 1e6);
        }
        times.sort_by(|a, b| a.total_cmp(b));
        rows.push(ScalingRow { n, q05: times[0], median: times[1], q95: times[2] });
    }
    let fit = fit_scaling(&rows, FitModel::Power).unwrap();
    // Blossom on complete graphs: between n² (edge count) and n⁴.
    assert!(fit.slope > 1.0 && fit.slope < 4.5, "{fit:?}");
    assert!(fit.r2 > 0.9, "{fit:?}");
}
