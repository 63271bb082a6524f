use std::collections::BTreeMap;

use dmshm::density::density_score;
use dmshm::memory::{inclusion_probabilities, sample_weight, update_memory, weighted_sample_without_replacement};
use dmshm::{DensityModel, MemorySet, PeriodDataset, Sample, WeightRule};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn period(index: usize, xs: &[f64]) -> PeriodDataset {
    let samples = xs.iter().map(|&x| Sample::new(vec![x], vec![2.0 * x]).unwrap()).collect();
    PeriodDataset::new(index, samples).unwrap()
}

fn identity(x: &[f64]) -> Vec<f64> {
    x.to_vec()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Systematic selection along `order` with start `u`, taking `count` items.
fn systematic(order: &[usize], pi: &[f64], u: f64, count: usize) -> Vec<usize> {
    let (mut next, mut cumulative) = (u, 0.0);
    let mut chosen = Vec::new();
    for &i in order {
        cumulative += pi[i];
        if chosen.len() < count && cumulative > next {
            chosen.push(i);
            next += 1.0;
        }
    }
    let mut rest: Vec<usize> = (0..pi.len()).filter(|i| !chosen.contains(i)).collect();
    rest.sort_by(|&a, &b| pi[b].total_cmp(&pi[a]).then(a.cmp(&b)));
    chosen.extend(rest.into_iter().take(count - chosen.len()));
    chosen.sort_unstable();
    chosen
}

/// Exact distribution of the selected subset, enumerating every ordering and
/// every interval of the start point.
fn subset_distribution(pi: &[f64], count: usize) -> BTreeMap<Vec<usize>, f64> {
    let orders = permutations(pi.len());
    let mut dist = BTreeMap::new();
    for order in &orders {
        let mut cuts = vec![0.0, 1.0];
        let mut c = 0.0;
        for &i in order {
            c += pi[i];
            cuts.push(c.fract());
        }
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                let subset = systematic(order, pi, 0.5 * (w[0] + w[1]), count);
                *dist.entry(subset).or_insert(0.0) += (w[1] - w[0]) / orders.len() as f64;
            }
        }
    }
    dist
}

#[test]
fn density_only_selection_follows_the_enumerated_distribution() {
    let budget = 3;
    let first = update_memory(&MemorySet::new(budget), &period(1, &[0.0, 0.1, 0.3]), identity, WeightRule::Density, 1)
        .unwrap()
        .memory;
    assert_eq!(first.len(), 3);
    let second = period(2, &[0.05, 1.0, 3.0]);
    let pool: Vec<f64> = [0.0, 0.1, 0.3, 0.05, 1.0, 3.0].to_vec();

    let kde = DensityModel::fit(first.entries().iter().map(|e| e.x.clone()).collect()).unwrap();
    let q: Vec<f64> = pool.iter().map(|x| density_score(kde.density(&[*x]).unwrap()).unwrap()).collect();
    let total: f64 = q.iter().sum();
    let pi: Vec<f64> = q.iter().map(|v| budget as f64 * v / total).collect();
    assert!(pi.iter().all(|p| *p < 1.0));

    let dist = subset_distribution(&pi, budget);
    for i in 0..pool.len() {
        let marginal: f64 = dist.iter().filter(|(s, _)| s.contains(&i)).map(|(_, p)| p).sum();
        assert!((marginal - pi[i]).abs() < 1e-9, "item {i}: {marginal} vs {}", pi[i]);
    }

    let trials = 50_000u64;
    let mut observed: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for seed in 0..trials {
        let up = update_memory(&first, &second, identity, WeightRule::FixedGamma(0.0), seed).unwrap();
        if seed == 0 {
            for (w, v) in up.weights.weights.iter().zip(&q) {
                assert_eq!(w, v);
            }
        }
        let mut subset: Vec<usize> = up
            .memory
            .entries()
            .iter()
            .map(|e| pool.iter().position(|x| *x == e.x[0]).unwrap())
            .collect();
        subset.sort_unstable();
        *observed.entry(subset).or_insert(0) += 1;
    }
    let mut chi2 = 0.0;
    let mut cells = 0;
    for subset in observed.keys() {
        assert!(dist.get(subset).copied().unwrap_or(0.0) > 0.0, "impossible subset {subset:?}");
    }
    for (subset, p) in &dist {
        let expected = p * trials as f64;
        let seen = *observed.get(subset).unwrap_or(&0) as f64;
        chi2 += (seen - expected).powi(2) / expected;
        cells += 1;
    }
    let pval = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(chi2);
    println!("{cells} subsets, chi2 {chi2:.2}, p {pval:.3}");
    assert!(pval > 0.01);
}

#[test]
fn reservoir_weights_are_the_biased_coefficients() {
    let budget = 4;
    let mem = update_memory(&MemorySet::new(budget), &period(1, &[0.0, 1.0, 2.0, 3.0, 4.0]), identity, WeightRule::Reservoir, 3)
        .unwrap()
        .memory;
    assert_eq!(mem.seen(), 5);
    let next = period(2, &[5.0, 6.0, 7.0]);
    let up = update_memory(&mem, &next, identity, WeightRule::Reservoir, 4).unwrap();
    assert_eq!(up.gamma, 1.0);
    let ws = up.weights;
    assert!(ws.memory_weights().iter().all(|w| *w == 5.0 / 8.0));
    assert!(ws.current_weights().iter().all(|w| *w == 4.0 / 8.0));
    let direct = sample_weight(&mem, &next, |_| 0.9, 1.0).unwrap();
    assert_eq!(direct.weights, ws.weights);
}

#[test]
fn inclusion_probabilities_cap_at_one_and_sum_to_count() {
    let pi = inclusion_probabilities(&[100.0, 1.0, 1.0, 1.0, 1.0], 2);
    assert_eq!(pi[0], 1.0);
    for p in &pi[1..] {
        assert!((p - 0.25).abs() < 1e-15);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let idx = weighted_sample_without_replacement(&[100.0, 1.0, 1.0, 1.0, 1.0], 2, &mut rng).unwrap();
    assert_eq!(idx.len(), 2);
    assert_eq!(idx[0], 0);
}

fn stream_strategy() -> impl Strategy<Value = (usize, Vec<Vec<(f64, f64)>>)> {
    let point = (-5.0..5.0f64, -5.0..5.0f64);
    let periods = prop::collection::vec(prop::collection::vec(point, 1..40), 1..6);
    (0usize..60, periods)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn memory_size_is_min_of_budget_and_seen((budget, periods) in stream_strategy(), seed in any::<u64>()) {
        let mut mem = MemorySet::new(budget);
        let mut total = 0;
        for (i, pts) in periods.iter().enumerate() {
            let samples = pts.iter().map(|&(a, b)| Sample::new(vec![a, b], vec![a - b]).unwrap()).collect();
            let data = PeriodDataset::new(i + 1, samples).unwrap();
            total += data.len();
            let repr = |x: &[f64]| vec![x[0] + x[1], 1.0];
            let up = update_memory(&mem, &data, repr, WeightRule::Density, seed.wrapping_add(i as u64)).unwrap();
            mem = up.memory;
            prop_assert_eq!(mem.len(), budget.min(total));
            prop_assert_eq!(mem.seen(), total);
            prop_assert_eq!(mem.period(), i + 1);
            for e in mem.entries() {
                prop_assert_eq!(&e.z, &repr(&e.x));
            }
            let g = up.gamma;
            prop_assert!((0.0..=1.0).contains(&g));
        }
    }
}
