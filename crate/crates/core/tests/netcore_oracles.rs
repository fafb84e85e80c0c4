//! Independent oracles for the forward pass and its gradients.

use heteronet::netcore::{
    argmax, backward, forward, EffectiveWeights, Matrix, Topology, TransferProfile,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straightforward triple-loop evaluation, written independently of the
/// library's batched implementation.
fn naive_forward(
    sizes: &[usize],
    slopes: &[Vec<f64>],
    gains: &[Vec<f64>],
    w: &[Vec<Vec<f64>>],
    input: &[f64],
) -> Vec<Vec<f64>> {
    let mut acts = vec![input
        .iter()
        .zip(&slopes[0])
        .map(|(i, a)| f64::max(0.0, a * i))
        .collect::<Vec<_>>()];
    for k in 0..sizes.len() - 1 {
        let prev = &acts[k];
        let mut next = Vec::new();
        for i in 0..sizes[k + 1] {
            let mut sum = 0.0;
            for j in 0..sizes[k] {
                let wij = w[k][i][j];
                let c = if wij >= 0.0 { wij * prev[j] } else { gains[k][j] * wij * prev[j] };
                sum += c;
            }
            next.push(f64::max(0.0, slopes[k + 1][i] * sum));
        }
        acts.push(next);
    }
    acts
}

fn naive_loss(
    sizes: &[usize],
    slopes: &[Vec<f64>],
    gains: &[Vec<f64>],
    w: &[Vec<Vec<f64>>],
    input: &[f64],
    target: &[f64],
) -> f64 {
    let acts = naive_forward(sizes, slopes, gains, w, input);
    let out = acts.last().unwrap();
    out.iter().zip(target).map(|(y, t)| (y - t).powi(2)).sum::<f64>() / out.len() as f64
}

/// Minimum |pre-activation| over all non-input neurons.
fn kink_margin(
    sizes: &[usize],
    slopes: &[Vec<f64>],
    gains: &[Vec<f64>],
    w: &[Vec<Vec<f64>>],
    input: &[f64],
) -> f64 {
    let acts = naive_forward(sizes, slopes, gains, w, input);
    let mut margin = f64::INFINITY;
    for k in 0..sizes.len() - 1 {
        for i in 0..sizes[k + 1] {
            let mut sum = 0.0;
            for j in 0..sizes[k] {
                let wij = w[k][i][j];
                sum += if wij >= 0.0 { wij } else { gains[k][j] * wij } * acts[k][j];
            }
            margin = margin.min(sum.abs());
        }
    }
    margin
}

struct Case {
    topology: Topology,
    profile: TransferProfile,
    nested: Vec<Vec<Vec<f64>>>,
    input: Vec<f64>,
    target: Vec<f64>,
}

impl Case {
    fn random(rng: &mut ChaCha8Rng) -> Case {
        let n_layers = rng.random_range(2..=4);
        let sizes: Vec<usize> = (0..n_layers).map(|_| rng.random_range(1..=10)).collect();
        let topology = Topology::new(sizes.clone()).unwrap();
        let profile = TransferProfile {
            slopes: sizes.iter().map(|&n| (0..n).map(|_| rng.random_range(0.5..1.5)).collect()).collect(),
            neg_gains: sizes.iter().map(|&n| (0..n).map(|_| rng.random_range(0.7..1.3)).collect()).collect(),
        };
        let nested: Vec<Vec<Vec<f64>>> = (0..n_layers - 1)
            .map(|k| {
                (0..sizes[k + 1])
                    .map(|_| {
                        (0..sizes[k])
                            .map(|_| {
                                // keep away from the sign switch at w = 0
                                let m = rng.random_range(0.05..1.0);
                                if rng.random_bool(0.3) { -m } else { m }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let input = (0..sizes[0]).map(|_| rng.random_range(0.0..2.0)).collect();
        let out = *sizes.last().unwrap();
        let mut target = vec![0.0; out];
        target[rng.random_range(0..out)] = 1.0;
        Case { topology, profile, nested, input, target }
    }

    fn weights(&self) -> EffectiveWeights {
        EffectiveWeights {
            layers: self
                .nested
                .iter()
                .map(|m| {
                    Matrix::from_vec(m.len(), m[0].len(), m.iter().flatten().copied().collect()).unwrap()
                })
                .collect(),
        }
    }

    fn loss_with(&self, nested: &[Vec<Vec<f64>>]) -> f64 {
        naive_loss(
            self.topology.layer_sizes(),
            &self.profile.slopes,
            &self.profile.neg_gains,
            nested,
            &self.input,
            &self.target,
        )
    }

    fn margin(&self) -> f64 {
        kink_margin(
            self.topology.layer_sizes(),
            &self.profile.slopes,
            &self.profile.neg_gains,
            &self.nested,
            &self.input,
        )
    }
}

/// Worst relative error of analytic gradients against central differences.
fn max_fd_error(case: &Case, h: f64) -> f64 {
    let analytic = backward(&case.topology, &case.profile, &case.weights(), &case.input, &case.target)
        .unwrap()
        .gradients;
    let mut worst: f64 = 0.0;
    for k in 0..case.nested.len() {
        for i in 0..case.nested[k].len() {
            for j in 0..case.nested[k][i].len() {
                let mut plus = case.nested.clone();
                plus[k][i][j] += h;
                let mut minus = case.nested.clone();
                minus[k][i][j] -= h;
                let fd = (case.loss_with(&plus) - case.loss_with(&minus)) / (2.0 * h);
                let g = analytic.layers[k].get(i, j);
                let scale = g.abs().max(fd.abs()).max(1e-8);
                worst = worst.max((g - fd).abs() / scale);
            }
        }
    }
    worst
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 40 {
        let case = Case::random(&mut rng);
        // perturbation must not cross a rectifier kink
        if case.margin() < 1e-2 {
            continue;
        }
        let err = max_fd_error(&case, 1e-4);
        assert!(err <= 1e-6, "relative error {err} on topology {}", case.topology);
        checked += 1;
    }
}

#[test]
fn all_ones_profile_is_plain_relu() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let mut case = Case::random(&mut rng);
        case.profile = TransferProfile::ideal(&case.topology);
        let sizes = case.topology.layer_sizes();
        // plain ReLU network: x_i = max(0, Σ w_ij x_j)
        let mut x: Vec<f64> = case.input.clone();
        for m in &case.nested {
            x = m.iter().map(|row| row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>().max(0.0)).collect();
        }
        let acts = forward(&case.topology, &case.profile, &case.weights(), &case.input).unwrap();
        assert_eq!(acts.len(), sizes.len());
        for (a, b) in acts.last().unwrap().iter().zip(&x) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_matches_naive_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = Case::random(&mut rng);
        let acts = forward(&case.topology, &case.profile, &case.weights(), &case.input).unwrap();
        let oracle = naive_forward(
            case.topology.layer_sizes(),
            &case.profile.slopes,
            &case.profile.neg_gains,
            &case.nested,
            &case.input,
        );
        for (la, lo) in acts.iter().zip(&oracle) {
            for (a, o) in la.iter().zip(lo) {
                prop_assert!((a - o).abs() <= 1e-12 * (1.0 + o.abs()));
            }
        }
    }

    #[test]
    fn layer_slope_scaling_keeps_argmax(seed in any::<u64>(), c in 0.05f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = Case::random(&mut rng);
        let layer = rng.random_range(0..case.topology.n_layers());
        let mut scaled = case.profile.clone();
        scaled.slopes[layer].iter_mut().for_each(|a| *a *= c);
        let w = case.weights();
        let base = forward(&case.topology, &case.profile, &w, &case.input).unwrap();
        let other = forward(&case.topology, &scaled, &w, &case.input).unwrap();
        let (yb, yo) = (base.last().unwrap(), other.last().unwrap());
        // ties and near-ties are not meaningful for argmax comparison
        let mut sorted = yb.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if sorted.len() < 2 || sorted[0] - sorted[1] > 1e-9 * (1.0 + sorted[0]) {
            prop_assert_eq!(argmax(yb), argmax(yo));
        }
    }

    #[test]
    fn fd_holds_on_random_networks(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = Case::random(&mut rng);
        prop_assume!(case.margin() > 1e-2);
        prop_assert!(max_fd_error(&case, 1e-4) <= 1e-5);
    }
}
