//! Virtual device checks against independent computations.

use std::path::Path;

use heteronet::datasets::{load_mnist, reduce_to_active_pixels, scale_mean};
use heteronet::netcore::{argmax, forward, Topology, WeightCode, WeightMatrix};
use heteronet::vdevice::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn random_codes(t: &Topology, rng: &mut ChaCha8Rng) -> WeightMatrix {
    let mut w = WeightMatrix::zeros(t);
    for k in 0..t.n_weight_layers() {
        let (post, pre) = t.weight_shape(k);
        for i in 0..post {
            for j in 0..pre {
                w.set(k, i, j, WeightCode::encode(rng.random_range(-7..=7)).unwrap());
            }
        }
    }
    w
}

fn std(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn threshold_spread_matches_sigma() {
    let d = VirtualDevice::fabricate(&"1000-1000".parse().unwrap(), 42, &Default::default(), &Default::default())
        .unwrap();
    let draws: Vec<f64> = d.delta_vt().iter().flatten().flatten().copied().collect();
    assert_eq!(draws.len(), 10_000);
    let sigma = 3.3 / 6f64.sqrt();
    assert!((std(&draws) / sigma - 1.0).abs() < 0.02, "{}", std(&draws));
}

#[test]
fn pelgrom_rule_uses_area() {
    let p = MismatchParams {
        sigma_rule: SigmaRule::Pelgrom,
        ..Default::default()
    };
    let d = VirtualDevice::fabricate(&"1000-1000".parse().unwrap(), 1, &p, &Default::default()).unwrap();
    let draws: Vec<f64> = d.delta_vt().iter().flatten().flatten().copied().collect();
    let sigma = 3.3 / (2.7f64 * 0.45).sqrt();
    assert!((std(&draws) / sigma - 1.0).abs() < 0.02);
}

#[test]
fn slope_spread_matches_monte_carlo() {
    let p = MismatchParams::default();
    let d = VirtualDevice::fabricate(&"500-500".parse().unwrap(), 7, &p, &Default::default()).unwrap();
    let slopes: Vec<f64> = d.effective_profile().slopes.concat();
    assert_eq!(slopes.len(), 1000);
    let cv = |v: &[f64]| std(v) / (v.iter().sum::<f64>() / v.len() as f64);

    let sigma = 3.3 / 6f64.sqrt();
    let n_ut = 1.5 * 25.85;
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mc: Vec<f64> = (0..100_000)
        .map(|_| {
            let (a, b, c): (f64, f64, f64) = (normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng));
            ((a - b + c) / n_ut).exp()
        })
        .collect();
    let s = sigma * 3f64.sqrt() / n_ut;
    let lognormal = (s * s).exp_m1().sqrt();
    assert!((cv(&mc) / lognormal - 1.0).abs() < 0.02);
    assert!((cv(&slopes) / cv(&mc) - 1.0).abs() < 0.1, "{} vs {}", cv(&slopes), cv(&mc));
}

#[test]
fn dc_response_is_forward_of_profile() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..20 {
        let t: Topology = "6-9-5-4".parse().unwrap();
        let d = VirtualDevice::fabricate(&t, seed, &Default::default(), &Default::default()).unwrap();
        let codes = random_codes(&t, &mut rng);
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..30.0)).collect();
        let a = d.dc_response(&codes, &x).unwrap();
        let b = forward(&t, &d.effective_profile(), &codes.effective(), &x).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn homogeneous_device_is_plain_relu() {
    let t: Topology = "3-4-2".parse().unwrap();
    let p = MismatchParams {
        a_vt: 0.0,
        ..Default::default()
    };
    let d = VirtualDevice::fabricate(&t, 0, &p, &Default::default()).unwrap();
    let codes = random_codes(&t, &mut ChaCha8Rng::seed_from_u64(1));
    let x = [3.0, 0.0, 8.0];
    let w = codes.effective();
    let mut h = x.to_vec();
    for m in &w.layers {
        h = (0..m.rows)
            .map(|i| m.row(i).iter().zip(&h).map(|(a, b)| a * b).sum::<f64>().max(0.0))
            .collect();
    }
    let y = d.dc_response(&codes, &x).unwrap();
    for (a, b) in y.last().unwrap().iter().zip(&h) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn mnist_digit_argmax_matches_behavioral_model() {
    let dir = std::env::var("MNIST_DIR").unwrap_or_else(|_| "/root/data/mnist".into());
    if !Path::new(&dir).join("t10k-images-idx3-ubyte").exists() {
        eprintln!("MNIST not found in {dir}, skipping");
        return;
    }
    let (train, test) = load_mnist(Path::new(&dir)).unwrap();
    let (_, sel) = reduce_to_active_pixels(&train, 196).unwrap();
    let (test, _) = scale_mean(&sel.apply(&test.head(20)).unwrap(), 15.0).unwrap();
    let t: Topology = "196-50-10".parse().unwrap();
    let d = VirtualDevice::fabricate(&t, 5, &Default::default(), &Default::default()).unwrap();
    let codes = random_codes(&t, &mut ChaCha8Rng::seed_from_u64(8));
    let profile = d.effective_profile().normalized();
    for i in 0..test.len() {
        let dev = d.dc_response(&codes, test.input(i)).unwrap();
        let model = forward(&t, &profile, &codes.effective(), test.input(i)).unwrap();
        assert_eq!(argmax(dev.last().unwrap()), argmax(model.last().unwrap()));
    }
}

fn settle(d: &VirtualDevice, codes: &WeightMatrix, from: &[f64], to: &[f64], rate: RateCurrent) -> TransientTrace {
    let cfg = TransientConfig {
        dt: 0.01,
        t_end: 60.0,
        rate_current: rate,
        ..Default::default()
    };
    transient(d, codes, &[(0.0, from.to_vec()), (1.0, to.to_vec())], &cfg).unwrap()
}

#[test]
fn transient_converges_to_dc() {
    let t: Topology = "8-10-6-3".parse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..10 {
        let d = VirtualDevice::fabricate(&t, seed, &Default::default(), &Default::default()).unwrap();
        let mut codes = random_codes(&t, &mut rng);
        // Positive weights keep every neuron active and give monotone settling.
        for k in 0..3 {
            let (post, pre) = t.weight_shape(k);
            for i in 0..post {
                for j in 0..pre {
                    let c = codes.get(k, i, j).decode().unsigned_abs() as i64;
                    codes.set(k, i, j, WeightCode::encode(c.max(1)).unwrap());
                }
            }
        }
        let from: Vec<f64> = (0..8).map(|_| rng.random_range(5.0..25.0)).collect();
        let to: Vec<f64> = (0..8).map(|_| rng.random_range(5.0..25.0)).collect();
        let tr = settle(&d, &codes, &from, &to, RateCurrent::Input);
        let dc: Vec<f64> = d.dc_response(&codes, &to).unwrap().concat();
        let last = tr.currents(tr.len() - 1);
        for (a, b) in last.iter().zip(&dc) {
            assert!((a - b).abs() <= 1e-3 * b.max(1.0), "{a} vs {b}");
        }
        // Input and first hidden layer follow a single exponential each.
        let start = tr.time_us.iter().position(|&x| x >= 1.0).unwrap();
        for i in 0..8 {
            let series: Vec<f64> = (start..tr.len()).map(|s| tr.layer(s, 0)[i]).collect();
            let up = to[i] > from[i];
            assert!(series.windows(2).all(|w| if up { w[1] >= w[0] } else { w[1] <= w[0] }));
        }
        let asym = argmax(&dc[dc.len() - 3..]);
        assert!(matches!(time_to_output(&tr, asym).unwrap(), TimeToOutput::Converged(_)));
    }
}

#[test]
fn tripled_drive_is_three_times_faster() {
    let t: Topology = "1-100".parse().unwrap();
    let p = MismatchParams {
        a_vt: 0.0,
        ..Default::default()
    };
    let d = VirtualDevice::fabricate(&t, 0, &p, &Default::default()).unwrap();
    let codes = WeightMatrix::zeros(&t);
    // Time for the input neuron to reach 63% of a step from 0.
    let rise = |i: f64| {
        let tr = settle(&d, &codes, &[0.0], &[i], RateCurrent::Input);
        let target = i * (1.0 - (-1f64).exp());
        let s = (0..tr.len()).find(|&s| tr.layer(s, 0)[0] >= target).unwrap();
        tr.time_us[s] - 1.0
    };
    let tau = 1.5 * 25.85 * 1100.0 / 15.0 * 1e-3;
    let (slow, fast) = (rise(15.0), rise(45.0));
    assert!((slow - tau).abs() < 0.02, "{slow} vs {tau}");
    assert!((slow / fast - 3.0).abs() < 0.1);
}
