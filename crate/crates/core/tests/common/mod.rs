#![allow(dead_code)]

use std::path::PathBuf;

use coin::siren::{Coord, Rgb};
use coin::{load_image, ImagePlane, SirenNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn astronaut() -> ImagePlane {
    load_image(fixture("astronaut_64.png")).expect("fixture loads")
}

/// Straight-line forward pass written from the layer definitions, sharing no
/// code with the library's batched implementation.
pub fn naive_forward(net: &SirenNetwork, x: Coord) -> Rgb {
    let arch = net.architecture();
    let omega = arch.freq_scale() as f64;
    let layers = arch.hidden_layers() + 1;
    let mut act: Vec<f64> = x.to_vec();
    for k in 0..layers {
        let w = net.weights(k);
        let b = net.bias(k);
        let fan_in = act.len();
        let fan_out = b.len();
        let mut next = vec![0.0; fan_out];
        for o in 0..fan_out {
            let mut z = b[o];
            for i in 0..fan_in {
                z += w[o * fan_in + i] * act[i];
            }
            next[o] = if k + 1 < layers { (omega * z).sin() } else { z };
        }
        act = next;
    }
    [act[0], act[1], act[2]]
}

/// Mean over all scalars of the squared error.
pub fn naive_loss(net: &SirenNetwork, coords: &[Coord], targets: &[Rgb]) -> f64 {
    let mut sum = 0.0;
    for (x, t) in coords.iter().zip(targets) {
        let y = naive_forward(net, *x);
        for c in 0..3 {
            sum += (y[c] - t[c]).powi(2);
        }
    }
    sum / (3 * coords.len()) as f64
}

/// Central finite differences of `naive_loss` for every parameter.
pub fn finite_difference_grads(net: &SirenNetwork, coords: &[Coord], targets: &[Rgb], h: f64) -> Vec<f64> {
    let mut probe = net.clone();
    (0..net.params().len())
        .map(|i| {
            let p = net.params()[i];
            probe.params_mut()[i] = p + h;
            let up = naive_loss(&probe, coords, targets);
            probe.params_mut()[i] = p - h;
            let down = naive_loss(&probe, coords, targets);
            probe.params_mut()[i] = p;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn random_batch(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Coord>, Vec<Rgb>) {
    let coords = (0..n)
        .map(|_| [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)])
        .collect();
    let targets = (0..n).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
    (coords, targets)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest `|analytic − fd| / (|fd| + 1e-8)`.
pub fn max_relative_error(analytic: &[f64], fd: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(fd)
        .map(|(a, f)| (a - f).abs() / (f.abs() + 1e-8))
        .fold(0.0, f64::max)
}
