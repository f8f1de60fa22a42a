//! Compare backprop gradients with central finite differences of the loss.
//!
//! ```bash
//! cargo run --release -p coin --example gradient_check
//! ```

use coin::siren::Coord;
use coin::{Architecture, SirenNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mean_loss(net: &SirenNetwork, coords: &[Coord], targets: &[[f64; 3]]) -> f64 {
    let out = net.forward(coords);
    let sse: f64 = out
        .iter()
        .zip(targets)
        .flat_map(|(o, t)| (0..3).map(move |c| (o[c] - t[c]).powi(2)))
        .sum();
    sse / (3 * coords.len()) as f64
}

fn main() -> coin::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let arch = Architecture::with_default_freq(3, 8)?;
    let mut net = SirenNetwork::init_siren(arch, 11);
    let coords: Vec<Coord> = (0..32).map(|_| [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)]).collect();
    let targets: Vec<[f64; 3]> = (0..32).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();

    let (loss, grads) = net.backward(&coords, &targets)?;
    println!("{arch}: {} params, loss {loss:.6}", arch.param_count());

    let h = 1e-4;
    let mut worst = 0.0f64;
    for i in 0..arch.param_count() {
        let p = net.params()[i];
        net.params_mut()[i] = p + h;
        let up = mean_loss(&net, &coords, &targets);
        net.params_mut()[i] = p - h;
        let down = mean_loss(&net, &coords, &targets);
        net.params_mut()[i] = p;
        let fd = (up - down) / (2.0 * h);
        let rel = (grads.values()[i] - fd).abs() / (fd.abs() + 1e-8);
        worst = worst.max(rel);
    }
    println!("max relative error over all parameters: {worst:.2e}");
    Ok(())
}
