//! Reverse-mode gradients of a small MLP regression loss against central
//! finite differences.
//!
//! cargo run --release --example gradient_check

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssmail::autodiff::Tape;
use ssmail::nn::{Activation, Mlp, ParameterSet};

fn loss(mlp: &Mlp, params: &ParameterSet, tape: &mut Tape, frozen: bool) -> ssmail::Result<(ssmail::autodiff::Var, ssmail::nn::Bound)> {
    let bound = if frozen { params.bind_frozen(tape) } else { params.bind(tape) };
    let x = tape.constant(&[4, 3], (0..12).map(|i| (i as f64 * 0.37).sin()).collect())?;
    let y = tape.constant(&[4, 1], vec![0.5, -0.2, 0.1, 0.9])?;
    let out = mlp.forward(tape, &bound, x)?;
    let d = tape.sub(out, y)?;
    let sq = tape.square(d);
    Ok((tape.mean(sq, None)?, bound))
}

fn main() -> ssmail::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = ParameterSet::new();
    let mlp = Mlp::new(&mut params, "mlp", &[3, 8, 1], Activation::Tanh, Activation::Identity, &mut rng)?;

    let mut tape = Tape::new();
    let (l, bound) = loss(&mlp, &params, &mut tape, false)?;
    tape.backward(l)?;
    params.accumulate_grads(&tape, &bound);
    let analytic: Vec<f64> = params.iter().flat_map(|(_, t)| t.grad().unwrap().to_vec()).collect();

    let h = 1e-6;
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    let mut worst: f64 = 0.0;
    let mut k = 0;
    for name in &names {
        let len = params.get(name).unwrap().numel();
        for i in 0..len {
            let mut eval = |delta: f64| -> ssmail::Result<f64> {
                params.get_mut(name).unwrap().data_mut()[i] += delta;
                let mut t = Tape::new();
                let (v, _) = loss(&mlp, &params, &mut t, true)?;
                params.get_mut(name).unwrap().data_mut()[i] -= delta;
                Ok(t.item(v))
            };
            let numeric = (eval(h)? - eval(-h)?) / (2.0 * h);
            let a = analytic[k];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3));
            k += 1;
        }
    }
    println!("{k} parameters checked, max relative error {worst:.2e}");
    Ok(())
}
