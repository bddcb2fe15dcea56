//! Compare backpropagated LSTM gradients with central finite differences on
//! a small random model.
//!
//!     cargo run --example gradient_check

use rand::Rng;
use rideside::classify::LstmModel;
use rideside::features::FeatureSequence;
use rideside::rng;

fn loss(m: &LstmModel, s: &FeatureSequence, y: usize) -> f64 {
    -m.predict_proba(s).expect("shapes match")[y].ln()
}

fn main() {
    let mut r = rng::stream(1, "gradcheck");
    let mut model = LstmModel::new(3, 4, 3, 0.0, &mut r);
    let rows: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let seq = FeatureSequence::from_rows(rows, 3, 3);
    let fwd = model.forward::<rng::StreamRng>(&seq, None).expect("shapes match");
    let mut grads = model.zeros_like();
    model.backward(&fwd, 1, &mut grads);
    let analytic: Vec<f64> = grads.params().iter().flat_map(|p| p.iter().copied()).collect();

    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    let mut idx = 0;
    for t in 0..model.params().len() {
        for i in 0..model.params()[t].len() {
            let orig = model.params()[t][i];
            model.params_mut()[t][i] = orig + eps;
            let up = loss(&model, &seq, 1);
            model.params_mut()[t][i] = orig - eps;
            let down = loss(&model, &seq, 1);
            model.params_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let err = (numeric - analytic[idx]).abs() / analytic[idx].abs().max(1e-3);
            worst = worst.max(err);
            idx += 1;
        }
    }
    println!("{idx} parameters checked, worst scaled error {worst:.2e}");
}
