//! A hub: one target vector close to every source vector. Plain cosine
//! retrieves the hub for a query whose true neighbor is another target;
//! CSLS discounts the hub's dense neighborhood and retrieves the right one.
//!
//! cargo run --example hubness_csls

use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use xlex::align::csls;

fn unit(v: Array1<f64>) -> Array1<f64> {
    let n = v.dot(&v).sqrt();
    v / n
}

fn argmax(row: ndarray::ArrayView1<f64>) -> usize {
    row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0
}

fn main() -> xlex::Result<()> {
    let (n, d, k) = (30, 20, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gauss = Normal::new(0.0, 1.0).unwrap();
    let mut targets: Vec<Array1<f64>> = (0..n)
        .map(|_| unit(Array1::from_shape_fn(d, |_| gauss.sample(&mut rng))))
        .collect();
    let hub = unit(targets.iter().fold(Array1::zeros(d), |acc, t| acc + t));
    // every source is its target pulled toward the hub direction
    let alpha = 1.2;
    let sources: Vec<Array1<f64>> = targets.iter().map(|t| unit(t + &(&hub * alpha))).collect();
    targets.push(hub);
    let view = |v: &[Array1<f64>]| ndarray::stack(Axis(0), &v.iter().map(|r| r.view()).collect::<Vec<_>>()).unwrap();
    let (x, z): (Array2<f64>, Array2<f64>) = (view(&sources), view(&targets));
    let sim = x.dot(&z.t());
    let scores = csls(&sim, k)?;

    let hub_id = n;
    let cos_hub = (0..n).filter(|&i| argmax(sim.row(i)) == hub_id).count();
    let csls_hub = (0..n).filter(|&i| argmax(scores.row(i)) == hub_id).count();
    let csls_right = (0..n).filter(|&i| argmax(scores.row(i)) == i).count();
    println!("queries whose cosine neighbor is the hub: {cos_hub}/{n}");
    println!("queries whose CSLS neighbor is the hub:   {csls_hub}/{n}");
    println!("queries whose CSLS neighbor is correct:   {csls_right}/{n}");
    Ok(())
}
