//! Unsupervised recovery of a planted rotation: the target space is a
//! randomly rotated, row-shuffled copy of the source space.
//!
//! cargo run --release --example align_rotation [-- <noise sigma>]

use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use xlex::align::{self, mapped_embeddings, orthogonality_error, precision_at_1, AlignmentConfig};
use xlex::{EmbeddingMatrix, Vocabulary};

fn unit_rows(mut m: Array2<f64>) -> Array2<f64> {
    for mut r in m.rows_mut() {
        let n = r.dot(&r).sqrt();
        r /= n;
    }
    m
}

fn to_embedding(prefix: &str, m: &Array2<f64>) -> EmbeddingMatrix {
    let words = (0..m.nrows()).map(|i| format!("{prefix}{i}")).collect();
    EmbeddingMatrix::new(Vocabulary::from_words(words).unwrap(), m.mapv(|v| v as f32)).unwrap()
}

fn main() -> xlex::Result<()> {
    let sigma: f64 = std::env::args().nth(1).map_or(0.0, |s| s.parse().expect("sigma"));
    let (n, d) = (2000, 50);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gauss = Normal::new(0.0, 1.0).unwrap();
    let x = unit_rows(Array2::from_shape_simple_fn((n, d), || gauss.sample(&mut rng)));
    // random orthogonal matrix from the QR factorization of a Gaussian matrix
    let g = nalgebra::DMatrix::from_fn(d, d, |_, _| gauss.sample(&mut rng));
    let q = g.qr().q();
    let rotation = Array2::from_shape_fn((d, d), |(i, j)| q[(i, j)]);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let noise = Normal::new(0.0, sigma.max(1e-300)).unwrap();
    let rotated = x.dot(&rotation);
    let mut z = Array2::zeros((n, d));
    for (i, &p) in perm.iter().enumerate() {
        // source row i becomes target row p
        let mut row = rotated.row(i).to_owned();
        if sigma > 0.0 {
            row.mapv_inplace(|v| v + noise.sample(&mut rng));
        }
        z.row_mut(p).assign(&row);
    }
    let z = unit_rows(z);

    let t0 = Instant::now();
    let (src, trg) = (to_embedding("s", &x), to_embedding("t", &z));
    let model = align::align(&src, &trg, &AlignmentConfig::default())?;
    let (ms, mt) = mapped_embeddings(&src, &trg, &model)?;
    let gold: Vec<(usize, usize)> = perm.iter().enumerate().map(|(i, &p)| (i, p)).collect();
    let p1 = precision_at_1(align::to_f64(&ms).view(), align::to_f64(&mt).view(), &gold);
    println!(
        "sigma {sigma}: P@1 {:.2}%, {} iterations, converged={}, |WtW-I| {:.2e}, {:.1?}",
        100.0 * p1,
        model.iterations,
        model.converged,
        orthogonality_error(&model.w_source),
        t0.elapsed()
    );
    Ok(())
}
