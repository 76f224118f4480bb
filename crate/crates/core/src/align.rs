//! Unsupervised cross-lingual alignment of two embedding spaces.
//!
//! Both spaces are length-normalized, mean-centered and re-normalized. An
//! initial dictionary is found without supervision by matching the sorted
//! intra-lingual similarity distributions of the most frequent words; then a
//! self-learning loop alternates between solving an orthogonal map for the
//! current dictionary and re-inducing the dictionary from the mapped spaces by
//! CSLS retrieval. Dictionary induction starts stochastic and becomes
//! deterministic before convergence is declared.
//!
//! All similarity work is done in `f64` over fixed-size row blocks, so results
//! do not depend on how many threads run.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::Vocabulary;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

const BLOCK: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentConfig {
    /// Neighborhood size for CSLS.
    pub csls_k: usize,
    /// Most frequent words taking part in self-learning.
    pub vocab_cutoff: usize,
    /// Most frequent words used for the unsupervised initial dictionary.
    pub init_vocab: usize,
    pub max_iterations: usize,
    /// Minimal relative objective improvement that resets stagnation.
    pub convergence_tol: f64,
    /// Initial keep probability of dictionary-induction dropout.
    pub keep_prob: f64,
    pub keep_prob_multiplier: f64,
    /// Iterations without improvement before `keep_prob` grows.
    pub stagnation_window: usize,
    /// Orthogonal Procrustes throughout when true; otherwise the final map
    /// uses whitening, re-weighting and de-whitening.
    pub orthogonal: bool,
    pub seed: u64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig {
            csls_k: 10,
            vocab_cutoff: 20_000,
            init_vocab: 4_000,
            max_iterations: 500,
            convergence_tol: 1e-6,
            keep_prob: 0.1,
            keep_prob_multiplier: 2.0,
            stagnation_window: 50,
            orthogonal: true,
            seed: 1,
        }
    }
}

impl AlignmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.csls_k == 0 {
            return Err(Error::parameter("csls_k must be at least 1"));
        }
        if self.vocab_cutoff < 2 || self.init_vocab < 2 {
            return Err(Error::parameter("vocab_cutoff and init_vocab must be at least 2"));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(Error::parameter("keep_prob must be in (0, 1]"));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.keep_prob_multiplier > 1.0) {
            return Err(Error::parameter("keep_prob_multiplier must exceed 1"));
        }
        if self.max_iterations == 0 || self.stagnation_window == 0 {
            return Err(Error::parameter("max_iterations and stagnation_window must be positive"));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::parameter("convergence_tol must be non-negative"));
        }
        Ok(())
    }
}

/// One row of the self-learning log.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub keep_prob: f64,
    pub objective: f64,
    pub dictionary_size: usize,
}

#[derive(Clone, Debug)]
pub struct AlignmentModel {
    pub w_source: Array2<f64>,
    pub w_target: Array2<f64>,
    /// `(source id, target id)` pairs, forward direction first.
    pub induced_dictionary: Vec<(usize, usize)>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
}

/// `‖WᵀW − I‖_F`
pub fn orthogonality_error(w: &Array2<f64>) -> f64 {
    let mut g = w.t().dot(w);
    for i in 0..g.nrows() {
        g[[i, i]] -= 1.0;
    }
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Rows to unit length, columns to zero mean, rows to unit length again.
pub fn normalize_matrix(m: &Array2<f64>) -> std::result::Result<Array2<f64>, usize> {
    let mut out = m.clone();
    unit_rows(&mut out)?;
    let mean = out.mean_axis(Axis(0)).expect("matrix has rows");
    out -= &mean;
    unit_rows(&mut out)?;
    Ok(out)
}

fn unit_rows(m: &mut Array2<f64>) -> std::result::Result<(), usize> {
    for (i, mut row) in m.rows_mut().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(i);
        }
        row /= norm;
    }
    Ok(())
}

pub fn to_f64(m: &EmbeddingMatrix) -> Array2<f64> {
    m.matrix().mapv(|v| v as f64)
}

/// The normalization chain applied to an embedding, kept in `f64`.
pub fn normalize_f64(m: &EmbeddingMatrix) -> Result<Array2<f64>> {
    normalize_matrix(&to_f64(m))
        .map_err(|row| Error::DegenerateVector(m.vocab().word(row).to_string()))
}

pub fn normalize(m: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let n = normalize_f64(m)?;
    EmbeddingMatrix::new(m.vocab().clone(), n.mapv(|v| v as f32))
}

/// Mean of the `k` largest values, summed in descending order.
fn topk_mean(values: &mut [f64], k: usize) -> f64 {
    let k = k.min(values.len());
    let (top, kth, _) = values.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    let mut best: Vec<f64> = top.to_vec();
    best.push(*kth);
    best.sort_by(|a, b| b.total_cmp(a));
    best.iter().sum::<f64>() / k as f64
}

/// `CSLS(x, y) = 2·cos(x, y) − r_T(x) − r_S(y)` over a full similarity matrix,
/// where `r_T(x)` is the mean of x's `k` best targets and `r_S(y)` the mean of
/// y's `k` best sources.
pub fn csls(sim: &Array2<f64>, k: usize) -> Result<Array2<f64>> {
    let (rows, cols) = sim.dim();
    if k == 0 || k > rows.min(cols) {
        return Err(Error::parameter(format!(
            "csls k={k} must be in [1, {}]",
            rows.min(cols)
        )));
    }
    let r_t: Vec<f64> = sim.rows().into_iter().map(|r| topk_mean(&mut r.to_vec(), k)).collect();
    let r_s: Vec<f64> = sim
        .columns()
        .into_iter()
        .map(|c| topk_mean(&mut c.to_vec(), k))
        .collect();
    Ok(Array2::from_shape_fn((rows, cols), |(i, j)| {
        2.0 * sim[[i, j]] - r_t[i] - r_s[j]
    }))
}

/// Column-wise running top-k.
struct ColumnTopK {
    k: usize,
    // per column, kept sorted descending
    best: Vec<Vec<f64>>,
}

impl ColumnTopK {
    fn new(cols: usize, k: usize) -> Self {
        ColumnTopK {
            k,
            best: vec![Vec::with_capacity(k + 1); cols],
        }
    }

    #[inline]
    fn offer(&mut self, col: usize, v: f64) {
        let list = &mut self.best[col];
        if list.len() == self.k && v <= list[self.k - 1] {
            return;
        }
        let pos = list.partition_point(|&x| x >= v);
        list.insert(pos, v);
        list.truncate(self.k);
    }

    fn merge(&mut self, other: ColumnTopK) {
        for (col, list) in other.best.into_iter().enumerate() {
            for v in list {
                self.offer(col, v);
            }
        }
    }

    fn means(&self) -> Vec<f64> {
        self.best
            .iter()
            .map(|l| l.iter().sum::<f64>() / l.len() as f64)
            .collect()
    }
}

fn blocks(n: usize) -> Vec<(usize, usize)> {
    (0..n).step_by(BLOCK).map(|lo| (lo, (lo + BLOCK).min(n))).collect()
}

/// Result of one dictionary induction.
#[derive(Clone, Debug, PartialEq)]
pub struct Induction {
    pub pairs: Vec<(usize, usize)>,
    /// Mean best cosine, averaged over both directions.
    pub objective: f64,
}

/// CSLS retrieval in both directions over the first `cutoff` rows of each
/// (already normalized) space. With `keep_prob < 1` every candidate survives
/// independently with that probability; `round` selects the random stream.
pub fn induce_dictionary(
    mapped_x: ArrayView2<f64>,
    mapped_z: ArrayView2<f64>,
    csls_k: usize,
    cutoff: usize,
    keep_prob: f64,
    seed: u64,
    round: u64,
) -> Result<Induction> {
    let src = cutoff.min(mapped_x.nrows());
    let trg = cutoff.min(mapped_z.nrows());
    if src == 0 || trg == 0 {
        return Err(Error::parameter("cannot induce a dictionary from an empty space"));
    }
    if mapped_x.ncols() != mapped_z.ncols() {
        return Err(Error::DimensionMismatch(mapped_x.ncols(), mapped_z.ncols()));
    }
    let k = csls_k.min(src).min(trg);
    let x = mapped_x.slice(s![..src, ..]);
    let z = mapped_z.slice(s![..trg, ..]);
    let zt = z.t();
    let spans = blocks(src);

    // pass 1: neighborhood densities and best cosines
    struct Stats {
        r_t: Vec<f64>,
        best_fwd: Vec<f64>,
        cols: ColumnTopK,
        best_bwd: Vec<f64>,
    }
    let partial: Vec<Stats> = spans
        .par_iter()
        .map(|&(lo, hi)| {
            let sim = x.slice(s![lo..hi, ..]).dot(&zt);
            let mut st = Stats {
                r_t: Vec::with_capacity(hi - lo),
                best_fwd: Vec::with_capacity(hi - lo),
                cols: ColumnTopK::new(trg, k),
                best_bwd: vec![f64::NEG_INFINITY; trg],
            };
            let mut scratch = Vec::with_capacity(trg);
            for row in sim.rows() {
                scratch.clear();
                scratch.extend(row.iter().copied());
                st.best_fwd.push(scratch.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                st.r_t.push(topk_mean(&mut scratch, k));
                for (j, &v) in row.iter().enumerate() {
                    st.cols.offer(j, v);
                    if v > st.best_bwd[j] {
                        st.best_bwd[j] = v;
                    }
                }
            }
            st
        })
        .collect();

    let mut r_t = Vec::with_capacity(src);
    let mut best_fwd = Vec::with_capacity(src);
    let mut cols = ColumnTopK::new(trg, k);
    let mut best_bwd = vec![f64::NEG_INFINITY; trg];
    for st in partial {
        r_t.extend(st.r_t);
        best_fwd.extend(st.best_fwd);
        cols.merge(st.cols);
        for (b, v) in best_bwd.iter_mut().zip(st.best_bwd) {
            *b = b.max(v);
        }
    }
    let r_s = cols.means();

    // pass 2: argmax of CSLS in both directions
    let stochastic = keep_prob < 1.0;
    struct Picks {
        fwd: Vec<usize>,
        // per target column: (score, source row), masked then unmasked
        bwd_kept: Vec<(f64, usize)>,
        bwd_any: Vec<(f64, usize)>,
    }
    let picks: Vec<Picks> = spans
        .par_iter()
        .map(|&(lo, hi)| {
            let sim = x.slice(s![lo..hi, ..]).dot(&zt);
            let none = (f64::NEG_INFINITY, usize::MAX);
            let mut p = Picks {
                fwd: Vec::with_capacity(hi - lo),
                bwd_kept: vec![none; trg],
                bwd_any: vec![none; trg],
            };
            for (off, row) in sim.rows().into_iter().enumerate() {
                let i = lo + off;
                let mut rng = stochastic.then(|| row_rng(seed, round, i));
                let mut kept = none;
                let mut any = none;
                for (j, &c) in row.iter().enumerate() {
                    let (keep_f, keep_b) = match rng.as_mut() {
                        Some(r) => (r.random::<f64>() < keep_prob, r.random::<f64>() < keep_prob),
                        None => (true, true),
                    };
                    let score = 2.0 * c - r_t[i] - r_s[j];
                    let f = score;
                    if f > any.0 {
                        any = (f, j);
                    }
                    if keep_f && f > kept.0 {
                        kept = (f, j);
                    }
                    let b = score;
                    if b > p.bwd_any[j].0 {
                        p.bwd_any[j] = (b, i);
                    }
                    if keep_b && b > p.bwd_kept[j].0 {
                        p.bwd_kept[j] = (b, i);
                    }
                }
                p.fwd.push(if kept.1 != usize::MAX { kept.1 } else { any.1 });
            }
            p
        })
        .collect();

    let mut pairs = Vec::with_capacity(src + trg);
    let none = (f64::NEG_INFINITY, usize::MAX);
    let mut bwd_kept = vec![none; trg];
    let mut bwd_any = vec![none; trg];
    for p in picks {
        for &j in &p.fwd {
            // only forward pairs so far, so the length is the source id
            pairs.push((pairs.len(), j));
        }
        // strict comparison keeps the lowest source index on ties
        for j in 0..trg {
            if p.bwd_kept[j].0 > bwd_kept[j].0 {
                bwd_kept[j] = p.bwd_kept[j];
            }
            if p.bwd_any[j].0 > bwd_any[j].0 {
                bwd_any[j] = p.bwd_any[j];
            }
        }
    }
    for j in 0..trg {
        let i = if bwd_kept[j].1 != usize::MAX { bwd_kept[j].1 } else { bwd_any[j].1 };
        pairs.push((i, j));
    }

    let objective = (mean(&best_fwd) + mean(&best_bwd)) / 2.0;
    Ok(Induction { pairs, objective })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn row_rng(seed: u64, round: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ round.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(row as u64);
    rng
}

fn to_nalgebra(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

fn from_nalgebra(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

fn gather(m: ArrayView2<f64>, ids: impl Iterator<Item = usize>) -> Array2<f64> {
    let ids: Vec<usize> = ids.collect();
    m.select(Axis(0), &ids)
}

/// Singular value decomposition with a fixed sign convention: the entry of
/// largest magnitude in each left singular vector is positive.
fn svd_sign_fixed(m: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let svd = to_nalgebra(m).svd(true, true);
    let mut u = from_nalgebra(svd.u.as_ref().ok_or_else(|| Error::Numerical("SVD failed".into()))?);
    let mut vt = from_nalgebra(svd.v_t.as_ref().ok_or_else(|| Error::Numerical("SVD failed".into()))?);
    let sv = Array1::from_iter(svd.singular_values.iter().copied());
    for c in 0..u.ncols() {
        let col = u.column(c);
        let pivot = col.iter().fold(0.0f64, |acc, &v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            u.column_mut(c).mapv_inplace(|v| -v);
            vt.row_mut(c).mapv_inplace(|v| -v);
        }
    }
    Ok((u, sv, vt))
}

/// Orthogonal Procrustes over the dictionary rows: `w_source = U Vᵀ` from the
/// SVD of `X_Dᵀ Z_D`, `w_target = I`.
pub fn solve_mapping(
    x: ArrayView2<f64>,
    z: ArrayView2<f64>,
    dictionary: &[(usize, usize)],
) -> Result<(Array2<f64>, Array2<f64>)> {
    let d = x.ncols();
    if z.ncols() != d {
        return Err(Error::DimensionMismatch(d, z.ncols()));
    }
    if dictionary.is_empty() {
        return Err(Error::parameter("dictionary is empty"));
    }
    if let Some(&(i, j)) = dictionary.iter().find(|&&(i, j)| i >= x.nrows() || j >= z.nrows()) {
        return Err(Error::parameter(format!("dictionary pair ({i}, {j}) out of range")));
    }
    if dictionary.len() < d {
        log::warn!(
            "{} dictionary pairs for dimension {d}; the map is underdetermined",
            dictionary.len()
        );
    }
    let xd = gather(x, dictionary.iter().map(|p| p.0));
    let zd = gather(z, dictionary.iter().map(|p| p.1));
    let cross = xd.t().dot(&zd);
    let (u, _, vt) = svd_sign_fixed(&cross)?;
    Ok((u.dot(&vt), Array2::eye(d)))
}

/// Whitening, orthogonal mapping, symmetric re-weighting and de-whitening of
/// both sides, each side de-whitened with its own whitening transform.
pub fn solve_advanced_mapping(
    x: ArrayView2<f64>,
    z: ArrayView2<f64>,
    dictionary: &[(usize, usize)],
) -> Result<(Array2<f64>, Array2<f64>)> {
    let d = x.ncols();
    if z.ncols() != d {
        return Err(Error::DimensionMismatch(d, z.ncols()));
    }
    if dictionary.len() < d {
        return Err(Error::parameter(format!(
            "whitening needs at least {d} dictionary pairs, got {}",
            dictionary.len()
        )));
    }
    let xd = gather(x, dictionary.iter().map(|p| p.0));
    let zd = gather(z, dictionary.iter().map(|p| p.1));

    let (wx1, wx1_inv) = whitening(&xd)?;
    let (wz1, wz1_inv) = whitening(&zd)?;
    let xd1 = xd.dot(&wx1);
    let zd1 = zd.dot(&wz1);

    let (wx2, s, wz2t) = svd_sign_fixed(&xd1.t().dot(&zd1))?;
    let wz2 = wz2t.t().to_owned();

    let reweight = Array2::from_diag(&s.mapv(|v| v.max(0.0).sqrt()));
    let dewhiten_x = wx2.t().dot(&wx1_inv).dot(&wx2);
    let dewhiten_z = wz2.t().dot(&wz1_inv).dot(&wz2);

    let w_source = wx1.dot(&wx2).dot(&reweight).dot(&dewhiten_x);
    let w_target = wz1.dot(&wz2).dot(&reweight).dot(&dewhiten_z);
    Ok((w_source, w_target))
}

// (XᵀX)^(-1/2) and its inverse
fn whitening(m: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let eig = SymmetricEigen::new(to_nalgebra(&m.t().dot(m)));
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if eig.eigenvalues.iter().any(|&l| l <= max * 1e-12) {
        return Err(Error::Numerical("dictionary rows are rank deficient; cannot whiten".into()));
    }
    let v = from_nalgebra(&eig.eigenvectors);
    let inv_sqrt = Array2::from_diag(&Array1::from_iter(eig.eigenvalues.iter().map(|l| l.powf(-0.5))));
    let sqrt = Array2::from_diag(&Array1::from_iter(eig.eigenvalues.iter().map(|l| l.sqrt())));
    Ok((v.dot(&inv_sqrt).dot(&v.t()), v.dot(&sqrt).dot(&v.t())))
}

/// `X (XᵀX)^(-1/2) Xᵀ`, i.e. `U S Uᵀ` for `X = U S Vᵀ`.
fn sqrt_similarity(x: ArrayView2<f64>) -> Array2<f64> {
    let eig = SymmetricEigen::new(to_nalgebra(&x.t().dot(&x)));
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let v = from_nalgebra(&eig.eigenvectors);
    let scale = Array1::from_iter(
        eig.eigenvalues
            .iter()
            .map(|&l| if l > max * 1e-12 { l.powf(-0.5) } else { 0.0 }),
    );
    let a = v.dot(&Array2::from_diag(&scale)).dot(&v.t());
    x.dot(&a).dot(&x.t())
}

/// Initial dictionary from the structure of each space alone.
pub fn initial_dictionary(x: ArrayView2<f64>, z: ArrayView2<f64>, config: &AlignmentConfig) -> Result<Vec<(usize, usize)>> {
    let n = config.init_vocab.min(x.nrows()).min(z.nrows());
    let profile = |m: ArrayView2<f64>| -> Result<Array2<f64>> {
        let mut sim = sqrt_similarity(m.slice(s![..n, ..]));
        for mut row in sim.rows_mut() {
            row.as_slice_mut()
                .expect("owned rows are contiguous")
                .sort_by(f64::total_cmp);
        }
        normalize_matrix(&sim)
            .map_err(|r| Error::Numerical(format!("similarity profile of row {r} is degenerate")))
    };
    let xs = profile(x)?;
    let zs = profile(z)?;
    Ok(induce_dictionary(xs.view(), zs.view(), config.csls_k, n, 1.0, config.seed, 0)?.pairs)
}

/// Unsupervised alignment of `source` onto `target`.
pub fn align(source: &EmbeddingMatrix, target: &EmbeddingMatrix, config: &AlignmentConfig) -> Result<AlignmentModel> {
    let (x, z) = prepare(source, target, config)?;
    let init = initial_dictionary(x.view(), z.view(), config)?;
    log::info!("initial dictionary: {} pairs", init.len());
    self_learn(x.view(), z.view(), init, config)
}

/// Alignment starting from a given dictionary of `(source id, target id)`
/// pairs instead of the unsupervised initialization.
pub fn align_from_dictionary(
    source: &EmbeddingMatrix,
    target: &EmbeddingMatrix,
    dictionary: Vec<(usize, usize)>,
    config: &AlignmentConfig,
) -> Result<AlignmentModel> {
    let (x, z) = prepare(source, target, config)?;
    self_learn(x.view(), z.view(), dictionary, config)
}

fn prepare(source: &EmbeddingMatrix, target: &EmbeddingMatrix, config: &AlignmentConfig) -> Result<(Array2<f64>, Array2<f64>)> {
    config.validate()?;
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch(source.dim(), target.dim()));
    }
    if source.len() < 2 || target.len() < 2 {
        return Err(Error::parameter("both vocabularies need at least 2 words"));
    }
    Ok((normalize_f64(source)?, normalize_f64(target)?))
}

/// The self-learning loop over normalized spaces.
pub fn self_learn(
    x: ArrayView2<f64>,
    z: ArrayView2<f64>,
    mut dictionary: Vec<(usize, usize)>,
    config: &AlignmentConfig,
) -> Result<AlignmentModel> {
    config.validate()?;
    let mut keep_prob = config.keep_prob;
    let mut best: Option<f64> = None;
    let mut objective = f64::NEG_INFINITY;
    let mut last_improvement = 0usize;
    let mut finishing = false;
    let mut converged = false;
    let mut history = Vec::new();
    let mut previous: Option<Vec<(usize, usize)>> = None;
    let mut it = 1usize;

    let (w_source, w_target) = loop {
        if it - last_improvement > config.stagnation_window {
            if keep_prob >= 1.0 {
                finishing = true;
            }
            keep_prob = (keep_prob * config.keep_prob_multiplier).min(1.0);
            last_improvement = it;
        }
        let (ws, wt) = solve_mapping(x, z, &dictionary)?;
        if finishing {
            converged = true;
            break (ws, wt);
        }
        if it > config.max_iterations {
            break (ws, wt);
        }

        let xw = x.dot(&ws);
        let induced = induce_dictionary(
            xw.view(),
            z,
            config.csls_k,
            config.vocab_cutoff,
            keep_prob,
            config.seed,
            it as u64,
        )?;
        objective = induced.objective;
        dictionary = induced.pairs;
        history.push(IterationRecord {
            iteration: it,
            keep_prob,
            objective,
            dictionary_size: dictionary.len(),
        });
        log::debug!("iteration {it}: keep_prob {keep_prob:.3} objective {objective:.6}");

        let improved = match best {
            None => true,
            Some(b) => objective - b >= config.convergence_tol * b.abs(),
        };
        if improved {
            best = Some(objective);
            last_improvement = it;
        } else if keep_prob >= 1.0 {
            // deterministic induction has stopped improving
            finishing = true;
        }
        // a deterministic round that reproduces its input is a fixed point
        if keep_prob >= 1.0 && previous.as_ref() == Some(&dictionary) {
            finishing = true;
        }
        previous = (keep_prob >= 1.0).then(|| dictionary.clone());
        it += 1;
    };

    let (w_source, w_target) = if config.orthogonal {
        (w_source, w_target)
    } else {
        solve_advanced_mapping(x, z, &dictionary)?
    };

    Ok(AlignmentModel {
        w_source,
        w_target,
        induced_dictionary: dictionary,
        objective,
        converged,
        iterations: history.len(),
        history,
    })
}

/// Multiplies every row by `w`; the vocabulary is unchanged.
pub fn project(m: &EmbeddingMatrix, w: &Array2<f64>) -> Result<EmbeddingMatrix> {
    if w.nrows() != m.dim() {
        return Err(Error::DimensionMismatch(m.dim(), w.nrows()));
    }
    let out = to_f64(m).dot(w).mapv(|v| v as f32);
    EmbeddingMatrix::new(m.vocab().clone(), out)
}

/// Both spaces normalized and mapped into the shared space.
pub fn mapped_embeddings(
    source: &EmbeddingMatrix,
    target: &EmbeddingMatrix,
    model: &AlignmentModel,
) -> Result<(EmbeddingMatrix, EmbeddingMatrix)> {
    let xs = normalize_f64(source)?.dot(&model.w_source).mapv(|v| v as f32);
    let zs = normalize_f64(target)?.dot(&model.w_target).mapv(|v| v as f32);
    Ok((
        EmbeddingMatrix::new(source.vocab().clone(), xs)?,
        EmbeddingMatrix::new(target.vocab().clone(), zs)?,
    ))
}

/// Fraction of `gold` pairs whose source maps to its target as the cosine
/// nearest neighbor among all target rows.
pub fn precision_at_1(mapped_x: ArrayView2<f64>, mapped_z: ArrayView2<f64>, gold: &[(usize, usize)]) -> f64 {
    if gold.is_empty() {
        return 0.0;
    }
    let unit = |m: ArrayView2<f64>| {
        let mut m = m.to_owned();
        for mut r in m.rows_mut() {
            let n = r.dot(&r).sqrt();
            if n > 0.0 {
                r /= n;
            }
        }
        m
    };
    let z = unit(mapped_z);
    let hits: usize = gold
        .par_chunks(BLOCK)
        .map(|chunk| {
            let x = unit(gather(mapped_x, chunk.iter().map(|p| p.0)).view());
            let sim = x.dot(&z.t());
            chunk
                .iter()
                .zip(sim.rows())
                .filter(|(&(_, t), row)| {
                    let mut best = (f64::NEG_INFINITY, usize::MAX);
                    for (j, &v) in row.iter().enumerate() {
                        if v > best.0 {
                            best = (v, j);
                        }
                    }
                    best.1 == t
                })
                .count()
        })
        .sum();
    hits as f64 / gold.len() as f64
}

pub fn write_dictionary<W: Write>(
    mut out: W,
    pairs: &[(usize, usize)],
    source: &Vocabulary,
    target: &Vocabulary,
) -> Result<()> {
    for &(i, j) in pairs {
        writeln!(out, "{}\t{}", source.word(i), target.word(j))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `source<TAB>target` lines, keeping pairs whose words both exist.
pub fn read_dictionary<R: BufRead>(input: R, source: &Vocabulary, target: &Vocabulary) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::format(n + 1, "expected 'source<TAB>target'"));
        };
        if let (Some(i), Some(j)) = (source.id(a), target.id(b)) {
            pairs.push((i, j));
        }
    }
    Ok(pairs)
}

/// `d d` header, then `d` rows of `d` values.
pub fn write_transform<W: Write>(mut out: W, w: &Array2<f64>) -> Result<()> {
    writeln!(out, "{} {}", w.nrows(), w.ncols())?;
    for row in w.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_transform<R: BufRead>(input: R) -> Result<Array2<f64>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::format(1, "missing header"))??;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| Error::format(1, format!("bad header: {e}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::format(1, "header must be 'rows cols'"));
    };
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::format(r + 2, "missing row"))??;
        let before = data.len();
        for t in line.split_whitespace() {
            data.push(t.parse::<f64>().map_err(|e| Error::format(r + 2, format!("bad value: {e}")))?);
        }
        if data.len() - before != cols {
            return Err(Error::format(r + 2, format!("expected {cols} values")));
        }
    }
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::format(1, e.to_string()))
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use rand_distr::StandardNormal;

    pub fn random_unit_rows(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal));
        unit_rows(&mut m).unwrap();
        m
    }

    /// Random orthogonal matrix from the QR factorization of a Gaussian one.
    pub fn random_orthogonal(d: usize, seed: u64) -> Array2<f64> {
        let g = random_unit_rows(d, d, seed);
        let qr = to_nalgebra(&g).qr();
        from_nalgebra(&qr.q())
    }
}
