//! Acceptance criteria. Prints one PASS or FAIL line per criterion and exits
//! nonzero if any failed.

use std::fs;
use std::io::Cursor;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use xlex::align::{self, csls, induce_dictionary, mapped_embeddings, orthogonality_error, precision_at_1, AlignmentConfig};
use xlex::config::RunConfig;
use xlex::embedding::{EmbeddingMatrix, TrainingConfig, TrainingMode};
use xlex::eval::{format_table, load_dataset, spearman, EvalReport};
use xlex::sgns::pair_loss;
use xlex::subword::composed_pair_loss;
use xlex::synthetic::{DeskCorpus, SyntheticConfig};
use xlex::{Error, Vocabulary};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Orthogonality errors of every transform learned in this run.
static TRANSFORMS: Mutex<Vec<(String, f64)>> = Mutex::new(Vec::new());

fn record(label: &str, model: &xlex::AlignmentModel) {
    let err = orthogonality_error(&model.w_source).max(orthogonality_error(&model.w_target));
    TRANSFORMS.lock().unwrap().push((label.to_string(), err));
}

fn xlex_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xlex"))
}

fn run_in(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = xlex_bin()
        .args(args)
        .current_dir(dir)
        .env("XLEX_THREADS", "1")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "xlex {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn unit_rows(mut m: Array2<f64>) -> Array2<f64> {
    for mut r in m.rows_mut() {
        let n = r.dot(&r).sqrt();
        r /= n;
    }
    m
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let g = Normal::new(0.0, 1.0).unwrap();
    Array2::from_shape_simple_fn((rows, cols), || g.sample(rng))
}

fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let g = gaussian(d, d, rng);
    let q = nalgebra::DMatrix::from_fn(d, d, |i, j| g[[i, j]]).qr().q();
    Array2::from_shape_fn((d, d), |(i, j)| q[(i, j)])
}

fn embedding(prefix: &str, m: &Array2<f64>) -> EmbeddingMatrix {
    let words = (0..m.nrows()).map(|i| format!("{prefix}{i}")).collect();
    EmbeddingMatrix::new(Vocabulary::from_words(words).unwrap(), m.mapv(|v| v as f32)).unwrap()
}

/// Plants a rotation and a row shuffle, aligns without supervision and
/// returns P@1 against the planted permutation.
fn planted_rotation(n: usize, d: usize, sigma: f64, seed: u64) -> Result<(f64, Duration), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = unit_rows(gaussian(n, d, &mut rng));
    let rotated = x.dot(&random_rotation(d, &mut rng));
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let noise = gaussian(n, d, &mut rng) * sigma;
    let mut z = Array2::zeros((n, d));
    for (i, &p) in perm.iter().enumerate() {
        z.row_mut(p).assign(&(&rotated.row(i) + &noise.row(i)));
    }
    let z = unit_rows(z);

    let t0 = Instant::now();
    let (src, trg) = (embedding("s", &x), embedding("t", &z));
    let model = align::align(&src, &trg, &AlignmentConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();
    record(&format!("rotation sigma={sigma}"), &model);
    let (ms, mt) = mapped_embeddings(&src, &trg, &model).map_err(|e| e.to_string())?;
    let gold: Vec<(usize, usize)> = perm.iter().enumerate().map(|(i, &p)| (i, p)).collect();
    let p1 = precision_at_1(align::to_f64(&ms).view(), align::to_f64(&mt).view(), &gold);
    Ok((p1, elapsed))
}

fn reference_configuration() -> Outcome {
    let t = TrainingConfig::default();
    ensure!(t.mode == TrainingMode::Skipgram, "default mode {}", t.mode);
    ensure!(
        (t.dim, t.window, t.min_count, t.epochs) == (300, 4, 1, 100),
        "defaults dim={} ws={} minCount={} epoch={}",
        t.dim,
        t.window,
        t.min_count,
        t.epochs
    );
    // omitted flags are recorded in the manifest
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    fs::write(dir.path().join("tiny.txt"), "pula e a na\nmaru a pula\n").unwrap();
    run_in(dir.path(), &["train", "tiny.txt", "--deterministic", "--out", "run"])?;
    let manifest = RunConfig::load(dir.path().join("run/manifest.conf")).map_err(|e| e.to_string())?;
    let m = &manifest.training;
    ensure!(
        (m.dim, m.window, m.min_count, m.epochs, m.mode) == (300, 4, 1, 100, TrainingMode::Skipgram),
        "manifest records {m:?}"
    );
    let header = fs::read_to_string(dir.path().join("run/embeddings.vec")).unwrap();
    ensure!(header.starts_with("5 300\n"), "header {:?}", header.lines().next());
    // report rows use the published two-decimal layout
    let row = EvalReport {
        model_id: "Setswana-Sepedi".into(),
        dataset: "WordSim".into(),
        pairs_total: 0,
        pairs_covered: 0,
        coverage_percent: 68.56,
        word_coverage_percent: 0.0,
        spearman_rho_percent: Some(40.87),
        rejected_rows: 0,
        error: None,
    };
    let table = format_table(&[row]);
    ensure!(table.contains("Setswana-Sepedi(WordSim)     68.56     40.87"), "table:\n{table}");
    Ok("defaults dim 300, ws 4, minCount 1, epoch 100 recorded in the manifest".into())
}

fn rotation_recovery() -> Outcome {
    let (clean, t_clean) = planted_rotation(2000, 50, 0.0, 11)?;
    let (noisy, t_noisy) = planted_rotation(2000, 50, 0.01, 12)?;
    let limit = Duration::from_secs(120);
    ensure!(clean >= 0.99, "noise-free P@1 {:.2}%", 100.0 * clean);
    ensure!(noisy >= 0.90, "sigma=0.01 P@1 {:.2}%", 100.0 * noisy);
    ensure!(t_clean < limit && t_noisy < limit, "took {t_clean:.1?} and {t_noisy:.1?}");
    Ok(format!(
        "2000x50 P@1 {:.2}% in {t_clean:.1?}; sigma=0.01 P@1 {:.2}% in {t_noisy:.1?}",
        100.0 * clean,
        100.0 * noisy
    ))
}

fn orthogonality() -> Outcome {
    for seed in 0..4 {
        planted_rotation(300, 20, 0.05 * seed as f64, 100 + seed)?;
    }
    let all = TRANSFORMS.lock().unwrap().clone();
    let worst = all.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    ensure!(!all.is_empty(), "no alignments recorded");
    for (label, e) in &all {
        ensure!(*e < 1e-5, "{label}: |WtW - I| = {e:e}");
    }
    Ok(format!("{} transforms, worst |WtW - I|_F = {worst:.2e}", all.len()))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// The negative-sampling loss written out directly.
fn loss_oracle(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    -sigmoid(dot(center, context)).ln() - negatives.iter().map(|n| sigmoid(-dot(center, n)).ln()).sum::<f64>()
}

fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let scale = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / scale(analytic).max(scale(numeric)).max(1e-12)
}

/// Central differences of `f` around `v`.
fn numeric_gradient(v: &[f64], eps: f64, f: &dyn Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let (mut up, mut down) = (v.to_vec(), v.to_vec());
            up[i] += eps;
            down[i] -= eps;
            (f(&up) - f(&down)) / (2.0 * eps)
        })
        .collect()
}

fn gradient_checks() -> Outcome {
    const EPS: f64 = 1e-5;
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = Normal::new(0.0, 0.5).unwrap();
    let mut worst: f64 = 0.0;
    let vec_of = |d: usize, rng: &mut ChaCha8Rng| (0..d).map(|_| g.sample(rng)).collect::<Vec<f64>>();
    for _ in 0..100 {
        let d = rng.random_range(4..=16);
        let center = vec_of(d, &mut rng);
        let context = vec_of(d, &mut rng);
        let negs: Vec<Vec<f64>> = (0..rng.random_range(1..=6)).map(|_| vec_of(d, &mut rng)).collect();
        let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let got = pair_loss(&center, &context, &refs);
        ensure!((got.loss - loss_oracle(&center, &context, &negs)).abs() < 1e-12, "loss value differs");
        worst = worst.max(relative_error(
            &got.d_center,
            &numeric_gradient(&center, EPS, &|c| loss_oracle(c, &context, &negs)),
        ));
        worst = worst.max(relative_error(
            &got.d_context,
            &numeric_gradient(&context, EPS, &|x| loss_oracle(&center, x, &negs)),
        ));
        for k in 0..negs.len() {
            let numeric = numeric_gradient(&negs[k], EPS, &|n| {
                let mut moved = negs.clone();
                moved[k] = n.to_vec();
                loss_oracle(&center, &context, &moved)
            });
            worst = worst.max(relative_error(&got.d_negatives[k], &numeric));
        }
    }
    let sgns_worst = worst;

    worst = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(4..=16);
        let units: Vec<Vec<f64>> = (0..rng.random_range(1..=8)).map(|_| vec_of(d, &mut rng)).collect();
        let context = vec_of(d, &mut rng);
        let negs: Vec<Vec<f64>> = (0..rng.random_range(1..=6)).map(|_| vec_of(d, &mut rng)).collect();
        let unit_refs: Vec<&[f64]> = units.iter().map(Vec::as_slice).collect();
        let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let got = composed_pair_loss(&unit_refs, &context, &neg_refs);
        let composed = |us: &[Vec<f64>], ctx: &[f64], ns: &[Vec<f64>]| {
            let mean: Vec<f64> = (0..d).map(|c| us.iter().map(|u| u[c]).sum::<f64>() / us.len() as f64).collect();
            loss_oracle(&mean, ctx, ns)
        };
        for k in 0..units.len() {
            let numeric = numeric_gradient(&units[k], EPS, &|u| {
                let mut moved = units.clone();
                moved[k] = u.to_vec();
                composed(&moved, &context, &negs)
            });
            worst = worst.max(relative_error(&got.d_units[k], &numeric));
        }
        worst = worst.max(relative_error(
            &got.d_context,
            &numeric_gradient(&context, EPS, &|x| composed(&units, x, &negs)),
        ));
        for k in 0..negs.len() {
            let numeric = numeric_gradient(&negs[k], EPS, &|n| {
                let mut moved = negs.clone();
                moved[k] = n.to_vec();
                composed(&units, &context, &moved)
            });
            worst = worst.max(relative_error(&got.d_negatives[k], &numeric));
        }
    }
    let elapsed = t0.elapsed();
    ensure!(sgns_worst < 1e-4, "skip-gram relative error {sgns_worst:e}");
    ensure!(worst < 1e-4, "composed relative error {worst:e}");
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:.1?}");
    Ok(format!(
        "worst relative error {sgns_worst:.1e} (skip-gram), {worst:.1e} (composed), {elapsed:.1?}"
    ))
}

/// Ranks by definition: values below plus the midpoint of the tie group.
fn ranks_oracle(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let below = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson_oracle(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    (saa != 0.0 && sbb != 0.0).then(|| (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

fn spearman_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tied = 0;
    let mut undefined = 0;
    for i in 0..1000 {
        let n = rng.random_range(2..60);
        let draw = |rng: &mut ChaCha8Rng| -> f64 {
            if i % 2 == 0 {
                rng.random_range(0..6) as f64
            } else {
                rng.random_range(-1.0..1.0)
            }
        };
        let xs: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let ys: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let expected = pearson_oracle(&ranks_oracle(&xs), &ranks_oracle(&ys));
        let got = spearman(&xs, &ys).ok();
        ensure!(got == expected, "instance {i}: got {got:?}, oracle {expected:?}");
        tied += (i % 2 == 0) as usize;
        undefined += expected.is_none() as usize;
    }
    ensure!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).ok() == Some(1.0), "identical ranks");
    ensure!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).ok() == Some(-1.0), "reversed ranks");
    ensure!(
        matches!(spearman(&[4.0, 4.0, 4.0], &[1.0, 2.0, 3.0]), Err(Error::UndefinedCorrelation(_))),
        "constant list must be an error"
    );
    let xs = [1.0, 2.0, 2.0, 4.0];
    let ys = [1.0, 3.0, 2.0, 4.0];
    ensure!(
        spearman(&xs, &ys).ok() == pearson_oracle(&ranks_oracle(&xs), &ranks_oracle(&ys)),
        "tied example"
    );
    Ok(format!("1000 instances identical ({tied} with ties, {undefined} undefined); boundaries hold"))
}

/// Top-k mean by full sort.
fn mean_top(mut v: Vec<f64>, k: usize) -> f64 {
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v[..k].iter().sum::<f64>() / k as f64
}

fn csls_oracle(x: &Array2<f64>, z: &Array2<f64>, k: usize) -> Vec<Vec<f64>> {
    let cos = |i: usize, j: usize| (0..x.ncols()).map(|c| x[[i, c]] * z[[j, c]]).sum::<f64>();
    let (n, m) = (x.nrows(), z.nrows());
    let r_t: Vec<f64> = (0..n).map(|i| mean_top((0..m).map(|j| cos(i, j)).collect(), k)).collect();
    let r_s: Vec<f64> = (0..m).map(|j| mean_top((0..n).map(|i| cos(i, j)).collect(), k)).collect();
    (0..n)
        .map(|i| (0..m).map(|j| 2.0 * cos(i, j) - r_t[i] - r_s[j]).collect())
        .collect()
}

fn first_max(v: impl Iterator<Item = f64>) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, s) in v.enumerate() {
        if s > best.0 {
            best = (s, i);
        }
    }
    best.1
}

fn csls_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let d = rng.random_range(5..40);
        let k = rng.random_range(1..=15);
        let x = unit_rows(gaussian(100, d, &mut rng));
        let z = unit_rows(gaussian(100, d, &mut rng));
        let oracle = csls_oracle(&x, &z, k);
        let got = csls(&x.dot(&z.t()), k).map_err(|e| e.to_string())?;
        for i in 0..100 {
            for j in 0..100 {
                worst = worst.max((got[[i, j]] - oracle[i][j]).abs());
            }
        }
        let induced = induce_dictionary(x.view(), z.view(), k, 100, 1.0, 0, 0).map_err(|e| e.to_string())?;
        let mut expected: Vec<(usize, usize)> = (0..100).map(|i| (i, first_max(oracle[i].iter().copied()))).collect();
        expected.extend((0..100).map(|j| (first_max(oracle.iter().map(|r| r[j])), j)));
        ensure!(induced.pairs == expected, "trial {trial}: induced dictionary differs from the oracle argmax");
    }
    ensure!(worst < 1e-12, "csls differs from the oracle by {worst:e}");

    // brute-force search for a 5x5 instance where a hub wins under cosine
    // but not under CSLS
    let k = 2;
    let mut found = None;
    for seed in 0..10_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = unit_rows(gaussian(5, 3, &mut rng));
        let mut z = unit_rows(&x + &(gaussian(5, 3, &mut rng) * 0.3));
        let centroid = x.sum_axis(ndarray::Axis(0));
        z.row_mut(4).assign(&(&centroid / centroid.dot(&centroid).sqrt()));
        let sim = x.dot(&z.t());
        let scores = csls(&sim, k).map_err(|e| e.to_string())?;
        let inverted = (0..4).find(|&i| sim[[i, 4]] > sim[[i, i]] && scores[[i, i]] > scores[[i, 4]]);
        if let Some(i) = inverted {
            found = Some((seed, i, sim[[i, i]], sim[[i, 4]], scores[[i, i]], scores[[i, 4]]));
            break;
        }
    }
    let Some((seed, i, c_true, c_hub, s_true, s_hub)) = found else {
        return Err("no hub instance found".into());
    };
    Ok(format!(
        "10 random 100x100 instances match (max diff {worst:.1e}, same induced dictionaries); \
         hub instance seed {seed}, source {i}: cosine {c_true:.3} < hub {c_hub:.3}, CSLS {s_true:.3} > hub {s_hub:.3}"
    ))
}

fn desk_corpus(dir: &Path, bytes: usize) -> DeskCorpus {
    let desk = DeskCorpus::generate(&SyntheticConfig {
        bytes_per_half: bytes,
        ..SyntheticConfig::default()
    });
    fs::write(dir.join("source.txt"), &desk.source_text).unwrap();
    fs::write(dir.join("target.txt"), &desk.target_text).unwrap();
    let table: String = desk.dictionary().iter().map(|(s, t)| format!("{s}\t{t}\n")).collect();
    fs::write(dir.join("cipher.tsv"), table).unwrap();
    fs::write(dir.join("similarity.tsv"), &desk.similarity_tsv).unwrap();
    fs::write(dir.join("cross.tsv"), &desk.cross_similarity_tsv).unwrap();
    desk
}

const TRAIN: [&str; 6] = ["--dim", "50", "--epochs", "5", "--deterministic", "--seed"];

fn desk_pipeline() -> Outcome {
    let t0 = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    desk_corpus(dir, 1_000_000);
    let mb = fs::metadata(dir.join("source.txt")).unwrap().len() as f64 / 1e6;

    run_in(dir, &[&["train", "source.txt"][..], &TRAIN, &["1", "--out", "src"]].concat())?;
    run_in(dir, &[&["train", "target.txt"][..], &TRAIN, &["1", "--out", "trg"]].concat())?;
    run_in(
        dir,
        &["align", "src/embeddings.vec", "trg/embeddings.vec", "--gold", "cipher.tsv", "--out", "aligned"],
    )?;
    let log = fs::read_to_string(dir.join("aligned/align.log")).unwrap();
    let p1: f64 = log
        .lines()
        .find_map(|l| l.strip_prefix("p@1="))
        .and_then(|l| l.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .ok_or("no p@1 in align.log")?;
    let w = align::read_transform(std::io::BufReader::new(fs::File::open(dir.join("aligned/w_source.txt")).unwrap()))
        .map_err(|e| e.to_string())?;
    TRANSFORMS.lock().unwrap().push(("desk pipeline".into(), orthogonality_error(&w)));

    let mono = run_in(dir, &["eval", "--embeddings", "src/embeddings.vec", "--dataset", "similarity.tsv"])?;
    let cross = run_in(
        dir,
        &[
            "eval",
            "--cross-lingual",
            "--embeddings",
            "aligned/source.mapped.vec",
            "aligned/target.mapped.vec",
            "--dataset",
            "cross.tsv",
        ],
    )?;
    let elapsed = t0.elapsed();
    print!("{mono}{cross}");
    ensure!(mono.starts_with("Model") && mono.contains("Coverage") && mono.contains("Spearman"), "report layout");
    ensure!(cross.contains("100.00"), "cross-lingual coverage:\n{cross}");
    ensure!(p1 >= 80.0, "cipher P@1 {p1:.2}%");
    ensure!(elapsed < Duration::from_secs(600), "took {elapsed:.1?}");
    Ok(format!("{mb:.2} MB per half, cipher P@1 {p1:.2}%, {elapsed:.1?}"))
}

fn files_of(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn same_outputs(dir: &Path, a: &str, b: &str) -> Result<usize, String> {
    let (fa, fb) = (files_of(&dir.join(a)), files_of(&dir.join(b)));
    ensure!(fa.len() == fb.len(), "{a} and {b} hold different files");
    for ((na, ca), (nb, cb)) in fa.iter().zip(&fb) {
        ensure!(na == nb && ca == cb, "{a}/{na} differs from {b}/{nb}");
    }
    Ok(fa.len())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    desk_corpus(dir, 150_000);
    let mut checked = 0;
    run_in(dir, &[&["train", "source.txt"][..], &TRAIN, &["7", "--out", "a"]].concat())?;
    run_in(dir, &["train", "--config", "a/manifest.conf", "--out", "a2"])?;
    checked += same_outputs(dir, "a", "a2")?;
    run_in(
        dir,
        &["train", "target.txt", "--mode", "subword", "--buckets", "100000", "--dim", "20", "--epochs", "2", "--deterministic", "--out", "b"],
    )?;
    run_in(dir, &["train", "--config", "b/manifest.conf", "--out", "b2"])?;
    checked += same_outputs(dir, "b", "b2")?;
    run_in(dir, &[&["train", "target.txt"][..], &TRAIN, &["7", "--out", "c"]].concat())?;
    run_in(dir, &["align", "a/embeddings.vec", "c/embeddings.vec", "--deterministic", "--out", "m"])?;
    run_in(dir, &["align", "--config", "m/manifest.conf", "--out", "m2"])?;
    checked += same_outputs(dir, "m", "m2")?;
    let eval = ["eval", "--embeddings", "a/embeddings.vec", "a2/embeddings.vec", "--dataset", "similarity.tsv", "--tsv"];
    let (e1, e2) = (run_in(dir, &eval)?, run_in(dir, &eval)?);
    ensure!(e1 == e2, "eval output differs between runs");
    Ok(format!("{checked} files byte-identical across manifest reruns; eval output identical"))
}

fn format_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let words: Vec<String> = (0..200).map(|i| format!("lentswe{i}")).collect();
    let m = Array2::from_shape_fn((200, 30), |(i, _)| {
        let scale = 10f32.powi((i % 9) as i32 - 4);
        rng.random_range(-1.0f32..1.0) * scale
    });
    let e = EmbeddingMatrix::new(Vocabulary::from_words(words).unwrap(), m.clone()).unwrap();
    let mut buf = Vec::new();
    e.write_text(&mut buf).map_err(|e| e.to_string())?;
    let back = EmbeddingMatrix::read_text(Cursor::new(buf)).map_err(|e| e.to_string())?;
    ensure!(back.vocab().words() == e.vocab().words(), "vocabulary changed");
    let dev = (back.matrix() - &m).iter().fold(0.0f32, |a, v| a.max(v.abs()));
    ensure!(dev < 1e-5, "max deviation {dev:e}");

    let wordsim = "Word 1,Word 2,Human (mean)\nmosadi,monna,7.35\npula,letsatsi,5.20\nntlo,motse,6.77\n";
    let simlex = "word1\tword2\tSimLex999\nmotho\tbatho\t8.10\nkgomo\tpudi\t6.02\n";
    let bare = "motho\tbatho\t8.10\nkgomo\tpudi\t6.02\n";
    for (name, text, pairs) in [("wordsim", wordsim, 3), ("simlex", simlex, 2), ("bare", bare, 2)] {
        let d = load_dataset(name, Cursor::new(text)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(d.pairs.len() == pairs && d.rejected.is_empty(), "{name}: {} pairs", d.pairs.len());
    }
    for (text, line) in [
        ("a\tb\t5.0\nc\td\n", 2),
        ("word1\tword2\tscore\na\tb\t1\nc\td\tmany\n", 3),
        ("a\tb\tx\n", 1),
        ("a,b,1,2\n", 1),
    ] {
        match load_dataset("bad", Cursor::new(text)) {
            Err(Error::Format { line: l, .. }) if l == line => {}
            other => return Err(format!("{text:?}: expected a format error at line {line}, got {other:?}")),
        }
    }
    Ok(format!("embedding max deviation {dev:e}; three-column files with and without header load; malformed rows report their line"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("reference configuration and layout", reference_configuration),
        ("rotation recovery", rotation_recovery),
        ("gradient checks", gradient_checks),
        ("spearman oracle", spearman_oracle),
        ("csls correctness and hubness", csls_correctness),
        ("desk pipeline", desk_pipeline),
        ("determinism", determinism),
        ("format round-trips", format_round_trips),
        ("orthogonality", orthogonality),
    ];
    // keep panic messages out of the report; they come back as FAIL lines
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let t0 = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{:.1?}]", t0.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{:.1?}]", t0.elapsed());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
