//! The `xlex` binary end to end on small fixtures.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn xlex(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xlex"))
        .args(args)
        .current_dir(dir)
        .env("XLEX_THREADS", "1")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const FIXTURE: &str = "Motho ke motho ka batho.\nBatho ba rata pula, pula e a na.\nNgwana o bona pula le maru.\n";

fn fixture_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let text = FIXTURE.repeat(40);
    fs::write(dir.path().join("corpus.txt"), text).unwrap();
    dir
}

/// A `V d` embedding file with the given rows.
fn write_vec(path: &Path, rows: &[(&str, Vec<f32>)]) {
    let mut s = format!("{} {}\n", rows.len(), rows[0].1.len());
    for (w, v) in rows {
        let vals: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        s.push_str(&format!("{w} {}\n", vals.join(" ")));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn stats_single_and_multiple() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.txt"), "a a b").unwrap();
    fs::write(dir.path().join("other.txt"), "x y z w").unwrap();
    let o = xlex(dir.path(), &["stats", "tiny.txt"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("tokens=3  unique=2"), "{}", stdout(&o));
    let o = xlex(dir.path(), &["stats", "tiny.txt", "other.txt"]);
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn missing_file_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = xlex(dir.path(), &["stats", "nowhere.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere.txt"), "{}", stderr(&o));
}

#[test]
fn train_writes_embeddings_vocab_and_manifest() {
    let dir = fixture_dir();
    let o = xlex(dir.path(), &["train", "corpus.txt", "--mode", "skipgram", "--dim", "50", "--epochs", "5", "--out", "m"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let vec = fs::read_to_string(dir.path().join("m/embeddings.vec")).unwrap();
    let header = vec.lines().next().unwrap();
    assert!(header.ends_with(" 50"), "{header}");
    let vocab = fs::read_to_string(dir.path().join("m/vocab.tsv")).unwrap();
    assert!(vocab.starts_with("pula\t"), "{vocab}");
    let manifest = fs::read_to_string(dir.path().join("m/manifest.conf")).unwrap();
    assert!(manifest.contains("dim = 50") && manifest.contains("corpus = corpus.txt"));
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let dir = fixture_dir();
    let args = |out: &'static str| ["train", "corpus.txt", "--dim", "16", "--epochs", "3", "--deterministic", "--seed", "7", "--out", out];
    assert!(xlex(dir.path(), &args("a")).status.success());
    assert!(xlex(dir.path(), &args("b")).status.success());
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/embeddings.vec"), read("b/embeddings.vec"));
    let o = xlex(dir.path(), &["train", "--config", "a/manifest.conf", "--out", "c"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read("a/embeddings.vec"), read("c/embeddings.vec"));
}

#[test]
fn subword_training_composes_oov_words() {
    let dir = fixture_dir();
    fs::write(dir.path().join("oov.txt"), "bathonyana\nmotho\nqqq\n").unwrap();
    let o = xlex(
        dir.path(),
        &["train", "corpus.txt", "--mode", "subword", "--dim", "10", "--epochs", "2", "--buckets", "5000", "--oov-words", "oov.txt", "--out", "s"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let oov = fs::read_to_string(dir.path().join("s/oov.vec")).unwrap();
    // "qqq" shares no trained n-gram and is skipped
    assert!(oov.starts_with("2 10\nbathonyana "), "{oov}");
}

#[test]
fn oov_words_need_subword_mode() {
    let dir = fixture_dir();
    fs::write(dir.path().join("oov.txt"), "x\n").unwrap();
    let o = xlex(dir.path(), &["train", "corpus.txt", "--dim", "4", "--epochs", "1", "--oov-words", "oov.txt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn align_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    write_vec(&dir.path().join("a.vec"), &[("a", vec![1.0; 50]), ("b", vec![0.5; 50])]);
    write_vec(&dir.path().join("b.vec"), &[("c", vec![1.0; 300]), ("d", vec![0.5; 300])]);
    let o = xlex(dir.path(), &["align", "a.vec", "b.vec"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("dimension mismatch 50 vs 300"), "{}", stderr(&o));
}

/// Source rows, and the same rows rotated in the first two coordinates and
/// listed in reverse order.
fn rotated_pair(dir: &Path, n: usize) {
    let mut src = Vec::new();
    let mut trg = Vec::new();
    let mut gold = String::new();
    let mut state = 12345u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) as f32
    };
    let names: Vec<String> = (0..n).map(|i| format!("w{}", char::from(b'a' + (i % 26) as u8).to_string() + &"x".repeat(i / 26))).collect();
    for name in &names {
        let v: Vec<f32> = (0..8).map(|_| next()).collect();
        let (c, s) = (0.6f32, 0.8f32);
        let mut r = v.clone();
        r[0] = c * v[0] - s * v[1];
        r[1] = s * v[0] + c * v[1];
        src.push((format!("s{name}"), v));
        trg.push((format!("t{name}"), r));
        gold.push_str(&format!("s{name}\tt{name}\n"));
    }
    trg.reverse();
    let src_ref: Vec<(&str, Vec<f32>)> = src.iter().map(|(w, v)| (w.as_str(), v.clone())).collect();
    let trg_ref: Vec<(&str, Vec<f32>)> = trg.iter().map(|(w, v)| (w.as_str(), v.clone())).collect();
    write_vec(&dir.join("src.vec"), &src_ref);
    write_vec(&dir.join("trg.vec"), &trg_ref);
    fs::write(dir.join("gold.tsv"), gold).unwrap();
}

#[test]
fn align_recovers_a_rotated_copy() {
    let dir = tempfile::tempdir().unwrap();
    rotated_pair(dir.path(), 200);
    let o = xlex(dir.path(), &["align", "src.vec", "trg.vec", "--gold", "gold.tsv", "--out", "al"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = fs::read_to_string(dir.path().join("al/align.log")).unwrap();
    let p1: f64 = log
        .lines()
        .find_map(|l| l.strip_prefix("p@1="))
        .and_then(|l| l.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(p1 >= 99.0, "{log}");
    for f in ["w_source.txt", "w_target.txt", "source.mapped.vec", "target.mapped.vec", "dictionary.tsv", "manifest.conf"] {
        assert!(dir.path().join("al").join(f).exists(), "{f}");
    }
    assert!(fs::read_to_string(dir.path().join("al/w_source.txt")).unwrap().starts_with("8 8\n"));
}

#[test]
fn non_convergence_is_logged_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    rotated_pair(dir.path(), 100);
    let o = xlex(dir.path(), &["align", "src.vec", "trg.vec", "--max-iterations", "2", "--out", "al"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let log = fs::read_to_string(dir.path().join("al/align.log")).unwrap();
    assert!(log.contains("converged=false"), "{log}");
}

fn eval_fixture(dir: &Path) {
    let words = ["pula", "maru", "noka", "lewatle", "ntlo", "motse", "motho", "batho", "kgomo", "pudi", "tau", "nku", "podi", "ntšwa", "katse", "nonyane", "tlhapi", "noga", "phiri"];
    let rows: Vec<(&str, Vec<f32>)> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (*w, vec![1.0, i as f32 * 0.1, (i as f32).sin()]))
        .collect();
    write_vec(&dir.join("model.vec"), &rows);
    // ten pairs; "kwena" is not in the model
    let mut ten = String::from("word1\tword2\tscore\n");
    for i in 0..9 {
        ten.push_str(&format!("{}\t{}\t{}\n", words[2 * i], words[2 * i + 1], i));
    }
    ten.push_str("phiri\tkwena\t3\n");
    fs::write(dir.join("ten.tsv"), ten).unwrap();
    fs::write(dir.join("small.csv"), "pula,maru,8\nnoka,lewatle,7\nntlo,tau,1\n").unwrap();
    fs::write(dir.join("broken.tsv"), "pula\tmaru\t8\nnoka\tlewatle\n").unwrap();
}

#[test]
fn eval_reports_coverage() {
    let dir = tempfile::tempdir().unwrap();
    eval_fixture(dir.path());
    let o = xlex(dir.path(), &["eval", "--embeddings", "model.vec", "--dataset", "ten.tsv", "--tsv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("model(ten)") && out.contains("90.00"), "{out}");
    assert!(out.lines().any(|l| l.starts_with("model\tten\t90.00\t")), "{out}");
}

#[test]
fn eval_rows_keep_dataset_order() {
    let dir = tempfile::tempdir().unwrap();
    eval_fixture(dir.path());
    let o = xlex(dir.path(), &["eval", "--embeddings", "model.vec", "--dataset", "ten.tsv", "small.csv"]);
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("model(ten)") && rows[1].starts_with("model(small)"), "{out}");
}

#[test]
fn eval_isolates_a_malformed_dataset() {
    let dir = tempfile::tempdir().unwrap();
    eval_fixture(dir.path());
    let o = xlex(dir.path(), &["eval", "--embeddings", "model.vec", "--dataset", "ten.tsv", "broken.tsv", "small.csv"]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 3, "{out}");
    assert!(rows[0].contains("90.00"));
    assert!(rows[1].contains("error") && rows[1].contains("line 2"), "{out}");
    assert!(rows[2].contains("100.00"), "{out}");
}

#[test]
fn help_lists_flags_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = xlex(dir.path(), &["train", "--help"]);
    let help = stdout(&o);
    for flag in ["--dim", "--window", "--min-count", "--epochs", "--negatives", "--mode", "--nmin", "--nmax", "--buckets", "--seed", "--threads", "--deterministic", "--config", "--out"] {
        assert!(help.contains(flag), "{flag}");
    }
    assert!(help.contains("[default: 300]") && help.contains("[default: 100]"));
    let o = xlex(dir.path(), &["align", "--help"]);
    for flag in ["--csls-k", "--vocab-cutoff", "--max-iterations"] {
        assert!(stdout(&o).contains(flag), "{flag}");
    }
}
