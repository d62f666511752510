use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plex::lookup::parse_blocks;
use plex::persist::{file_sha256, load_model, write_model};
use plex::rng::{substream, Stream};
use plex::synth::{planted_model, sample_corpus, PlantedConfig};
use plex::PairCorpus;
use tempfile::TempDir;

fn plex(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plex"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// Planted train/test corpora, a trained model and a lexicon in a temp dir.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let truth = planted_model(&PlantedConfig {
        classes: 3,
        verbs_per_class: 6,
        nouns_per_class: 30,
        zipf: 1.0,
    })
    .unwrap();
    let mut rng = substream(1, Stream::Synthetic);
    sample_corpus(&truth, 8000, &mut rng)
        .unwrap()
        .save(dir.path().join("train.tsv"))
        .unwrap();
    sample_corpus(&truth, 2000, &mut rng)
        .unwrap()
        .save(dir.path().join("test.tsv"))
        .unwrap();
    let o = plex(
        dir.path(),
        &[
            "train",
            "--pairs",
            "train.tsv",
            "-o",
            "m.model",
            "-k",
            "3",
            "--seed",
            "2",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = plex(
        dir.path(),
        &[
            "label",
            "--model",
            "m.model",
            "--pairs",
            "train.tsv",
            "-o",
            "m.lex",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    dir
}

#[test]
fn train_writes_round_trippable_model_and_trace() {
    let dir = workspace();
    let bytes = fs::read(dir.path().join("m.model")).unwrap();
    let (model, meta) = load_model(dir.path().join("m.model")).unwrap();
    let mut again = Vec::new();
    write_model(&model, &meta, &mut again).unwrap();
    assert_eq!(again, bytes);
    let text = String::from_utf8(bytes).unwrap();
    assert!(text.contains("# classes 3\n"));
    let sha = file_sha256(dir.path().join("train.tsv")).unwrap();
    assert!(text.contains(&format!("# pairs train.tsv sha256:{sha}\n")));
    let trace = fs::read_to_string(dir.path().join("m.model.trace")).unwrap();
    assert!(trace.lines().any(|l| l == "iter\tloglik"));
    let lls: Vec<f64> = trace
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("iter"))
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(lls.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

#[test]
fn training_is_reproducible_across_runs_and_threads() {
    let dir = workspace();
    for threads in ["1", "3"] {
        let o = plex(
            dir.path(),
            &[
                "--threads",
                threads,
                "train",
                "--pairs",
                "train.tsv",
                "-o",
                "again.model",
                "-k",
                "3",
                "--seed",
                "2",
            ],
        );
        assert!(o.status.success());
        assert_eq!(
            fs::read(dir.path().join("again.model")).unwrap(),
            fs::read(dir.path().join("m.model")).unwrap()
        );
    }
}

#[test]
fn default_class_count_is_35() {
    let dir = workspace();
    let o = plex(
        dir.path(),
        &[
            "train",
            "--pairs",
            "train.tsv",
            "-o",
            "big.model",
            "--max-iters",
            "2",
        ],
    );
    assert!(o.status.success());
    let (model, _) = load_model(dir.path().join("big.model")).unwrap();
    assert_eq!(model.classes(), 35);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = plex(
        dir.path(),
        &["train", "--pairs", "nope.tsv", "-o", "x.model"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.tsv"));
    assert_eq!(plex(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(plex(dir.path(), &["train"]).status.code(), Some(1));
    fs::write(dir.path().join("bad.tsv"), "a.aso:o\tx\n").unwrap();
    let o = plex(
        dir.path(),
        &["train", "--pairs", "bad.tsv", "-o", "x.model"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    assert_eq!(plex(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn label_filters_by_sample_size_and_records_model_hash() {
    let dir = workspace();
    let lex = fs::read_to_string(dir.path().join("m.lex")).unwrap();
    let sha = file_sha256(dir.path().join("m.model")).unwrap();
    assert!(lex.contains(&format!("model m.model {sha}\n")));

    let corpus =
        PairCorpus::from_reader(fs::read(dir.path().join("train.tsv")).unwrap().as_slice())
            .unwrap();
    let mut sizes = vec![0.0; corpus.verbs().len()];
    for p in corpus.pairs() {
        sizes[p.verb] += p.count;
    }
    for min in ["1", "300"] {
        let o = plex(
            dir.path(),
            &[
                "label",
                "--model",
                "m.model",
                "--pairs",
                "train.tsv",
                "-o",
                "f.lex",
                "--min-count",
                min,
            ],
        );
        assert!(o.status.success());
        let want = sizes
            .iter()
            .filter(|&&s| s >= min.parse::<f64>().unwrap())
            .count();
        let text = fs::read_to_string(dir.path().join("f.lex")).unwrap();
        assert_eq!(
            text.lines().filter(|l| l.starts_with("entry ")).count(),
            want
        );
    }
    let o = plex(
        dir.path(),
        &[
            "label",
            "--model",
            "m.model",
            "--pairs",
            "train.tsv",
            "-o",
            "e.lex",
            "--min-count",
            "1e9",
        ],
    );
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("e.lex")).unwrap();
    assert!(!text.lines().any(|l| l.starts_with("entry ")));
}

#[test]
fn lookup_output_parses() {
    let dir = workspace();
    let o = plex(
        dir.path(),
        &["lookup", "--lexicon", "m.lex", "--verb", "v1_0.aso:o"],
    );
    assert!(o.status.success());
    let blocks = parse_blocks(&stdout(&o)).unwrap();
    assert_eq!(blocks.len(), 3);
    assert!(blocks.iter().all(|b| b.nouns.len() == 10));
    assert!(blocks[0].prob >= blocks[1].prob && blocks[1].prob >= blocks[2].prob);
    let w: f64 = blocks.iter().map(|b| b.prob).sum();
    assert!((w - 1.0).abs() < 1e-12);

    let o = plex(
        dir.path(),
        &[
            "lookup",
            "--lexicon",
            "m.lex",
            "--verb",
            "v1_0.aso:o",
            "--class",
            "1",
            "-k",
            "4",
        ],
    );
    let blocks = parse_blocks(&stdout(&o)).unwrap();
    assert_eq!(blocks.len(), 1);
    assert_eq!(blocks[0].class, 1);
    assert_eq!(blocks[0].nouns.len(), 4);

    let o = plex(
        dir.path(),
        &["lookup", "--lexicon", "m.lex", "--verb", "absent.aso:o"],
    );
    assert_eq!(o.status.code(), Some(2));
    let o = plex(
        dir.path(),
        &["lookup", "--lexicon", "m.lex", "--verb", "noslot"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lexicon_follows_moved_directory() {
    let dir = workspace();
    let moved = dir.path().join("moved");
    fs::create_dir(&moved).unwrap();
    fs::copy(dir.path().join("m.lex"), moved.join("m.lex")).unwrap();
    fs::copy(dir.path().join("m.model"), moved.join("m.model")).unwrap();
    let o = plex(
        &moved,
        &[
            "lookup",
            "--lexicon",
            "m.lex",
            "--verb",
            "v0_0.aso:o",
            "-k",
            "1",
        ],
    );
    assert!(o.status.success());
    // A different model file with the same name is rejected by hash.
    fs::write(
        moved.join("m.model"),
        fs::read_to_string(moved.join("m.model")).unwrap() + "\n",
    )
    .unwrap();
    let o = plex(
        &moved,
        &["lookup", "--lexicon", "m.lex", "--verb", "v0_0.aso:o"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn disambiguate_prints_one_line() {
    let dir = workspace();
    let o = plex(
        dir.path(),
        &[
            "disambiguate",
            "--lexicon",
            "m.lex",
            "--verb",
            "v2_0.aso:o",
            "--cands",
            "n0_0,n2_1,n1_3",
        ],
    );
    assert!(o.status.success());
    let out = stdout(&o);
    let fields: Vec<&str> = out.trim_end().split('\t').collect();
    assert_eq!(out.lines().count(), 1);
    assert_eq!(fields.len(), 4);
    assert_eq!(fields[0], "n2_1");
    assert!(fields[2].parse::<f64>().unwrap() > 1.0);
    assert_eq!(fields[3], "false");

    let o = plex(
        dir.path(),
        &[
            "disambiguate",
            "--pairs",
            "train.tsv",
            "--method",
            "empirical",
            "--verb",
            "v2_0.aso:o",
            "--cands",
            "zz,yy",
        ],
    );
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("ABSTAIN\t"));

    let o = plex(
        dir.path(),
        &[
            "disambiguate",
            "--method",
            "clustering",
            "--verb",
            "v2_0.aso:o",
            "--cands",
            "a,b",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let o = plex(
        dir.path(),
        &[
            "disambiguate",
            "--lexicon",
            "m.lex",
            "--verb",
            "v2_0.aso:o",
            "--cands",
            "a",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}

fn report_line(out: &str) -> Vec<String> {
    let mut lines = out.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(
        lines.next().unwrap(),
        "method\titems\tcorrect\tincorrect\tabstain\tambiguity\tP\tE\tstdP\tstdE\tseed"
    );
    let fields = lines
        .next()
        .unwrap()
        .split('\t')
        .map(str::to_string)
        .collect();
    assert!(lines.next().is_none());
    fields
}

#[test]
fn eval_pseudo_reports_and_reruns_identically() {
    let dir = workspace();
    let args = [
        "eval-pseudo",
        "--lexicon",
        "m.lex",
        "--pairs",
        "train.tsv",
        "--test",
        "test.tsv",
        "--count",
        "300",
        "--seed",
        "5",
        "--strict-pseudo",
        "--trace",
        "t.tsv",
    ];
    let a = plex(dir.path(), &args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let trace_a = fs::read(dir.path().join("t.tsv")).unwrap();
    let b = plex(dir.path(), &[&["--threads", "1"][..], &args[..]].concat());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(trace_a, fs::read(dir.path().join("t.tsv")).unwrap());

    let r = report_line(&stdout(&a));
    assert_eq!(r[0], "problex");
    assert_eq!(r[1], "300");
    let (c, i, ab): (usize, usize, usize) = (
        r[2].parse().unwrap(),
        r[3].parse().unwrap(),
        r[4].parse().unwrap(),
    );
    assert_eq!(c + i + ab, 300);
    assert_eq!(r[5], "2.0000");
    assert_eq!(r[10], "5");
    let trace = String::from_utf8(trace_a).unwrap();
    let rows: Vec<&str> = trace.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "id\tchosen\tclass\tscore\toutcome");
    assert_eq!(rows.len(), 301);
    assert_eq!(rows.iter().filter(|r| r.ends_with("\tcorrect")).count(), c);

    let o = plex(
        dir.path(),
        &[
            "eval-pseudo",
            "--method",
            "oracle",
            "--test",
            "test.tsv",
            "--count",
            "100",
        ],
    );
    let r = report_line(&stdout(&o));
    assert_eq!((r[6].as_str(), r[7].as_str()), ("1.0000", "1.0000"));

    let o = plex(
        dir.path(),
        &[
            "eval-pseudo",
            "--lexicon",
            "m.lex",
            "--test",
            "test.tsv",
            "--strict-pseudo",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eval_pseudo_every_method_runs() {
    let dir = workspace();
    for m in [
        "problex",
        "problex_footnote",
        "clustering",
        "empirical",
        "major_sense",
        "random",
        "oracle",
    ] {
        let o = plex(
            dir.path(),
            &[
                "eval-pseudo",
                "--method",
                m,
                "--lexicon",
                "m.lex",
                "--model",
                "m.model",
                "--pairs",
                "train.tsv",
                "--test",
                "test.tsv",
                "--count",
                "200",
                "--seed",
                "1",
            ],
        );
        assert!(
            o.status.success(),
            "{m}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert_eq!(report_line(&stdout(&o))[0], m);
    }
    let o = plex(
        dir.path(),
        &[
            "eval-pseudo",
            "--lexicon",
            "m.lex",
            "--test",
            "test.tsv",
            "--count",
            "200",
            "--pooled-refit",
        ],
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("# refit pooled\n"));
}

#[test]
fn eval_bilingual_fixture() {
    let fx = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let pairs = fx.join("bilingual_pairs.tsv");
    let items = fx.join("bilingual_items.tsv");
    let o = plex(
        dir.path(),
        &[
            "eval-bilingual",
            "--method",
            "empirical",
            "--pairs",
            pairs.to_str().unwrap(),
            "--test",
            items.to_str().unwrap(),
            "--trace",
            "t.tsv",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report_line(&stdout(&o));
    assert_eq!(
        &r[..8],
        [
            "empirical",
            "10",
            "5",
            "2",
            "3",
            "2.2000",
            "0.7143",
            "0.5000"
        ]
    );
    let trace = fs::read_to_string(dir.path().join("t.tsv")).unwrap();
    let abstained: Vec<&str> = trace
        .lines()
        .filter(|l| l.ends_with("\tabstain"))
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(abstained, ["3", "7", "9"]);

    let o = plex(
        dir.path(),
        &[
            "eval-bilingual",
            "--method",
            "oracle",
            "--test",
            items.to_str().unwrap(),
        ],
    );
    let r = report_line(&stdout(&o));
    assert_eq!((r[6].as_str(), r[7].as_str()), ("1.0000", "1.0000"));
}

#[test]
fn random_precision_tracks_ambiguity() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for i in 0..4000 {
        text.push_str(&format!("{i}\tv.aso:o\ts\tt{}\tt0,t1,t2,t3\n", i % 4));
    }
    fs::write(dir.path().join("items.tsv"), text).unwrap();
    let o = plex(
        dir.path(),
        &[
            "eval-bilingual",
            "--method",
            "random",
            "--test",
            "items.tsv",
            "--seed",
            "8",
        ],
    );
    let r = report_line(&stdout(&o));
    let p: f64 = r[6].parse().unwrap();
    assert!((p - 0.25).abs() < 0.02, "{p}");
    assert_eq!(r[5], "4.0000");
    // One over the ambiguity standardizes to one half.
    let std_p: f64 = r[8].parse().unwrap();
    assert!((std_p - 0.5).abs() < 0.02);
}

#[test]
fn selfcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = plex(dir.path(), &["selfcheck", "--seed", "3"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.lines().count() >= 6);
    assert!(out.lines().all(|l| l.starts_with("PASS\t")));
}

#[test]
fn threads_env_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_plex"))
        .current_dir(dir.path())
        .env("PLEX_THREADS", "0")
        .args(["selfcheck"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
