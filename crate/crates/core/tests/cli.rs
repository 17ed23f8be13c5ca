use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use dacl::cli::{Manifest, PipelineConfig};
use dacl::curriculum::load_schedule;
use dacl::synth::Grammar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dacl(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dacl"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn ok(args: &[&str]) {
    let (code, err) = dacl(args);
    assert_eq!(code, 0, "{args:?}: {err}");
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Mock target side: the source reversed, with a suffix per token.
fn translate(line: &str) -> String {
    line.split(' ')
        .rev()
        .map(|t| format!("{t}_x"))
        .collect::<Vec<_>>()
        .join(" ")
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (a, b) = (Grammar::a(), Grammar::b());
        let in_domain: Vec<String> = (0..300).map(|_| a.line(&mut rng)).collect();
        let pool: Vec<String> = (0..1500)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    a.line(&mut rng)
                } else {
                    b.line(&mut rng)
                }
            })
            .collect();
        let write = |name: &str, lines: &[String]| {
            let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
            fs::write(root.join(name), text).unwrap();
        };
        write("in.src", &in_domain);
        write("pool.src", &pool);
        write("in.trg", &in_domain.iter().map(|l| translate(l)).collect::<Vec<_>>());
        write("pool.trg", &pool.iter().map(|l| translate(l)).collect::<Vec<_>>());
        Fixture { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Small-scale config: 6 shards, short phases, trigram models.
    fn config(&self, out: &str, extra: &str) -> PathBuf {
        let text = format!(
            r#"output_dir = "{out}"

[data]
in_domain_src = "{in_src}"
in_domain_trg = "{in_trg}"
pool_src = "{pool_src}"
pool_trg = "{pool_trg}"
in_domain_sample = 200

[selection]
order = 3

[curriculum]
num_shards = 6
phase_len = 30
cut = 600

[diagnostics]
cuts = [150, 300, 600]
{extra}
"#,
            out = s(&self.path(out)),
            in_src = s(&self.path("in.src")),
            in_trg = s(&self.path("in.trg")),
            pool_src = s(&self.path("pool.src")),
            pool_trg = s(&self.path("pool.trg")),
        );
        let path = self.path(&format!("{out}.toml"));
        fs::write(&path, text).unwrap();
        path
    }
}

/// Relative path → bytes for every file under `dir`.
fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn artifacts(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    tree(dir)
        .into_iter()
        .filter(|(p, _)| p.file_name().unwrap() != "manifest.json")
        .collect()
}

#[test]
fn pipeline_smoke() {
    let f = Fixture::new();
    let cfg = f.config("out", "");
    ok(&["pipeline", "--config", s(&cfg)]);
    let out = f.path("out");
    for file in [
        "manifest.json",
        "sample/sample.txt",
        "sample/sample.idx",
        "score/ranking.tsv",
        "score/contrast.idx",
        "shard/shards.json",
        "diagnose/report.json",
        "diagnose/cuts.tsv",
        "schedule/schedule.jsonl",
    ] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
    let m = Manifest::load(out.join("manifest.json")).unwrap();
    assert_eq!(m.command, "pipeline");
    assert_eq!(m.seeds.len(), 4);
    for d in m.outputs.values() {
        assert_eq!(dacl::cli::sha256_file(out.join(&d.path)).unwrap(), d.sha256);
    }
    let schedule = load_schedule(out.join("schedule/schedule.jsonl")).unwrap();
    assert_eq!(schedule.header.num_shards, 6);
    assert_eq!(schedule.header.num_phases, 26);
    assert!(schedule.iter().all(|b| b.is_ok()));
    let sample = fs::read_to_string(out.join("sample/sample.txt")).unwrap();
    assert_eq!(sample.lines().count(), 200);
}

#[test]
fn rerun_is_byte_identical() {
    let f = Fixture::new();
    let cfg = f.config("out", "");
    ok(&["pipeline", "--config", s(&cfg)]);
    let first = tree(&f.path("out"));
    ok(&["--workers", "2", "pipeline", "--config", s(&cfg)]);
    assert_eq!(first, tree(&f.path("out")));

    // every step can be regenerated from its manifest alone
    for step in ["sample", "score", "shard", "diagnose", "schedule"] {
        let target = f.path(&format!("rerun-{step}"));
        ok(&[
            "rerun",
            s(&f.path(&format!("out/{step}/manifest.json"))),
            "--out",
            s(&target),
        ]);
        assert_eq!(artifacts(&f.path(&format!("out/{step}"))), artifacts(&target), "{step}");
    }
}

#[test]
fn pipeline_equals_chained_subcommands() {
    let f = Fixture::new();
    let cfg = f.config("out", "");
    ok(&["pipeline", "--config", s(&cfg)]);

    let c = |p: &str| f.path(&format!("chain/{p}"));
    let (in_src, in_trg) = (f.path("in.src"), f.path("in.trg"));
    let (pool, pool_trg) = (f.path("pool.src"), f.path("pool.trg"));
    ok(&[
        "sample",
        "--input",
        s(&in_src),
        "--pair",
        s(&in_trg),
        "--size",
        "200",
        "--out",
        s(&c("sample")),
    ]);
    let (sample, sample_pair) = (c("sample/sample.txt"), c("sample/sample.pair.txt"));
    let in_flags = ["--in-domain", s(&sample), "--in-domain-pair", s(&sample_pair)];
    let pool_flags = ["--pool", s(&pool), "--pool-pair", s(&pool_trg)];
    let with =
        |head: &[&str], tail: &[&str]| -> Vec<String> { head.iter().chain(tail).map(|x| x.to_string()).collect() };
    let run = |args: Vec<String>| ok(&args.iter().map(String::as_str).collect::<Vec<_>>());

    run(with(
        &[&["score-ml"][..], &in_flags, &pool_flags].concat(),
        &["--order", "3", "--out", s(&c("score"))],
    ));
    run(with(
        &[&["shard"][..], &in_flags].concat(),
        &[
            "--ranking",
            s(&c("score/ranking.tsv")),
            "--cut",
            "600",
            "--num-shards",
            "6",
            "--out",
            s(&c("shard")),
        ],
    ));
    run(with(
        &[&["diagnose"][..], &in_flags, &pool_flags].concat(),
        &[
            "--ranking",
            s(&c("score/ranking.tsv")),
            "--random-baseline",
            "1",
            "--cuts",
            "150,300,600",
            "--out",
            s(&c("diagnose")),
        ],
    ));
    run(with(
        &[&["schedule"][..], &in_flags, &pool_flags].concat(),
        &[
            "--shards",
            s(&c("shard/shards.json")),
            "--phase-len",
            "30",
            "--out",
            s(&c("schedule")),
        ],
    ));

    for step in ["sample", "score", "shard", "diagnose", "schedule"] {
        let piped = artifacts(&f.path(&format!("out/{step}")));
        assert!(!piped.is_empty());
        assert_eq!(piped, artifacts(&c(step)), "{step}");
        let a = Manifest::load(f.path(&format!("out/{step}/manifest.json"))).unwrap();
        let b = Manifest::load(c(&format!("{step}/manifest.json"))).unwrap();
        assert_eq!(a.outputs, b.outputs);
        assert_eq!(a.seeds, b.seeds);
        assert_eq!(a.stats, b.stats);
    }
}

#[test]
fn other_methods_and_modes() {
    let f = Fixture::new();
    let cfg = f.config("cds", "");
    ok(&[
        "pipeline",
        "--config",
        s(&cfg),
        "--set",
        "selection.method=cynical",
        "--set",
        "selection.side=target",
        "--set",
        "curriculum.mode=reverse",
    ]);
    let trace = fs::read_to_string(f.path("cds/select/trace.tsv")).unwrap();
    assert_eq!(trace.lines().count(), 600);
    let schedule = load_schedule(f.path("cds/schedule/schedule.jsonl")).unwrap();
    assert_eq!(schedule.header.availability, vec![5, 4, 3, 2, 1, 0]);

    let cfg = f.config("bi", "");
    ok(&[
        "pipeline",
        "--config",
        s(&cfg),
        "--set",
        "selection.method=moore_lewis_bilingual",
    ]);
    let m = Manifest::load(f.path("bi/score/manifest.json")).unwrap();
    assert_eq!(m.params["bilingual"], true);
}

#[test]
fn config_round_trips_through_the_manifest() {
    let f = Fixture::new();
    let cfg_path = f.config("out", "[seeds]\nschedule = 77\n");
    ok(&["pipeline", "--config", s(&cfg_path)]);
    let loaded = PipelineConfig::load(&cfg_path, &[]).unwrap();
    let m = Manifest::load(f.path("out/manifest.json")).unwrap();
    let recorded: PipelineConfig = serde_json::from_value(m.params).unwrap();
    assert_eq!(recorded, loaded);
    assert_eq!(PipelineConfig::from_toml(&loaded.to_toml()).unwrap(), loaded);
    assert_eq!(m.seeds["schedule"], 77);
}

#[test]
fn lm_train_and_streaming_scores() {
    let f = Fixture::new();
    let (in_src, pool) = (f.path("in.src"), f.path("pool.src"));
    ok(&[
        "lm-train",
        "--corpus",
        s(&in_src),
        "--order",
        "3",
        "--out",
        s(&f.path("lm_in")),
    ]);
    ok(&[
        "lm-train",
        "--corpus",
        s(&pool),
        "--order",
        "3",
        "--out",
        s(&f.path("lm_gen")),
    ]);
    let (lm_in, lm_gen) = (f.path("lm_in/model.arpa"), f.path("lm_gen/model.arpa"));
    let models = ["--lm-in", s(&lm_in), "--lm-gen", s(&lm_gen)];
    let base = ["score-ml", "--in-domain", s(&in_src), "--pool", s(&pool)];
    ok(&[&base[..], &models, &["--stream", "--out", s(&f.path("stream"))]].concat());
    ok(&[&base[..], &models, &["--out", s(&f.path("loaded"))]].concat());
    // no line of the fixture exceeds the length filter, so indices agree
    assert_eq!(
        fs::read(f.path("stream/ranking.tsv")).unwrap(),
        fs::read(f.path("loaded/ranking.tsv")).unwrap()
    );
}

#[test]
fn s4_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let w = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };
    let train_src = w("train.src", "a b\n");
    let train_trg = w("train.trg", "x y\n");
    let train_align = w("train.align", "0-0 1-1\n");
    let test = w("test.src", "a b c\n");
    let reference = w("ref.trg", "x y z\n");
    let ref_align = w("ref.align", "0-0 1-1 2-2\n");
    let hyp = w("hyp.trg", "x q\n");
    let hyp_align = w("hyp.align", "0-0 1-1\n");
    let out = dir.path().join("s4");
    ok(&[
        "s4",
        "--train-src",
        s(&train_src),
        "--train-trg",
        s(&train_trg),
        "--train-align",
        s(&train_align),
        "--test-src",
        s(&test),
        "--reference",
        s(&reference),
        "--ref-align",
        s(&ref_align),
        "--hypothesis",
        s(&hyp),
        "--hyp-align",
        s(&hyp_align),
        "--out",
        s(&out),
    ]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("s4.json")).unwrap()).unwrap();
    // a: correct, b: knew y but produced q (score), c: never aligned (seen)
    assert_eq!(report["correct"], 1);
    assert_eq!(report["score"], 1);
    assert_eq!(report["seen"], 1);
    assert_eq!(report["sense"], 0);
}

#[test]
fn exit_codes() {
    let f = Fixture::new();
    let pool = f.path("pool.src");
    let (code, err) = dacl(&["frobnicate"]);
    assert_eq!(code, 2, "{err}");
    let (code, err) = dacl(&[
        "shard",
        "--in-domain",
        "/nonexistent",
        "--ranking",
        s(&pool),
        "--out",
        "x",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("--in-domain"), "{err}");

    let cfg = f.config("bad", "");
    let (code, err) = dacl(&["pipeline", "--config", s(&cfg), "--set", "curriculum.shards=3"]);
    assert_eq!(code, 2);
    assert!(err.contains("shards"), "{err}");
    let (code, err) = dacl(&["pipeline", "--config", s(&cfg), "--set", "data.pool_src=/missing"]);
    assert_eq!(code, 2);
    assert!(err.contains("data.pool_src"), "{err}");

    // an empty line is a data error
    fs::write(f.path("holey.txt"), "a b\n\nc\n").unwrap();
    let (code, err) = dacl(&[
        "select-cds",
        "--in-domain",
        s(&f.path("in.src")),
        "--pool",
        s(&f.path("holey.txt")),
        "--out",
        s(&f.path("x")),
    ]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("line 2"), "{err}");

    // a manifest whose input changed is refused
    ok(&[
        "lm-train",
        "--corpus",
        s(&f.path("in.src")),
        "--order",
        "2",
        "--out",
        s(&f.path("lm")),
    ]);
    fs::write(f.path("in.src"), "changed\n").unwrap();
    let (code, _) = dacl(&["rerun", s(&f.path("lm/manifest.json"))]);
    assert_eq!(code, 3);
}
