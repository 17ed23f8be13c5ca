use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use dacl_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = dacl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn corpus(text: &str) -> *mut DaclCorpus {
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { dacl_corpus_from_text(cstr(text).as_ptr(), &mut out) },
        DaclStatus::Ok
    );
    out
}

#[test]
fn select_and_schedule_round_trip() {
    unsafe {
        let in_domain = corpus("a b a\na a b\nb a");
        let pool = corpus("a b\nx y z\na a\ny z\nb a b\nx x");
        assert_eq!(dacl_corpus_len(pool), 6);
        let (mut lm_in, mut lm_gen) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(dacl_model_train(in_domain, 2, &mut lm_in), DaclStatus::Ok);
        assert_eq!(dacl_model_train(pool, 2, &mut lm_gen), DaclStatus::Ok);

        let mut ranking = ptr::null_mut();
        assert_eq!(dacl_moore_lewis(lm_in, lm_gen, pool, 1, &mut ranking), DaclStatus::Ok);
        assert_eq!(dacl_ranking_len(ranking), 6);
        let mut prev = f64::NEG_INFINITY;
        let mut seen = Vec::new();
        for r in 0..6 {
            let (mut i, mut s) = (0usize, 0f64);
            assert_eq!(dacl_ranking_get(ranking, r, &mut i, &mut s), DaclStatus::Ok);
            assert!(s >= prev);
            prev = s;
            seen.push(i);
        }
        seen.sort();
        assert_eq!(seen, (0..6).collect::<Vec<_>>());
        let (mut i, mut s) = (0usize, 0f64);
        assert_eq!(
            dacl_ranking_get(ranking, 6, &mut i, &mut s),
            DaclStatus::InvalidArgument
        );

        let mut sched = ptr::null_mut();
        let status = dacl_schedule_new(
            in_domain,
            pool,
            ranking,
            4,
            3,
            DaclMode::Standard,
            5,
            4096,
            0,
            7,
            &mut sched,
        );
        assert_eq!(status, DaclStatus::Ok);
        assert_eq!(dacl_schedule_num_phases(sched), 23);
        let total = dacl_schedule_num_batches(sched);

        let dir = tempfile::tempdir().unwrap();
        let path = cstr(dir.path().join("s.jsonl").to_str().unwrap());
        assert_eq!(dacl_schedule_save(sched, path.as_ptr()), DaclStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(dacl_schedule_load(path.as_ptr(), &mut loaded), DaclStatus::Ok);
        dacl_schedule_free(sched);

        let mut it = ptr::null_mut();
        assert_eq!(dacl_batch_iter_new(loaded, &mut it), DaclStatus::Ok);
        dacl_schedule_free(loaded);
        let mut batch = DaclBatch {
            phase: 0,
            shard: 0,
            bucket: 0,
            indices: ptr::null(),
            len: 0,
        };
        let mut n = 0;
        while dacl_batch_iter_next(it, &mut batch) == DaclStatus::Ok {
            if batch.phase == 1 {
                assert_eq!(batch.shard, 0);
            }
            let idx = std::slice::from_raw_parts(batch.indices, batch.len);
            assert!(!idx.is_empty());
            n += 1;
        }
        assert_eq!(n, total);
        assert_eq!(dacl_batch_iter_next(it, &mut batch), DaclStatus::End);
        dacl_batch_iter_free(it);

        let mut h = 0.0;
        assert_eq!(dacl_hellinger(in_domain, in_domain, &mut h), DaclStatus::Ok);
        assert_eq!(h, 0.0);

        dacl_ranking_free(ranking);
        dacl_model_free(lm_in);
        dacl_model_free(lm_gen);
        dacl_corpus_free(in_domain);
        dacl_corpus_free(pool);
    }
}

#[test]
fn arpa_round_trip_and_errors() {
    unsafe {
        let c = corpus("the cat sat\nthe dog sat\na cat ran");
        let mut model = ptr::null_mut();
        assert_eq!(dacl_model_train(c, 3, &mut model), DaclStatus::Ok);
        let dir = tempfile::tempdir().unwrap();
        let path = cstr(dir.path().join("m.arpa").to_str().unwrap());
        assert_eq!(dacl_model_save_arpa(model, path.as_ptr()), DaclStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(dacl_model_load_arpa(path.as_ptr(), &mut back), DaclStatus::Ok);
        let sentence = cstr("the cat ran");
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(
            dacl_model_cross_entropy(model, sentence.as_ptr(), &mut a),
            DaclStatus::Ok
        );
        assert_eq!(
            dacl_model_cross_entropy(back, sentence.as_ptr(), &mut b),
            DaclStatus::Ok
        );
        assert!((a - b).abs() < 1e-6);
        let mut ppl = 0.0;
        assert_eq!(dacl_model_perplexity(model, c, &mut ppl), DaclStatus::Ok);
        assert!(ppl > 1.0);

        assert_eq!(
            dacl_model_cross_entropy(model, ptr::null(), &mut a),
            DaclStatus::NullArgument
        );
        assert!(last_error().contains("sentence"));
        assert_eq!(dacl_model_train(c, 0, &mut back), DaclStatus::InvalidArgument);
        let mut missing = ptr::null_mut();
        let nowhere = cstr("/nonexistent/corpus.txt");
        assert_eq!(dacl_corpus_load(nowhere.as_ptr(), 80, &mut missing), DaclStatus::Io);
        assert!(missing.is_null());
        assert!(last_error().contains("nonexistent"));
        let empty_line = corpus("ok");
        let mut holey = ptr::null_mut();
        assert_eq!(
            dacl_corpus_from_text(cstr("a\n\nb").as_ptr(), &mut holey),
            DaclStatus::Data
        );

        dacl_model_free(model);
        dacl_model_free(back);
        dacl_corpus_free(c);
        dacl_corpus_free(empty_line);
        dacl_corpus_free(ptr::null_mut());
        assert!(!CStr::from_ptr(dacl_version()).to_str().unwrap().is_empty());
    }
}

/// Compiles `tests/c/smoke.c` against the generated header and the static
/// library. Skipped when no C compiler or static library is present.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libdacl_ffi.a");
    if !lib.is_file() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let compiled = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output();
    let compiled = match compiled {
        Ok(o) => o,
        Err(e) => {
            eprintln!("skipping: no C compiler ({e})");
            return;
        }
    };
    assert!(
        compiled.status.success(),
        "{}",
        String::from_utf8_lossy(&compiled.stderr)
    );
    let run = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("cds_len 3"), "{stdout}");
    assert!(stdout.contains("error set"), "{stdout}");
}
