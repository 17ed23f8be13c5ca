mod common;

use common::{corpus, hellinger_direct, random_lines};
use dacl::corpus::{build_vocab, CorpusBuilder, Side, Vocabulary};
use dacl::diagnostics::{
    avg_sentence_length, cut_report, hellinger, oov_count, overlap, perplexity_selection_curve, LmParams, SharedVocab,
    UnigramDistribution,
};
use dacl::lm::{self, Smoothing};
use dacl::selection::{Method, SelectionResult};
use dacl::synth::Grammar;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dist<R: Rng>(rng: &mut R, vocab: &SharedVocab) -> UnigramDistribution {
    // sparse supports exercise the zero-probability terms
    let weights: Vec<f64> = (0..vocab.len())
        .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    let weights = if weights.iter().all(|&w| w == 0.0) {
        vec![1.0; vocab.len()]
    } else {
        weights
    };
    UnigramDistribution::from_weights(vocab.clone(), weights).unwrap()
}

#[test]
fn hellinger_is_a_metric_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..1000 {
        let n = rng.gen_range(1..30);
        let vocab: SharedVocab = (0..n).map(|i| format!("v{i}")).collect();
        let (p, q, r) = (
            random_dist(&mut rng, &vocab),
            random_dist(&mut rng, &vocab),
            random_dist(&mut rng, &vocab),
        );
        let pq = hellinger(&p, &q).unwrap();
        let qp = hellinger(&q, &p).unwrap();
        let qr = hellinger(&q, &r).unwrap();
        let pr = hellinger(&p, &r).unwrap();
        assert!((pq - qp).abs() < 1e-12, "trial {trial}");
        assert!(pr <= pq + qr + 1e-12, "trial {trial}");
        assert!((0.0..=1.0).contains(&pq));
        assert_eq!(hellinger(&p, &p).unwrap(), 0.0);
        assert!((pq - hellinger_direct(p.probs(), q.probs())).abs() < 1e-12);
    }
}

#[test]
fn hellinger_distributions_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let vocab: SharedVocab = (0..50).map(|i| format!("v{i}")).collect();
    for _ in 0..100 {
        let p = random_dist(&mut rng, &vocab);
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn nested_cuts_shrink_oov() {
    let in_domain = Grammar::a().corpus(200, 1);
    let (pool, _) = dacl::synth::mixed_pool(2000, 0.5, 2);
    let scores: Vec<f64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        (0..pool.len()).map(|_| rng.gen()).collect()
    };
    let ranking = SelectionResult::from_scores(Method::Random, &scores);
    let cuts = [50, 100, 200, 400, 800, 1600];
    let rows = cut_report(&in_domain, &pool, &ranking, Some(&ranking), &cuts).unwrap();
    for w in rows.windows(2) {
        assert!(w[0].oov_tokens >= w[1].oov_tokens);
        assert!(w[0].oov_types >= w[1].oov_types);
    }
    for row in &rows {
        assert_eq!(row.overlap, Some(1.0));
        let top: Vec<usize> = ranking.ranking[..row.cut].iter().map(|s| s.index).collect();
        let subset = pool.subset(&top);
        assert!((row.avg_sentence_length - avg_sentence_length(&subset).unwrap()).abs() < 1e-12);
        let oov = oov_count(&in_domain, &build_vocab(&subset).unwrap());
        assert_eq!((row.oov_tokens, row.oov_types), (oov.tokens, oov.types));
    }
}

#[test]
fn perplexity_curve_full_pool_point() {
    let in_domain = Grammar::a().corpus(100, 4);
    let pool = Grammar::b().corpus(300, 5);
    let ranking = SelectionResult::from_scores(Method::Random, &vec![0.0; pool.len()]);
    let params = LmParams {
        order: 3,
        smoothing: Smoothing::ModifiedKneserNey,
    };
    let curve = perplexity_selection_curve(&in_domain, &pool, &ranking, &[pool.len()], params, 1).unwrap();
    let direct = lm::perplexity(&lm::train(&pool, 3).unwrap(), &in_domain);
    assert_eq!(curve.points.len(), 1);
    assert!((curve.points[0].value - direct).abs() < 1e-9 * direct);
    assert_eq!(curve.argmin_cut, pool.len());
}

#[test]
fn perplexity_curve_bottoms_out_before_foreign_data() {
    // pool = 600 grammar-A sentences ranked first, then 1400 grammar-B ones
    let a = Grammar::a().corpus(600, 6);
    let b = Grammar::b().corpus(1400, 7);
    let mut builder = CorpusBuilder::new(Side::Source, "pool");
    for s in a.sentences().chain(b.sentences()) {
        builder.push(s.tokens());
    }
    let pool = builder.finish();
    let scores: Vec<f64> = (0..pool.len()).map(|i| i as f64).collect();
    let ranking = SelectionResult::from_scores(Method::MooreLewis, &scores);
    let in_domain = Grammar::a().corpus(200, 8);
    let cuts = [150, 300, 600, 1000, 1500, 2000];
    let params = LmParams {
        order: 3,
        smoothing: Smoothing::ModifiedKneserNey,
    };
    let serial = perplexity_selection_curve(&in_domain, &pool, &ranking, &cuts, params, 1).unwrap();
    assert!(serial.argmin_cut <= 600, "{serial:?}");
    let parallel = perplexity_selection_curve(&in_domain, &pool, &ranking, &cuts, params, 3).unwrap();
    assert_eq!(serial, parallel);
    assert!(perplexity_selection_curve(&in_domain, &pool, &ranking, &[300, 150], params, 1).is_err());
}

proptest! {
    #[test]
    fn oov_is_antitone_in_reference(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = corpus(&random_lines(&mut rng, 10, 15, 6));
        let reference = random_lines(&mut rng, 12, 20, 6);
        let cut = rng.gen_range(1..reference.len());
        let small = build_vocab(&corpus(&reference[..cut])).unwrap();
        let mut large = Vocabulary::default();
        large.extend_from(&corpus(&reference));
        let (a, b) = (oov_count(&target, &small), oov_count(&target, &large));
        prop_assert!(a.tokens >= b.tokens && a.types >= b.types);
        prop_assert_eq!(oov_count(&target, &Vocabulary::default()).tokens, target.total_tokens() as u64);
    }

    #[test]
    fn overlap_is_a_fraction(a in prop::collection::vec(0usize..30, 0..20), b in prop::collection::vec(0usize..30, 0..20)) {
        let o = overlap(&a, &b);
        prop_assert!((0.0..=1.0).contains(&o));
        prop_assert_eq!(o, overlap(&b, &a));
        if !a.is_empty() {
            prop_assert_eq!(overlap(&a, &a), 1.0);
        }
    }
}
