//! Property tests for model, lexicon, selection and report invariants.

use plex::disambig::{empirical_select, footnote_select, problex_select};
use plex::eval::{EvalCounts, EvalReport};
use plex::persist::{read_model, write_model};
use plex::problex::{fit_class_weights_traced, membership_with, LabelConfig};
use plex::rng::{substream, Stream};
use plex::selfcheck::{random_corpus, random_model, random_sample};
use plex::{
    clustering_select, major_sense_select, marginal_noun_dist, standardize, train, FitConfig,
    Lexicon, PairCorpus, TrainConfig,
};
use proptest::prelude::*;

fn corpus_from(seed: u64, max_verbs: usize, max_nouns: usize) -> PairCorpus {
    random_corpus(
        &mut substream(seed, Stream::Synthetic),
        max_verbs,
        max_nouns,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn corpus_text_round_trip(seed in any::<u64>()) {
        let c = corpus_from(seed, 6, 8);
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        let back = PairCorpus::from_reader(buf.as_slice()).unwrap();
        prop_assert_eq!(back.pairs(), c.pairs());
        prop_assert_eq!(back.verbs(), c.verbs());
        prop_assert_eq!(back.nouns(), c.nouns());
    }

    #[test]
    fn marginals_sum_to_total(seed in any::<u64>()) {
        let c = corpus_from(seed, 6, 8);
        let s: f64 = c.noun_marginals().iter().sum();
        prop_assert!((s - c.total()).abs() <= 1e-9);
        let d = marginal_noun_dist(&c).unwrap();
        let p: f64 = d.iter().map(|(_, p)| p).sum();
        prop_assert!((p - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn em_never_decreases_loglik(seed in any::<u64>(), k in prop::sample::select(vec![1usize, 2, 3, 5])) {
        let c = corpus_from(seed, 20, 30);
        let config = TrainConfig { classes: k, seed, max_iters: 30, rel_tol: 0.0, floor: 0.0 };
        let (model, trace) = train(&c, &config).unwrap();
        for w in trace.log_likelihoods.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
        }
        prop_assert_eq!(trace.iterations, 30);
        let s: f64 = model.priors().iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fine_tuning_never_decreases_loglik(seed in any::<u64>(), k in 1usize..5) {
        let mut rng = substream(seed, Stream::Synthetic);
        let model = random_model(&mut rng, k, 3, 8);
        let sample = random_sample(&mut rng, &model, 5);
        let (w, trace) = fit_class_weights_traced(&model, &sample, FitConfig { rel_tol: 0.0, max_iters: 40 }).unwrap();
        for pair in trace.log_likelihoods.windows(2) {
            prop_assert!(pair[1] >= pair[0] - 1e-9);
        }
        let s: f64 = w.iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
        prop_assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn model_text_round_trip_is_exact(seed in any::<u64>(), k in 1usize..6) {
        let model = random_model(&mut substream(seed, Stream::Synthetic), k, 4, 7);
        let mut buf = Vec::new();
        write_model(&model, &[("seed".into(), seed.to_string())], &mut buf).unwrap();
        let (back, meta) = read_model(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(meta, vec![("seed".to_string(), seed.to_string())]);
    }

    #[test]
    fn selection_ignores_candidate_order(seed in any::<u64>(), rot in 0usize..4, rev in any::<bool>()) {
        let corpus = corpus_from(seed, 5, 8);
        let config = TrainConfig { classes: 3, seed, max_iters: 20, ..TrainConfig::default() };
        let (model, _) = train(&corpus, &config).unwrap();
        let lexicon = Lexicon::build(model.clone(), &corpus, LabelConfig::default()).unwrap();
        let verb = corpus.verbs()[0].clone();
        let mut cands: Vec<String> = corpus.nouns().iter().take(4).cloned().collect();
        cands.push("unseen".into());
        let mut shuffled = cands.clone();
        let len = shuffled.len();
        shuffled.rotate_left(rot % len);
        if rev {
            shuffled.reverse();
        }
        let pairs = [
            (problex_select(&lexicon, &verb, &cands, FitConfig::default()).unwrap(),
             problex_select(&lexicon, &verb, &shuffled, FitConfig::default()).unwrap()),
            (footnote_select(&model, &corpus, &verb, &cands).unwrap(),
             footnote_select(&model, &corpus, &verb, &shuffled).unwrap()),
            (clustering_select(&model, &verb, &cands).unwrap(),
             clustering_select(&model, &verb, &shuffled).unwrap()),
            (empirical_select(&corpus, &verb, &cands).unwrap(),
             empirical_select(&corpus, &verb, &shuffled).unwrap()),
            (major_sense_select(&corpus, &cands).unwrap(),
             major_sense_select(&corpus, &shuffled).unwrap()),
        ];
        for (a, b) in pairs {
            prop_assert_eq!(&a.noun, &b.noun);
            prop_assert_eq!(a.score.to_bits(), b.score.to_bits());
            prop_assert_eq!(a.tie, b.tie);
        }
    }

    #[test]
    fn problex_score_recomputes(seed in any::<u64>()) {
        let corpus = corpus_from(seed, 4, 8);
        let config = TrainConfig { classes: 2, seed, max_iters: 20, ..TrainConfig::default() };
        let (model, _) = train(&corpus, &config).unwrap();
        let lexicon = Lexicon::build(model.clone(), &corpus, LabelConfig::default()).unwrap();
        let verb = corpus.verbs()[0].clone();
        let cands: Vec<String> = corpus.nouns().iter().rev().take(3).cloned().collect();
        let choice = problex_select(&lexicon, &verb, &cands, FitConfig::default()).unwrap();
        if let (Some(n), Some(c)) = (choice.noun.as_deref(), choice.class) {
            let entry = lexicon.entry(&verb).unwrap();
            let mut freqs = entry.sample().freqs().clone();
            for cand in &cands {
                *freqs.entry(cand.clone()).or_insert(0.0) += 1.0;
            }
            let combined = plex::NounSample::new(verb.clone(), freqs.clone()).unwrap();
            let w = plex::fit_class_weights(&model, &combined, 1e-6, 200).unwrap();
            let post = membership_with(&model, &w, n).unwrap();
            let want = freqs[n] * post[c];
            prop_assert!((choice.score - want).abs() <= 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn report_identities(correct in 0usize..100, incorrect in 0usize..100, abstain in 0usize..100, extra in 0usize..3) {
        let items = correct + incorrect + abstain;
        prop_assume!(items > 0);
        let counts = EvalCounts { items, correct, incorrect, abstain, candidates: items * (2 + extra) };
        let r = EvalReport::from_counts("x", 0, counts);
        prop_assert_eq!(r.correct + r.incorrect + r.abstain, r.items);
        prop_assert!(r.effectiveness <= r.precision + 1e-15);
        if abstain == 0 && correct + incorrect > 0 {
            prop_assert_eq!(r.effectiveness, r.precision);
        }
        prop_assert!(r.ambiguity >= 2.0);
    }

    #[test]
    fn standardize_is_increasing(a in 1e-6f64..1.0, b in 1e-6f64..1.0, amb in 1.01f64..20.0) {
        prop_assume!(a < b);
        let sa = standardize(a, amb).unwrap();
        let sb = standardize(b, amb).unwrap();
        prop_assert!(sa < sb);
        prop_assert!((0.0..=1.0).contains(&sa));
    }
}
