//! Numerical self-checks against independent reference computations.
//!
//! Each check recomputes a quantity by a route that shares no code with the
//! routine under test (full enumeration, direct Bayes, grid search) and
//! compares.

use std::fmt;

use indexmap::IndexMap;
use rand::Rng;

use crate::corpus::{FrameSlot, NounSample, PairCorpus, VerbSlot};
use crate::error::Result;
use crate::eval::standardize;
use crate::model::{train, LcModel, TrainConfig};
use crate::persist::{read_model, write_model};
use crate::problex::{estimated_frequency, fit_class_weights, LabelConfig, Lexicon};
use crate::rng::{substream, Stream};
use crate::synth::{planted_model, sample_corpus, PlantedConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag}\t{}\t{}", self.name, self.detail)
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

/// A corpus with up to `max_verbs` × `max_nouns` cells, each filled with
/// probability 1/2 and a count in 1..=5. Never empty.
pub fn random_corpus<R: Rng + ?Sized>(
    rng: &mut R,
    max_verbs: usize,
    max_nouns: usize,
) -> PairCorpus {
    let nv = rng.gen_range(1..=max_verbs);
    let nn = rng.gen_range(1..=max_nouns);
    let mut corpus = PairCorpus::new();
    for v in 0..nv {
        let verb = VerbSlot::new(format!("v{v}"), FrameSlot::TransObject).expect("valid token");
        for n in 0..nn {
            if rng.gen_bool(0.5) {
                let f = rng.gen_range(1..=5) as f64;
                corpus
                    .add(verb.clone(), &format!("n{n}"), f)
                    .expect("positive count");
            }
        }
    }
    if corpus.is_empty() {
        let verb = VerbSlot::new("v0", FrameSlot::TransObject).expect("valid token");
        corpus.add(verb, "n0", 1.0).expect("positive count");
    }
    corpus
}

fn random_simplex<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

/// A model over `verbs` × `nouns` with strictly positive random parameters.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, k: usize, verbs: usize, nouns: usize) -> LcModel {
    let priors = random_simplex(rng, k);
    let vrows: Vec<Vec<f64>> = (0..k).map(|_| random_simplex(rng, verbs)).collect();
    let nrows: Vec<Vec<f64>> = (0..k).map(|_| random_simplex(rng, nouns)).collect();
    let transpose = |rows: &[Vec<f64>], len: usize| -> Vec<Vec<f64>> {
        (0..len)
            .map(|t| rows.iter().map(|r| r[t]).collect())
            .collect()
    };
    LcModel::from_parts(
        priors,
        transpose(&vrows, verbs),
        transpose(&nrows, nouns),
        (0..verbs)
            .map(|v| VerbSlot::new(format!("v{v}"), FrameSlot::TransObject).expect("valid token"))
            .collect(),
        (0..nouns).map(|n| format!("n{n}")).collect(),
    )
    .expect("normalized by construction")
}

/// Sample of `len` distinct model nouns with counts in 1..=5.
pub fn random_sample<R: Rng + ?Sized>(rng: &mut R, model: &LcModel, len: usize) -> NounSample {
    let verb = VerbSlot::new("probe", FrameSlot::TransObject).expect("valid token");
    let mut freqs = IndexMap::new();
    let nouns = model.nouns();
    while freqs.len() < len.min(nouns.len()).max(1) {
        let n = &nouns[rng.gen_range(0..nouns.len())];
        freqs.insert(n.clone(), rng.gen_range(1..=5) as f64);
    }
    NounSample::new(verb, freqs).expect("positive counts")
}

/// Σ_n f(n)·log Σ_c w_c p(n|c), computed from scratch.
pub fn sample_objective(model: &LcModel, sample: &NounSample, weights: &[f64]) -> f64 {
    sample
        .freqs()
        .iter()
        .map(|(noun, &f)| {
            let n = model.noun_index(noun).expect("sample noun in model");
            let mix: f64 = (0..model.classes())
                .map(|c| weights[c] * model.noun_emission_row(c)[n])
                .sum();
            f * mix.ln()
        })
        .sum()
}

/// Best objective over w₁ ∈ {0, step, 2·step, …, 1} for a two-class model.
pub fn grid_best(model: &LcModel, sample: &NounSample, step: f64) -> f64 {
    let steps = (1.0 / step).round() as usize;
    (0..=steps)
        .map(|i| {
            let w1 = i as f64 / steps as f64;
            sample_objective(model, sample, &[1.0 - w1, w1])
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn standardization(out: &mut Vec<Check>) {
    let mut worst: f64 = 0.0;
    for amb in [2.0, 2.83, 3.51, 8.63, 9.17] {
        let s = standardize(1.0 / amb, amb).unwrap_or(f64::NAN);
        worst = worst.max((s - 0.5).abs());
    }
    out.push(check(
        "standardize-random-half",
        worst <= 1e-12,
        format!("max |std(1/amb, amb) - 0.5| = {worst:.3e}"),
    ));
}

fn joint_and_posterior(out: &mut Vec<Check>, seed: u64) {
    let mut rng = substream(seed, Stream::Synthetic);
    let mut worst_sum: f64 = 0.0;
    let mut worst_post: f64 = 0.0;
    for _ in 0..20 {
        let k = rng.gen_range(1..=5);
        let (nv, nn) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let m = random_model(&mut rng, k, nv, nn);
        let mut total = 0.0;
        for v in 0..m.verbs().len() {
            for n in 0..m.nouns().len() {
                let terms: Vec<f64> = (0..k)
                    .map(|c| m.priors()[c] * m.verb_emission_row(c)[v] * m.noun_emission_row(c)[n])
                    .collect();
                let z: f64 = terms.iter().sum();
                total += z;
                let post = m.posterior_at(v, n).unwrap_or_default();
                for c in 0..k {
                    worst_post = worst_post
                        .max((post.get(c).copied().unwrap_or(f64::NAN) - terms[c] / z).abs());
                }
            }
        }
        worst_sum = worst_sum.max((total - 1.0).abs());
    }
    out.push(check(
        "joint-sums-to-one",
        worst_sum <= 1e-12,
        format!("max |Σ p(v,n) - 1| = {worst_sum:.3e}"),
    ));
    out.push(check(
        "posterior-direct-bayes",
        worst_post <= 1e-12,
        format!("max posterior deviation = {worst_post:.3e}"),
    ));
}

fn em_monotone(out: &mut Vec<Check>, seed: u64) -> Result<()> {
    let mut rng = substream(seed, Stream::Synthetic);
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for i in 0..60 {
        let k = [1, 2, 3, 5][i % 4];
        let corpus = random_corpus(&mut rng, 20, 30);
        let config = TrainConfig {
            classes: k,
            seed: rng.gen(),
            max_iters: 40,
            rel_tol: 0.0,
            floor: 0.0,
        };
        let (_, trace) = train(&corpus, &config)?;
        for w in trace.log_likelihoods.windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
        runs += 1;
    }
    out.push(check(
        "em-monotone",
        worst <= 1e-9,
        format!("{runs} corpora, largest log-likelihood decrease = {worst:.3e}"),
    ));
    Ok(())
}

fn fine_tuning_grid(out: &mut Vec<Check>, seed: u64) -> Result<()> {
    let mut rng = substream(seed, Stream::Synthetic);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let nouns = rng.gen_range(2..=8);
        let verbs = rng.gen_range(1..=4);
        let m = random_model(&mut rng, 2, verbs, nouns);
        let len = rng.gen_range(1..=nouns);
        let s = random_sample(&mut rng, &m, len);
        let w = fit_class_weights(&m, &s, 1e-14, 100_000)?;
        let fit = sample_objective(&m, &s, &w);
        worst = worst.max((fit - grid_best(&m, &s, 1e-4)).abs());
    }
    out.push(check(
        "fine-tuning-grid",
        worst <= 1e-6,
        format!("20 instances, max |EM - grid| = {worst:.3e}"),
    ));
    Ok(())
}

fn partition_and_roundtrip(out: &mut Vec<Check>, seed: u64) -> Result<()> {
    let planted = planted_model(&PlantedConfig {
        classes: 3,
        verbs_per_class: 5,
        nouns_per_class: 20,
        zipf: 1.0,
    })?;
    let corpus = sample_corpus(&planted, 5000, &mut substream(seed, Stream::Synthetic))?;
    let config = TrainConfig {
        classes: 3,
        seed,
        ..TrainConfig::default()
    };
    let (model, _) = train(&corpus, &config)?;
    let lexicon = Lexicon::build(model.clone(), &corpus, LabelConfig::default())?;
    let mut worst: f64 = 0.0;
    for e in lexicon.entries() {
        for (noun, &f) in e.sample().freqs() {
            let sum: f64 = (0..model.classes())
                .map(|c| estimated_frequency(e, &model, c, noun, None).unwrap_or(f64::NAN))
                .sum();
            worst = worst.max((sum - f).abs());
        }
    }
    out.push(check(
        "posterior-partition",
        worst <= 1e-12,
        format!(
            "{} entries, max |Σ_c f_c(n) - f(n)| = {worst:.3e}",
            lexicon.len()
        ),
    ));
    let mut buf = Vec::new();
    write_model(&model, &[], &mut buf)?;
    let (back, _) = read_model(buf.as_slice())?;
    out.push(check(
        "model-roundtrip",
        back == model,
        "write/read of a trained model is bit-exact".into(),
    ));
    Ok(())
}

/// Runs every check. Errors only on failures of the machinery itself; a
/// numerical mismatch is reported as a failed [`Check`].
pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    standardization(&mut out);
    joint_and_posterior(&mut out, seed);
    em_monotone(&mut out, seed)?;
    fine_tuning_grid(&mut out, seed)?;
    partition_and_roundtrip(&mut out, seed)?;
    Ok(out)
}
