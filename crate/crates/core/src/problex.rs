//! Probabilistic class-based lexicon.
//!
//! For each verb slot the class weights p(c) are re-estimated against that
//! slot's noun sample while the model's noun emissions stay fixed:
//! p(n) = Σ_c p(c)·p(n|c). The lexicon entry keeps the fitted weights and
//! the sample, from which estimated frequencies f_c(n) = f(n)·p(c|n) are
//! derived on demand.

use indexmap::IndexMap;
use log::warn;
use rayon::prelude::*;

use crate::corpus::{object_sample, NounSample, PairCorpus, VerbSlot};
use crate::error::{Error, Result};
use crate::model::{relative_improvement, LcModel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitConfig {
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            rel_tol: 1e-6,
            max_iters: 200,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitTrace {
    /// Σ_n f(n)·log p(n) before the first step and after every step.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Sample nouns the model cannot explain.
    pub dropped: Vec<String>,
}

/// Restricts a sample to nouns with positive mixture probability under
/// `weights`. Returns the kept sample and the dropped nouns.
pub(crate) fn effective_sample(
    model: &LcModel,
    sample: &NounSample,
    weights: &[f64],
) -> Result<(NounSample, Vec<String>)> {
    let mut kept = IndexMap::new();
    let mut dropped = Vec::new();
    for (noun, &f) in sample.freqs() {
        let covered = model.noun_index(noun).is_some_and(|n| {
            let col = model.noun_column(n);
            weights.iter().zip(col).map(|(w, e)| w * e).sum::<f64>() > 0.0
        });
        if covered {
            kept.insert(noun.clone(), f);
        } else {
            dropped.push(noun.clone());
        }
    }
    if !dropped.is_empty() {
        warn!(
            "{}: dropping {} sample noun(s) not covered by the model: {}",
            sample.verb(),
            dropped.len(),
            dropped.join(",")
        );
    }
    if kept.is_empty() {
        return Err(Error::EmptySample(sample.verb().to_string()));
    }
    Ok((NounSample::new(sample.verb().clone(), kept)?, dropped))
}

/// Fine-tuning EM over the class weights only.
pub fn fit_class_weights(
    model: &LcModel,
    sample: &NounSample,
    rel_tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    fit_class_weights_traced(model, sample, FitConfig { rel_tol, max_iters }).map(|r| r.0)
}

pub fn fit_class_weights_traced(
    model: &LcModel,
    sample: &NounSample,
    config: FitConfig,
) -> Result<(Vec<f64>, FitTrace)> {
    let (sample, dropped) = effective_sample(model, sample, model.priors())?;
    let (weights, mut trace) = fit_on_effective(model, &sample, model.priors().to_vec(), config);
    trace.dropped = dropped;
    Ok((weights, trace))
}

/// EM loop over a sample whose nouns all have positive mixture probability
/// under the initial weights.
fn fit_on_effective(
    model: &LcModel,
    sample: &NounSample,
    mut weights: Vec<f64>,
    config: FitConfig,
) -> (Vec<f64>, FitTrace) {
    let k = model.classes();
    let cols: Vec<(&[f64], f64)> = sample
        .freqs()
        .iter()
        .map(|(noun, &f)| {
            let n = model
                .noun_index(noun)
                .expect("effective sample noun in model");
            (model.noun_column(n), f)
        })
        .collect();
    let m = sample.size();
    let mut trace = FitTrace::default();
    let mut prev: Option<f64> = None;
    loop {
        let mut ll = 0.0;
        let mut acc = vec![0.0; k];
        for &(col, f) in &cols {
            let z: f64 = weights.iter().zip(col).map(|(w, e)| w * e).sum();
            ll += f * z.ln();
            for c in 0..k {
                acc[c] += f * weights[c] * col[c] / z;
            }
        }
        trace.log_likelihoods.push(ll);
        if let Some(p) = prev {
            if relative_improvement(p, ll).abs() < config.rel_tol {
                trace.converged = true;
                break;
            }
        }
        if trace.iterations == config.max_iters {
            break;
        }
        let total: f64 = acc.iter().sum();
        debug_assert!((total / m - 1.0).abs() < 1e-9);
        for c in 0..k {
            weights[c] = acc[c] / total;
        }
        trace.iterations += 1;
        prev = Some(ll);
    }
    (weights, trace)
}

/// p(c|n) ∝ weights[c]·p(n|c). `None` when the noun is out of vocabulary
/// or the mixture probability is zero.
pub fn membership_with(model: &LcModel, weights: &[f64], noun: &str) -> Option<Vec<f64>> {
    let n = model.noun_index(noun)?;
    let col = model.noun_column(n);
    let mut post: Vec<f64> = weights.iter().zip(col).map(|(w, e)| w * e).collect();
    let z: f64 = post.iter().sum();
    if !(z > 0.0) {
        return None;
    }
    post.iter_mut().for_each(|p| *p /= z);
    Some(post)
}

/// Index and value of the first maximum.
pub(crate) fn argmax(xs: &[f64]) -> (usize, f64) {
    xs.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, x)| {
            if x > best.1 {
                (i, x)
            } else {
                best
            }
        })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LexiconEntry {
    verb: VerbSlot,
    class_weights: Vec<f64>,
    sample: NounSample,
    top_class: usize,
    top_class_prob: f64,
}

impl LexiconEntry {
    pub fn new(verb: VerbSlot, class_weights: Vec<f64>, sample: NounSample) -> Result<Self> {
        let s: f64 = class_weights.iter().sum();
        if class_weights.is_empty()
            || (s - 1.0).abs() > 1e-9
            || class_weights.iter().any(|w| !(*w >= 0.0))
        {
            return Err(Error::Domain(format!(
                "class weights for {verb} must be a distribution (sum {s})"
            )));
        }
        let (top_class, top_class_prob) = argmax(&class_weights);
        Ok(LexiconEntry {
            verb,
            class_weights,
            sample,
            top_class,
            top_class_prob,
        })
    }

    pub fn verb(&self) -> &VerbSlot {
        &self.verb
    }

    pub fn class_weights(&self) -> &[f64] {
        &self.class_weights
    }

    pub fn sample(&self) -> &NounSample {
        &self.sample
    }

    /// Most probable class for the slot, ĉ = argmax p(c).
    pub fn top_class(&self) -> usize {
        self.top_class
    }

    pub fn top_class_prob(&self) -> f64 {
        self.top_class_prob
    }
}

/// p(c|n) under the entry's fine-tuned weights.
pub fn membership(entry: &LexiconEntry, model: &LcModel, noun: &str) -> Result<Vec<f64>> {
    if model.noun_index(noun).is_none() {
        return Err(Error::NotFound(format!("noun {noun} not in model")));
    }
    membership_with(model, entry.class_weights(), noun).ok_or_else(|| Error::UndefinedMembership {
        noun: noun.to_string(),
    })
}

/// f_c(n) = f(n)·p(c|n), with f(n) from the entry's sample unless
/// `f_override` is given.
pub fn estimated_frequency(
    entry: &LexiconEntry,
    model: &LcModel,
    class: usize,
    noun: &str,
    f_override: Option<f64>,
) -> Result<f64> {
    if class >= model.classes() {
        return Err(Error::Usage(format!(
            "class {class} out of range (model has {})",
            model.classes()
        )));
    }
    let post = membership(entry, model, noun)?;
    let f = f_override.unwrap_or_else(|| entry.sample().freq(noun));
    Ok(f * post[class])
}

pub fn build_entry(
    model: &LcModel,
    corpus: &PairCorpus,
    verb: &VerbSlot,
    config: FitConfig,
) -> Result<LexiconEntry> {
    let sample = object_sample(corpus, verb)?;
    let (effective, _) = effective_sample(model, &sample, model.priors())?;
    let (weights, _) = fit_on_effective(model, &effective, model.priors().to_vec(), config);
    LexiconEntry::new(verb.clone(), weights, effective)
}

/// Nouns of the entry's sample ranked by f_c(n), descending; ties keep
/// model vocabulary order.
pub fn top_nouns(
    entry: &LexiconEntry,
    model: &LcModel,
    class: usize,
    k: usize,
) -> Vec<(String, f64)> {
    let mut ranked: Vec<(usize, &String, f64)> = entry
        .sample()
        .freqs()
        .iter()
        .filter_map(|(noun, &f)| {
            let idx = model.noun_index(noun)?;
            let post = membership_with(model, entry.class_weights(), noun)?;
            Some((idx, noun, f * post.get(class).copied().unwrap_or(0.0)))
        })
        .collect();
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .take(k)
        .map(|(_, n, f)| (n.clone(), f))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelConfig {
    /// Verb slots whose sample size M is below this are left out.
    pub min_sample_size: f64,
    pub fit: FitConfig,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            min_sample_size: 1.0,
            fit: FitConfig::default(),
        }
    }
}

/// A latent-class model plus one fine-tuned entry per verb slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Lexicon {
    model: LcModel,
    entries: IndexMap<VerbSlot, LexiconEntry>,
}

impl Lexicon {
    pub fn new(model: LcModel, entries: impl IntoIterator<Item = LexiconEntry>) -> Result<Self> {
        let mut map = IndexMap::new();
        for e in entries {
            if e.class_weights().len() != model.classes() {
                return Err(Error::Domain(format!(
                    "entry {} has {} class weights, model has {} classes",
                    e.verb(),
                    e.class_weights().len(),
                    model.classes()
                )));
            }
            map.insert(e.verb().clone(), e);
        }
        Ok(Lexicon {
            model,
            entries: map,
        })
    }

    /// Labels every verb slot of `corpus` whose sample passes the size
    /// filter. Entries are fitted in parallel and kept in corpus order.
    pub fn build(model: LcModel, corpus: &PairCorpus, config: LabelConfig) -> Result<Self> {
        let verbs: Vec<&VerbSlot> = corpus
            .verbs()
            .iter()
            .enumerate()
            .filter(|(v, _)| corpus.row(*v).map(|p| p.count).sum::<f64>() >= config.min_sample_size)
            .map(|(_, verb)| verb)
            .collect();
        let built: Vec<Result<LexiconEntry>> = verbs
            .par_iter()
            .map(|verb| build_entry(&model, corpus, verb, config.fit))
            .collect();
        let mut entries = Vec::with_capacity(built.len());
        for r in built {
            match r {
                Ok(e) => entries.push(e),
                Err(Error::EmptySample(v)) => {
                    warn!("{v}: no sample noun is covered by the model, skipped")
                }
                Err(e) => return Err(e),
            }
        }
        Lexicon::new(model, entries)
    }

    pub fn model(&self) -> &LcModel {
        &self.model
    }

    pub fn entry(&self, verb: &VerbSlot) -> Option<&LexiconEntry> {
        self.entries.get(verb)
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> + '_ {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Weights re-fitted on an arbitrary sample (e.g. a sample augmented with
/// candidate translations), starting from the model priors.
pub(crate) fn refit(
    model: &LcModel,
    sample: &NounSample,
    config: FitConfig,
) -> Result<(NounSample, Vec<f64>)> {
    let (effective, _) = effective_sample(model, sample, model.priors())?;
    let (weights, _) = fit_on_effective(model, &effective, model.priors().to_vec(), config);
    Ok((effective, weights))
}
