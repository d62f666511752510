//! Latent-class model p(c,v,n) = p(c)·p(v|c)·p(n|c) and its EM training.
//!
//! Verbs and nouns are conditionally independent given the class. The
//! model keeps its own copy of the training vocabularies; every lookup by
//! token goes through them.

use indexmap::IndexSet;
use log::warn;
use rand::Rng;
use rayon::prelude::*;

use crate::corpus::{PairCorpus, VerbSlot};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

/// Relative perturbation applied to uniform emission rows at init.
pub const INIT_PERTURBATION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub classes: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Additive floor on emission parameters after each M-step (0 = off).
    pub floor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            classes: 35,
            seed: 0,
            max_iters: 200,
            rel_tol: 1e-6,
            floor: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 {
            return Err(Error::Usage("class count must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Usage("max_iters must be positive".into()));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::Usage("rel_tol must be non-negative".into()));
        }
        if !(self.floor >= 0.0 && self.floor.is_finite()) {
            return Err(Error::Usage("floor must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainTrace {
    /// Log-likelihood of the model after each iteration; index 0 is the
    /// initial model.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// K exceeds |verbs|·|nouns|.
    pub over_parameterized: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LcModel {
    classes: usize,
    priors: Vec<f64>,
    // Token-major: verb_emis[v * K + c] = p(v|c).
    verb_emis: Vec<f64>,
    noun_emis: Vec<f64>,
    verbs: IndexSet<VerbSlot>,
    nouns: IndexSet<String>,
}

impl LcModel {
    /// Builds a model from token-major emission tables (`verb_emis[v][c]`).
    /// Checks shapes, non-negativity and normalization within 1e-9.
    pub fn from_parts(
        priors: Vec<f64>,
        verb_emis: Vec<Vec<f64>>,
        noun_emis: Vec<Vec<f64>>,
        verbs: IndexSet<VerbSlot>,
        nouns: IndexSet<String>,
    ) -> Result<Self> {
        let k = priors.len();
        if k == 0 {
            return Err(Error::Domain("model needs at least one class".into()));
        }
        if verb_emis.len() != verbs.len() || noun_emis.len() != nouns.len() {
            return Err(Error::Domain(
                "emission tables do not match vocabularies".into(),
            ));
        }
        if verb_emis.iter().chain(&noun_emis).any(|r| r.len() != k) {
            return Err(Error::Domain(format!(
                "emission rows must have {k} columns"
            )));
        }
        let model = LcModel {
            classes: k,
            priors,
            verb_emis: verb_emis.into_iter().flatten().collect(),
            noun_emis: noun_emis.into_iter().flatten().collect(),
            verbs,
            nouns,
        };
        model.check_normalized(1e-9)?;
        Ok(model)
    }

    pub(crate) fn check_normalized(&self, tol: f64) -> Result<()> {
        let all = self
            .priors
            .iter()
            .chain(&self.verb_emis)
            .chain(&self.noun_emis);
        if all.clone().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Domain(
                "model parameters must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = self.priors.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::Domain(format!("class priors sum to {sum}")));
        }
        for c in 0..self.classes {
            let sv: f64 = self.verb_emission_row(c).iter().sum();
            let sn: f64 = self.noun_emission_row(c).iter().sum();
            if (sv - 1.0).abs() > tol || (sn - 1.0).abs() > tol {
                return Err(Error::Domain(format!(
                    "class {c} emission rows sum to {sv} (verbs) and {sn} (nouns)"
                )));
            }
        }
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn verbs(&self) -> &IndexSet<VerbSlot> {
        &self.verbs
    }

    pub fn nouns(&self) -> &IndexSet<String> {
        &self.nouns
    }

    pub fn verb_index(&self, verb: &VerbSlot) -> Option<usize> {
        self.verbs.get_index_of(verb)
    }

    pub fn noun_index(&self, noun: &str) -> Option<usize> {
        self.nouns.get_index_of(noun)
    }

    /// p(v|c) for all classes.
    pub fn verb_column(&self, v: usize) -> &[f64] {
        &self.verb_emis[v * self.classes..(v + 1) * self.classes]
    }

    /// p(n|c) for all classes.
    pub fn noun_column(&self, n: usize) -> &[f64] {
        &self.noun_emis[n * self.classes..(n + 1) * self.classes]
    }

    /// The distribution p(·|c) over verbs.
    pub fn verb_emission_row(&self, c: usize) -> Vec<f64> {
        (0..self.verbs.len())
            .map(|v| self.verb_emis[v * self.classes + c])
            .collect()
    }

    /// The distribution p(·|c) over nouns.
    pub fn noun_emission_row(&self, c: usize) -> Vec<f64> {
        (0..self.nouns.len())
            .map(|n| self.noun_emis[n * self.classes + c])
            .collect()
    }

    pub fn joint_at(&self, v: usize, n: usize) -> f64 {
        let vc = self.verb_column(v);
        let nc = self.noun_column(n);
        (0..self.classes)
            .map(|c| self.priors[c] * vc[c] * nc[c])
            .sum()
    }

    fn lookup(&self, verb: &VerbSlot, noun: &str) -> Result<(usize, usize)> {
        let v = self
            .verb_index(verb)
            .ok_or_else(|| Error::NotFound(format!("verb {verb} not in model")))?;
        let n = self
            .noun_index(noun)
            .ok_or_else(|| Error::NotFound(format!("noun {noun} not in model")))?;
        Ok((v, n))
    }

    /// Class-smoothed pair probability p(v,n) = Σ_c p(c)p(v|c)p(n|c).
    pub fn joint(&self, verb: &VerbSlot, noun: &str) -> Result<f64> {
        let (v, n) = self.lookup(verb, noun)?;
        Ok(self.joint_at(v, n))
    }

    pub fn posterior_at(&self, v: usize, n: usize) -> Option<Vec<f64>> {
        let vc = self.verb_column(v);
        let nc = self.noun_column(n);
        let mut w: Vec<f64> = (0..self.classes)
            .map(|c| self.priors[c] * vc[c] * nc[c])
            .collect();
        let z: f64 = w.iter().sum();
        if !(z > 0.0) {
            return None;
        }
        w.iter_mut().for_each(|x| *x /= z);
        Some(w)
    }

    /// p(c|v,n).
    pub fn posterior(&self, verb: &VerbSlot, noun: &str) -> Result<Vec<f64>> {
        let (v, n) = self.lookup(verb, noun)?;
        self.posterior_at(v, n)
            .ok_or_else(|| Error::UndefinedPosterior {
                verb: verb.to_string(),
                noun: noun.to_string(),
            })
    }

    /// Returns the same model with classes relabeled: new class `i` is old
    /// class `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let k = self.classes;
        let mut seen = vec![false; k];
        if perm.len() != k
            || perm
                .iter()
                .any(|&p| p >= k || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Usage(
                "not a permutation of the class indices".into(),
            ));
        }
        let remap = |table: &[f64]| -> Vec<f64> {
            table
                .chunks(k)
                .flat_map(|col| perm.iter().map(move |&p| col[p]))
                .collect()
        };
        Ok(LcModel {
            classes: k,
            priors: perm.iter().map(|&p| self.priors[p]).collect(),
            verb_emis: remap(&self.verb_emis),
            noun_emis: remap(&self.noun_emis),
            verbs: self.verbs.clone(),
            nouns: self.nouns.clone(),
        })
    }

    fn shares_vocab(&self, corpus: &PairCorpus) -> bool {
        self.verbs.len() == corpus.verbs().len()
            && self.nouns.len() == corpus.nouns().len()
            && self.verbs.iter().eq(corpus.verbs().iter())
            && self.nouns.iter().eq(corpus.nouns().iter())
    }
}

/// Uniform priors; emission rows uniform·(1 + ε·u), u ~ U[0,1), then
/// renormalized.
pub fn init_model(corpus: &PairCorpus, config: &TrainConfig) -> Result<LcModel> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::Training(
            "cannot initialize on an empty corpus".into(),
        ));
    }
    let k = config.classes;
    let nv = corpus.verbs().len();
    let nn = corpus.nouns().len();
    let mut rng = substream(config.seed, Stream::Init);
    let mut verb_emis = vec![0.0; nv * k];
    let mut noun_emis = vec![0.0; nn * k];
    for c in 0..k {
        perturbed_row(&mut rng, &mut verb_emis, nv, k, c);
        perturbed_row(&mut rng, &mut noun_emis, nn, k, c);
    }
    Ok(LcModel {
        classes: k,
        priors: vec![1.0 / k as f64; k],
        verb_emis,
        noun_emis,
        verbs: corpus.verbs().clone(),
        nouns: corpus.nouns().clone(),
    })
}

fn perturbed_row<R: Rng>(rng: &mut R, table: &mut [f64], len: usize, k: usize, c: usize) {
    let base = 1.0 / len as f64;
    let mut sum = 0.0;
    for t in 0..len {
        let u: f64 = rng.gen();
        let x = base * (1.0 + INIT_PERTURBATION * u);
        table[t * k + c] = x;
        sum += x;
    }
    for t in 0..len {
        table[t * k + c] /= sum;
    }
}

/// Σ_{(v,n)} f(v,n)·log p(v,n) over the observed pairs of `corpus`.
///
/// Tokens are matched by string, so `corpus` may be held-out data. A pair
/// with zero (or undefined) joint probability yields `-inf` and a warning
/// naming the pair.
pub fn log_likelihood(model: &LcModel, corpus: &PairCorpus) -> f64 {
    let vmap: Vec<Option<usize>> = corpus.verbs().iter().map(|v| model.verb_index(v)).collect();
    let nmap: Vec<Option<usize>> = corpus.nouns().iter().map(|n| model.noun_index(n)).collect();
    let mut ll = 0.0;
    for p in corpus.pairs() {
        let joint = match (vmap[p.verb], nmap[p.noun]) {
            (Some(v), Some(n)) => model.joint_at(v, n),
            _ => 0.0,
        };
        if !(joint > 0.0) {
            warn!(
                "zero joint probability for observed pair ({}, {})",
                corpus.verbs()[p.verb],
                corpus.nouns()[p.noun]
            );
            return f64::NEG_INFINITY;
        }
        ll += p.count * joint.ln();
    }
    ll
}

/// One EM iteration. Returns the re-estimated model and the log-likelihood
/// of the *input* model.
///
/// Pair normalizers are computed in parallel; sufficient statistics are
/// then accumulated per class, each class scanning pairs in storage order,
/// so results do not depend on the number of worker threads.
pub fn em_step(model: &LcModel, corpus: &PairCorpus) -> Result<(LcModel, f64)> {
    em_step_with_floor(model, corpus, 0.0)
}

pub(crate) fn em_step_with_floor(
    model: &LcModel,
    corpus: &PairCorpus,
    floor: f64,
) -> Result<(LcModel, f64)> {
    if !model.shares_vocab(corpus) {
        return Err(Error::Training(
            "model and corpus vocabularies differ".into(),
        ));
    }
    let k = model.classes;
    let pairs = corpus.pairs();
    let joints: Vec<f64> = pairs
        .par_iter()
        .map(|p| model.joint_at(p.verb, p.noun))
        .collect();

    let mut ll = 0.0;
    for (p, &z) in pairs.iter().zip(&joints) {
        if !(z > 0.0) {
            return Err(Error::Training(format!(
                "observed pair ({}, {}) has zero probability under the model",
                corpus.verbs()[p.verb],
                corpus.nouns()[p.noun]
            )));
        }
        ll += p.count * z.ln();
    }

    let nv = model.verbs.len();
    let nn = model.nouns.len();
    let stats: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..k)
        .into_par_iter()
        .map(|c| {
            let mut mass = 0.0;
            let mut verb_acc = vec![0.0; nv];
            let mut noun_acc = vec![0.0; nn];
            let prior = model.priors[c];
            for (p, &z) in pairs.iter().zip(&joints) {
                let r = p.count
                    * prior
                    * model.verb_emis[p.verb * k + c]
                    * model.noun_emis[p.noun * k + c]
                    / z;
                mass += r;
                verb_acc[p.verb] += r;
                noun_acc[p.noun] += r;
            }
            (mass, verb_acc, noun_acc)
        })
        .collect();

    let total: f64 = stats.iter().map(|s| s.0).sum();
    let mut next = model.clone();
    for (c, (mass, verb_acc, noun_acc)) in stats.into_iter().enumerate() {
        next.priors[c] = mass / total;
        // A class that lost all mass keeps its previous emissions.
        if mass > 0.0 {
            set_row(&mut next.verb_emis, k, c, &verb_acc, mass, floor);
            set_row(&mut next.noun_emis, k, c, &noun_acc, mass, floor);
        }
    }
    Ok((next, ll))
}

fn set_row(table: &mut [f64], k: usize, c: usize, acc: &[f64], mass: f64, floor: f64) {
    if floor > 0.0 {
        let z: f64 = acc.iter().map(|a| a / mass + floor).sum();
        for (t, a) in acc.iter().enumerate() {
            table[t * k + c] = (a / mass + floor) / z;
        }
    } else {
        // Row sums of acc equal mass up to rounding; renormalize on the
        // actual sum to keep rows at 1.
        let z: f64 = acc.iter().sum();
        for (t, a) in acc.iter().enumerate() {
            table[t * k + c] = a / z;
        }
    }
}

/// Relative log-likelihood improvement used by both EM loops.
pub(crate) fn relative_improvement(old: f64, new: f64) -> f64 {
    let diff = new - old;
    if diff == 0.0 {
        0.0
    } else {
        diff / old.abs().max(f64::MIN_POSITIVE)
    }
}

/// Runs EM from [`init_model`] until the relative log-likelihood
/// improvement drops below `rel_tol` or `max_iters` steps have run.
pub fn train(corpus: &PairCorpus, config: &TrainConfig) -> Result<(LcModel, TrainTrace)> {
    let mut model = init_model(corpus, config)?;
    let cells = corpus.verbs().len() as f64 * corpus.nouns().len() as f64;
    let mut trace = TrainTrace {
        over_parameterized: config.classes as f64 > cells,
        ..Default::default()
    };
    if trace.over_parameterized {
        warn!(
            "{} classes exceed the {} verb-noun cells of the corpus",
            config.classes, cells
        );
    }
    let mut current_ll = log_likelihood(&model, corpus);
    trace.log_likelihoods.push(current_ll);
    while trace.iterations < config.max_iters {
        let (next, _) = em_step_with_floor(&model, corpus, config.floor)?;
        let next_ll = log_likelihood(&next, corpus);
        model = next;
        trace.iterations += 1;
        trace.log_likelihoods.push(next_ll);
        let improvement = relative_improvement(current_ll, next_ll);
        current_ll = next_ll;
        if improvement.abs() < config.rel_tol {
            trace.converged = true;
            break;
        }
    }
    Ok((model, trace))
}
