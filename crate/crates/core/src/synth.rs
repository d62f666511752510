//! Synthetic data: planted latent-class models and corpora sampled from them.

use std::collections::BTreeMap;

use indexmap::IndexSet;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::corpus::{FrameSlot, PairCorpus, VerbSlot};
use crate::error::{Error, Result};
use crate::model::LcModel;

/// Shape of a planted model whose classes own disjoint verb and noun sets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantedConfig {
    pub classes: usize,
    pub verbs_per_class: usize,
    pub nouns_per_class: usize,
    /// Zipf exponent of the within-class emissions; 0 gives uniform rows.
    pub zipf: f64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            classes: 3,
            verbs_per_class: 15,
            nouns_per_class: 200,
            zipf: 1.0,
        }
    }
}

fn zipf_row(n: usize, s: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=n).map(|r| (r as f64).powf(-s)).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

/// Verb `v{c}_{i}.aso:o` and noun `n{c}_{j}` belong to class c only.
/// Priors are uniform.
pub fn planted_model(config: &PlantedConfig) -> Result<LcModel> {
    let PlantedConfig {
        classes: k,
        verbs_per_class: nv,
        nouns_per_class: nn,
        zipf,
    } = *config;
    if k == 0 || nv == 0 || nn == 0 {
        return Err(Error::Domain(
            "planted model needs non-empty classes".into(),
        ));
    }
    let vrow = zipf_row(nv, zipf);
    let nrow = zipf_row(nn, zipf);
    let mut verbs = IndexSet::new();
    let mut verb_emis = Vec::new();
    let mut nouns = IndexSet::new();
    let mut noun_emis = Vec::new();
    for c in 0..k {
        for (i, &p) in vrow.iter().enumerate() {
            verbs.insert(VerbSlot::new(format!("v{c}_{i}"), FrameSlot::TransObject)?);
            let mut col = vec![0.0; k];
            col[c] = p;
            verb_emis.push(col);
        }
        for (j, &p) in nrow.iter().enumerate() {
            nouns.insert(format!("n{c}_{j}"));
            let mut col = vec![0.0; k];
            col[c] = p;
            noun_emis.push(col);
        }
    }
    LcModel::from_parts(vec![1.0 / k as f64; k], verb_emis, noun_emis, verbs, nouns)
}

/// Draws `pairs` iid (v, n) pairs from the model's joint, aggregated into
/// counts and added in (verb, noun) model-index order.
pub fn sample_corpus<R: Rng + ?Sized>(
    model: &LcModel,
    pairs: usize,
    rng: &mut R,
) -> Result<PairCorpus> {
    let k = model.classes();
    let bad = |e: rand::distributions::WeightedError| Error::Domain(e.to_string());
    let class_pick = WeightedIndex::new(model.priors()).map_err(bad)?;
    let mut verb_pick = Vec::with_capacity(k);
    let mut noun_pick = Vec::with_capacity(k);
    for c in 0..k {
        verb_pick.push(WeightedIndex::new(model.verb_emission_row(c)).ok());
        noun_pick.push(WeightedIndex::new(model.noun_emission_row(c)).ok());
    }
    let mut counts = BTreeMap::<(usize, usize), u64>::new();
    for _ in 0..pairs {
        let c = class_pick.sample(rng);
        let (Some(vd), Some(nd)) = (&verb_pick[c], &noun_pick[c]) else {
            return Err(Error::Domain(format!(
                "class {c} has an all-zero emission row"
            )));
        };
        let v = vd.sample(rng);
        let n = nd.sample(rng);
        *counts.entry((v, n)).or_default() += 1;
    }
    let mut corpus = PairCorpus::new();
    for ((v, n), f) in counts {
        corpus.add(model.verbs()[v].clone(), &model.nouns()[n], f as f64)?;
    }
    Ok(corpus)
}

/// KL(p‖q) in nats over aligned rows; infinite when q misses mass of p.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| {
            if qi > 0.0 {
                pi * (pi / qi).ln()
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// Verb-row and noun-row KL(reference class `rc` ‖ candidate class `cc`),
/// with tokens aligned by name. Tokens absent from the candidate count as
/// zero probability.
pub fn emission_kl(reference: &LcModel, rc: usize, candidate: &LcModel, cc: usize) -> (f64, f64) {
    let k = candidate.classes();
    let verbs: (Vec<f64>, Vec<f64>) = reference
        .verbs()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let q = candidate
                .verb_index(v)
                .map_or(0.0, |j| candidate.verb_column(j)[cc]);
            (reference.verb_column(i)[rc], q)
        })
        .unzip();
    let nouns: (Vec<f64>, Vec<f64>) = reference
        .nouns()
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let q = candidate
                .noun_index(n)
                .map_or(0.0, |j| candidate.noun_column(j)[cc]);
            (reference.noun_column(i)[rc], q)
        })
        .unzip();
    debug_assert!(cc < k);
    (
        kl_divergence(&verbs.0, &verbs.1),
        kl_divergence(&nouns.0, &nouns.1),
    )
}

/// Class alignment minimizing the worst emission KL. Returns `perm` with
/// reference class c matched to candidate class `perm[c]`, and that worst
/// KL. Exhaustive over permutations; meant for small K.
pub fn best_alignment(reference: &LcModel, candidate: &LcModel) -> Result<(Vec<usize>, f64)> {
    let k = reference.classes();
    if candidate.classes() != k {
        return Err(Error::Domain(format!(
            "class counts differ: {k} vs {}",
            candidate.classes()
        )));
    }
    let mut cost = vec![vec![0.0; k]; k];
    for (rc, row) in cost.iter_mut().enumerate() {
        for (cc, cell) in row.iter_mut().enumerate() {
            let (kv, kn) = emission_kl(reference, rc, candidate, cc);
            *cell = kv.max(kn);
        }
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut perm: Vec<usize> = (0..k).collect();
    permute(&mut perm, 0, &mut |p| {
        let worst = (0..k).map(|c| cost[c][p[c]]).fold(0.0, f64::max);
        if best.as_ref().map_or(true, |(_, b)| worst < *b) {
            best = Some((p.to_vec(), worst));
        }
    });
    Ok(best.expect("at least one permutation"))
}

fn permute(p: &mut [usize], i: usize, f: &mut dyn FnMut(&[usize])) {
    if i == p.len() {
        f(p);
        return;
    }
    for j in i..p.len() {
        p.swap(i, j);
        permute(p, i + 1, f);
        p.swap(i, j);
    }
}
