//! Target-word selection among candidate nouns for a verb slot.
//!
//! Every selector orders candidates by its reference vocabulary before
//! scoring (unknown tokens last, by string), so the decision does not
//! depend on the order in which candidates are listed, and ties resolve to
//! the vocabulary-first candidate.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::Rng;

use crate::corpus::{NounSample, PairCorpus, VerbSlot};
use crate::error::{Error, Result};
use crate::model::LcModel;
use crate::problex::{argmax, membership_with, refit, FitConfig, Lexicon, LexiconEntry};

/// Relative score difference below which two candidates tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Weight each candidate adds to the verb's noun sample.
pub const CANDIDATE_BOOST: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Problex,
    ProblexFootnote,
    Clustering,
    Empirical,
    MajorSense,
    Random,
    /// Answers with the gold target; for checking the evaluation harness.
    Oracle,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Problex,
        Method::ProblexFootnote,
        Method::Clustering,
        Method::Empirical,
        Method::MajorSense,
        Method::Random,
        Method::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Problex => "problex",
            Method::ProblexFootnote => "problex_footnote",
            Method::Clustering => "clustering",
            Method::Empirical => "empirical",
            Method::MajorSense => "major_sense",
            Method::Random => "random",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Chosen,
    Abstain,
}

/// Outcome of one selection call.
#[derive(Clone, Debug, PartialEq)]
pub struct Choice {
    pub status: Status,
    pub noun: Option<String>,
    pub class: Option<usize>,
    pub score: f64,
    pub tie: bool,
    pub method: Method,
    pub reason: Option<String>,
}

impl Choice {
    pub fn chosen(method: Method, noun: &str, class: Option<usize>, score: f64, tie: bool) -> Self {
        Choice {
            status: Status::Chosen,
            noun: Some(noun.to_string()),
            class,
            score,
            tie,
            method,
            reason: None,
        }
    }

    pub fn abstain(method: Method, reason: impl Into<String>) -> Self {
        Choice {
            status: Status::Abstain,
            noun: None,
            class: None,
            score: 0.0,
            tie: false,
            method,
            reason: Some(reason.into()),
        }
    }

    pub fn is_abstain(&self) -> bool {
        self.status == Status::Abstain
    }

    /// `<noun>\t<class>\t<score>\t<tie>` or `ABSTAIN\t<reason>`.
    pub fn to_line(&self) -> String {
        match (&self.status, &self.noun) {
            (Status::Chosen, Some(n)) => format!(
                "{n}\t{}\t{}\t{}",
                self.class
                    .map_or_else(|| "-".to_string(), |c| c.to_string()),
                self.score,
                self.tie
            ),
            _ => format!("ABSTAIN\t{}", self.reason.as_deref().unwrap_or("no signal")),
        }
    }
}

/// Deduplicates and orders candidates by `index` (unknown tokens last,
/// lexicographically).
fn ordered<'a>(
    candidates: &'a [String],
    index: impl Fn(&str) -> Option<usize>,
) -> Result<Vec<&'a str>> {
    if candidates.is_empty() {
        return Err(Error::Usage("empty candidate list".into()));
    }
    let mut keyed: Vec<(usize, &str)> = candidates
        .iter()
        .map(|c| (index(c).unwrap_or(usize::MAX), c.as_str()))
        .collect();
    keyed.sort_unstable();
    keyed.dedup_by(|a, b| a.1 == b.1);
    Ok(keyed.into_iter().map(|(_, c)| c).collect())
}

fn is_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

struct Scored<'a> {
    noun: &'a str,
    class: Option<usize>,
    score: f64,
}

/// Argmax over ordered scores; the first of tied maxima wins and is
/// flagged. Abstains when no score is positive.
fn decide(method: Method, scored: &[Scored<'_>]) -> Choice {
    let mut best: Option<&Scored<'_>> = None;
    let mut tie = false;
    for s in scored.iter().filter(|s| s.score > 0.0) {
        match best {
            None => best = Some(s),
            Some(b) if is_tie(s.score, b.score) => tie = true,
            Some(b) if s.score > b.score => {
                best = Some(s);
                tie = false;
            }
            Some(_) => {}
        }
    }
    match best {
        Some(b) => Choice::chosen(method, b.noun, b.class, b.score, tie),
        None => Choice::abstain(method, "all candidates score zero"),
    }
}

/// A verb's noun sample augmented by one observation per candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinedSample {
    base: NounSample,
    boost: IndexMap<String, f64>,
}

impl CombinedSample {
    pub fn new<'a>(base: NounSample, candidates: impl IntoIterator<Item = &'a str>) -> Self {
        let mut boost = IndexMap::new();
        for c in candidates {
            boost.insert(c.to_string(), CANDIDATE_BOOST);
        }
        CombinedSample { base, boost }
    }

    pub fn base(&self) -> &NounSample {
        &self.base
    }

    /// f(n) in the combined sample.
    pub fn freq(&self, noun: &str) -> f64 {
        self.base.freq(noun) + self.boost.get(noun).copied().unwrap_or(0.0)
    }

    /// The combined sample restricted to nouns the model knows: base nouns
    /// first, then new candidates in boost order.
    pub fn to_sample_in(&self, model: &LcModel) -> Result<NounSample> {
        let mut freqs: IndexMap<String, f64> = IndexMap::new();
        for noun in self.base.freqs().keys().chain(self.boost.keys()) {
            if model.noun_index(noun).is_some() && !freqs.contains_key(noun) {
                freqs.insert(noun.clone(), self.freq(noun));
            }
        }
        NounSample::new(self.base.verb().clone(), freqs)
    }
}

/// Class weights fitted on a combined sample.
#[derive(Clone, Debug)]
struct Prepared {
    combined: CombinedSample,
    weights: Vec<f64>,
}

fn prepare<'a>(
    model: &LcModel,
    entry: &LexiconEntry,
    candidates: impl IntoIterator<Item = &'a str>,
    fit: FitConfig,
) -> Result<Prepared> {
    let combined = CombinedSample::new(entry.sample().clone(), candidates);
    let (_, weights) = refit(model, &combined.to_sample_in(model)?, fit)?;
    Ok(Prepared { combined, weights })
}

fn problex_scores<'a>(
    model: &LcModel,
    prepared: &Prepared,
    ordered: &[&'a str],
) -> Vec<Scored<'a>> {
    ordered
        .iter()
        .map(
            |&noun| match membership_with(model, &prepared.weights, noun) {
                Some(post) => {
                    let (c, p) = argmax(&post);
                    Scored {
                        noun,
                        class: Some(c),
                        score: prepared.combined.freq(noun) * p,
                    }
                }
                None => Scored {
                    noun,
                    class: None,
                    score: 0.0,
                },
            },
        )
        .collect()
}

/// Lexicon look-up: fit class weights on the verb's sample plus the
/// candidates, then choose the (noun, class) pair with the highest
/// estimated frequency f_combined(n)·p(c|n).
pub fn problex_select(
    lexicon: &Lexicon,
    verb: &VerbSlot,
    candidates: &[String],
    fit: FitConfig,
) -> Result<Choice> {
    let model = lexicon.model();
    let ordered = ordered(candidates, |n| model.noun_index(n))?;
    let Some(entry) = lexicon.entry(verb) else {
        return Ok(Choice::abstain(
            Method::Problex,
            format!("no lexicon entry for {verb}"),
        ));
    };
    let prepared = match prepare(model, entry, ordered.iter().copied(), fit) {
        Ok(p) => p,
        Err(Error::EmptySample(_)) => {
            return Ok(Choice::abstain(
                Method::Problex,
                "no sample noun covered by the model",
            ))
        }
        Err(e) => return Err(e),
    };
    Ok(decide(
        Method::Problex,
        &problex_scores(model, &prepared, &ordered),
    ))
}

/// Scores each candidate by (f(v,n) + 1)·max_c p(c|v,n) using the
/// training counts and the latent-class posterior; no second EM.
pub fn footnote_select(
    model: &LcModel,
    corpus: &PairCorpus,
    verb: &VerbSlot,
    candidates: &[String],
) -> Result<Choice> {
    let ordered = ordered(candidates, |n| model.noun_index(n))?;
    let Some(v) = model.verb_index(verb) else {
        return Ok(Choice::abstain(
            Method::ProblexFootnote,
            format!("verb {verb} not in model"),
        ));
    };
    let scored: Vec<Scored<'_>> = ordered
        .iter()
        .map(|&noun| {
            let post = model
                .noun_index(noun)
                .and_then(|n| model.posterior_at(v, n));
            match post {
                Some(post) => {
                    let (c, p) = argmax(&post);
                    Scored {
                        noun,
                        class: Some(c),
                        score: (corpus.count(verb, noun) + 1.0) * p,
                    }
                }
                None => Scored {
                    noun,
                    class: None,
                    score: 0.0,
                },
            }
        })
        .collect();
    Ok(decide(Method::ProblexFootnote, &scored))
}

/// argmax of the class-smoothed pair probability p(v,n).
pub fn clustering_select(
    model: &LcModel,
    verb: &VerbSlot,
    candidates: &[String],
) -> Result<Choice> {
    let ordered = ordered(candidates, |n| model.noun_index(n))?;
    let Some(v) = model.verb_index(verb) else {
        return Ok(Choice::abstain(
            Method::Clustering,
            format!("verb {verb} not in model"),
        ));
    };
    let scored: Vec<Scored<'_>> = ordered
        .iter()
        .map(|&noun| Scored {
            noun,
            class: None,
            score: model.noun_index(noun).map_or(0.0, |n| model.joint_at(v, n)),
        })
        .collect();
    Ok(decide(Method::Clustering, &scored))
}

/// argmax of the raw training count f(v,n); abstains on a zero maximum or
/// when two or more candidates share the maximum.
pub fn empirical_select(
    corpus: &PairCorpus,
    verb: &VerbSlot,
    candidates: &[String],
) -> Result<Choice> {
    let ordered = ordered(candidates, |n| corpus.noun_index(n))?;
    let counts: Vec<f64> = ordered.iter().map(|n| corpus.count(verb, n)).collect();
    let (i, max) = argmax(&counts);
    if !(max > 0.0) {
        return Ok(Choice::abstain(
            Method::Empirical,
            "no candidate seen with verb",
        ));
    }
    if counts.iter().filter(|&&c| is_tie(c, max)).count() > 1 {
        return Ok(Choice::abstain(Method::Empirical, "tied maximum count"));
    }
    Ok(Choice::chosen(
        Method::Empirical,
        ordered[i],
        None,
        max,
        false,
    ))
}

fn major_sense_from(
    marginals: &[f64],
    corpus: &PairCorpus,
    candidates: &[String],
) -> Result<Choice> {
    let ordered = ordered(candidates, |n| corpus.noun_index(n))?;
    let scored: Vec<Scored<'_>> = ordered
        .iter()
        .map(|&noun| Scored {
            noun,
            class: None,
            score: corpus.noun_index(noun).map_or(0.0, |n| marginals[n]),
        })
        .collect();
    Ok(decide(Method::MajorSense, &scored))
}

/// argmax of the marginal corpus frequency Σ_v f(v,n), ignoring the verb.
pub fn major_sense_select(corpus: &PairCorpus, candidates: &[String]) -> Result<Choice> {
    major_sense_from(&corpus.noun_marginals(), corpus, candidates)
}

/// Uniform choice among the distinct candidates (ordered by string).
pub fn random_select<R: Rng + ?Sized>(candidates: &[String], rng: &mut R) -> Result<Choice> {
    let ordered = ordered(candidates, |_| None)?;
    let i = rng.gen_range(0..ordered.len());
    Ok(Choice::chosen(
        Method::Random,
        ordered[i],
        None,
        1.0 / ordered.len() as f64,
        false,
    ))
}

/// Common interface for the evaluation harness.
pub trait Selector {
    fn method(&self) -> Method;
    fn select(&mut self, verb: &VerbSlot, candidates: &[String]) -> Result<Choice>;
}

pub struct ProblexSelector<'a> {
    lexicon: &'a Lexicon,
    fit: FitConfig,
    pooled: HashMap<VerbSlot, Prepared>,
}

impl<'a> ProblexSelector<'a> {
    /// Re-fits class weights for every decision.
    pub fn new(lexicon: &'a Lexicon, fit: FitConfig) -> Self {
        ProblexSelector {
            lexicon,
            fit,
            pooled: HashMap::new(),
        }
    }

    /// Fits once per verb on the sample plus the union of all candidates
    /// that will be queried for that verb. Verbs not covered by `queries`
    /// fall back to per-decision fitting.
    pub fn pooled<'q>(
        lexicon: &'a Lexicon,
        fit: FitConfig,
        queries: impl IntoIterator<Item = (&'q VerbSlot, &'q [String])>,
    ) -> Result<Self> {
        let model = lexicon.model();
        let mut union: IndexMap<VerbSlot, Vec<String>> = IndexMap::new();
        for (verb, cands) in queries {
            if lexicon.entry(verb).is_none() {
                continue;
            }
            union
                .entry(verb.clone())
                .or_default()
                .extend(cands.iter().cloned());
        }
        let mut pooled = HashMap::new();
        for (verb, cands) in union {
            let entry = lexicon.entry(&verb).expect("filtered above");
            let ordered = ordered(&cands, |n| model.noun_index(n))?;
            match prepare(model, entry, ordered, fit) {
                Ok(p) => {
                    pooled.insert(verb, p);
                }
                Err(Error::EmptySample(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(ProblexSelector {
            lexicon,
            fit,
            pooled,
        })
    }
}

impl Selector for ProblexSelector<'_> {
    fn method(&self) -> Method {
        Method::Problex
    }

    fn select(&mut self, verb: &VerbSlot, candidates: &[String]) -> Result<Choice> {
        match self.pooled.get(verb) {
            Some(prepared) => {
                let model = self.lexicon.model();
                let ordered = ordered(candidates, |n| model.noun_index(n))?;
                Ok(decide(
                    Method::Problex,
                    &problex_scores(model, prepared, &ordered),
                ))
            }
            None => problex_select(self.lexicon, verb, candidates, self.fit),
        }
    }
}

pub struct FootnoteSelector<'a> {
    pub model: &'a LcModel,
    pub corpus: &'a PairCorpus,
}

impl Selector for FootnoteSelector<'_> {
    fn method(&self) -> Method {
        Method::ProblexFootnote
    }

    fn select(&mut self, verb: &VerbSlot, candidates: &[String]) -> Result<Choice> {
        footnote_select(self.model, self.corpus, verb, candidates)
    }
}

pub struct ClusteringSelector<'a> {
    pub model: &'a LcModel,
}

impl Selector for ClusteringSelector<'_> {
    fn method(&self) -> Method {
        Method::Clustering
    }

    fn select(&mut self, verb: &VerbSlot, candidates: &[String]) -> Result<Choice> {
        clustering_select(self.model, verb, candidates)
    }
}

pub struct EmpiricalSelector<'a> {
    pub corpus: &'a PairCorpus,
}

impl Selector for EmpiricalSelector<'_> {
    fn method(&self) -> Method {
        Method::Empirical
    }

    fn select(&mut self, verb: &VerbSlot, candidates: &[String]) -> Result<Choice> {
        empirical_select(self.corpus, verb, candidates)
    }
}

pub struct MajorSenseSelector<'a> {
    corpus: &'a PairCorpus,
    marginals: Vec<f64>,
}

impl<'a> MajorSenseSelector<'a> {
    pub fn new(corpus: &'a PairCorpus) -> Self {
        MajorSenseSelector {
            corpus,
            marginals: corpus.noun_marginals(),
        }
    }
}

impl Selector for MajorSenseSelector<'_> {
    fn method(&self) -> Method {
        Method::MajorSense
    }

    fn select(&mut self, _verb: &VerbSlot, candidates: &[String]) -> Result<Choice> {
        major_sense_from(&self.marginals, self.corpus, candidates)
    }
}

pub struct RandomSelector<R> {
    pub rng: R,
}

impl<R: Rng> Selector for RandomSelector<R> {
    fn method(&self) -> Method {
        Method::Random
    }

    fn select(&mut self, _verb: &VerbSlot, candidates: &[String]) -> Result<Choice> {
        random_select(candidates, &mut self.rng)
    }
}

/// Replays a queue of gold answers, one per call.
pub struct OracleSelector {
    golds: VecDeque<String>,
}

impl OracleSelector {
    pub fn new(golds: impl IntoIterator<Item = String>) -> Self {
        OracleSelector {
            golds: golds.into_iter().collect(),
        }
    }
}

impl Selector for OracleSelector {
    fn method(&self) -> Method {
        Method::Oracle
    }

    fn select(&mut self, _verb: &VerbSlot, candidates: &[String]) -> Result<Choice> {
        let gold = self
            .golds
            .pop_front()
            .ok_or_else(|| Error::Usage("oracle ran out of gold answers".into()))?;
        if !candidates.contains(&gold) {
            return Err(Error::Usage(format!("gold {gold} not among candidates")));
        }
        Ok(Choice::chosen(Method::Oracle, &gold, None, 1.0, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problex::{membership, LexiconEntry};
    use indexmap::IndexSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vs(s: &str) -> VerbSlot {
        s.parse().unwrap()
    }

    fn strs(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn corpus(text: &str) -> PairCorpus {
        PairCorpus::from_reader(text.as_bytes()).unwrap()
    }

    /// K=1 model over nouns a, b, c.
    fn single_class_lexicon(freqs: &[(&str, f64)]) -> Lexicon {
        let verbs: IndexSet<VerbSlot> = [vs("v.aso:o")].into_iter().collect();
        let nouns: IndexSet<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let m = LcModel::from_parts(
            vec![1.0],
            vec![vec![1.0]],
            vec![vec![0.5], vec![0.3], vec![0.2]],
            verbs,
            nouns,
        )
        .unwrap();
        let sample = NounSample::new(
            vs("v.aso:o"),
            freqs.iter().map(|(n, f)| (n.to_string(), *f)).collect(),
        )
        .unwrap();
        let e = LexiconEntry::new(vs("v.aso:o"), vec![1.0], sample).unwrap();
        Lexicon::new(m, [e]).unwrap()
    }

    #[test]
    fn problex_single_class_arithmetic() {
        let lex = single_class_lexicon(&[("a", 5.0), ("b", 2.0)]);
        let ch = problex_select(
            &lex,
            &vs("v.aso:o"),
            &strs(&["a", "b"]),
            FitConfig::default(),
        )
        .unwrap();
        assert_eq!(ch.noun.as_deref(), Some("a"));
        assert_eq!(ch.class, Some(0));
        assert_eq!(ch.score, 6.0);
        assert!(!ch.tie);
    }

    #[test]
    fn problex_unseen_candidates_and_abstention() {
        let lex = single_class_lexicon(&[("a", 5.0)]);
        // c is unseen with the verb but gets the +1 boost.
        let ch = problex_select(
            &lex,
            &vs("v.aso:o"),
            &strs(&["c", "zzz"]),
            FitConfig::default(),
        )
        .unwrap();
        assert_eq!(ch.noun.as_deref(), Some("c"));
        assert_eq!(ch.score, 1.0);
        let ch = problex_select(
            &lex,
            &vs("v.aso:o"),
            &strs(&["zzz", "yyy"]),
            FitConfig::default(),
        )
        .unwrap();
        assert!(ch.is_abstain());
        let ch = problex_select(
            &lex,
            &vs("w.aso:o"),
            &strs(&["a", "b"]),
            FitConfig::default(),
        )
        .unwrap();
        assert!(ch.is_abstain());
        assert!(matches!(
            problex_select(&lex, &vs("v.aso:o"), &[], FitConfig::default()),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn problex_ties_use_vocab_order() {
        let lex = single_class_lexicon(&[("a", 1.0)]);
        // b and c both unseen: score 1 each, b first in vocab.
        let ch = problex_select(
            &lex,
            &vs("v.aso:o"),
            &strs(&["c", "b"]),
            FitConfig::default(),
        )
        .unwrap();
        assert_eq!(ch.noun.as_deref(), Some("b"));
        assert!(ch.tie);
    }

    #[test]
    fn problex_score_recomputes() {
        // Two classes, nouns split across them.
        let verbs: IndexSet<VerbSlot> = [vs("v.aso:o")].into_iter().collect();
        let nouns: IndexSet<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let m = LcModel::from_parts(
            vec![0.6, 0.4],
            vec![vec![1.0, 1.0]],
            vec![vec![0.7, 0.1], vec![0.2, 0.3], vec![0.1, 0.6]],
            verbs,
            nouns,
        )
        .unwrap();
        let sample = NounSample::new(
            vs("v.aso:o"),
            [("a".to_string(), 4.0), ("c".to_string(), 3.0)]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let e = LexiconEntry::new(vs("v.aso:o"), vec![0.5, 0.5], sample.clone()).unwrap();
        let lex = Lexicon::new(m.clone(), [e]).unwrap();
        let cands = strs(&["b", "c", "a"]);
        let ch = problex_select(&lex, &vs("v.aso:o"), &cands, FitConfig::default()).unwrap();

        // Independent recomputation of the winning score.
        let combined = CombinedSample::new(sample, cands.iter().map(String::as_str));
        let (_, w) = refit(
            &m,
            &combined.to_sample_in(&m).unwrap(),
            FitConfig::default(),
        )
        .unwrap();
        let probe = LexiconEntry::new(vs("v.aso:o"), w, combined.base().clone()).unwrap();
        let n = ch.noun.clone().unwrap();
        let c = ch.class.unwrap();
        let expect = combined.freq(&n) * membership(&probe, &m, &n).unwrap()[c];
        assert!((ch.score - expect).abs() <= 1e-12 * expect);

        let rev = problex_select(
            &lex,
            &vs("v.aso:o"),
            &strs(&["a", "c", "b"]),
            FitConfig::default(),
        )
        .unwrap();
        assert_eq!(rev, ch);
    }

    #[test]
    fn pooled_refit_uses_union_of_candidates() {
        let lex = single_class_lexicon(&[("a", 5.0), ("b", 2.0)]);
        let v = vs("v.aso:o");
        let q1 = strs(&["a", "b"]);
        let q2 = strs(&["b", "c"]);
        let mut sel = ProblexSelector::pooled(
            &lex,
            FitConfig::default(),
            [(&v, q1.as_slice()), (&v, q2.as_slice())],
        )
        .unwrap();
        let ch = sel.select(&v, &q1).unwrap();
        assert_eq!(ch.noun.as_deref(), Some("a"));
        assert_eq!(ch.score, 6.0);
        let ch = sel.select(&v, &q2).unwrap();
        // b seen twice plus one pooled boost.
        assert_eq!(ch.noun.as_deref(), Some("b"));
        assert_eq!(ch.score, 3.0);
    }

    fn two_class_model() -> (LcModel, PairCorpus) {
        let c = corpus("v.aso:o\ta\t3\nv.aso:o\tb\t1\nw.aso:o\tc\t2\n");
        let m = LcModel::from_parts(
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.75, 0.0], vec![0.25, 0.0], vec![0.0, 1.0]],
            c.verbs().clone(),
            c.nouns().clone(),
        )
        .unwrap();
        (m, c)
    }

    #[test]
    fn footnote_scores() {
        let (m, c) = two_class_model();
        let ch = footnote_select(&m, &c, &vs("v.aso:o"), &strs(&["a", "b", "c"])).unwrap();
        assert_eq!(ch.noun.as_deref(), Some("a"));
        assert_eq!(ch.score, 4.0);
        assert_eq!(ch.class, Some(0));
        // (v, c) has zero joint: posterior undefined, scores zero.
        let ch = footnote_select(&m, &c, &vs("v.aso:o"), &strs(&["c", "zzz"])).unwrap();
        assert!(ch.is_abstain());
    }

    #[test]
    fn footnote_single_class_is_add_one_empirical() {
        let lex = single_class_lexicon(&[("a", 1.0)]);
        let c = corpus("v.aso:o\ta\t1\nv.aso:o\tb\t4\nv.aso:o\tc\t2\n");
        let ch = footnote_select(lex.model(), &c, &vs("v.aso:o"), &strs(&["a", "b", "c"])).unwrap();
        assert_eq!(ch.noun.as_deref(), Some("b"));
        assert_eq!(ch.score, 5.0);
    }

    #[test]
    fn clustering_scores() {
        let (m, _) = two_class_model();
        let ch = clustering_select(&m, &vs("v.aso:o"), &strs(&["b"])).unwrap();
        assert_eq!(ch.noun.as_deref(), Some("b"));
        let ch = clustering_select(&m, &vs("v.aso:o"), &strs(&["b", "a", "c"])).unwrap();
        assert_eq!(ch.noun.as_deref(), Some("a"));
        assert_eq!(ch.score, 0.5 * 0.75);
        assert!(clustering_select(&m, &vs("q.aso:o"), &strs(&["a"]))
            .unwrap()
            .is_abstain());
        assert!(clustering_select(&m, &vs("v.aso:o"), &strs(&["c"]))
            .unwrap()
            .is_abstain());
    }

    #[test]
    fn clustering_symmetric_tie() {
        let verbs: IndexSet<VerbSlot> = [vs("v.aso:o")].into_iter().collect();
        let nouns: IndexSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let m = LcModel::from_parts(
            vec![1.0],
            vec![vec![1.0]],
            vec![vec![0.5], vec![0.5]],
            verbs,
            nouns,
        )
        .unwrap();
        let ch = clustering_select(&m, &vs("v.aso:o"), &strs(&["b", "a"])).unwrap();
        assert_eq!(ch.noun.as_deref(), Some("a"));
        assert!(ch.tie);
    }

    #[test]
    fn empirical_rules() {
        let c = corpus("v.aso:o\ta\t3\nv.aso:o\tb\t1\nw.aso:o\tc\t2\nw.aso:o\td\t2\n");
        let ch = empirical_select(&c, &vs("v.aso:o"), &strs(&["a", "b"])).unwrap();
        assert_eq!(ch.noun.as_deref(), Some("a"));
        assert!(empirical_select(&c, &vs("w.aso:o"), &strs(&["c", "d"]))
            .unwrap()
            .is_abstain());
        assert!(empirical_select(&c, &vs("v.aso:o"), &strs(&["c", "d"]))
            .unwrap()
            .is_abstain());
    }

    #[test]
    fn major_sense_rules() {
        let c = corpus("v.aso:o\ta\t6\nw.aso:o\ta\t4\nv.aso:o\tb\t1\n");
        let ch = major_sense_select(&c, &strs(&["b", "a"])).unwrap();
        assert_eq!(ch.noun.as_deref(), Some("a"));
        assert_eq!(ch.score, 10.0);
        assert_eq!(
            major_sense_select(&c, &strs(&["b"]))
                .unwrap()
                .noun
                .as_deref(),
            Some("b")
        );
        assert!(major_sense_select(&c, &strs(&["x", "y"]))
            .unwrap()
            .is_abstain());
        let mut sel = MajorSenseSelector::new(&c);
        assert_eq!(sel.select(&vs("q.aso:o"), &strs(&["b", "a"])).unwrap(), ch);
    }

    #[test]
    fn random_choice() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(
            random_select(&strs(&["x"]), &mut rng)
                .unwrap()
                .noun
                .as_deref(),
            Some("x")
        );
        let cands = strs(&["a", "b", "c", "d"]);
        let trials = 100_000;
        let mut hits: HashMap<String, usize> = HashMap::new();
        for _ in 0..trials {
            *hits
                .entry(random_select(&cands, &mut rng).unwrap().noun.unwrap())
                .or_default() += 1;
        }
        for c in &cands {
            let f = hits[c] as f64 / trials as f64;
            assert!((f - 0.25).abs() < 0.01, "{c}: {f}");
        }
        let run = |seed| {
            let mut sel = RandomSelector {
                rng: ChaCha8Rng::seed_from_u64(seed),
            };
            (0..20)
                .map(|_| sel.select(&vs("v.aso:o"), &cands).unwrap().noun.unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(1), run(1));
    }

    #[test]
    fn choice_lines() {
        let c = Choice::chosen(Method::Problex, "border", Some(19), 18.5, false);
        assert_eq!(c.to_line(), "border\t19\t18.5\tfalse");
        assert_eq!(
            Choice::abstain(Method::Empirical, "tied").to_line(),
            "ABSTAIN\ttied"
        );
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
