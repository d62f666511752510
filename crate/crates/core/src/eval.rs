//! Evaluation protocols and metrics.
//!
//! Two protocols: pseudo-disambiguation over (v, n, n′) triples, and
//! bilingual target-word selection over dictionary candidate sets. Both
//! report precision P = correct / (correct + incorrect), effectiveness
//! E = correct / items, and their binary-scale standardizations
//! x^(1/log₂ amb).

use std::fmt;
use std::ops::Add;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;

use crate::corpus::{BilingualTestItem, NounDistribution, PairCorpus, VerbSlot};
use crate::disambig::{Choice, Method, Selector};
use crate::error::{Error, Result};
use crate::problex::Lexicon;

/// Redraw budget for a confounder before giving up.
pub const MAX_REDRAWS: usize = 1000;

/// p^(1/log₂ amb): maps a result at ambiguity `amb` onto the binary scale.
pub fn standardize(p: f64, amb: f64) -> Result<f64> {
    if !(amb > 1.0) {
        return Err(Error::Domain(format!("ambiguity must exceed 1, got {amb}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("rate must lie in [0, 1], got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if amb == 2.0 {
        return Ok(p);
    }
    Ok(p.powf(1.0 / amb.log2()))
}

pub fn mean_ambiguity(test: &[BilingualTestItem]) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    test.iter().map(|t| t.candidates.len()).sum::<usize>() as f64 / test.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct PseudoItem {
    pub verb: VerbSlot,
    pub n: String,
    pub n_prime: String,
    /// {n, n′} in vocabulary order.
    pub candidates: [String; 2],
}

/// Which confounders are admissible.
#[derive(Clone, Copy, Debug)]
pub enum Confounder<'a> {
    /// n′ ≠ n only.
    Distinct,
    /// Additionally, (v, n′) must not occur in the given training corpus.
    UnseenIn(&'a PairCorpus),
}

/// Draws `count` triples: (v, n) proportional to test pair counts, n′ from
/// `noun_dist`, redrawn until admissible.
pub fn make_pseudo_items<R: Rng + ?Sized>(
    test_corpus: &PairCorpus,
    noun_dist: &NounDistribution,
    count: usize,
    rng: &mut R,
    confounder: Confounder<'_>,
) -> Result<Vec<PseudoItem>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if test_corpus.is_empty() {
        return Err(Error::Domain("empty test corpus".into()));
    }
    if noun_dist.support_len() < 2 {
        return Err(Error::Domain(
            "confounder distribution needs at least two nouns".into(),
        ));
    }
    let pairs = test_corpus.pairs();
    let pick = WeightedIndex::new(pairs.iter().map(|p| p.count))
        .map_err(|e| Error::Domain(e.to_string()))?;
    let mut items = Vec::with_capacity(count);
    for _ in 0..count {
        let p = pairs[pick.sample(rng)];
        let verb = &test_corpus.verbs()[p.verb];
        let n = &test_corpus.nouns()[p.noun];
        let mut found = None;
        for _ in 0..MAX_REDRAWS {
            let cand = noun_dist.sample(rng);
            let ok = cand != n
                && match confounder {
                    Confounder::Distinct => true,
                    Confounder::UnseenIn(train) => train.count(verb, cand) == 0.0,
                };
            if ok {
                found = Some(cand.to_string());
                break;
            }
        }
        let n_prime = found.ok_or_else(|| {
            Error::Domain(format!(
                "no admissible confounder for ({verb}, {n}) after {MAX_REDRAWS} draws"
            ))
        })?;
        let key = |s: &str| (noun_dist.index_of(s).unwrap_or(usize::MAX), s.to_string());
        let candidates = if key(n) <= key(&n_prime) {
            [n.clone(), n_prime.clone()]
        } else {
            [n_prime.clone(), n.clone()]
        };
        items.push(PseudoItem {
            verb: verb.clone(),
            n: n.clone(),
            n_prime,
            candidates,
        });
    }
    Ok(items)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub items: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub abstain: usize,
    /// Σ |candidates| over items, for mean ambiguity.
    pub candidates: usize,
}

impl Add for EvalCounts {
    type Output = EvalCounts;

    fn add(self, o: EvalCounts) -> EvalCounts {
        EvalCounts {
            items: self.items + o.items,
            correct: self.correct + o.correct,
            incorrect: self.incorrect + o.incorrect,
            abstain: self.abstain + o.abstain,
            candidates: self.candidates + o.candidates,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Correct,
    Incorrect,
    Abstain,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Correct => "correct",
            Outcome::Incorrect => "incorrect",
            Outcome::Abstain => "abstain",
        }
    }
}

/// Per-item record for the optional trace file.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub id: String,
    pub verb: VerbSlot,
    pub choice: Choice,
    pub outcome: Outcome,
}

impl TraceRow {
    pub const HEADER: &'static str = "id\tchosen\tclass\tscore\toutcome";

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.id,
            self.choice.noun.as_deref().unwrap_or("-"),
            self.choice
                .class
                .map_or_else(|| "-".to_string(), |c| c.to_string()),
            self.choice.score,
            self.outcome.as_str()
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub seed: u64,
    pub items: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub abstain: usize,
    pub ambiguity: f64,
    pub precision: f64,
    pub effectiveness: f64,
    pub std_precision: f64,
    pub std_effectiveness: f64,
}

impl EvalReport {
    pub const TSV_HEADER: &'static str =
        "method\titems\tcorrect\tincorrect\tabstain\tambiguity\tP\tE\tstdP\tstdE\tseed";

    pub fn from_counts(method: impl Into<String>, seed: u64, c: EvalCounts) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(c.correct, c.correct + c.incorrect);
        let effectiveness = ratio(c.correct, c.items);
        let ambiguity = ratio(c.candidates, c.items);
        let std = |x: f64| standardize(x, ambiguity).unwrap_or(f64::NAN);
        EvalReport {
            method: method.into(),
            seed,
            items: c.items,
            correct: c.correct,
            incorrect: c.incorrect,
            abstain: c.abstain,
            ambiguity,
            precision,
            effectiveness,
            std_precision: std(precision),
            std_effectiveness: std(effectiveness),
        }
    }

    pub fn to_tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}",
            self.method,
            self.items,
            self.correct,
            self.incorrect,
            self.abstain,
            self.ambiguity,
            self.precision,
            self.effectiveness,
            self.std_precision,
            self.std_effectiveness,
            self.seed
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_tsv_line())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub counts: EvalCounts,
    pub rows: Vec<TraceRow>,
}

fn run<'q>(
    selector: &mut dyn Selector,
    seed: u64,
    queries: impl Iterator<Item = (String, &'q VerbSlot, &'q [String], &'q str)>,
) -> Result<EvalOutcome> {
    let mut decided = Vec::new();
    for (id, verb, candidates, gold) in queries {
        let choice = selector.select(verb, candidates)?;
        let outcome = outcome_of(&choice, gold);
        decided.push((id, verb, candidates.len(), choice, outcome));
    }
    Ok(tally(selector.method(), seed, decided))
}

fn outcome_of(choice: &Choice, gold: &str) -> Outcome {
    match choice.noun.as_deref() {
        None => Outcome::Abstain,
        Some(n) if n == gold => Outcome::Correct,
        Some(_) => Outcome::Incorrect,
    }
}

fn tally(
    method: Method,
    seed: u64,
    decided: Vec<(String, &VerbSlot, usize, Choice, Outcome)>,
) -> EvalOutcome {
    let mut counts = EvalCounts::default();
    let mut rows = Vec::with_capacity(decided.len());
    for (id, verb, candidates, choice, outcome) in decided {
        counts = counts
            + EvalCounts {
                items: 1,
                correct: (outcome == Outcome::Correct) as usize,
                incorrect: (outcome == Outcome::Incorrect) as usize,
                abstain: (outcome == Outcome::Abstain) as usize,
                candidates,
            };
        rows.push(TraceRow {
            id,
            verb: verb.clone(),
            choice,
            outcome,
        });
    }
    EvalOutcome {
        report: EvalReport::from_counts(method.as_str(), seed, counts),
        counts,
        rows,
    }
}

/// Evaluates a stateless decision function over the items in parallel.
/// Rows and counts come out in item order regardless of thread count.
pub fn eval_pseudo_par<F>(
    method: Method,
    select: F,
    items: &[PseudoItem],
    seed: u64,
) -> Result<EvalOutcome>
where
    F: Fn(&VerbSlot, &[String]) -> Result<Choice> + Sync,
{
    let decided = items
        .par_iter()
        .enumerate()
        .map(|(i, it)| {
            let choice = select(&it.verb, &it.candidates)?;
            let outcome = outcome_of(&choice, &it.n);
            Ok((
                i.to_string(),
                &it.verb,
                it.candidates.len(),
                choice,
                outcome,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tally(method, seed, decided))
}

/// Parallel counterpart of [`eval_bilingual`] for stateless decision functions.
pub fn eval_bilingual_par<F>(
    method: Method,
    select: F,
    test: &[BilingualTestItem],
    seed: u64,
) -> Result<EvalOutcome>
where
    F: Fn(&VerbSlot, &[String]) -> Result<Choice> + Sync,
{
    let decided = test
        .par_iter()
        .map(|t| {
            let choice = select(&t.verb, &t.candidates)?;
            let outcome = outcome_of(&choice, &t.gold_target);
            Ok((t.id.clone(), &t.verb, t.candidates.len(), choice, outcome))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tally(method, seed, decided))
}

/// Correct iff the selector picks the observed noun n over n′.
pub fn eval_pseudo(
    selector: &mut dyn Selector,
    items: &[PseudoItem],
    seed: u64,
) -> Result<EvalOutcome> {
    run(
        selector,
        seed,
        items.iter().enumerate().map(|(i, it)| {
            (
                i.to_string(),
                &it.verb,
                it.candidates.as_slice(),
                it.n.as_str(),
            )
        }),
    )
}

/// Correct iff the selector picks the gold translation.
pub fn eval_bilingual(
    selector: &mut dyn Selector,
    test: &[BilingualTestItem],
    seed: u64,
) -> Result<EvalOutcome> {
    run(
        selector,
        seed,
        test.iter().map(|t| {
            (
                t.id.clone(),
                &t.verb,
                t.candidates.as_slice(),
                t.gold_target.as_str(),
            )
        }),
    )
}

/// How often the per-decision class ĉ equals the verb's prior-argmax class.
/// Returns (agreeing, decisions with a class).
pub fn prior_class_agreement(lexicon: &Lexicon, rows: &[TraceRow]) -> (usize, usize) {
    let mut agree = 0;
    let mut total = 0;
    for r in rows {
        let (Some(c), Some(entry)) = (r.choice.class, lexicon.entry(&r.verb)) else {
            continue;
        };
        total += 1;
        if c == entry.top_class() {
            agree += 1;
        }
    }
    (agree, total)
}
