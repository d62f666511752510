//! Verb–noun pair corpora, dictionaries and bilingual test sets.
//!
//! Everything here is keyed by interned vocabularies whose order is the
//! order of first appearance in the source file. Downstream tie-breaking
//! relies on that order, so nothing in this module ever sorts.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use indexmap::{IndexMap, IndexSet};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{Error, Result};

/// Position of the noun in the verb's subcategorization frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameSlot {
    /// Subject of an active intransitive (`as:s`).
    IntransSubject,
    /// Subject of an active transitive (`aso:s`).
    TransSubject,
    /// Object of an active transitive (`aso:o`).
    TransObject,
}

impl FrameSlot {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameSlot::IntransSubject => "as:s",
            FrameSlot::TransSubject => "aso:s",
            FrameSlot::TransObject => "aso:o",
        }
    }

    fn from_suffix(s: &str) -> Option<Self> {
        match s {
            "as:s" => Some(FrameSlot::IntransSubject),
            "aso:s" => Some(FrameSlot::TransSubject),
            "aso:o" => Some(FrameSlot::TransObject),
            _ => None,
        }
    }
}

impl fmt::Display for FrameSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A verb lemma qualified by frame slot, written `lemma.slot`
/// (e.g. `cross.aso:o`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VerbSlot {
    lemma: String,
    slot: FrameSlot,
}

impl VerbSlot {
    pub fn new(lemma: impl Into<String>, slot: FrameSlot) -> Result<Self> {
        let lemma = lemma.into();
        if !valid_token(&lemma) {
            return Err(Error::InvalidVerbSlot(format!("{lemma}.{slot}")));
        }
        Ok(VerbSlot { lemma, slot })
    }

    pub fn lemma(&self) -> &str {
        &self.lemma
    }

    pub fn slot(&self) -> FrameSlot {
        self.slot
    }
}

impl fmt::Display for VerbSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.lemma, self.slot)
    }
}

impl FromStr for VerbSlot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lemma, suffix) = s
            .rsplit_once('.')
            .ok_or_else(|| Error::InvalidVerbSlot(s.to_string()))?;
        let slot =
            FrameSlot::from_suffix(suffix).ok_or_else(|| Error::InvalidVerbSlot(s.to_string()))?;
        if !valid_token(lemma) {
            return Err(Error::InvalidVerbSlot(s.to_string()));
        }
        Ok(VerbSlot {
            lemma: lemma.to_string(),
            slot,
        })
    }
}

pub(crate) fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

/// One stored cell of the sparse count table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairCount {
    pub verb: usize,
    pub noun: usize,
    pub count: f64,
}

/// Sparse table of (verb slot, noun) observation counts.
///
/// Counts are reals so that estimated (fractional) frequencies fit the same
/// shape; zero cells are never stored.
#[derive(Clone, Debug, Default)]
pub struct PairCorpus {
    verbs: IndexSet<VerbSlot>,
    nouns: IndexSet<String>,
    pairs: Vec<PairCount>,
    index: HashMap<(usize, usize), usize>,
    rows: Vec<Vec<usize>>,
    total: f64,
}

impl PairCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `count` observations of `(verb, noun)`, summing with any
    /// existing cell.
    pub fn add(&mut self, verb: VerbSlot, noun: &str, count: f64) -> Result<()> {
        if !(count.is_finite() && count > 0.0) {
            return Err(Error::Domain(format!(
                "count for ({verb}, {noun}) must be positive and finite, got {count}"
            )));
        }
        if !valid_token(noun) {
            return Err(Error::Domain(format!("invalid noun token {noun:?}")));
        }
        let (v, new_verb) = self.verbs.insert_full(verb);
        if new_verb {
            self.rows.push(Vec::new());
        }
        let n = match self.nouns.get_index_of(noun) {
            Some(n) => n,
            None => self.nouns.insert_full(noun.to_string()).0,
        };
        match self.index.get(&(v, n)) {
            Some(&i) => self.pairs[i].count += count,
            None => {
                self.index.insert((v, n), self.pairs.len());
                self.rows[v].push(self.pairs.len());
                self.pairs.push(PairCount {
                    verb: v,
                    noun: n,
                    count,
                });
            }
        }
        self.total += count;
        Ok(())
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut corpus = PairCorpus::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    lineno,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let verb: VerbSlot = fields[0]
                .parse()
                .map_err(|e: Error| Error::parse(lineno, e.to_string()))?;
            let noun = fields[1];
            if !valid_token(noun) {
                return Err(Error::parse(lineno, format!("invalid noun {noun:?}")));
            }
            let count: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad count {:?}", fields[2])))?;
            if !(count.is_finite() && count > 0.0) {
                return Err(Error::parse(
                    lineno,
                    format!("count must be positive, got {count}"),
                ));
            }
            corpus.add(verb, noun, count)?;
        }
        Ok(corpus)
    }

    /// Writes the corpus in pair-file format, cells in first-appearance
    /// order, so that reloading reproduces vocab orders and counts.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for p in &self.pairs {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.verbs[p.verb], self.nouns[p.noun], p.count
            )?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = io::BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn verbs(&self) -> &IndexSet<VerbSlot> {
        &self.verbs
    }

    pub fn nouns(&self) -> &IndexSet<String> {
        &self.nouns
    }

    pub fn pairs(&self) -> &[PairCount] {
        &self.pairs
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn verb_index(&self, verb: &VerbSlot) -> Option<usize> {
        self.verbs.get_index_of(verb)
    }

    pub fn noun_index(&self, noun: &str) -> Option<usize> {
        self.nouns.get_index_of(noun)
    }

    /// Count of `(verb, noun)` by index; zero for absent cells.
    pub fn count_at(&self, verb: usize, noun: usize) -> f64 {
        self.index
            .get(&(verb, noun))
            .map_or(0.0, |&i| self.pairs[i].count)
    }

    /// Count of `(verb, noun)` by token; zero when either is unknown.
    pub fn count(&self, verb: &VerbSlot, noun: &str) -> f64 {
        match (self.verb_index(verb), self.noun_index(noun)) {
            (Some(v), Some(n)) => self.count_at(v, n),
            _ => 0.0,
        }
    }

    /// Stored cells of one verb row, in first-appearance order.
    pub fn row(&self, verb: usize) -> impl Iterator<Item = &PairCount> + '_ {
        self.rows[verb].iter().map(move |&i| &self.pairs[i])
    }

    /// Σ_v f(v, n) for every noun, indexed like `nouns()`.
    pub fn noun_marginals(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nouns.len()];
        for p in &self.pairs {
            m[p.noun] += p.count;
        }
        m
    }
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<PairCorpus> {
    let path = path.as_ref();
    let file = fs::File::open(path)?;
    PairCorpus::from_reader(BufReader::new(file)).map_err(|e| e.at_path(path))
}

/// A discrete distribution over nouns with a precomputed sampler.
#[derive(Clone, Debug)]
pub struct NounDistribution {
    probs: IndexMap<String, f64>,
    sampler: WeightedIndex<f64>,
}

impl NounDistribution {
    pub fn from_weights(weights: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut probs: IndexMap<String, f64> = IndexMap::new();
        for (noun, w) in weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Domain(format!("bad weight {w} for {noun}")));
            }
            *probs.entry(noun).or_insert(0.0) += w;
        }
        probs.retain(|_, w| *w > 0.0);
        let total: f64 = probs.values().sum();
        if probs.is_empty() || total <= 0.0 {
            return Err(Error::Domain("distribution has no mass".into()));
        }
        for p in probs.values_mut() {
            *p /= total;
        }
        let sampler = WeightedIndex::new(probs.values().copied())
            .map_err(|e| Error::Domain(e.to_string()))?;
        Ok(NounDistribution { probs, sampler })
    }

    pub fn prob(&self, noun: &str) -> f64 {
        self.probs.get(noun).copied().unwrap_or(0.0)
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    pub fn index_of(&self, noun: &str) -> Option<usize> {
        self.probs.get_index_of(noun)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.probs.iter().map(|(n, &p)| (n.as_str(), p))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &str {
        let i = self.sampler.sample(rng);
        self.probs.get_index(i).expect("sampler index in range").0
    }
}

/// Marginal noun distribution p(n) = Σ_v f(v,n) / total.
pub fn marginal_noun_dist(corpus: &PairCorpus) -> Result<NounDistribution> {
    if corpus.is_empty() || corpus.total() <= 0.0 {
        return Err(Error::Domain(
            "empty corpus has no marginal distribution".into(),
        ));
    }
    let marg = corpus.noun_marginals();
    NounDistribution::from_weights(corpus.nouns().iter().cloned().zip(marg))
}

pub fn sample_noun<'d, R: Rng + ?Sized>(dist: &'d NounDistribution, rng: &mut R) -> &'d str {
    dist.sample(rng)
}

/// Noun sample n_1 … n_M for one verb slot, kept as a frequency table.
#[derive(Clone, Debug, PartialEq)]
pub struct NounSample {
    verb: VerbSlot,
    freqs: IndexMap<String, f64>,
    size: f64,
}

impl NounSample {
    pub fn new(verb: VerbSlot, freqs: IndexMap<String, f64>) -> Result<Self> {
        if let Some((n, f)) = freqs.iter().find(|(_, f)| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::Domain(format!(
                "sample frequency for {n} must be positive, got {f}"
            )));
        }
        let size: f64 = freqs.values().sum();
        if freqs.is_empty() {
            return Err(Error::EmptySample(verb.to_string()));
        }
        Ok(NounSample { verb, freqs, size })
    }

    pub fn verb(&self) -> &VerbSlot {
        &self.verb
    }

    pub fn freqs(&self) -> &IndexMap<String, f64> {
        &self.freqs
    }

    /// f(n); zero for nouns outside the sample.
    pub fn freq(&self, noun: &str) -> f64 {
        self.freqs.get(noun).copied().unwrap_or(0.0)
    }

    /// M = Σ f(n).
    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

pub fn object_sample(corpus: &PairCorpus, verb: &VerbSlot) -> Result<NounSample> {
    let v = corpus
        .verb_index(verb)
        .ok_or_else(|| Error::NotFound(format!("verb {verb} not in corpus")))?;
    let freqs = corpus
        .row(v)
        .map(|p| (corpus.nouns()[p.noun].clone(), p.count))
        .collect();
    NounSample::new(verb.clone(), freqs)
}

/// Word-to-word dictionary: source word → ordered target nouns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dictionary {
    entries: IndexMap<String, Vec<String>>,
}

impl Dictionary {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = IndexMap::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (source, targets) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(lineno, "expected source<TAB>targets"))?;
            if !valid_token(source) {
                return Err(Error::parse(
                    lineno,
                    format!("invalid source word {source:?}"),
                ));
            }
            let targets = parse_token_list(targets).map_err(|m| Error::parse(lineno, m))?;
            if entries.insert(source.to_string(), targets).is_some() {
                return Err(Error::parse(lineno, format!("duplicate entry {source}")));
            }
        }
        Ok(Dictionary { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_reader(BufReader::new(fs::File::open(path)?)).map_err(|e| e.at_path(path))
    }

    pub fn targets(&self, source: &str) -> Option<&[String]> {
        self.entries.get(source).map(Vec::as_slice)
    }

    pub fn entries(&self) -> &IndexMap<String, Vec<String>> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Comma-separated, duplicate-free list of at least two tokens.
pub fn parse_token_list(s: &str) -> std::result::Result<Vec<String>, String> {
    let mut seen = IndexSet::new();
    for t in s.split(',').map(str::trim) {
        if !valid_token(t) {
            return Err(format!("invalid token {t:?} in list"));
        }
        if !seen.insert(t.to_string()) {
            return Err(format!("duplicate token {t} in list"));
        }
    }
    if seen.len() < 2 {
        return Err("a candidate list needs at least two entries".into());
    }
    Ok(seen.into_iter().collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BilingualTestItem {
    pub id: String,
    pub verb: VerbSlot,
    pub source_noun: String,
    pub gold_target: String,
    pub candidates: Vec<String>,
}

impl BilingualTestItem {
    pub fn new(
        id: impl Into<String>,
        verb: VerbSlot,
        source_noun: impl Into<String>,
        gold_target: impl Into<String>,
        candidates: Vec<String>,
    ) -> Result<Self> {
        let item = BilingualTestItem {
            id: id.into(),
            verb,
            source_noun: source_noun.into(),
            gold_target: gold_target.into(),
            candidates,
        };
        if item.candidates.len() < 2 {
            return Err(Error::Domain(format!(
                "item {}: fewer than two candidates",
                item.id
            )));
        }
        if !item.candidates.contains(&item.gold_target) {
            return Err(Error::Domain(format!(
                "item {}: gold target {} not among candidates",
                item.id, item.gold_target
            )));
        }
        Ok(item)
    }
}

pub fn bilingual_from_reader<R: BufRead>(reader: R) -> Result<Vec<BilingualTestItem>> {
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::parse(
                lineno,
                format!("expected 5 tab-separated fields, found {}", f.len()),
            ));
        }
        let verb: VerbSlot = f[1]
            .parse()
            .map_err(|e: Error| Error::parse(lineno, e.to_string()))?;
        let cands = parse_token_list(f[4]).map_err(|m| Error::parse(lineno, m))?;
        let item = BilingualTestItem::new(f[0], verb, f[2], f[3], cands)
            .map_err(|e| Error::parse(lineno, e.to_string()))?;
        items.push(item);
    }
    Ok(items)
}

pub fn load_bilingual(path: impl AsRef<Path>) -> Result<Vec<BilingualTestItem>> {
    let path = path.as_ref();
    bilingual_from_reader(BufReader::new(fs::File::open(path)?)).map_err(|e| e.at_path(path))
}
