//! Text persistence for models and lexica.
//!
//! Model file:
//!
//! ```text
//! PLEX-MODEL 1
//! # <key> <value>        (metadata, any number)
//! K <classes>
//! PRIORS
//! <class> <p(c)>         (K lines)
//! VERBS
//! <verb.slot> <p(v|c0)> … <p(v|cK-1)>
//! NOUNS
//! <noun> <p(n|c0)> … <p(n|cK-1)>
//! ```
//!
//! Lexicon file:
//!
//! ```text
//! PLEX-LEX 1
//! # <key> <value>
//! model <path> <sha256>
//! K <classes>
//! entry <verb.slot> <M>
//! w <class> <p(c)>       (K lines)
//! n <noun> <f(n)>        (one per sample noun)
//! ```
//!
//! Probabilities and frequencies are written with 17 significant digits,
//! which round-trips every f64 exactly.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use indexmap::{IndexMap, IndexSet};
use sha2::{Digest, Sha256};

use crate::corpus::{NounSample, VerbSlot};
use crate::error::{Error, Result};
use crate::model::LcModel;
use crate::problex::{Lexicon, LexiconEntry};

pub const MODEL_MAGIC: &str = "PLEX-MODEL 1";
pub const LEXICON_MAGIC: &str = "PLEX-LEX 1";

/// `key value` header lines written after the magic line.
pub type Meta = Vec<(String, String)>;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Exact-round-trip float text.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_meta<W: Write>(w: &mut W, meta: &[(String, String)]) -> io::Result<()> {
    for (k, v) in meta {
        debug_assert!(!k.contains(char::is_whitespace));
        writeln!(w, "# {k} {}", v.replace('\n', " "))?;
    }
    Ok(())
}

pub fn write_model<W: Write>(
    model: &LcModel,
    meta: &[(String, String)],
    mut w: W,
) -> io::Result<()> {
    let k = model.classes();
    writeln!(w, "{MODEL_MAGIC}")?;
    write_meta(&mut w, meta)?;
    writeln!(w, "K {k}")?;
    writeln!(w, "PRIORS")?;
    for (c, p) in model.priors().iter().enumerate() {
        writeln!(w, "{c} {}", fmt_f64(*p))?;
    }
    writeln!(w, "VERBS")?;
    for (v, verb) in model.verbs().iter().enumerate() {
        write!(w, "{verb}")?;
        for p in model.verb_column(v) {
            write!(w, " {}", fmt_f64(*p))?;
        }
        writeln!(w)?;
    }
    writeln!(w, "NOUNS")?;
    for (n, noun) in model.nouns().iter().enumerate() {
        write!(w, "{noun}")?;
        for p in model.noun_column(n) {
            write!(w, " {}", fmt_f64(*p))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_model(
    model: &LcModel,
    meta: &[(String, String)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut buf = Vec::new();
    write_model(model, meta, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Line cursor that skips blank lines and tracks line numbers.
struct Lines<R> {
    inner: io::Lines<R>,
    lineno: usize,
    peeked: Option<String>,
}

impl<R: BufRead> Lines<R> {
    fn new(r: R) -> Self {
        Lines {
            inner: r.lines(),
            lineno: 0,
            peeked: None,
        }
    }

    fn peek(&mut self) -> Result<Option<&str>> {
        if self.peeked.is_none() {
            loop {
                match self.inner.next() {
                    None => break,
                    Some(line) => {
                        self.lineno += 1;
                        let line = line?;
                        let line = line.trim_end_matches('\r');
                        if !line.trim().is_empty() {
                            self.peeked = Some(line.to_string());
                            break;
                        }
                    }
                }
            }
        }
        Ok(self.peeked.as_deref())
    }

    fn next_line(&mut self) -> Result<Option<String>> {
        self.peek()?;
        Ok(self.peeked.take())
    }

    fn expect_line(&mut self, what: &str) -> Result<String> {
        self.next_line()?
            .ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.lineno, msg)
    }

    fn meta(&mut self) -> Result<Meta> {
        let mut meta = Vec::new();
        while let Some(line) = self.peek()? {
            let Some(rest) = line.strip_prefix('#') else {
                break;
            };
            let rest = rest.trim_start();
            let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
            meta.push((k.to_string(), v.to_string()));
            self.peeked = None;
        }
        Ok(meta)
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let line = self.expect_line(kw)?;
        if line.trim() != kw {
            return Err(self.err(format!("expected {kw}, found {line:?}")));
        }
        Ok(())
    }

    fn keyed_value<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.expect_line(key)?;
        let mut it = line.split(' ');
        if it.next() != Some(key) {
            return Err(self.err(format!("expected `{key} <value>`, found {line:?}")));
        }
        let v = it.next().unwrap_or("");
        v.parse()
            .map_err(|_| self.err(format!("bad value {v:?} for {key}")))
    }
}

fn parse_f64(lines: &Lines<impl BufRead>, s: &str) -> Result<f64> {
    let x: f64 = s
        .parse()
        .map_err(|_| lines.err(format!("bad number {s:?}")))?;
    if !x.is_finite() {
        return Err(lines.err(format!("non-finite number {s:?}")));
    }
    Ok(x)
}

fn parse_row(lines: &Lines<impl BufRead>, line: &str, k: usize) -> Result<(String, Vec<f64>)> {
    let mut it = line.split(' ');
    let token = it.next().unwrap_or("").to_string();
    let vals = it
        .map(|s| parse_f64(lines, s))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != k {
        return Err(lines.err(format!(
            "expected {k} values for {token}, found {}",
            vals.len()
        )));
    }
    Ok((token, vals))
}

pub fn read_model<R: BufRead>(reader: R) -> Result<(LcModel, Meta)> {
    let mut lines = Lines::new(reader);
    let magic = lines.expect_line("header")?;
    if magic.trim() != MODEL_MAGIC {
        return Err(lines.err(format!("not a model file (header {magic:?})")));
    }
    let meta = lines.meta()?;
    let k: usize = lines.keyed_value("K")?;
    if k == 0 {
        return Err(lines.err("K must be positive"));
    }
    lines.keyword("PRIORS")?;
    let mut priors = Vec::with_capacity(k);
    for c in 0..k {
        let line = lines.expect_line("prior")?;
        let (idx, p) = line
            .split_once(' ')
            .ok_or_else(|| lines.err("expected `<class> <prob>`"))?;
        if idx.parse::<usize>().ok() != Some(c) {
            return Err(lines.err(format!("expected prior for class {c}, found {idx:?}")));
        }
        priors.push(parse_f64(&lines, p)?);
    }
    lines.keyword("VERBS")?;
    let mut verbs = IndexSet::new();
    let mut verb_emis = Vec::new();
    loop {
        let line = lines.expect_line("NOUNS")?;
        if line.trim() == "NOUNS" {
            break;
        }
        let (tok, vals) = parse_row(&lines, &line, k)?;
        let verb: VerbSlot = tok.parse().map_err(|e: Error| lines.err(e.to_string()))?;
        if !verbs.insert(verb) {
            return Err(lines.err(format!("duplicate verb {tok}")));
        }
        verb_emis.push(vals);
    }
    let mut nouns = IndexSet::new();
    let mut noun_emis = Vec::new();
    while let Some(line) = lines.next_line()? {
        let (tok, vals) = parse_row(&lines, &line, k)?;
        if !nouns.insert(tok.clone()) {
            return Err(lines.err(format!("duplicate noun {tok}")));
        }
        noun_emis.push(vals);
    }
    let model = LcModel::from_parts(priors, verb_emis, noun_emis, verbs, nouns)?;
    Ok((model, meta))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(LcModel, Meta)> {
    let path = path.as_ref();
    read_model(BufReader::new(fs::File::open(path)?)).map_err(|e| e.at_path(path))
}

/// Where a lexicon file says its model lives.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelRef {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn write_lexicon<W: Write>(
    lexicon: &Lexicon,
    model_ref: &ModelRef,
    meta: &[(String, String)],
    mut w: W,
) -> io::Result<()> {
    writeln!(w, "{LEXICON_MAGIC}")?;
    write_meta(&mut w, meta)?;
    writeln!(w, "model {} {}", model_ref.path.display(), model_ref.sha256)?;
    writeln!(w, "K {}", lexicon.model().classes())?;
    for e in lexicon.entries() {
        writeln!(w, "entry {} {}", e.verb(), fmt_f64(e.sample().size()))?;
        for (c, p) in e.class_weights().iter().enumerate() {
            writeln!(w, "w {c} {}", fmt_f64(*p))?;
        }
        for (noun, f) in e.sample().freqs() {
            writeln!(w, "n {noun} {}", fmt_f64(*f))?;
        }
    }
    Ok(())
}

pub fn save_lexicon(
    lexicon: &Lexicon,
    model_ref: &ModelRef,
    meta: &[(String, String)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut buf = Vec::new();
    write_lexicon(lexicon, model_ref, meta, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Lexicon file contents before the model is attached.
#[derive(Clone, Debug, PartialEq)]
pub struct LexiconFile {
    pub model_ref: ModelRef,
    pub classes: usize,
    pub meta: Meta,
    /// (verb, stored M, class weights, sample)
    pub entries: Vec<(VerbSlot, f64, Vec<f64>, IndexMap<String, f64>)>,
}

pub fn read_lexicon_file<R: BufRead>(reader: R) -> Result<LexiconFile> {
    let mut lines = Lines::new(reader);
    let magic = lines.expect_line("header")?;
    if magic.trim() != LEXICON_MAGIC {
        return Err(lines.err(format!("not a lexicon file (header {magic:?})")));
    }
    let meta = lines.meta()?;
    let line = lines.expect_line("model reference")?;
    let parts: Vec<&str> = line.splitn(2, ' ').collect();
    let (path, sha) = match parts.as_slice() {
        ["model", rest] => rest
            .rsplit_once(' ')
            .ok_or_else(|| lines.err("expected `model <path> <sha256>`"))?,
        _ => return Err(lines.err("expected `model <path> <sha256>`")),
    };
    let model_ref = ModelRef {
        path: PathBuf::from(path),
        sha256: sha.to_string(),
    };
    let classes: usize = lines.keyed_value("K")?;
    let mut entries: Vec<(VerbSlot, f64, Vec<f64>, IndexMap<String, f64>)> = Vec::new();
    while let Some(line) = lines.next_line()? {
        let f: Vec<&str> = line.split(' ').collect();
        match f.as_slice() {
            ["entry", verb, m] => {
                let verb: VerbSlot = verb.parse().map_err(|e: Error| lines.err(e.to_string()))?;
                let m = parse_f64(&lines, m)?;
                entries.push((verb, m, Vec::with_capacity(classes), IndexMap::new()));
            }
            ["w", c, p] => {
                let e = entries
                    .last_mut()
                    .ok_or_else(|| lines.err("weight before entry"))?;
                if c.parse::<usize>().ok() != Some(e.2.len()) {
                    return Err(lines.err(format!("unexpected class index {c}")));
                }
                e.2.push(parse_f64(&lines, p)?);
            }
            ["n", noun, freq] => {
                let freq = parse_f64(&lines, freq)?;
                let e = entries
                    .last_mut()
                    .ok_or_else(|| lines.err("noun before entry"))?;
                if e.3.insert(noun.to_string(), freq).is_some() {
                    return Err(lines.err(format!("duplicate noun {noun}")));
                }
            }
            _ => return Err(lines.err(format!("unrecognized line {line:?}"))),
        }
    }
    for (verb, m, w, freqs) in &entries {
        if w.len() != classes {
            return Err(Error::parse(
                0,
                format!("entry {verb}: {} weights, expected {classes}", w.len()),
            ));
        }
        let sum: f64 = freqs.values().sum();
        if (sum - m).abs() > 1e-9 * m.abs().max(1.0) {
            return Err(Error::parse(
                0,
                format!("entry {verb}: sample size {m} does not match Σ f(n) = {sum}"),
            ));
        }
    }
    Ok(LexiconFile {
        model_ref,
        classes,
        meta,
        entries,
    })
}

impl LexiconFile {
    /// Attaches a model and validates the entries against it.
    pub fn into_lexicon(self, model: LcModel) -> Result<Lexicon> {
        if model.classes() != self.classes {
            return Err(Error::Domain(format!(
                "lexicon has K={} but model has K={}",
                self.classes,
                model.classes()
            )));
        }
        let mut entries = Vec::with_capacity(self.entries.len());
        for (verb, _, weights, freqs) in self.entries {
            if let Some(n) = freqs.keys().find(|n| model.noun_index(n).is_none()) {
                return Err(Error::Domain(format!(
                    "entry {verb}: noun {n} not in model"
                )));
            }
            let sample = NounSample::new(verb.clone(), freqs)?;
            entries.push(LexiconEntry::new(verb, weights, sample)?);
        }
        Lexicon::new(model, entries)
    }
}

/// Loads a lexicon and its model. The stored model path is tried as given,
/// then relative to the lexicon's directory; the content hash must match.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon> {
    let path = path.as_ref();
    let file =
        read_lexicon_file(BufReader::new(fs::File::open(path)?)).map_err(|e| e.at_path(path))?;
    let stored = &file.model_ref.path;
    let candidates = [
        stored.clone(),
        path.parent().unwrap_or(Path::new(".")).join(stored),
        path.parent()
            .unwrap_or(Path::new("."))
            .join(stored.file_name().unwrap_or_default()),
    ];
    let model_path = candidates
        .iter()
        .find(|p| p.is_file())
        .ok_or_else(|| {
            Error::NotFound(format!(
                "model file {} referenced by {}",
                stored.display(),
                path.display()
            ))
        })?
        .clone();
    load_lexicon_with_model(path, model_path)
}

/// Loads a lexicon against an explicitly named model file.
pub fn load_lexicon_with_model(
    path: impl AsRef<Path>,
    model_path: impl AsRef<Path>,
) -> Result<Lexicon> {
    let path = path.as_ref();
    let model_path = model_path.as_ref();
    let file =
        read_lexicon_file(BufReader::new(fs::File::open(path)?)).map_err(|e| e.at_path(path))?;
    let found = file_sha256(model_path)?;
    if found != file.model_ref.sha256 {
        return Err(Error::HashMismatch {
            path: model_path.to_path_buf(),
            expected: file.model_ref.sha256.clone(),
            found,
        });
    }
    let (model, _) = load_model(model_path)?;
    file.into_lexicon(model)
}
