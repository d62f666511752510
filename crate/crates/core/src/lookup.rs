//! Human-readable lexicon entry listings and their parser.
//!
//! A listing is a sequence of blocks. Each block starts with a header
//! `<verb.slot>\t<class>\t<prob>` followed by `<noun>\t<f_c>` lines, one per
//! top noun of that class.

use std::fmt::Write as _;

use crate::corpus::VerbSlot;
use crate::error::{Error, Result};
use crate::model::LcModel;
use crate::persist::fmt_f64;
use crate::problex::{top_nouns, LexiconEntry};

#[derive(Clone, Debug, PartialEq)]
pub struct LookupBlock {
    pub verb: VerbSlot,
    pub class: usize,
    pub prob: f64,
    pub nouns: Vec<(String, f64)>,
}

/// Blocks for `class`, or for every class in decreasing weight order.
pub fn lookup_blocks(
    entry: &LexiconEntry,
    model: &LcModel,
    class: Option<usize>,
    k: usize,
) -> Result<Vec<LookupBlock>> {
    let w = entry.class_weights();
    let classes: Vec<usize> = match class {
        Some(c) if c < w.len() => vec![c],
        Some(c) => {
            return Err(Error::Usage(format!(
                "class {c} out of range 0..{}",
                w.len()
            )));
        }
        None => {
            let mut cs: Vec<usize> = (0..w.len()).collect();
            cs.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
            cs
        }
    };
    Ok(classes
        .into_iter()
        .map(|c| LookupBlock {
            verb: entry.verb().clone(),
            class: c,
            prob: w[c],
            nouns: top_nouns(entry, model, c, k),
        })
        .collect())
}

pub fn format_blocks(blocks: &[LookupBlock]) -> String {
    let mut out = String::new();
    for b in blocks {
        let _ = writeln!(out, "{}\t{}\t{}", b.verb, b.class, fmt_f64(b.prob));
        for (n, f) in &b.nouns {
            let _ = writeln!(out, "{n}\t{}", fmt_f64(*f));
        }
    }
    out
}

pub fn parse_blocks(text: &str) -> Result<Vec<LookupBlock>> {
    let mut blocks: Vec<LookupBlock> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x >= 0.0)
                .ok_or_else(|| Error::parse(lineno, format!("bad number {s:?}")))
        };
        match fields.as_slice() {
            [verb, class, prob] => {
                let verb: VerbSlot = verb
                    .parse()
                    .map_err(|_| Error::parse(lineno, "bad verb slot"))?;
                let class = class
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad class {class:?}")))?;
                let prob = num(prob)?;
                if prob > 1.0 {
                    return Err(Error::parse(lineno, "class weight above 1"));
                }
                blocks.push(LookupBlock {
                    verb,
                    class,
                    prob,
                    nouns: Vec::new(),
                });
            }
            [noun, f] => {
                let f = num(f)?;
                let Some(b) = blocks.last_mut() else {
                    return Err(Error::parse(lineno, "noun line before any header"));
                };
                if b.nouns.last().is_some_and(|&(_, prev)| prev < f) {
                    return Err(Error::parse(lineno, "nouns not in decreasing order"));
                }
                b.nouns.push((noun.to_string(), f));
            }
            _ => return Err(Error::parse(lineno, "expected 2 or 3 tab-separated fields")),
        }
    }
    Ok(blocks)
}
