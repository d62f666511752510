use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use plex::corpus::{load_bilingual, parse_token_list};
use plex::disambig::{
    footnote_select, Choice, MajorSenseSelector, Method, OracleSelector, ProblexSelector,
    RandomSelector, Selector,
};
use plex::eval::{
    eval_bilingual, eval_bilingual_par, eval_pseudo, eval_pseudo_par, make_pseudo_items,
    prior_class_agreement, Confounder, EvalOutcome, EvalReport, PseudoItem, TraceRow,
};
use plex::lookup::{format_blocks, lookup_blocks};
use plex::persist::{
    file_sha256, fmt_f64, load_lexicon, load_lexicon_with_model, load_model, save_lexicon,
    save_model, ModelRef,
};
use plex::problex::LabelConfig;
use plex::rng::{substream, Stream};
use plex::selfcheck;
use plex::{
    clustering_select, empirical_select, load_pairs, marginal_noun_dist, problex_select, train,
    BilingualTestItem, Error, FitConfig, LcModel, Lexicon, PairCorpus, Result, TrainConfig,
    VerbSlot,
};

use crate::{
    Command, DisambiguateArgs, EvalBilingualArgs, EvalCommon, EvalPseudoArgs, FitArgs, LabelArgs,
    LookupArgs, SelfcheckArgs, Sources, TrainArgs,
};

type Meta = Vec<(String, String)>;

pub fn run(command: Command) -> Result<u8> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::Label(a) => cmd_label(a),
        Command::Lookup(a) => cmd_lookup(a),
        Command::Disambiguate(a) => cmd_disambiguate(a),
        Command::EvalPseudo(a) => cmd_eval_pseudo(a),
        Command::EvalBilingual(a) => cmd_eval_bilingual(a),
        Command::Selfcheck(a) => cmd_selfcheck(a),
    }
}

fn existing(path: &Path) -> Result<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::NotFound(format!("input file {}", path.display())))
    }
}

fn header(command: &str) -> Meta {
    vec![
        (
            "format".into(),
            concat!("plex ", env!("CARGO_PKG_VERSION")).into(),
        ),
        ("command".into(), command.into()),
    ]
}

fn push(meta: &mut Meta, key: &str, value: impl ToString) {
    meta.push((key.into(), value.to_string()));
}

fn push_input(meta: &mut Meta, key: &str, path: &Path) -> Result<()> {
    push(
        meta,
        key,
        format!("{} sha256:{}", path.display(), file_sha256(path)?),
    );
    Ok(())
}

fn fit_config(a: &FitArgs) -> Result<FitConfig> {
    if !(a.fit_tol >= 0.0) {
        return Err(Error::Usage("--fit-tol must be non-negative".into()));
    }
    Ok(FitConfig {
        rel_tol: a.fit_tol,
        max_iters: a.fit_max_iters,
    })
}

fn parse_verb(s: &str) -> Result<VerbSlot> {
    s.parse()
}

fn cmd_train(a: TrainArgs) -> Result<u8> {
    let corpus = load_pairs(existing(&a.pairs)?)?;
    let config = TrainConfig {
        classes: a.classes,
        seed: a.seed,
        max_iters: a.max_iters,
        rel_tol: a.tol,
        floor: a.floor,
    };
    config.validate()?;
    let (model, trace) = train(&corpus, &config)?;
    let mut meta = header("train");
    push(&mut meta, "classes", a.classes);
    push(&mut meta, "seed", a.seed);
    push(&mut meta, "tol", a.tol);
    push(&mut meta, "max_iters", a.max_iters);
    push(&mut meta, "floor", a.floor);
    push_input(&mut meta, "pairs", &a.pairs)?;
    push(&mut meta, "iterations", trace.iterations);
    push(&mut meta, "converged", trace.converged);
    let final_ll = trace.log_likelihoods.last().copied().unwrap_or(f64::NAN);
    push(&mut meta, "loglik", fmt_f64(final_ll));
    save_model(&model, &meta, &a.out)?;

    let mut text = String::new();
    for (k, v) in &meta {
        text.push_str(&format!("# {k} {v}\n"));
    }
    text.push_str("iter\tloglik\n");
    for (i, ll) in trace.log_likelihoods.iter().enumerate() {
        text.push_str(&format!("{i}\t{}\n", fmt_f64(*ll)));
    }
    fs::write(trace_path(&a.out), text)?;
    if !trace.converged {
        warn!(
            "stopped at the iteration cap ({}) before convergence",
            a.max_iters
        );
    }
    info!(
        "trained K={} on {} pairs: {} iterations, log-likelihood {final_ll}",
        a.classes,
        corpus.pairs().len(),
        trace.iterations
    );
    Ok(0)
}

fn trace_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".trace");
    PathBuf::from(s)
}

fn cmd_label(a: LabelArgs) -> Result<u8> {
    let (model, _) = load_model(existing(&a.model)?)?;
    let corpus = load_pairs(existing(&a.pairs)?)?;
    let config = LabelConfig {
        min_sample_size: a.min_count,
        fit: fit_config(&a.fit)?,
    };
    let lexicon = Lexicon::build(model, &corpus, config)?;
    let mut meta = header("label");
    push(&mut meta, "min_count", a.min_count);
    push(&mut meta, "fit_tol", a.fit.fit_tol);
    push(&mut meta, "fit_max_iters", a.fit.fit_max_iters);
    push_input(&mut meta, "pairs", &a.pairs)?;
    push(&mut meta, "entries", lexicon.len());
    let model_ref = ModelRef {
        path: a.model.clone(),
        sha256: file_sha256(&a.model)?,
    };
    save_lexicon(&lexicon, &model_ref, &meta, &a.out)?;
    info!("labelled {} verb slots", lexicon.len());
    Ok(0)
}

fn open_lexicon(path: &Path, model: Option<&Path>) -> Result<Lexicon> {
    match model {
        Some(m) => load_lexicon_with_model(existing(path)?, existing(m)?),
        None => load_lexicon(existing(path)?),
    }
}

fn cmd_lookup(a: LookupArgs) -> Result<u8> {
    let lexicon = open_lexicon(&a.lexicon, a.model.as_deref())?;
    let verb = parse_verb(&a.verb)?;
    let entry = lexicon
        .entry(&verb)
        .ok_or_else(|| Error::NotFound(format!("no lexicon entry for {verb}")))?;
    let blocks = lookup_blocks(entry, lexicon.model(), a.class, a.top)?;
    print!("{}", format_blocks(&blocks));
    Ok(0)
}

/// Inputs loaded for one method, plus their hashes for output headers.
struct Loaded {
    lexicon: Option<Lexicon>,
    model: Option<LcModel>,
    pairs: Option<PairCorpus>,
    inputs: Meta,
}

impl Loaded {
    fn model(&self) -> Option<&LcModel> {
        self.model
            .as_ref()
            .or(self.lexicon.as_ref().map(Lexicon::model))
    }
}

fn load_sources(method: Method, s: &Sources) -> Result<Loaded> {
    let mut inputs = Meta::new();
    let need_lexicon = method == Method::Problex;
    let need_model = matches!(method, Method::Clustering | Method::ProblexFootnote);
    let need_pairs = matches!(
        method,
        Method::Empirical | Method::MajorSense | Method::ProblexFootnote
    );
    let missing = |flag: &str| Error::Usage(format!("method {method} needs {flag}"));

    let lexicon = match (
        &s.lexicon,
        need_lexicon || (need_model && s.model.is_none()),
    ) {
        (Some(p), true) => {
            push_input(&mut inputs, "lexicon", existing(p)?)?;
            if let Some(m) = &s.model {
                push_input(&mut inputs, "model", existing(m)?)?;
            }
            Some(open_lexicon(p, s.model.as_deref())?)
        }
        (None, true) if need_lexicon => return Err(missing("--lexicon")),
        _ => None,
    };
    let model = match (&s.model, need_model && lexicon.is_none()) {
        (Some(p), true) => {
            push_input(&mut inputs, "model", existing(p)?)?;
            Some(load_model(p)?.0)
        }
        (None, true) => return Err(missing("--model or --lexicon")),
        _ => None,
    };
    let pairs = match (&s.pairs, need_pairs) {
        (Some(p), true) => {
            push_input(&mut inputs, "pairs", existing(p)?)?;
            Some(load_pairs(p)?)
        }
        (None, true) => return Err(missing("--pairs")),
        _ => None,
    };
    Ok(Loaded {
        lexicon,
        model,
        pairs,
        inputs,
    })
}

/// A decision function with no per-call state, for methods that have one.
fn pure_select<'a>(
    method: Method,
    loaded: &'a Loaded,
    fit: FitConfig,
) -> Option<Box<dyn Fn(&VerbSlot, &[String]) -> Result<Choice> + Sync + 'a>> {
    match method {
        Method::Problex => {
            let lexicon = loaded.lexicon.as_ref()?;
            Some(Box::new(move |v, c| problex_select(lexicon, v, c, fit)))
        }
        Method::ProblexFootnote => {
            let (model, pairs) = (loaded.model()?, loaded.pairs.as_ref()?);
            Some(Box::new(move |v, c| footnote_select(model, pairs, v, c)))
        }
        Method::Clustering => {
            let model = loaded.model()?;
            Some(Box::new(move |v, c| clustering_select(model, v, c)))
        }
        Method::Empirical => {
            let pairs = loaded.pairs.as_ref()?;
            Some(Box::new(move |v, c| empirical_select(pairs, v, c)))
        }
        Method::MajorSense | Method::Random | Method::Oracle => None,
    }
}

fn cmd_disambiguate(a: DisambiguateArgs) -> Result<u8> {
    let verb = parse_verb(&a.verb)?;
    let cands = parse_token_list(&a.cands).map_err(Error::Usage)?;
    let fit = fit_config(&a.fit)?;
    let loaded = load_sources(a.method, &a.sources)?;
    let choice = match a.method {
        Method::Oracle => {
            return Err(Error::Usage(
                "the oracle method needs gold answers; use an eval command".into(),
            ))
        }
        Method::Random => RandomSelector {
            rng: substream(a.seed, Stream::RandomBaseline),
        }
        .select(&verb, &cands)?,
        Method::MajorSense => {
            MajorSenseSelector::new(loaded.pairs.as_ref().expect("loaded")).select(&verb, &cands)?
        }
        m => pure_select(m, &loaded, fit).expect("inputs loaded")(&verb, &cands)?,
    };
    println!("{}", choice.to_line());
    Ok(0)
}

fn common_meta(command: &str, c: &EvalCommon, loaded: &Loaded) -> Meta {
    let mut meta = header(command);
    push(&mut meta, "method", c.method);
    push(&mut meta, "seed", c.seed);
    push(
        &mut meta,
        "refit",
        if c.pooled_refit {
            "pooled"
        } else {
            "per-decision"
        },
    );
    push(&mut meta, "fit_tol", c.fit.fit_tol);
    push(&mut meta, "fit_max_iters", c.fit.fit_max_iters);
    meta.extend(loaded.inputs.iter().cloned());
    meta
}

fn emit(meta: &Meta, outcome: &EvalOutcome, loaded: &Loaded, trace: Option<&Path>) -> Result<()> {
    let mut meta = meta.clone();
    if let (Some(lexicon), Some(Method::Problex)) = (
        &loaded.lexicon,
        outcome.rows.first().map(|r| r.choice.method),
    ) {
        let (agree, total) = prior_class_agreement(lexicon, &outcome.rows);
        push(
            &mut meta,
            "prior_class_agreement",
            format!("{agree}/{total}"),
        );
    }
    let mut text = String::new();
    for (k, v) in &meta {
        text.push_str(&format!("# {k} {v}\n"));
    }
    text.push_str(EvalReport::TSV_HEADER);
    text.push('\n');
    text.push_str(&outcome.report.to_tsv_line());
    text.push('\n');
    io::stdout().write_all(text.as_bytes())?;
    if let Some(path) = trace {
        let mut t = String::new();
        for (k, v) in &meta {
            t.push_str(&format!("# {k} {v}\n"));
        }
        t.push_str(TraceRow::HEADER);
        t.push('\n');
        for r in &outcome.rows {
            t.push_str(&r.to_line());
            t.push('\n');
        }
        fs::write(path, t)?;
    }
    Ok(())
}

fn cmd_eval_pseudo(a: EvalPseudoArgs) -> Result<u8> {
    let c = &a.common;
    let fit = fit_config(&c.fit)?;
    let loaded = load_sources(c.method, &c.sources)?;
    let test = load_pairs(existing(&a.test)?)?;
    let train_pairs = match (&c.sources.pairs, &loaded.pairs) {
        (_, Some(p)) => Some(p.clone()),
        (Some(p), None) => Some(load_pairs(existing(p)?)?),
        (None, None) => None,
    };
    let dist_corpus = match &a.noun_dist {
        Some(p) => load_pairs(existing(p)?)?,
        None => train_pairs.clone().unwrap_or_else(|| test.clone()),
    };
    let dist = marginal_noun_dist(&dist_corpus)?;
    let confounder = match (a.strict_pseudo, &train_pairs) {
        (false, _) => Confounder::Distinct,
        (true, Some(t)) => Confounder::UnseenIn(t),
        (true, None) => {
            return Err(Error::Usage(
                "--strict-pseudo needs the training --pairs".into(),
            ))
        }
    };
    let items = make_pseudo_items(
        &test,
        &dist,
        a.count,
        &mut substream(c.seed, Stream::PseudoGen),
        confounder,
    )?;

    let mut meta = common_meta("eval-pseudo", c, &loaded);
    if let (Some(p), None) = (&c.sources.pairs, &loaded.pairs) {
        push_input(&mut meta, "pairs", p)?;
    }
    push_input(&mut meta, "test", &a.test)?;
    if let Some(p) = &a.noun_dist {
        push_input(&mut meta, "noun_dist", p)?;
    }
    push(&mut meta, "count", a.count);
    push(&mut meta, "strict_pseudo", a.strict_pseudo);

    let outcome = match (c.method, c.pooled_refit) {
        (Method::Problex, true) => {
            let lexicon = loaded.lexicon.as_ref().expect("loaded");
            let queries = items.iter().map(|i| (&i.verb, i.candidates.as_slice()));
            eval_pseudo(
                &mut ProblexSelector::pooled(lexicon, fit, queries)?,
                &items,
                c.seed,
            )?
        }
        (Method::Random, _) => eval_pseudo(
            &mut RandomSelector {
                rng: substream(c.seed, Stream::RandomBaseline),
            },
            &items,
            c.seed,
        )?,
        (Method::Oracle, _) => eval_pseudo(
            &mut OracleSelector::new(items.iter().map(|i: &PseudoItem| i.n.clone())),
            &items,
            c.seed,
        )?,
        (Method::MajorSense, _) => eval_pseudo(
            &mut MajorSenseSelector::new(loaded.pairs.as_ref().expect("loaded")),
            &items,
            c.seed,
        )?,
        (m, _) => eval_pseudo_par(
            m,
            pure_select(m, &loaded, fit).expect("inputs loaded"),
            &items,
            c.seed,
        )?,
    };
    emit(&meta, &outcome, &loaded, c.trace.as_deref())?;
    Ok(0)
}

fn cmd_eval_bilingual(a: EvalBilingualArgs) -> Result<u8> {
    let c = &a.common;
    let fit = fit_config(&c.fit)?;
    let loaded = load_sources(c.method, &c.sources)?;
    let test: Vec<BilingualTestItem> = load_bilingual(existing(&a.test)?)?;
    let mut meta = common_meta("eval-bilingual", c, &loaded);
    push_input(&mut meta, "test", &a.test)?;

    let outcome = match (c.method, c.pooled_refit) {
        (Method::Problex, true) => {
            let lexicon = loaded.lexicon.as_ref().expect("loaded");
            let queries = test.iter().map(|t| (&t.verb, t.candidates.as_slice()));
            eval_bilingual(
                &mut ProblexSelector::pooled(lexicon, fit, queries)?,
                &test,
                c.seed,
            )?
        }
        (Method::Random, _) => eval_bilingual(
            &mut RandomSelector {
                rng: substream(c.seed, Stream::RandomBaseline),
            },
            &test,
            c.seed,
        )?,
        (Method::Oracle, _) => eval_bilingual(
            &mut OracleSelector::new(test.iter().map(|t| t.gold_target.clone())),
            &test,
            c.seed,
        )?,
        (Method::MajorSense, _) => eval_bilingual(
            &mut MajorSenseSelector::new(loaded.pairs.as_ref().expect("loaded")),
            &test,
            c.seed,
        )?,
        (m, _) => eval_bilingual_par(
            m,
            pure_select(m, &loaded, fit).expect("inputs loaded"),
            &test,
            c.seed,
        )?,
    };
    emit(&meta, &outcome, &loaded, c.trace.as_deref())?;
    Ok(0)
}

fn cmd_selfcheck(a: SelfcheckArgs) -> Result<u8> {
    let checks = selfcheck::run_all(a.seed)?;
    let mut failed = 0;
    for c in &checks {
        println!("{c}");
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        eprintln!("plex: {failed} of {} self-checks failed", checks.len());
        return Ok(3);
    }
    Ok(0)
}
