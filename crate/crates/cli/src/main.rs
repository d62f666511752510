use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plex::disambig::Method;

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "plex",
    version,
    about = "Latent-class verb-noun models and class-based lexica"
)]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "PLEX_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a latent-class model on a pair file.
    Train(TrainArgs),
    /// Fine-tune per-verb class weights into a lexicon.
    Label(LabelArgs),
    /// Print a lexicon entry's class weights and top nouns.
    Lookup(LookupArgs),
    /// Choose among candidate translations for one verb.
    Disambiguate(DisambiguateArgs),
    /// Pseudo-disambiguation over (v, n, n') triples.
    EvalPseudo(EvalPseudoArgs),
    /// Target-word selection against a bilingual test set.
    EvalBilingual(EvalBilingualArgs),
    /// Run the numerical self-checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, short = 'k', default_value_t = 35)]
    classes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative log-likelihood improvement below which training stops.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Lower bound on emission probabilities (0 disables).
    #[arg(long, default_value_t = 0.0)]
    floor: f64,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Relative tolerance of the class-weight fit.
    #[arg(long = "fit-tol", default_value_t = 1e-6)]
    fit_tol: f64,
    #[arg(long = "fit-max-iters", default_value_t = 200)]
    fit_max_iters: usize,
}

#[derive(Args, Debug)]
struct LabelArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Minimum sample size M for a verb slot to get an entry.
    #[arg(long, default_value_t = 1.0)]
    min_count: f64,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args, Debug)]
struct LookupArgs {
    #[arg(long)]
    lexicon: PathBuf,
    /// Model file, when it is not where the lexicon says.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    verb: String,
    #[arg(long)]
    class: Option<usize>,
    #[arg(short = 'k', long = "top", default_value_t = 10)]
    top: usize,
}

#[derive(Args, Debug, Clone)]
struct Sources {
    /// Lexicon file (problex; also supplies the model).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Model file (clustering, problex_footnote).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Training pair file (empirical, major_sense, problex_footnote).
    #[arg(long)]
    pairs: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DisambiguateArgs {
    #[command(flatten)]
    sources: Sources,
    #[arg(long)]
    verb: String,
    /// Comma-separated candidate nouns.
    #[arg(long)]
    cands: String,
    #[arg(long, default_value = "problex")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args, Debug)]
struct EvalCommon {
    #[command(flatten)]
    sources: Sources,
    #[arg(long, default_value = "problex")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fit ProbLex class weights once per verb over all its queried candidates.
    #[arg(long)]
    pooled_refit: bool,
    /// Per-item trace output.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args, Debug)]
struct EvalPseudoArgs {
    #[command(flatten)]
    common: EvalCommon,
    /// Held-out pair file the (v, n) pairs are drawn from.
    #[arg(long)]
    test: PathBuf,
    /// Corpus whose noun marginals supply n'; defaults to --pairs, then --test.
    #[arg(long)]
    noun_dist: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Require (v, n') unseen in the training pairs.
    #[arg(long)]
    strict_pseudo: bool,
}

#[derive(Args, Debug)]
struct EvalBilingualArgs {
    #[command(flatten)]
    common: EvalCommon,
    /// Test items: id, verb.slot, source noun, gold target, candidates.
    #[arg(long)]
    test: PathBuf,
}

#[derive(Args, Debug)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("plex: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("plex: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("plex: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
