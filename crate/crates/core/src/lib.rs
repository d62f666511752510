//! Latent-class verb–noun models, probabilistic class-based lexica, and
//! target-word selection.
//!
//! The pipeline: load a pair corpus ([`corpus`]), train a latent-class
//! model by EM ([`model`]), fine-tune per-verb class weights into a lexicon
//! ([`problex`]), pick translations with the lexicon or a baseline
//! ([`disambig`]), and score the picks ([`eval`]).

pub mod corpus;
pub mod disambig;
pub mod error;
pub mod eval;
pub mod lookup;
pub mod model;
pub mod persist;
pub mod problex;
pub mod rng;
pub mod selfcheck;
pub mod synth;

pub use corpus::{
    load_pairs, marginal_noun_dist, object_sample, sample_noun, BilingualTestItem, Dictionary,
    FrameSlot, NounDistribution, NounSample, PairCorpus, VerbSlot,
};
pub use disambig::{
    clustering_select, empirical_select, footnote_select, major_sense_select, problex_select,
    random_select, Choice, Method, Selector,
};
pub use error::{Error, Result};
pub use eval::{
    eval_bilingual, eval_pseudo, make_pseudo_items, mean_ambiguity, standardize, EvalReport,
};
pub use model::{em_step, init_model, log_likelihood, train, LcModel, TrainConfig, TrainTrace};
pub use problex::{
    build_entry, estimated_frequency, fit_class_weights, membership, top_nouns, FitConfig, Lexicon,
    LexiconEntry,
};
