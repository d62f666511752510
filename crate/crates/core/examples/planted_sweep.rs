//! Planted-model pseudo-disambiguation over a range of seeds.
//!
//! Usage: planted_sweep VERBS_PER_CLASS NOUNS_PER_CLASS ZIPF STRICT(0|1) [SEEDS]

use plex::disambig::{ClusteringSelector, ProblexSelector};
use plex::eval::{eval_pseudo, make_pseudo_items, Confounder};
use plex::problex::LabelConfig;
use plex::rng::{substream, Stream};
use plex::synth::{best_alignment, planted_model, sample_corpus, PlantedConfig};
use plex::{marginal_noun_dist, train, FitConfig, Lexicon, TrainConfig};

fn main() -> plex::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 4 {
        eprintln!("usage: planted_sweep VERBS_PER_CLASS NOUNS_PER_CLASS ZIPF STRICT(0|1) [SEEDS]");
        std::process::exit(1);
    }
    let num = |i: usize| args[i].parse::<f64>().expect("numeric argument");
    let config = PlantedConfig {
        classes: 3,
        verbs_per_class: num(0) as usize,
        nouns_per_class: num(1) as usize,
        zipf: num(2),
    };
    let strict = num(3) > 0.0;
    let seeds = args.get(4).map_or(20, |s| s.parse().expect("seed count"));
    let truth = planted_model(&config)?;
    let (mut wins, mut ties, mut losses) = (0, 0, 0);
    println!("seed\tkl\tproblex_P\tclustering_P");
    for seed in 0..seeds {
        let mut rng = substream(seed, Stream::Synthetic);
        let train_corpus = sample_corpus(&truth, 100_000, &mut rng)?;
        let test = sample_corpus(&truth, 20_000, &mut rng)?;
        let config = TrainConfig {
            classes: 3,
            seed,
            ..TrainConfig::default()
        };
        let (model, _) = train(&train_corpus, &config)?;
        let (_, kl) = best_alignment(&truth, &model)?;
        let lexicon = Lexicon::build(model.clone(), &train_corpus, LabelConfig::default())?;
        let dist = marginal_noun_dist(&train_corpus)?;
        let confounder = if strict {
            Confounder::UnseenIn(&train_corpus)
        } else {
            Confounder::Distinct
        };
        let items = make_pseudo_items(
            &test,
            &dist,
            500,
            &mut substream(seed, Stream::PseudoGen),
            confounder,
        )?;
        let p = eval_pseudo(
            &mut ProblexSelector::new(&lexicon, FitConfig::default()),
            &items,
            seed,
        )?
        .report;
        let c = eval_pseudo(&mut ClusteringSelector { model: &model }, &items, seed)?.report;
        match p.precision.total_cmp(&c.precision) {
            std::cmp::Ordering::Greater => wins += 1,
            std::cmp::Ordering::Equal => ties += 1,
            std::cmp::Ordering::Less => losses += 1,
        }
        println!("{seed}\t{kl:.4}\t{:.3}\t{:.3}", p.precision, c.precision);
    }
    println!("# problex vs clustering: {wins} higher, {ties} equal, {losses} lower");
    Ok(())
}
