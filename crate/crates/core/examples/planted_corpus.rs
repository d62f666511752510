//! Writes a corpus sampled from a planted model.
//!
//! Usage: planted_corpus OUT PAIRS SEED [CLASSES VERBS_PER_CLASS NOUNS_PER_CLASS]

use plex::rng::{substream, Stream};
use plex::synth::{planted_model, sample_corpus, PlantedConfig};

fn main() -> plex::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 3 {
        eprintln!("usage: planted_corpus OUT PAIRS SEED [CLASSES VERBS_PER_CLASS NOUNS_PER_CLASS]");
        std::process::exit(1);
    }
    let num = |i: usize, d: usize| {
        args.get(i)
            .map_or(d, |s| s.parse().expect("integer argument"))
    };
    let config = PlantedConfig {
        classes: num(3, 3),
        verbs_per_class: num(4, 15),
        nouns_per_class: num(5, 200),
        ..PlantedConfig::default()
    };
    let model = planted_model(&config)?;
    let corpus = sample_corpus(
        &model,
        num(1, 0),
        &mut substream(num(2, 0) as u64, Stream::Synthetic),
    )?;
    corpus.save(&args[0])
}
