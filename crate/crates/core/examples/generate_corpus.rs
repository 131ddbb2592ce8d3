//! Writes a synthetic corpus (pages, descriptions, annotations, ratings)
//! for use with the `projsum` binary.
//!
//! cargo run --example generate_corpus -- <dir> [projects] [seed]

use projsum::synth::{SynthConfig, SyntheticCorpus};

fn main() -> projsum::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "corpus".into());
    let projects = args
        .next()
        .map_or(300, |a| a.parse().expect("project count"));
    let seed = args.next().map_or(7, |a| a.parse().expect("seed"));
    let corpus = SyntheticCorpus::generate(SynthConfig { projects, seed });
    let paths = corpus.write(&dir)?;
    println!("corpus = {}", paths.corpus.display());
    println!("descriptions = {}", paths.descriptions.display());
    println!("annotations = {}", paths.annotations.display());
    println!("ratings = {}", paths.ratings.display());
    Ok(())
}
