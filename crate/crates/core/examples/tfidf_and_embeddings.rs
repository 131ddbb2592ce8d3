//! Builds a TF-IDF vocabulary and trains skip-gram embeddings on a synthetic
//! corpus, then prints a few sentence similarities.

use projsum::corpus::clean_corpus;
use projsum::synth::{SynthConfig, SyntheticCorpus};
use projsum::textproc::{
    cosine_similarity, sentence_embedding, tfidf_vectorize, train_skip_gram, SkipGramConfig,
    Vocabulary,
};
use projsum::wordlists::Stopwords;

fn main() -> projsum::Result<()> {
    let synthetic = SyntheticCorpus::generate(SynthConfig {
        projects: 60,
        seed: 3,
    });
    let docs: Vec<_> = clean_corpus(synthetic.pages)
        .into_iter()
        .filter_map(Result::ok)
        .collect();
    let sentences: Vec<Vec<String>> = docs
        .iter()
        .flat_map(|d| d.sentences.iter().map(|s| s.tokens.clone()))
        .collect();

    let vocab = Vocabulary::build(&sentences, 2, Stopwords::english())?;
    println!(
        "{} sentences, {} terms with df >= 2",
        vocab.n_documents(),
        vocab.len()
    );
    let first = &docs[0].sentences[0];
    let tfidf = tfidf_vectorize(&first.tokens, &vocab);
    println!("\"{}\"", first.text);
    for &(id, w) in tfidf.entries() {
        println!("  {:<14} {:.3}", vocab.term(id).unwrap_or("?"), w);
    }

    let sw = Stopwords::english();
    let content: Vec<Vec<String>> = sentences
        .iter()
        .map(|s| s.iter().filter(|t| !sw.contains(t)).cloned().collect())
        .collect();
    let cfg = SkipGramConfig {
        dimension: 50,
        epochs: 3,
        seed: 11,
        ..SkipGramConfig::default()
    };
    let trained = train_skip_gram(&content, &cfg)?;
    println!("\nskip-gram loss per epoch: {:?}", trained.epoch_losses);

    let doc = &docs[0];
    let anchor = sentence_embedding(&doc.sentences[0].tokens, &trained.table)
        .vector
        .0;
    for s in doc.sentences.iter().skip(1).take(5) {
        let v = sentence_embedding(&s.tokens, &trained.table).vector.0;
        println!("{:+.3}  {}", cosine_similarity(&anchor, &v)?, s.text);
    }
    Ok(())
}
