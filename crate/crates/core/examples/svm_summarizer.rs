//! Trains the linear SVM on a planted-token fixture and uses it as a binary
//! in-summary sentence filter.

use std::sync::Arc;

use projsum::corpus::Document;
use projsum::svm::{
    extract_features, summarize_binary, train_linear_svm, FeatureSpace, KeywordLexicon, SvmParams,
    SvmSummarizer,
};
use projsum::synth::planted_text_fixture;
use projsum::textproc::Vocabulary;
use projsum::wordlists::Stopwords;

fn main() -> projsum::Result<()> {
    let fixture = planted_text_fixture(500, 2);
    let (train_docs, test_docs) = fixture.docs.split_at(40);
    let sentences: Vec<Vec<String>> = train_docs
        .iter()
        .flat_map(|d| d.sentences.iter().map(|s| s.tokens.clone()))
        .collect();
    let vocab = Vocabulary::build(&sentences, 2, Stopwords::english())?;
    let space = Arc::new(FeatureSpace::composite(vocab, KeywordLexicon::bundled()));

    let data: Vec<_> = train_docs
        .iter()
        .zip(&fixture.labels)
        .flat_map(|(d, ys)| {
            d.sentences
                .iter()
                .zip(ys)
                .map(|(s, &y)| (extract_features(s, &space), y))
        })
        .collect();
    let trained = train_linear_svm(
        &data,
        SvmParams {
            seed: 4,
            ..SvmParams::default()
        },
    )?;
    println!("mean training loss per epoch:");
    for (i, l) in trained.epoch_losses.iter().enumerate() {
        println!("  {:>2} {l:.5}", i + 1);
    }

    let summarizer = SvmSummarizer::new(space, trained.model)?;
    let doc: &Document = &test_docs[0];
    let summary = summarize_binary(&summarizer, doc);
    println!("\nkept {} of {} sentences:", summary.len(), doc.len());
    for s in &doc.sentences {
        let mark = if summary.selected_indices.contains(&s.index) {
            "*"
        } else {
            " "
        };
        println!("  {mark} {}", s.text);
    }
    Ok(())
}
