//! Trains the GRU sentence scorer on planted documents and selects sentences
//! under a word budget.

use std::sync::Arc;

use projsum::rnn::{score_sentences, summarize_rnn, train_rnn, RnnConfig};
use projsum::synth::planted_rnn_fixture;

fn main() -> projsum::Result<()> {
    let (docs, table) = planted_rnn_fixture(60, 9);
    let (train, test) = docs.split_at(48);
    let cfg = RnnConfig {
        hidden: 16,
        epochs: 30,
        learning_rate: 0.5,
        seed: 1,
        ..RnnConfig::default()
    };
    let trained = train_rnn(train, Arc::new(table), cfg)?;
    for r in &trained.reports {
        println!(
            "epoch {:>2}: loss {:.4}, |grad| {:.4}",
            r.epoch, r.mean_loss, r.gradient_norm
        );
    }

    let example = &test[0];
    let probs = score_sentences(&trained.model, &example.doc)?;
    let summary = summarize_rnn(&trained.model, &example.doc, 0.25)?;
    println!(
        "\nselected {:?}: {} of {} words",
        summary.selected_indices,
        summary.word_count,
        example.doc.word_count()
    );
    for ((s, p), y) in example
        .doc
        .sentences
        .iter()
        .zip(&probs)
        .zip(&example.labels)
    {
        println!("  p={p:.3} label={y} {}", s.text);
    }
    Ok(())
}
