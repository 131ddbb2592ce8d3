//! ROUGE, topic-model similarity with the length penalty, and the
//! classification and human-score helpers.

use projsum::evalmetrics::{
    classification_metrics, infer_topics, lda_topic_similarity, length_averaged_score,
    length_penalty, rouge_l, rouge_n, train_lda, LdaConfig,
};
use projsum::synth::planted_lda_fixture;
use projsum::textproc::tokenize;

fn main() -> projsum::Result<()> {
    let reference = tokenize("The project trains young farmers to restore degraded soil.");
    let candidate = tokenize("Young farmers restore soil with the project.");
    for n in [1, 2] {
        let r = rouge_n(&candidate, &reference, n)?;
        println!(
            "rouge-{n}: p {:.3} r {:.3} f {:.3}",
            r.precision, r.recall, r.f1
        );
    }
    let l = rouge_l(&candidate, &reference);
    println!(
        "rouge-l: p {:.3} r {:.3} f {:.3}",
        l.precision, l.recall, l.f1
    );

    let corpus: Vec<Vec<String>> = planted_lda_fixture(100, 50, 4)
        .into_iter()
        .map(|(d, _)| d)
        .collect();
    let model = train_lda(
        &corpus,
        &LdaConfig {
            topics: 2,
            iterations: 200,
            seed: 8,
            ..LdaConfig::default()
        },
    )?;
    for k in 0..2 {
        println!("topic {k}: {:?}", model.top_terms(k, 6));
    }
    let original = &corpus[0];
    for keep in [5, 12, 25, 50] {
        let summary = &original[..keep];
        println!(
            "summary of {keep:>2} tokens: topics {:?}, penalty {:.2}, similarity {:.3}",
            infer_topics(&model, summary, None),
            length_penalty(original.len(), keep),
            lda_topic_similarity(original, summary, &model)
        );
    }

    let m = classification_metrics(&[1, 1, -1, -1, 1], &[1, -1, -1, 1, 1])?;
    println!(
        "precision {:.3} recall {:.3} f1 {:.3}",
        m.precision, m.recall, m.f1
    );
    println!(
        "length-averaged rating: {:.3}",
        length_averaged_score(400, 100, 4.0)?
    );
    Ok(())
}
