//! Derives in-summary labels by comparing document sentences with an
//! existing description, then balances the classes.

use projsum::synth::weak_label_fixture;
use projsum::weaklabel::{balance_classes, label_by_similarity, DEFAULT_THRESHOLD};

fn main() -> projsum::Result<()> {
    let fixture = weak_label_fixture(20, 5);
    let mut all = Vec::new();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for ((doc, desc), copied) in fixture
        .docs
        .iter()
        .zip(&fixture.descriptions)
        .zip(&fixture.copied)
    {
        let labels = label_by_similarity(doc, desc, &fixture.table, DEFAULT_THRESHOLD)?;
        for l in &labels {
            match (l.is_in_summary(), copied.contains(&l.sentence_index)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        all.extend(labels);
    }
    println!(
        "labeled {} sentences: tp {tp}, fp {fp}, fn {fn_}",
        all.len()
    );

    let first = &fixture.docs[0];
    println!("\ndescription: {}", fixture.descriptions[0]);
    for l in all.iter().filter(|l| l.project_id == first.project_id) {
        println!(
            "  {:>5.3} {} {}",
            l.max_similarity.unwrap_or(f64::NAN),
            if l.is_in_summary() { "*" } else { " " },
            first.sentences[l.sentence_index].text
        );
    }

    let balanced = balance_classes(&all, 1)?;
    let pos = balanced.iter().filter(|l| l.is_in_summary()).count();
    println!(
        "\nbalanced: {} positives, {} negatives",
        pos,
        balanced.len() - pos
    );
    Ok(())
}
