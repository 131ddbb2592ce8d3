//! Trains every model on a small synthetic corpus through the command
//! functions, then walks the production description policy project by
//! project.

use std::collections::BTreeMap;

use projsum::cli::{
    cmd_ingest, cmd_label, cmd_train_criteria, cmd_train_rnn, cmd_train_svm, load_summarizer_models,
};
use projsum::cli::{synthetic_config, Context, DOCUMENTS};
use projsum::corpus::Document;
use projsum::pipeline::{produce_description, summarize_stacked, Description};

fn main() -> projsum::Result<()> {
    let dir = std::env::temp_dir().join("projsum-stacked");
    let mut cfg = synthetic_config(&dir.join("corpus"), &dir.join("artifacts"), 80, 21)?;
    cfg.rnn_epochs = 10;
    let ctx = Context::new(cfg)?;
    for step in [
        cmd_ingest,
        cmd_label,
        cmd_train_svm,
        cmd_train_criteria,
        cmd_train_rnn,
    ] {
        println!("{}", step(&ctx)?);
    }
    let models = load_summarizer_models(&ctx)?;
    let docs: Vec<Document> = std::fs::read_to_string(ctx.out(DOCUMENTS))
        .expect("documents written")
        .lines()
        .map(|l| serde_json::from_str(l).expect("valid document"))
        .collect();

    let doc = &docs[0];
    let stacked = summarize_stacked(&models.binary, &models.rnn, doc, ctx.cfg.budget)?;
    println!(
        "\n{}: stacked summary {:?} ({:.2} of words)",
        doc.project_id, stacked.selected_indices, stacked.compression_ratio
    );
    println!("  {}", stacked.text);

    let mut branches: BTreeMap<String, usize> = BTreeMap::new();
    for doc in &docs {
        let (out, record) = produce_description(
            doc,
            doc.reference_description.as_deref(),
            &models,
            &ctx.cfg.policy(),
            ctx.cfg.budget,
        )?;
        *branches.entry(format!("{:?}", record.branch)).or_default() += 1;
        if let Description::Generated(s) = out {
            assert!(!s.is_empty());
        }
    }
    println!("\npolicy branches over {} projects:", docs.len());
    for (b, n) in branches {
        println!("  {b:<18} {n}");
    }
    Ok(())
}
