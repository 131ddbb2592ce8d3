//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs with `cargo test --test acceptance`.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{
    central_difference, oracle_lcs, oracle_rouge_l, oracle_rouge_n, random_inputs, random_tokens,
    relative_error, GRADIENT_EPSILON,
};
use projsum::cli::{
    load_summarizer_models, run_all, synthetic_config, Context, Method, SummaryRecord, DOCUMENTS,
    REPORT_JSONL,
};
use projsum::corpus::Document;
use projsum::evalmetrics::{
    infer_topics, lda_topic_similarity, length_averaged_score, rouge_l, rouge_n,
    train_lda_observed, LdaConfig, LdaModel,
};
use projsum::pipeline::{produce_description, Description};
use projsum::rnn::{
    batch_loss, batch_loss_gradient, gru_step, gru_step_gradient, score_gradient, score_inputs,
    GruParams, SummarizerParams,
};
use projsum::svm::{
    extract_features, predict, train_linear_svm, FeatureSpace, FeatureVector, KeywordLexicon,
    SvmParams,
};
use projsum::synth::{planted_lda_fixture, planted_text_fixture, separable_2d, weak_label_fixture};
use projsum::textproc::{SparseVector, Vocabulary};
use projsum::weaklabel::{label_by_similarity, DEFAULT_THRESHOLD};
use projsum::wordlists::Stopwords;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    ensure(
        elapsed.as_secs_f64() < limit_secs,
        format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64()),
    )
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..200 {
        let cand = random_tokens(&mut rng, 0..=20, 6);
        let reference = random_tokens(&mut rng, 0..=20, 6);
        for n in [1, 2] {
            let got = rouge_n(&cand, &reference, n).map_err(|e| e.to_string())?;
            let want = oracle_rouge_n(&cand, &reference, n);
            ensure(
                got == want,
                format!("case {case}: rouge-{n} {got:?} != oracle {want:?}"),
            )?;
        }
        ensure(
            projsum::evalmetrics::lcs_len(&cand, &reference) == oracle_lcs(&cand, &reference),
            format!("case {case}: lcs differs"),
        )?;
        let got = rouge_l(&cand, &reference);
        let want = oracle_rouge_l(&cand, &reference);
        ensure(
            got == want,
            format!("case {case}: rouge-l {got:?} != oracle {want:?}"),
        )?;
    }
    within(start.elapsed(), 5.0)?;
    Ok("200 random pairs, rouge-1/2/l exact".into())
}

fn check_grad(
    what: &str,
    analytic: &[f64],
    numeric: &[f64],
    worst: &mut f64,
) -> Result<(), String> {
    ensure(
        analytic.len() == numeric.len(),
        format!("{what}: length mismatch"),
    )?;
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        ensure(
            a.is_finite() && n.is_finite(),
            format!("{what}[{i}] not finite"),
        )?;
        let e = relative_error(*a, *n);
        *worst = worst.max(e);
        ensure(
            e <= 1e-4,
            format!("{what}[{i}]: analytic {a:e} vs numeric {n:e} (rel {e:e})"),
        )?;
    }
    Ok(())
}

fn gru_flat(p: &GruParams) -> Vec<f64> {
    p.tensors()
        .iter()
        .flat_map(|m| m.data.iter().copied())
        .collect()
}

fn gru_set_flat(p: &mut GruParams, flat: &[f64]) {
    let mut it = flat.iter();
    for m in p.tensors_mut() {
        for v in m.data.iter_mut() {
            *v = *it.next().expect("sized");
        }
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for setting in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + setting);
        let (d_in, d_h) = (rng.gen_range(2..=5), rng.gen_range(2..=5));

        let gp = GruParams::uniform(d_in, d_h, 0.8, &mut rng);
        let x: Vec<f64> = (0..d_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..d_h).map(|_| rng.gen_range(-0.9..0.9)).collect();
        let up: Vec<f64> = (0..d_h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = |gp: &GruParams, x: &[f64], h: &[f64]| -> f64 {
            let out = gru_step(gp, x, h).expect("dims");
            out.iter().zip(&up).map(|(a, b)| a * b).sum()
        };
        let g = gru_step_gradient(&gp, &x, &h, &up).map_err(|e| e.to_string())?;
        let base = gru_flat(&gp);
        let numeric = central_difference(&base, GRADIENT_EPSILON, |v| {
            let mut q = gp.clone();
            gru_set_flat(&mut q, v);
            f(&q, &x, &h)
        });
        check_grad(
            &format!("gru_step params (setting {setting})"),
            &gru_flat(&g.params),
            &numeric,
            &mut worst,
        )?;
        let numeric = central_difference(&x, GRADIENT_EPSILON, |v| f(&gp, v, &h));
        check_grad(
            &format!("gru_step x (setting {setting})"),
            &g.x,
            &numeric,
            &mut worst,
        )?;
        let numeric = central_difference(&h, GRADIENT_EPSILON, |v| f(&gp, &x, v));
        check_grad(
            &format!("gru_step h_prev (setting {setting})"),
            &g.h_prev,
            &numeric,
            &mut worst,
        )?;

        let sp = SummarizerParams::uniform(d_in, d_h, 0.8, &mut rng);
        let base = sp.to_flat();
        let with = |v: &[f64]| {
            let mut q = sp.clone();
            q.set_flat(v);
            q
        };
        let n = rng.gen_range(2..=7);
        let inputs = random_inputs(&mut rng, d_in, n);
        let up: Vec<f64> = (0..inputs.len())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let analytic = score_gradient(&sp, &inputs, &up).map_err(|e| e.to_string())?;
        let numeric = central_difference(&base, GRADIENT_EPSILON, |v| {
            score_inputs(&with(v), &inputs)
                .iter()
                .zip(&up)
                .map(|(a, b)| a * b)
                .sum()
        });
        check_grad(
            &format!("score_sentences (setting {setting})"),
            &analytic.to_flat(),
            &numeric,
            &mut worst,
        )?;

        let docs: Vec<_> = (0..3)
            .map(|_| {
                let n = rng.gen_range(1..=6);
                let labels: Vec<f64> = (0..n)
                    .map(|_| if rng.gen_bool(0.4) { 1.0 } else { 0.0 })
                    .collect();
                (random_inputs(&mut rng, d_in, n), labels)
            })
            .collect();
        let batch: Vec<_> = docs.iter().map(|(i, l)| (i, l.as_slice())).collect();
        let (_, analytic) = batch_loss_gradient(&sp, &batch);
        let numeric = central_difference(&base, GRADIENT_EPSILON, |v| batch_loss(&with(v), &batch));
        check_grad(
            &format!("training loss (setting {setting})"),
            &analytic.to_flat(),
            &numeric,
            &mut worst,
        )?;
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!("20 settings, worst relative error {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let fixture = weak_label_fixture(50, 303);
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for ((doc, desc), copied) in fixture
        .docs
        .iter()
        .zip(&fixture.descriptions)
        .zip(&fixture.copied)
    {
        let labels = label_by_similarity(doc, desc, &fixture.table, DEFAULT_THRESHOLD)
            .map_err(|e| e.to_string())?;
        for l in labels {
            match (l.is_in_summary(), copied.contains(&l.sentence_index)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    let precision = tp as f64 / (tp + fp).max(1) as f64;
    let recall = tp as f64 / (tp + fn_).max(1) as f64;
    ensure(
        tp > 0 && precision == 1.0 && recall == 1.0,
        format!("tp {tp}, fp {fp}, fn {fn_}"),
    )?;
    Ok(format!(
        "50 documents, {tp} copied sentences recovered, precision = recall = 1"
    ))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let points = separable_2d(200, 404);
    let data: Vec<(FeatureVector, f64)> = points
        .iter()
        .map(|(x, y)| (FeatureVector::new(SparseVector::from_dense(x), 2, 42), *y))
        .collect();
    let trained = train_linear_svm(
        &data,
        SvmParams {
            seed: 4,
            ..SvmParams::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let correct = data
        .iter()
        .filter(|(x, y)| predict(&trained.model, x).expect("fingerprint").label == *y as i8)
        .count();
    let accuracy = correct as f64 / data.len() as f64;
    ensure(
        accuracy >= 0.99,
        format!("2D training accuracy {accuracy:.3}"),
    )?;
    let losses = &trained.epoch_losses;
    ensure(
        losses.last() <= losses.first(),
        format!("2D loss rose: {losses:?}"),
    )?;

    let fixture = planted_text_fixture(500, 405);
    let (train_docs, test_docs) = fixture.docs.split_at(40);
    let (train_labels, test_labels) = fixture.labels.split_at(40);
    let sentences: Vec<Vec<String>> = train_docs
        .iter()
        .flat_map(|d| d.sentences.iter().map(|s| s.tokens.clone()))
        .collect();
    let vocab =
        Vocabulary::build(&sentences, 2, Stopwords::english()).map_err(|e| e.to_string())?;
    let space = FeatureSpace::composite(vocab, KeywordLexicon::bundled());
    let pairs = |docs: &[Document], labels: &[Vec<f64>]| -> Vec<(FeatureVector, f64)> {
        docs.iter()
            .zip(labels)
            .flat_map(|(d, ys)| {
                d.sentences
                    .iter()
                    .zip(ys)
                    .map(|(s, &y)| (extract_features(s, &space), y))
            })
            .collect()
    };
    let train = pairs(train_docs, train_labels);
    let test = pairs(test_docs, test_labels);
    let trained = train_linear_svm(
        &train,
        SvmParams {
            seed: 5,
            ..SvmParams::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let losses = &trained.epoch_losses;
    ensure(
        losses.last() <= losses.first(),
        format!("text loss rose: {losses:?}"),
    )?;
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (x, y) in &test {
        let pos = predict(&trained.model, x).expect("fingerprint").label == 1;
        match (pos, *y > 0.0) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    let f1 = 2.0 * tp / (2.0 * tp + fp + fn_);
    ensure(f1 >= 0.9, format!("held-out F1 {f1:.3}"))?;
    within(start.elapsed(), 20.0)?;
    Ok(format!(
        "2D accuracy {accuracy:.3}; planted text held-out F1 {f1:.3} on {} sentences",
        test.len()
    ))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let fixture = planted_lda_fixture(100, 50, 505);
    let corpus: Vec<Vec<String>> = fixture.iter().map(|(d, _)| d.clone()).collect();
    let tokens: usize = corpus.iter().map(Vec::len).sum();
    let cfg = LdaConfig {
        topics: 2,
        iterations: 200,
        seed: 55,
        ..LdaConfig::default()
    };
    let mut broken = Vec::new();
    let mut sweeps = 0;
    let model: LdaModel = train_lda_observed(&corpus, &cfg, |it, sampler| {
        sweeps += 1;
        if !sampler.counts_consistent() || sampler.topic_word_total() != tokens as u64 {
            broken.push(it);
        }
    })
    .map_err(|e| e.to_string())?;
    ensure(sweeps == 200, format!("{sweeps} sweeps observed"))?;
    ensure(
        broken.is_empty(),
        format!("count conservation broken after sweeps {broken:?}"),
    )?;

    let mut purities = Vec::new();
    let mut majority = Vec::new();
    for prefix in ["alpha", "beta"] {
        let mut per_topic = [0u64; 2];
        for term in model.vocabulary().iter().filter(|t| t.starts_with(prefix)) {
            for (k, c) in per_topic.iter_mut().enumerate() {
                *c += model.topic_word_count(k, term) as u64;
            }
        }
        let total = per_topic[0] + per_topic[1];
        let best = if per_topic[0] >= per_topic[1] { 0 } else { 1 };
        purities.push(per_topic[best] as f64 / total as f64);
        majority.push(best);
    }
    ensure(
        majority[0] != majority[1],
        "both vocabularies share a majority topic",
    )?;
    ensure(
        purities.iter().all(|&p| p >= 0.95),
        format!("purities {purities:?}"),
    )?;
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "purity {:.3} / {:.3}, conservation held for all 200 sweeps",
        purities[0], purities[1]
    ))
}

fn criterion_6() -> Outcome {
    let fixture = planted_lda_fixture(40, 40, 606);
    let corpus: Vec<Vec<String>> = fixture.iter().map(|(d, _)| d.clone()).collect();
    let model = projsum::evalmetrics::train_lda(
        &corpus,
        &LdaConfig {
            topics: 2,
            iterations: 100,
            seed: 66,
            ..LdaConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let original = &corpus[0];
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let mut checked = 0;
    // (summary tokens, expected score when topics match fully)
    for (summary, expected) in [
        (original.clone(), 0.25),
        (original[..original.len() / 4].to_vec(), 1.0),
        (original[..original.len() / 2].to_vec(), 0.5),
    ] {
        let t_orig = infer_topics(&model, original, None);
        let t_sum = infer_topics(&model, &summary, None);
        ensure(
            t_orig == t_sum,
            format!("topics differ: {t_orig:?} vs {t_sum:?}"),
        )?;
        let got = lda_topic_similarity(original, &summary, &model);
        ensure(
            close(got, expected),
            format!("|summary| = {}: {got} != {expected}", summary.len()),
        )?;
        checked += 1;
    }
    let unknown: Vec<String> = ["zzz", "qqq", "xxx", "vvv"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    ensure(
        infer_topics(&model, &unknown, None) == BTreeSet::new(),
        "out-of-vocabulary text has topics",
    )?;
    let got = lda_topic_similarity(&unknown, &[], &model);
    ensure(close(got, 1.0), format!("vacuous case {got}"))?;
    checked += 1;

    for (doc, sum, score, expected) in [
        (100, 0, 2.0, 2.0),
        (100, 100, 2.0, 0.0),
        (100, 25, 4.0, 3.0),
    ] {
        let got = length_averaged_score(doc, sum, score).map_err(|e| e.to_string())?;
        ensure(
            close(got, expected),
            format!("({doc}, {sum}, {score}) -> {got}, want {expected}"),
        )?;
        let closed = (doc - sum) as f64 / doc as f64 * score;
        ensure(close(got, closed), "closed form mismatch")?;
        checked += 1;
    }
    ensure(
        length_averaged_score(0, 0, 1.0).is_err(),
        "doc_len 0 accepted",
    )?;
    ensure(
        length_averaged_score(10, 11, 1.0).is_err(),
        "summary longer than document accepted",
    )?;
    Ok(format!("{checked} tabulated cases exact to 1e-12"))
}

struct EndToEnd {
    first: std::path::PathBuf,
    elapsed: Duration,
}

fn end_to_end_run(root: &Path, name: &str) -> Result<(Context, Duration), String> {
    let cfg = synthetic_config(
        &root.join(name).join("corpus"),
        &root.join(name).join("out"),
        300,
        2024,
    )
    .map_err(|e| e.to_string())?;
    let ctx = Context::new(cfg).map_err(|e| e.to_string())?;
    let start = Instant::now();
    run_all(&ctx).map_err(|e| e.to_string())?;
    Ok((ctx, start.elapsed()))
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    fs::read_to_string(path)
        .expect("artifact present")
        .lines()
        .map(|l| serde_json::from_str(l).expect("valid row"))
        .collect()
}

fn criterion_7(root: &Path, state: &mut Option<EndToEnd>) -> Outcome {
    let (ctx, elapsed) = end_to_end_run(root, "first")?;
    *state = Some(EndToEnd {
        first: ctx.cfg.output_dir.clone(),
        elapsed,
    });
    ensure(
        elapsed.as_secs_f64() < 600.0,
        format!("end-to-end run took {elapsed:?}"),
    )?;

    let docs: Vec<Document> = read_lines(&ctx.out(DOCUMENTS));
    ensure(
        docs.len() >= 250,
        format!("only {} documents survived cleaning", docs.len()),
    )?;
    let models = load_summarizer_models(&ctx).map_err(|e| e.to_string())?;
    let mut kept = 0;
    for doc in &docs {
        let out = produce_description(
            doc,
            doc.reference_description.as_deref(),
            &models,
            &ctx.cfg.policy(),
            0.25,
        )
        .map_err(|e| format!("{}: {e}", doc.project_id))?;
        match out.0 {
            Description::KeepExisting => kept += 1,
            Description::Generated(s) => {
                ensure(!s.is_empty(), format!("{}: empty summary", doc.project_id))?
            }
        }
    }

    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.project_id.as_str(), d)).collect();
    let mut floor_cases = 0;
    let mut checked = 0;
    for method in [Method::Rnn, Method::Stacked] {
        let rows: Vec<SummaryRecord> = read_lines(&ctx.out(&method.summaries_file()));
        ensure(
            rows.len() == docs.len(),
            format!("{}: {} summaries", method.name(), rows.len()),
        )?;
        for r in rows {
            let doc = by_id[r.project_id.as_str()];
            let budget = 0.25 * doc.word_count() as f64;
            if r.word_count as f64 > budget {
                ensure(
                    r.selected_indices.len() == 1,
                    format!(
                        "{} {}: {} words over budget {budget}",
                        method.name(),
                        r.project_id,
                        r.word_count
                    ),
                )?;
                floor_cases += 1;
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{} documents total ({kept} kept), {checked} GRU/stacked summaries within budget, {floor_cases} single-sentence floor cases, run {:.1}s",
        docs.len(),
        elapsed.as_secs_f64()
    ))
}

fn compare_dirs(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<String> = fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| !n.ends_with(".manifest.json"))
        .collect();
    names.sort();
    for n in &names {
        let x = fs::read(a.join(n)).map_err(|e| e.to_string())?;
        let y = fs::read(b.join(n)).map_err(|_| format!("{n} missing in second run"))?;
        ensure(x == y, format!("{n} differs between runs"))?;
    }
    Ok(names.len())
}

fn criterion_8(root: &Path, state: &Option<EndToEnd>) -> Outcome {
    let first = state.as_ref().ok_or("criterion 7 did not produce a run")?;
    let (ctx, elapsed) = end_to_end_run(root, "second")?;
    let n = compare_dirs(&first.first, &ctx.cfg.output_dir)?;
    ensure(
        ctx.out(REPORT_JSONL).is_file() && ctx.out(&Method::Stacked.lda_file()).is_file(),
        "expected artifacts missing",
    )?;
    Ok(format!(
        "{n} artifacts byte-identical across runs ({:.1}s and {:.1}s)",
        first.elapsed.as_secs_f64(),
        elapsed.as_secs_f64()
    ))
}

fn criterion_9(state: &Option<EndToEnd>) -> Outcome {
    let first = state.as_ref().ok_or("criterion 7 did not produce a run")?;
    let mean = |m: Method| -> f64 {
        let rows: Vec<SummaryRecord> = read_lines(&first.first.join(m.summaries_file()));
        rows.iter().map(|r| r.compression_ratio).sum::<f64>() / rows.len() as f64
    };
    let (binary, stacked) = (mean(Method::BinarySvm), mean(Method::Stacked));
    ensure(
        binary > stacked,
        format!("binary {binary:.4} <= stacked {stacked:.4}"),
    )?;
    Ok(format!(
        "mean compression binary {binary:.4} > stacked {stacked:.4}"
    ))
}

fn report(id: usize, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS  criterion {id}: {title} [{secs:.2}s] {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL  criterion {id}: {title} [{secs:.2}s] {detail}");
            false
        }
    }
}

fn main() {
    let _ = env_logger::builder().is_test(true).try_init();
    let root = tempfile::tempdir().expect("temp dir");
    let mut e2e = None;
    let results = [
        report(1, "metric oracle equivalence", criterion_1),
        report(2, "gradient correctness", criterion_2),
        report(3, "weak-label round trip", criterion_3),
        report(4, "SVM learnability", criterion_4),
        report(5, "LDA planted-topic recovery", criterion_5),
        report(6, "length penalty and score formulas", criterion_6),
        report(7, "pipeline totality and budget", || {
            criterion_7(root.path(), &mut e2e)
        }),
        report(8, "determinism", || criterion_8(root.path(), &e2e)),
        report(9, "qualitative ordering", || criterion_9(&e2e)),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!(
        "\n{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
