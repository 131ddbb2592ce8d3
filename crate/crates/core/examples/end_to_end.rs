//! Generates a synthetic corpus and runs every stage of the pipeline,
//! printing the evaluation report.
//!
//! cargo run --release --example end_to_end -- [projects] [seed] [out-dir]

use std::time::Instant;

use projsum::cli::{execute, full_run, synthetic_config, Context, REPORT_TEXT};

fn main() -> projsum::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut args = std::env::args().skip(1);
    let projects: usize = args
        .next()
        .map_or(300, |a| a.parse().expect("project count"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));
    let out = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("projsum-e2e"), Into::into);

    let cfg = synthetic_config(&out.join("corpus"), &out.join("artifacts"), projects, seed)?;
    let ctx = Context::new(cfg)?;
    for command in full_run() {
        let start = Instant::now();
        let line = execute(&ctx, &command)?;
        println!("{:>7.2}s  {line}", start.elapsed().as_secs_f64());
    }
    println!();
    print!(
        "{}",
        std::fs::read_to_string(ctx.out(REPORT_TEXT)).expect("report")
    );
    Ok(())
}
