//! Score every corpus variable and print the ranked report at a chosen
//! lambda.
//!
//! cargo run --example score_variables [lambda]

use std::path::Path;

use upr_audit::pipeline::{analyze, build_report, load_sources, RunConfig};
use upr_audit::rater::{MockProvider, PromptProfile, Rater, RatingCache};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lambda: f64 = std::env::args().nth(1).map_or(Ok(0.5), |s| s.parse())?;
    let cfg = RunConfig {
        lambda,
        ..RunConfig::default()
    };
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let analysis = analyze(&load_sources(&[corpus])?)?;
    let cache = RatingCache::in_memory();
    let run = Rater::new(&MockProvider::new(), PromptProfile::Full, &cache).rate_all(&analysis.statement_set(), 4)?;
    let report = build_report(&cfg, &analysis, &run.ratings, "mock")?;
    for e in &report.variables {
        println!(
            "{:>7.3} {} {}:{}",
            e.score,
            if e.candidate { '*' } else { ' ' },
            e.function,
            e.name
        );
    }
    Ok(())
}
