//! Rate the corpus statement set with the offline mock provider, through a
//! cache, twice. The second pass is served from the cache.
//!
//! Set UPR_LLM_API_KEY and pass a base URL and model to use a real endpoint:
//! cargo run --example rate_statements -- https://host/v1 model-id

use std::path::Path;

use upr_audit::pipeline::{analyze, load_sources};
use upr_audit::rater::{LlmProvider, MockProvider, PromptProfile, Provider, Rater, RatingCache};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let provider: Box<dyn Provider> = match args.as_slice() {
        [url, model] => Box::new(LlmProvider::from_env(url, model).ok_or("UPR_LLM_API_KEY is not set")?),
        _ => Box::new(MockProvider::with_latency(1, 2)),
    };
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let set = analyze(&load_sources(&[corpus])?)?.statement_set();
    let cache = RatingCache::in_memory();
    let rater = Rater::new(provider.as_ref(), PromptProfile::Full, &cache);
    let first = rater.rate_all(&set, 4)?;
    let second = rater.rate_all(&set, 4)?;
    for r in first.ratings.values().filter(|r| r.value > 0) {
        println!("{:>2}  {}", r.value, r.statement);
    }
    println!(
        "first pass: {} rated; second pass: {} cache hits",
        first.rated, second.cache_hits
    );
    Ok(())
}
