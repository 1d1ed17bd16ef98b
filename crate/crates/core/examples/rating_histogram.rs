//! Bucket ratings into low, middle and high groups, for the reference
//! counts and for mock ratings of the corpus.

use std::path::Path;

use upr_audit::eval::{histogram, BucketCounts};
use upr_audit::pipeline::{analyze, load_sources};
use upr_audit::rater::{MockProvider, PromptProfile, Rater, RatingCache};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let counts: [u64; 11] = serde_json::from_str(&std::fs::read_to_string(dir.join("reference_rating_counts.json"))?)?;
    let reference = BucketCounts::from_counts(counts);
    println!("reference: {}", reference.to_json());
    println!("mid < high < low: {}", reference.shape_holds());

    let set = analyze(&load_sources(&[dir])?)?.statement_set();
    let cache = RatingCache::in_memory();
    let run = Rater::new(&MockProvider::new(), PromptProfile::Full, &cache).rate_all(&set, 4)?;
    let mock = histogram(&run.ratings);
    println!(
        "mock corpus: low {} mid {} high {}",
        mock.low(),
        mock.mid(),
        mock.high()
    );
    Ok(())
}
