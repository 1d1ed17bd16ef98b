//! Rename identifiers in a C file, print the result, and compare structure
//! and mock ratings before and after.
//!
//! cargo run --example anonymize [seed]

use std::path::Path;

use upr_audit::cfront::{anonymize, SourceUnit};
use upr_audit::eval::anonymization_study;
use upr_audit::rater::{MockProvider, PromptProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(42), |s| s.parse())?;
    let unit = SourceUnit::read(&Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/ftp_login.c"))?;
    let (anon, map) = anonymize(&unit, seed, false)?;
    println!("{}", anon.text);
    for (from, to) in &map.pairs {
        println!("{from} -> {to}");
    }
    let s = anonymization_study(&[unit], seed, false, &MockProvider::new(), PromptProfile::Full)?;
    println!(
        "isomorphic {}; mean delta {:.3}, std {:.3}",
        s.isomorphic, s.mean_delta, s.std_delta
    );
    Ok(())
}
