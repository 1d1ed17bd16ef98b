//! Graphviz for a function PDG and one variable's subgraph.
//!
//! cargo run --example dot_export | dot -Tsvg > pdg.svg

use std::path::Path;

use upr_audit::dot::{pdg_to_dot, subgraph_to_dot};
use upr_audit::pipeline::{analyze, load_sources};
use upr_audit::slicer::extract_subgraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let analysis = analyze(&load_sources(&[corpus])?)?;
    let fa = analysis.function("auth_check_plain").ok_or("missing function")?;
    print!("{}", pdg_to_dot(&fa.pdg));
    let v = "auth_check_plain:cleartxt_passwd_len".parse()?;
    eprint!("{}", subgraph_to_dot(&fa.pdg, &extract_subgraph(&fa.pdg, &v)));
    Ok(())
}
