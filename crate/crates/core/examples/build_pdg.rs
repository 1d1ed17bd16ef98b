//! Build the dependence graph of one corpus function and print its edges.
//!
//! cargo run --example build_pdg [function]

use std::path::Path;

use upr_audit::pdg::DepKind;
use upr_audit::pipeline::{analyze, load_sources};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "do_chown".into());
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let analysis = analyze(&load_sources(&[corpus])?)?;
    let fa = analysis.function(&name).ok_or(format!("no function `{name}`"))?;
    for e in &fa.pdg.edges {
        let (a, b) = (&fa.pdg.nodes[e.src].norm_text, &fa.pdg.nodes[e.dst].norm_text);
        match e.kind {
            DepKind::Control => println!("control  {a}  ->  {b}"),
            DepKind::Data => println!(
                "data[{}]  {a}  ->  {b}",
                e.var.as_ref().map_or("?", |v| v.name.as_str())
            ),
        }
    }
    Ok(())
}
