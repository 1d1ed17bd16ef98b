//! Extract the 1-hop subgraph around a variable's criterion statements.
//!
//! cargo run --example slice_variable [function:name]

use std::path::Path;

use upr_audit::cfront::VariableKey;
use upr_audit::pipeline::{analyze, load_sources};
use upr_audit::slicer::extract_subgraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let key: VariableKey = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "do_chown:uid".into())
        .parse()?;
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let analysis = analyze(&load_sources(&[corpus])?)?;
    let fa = analysis.function(&key.function).ok_or("unknown function")?;
    let sg = extract_subgraph(&fa.pdg, &key);
    for id in &sg.nodes {
        let mark = if sg.criteria.contains(id) { '*' } else { ' ' };
        println!("{mark} {id:>2}  {}", fa.pdg.nodes[*id].norm_text);
    }
    println!(
        "{} nodes, {} edges, {} criteria",
        sg.nodes.len(),
        sg.edges.len(),
        sg.criteria.len()
    );
    Ok(())
}
