//! Parse a C file and print each function's lowered statements and CFG.
//!
//! cargo run --example parse_and_lower [file.c]

use std::path::{Path, PathBuf};

use upr_audit::cfront::{lower_to_statements, parse_unit, SourceUnit};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/loops.c"));
    let unit = SourceUnit::read(&path)?;
    let parsed = parse_unit(&unit);
    for err in &parsed.errors {
        eprintln!("skipped: {err}");
    }
    for f in &parsed.functions {
        let lowered = lower_to_statements(&unit, &parsed, f)?;
        println!(
            "{} ({} statements, {} CFG edges)",
            lowered.name,
            lowered.statements.len(),
            lowered.cfg.edges.len()
        );
        for s in &lowered.statements {
            let defs: Vec<_> = s.defs.iter().map(|k| k.name.as_str()).collect();
            let uses: Vec<_> = s.uses.iter().map(|k| k.name.as_str()).collect();
            println!(
                "  {:>2} {:<22} {:<40} defs {:?} uses {:?}",
                s.id,
                s.kind.as_str(),
                s.norm_text,
                defs,
                uses
            );
        }
    }
    Ok(())
}
