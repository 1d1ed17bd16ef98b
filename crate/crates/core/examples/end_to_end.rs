//! The whole pipeline into a temporary directory, then the comparison with
//! the heuristic baseline.

use std::path::Path;

use upr_audit::baseline::{match_syntax, partition, run_taint};
use upr_audit::pipeline::{run_pipeline, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = tempfile::tempdir()?;
    let cfg = RunConfig {
        sources: vec![Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")],
        out_dir: out.path().to_path_buf(),
        ..RunConfig::default()
    };
    let result = run_pipeline(&cfg)?;
    let mut findings = Vec::new();
    for fa in &result.analysis.functions {
        let file = fa.file.display().to_string();
        findings.extend(match_syntax(&file, std::slice::from_ref(&fa.lowered)));
        findings.extend(run_taint(&file, &fa.lowered, &[]));
    }
    let p = partition(&result.report.candidates(), &findings);
    println!(
        "{} candidates of {} variables",
        p.set_b.len() + p.set_c.len(),
        result.report.variables.len()
    );
    println!("{}", p.summary());
    for entry in std::fs::read_dir(out.path())? {
        println!("  wrote {}", entry?.file_name().to_string_lossy());
    }
    Ok(())
}
