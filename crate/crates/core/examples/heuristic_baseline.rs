//! Run the keyword and taint rules over the corpus.

use std::path::Path;

use upr_audit::baseline::{match_syntax, run_taint};
use upr_audit::pipeline::{analyze, load_sources};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let analysis = analyze(&load_sources(&[corpus])?)?;
    let extra = vec!["setgid".to_string()];
    for fa in &analysis.functions {
        let file = fa.file.file_name().unwrap_or_default().to_string_lossy();
        let mut findings = match_syntax(&file, std::slice::from_ref(&fa.lowered));
        findings.extend(run_taint(&file, &fa.lowered, &extra));
        for f in findings {
            println!("{:?} {}:{} {} {:?}", f.rule, f.file, f.line, f.variable, f.detail);
        }
    }
    Ok(())
}
