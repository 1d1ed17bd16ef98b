//! Print the prompt for each profile, then compare candidate recall across
//! profiles using recorded ratings.
//!
//! cargo run --example prompt_ablation -- recording.jsonl fn:var [fn:var ...]
//!
//! The recording is in the rating-cache format with one record per statement
//! and profile. Without arguments only the prompts are printed.

use std::path::{Path, PathBuf};

use upr_audit::cfront::VariableKey;
use upr_audit::eval::ablation_recall;
use upr_audit::pipeline::{run_pipeline_with, RunConfig};
use upr_audit::rater::{build_prompt, PromptProfile, ReplayProvider};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for p in PromptProfile::ALL {
        println!("--- {p}\n{}\n", build_prompt(p, "setuid(uid);"));
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some((recording, vars)) = args.split_first() else {
        return Ok(());
    };
    let confirmed: Vec<VariableKey> = vars.iter().map(|v| v.parse()).collect::<Result<_, _>>()?;
    let out = tempfile::tempdir()?;
    for p in PromptProfile::ALL {
        let provider = ReplayProvider::from_file(Path::new(recording))?;
        let cfg = RunConfig {
            sources: vec![PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")],
            out_dir: out.path().join(p.as_str()),
            profile: p,
            ..RunConfig::default()
        };
        let result = run_pipeline_with(&cfg, &provider)?;
        println!("{p}: recall {:.3}", ablation_recall(&confirmed, &result.report)?);
    }
    Ok(())
}
