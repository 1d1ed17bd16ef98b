mod common;

use std::collections::BTreeSet;

use upr_audit::baseline::partition;
use upr_audit::pdg::DepKind;

use common::*;

#[test]
fn pdgs_match_goldens() {
    let a = corpus_analysis();
    let n = check_pdg_goldens(&a).unwrap();
    assert_eq!(n, a.functions.len());
}

#[test]
fn candidates_match_fixture() {
    let a = corpus_analysis();
    check_fixture("candidates.txt", &candidates_text(&mock_corpus_report(&a))).unwrap();
}

#[test]
fn partition_matches_fixture() {
    let a = corpus_analysis();
    let report = mock_corpus_report(&a);
    let p = partition(&report.candidates(), &corpus_findings(&a));
    check_fixture("partition.json", &partition_text(&p)).unwrap();
}

/// Dependences of `sum_odd` worked out by hand from the source.
#[test]
fn sum_odd_hand_derived() {
    let a = corpus_analysis();
    let pdg = &a.function("sum_odd").unwrap().pdg;
    let texts: Vec<&str> = pdg.nodes.iter().map(|s| s.norm_text.as_str()).collect();
    assert_eq!(
        texts,
        [
            "int total = 0;",
            "i = 0",
            "i < n",
            "if (i % 2 == 0)",
            "continue;",
            "total += i;",
            "i++",
            "return total;"
        ]
    );
    let control: BTreeSet<(usize, usize)> = [(2, 3), (2, 5), (2, 6), (3, 4)].into();
    let data: BTreeSet<(usize, usize, &str)> = [
        (0, 5, "total"),
        (0, 7, "total"),
        (5, 5, "total"),
        (5, 7, "total"),
        (1, 2, "i"),
        (1, 3, "i"),
        (1, 5, "i"),
        (1, 6, "i"),
        (6, 2, "i"),
        (6, 3, "i"),
        (6, 5, "i"),
        (6, 6, "i"),
    ]
    .into();
    let got_control: BTreeSet<(usize, usize)> = pdg
        .edges
        .iter()
        .filter(|e| e.kind == DepKind::Control)
        .map(|e| (e.src, e.dst))
        .collect();
    let got_data: BTreeSet<(usize, usize, &str)> = pdg
        .edges
        .iter()
        .filter(|e| e.kind == DepKind::Data)
        .map(|e| (e.src, e.dst, e.var.as_ref().unwrap().name.as_str()))
        .collect();
    assert_eq!(got_control, control);
    assert_eq!(got_data, data);
}

#[test]
fn secret_adjacent_counters_flagged() {
    let a = corpus_analysis();
    let c = mock_corpus_report(&a).candidates();
    for v in ["sum_odd:i", "retry_read:tries", "count_lines:lines"] {
        assert!(!c.contains(&key(v)), "{v}");
    }
    // counters and lengths that share statements with a secret score like it
    for v in [
        "auth_check_plain:cleartxt_passwd_len",
        "wipe_password:i",
        "wipe_password:password_len",
    ] {
        assert!(c.contains(&key(v)), "{v}");
    }
}
