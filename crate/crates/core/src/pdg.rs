//! Per-function program dependence graphs over simple statements.
//!
//! Control dependence is syntax-directed: a condition node governs every
//! statement of its block(s), and nested statements depend only on their
//! innermost condition. Data dependence comes from a reaching-definitions
//! fixpoint over the statement CFG, so loop-carried dependences appear
//! through back-edges.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::cfront::{Cfg, CfgNode, LoweredFunction, Statement, StmtId, VariableKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DepKind {
    Control,
    Data,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DepEdge {
    pub src: StmtId,
    pub dst: StmtId,
    pub kind: DepKind,
    /// Variable carried by a data edge; `None` for control edges.
    pub var: Option<VariableKey>,
}

impl DepEdge {
    pub fn control(src: StmtId, dst: StmtId) -> Self {
        DepEdge {
            src,
            dst,
            kind: DepKind::Control,
            var: None,
        }
    }

    pub fn data(src: StmtId, dst: StmtId, var: VariableKey) -> Self {
        DepEdge {
            src,
            dst,
            kind: DepKind::Data,
            var: Some(var),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionPdg {
    pub function: String,
    pub nodes: Vec<Statement>,
    pub edges: BTreeSet<DepEdge>,
}

impl FunctionPdg {
    pub fn node(&self, id: StmtId) -> &Statement {
        &self.nodes[id]
    }

    /// Nodes one edge away from `id`, in either direction, over both kinds.
    pub fn neighbors(&self, id: StmtId) -> BTreeSet<StmtId> {
        self.edges
            .iter()
            .filter_map(|e| {
                if e.src == id {
                    Some(e.dst)
                } else if e.dst == id {
                    Some(e.src)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pdg serializes")
    }
}

/// Edges from each condition node to the statements it directly governs.
pub fn control_dependence(_cfg: &Cfg, stmts: &[Statement]) -> BTreeSet<DepEdge> {
    stmts
        .iter()
        .filter_map(|s| s.governor.filter(|g| *g != s.id).map(|g| DepEdge::control(g, s.id)))
        .collect()
}

/// Reaching definitions at each statement: the set of `(defining statement,
/// variable)` pairs live on entry. `order` fixes the sweep order of the
/// fixpoint; the result does not depend on it.
pub(crate) fn reaching_definitions(
    cfg: &Cfg,
    stmts: &[Statement],
    order: &[CfgNode],
) -> BTreeMap<CfgNode, BTreeSet<(StmtId, VariableKey)>> {
    let preds = cfg.predecessor_map();
    let gen = |n: CfgNode| -> BTreeSet<(StmtId, VariableKey)> {
        match n {
            CfgNode::Stmt(id) => stmts[id].defs.iter().map(|v| (id, v.clone())).collect(),
            _ => BTreeSet::new(),
        }
    };
    let mut ins: BTreeMap<CfgNode, BTreeSet<(StmtId, VariableKey)>> = BTreeMap::new();
    let mut outs: BTreeMap<CfgNode, BTreeSet<(StmtId, VariableKey)>> = order.iter().map(|n| (*n, gen(*n))).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for &n in order {
            let input: BTreeSet<(StmtId, VariableKey)> = preds
                .get(&n)
                .into_iter()
                .flatten()
                .flat_map(|p| outs.get(p).into_iter().flatten().cloned())
                .collect();
            let mut out = gen(n);
            if let CfgNode::Stmt(id) = n {
                let kills = &stmts[id].kills;
                out.extend(input.iter().filter(|(_, v)| !kills.contains(v)).cloned());
            } else {
                out.extend(input.iter().cloned());
            }
            if outs.get(&n) != Some(&out) {
                outs.insert(n, out);
                changed = true;
            }
            ins.insert(n, input);
        }
    }
    ins
}

pub(crate) fn data_edges_from(
    stmts: &[Statement],
    ins: &BTreeMap<CfgNode, BTreeSet<(StmtId, VariableKey)>>,
) -> BTreeSet<DepEdge> {
    let mut edges = BTreeSet::new();
    for s in stmts {
        let Some(reaching) = ins.get(&CfgNode::Stmt(s.id)) else {
            continue;
        };
        for (def, v) in reaching {
            if s.uses.contains(v) {
                edges.insert(DepEdge::data(*def, s.id, v.clone()));
            }
        }
    }
    edges
}

/// Def-use edges: `B -> A` carrying `v` when a definition of `v` at `B`
/// reaches a use of `v` at `A`.
pub fn data_dependence(cfg: &Cfg, stmts: &[Statement]) -> BTreeSet<DepEdge> {
    let ins = reaching_definitions(cfg, stmts, &cfg.nodes);
    data_edges_from(stmts, &ins)
}

pub fn build_pdg(f: &LoweredFunction) -> FunctionPdg {
    let mut edges = control_dependence(&f.cfg, &f.statements);
    edges.extend(data_dependence(&f.cfg, &f.statements));
    FunctionPdg {
        function: f.name.clone(),
        nodes: f.statements.clone(),
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::{lower_to_statements, parse_unit, SourceUnit};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn pdgs(src: &str) -> Vec<FunctionPdg> {
        let unit = SourceUnit::new("t.c", src);
        let parsed = parse_unit(&unit);
        assert!(parsed.errors.is_empty(), "{:?}", parsed.errors);
        parsed
            .functions
            .iter()
            .map(|f| build_pdg(&lower_to_statements(&unit, &parsed, f).unwrap()))
            .collect()
    }

    fn k(name: &str) -> VariableKey {
        VariableKey::new("f", name)
    }

    #[test]
    fn straight_line_has_no_control_edges() {
        let p = &pdgs("void f(int a) { int b = a; b = b + 1; g(b); }")[0];
        assert!(p.edges.iter().all(|e| e.kind == DepKind::Data));
    }

    #[test]
    fn branch_governs_both_arms() {
        let p = &pdgs("void f(int c) { int a; int b; if (c) { a = 1; } else { b = 2; } }")[0];
        let control: Vec<_> = p.edges.iter().filter(|e| e.kind == DepKind::Control).cloned().collect();
        assert_eq!(control, vec![DepEdge::control(0, 1), DepEdge::control(0, 2)]);
    }

    #[test]
    fn single_def_use() {
        let p = &pdgs("void f(void) { int x; int y; x=1; y=x; }")[0];
        assert_eq!(p.edges, BTreeSet::from([DepEdge::data(0, 1, k("x"))]));
    }

    #[test]
    fn killed_definition_contributes_nothing() {
        let p = &pdgs("void f(void) { int x; int y; x=1; x=2; y=x; }")[0];
        assert_eq!(p.edges, BTreeSet::from([DepEdge::data(1, 2, k("x"))]));
    }

    #[test]
    fn weak_updates_do_not_kill() {
        let p = &pdgs("void f(int i) { int a[4]; a[0] = 1; a[i] = 2; g(a); }")[0];
        assert!(p.edges.contains(&DepEdge::data(0, 2, k("a"))));
        assert!(p.edges.contains(&DepEdge::data(1, 2, k("a"))));
    }

    #[test]
    fn loop_carried_self_edge() {
        let p = &pdgs("void f(int n) { int s = 0; while (n > 0) { s = s + n; n--; } g(s); }")[0];
        // 0 s=0, 1 while, 2 s=s+n, 3 n--, 4 g(s)
        assert!(p.edges.contains(&DepEdge::data(2, 2, k("s"))));
        assert!(p.edges.contains(&DepEdge::data(3, 1, k("n"))));
        assert!(p.edges.contains(&DepEdge::data(3, 3, k("n"))));
        assert!(p.edges.contains(&DepEdge::data(0, 4, k("s"))));
        assert!(!p.edges.iter().any(|e| e.kind == DepKind::Control && e.src == e.dst));
    }

    #[test]
    fn nested_conditions_chain() {
        let p = &pdgs("void f(int a, int b) { if (a) { if (b) { g(); } h(); } }")[0];
        let control: BTreeSet<_> = p.edges.iter().filter(|e| e.kind == DepKind::Control).cloned().collect();
        assert_eq!(
            control,
            BTreeSet::from([DepEdge::control(0, 1), DepEdge::control(1, 2), DepEdge::control(0, 3)])
        );
    }

    #[test]
    fn empty_body() {
        let p = &pdgs("void f(void) { }")[0];
        assert!(p.nodes.is_empty() && p.edges.is_empty());
    }

    #[test]
    fn data_edge_vars_are_defined_and_used() {
        let src = "int f(int n) { int i, s = 0, *p = &s; for (i = 0; i < n; i++) { if (i & 1) s += i; else *p = i; } scanf(\"%d\", &n); return s + n + *p; }";
        for p in pdgs(src) {
            for e in &p.edges {
                if let Some(v) = &e.var {
                    assert!(p.nodes[e.src].defs.contains(v));
                    assert!(p.nodes[e.dst].uses.contains(v));
                }
            }
        }
    }

    const SHUFFLE_SRC: &str = "int f(int n, int *q) { int i = 0, s = 0; while (i < n) { if (q[i] > 0) { s += q[i]; } else { goto skip; } i++; } skip: do { s--; } while (s > 100); switch (s) { case 0: n = 1; break; default: n = s; } return s + n; }";

    proptest! {
        #[test]
        fn fixpoint_is_order_independent(seed in any::<u64>()) {
            let unit = SourceUnit::new("t.c", SHUFFLE_SRC);
            let parsed = parse_unit(&unit);
            let f = lower_to_statements(&unit, &parsed, &parsed.functions[0]).unwrap();
            let reference = data_dependence(&f.cfg, &f.statements);
            let mut order = f.cfg.nodes.clone();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let ins = reaching_definitions(&f.cfg, &f.statements, &order);
            prop_assert_eq!(data_edges_from(&f.statements, &ins), reference);
        }
    }

    #[test]
    fn adding_a_use_keeps_existing_edges() {
        let before = &pdgs("void f(void) { int x = 1; int y = x; g(y); }")[0];
        let after = &pdgs("void f(void) { int x = 1; int y = x; g(y); h(x); }")[0];
        assert!(before.edges.is_subset(&after.edges));
    }

    #[test]
    fn serialization_is_stable() {
        let a = pdgs(SHUFFLE_SRC)[0].to_json();
        let b = pdgs(SHUFFLE_SRC)[0].to_json();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert!(v["nodes"][0]["norm_text"].is_string());
        assert!(v["edges"][0]["kind"].is_string());
    }
}
