//! Graphviz export and summary statistics.

use std::fmt::Write as _;

use serde::Serialize;

use crate::analysis::{compute_clusters, cut_infos, cut_rank_of, is_minimally_focused, CutInfo};
use crate::kernel::check_derivation;
use crate::proof::{Derivation, Rule};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT rendering: solid edges to premises, dashed back edges from repeat
/// leaves to their companions, one box per nontrivial cluster.
pub fn to_dot(d: &Derivation) -> String {
    let info = compute_clusters(d);
    let mut out = String::from("digraph proof {\n  node [shape=box, fontname=\"monospace\"];\n");
    let node_line = |out: &mut String, v: crate::proof::NodeId, indent: &str| {
        let label = format!("{}\\n{}", escape(&d.rule(v).to_string()), escape(&d.sequent(v).to_string()));
        writeln!(out, "{indent}n{} [label=\"{label}\"];", v.0).unwrap();
    };
    for (c, members) in info.clusters.iter().enumerate() {
        if info.is_nontrivial(c) {
            writeln!(out, "  subgraph cluster_{c} {{\n    style=rounded;\n    label=\"cluster {c}\";").unwrap();
            for &v in members {
                node_line(&mut out, v, "    ");
            }
            out.push_str("  }\n");
        }
    }
    for v in d.ids() {
        if !info.in_nontrivial(v) {
            node_line(&mut out, v, "  ");
        }
    }
    for v in d.ids() {
        for &c in d.children(v) {
            writeln!(out, "  n{} -> n{};", v.0, c.0).unwrap();
        }
        if let (Rule::Repeat(_), Some(c)) = (d.rule(v), d.companion(v)) {
            writeln!(out, "  n{} -> n{} [style=dashed];", v.0, c.0).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterSummary {
    pub id: usize,
    pub nodes: Vec<usize>,
    pub nontrivial: bool,
    pub depth: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProofStats {
    pub endsequent: String,
    pub accepted: bool,
    pub nodes: usize,
    pub repeat_leaves: usize,
    pub minimally_focused: bool,
    pub rank: Option<u32>,
    pub clusters: Vec<ClusterSummary>,
    pub cuts: Vec<CutInfo>,
}

pub fn proof_stats(d: &Derivation) -> ProofStats {
    let info = compute_clusters(d);
    let clusters = info
        .clusters
        .iter()
        .enumerate()
        .filter(|(c, _)| info.is_nontrivial(*c))
        .map(|(c, members)| ClusterSummary {
            id: c,
            nodes: members.iter().map(|v| v.0).collect(),
            nontrivial: true,
            depth: info.cluster_depth[c],
        })
        .collect();
    ProofStats {
        endsequent: d.sequent(d.root()).to_string(),
        accepted: check_derivation(d).accepted,
        nodes: d.len(),
        repeat_leaves: d.repeat_leaves().count(),
        minimally_focused: is_minimally_focused(d),
        rank: cut_rank_of(d).map(|r| r.0),
        clusters,
        cuts: cut_infos(d, &info),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_proof_document;

    fn load(text: &str) -> Derivation {
        Derivation::from_tree(&parse_proof_document(text).unwrap())
    }

    #[test]
    fn dot_has_one_back_edge_per_repeat() {
        let d = load(include_str!("../../../fixtures/ex32_pi0.gke"));
        let dot = to_dot(&d);
        assert_eq!(dot.matches("[style=dashed]").count(), 1);
        assert!(dot.contains("n6 -> n1 [style=dashed];"));
        assert_eq!(dot.matches("subgraph cluster_").count(), 1);
        assert_eq!(dot.matches(" -> ").count(), d.len());
    }

    #[test]
    fn labels_are_escaped() {
        assert_eq!(escape(r#"a "b" \c"#), r#"a \"b\" \\c"#);
    }

    #[test]
    fn stats_of_the_worked_examples() {
        let s = proof_stats(&load(include_str!("../../../fixtures/ex32_full.gke")));
        assert!(s.accepted);
        assert_eq!(s.rank, Some(1));
        assert_eq!(s.cuts.len(), 1);
        assert!(s.cuts[0].critical);
        assert_eq!(s.clusters.len(), 2);
        let s = proof_stats(&load(include_str!("../../../fixtures/ex33_full.gke")));
        assert_eq!(s.cuts[0].class, crate::analysis::CutClass::Unimportant);
        assert_eq!(s.repeat_leaves, 2);
    }
}
