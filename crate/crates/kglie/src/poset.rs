//! The extension order on catalog cases.
//!
//! Cases are compared through the coarse five-number profile (n, r3, r2, j1,
//! k): a case precedes another when n grows strictly and the other four
//! entries do not decrease. The Hasse diagram keeps only the covering edges
//! of that order. Disordered pairs are explained by a detection report that
//! names every characteristic, out of the full twelve, whose monotonicity
//! fails.

use crate::catalog::main_cases;
use crate::error::{Error, Result};
use crate::invariants::{ExtNat, InvariantTuple};

/// One node of the extension order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseNode {
    pub id: String,
    /// (n, r3, r2, j1, k); parametric cases carry their parameter-free
    /// profile.
    pub tuple5: [ExtNat; 5],
    pub display: String,
}

impl CaseNode {
    pub fn new(id: &str, tuple5: [ExtNat; 5], display: &str) -> CaseNode {
        CaseNode {
            id: id.to_string(),
            tuple5,
            display: display.to_string(),
        }
    }
}

/// The catalog cases 0..13 as poset nodes, profiles taken from the stored
/// characteristic rows.
pub fn catalog_nodes() -> Result<Vec<CaseNode>> {
    let mut nodes = Vec::new();
    for rec in main_cases()? {
        let stored = rec
            .stored
            .as_ref()
            .ok_or_else(|| Error::Invalid(format!("case {} stores no tuple", rec.id)))?;
        let display = match rec.param {
            Some((name, _)) => format!("{}_{}", rec.id, name),
            None => rec.id.clone(),
        };
        nodes.push(CaseNode::new(&rec.id, stored.tuple5(), &display));
    }
    Ok(nodes)
}

/// Look up one catalog node by case id.
pub fn catalog_node(id: &str) -> Result<CaseNode> {
    catalog_nodes()?
        .into_iter()
        .find(|n| n.id == id)
        .ok_or_else(|| Error::Invalid(format!("no poset node for case {:?}", id)))
}

/// The strict order: n grows strictly while r3, r2, j1, k do not decrease.
/// Infinite entries compare greater than every natural.
pub fn precedes(a: &CaseNode, b: &CaseNode) -> bool {
    let [na, r3a, r2a, j1a, ka] = a.tuple5;
    let [nb, r3b, r2b, j1b, kb] = b.tuple5;
    na < nb && r3a <= r3b && r2a <= r2b && j1a <= j1b && ka <= kb
}

/// The extension order restricted to a node set, reduced to covering edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HasseDiagram {
    pub nodes: Vec<CaseNode>,
    /// Directed covering edges (source id, target id).
    pub edges: Vec<(String, String)>,
    /// Edge annotations (source id, target id, text).
    pub annotations: Vec<(String, String, String)>,
}

fn id_key(id: &str) -> (u32, String) {
    let numeric: String = id.chars().take_while(|c| c.is_ascii_digit()).collect();
    (numeric.parse().unwrap_or(u32::MAX), id.to_string())
}

/// Transitive reduction of the precedes relation on the given nodes.
pub fn hasse(nodes: &[CaseNode]) -> HasseDiagram {
    let mut nodes: Vec<CaseNode> = nodes.to_vec();
    nodes.sort_by_key(|n| id_key(&n.id));
    nodes.dedup_by(|a, b| a.id == b.id);
    let mut edges = Vec::new();
    for a in &nodes {
        for b in &nodes {
            if !precedes(a, b) {
                continue;
            }
            let covered = nodes
                .iter()
                .any(|z| z.id != a.id && z.id != b.id && precedes(a, z) && precedes(z, b));
            if !covered {
                edges.push((a.id.clone(), b.id.clone()));
            }
        }
    }
    edges.sort_by_key(|(s, t)| (id_key(s), id_key(t)));
    let mut annotations = Vec::new();
    if edges.iter().any(|(s, t)| s == "7" && t == "12") {
        // The parametric pairing between the two families.
        annotations.push(("7".to_string(), "12".to_string(), "p=2/q".to_string()));
    }
    HasseDiagram {
        nodes,
        edges,
        annotations,
    }
}

/// Reporting order of the twelve characteristics.
pub const CHARACTERISTIC_NAMES: [&str; 12] = [
    "m", "n", "k", "l", "j1", "j2", "j12", "j13", "j23", "r1", "r2", "r3",
];

/// Names every characteristic, out of the full twelve, whose inequality
/// fails for the pair: n must grow strictly (a precondition), the rest must
/// not decrease. An empty report means the pair is ordered.
pub fn detection_report(a: &InvariantTuple, b: &InvariantTuple) -> Result<Vec<String>> {
    if a.n >= b.n {
        return Err(Error::Invalid(format!(
            "detection needs n to grow: {} vs {}",
            a.n, b.n
        )));
    }
    let av = a.as_array();
    let bv = b.as_array();
    let mut failing = Vec::new();
    for (i, name) in CHARACTERISTIC_NAMES.iter().enumerate() {
        if *name == "n" {
            continue;
        }
        if av[i] > bv[i] {
            failing.push(name.to_string());
        }
    }
    Ok(failing)
}

/// Detection report for two catalog cases, read off the stored rows.
pub fn detection_report_cases(a: &str, b: &str) -> Result<Vec<String>> {
    let row = |id: &str| -> Result<InvariantTuple> {
        for rec in main_cases()? {
            if rec.id == id {
                return rec
                    .stored
                    .ok_or_else(|| Error::Invalid(format!("case {} stores no tuple", id)));
            }
        }
        Err(Error::Invalid(format!("no catalog case {:?}", a)))
    };
    detection_report(&row(a)?, &row(b)?)
}

fn dot_node_id(id: &str) -> String {
    let mut out = String::from("c");
    for ch in id.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch);
        } else {
            out.push('_');
        }
    }
    out
}

/// Deterministic DOT text: nodes sorted by id, edges in sorted order, one
/// rank group per n value.
pub fn dot_export(h: &HasseDiagram) -> String {
    let mut out = String::new();
    out.push_str("digraph extensions {\n");
    out.push_str("  rankdir=BT;\n");
    out.push_str("  node [shape=box];\n");
    let mut nodes = h.nodes.clone();
    nodes.sort_by_key(|n| id_key(&n.id));
    for n in &nodes {
        out.push_str(&format!(
            "  {} [label=\"{}\"];\n",
            dot_node_id(&n.id),
            n.display
        ));
    }
    let mut groups: Vec<(ExtNat, Vec<String>)> = Vec::new();
    for n in &nodes {
        let key = n.tuple5[0];
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, ids)) => ids.push(dot_node_id(&n.id)),
            None => groups.push((key, vec![dot_node_id(&n.id)])),
        }
    }
    groups.sort_by_key(|(k, _)| *k);
    for (_, ids) in &groups {
        out.push_str(&format!("  {{ rank=same; {}; }}\n", ids.join("; ")));
    }
    let mut edges = h.edges.clone();
    edges.sort_by_key(|(s, t)| (id_key(s), id_key(t)));
    for (s, t) in &edges {
        let label = h
            .annotations
            .iter()
            .find(|(a, b, _)| a == s && b == t)
            .map(|(_, _, text)| format!(" [label=\"{}\"]", text))
            .unwrap_or_default();
        out.push_str(&format!(
            "  {} -> {}{};\n",
            dot_node_id(s),
            dot_node_id(t),
            label
        ));
    }
    out.push_str("}\n");
    out
}

/// The diagram as a JSON document with node profiles and the edge list.
pub fn edges_json(h: &HasseDiagram) -> String {
    let nodes: Vec<serde_json::Value> = h
        .nodes
        .iter()
        .map(|n| {
            serde_json::json!({
                "id": n.id,
                "display": n.display,
                "tuple5": n.tuple5.iter().map(|e| match e {
                    ExtNat::Fin(v) => serde_json::json!(v),
                    ExtNat::Inf => serde_json::json!("inf"),
                }).collect::<Vec<_>>(),
            })
        })
        .collect();
    let edges: Vec<serde_json::Value> = h
        .edges
        .iter()
        .map(|(s, t)| {
            let label = h
                .annotations
                .iter()
                .find(|(a, b, _)| a == s && b == t)
                .map(|(_, _, text)| text.clone());
            serde_json::json!({
                "source": s,
                "target": t,
                "label": label,
            })
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "nodes": nodes,
        "edges": edges,
    }))
    .expect("plain data serializes")
}
