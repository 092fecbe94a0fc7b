//! DOT export of a delta model: the core and each delta become nodes, a
//! solid edge records that one delta may directly follow another (or the
//! core) in some valid application order of some configuration, and each
//! configuration appears as a dashed box linked to its member deltas.
//!
//! DOT clusters cannot overlap, so configurations sharing deltas are drawn
//! as dashed box nodes with undirected dashed membership edges instead of
//! enclosing regions.

use std::collections::BTreeSet;
use std::fmt::Write;

use deltarc_core::engine::compute_orders;
use deltarc_core::DeltaModel;

/// Escapes a string for use inside a double-quoted DOT id.
fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

pub fn family_dot(model: &DeltaModel, order_limit: usize) -> String {
    let mut succ: BTreeSet<(String, String)> = BTreeSet::new();
    for config in model.configs.values() {
        let orders = match compute_orders(model, config, order_limit) {
            Ok(o) => o,
            Err(_) => continue, // unordered configs contribute no edges
        };
        for order in &orders {
            if let Some(first) = order.first() {
                succ.insert(("core".to_owned(), first.clone()));
            }
            for pair in order.windows(2) {
                succ.insert((pair[0].clone(), pair[1].clone()));
            }
        }
    }

    let mut dot = String::new();
    let _ = writeln!(dot, "digraph productline {{");
    let _ = writeln!(dot, "  rankdir=LR;");
    let _ = writeln!(dot, "  core [shape=ellipse, style=bold, label={}];", quote(&model.core.name));
    for name in model.deltas.keys() {
        let _ = writeln!(dot, "  {} [shape=ellipse];", quote(name));
    }
    for (from, to) in &succ {
        let from_id = if from == "core" {
            "core".to_owned()
        } else {
            quote(from)
        };
        let _ = writeln!(dot, "  {} -> {};", from_id, quote(to));
    }
    for (name, config) in &model.configs {
        let id = quote(&format!("cfg {}", name));
        let _ = writeln!(
            dot,
            "  {} [shape=box, style=dashed, label={}];",
            id,
            quote(name)
        );
        if config.deltas.is_empty() {
            let _ = writeln!(dot, "  {} -> core [style=dashed, arrowhead=none];", id);
        }
        for delta in &config.deltas {
            let _ = writeln!(
                dot,
                "  {} -> {} [style=dashed, arrowhead=none];",
                id,
                quote(delta)
            );
        }
    }
    let _ = writeln!(dot, "}}");
    dot
}

#[cfg(test)]
mod tests {
    use super::*;
    use deltarc_core::model::{AocExpr, ComponentType, Delta, DeltaConfig, DeltaOp, ModifyBlock, PortDecl, Direction};

    fn model() -> DeltaModel {
        let core = ComponentType::new("Sys");
        let d = |name: &str, aoc: AocExpr| Delta {
            name: name.to_owned(),
            aoc,
            blocks: vec![ModifyBlock {
                component: "Sys".to_owned(),
                ops: vec![DeltaOp::AddPort(PortDecl::new(
                    Direction::In,
                    "T",
                    &name.to_lowercase(),
                ))],
            }],
        };
        DeltaModel::new(
            core,
            vec![d("DA", AocExpr::True), d("DB", AocExpr::name("DA"))],
            vec![
                DeltaConfig::new("Both", &["DA", "DB"]),
                DeltaConfig::new("Plain", &[]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn dot_lists_nodes_edges_and_config_boxes() {
        let dot = family_dot(&model(), 100);
        assert!(dot.starts_with("digraph productline {"));
        assert!(dot.contains("core [shape=ellipse, style=bold, label=\"Sys\"];"));
        assert!(dot.contains("\"DA\" [shape=ellipse];"));
        assert!(dot.contains("core -> \"DA\";"));
        assert!(dot.contains("\"DA\" -> \"DB\";"));
        // DB never directly follows the core: its constraint needs DA first.
        assert!(!dot.contains("core -> \"DB\";"));
        assert!(dot.contains("\"cfg Both\" [shape=box, style=dashed, label=\"Both\"];"));
        assert!(dot.contains("\"cfg Both\" -> \"DA\" [style=dashed, arrowhead=none];"));
        // The empty configuration hangs off the core.
        assert!(dot.contains("\"cfg Plain\" -> core [style=dashed, arrowhead=none];"));
    }

    #[test]
    fn dot_is_deterministic() {
        assert_eq!(family_dot(&model(), 100), family_dot(&model(), 100));
    }

    #[test]
    fn quoting_escapes_dot_metacharacters() {
        assert_eq!(quote(r#"a"b\c"#), r#""a\"b\\c""#);
    }
}
