//! Canonical text rendering for every parsed entity. The format is fixed:
//! two-space indent, one declaration per statement, the after-clause on
//! its own indented line under the delta header. Reparsing the output
//! yields a structurally equal value; original whitespace and comment
//! layout are not preserved.

use alloc::string::String;
use alloc::vec::Vec;

use core::fmt::Write;

use crate::annotative::{Annotated, AnnotatedComponentType};
use crate::model::{
    AocExpr, ComponentType, Connector, Delta, DeltaConfig, PortDecl, SubcomponentDecl,
};

pub fn unparse_architecture(c: &ComponentType) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "component {} {{", c.name);
    if c.autoconnect {
        out.push_str("  autoconnect port;\n");
    }
    for p in &c.ports {
        let _ = writeln!(out, "  port {};", port_decl(p));
    }
    for s in &c.subcomponents {
        let _ = writeln!(out, "  component {};", subcomponent_decl(s));
    }
    for conn in &c.connectors {
        let _ = writeln!(out, "  connect {};", connector(conn));
    }
    out.push_str("}\n");
    out
}

pub fn unparse_annotated(m: &AnnotatedComponentType) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "component {} {{", m.name);
    if m.autoconnect {
        out.push_str("  autoconnect port;\n");
    }
    for p in &m.ports {
        let _ = writeln!(out, "  port {}{};", stereotype(p), port_decl(&p.element));
    }
    for s in &m.subcomponents {
        let _ = writeln!(
            out,
            "  {}component {};",
            stereotype(s),
            subcomponent_decl(&s.element)
        );
    }
    for c in &m.connectors {
        let _ = writeln!(out, "  {}connect {};", stereotype(c), connector(&c.element));
    }
    out.push_str("}\n");
    out
}

pub fn unparse_delta(d: &Delta) -> String {
    let mut out = String::new();
    if d.aoc.is_true() {
        let _ = writeln!(out, "delta {} {{", d.name);
    } else {
        let _ = writeln!(out, "delta {} after", d.name);
        let _ = writeln!(out, "  {} {{", unparse_aoc(&d.aoc));
    }
    for block in &d.blocks {
        let _ = writeln!(out, "  modify component {} {{", block.component);
        for op in &block.ops {
            let _ = writeln!(out, "    {};", op);
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

pub fn unparse_config(c: &DeltaConfig) -> String {
    let mut out = String::new();
    if c.deltas.is_empty() {
        let _ = writeln!(out, "deltaconfig {} {{ }}", c.name);
        return out;
    }
    let _ = writeln!(out, "deltaconfig {} {{", c.name);
    for (i, d) in c.deltas.iter().enumerate() {
        let sep = if i + 1 < c.deltas.len() { "," } else { "" };
        let _ = writeln!(out, "  {}{}", d, sep);
    }
    out.push_str("}\n");
    out
}

/// Renders with the fewest parentheses that survive reparsing: `!` over
/// `&&` over `||`, all chains left-associated.
pub fn unparse_aoc(expr: &AocExpr) -> String {
    let mut out = String::new();
    // `True` nodes cannot be written in the grammar; fold them away first
    // (identity for anything that came out of the parser).
    render_aoc(&expr.simplified(), 0, &mut out);
    out
}

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_NOT: u8 = 3;

fn render_aoc(expr: &AocExpr, min_prec: u8, out: &mut String) {
    match expr {
        // Reachable only for a bare `True`; deltas with the neutral
        // constraint are rendered without an after-clause instead.
        AocExpr::True => out.push_str("()"),
        AocExpr::Name(n) => out.push_str(n),
        AocExpr::Not(e) => {
            if PREC_NOT < min_prec {
                out.push('(');
                out.push('!');
                render_aoc(e, PREC_NOT, out);
                out.push(')');
            } else {
                out.push('!');
                render_aoc(e, PREC_NOT, out);
            }
        }
        AocExpr::And(a, b) => render_binary(a, b, " && ", PREC_AND, min_prec, out),
        AocExpr::Or(a, b) => render_binary(a, b, " || ", PREC_OR, min_prec, out),
    }
}

fn render_binary(
    a: &AocExpr,
    b: &AocExpr,
    op: &str,
    prec: u8,
    min_prec: u8,
    out: &mut String,
) {
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    render_aoc(a, prec, out);
    out.push_str(op);
    // Parsing is left-associative, so a right-nested same-precedence child
    // needs parentheses to reparse into the same shape.
    render_aoc(b, prec + 1, out);
    if parens {
        out.push(')');
    }
}

fn port_decl(p: &PortDecl) -> String {
    let mut s = String::new();
    let _ = write!(s, "{} {} {}", p.direction, p.type_name, p.name);
    s
}

fn subcomponent_decl(d: &SubcomponentDecl) -> String {
    if d.instance_name == d.type_name {
        d.type_name.clone()
    } else {
        let mut s = String::new();
        let _ = write!(s, "{} {}", d.type_name, d.instance_name);
        s
    }
}

fn connector(c: &Connector) -> String {
    let mut s = String::new();
    let _ = write!(s, "{} -> {}", c.source, c.target);
    s
}

fn stereotype<T>(a: &Annotated<T>) -> String {
    if a.variants.is_empty() {
        return String::new();
    }
    let names: Vec<&str> = a.variants.iter().map(|v| v.as_str()).collect();
    let mut s = String::new();
    let _ = write!(s, "<<variant = \"{}\">> ", names.join(", "));
    s
}
