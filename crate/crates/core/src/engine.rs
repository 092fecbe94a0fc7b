//! Delta application semantics: order computation from application order
//! constraints, stepwise delta application, autoconnect normalization,
//! well-formedness checking, structural comparison, and the confluence and
//! whole-family analyses built on top.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

#[cfg(feature = "serde")]
use serde::Serialize;

use crate::model::{
    AocExpr, ComponentType, Connector, ConnectorEnd, ConnectorOrigin, Delta, DeltaConfig,
    DeltaModel, DeltaOp, Direction, InvariantViolation, PortDecl,
};

/// A valid delta application order: a permutation of a configuration's
/// delta set whose constraints hold stepwise.
pub type ApplicationOrder = Vec<String>;

/// Interface declarations for subcomponent types, keyed by type name.
/// Subcomponent interfaces are not part of an architecture file; they are
/// provided separately and consulted for autoconnect matching and
/// connector type checking. Unknown types degrade gracefully (see
/// [`check_wellformed`]).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeEnv {
    map: BTreeMap<String, ComponentType>,
}

impl TypeEnv {
    pub fn new() -> Self {
        TypeEnv::default()
    }

    /// Keyed by the component's own name; returns a displaced declaration.
    pub fn insert(&mut self, c: ComponentType) -> Option<ComponentType> {
        self.map.insert(c.name.clone(), c)
    }

    pub fn get(&self, type_name: &str) -> Option<&ComponentType> {
        self.map.get(type_name)
    }

    pub fn contains(&self, type_name: &str) -> bool {
        self.map.contains_key(type_name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl FromIterator<ComponentType> for TypeEnv {
    fn from_iter<I: IntoIterator<Item = ComponentType>>(iter: I) -> Self {
        let mut env = TypeEnv::new();
        for c in iter {
            env.insert(c);
        }
        env
    }
}

/// `Name(n)` reads "delta n was applied before this one".
pub fn eval_aoc(expr: &AocExpr, applied: &BTreeSet<String>) -> bool {
    match expr {
        AocExpr::True => true,
        AocExpr::Name(n) => applied.contains(n),
        AocExpr::Not(e) => !eval_aoc(e, applied),
        AocExpr::And(a, b) => eval_aoc(a, applied) && eval_aoc(b, applied),
        AocExpr::Or(a, b) => eval_aoc(a, applied) || eval_aoc(b, applied),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum OrderError {
    UnknownDelta {
        config: String,
        delta: String,
    },
    /// No permutation satisfies the constraints; carries the longest
    /// stepwise-satisfiable prefix found while searching.
    NoValidOrder {
        config: String,
        max_prefix: Vec<String>,
    },
}

impl fmt::Display for OrderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderError::UnknownDelta { config, delta } => {
                write!(f, "configuration `{}` references unknown delta `{}`", config, delta)
            }
            OrderError::NoValidOrder { config, max_prefix } => {
                write!(
                    f,
                    "no valid application order for configuration `{}` (best prefix: [{}])",
                    config,
                    max_prefix.join(", ")
                )
            }
        }
    }
}

/// Enumerates up to `limit` valid application orders by backtracking,
/// trying candidates in lexicographic delta-name order — so the first
/// order is stable across runs and the full enumeration (large `limit`)
/// equals brute-force permutation filtering.
pub fn compute_orders(
    model: &DeltaModel,
    config: &DeltaConfig,
    limit: usize,
) -> Result<Vec<ApplicationOrder>, OrderError> {
    for d in &config.deltas {
        if !model.deltas.contains_key(d) {
            return Err(OrderError::UnknownDelta {
                config: config.name.clone(),
                delta: d.clone(),
            });
        }
    }

    let mut search = OrderSearch {
        model,
        limit,
        orders: Vec::new(),
        stack: Vec::new(),
        applied: BTreeSet::new(),
        best_prefix: Vec::new(),
    };
    let mut remaining: BTreeSet<String> = config.deltas.iter().cloned().collect();
    search.run(&mut remaining);

    if search.orders.is_empty() && limit > 0 {
        return Err(OrderError::NoValidOrder {
            config: config.name.clone(),
            max_prefix: search.best_prefix,
        });
    }
    Ok(search.orders)
}

struct OrderSearch<'a> {
    model: &'a DeltaModel,
    limit: usize,
    orders: Vec<ApplicationOrder>,
    stack: Vec<String>,
    applied: BTreeSet<String>,
    best_prefix: Vec<String>,
}

impl OrderSearch<'_> {
    fn run(&mut self, remaining: &mut BTreeSet<String>) {
        if self.stack.len() > self.best_prefix.len() {
            self.best_prefix = self.stack.clone();
        }
        if remaining.is_empty() {
            if self.orders.len() < self.limit {
                self.orders.push(self.stack.clone());
            }
            return;
        }
        let candidates: Vec<String> = remaining.iter().cloned().collect();
        for name in candidates {
            if self.orders.len() >= self.limit {
                return;
            }
            let delta = &self.model.deltas[&name];
            if !eval_aoc(&delta.aoc, &self.applied) {
                continue;
            }
            remaining.remove(&name);
            self.stack.push(name.clone());
            self.applied.insert(name.clone());
            self.run(remaining);
            self.applied.remove(&name);
            self.stack.pop();
            remaining.insert(name);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OpErrorKind {
    TargetNotFound,
    ElementExists,
    ElementMissing,
    ConnectorExists,
    ConnectorMissing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct OpError {
    pub kind: OpErrorKind,
    /// The element or connector the operation failed on.
    pub subject: String,
}

impl fmt::Display for OpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            OpErrorKind::TargetNotFound => "target component not found",
            OpErrorKind::ElementExists => "element already exists",
            OpErrorKind::ElementMissing => "element does not exist",
            OpErrorKind::ConnectorExists => "connector already exists",
            OpErrorKind::ConnectorMissing => "connector does not exist",
        };
        write!(f, "{}: `{}`", what, self.subject)
    }
}

/// Applies one operation to the top-level component, returning the new
/// architecture. Removing a port or subcomponent does not cascade to
/// connectors referencing it — deltas are expected to disconnect
/// explicitly, and dangling ends surface in [`check_wellformed`].
pub fn apply_op(
    arch: &ComponentType,
    target: &str,
    op: &DeltaOp,
) -> Result<ComponentType, OpError> {
    if target != arch.name {
        return Err(OpError {
            kind: OpErrorKind::TargetNotFound,
            subject: target.to_owned(),
        });
    }
    let mut next = arch.clone();
    match op {
        DeltaOp::AddPort(p) => {
            if next.find_port(&p.name).is_some() || next.find_subcomponent(&p.name).is_some() {
                return Err(OpError {
                    kind: OpErrorKind::ElementExists,
                    subject: p.name.clone(),
                });
            }
            next.ports.push(p.clone());
        }
        DeltaOp::RemovePort(name) => {
            let idx = next.ports.iter().position(|p| &p.name == name).ok_or(OpError {
                kind: OpErrorKind::ElementMissing,
                subject: name.clone(),
            })?;
            next.ports.remove(idx);
        }
        DeltaOp::AddSubcomponent(s) => {
            if next.find_subcomponent(&s.instance_name).is_some()
                || next.find_port(&s.instance_name).is_some()
            {
                return Err(OpError {
                    kind: OpErrorKind::ElementExists,
                    subject: s.instance_name.clone(),
                });
            }
            next.subcomponents.push(s.clone());
        }
        DeltaOp::RemoveSubcomponent(name) => {
            let idx = next
                .subcomponents
                .iter()
                .position(|s| &s.instance_name == name)
                .ok_or(OpError {
                    kind: OpErrorKind::ElementMissing,
                    subject: name.clone(),
                })?;
            next.subcomponents.remove(idx);
        }
        DeltaOp::ReplaceSubcomponent {
            instance_name,
            replacement,
        } => {
            let idx = next
                .subcomponents
                .iter()
                .position(|s| &s.instance_name == instance_name)
                .ok_or(OpError {
                    kind: OpErrorKind::ElementMissing,
                    subject: instance_name.clone(),
                })?;
            if replacement.instance_name != *instance_name {
                let collides = next.find_port(&replacement.instance_name).is_some()
                    || next.find_subcomponent(&replacement.instance_name).is_some();
                if collides {
                    return Err(OpError {
                        kind: OpErrorKind::ElementExists,
                        subject: replacement.instance_name.clone(),
                    });
                }
            }
            next.subcomponents[idx] = replacement.clone();
        }
        DeltaOp::Connect { source, target } => {
            if next.has_connector_pair(source, target) {
                return Err(OpError {
                    kind: OpErrorKind::ConnectorExists,
                    subject: format!("{} -> {}", source, target),
                });
            }
            next.connectors
                .push(Connector::explicit(source.clone(), target.clone()));
        }
        DeltaOp::Disconnect { source, target } => {
            let idx = next
                .connectors
                .iter()
                .position(|c| {
                    c.origin == ConnectorOrigin::Explicit
                        && &c.source == source
                        && &c.target == target
                })
                .ok_or(OpError {
                    kind: OpErrorKind::ConnectorMissing,
                    subject: format!("{} -> {}", source, target),
                })?;
            next.connectors.remove(idx);
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ApplyError {
    pub delta: String,
    /// Index of the modify block and of the operation within it.
    pub block: usize,
    pub op_index: usize,
    pub op: String,
    pub error: OpError,
}

impl fmt::Display for ApplyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "delta `{}`, op {} (`{}`): {}",
            self.delta, self.op_index, self.op, self.error
        )
    }
}

/// Applies all operations of a delta in listed order. The input is
/// untouched on error (the failed intermediate state is discarded).
pub fn apply_delta(arch: &ComponentType, delta: &Delta) -> Result<ComponentType, ApplyError> {
    let mut current = arch.clone();
    for (bi, block) in delta.blocks.iter().enumerate() {
        for (oi, op) in block.ops.iter().enumerate() {
            current = apply_op(&current, &block.component, op).map_err(|error| ApplyError {
                delta: delta.name.clone(),
                block: bi,
                op_index: oi,
                op: op.to_string(),
                error,
            })?;
        }
    }
    Ok(current)
}

/// An in-port that autoconnect could wire to more than one source.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct AutoconnectError {
    pub target: ConnectorEnd,
    pub candidates: Vec<ConnectorEnd>,
}

impl fmt::Display for AutoconnectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cands: Vec<String> = self.candidates.iter().map(|c| format!("{}", c)).collect();
        write!(
            f,
            "autoconnect is ambiguous for `{}`: candidate sources {}",
            self.target,
            cands.join(", ")
        )
    }
}

/// Synthesizes connectors for unconnected, name- and type-matched port
/// pairs when the architecture requests autoconnect. Legal flows:
/// outer-in → inner-in, inner-out → outer-out, inner-out → other-inner-in.
///
/// A receiving end is eligible while no connector targets it. A port that
/// is the source of an *explicit* connector is not used as an autoconnect
/// source: writing a connector redirects that port's data deliberately
/// (e.g. routing wheel pressure through an intermediate stage), and
/// matching it again would silently bypass the redirect. Fan-out among
/// synthesized connectors is still possible since autoconnect sources stay
/// eligible for several receivers.
///
/// Receivers are processed in (port name, owner name) lexicographic order;
/// subcomponents of unknown type contribute no ports. Idempotent.
pub fn resolve_autoconnect(
    arch: &ComponentType,
    env: &TypeEnv,
) -> Result<ComponentType, AutoconnectError> {
    if !arch.autoconnect {
        return Ok(arch.clone());
    }

    let explicit_sources: BTreeSet<&ConnectorEnd> = arch
        .connectors
        .iter()
        .filter(|c| c.origin == ConnectorOrigin::Explicit)
        .map(|c| &c.source)
        .collect();
    let occupied_targets: BTreeSet<&ConnectorEnd> =
        arch.connectors.iter().map(|c| &c.target).collect();

    // (sort key, end, type, owner) for each potential receiver.
    struct End {
        end: ConnectorEnd,
        type_name: String,
    }
    let mut receivers: Vec<End> = Vec::new();
    for p in &arch.ports {
        if p.direction == Direction::Out {
            receivers.push(End {
                end: ConnectorEnd::outer(&p.name),
                type_name: p.type_name.clone(),
            });
        }
    }
    for sub in &arch.subcomponents {
        if let Some(iface) = env.get(&sub.type_name) {
            for p in &iface.ports {
                if p.direction == Direction::In {
                    receivers.push(End {
                        end: ConnectorEnd::inner(&sub.instance_name, &p.name),
                        type_name: p.type_name.clone(),
                    });
                }
            }
        }
    }
    receivers.sort_by(|a, b| {
        (&a.end.port, &a.end.subcomponent).cmp(&(&b.end.port, &b.end.subcomponent))
    });

    let mut next = arch.clone();
    for r in receivers {
        if occupied_targets.contains(&r.end) {
            continue;
        }
        let mut candidates: Vec<ConnectorEnd> = Vec::new();
        match &r.end.subcomponent {
            // Outer out-port: fed by a matching inner out-port.
            None => {
                for sub in &arch.subcomponents {
                    if let Some(iface) = env.get(&sub.type_name) {
                        if let Some(p) = iface.find_port(&r.end.port) {
                            if p.direction == Direction::Out && p.type_name == r.type_name {
                                candidates
                                    .push(ConnectorEnd::inner(&sub.instance_name, &r.end.port));
                            }
                        }
                    }
                }
            }
            // Inner in-port: fed by a matching outer in-port or another
            // subcomponent's out-port.
            Some(owner) => {
                if let Some(p) = arch.find_port(&r.end.port) {
                    if p.direction == Direction::In && p.type_name == r.type_name {
                        candidates.push(ConnectorEnd::outer(&r.end.port));
                    }
                }
                for sub in &arch.subcomponents {
                    if &sub.instance_name == owner {
                        continue;
                    }
                    if let Some(iface) = env.get(&sub.type_name) {
                        if let Some(p) = iface.find_port(&r.end.port) {
                            if p.direction == Direction::Out && p.type_name == r.type_name {
                                candidates
                                    .push(ConnectorEnd::inner(&sub.instance_name, &r.end.port));
                            }
                        }
                    }
                }
            }
        }
        candidates.retain(|c| !explicit_sources.contains(c));
        candidates.sort();
        candidates.dedup();
        match candidates.len() {
            0 => {}
            1 => next.connectors.push(Connector {
                source: candidates.into_iter().next().unwrap(),
                target: r.end,
                origin: ConnectorOrigin::Autoconnect,
            }),
            _ => {
                return Err(AutoconnectError {
                    target: r.end,
                    candidates,
                })
            }
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum WfRule {
    UniqueNames,
    EndpointExists,
    DirectionOk,
    TypeCompatible,
    NoDuplicateConnector,
    /// Informational: a subcomponent's type has no interface declaration,
    /// so its connector ends cannot be fully checked.
    UnknownType,
}

impl fmt::Display for WfRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WfRule::UniqueNames => "UNIQUE_NAMES",
            WfRule::EndpointExists => "ENDPOINT_EXISTS",
            WfRule::DirectionOk => "DIRECTION_OK",
            WfRule::TypeCompatible => "TYPE_COMPATIBLE",
            WfRule::NoDuplicateConnector => "NO_DUPLICATE_CONNECTOR",
            WfRule::UnknownType => "UNKNOWN_TYPE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct WfIssue {
    pub rule: WfRule,
    pub element: String,
    pub message: String,
}

impl fmt::Display for WfIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.element, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct WellFormednessReport {
    pub violations: Vec<WfIssue>,
    /// UNKNOWN_TYPE notes; present in the report but not failures.
    pub infos: Vec<WfIssue>,
}

impl WellFormednessReport {
    pub fn is_wellformed(&self) -> bool {
        self.violations.is_empty()
    }
}

enum EndResolution<'a> {
    Port(&'a PortDecl, /*outer*/ bool),
    UnknownType,
    Missing(String),
}

fn resolve_end<'a>(
    arch: &'a ComponentType,
    env: &'a TypeEnv,
    end: &ConnectorEnd,
) -> EndResolution<'a> {
    match &end.subcomponent {
        None => match arch.find_port(&end.port) {
            Some(p) => EndResolution::Port(p, true),
            None => EndResolution::Missing(format!("no port `{}`", end.port)),
        },
        Some(sub) => match arch.find_subcomponent(sub) {
            None => EndResolution::Missing(format!("no subcomponent `{}`", sub)),
            Some(decl) => match env.get(&decl.type_name) {
                None => EndResolution::UnknownType,
                Some(iface) => match iface.find_port(&end.port) {
                    Some(p) => EndResolution::Port(p, false),
                    None => EndResolution::Missing(format!(
                        "type `{}` of `{}` has no port `{}`",
                        decl.type_name, sub, end.port
                    )),
                },
            },
        },
    }
}

/// Checks a normalized architecture against the well-formedness rules.
/// Subcomponent interfaces come from `env`; unknown types are reported as
/// informational UNKNOWN_TYPE entries and their connector ends are skipped
/// rather than failed.
pub fn check_wellformed(arch: &ComponentType, env: &TypeEnv) -> WellFormednessReport {
    let mut report = WellFormednessReport::default();

    for v in arch.check_local_invariants() {
        let element = match &v {
            InvariantViolation::DuplicatePortName(n)
            | InvariantViolation::DuplicateSubcomponentName(n)
            | InvariantViolation::PortSubcomponentClash(n) => n.clone(),
            InvariantViolation::SelfLoopConnector(c) => format!("{}", c),
            InvariantViolation::InvalidIdentifier { value, .. } => value.clone(),
            InvariantViolation::ReservedVariantName(n) => n.clone(),
        };
        report.violations.push(WfIssue {
            rule: WfRule::UniqueNames,
            element,
            message: format!("{}", v),
        });
    }

    let mut unknown_types: BTreeSet<&str> = BTreeSet::new();
    for sub in &arch.subcomponents {
        if !env.contains(&sub.type_name) {
            unknown_types.insert(&sub.type_name);
        }
    }
    for t in &unknown_types {
        report.infos.push(WfIssue {
            rule: WfRule::UnknownType,
            element: (*t).to_owned(),
            message: format!(
                "no interface declaration for type `{}`; its connectors are not fully checked",
                t
            ),
        });
    }

    for c in &arch.connectors {
        let display = format!("{}", c);
        let src = resolve_end(arch, env, &c.source);
        let tgt = resolve_end(arch, env, &c.target);

        for (res, role) in [(&src, "source"), (&tgt, "target")] {
            if let EndResolution::Missing(why) = res {
                report.violations.push(WfIssue {
                    rule: WfRule::EndpointExists,
                    element: display.clone(),
                    message: format!("{} does not resolve: {}", role, why),
                });
            }
        }

        if let (EndResolution::Port(sp, s_outer), EndResolution::Port(tp, t_outer)) = (&src, &tgt)
        {
            let source_ok = (*s_outer && sp.direction == Direction::In)
                || (!*s_outer && sp.direction == Direction::Out);
            let target_ok = (*t_outer && tp.direction == Direction::Out)
                || (!*t_outer && tp.direction == Direction::In);
            if !source_ok || !target_ok {
                report.violations.push(WfIssue {
                    rule: WfRule::DirectionOk,
                    element: display.clone(),
                    message: format!(
                        "illegal flow: {} {} -> {} {}",
                        if *s_outer { "outer" } else { "inner" },
                        sp.direction,
                        if *t_outer { "outer" } else { "inner" },
                        tp.direction
                    ),
                });
            }
            if sp.type_name != tp.type_name {
                report.violations.push(WfIssue {
                    rule: WfRule::TypeCompatible,
                    element: display.clone(),
                    message: format!(
                        "source type `{}` does not match target type `{}`",
                        sp.type_name, tp.type_name
                    ),
                });
            }
        }
    }

    let mut seen: BTreeMap<(&ConnectorEnd, &ConnectorEnd), usize> = BTreeMap::new();
    for c in &arch.connectors {
        *seen.entry(c.pair()).or_insert(0) += 1;
    }
    for ((s, t), count) in seen {
        if count > 1 {
            report.violations.push(WfIssue {
                rule: WfRule::NoDuplicateConnector,
                element: format!("{} -> {}", s, t),
                message: format!("connector appears {} times", count),
            });
        }
    }

    report
}

/// Order-insensitive difference between two architectures. Connectors are
/// compared as source→target pairs, ignoring how they came to be
/// (explicit vs. autoconnect) — compare normalized forms when that
/// distinction matters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct StructuralDiff {
    pub name_a: Option<String>,
    pub name_b: Option<String>,
    pub autoconnect_differs: bool,
    pub ports_only_in_a: Vec<PortDecl>,
    pub ports_only_in_b: Vec<PortDecl>,
    pub subcomponents_only_in_a: Vec<String>,
    pub subcomponents_only_in_b: Vec<String>,
    pub connectors_only_in_a: Vec<String>,
    pub connectors_only_in_b: Vec<String>,
}

impl StructuralDiff {
    pub fn is_empty(&self) -> bool {
        self.name_a.is_none()
            && !self.autoconnect_differs
            && self.ports_only_in_a.is_empty()
            && self.ports_only_in_b.is_empty()
            && self.subcomponents_only_in_a.is_empty()
            && self.subcomponents_only_in_b.is_empty()
            && self.connectors_only_in_a.is_empty()
            && self.connectors_only_in_b.is_empty()
    }
}

impl fmt::Display for StructuralDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("structurally equal");
        }
        if let (Some(a), Some(b)) = (&self.name_a, &self.name_b) {
            write!(f, "name: `{}` vs `{}`; ", a, b)?;
        }
        if self.autoconnect_differs {
            f.write_str("autoconnect flag differs; ")?;
        }
        let mut section = |label: &str, items: &[String]| -> fmt::Result {
            if !items.is_empty() {
                write!(f, "{}: {}; ", label, items.join(", "))
            } else {
                Ok(())
            }
        };
        let fmt_ports = |ps: &[PortDecl]| -> Vec<String> {
            ps.iter()
                .map(|p| format!("{} {} {}", p.direction, p.type_name, p.name))
                .collect()
        };
        section("ports only left", &fmt_ports(&self.ports_only_in_a))?;
        section("ports only right", &fmt_ports(&self.ports_only_in_b))?;
        section("subcomponents only left", &self.subcomponents_only_in_a)?;
        section("subcomponents only right", &self.subcomponents_only_in_b)?;
        section("connectors only left", &self.connectors_only_in_a)?;
        section("connectors only right", &self.connectors_only_in_b)?;
        Ok(())
    }
}

pub fn structural_diff(a: &ComponentType, b: &ComponentType) -> StructuralDiff {
    let mut diff = StructuralDiff::default();
    if a.name != b.name {
        diff.name_a = Some(a.name.clone());
        diff.name_b = Some(b.name.clone());
    }
    diff.autoconnect_differs = a.autoconnect != b.autoconnect;

    let pa: BTreeSet<&PortDecl> = a.ports.iter().collect();
    let pb: BTreeSet<&PortDecl> = b.ports.iter().collect();
    diff.ports_only_in_a = pa.difference(&pb).map(|p| (*p).clone()).collect();
    diff.ports_only_in_b = pb.difference(&pa).map(|p| (*p).clone()).collect();

    let sa: BTreeSet<(&str, &str)> = a
        .subcomponents
        .iter()
        .map(|s| (s.type_name.as_str(), s.instance_name.as_str()))
        .collect();
    let sb: BTreeSet<(&str, &str)> = b
        .subcomponents
        .iter()
        .map(|s| (s.type_name.as_str(), s.instance_name.as_str()))
        .collect();
    diff.subcomponents_only_in_a = sa
        .difference(&sb)
        .map(|(t, i)| format!("{} {}", t, i))
        .collect();
    diff.subcomponents_only_in_b = sb
        .difference(&sa)
        .map(|(t, i)| format!("{} {}", t, i))
        .collect();

    let ca: BTreeSet<(&ConnectorEnd, &ConnectorEnd)> = a.connectors.iter().map(|c| c.pair()).collect();
    let cb: BTreeSet<(&ConnectorEnd, &ConnectorEnd)> = b.connectors.iter().map(|c| c.pair()).collect();
    diff.connectors_only_in_a = ca
        .difference(&cb)
        .map(|(s, t)| format!("{} -> {}", s, t))
        .collect();
    diff.connectors_only_in_b = cb
        .difference(&ca)
        .map(|(s, t)| format!("{} -> {}", s, t))
        .collect();
    diff
}

/// Equality up to element order and connector origin.
pub fn structural_equal(a: &ComponentType, b: &ComponentType) -> bool {
    structural_diff(a, b).is_empty()
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct GeneratedVariant {
    pub config: String,
    pub order: ApplicationOrder,
    /// Result of delta application, before autoconnect resolution.
    pub raw: ComponentType,
    /// With synthesized connectors; this is what gets written out and
    /// compared across representations.
    pub normalized: ComponentType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum GenerateError {
    Order(OrderError),
    Apply(ApplyError),
    Autoconnect(AutoconnectError),
    IllFormed {
        config: String,
        report: WellFormednessReport,
    },
}

impl fmt::Display for GenerateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenerateError::Order(e) => write!(f, "{}", e),
            GenerateError::Apply(e) => write!(f, "{}", e),
            GenerateError::Autoconnect(e) => write!(f, "{}", e),
            GenerateError::IllFormed { config, report } => {
                write!(
                    f,
                    "variant of configuration `{}` is not well-formed ({} violations)",
                    config,
                    report.violations.len()
                )
            }
        }
    }
}

impl From<OrderError> for GenerateError {
    fn from(e: OrderError) -> Self {
        GenerateError::Order(e)
    }
}

impl From<ApplyError> for GenerateError {
    fn from(e: ApplyError) -> Self {
        GenerateError::Apply(e)
    }
}

impl From<AutoconnectError> for GenerateError {
    fn from(e: AutoconnectError) -> Self {
        GenerateError::Autoconnect(e)
    }
}

fn apply_order(
    model: &DeltaModel,
    order: &[String],
) -> Result<ComponentType, ApplyError> {
    let mut arch = model.core.clone();
    for name in order {
        arch = apply_delta(&arch, &model.deltas[name])?;
    }
    Ok(arch)
}

/// Generates the configuration's variant: applies the first valid order to
/// the core, resolves autoconnect, and requires the result well-formed.
pub fn generate_variant(
    model: &DeltaModel,
    config: &DeltaConfig,
    env: &TypeEnv,
) -> Result<GeneratedVariant, GenerateError> {
    let orders = compute_orders(model, config, 1)?;
    let order = orders.into_iter().next().unwrap_or_default();
    let raw = apply_order(model, &order)?;
    let normalized = resolve_autoconnect(&raw, env)?;
    let report = check_wellformed(&normalized, env);
    if !report.is_wellformed() {
        return Err(GenerateError::IllFormed {
            config: config.name.clone(),
            report,
        });
    }
    Ok(GeneratedVariant {
        config: config.name.clone(),
        order,
        raw,
        normalized,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct PrunedOrder {
    pub order: ApplicationOrder,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ConfluenceWitness {
    pub order_a: ApplicationOrder,
    pub order_b: ApplicationOrder,
    pub diff: StructuralDiff,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ConfluenceReport {
    pub config: String,
    /// Valid orders enumerated (capped by the caller's limit).
    pub orders_enumerated: usize,
    /// Orders that generated a variant; orders failing application or
    /// normalization are pruned and listed, not counted as divergence.
    pub generated: usize,
    pub pruned: Vec<PrunedOrder>,
    pub confluent: bool,
    pub witness: Option<ConfluenceWitness>,
}

/// Generates the variant under up to `limit` valid orders and compares
/// the normalized results pairwise.
pub fn check_confluence(
    model: &DeltaModel,
    config: &DeltaConfig,
    env: &TypeEnv,
    limit: usize,
) -> Result<ConfluenceReport, GenerateError> {
    let orders = compute_orders(model, config, limit)?;
    let orders_enumerated = orders.len();
    let mut produced: Vec<(ApplicationOrder, ComponentType)> = Vec::new();
    let mut pruned = Vec::new();
    let mut first_error: Option<GenerateError> = None;

    for order in orders {
        let outcome = apply_order(model, &order)
            .map_err(GenerateError::from)
            .and_then(|raw| resolve_autoconnect(&raw, env).map_err(GenerateError::from));
        match outcome {
            Ok(normalized) => produced.push((order, normalized)),
            Err(e) => {
                pruned.push(PrunedOrder {
                    order,
                    reason: format!("{}", e),
                });
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }

    if produced.is_empty() {
        // Zero orders is already an error above; here every order failed.
        return Err(first_error.expect("at least one order was enumerated"));
    }

    let (first_order, first_variant) = &produced[0];
    let mut witness = None;
    for (order, variant) in &produced[1..] {
        let diff = structural_diff(first_variant, variant);
        if !diff.is_empty() {
            witness = Some(ConfluenceWitness {
                order_a: first_order.clone(),
                order_b: order.clone(),
                diff,
            });
            break;
        }
    }

    Ok(ConfluenceReport {
        config: config.name.clone(),
        orders_enumerated,
        generated: produced.len(),
        pruned,
        confluent: witness.is_none(),
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ConfigReport {
    pub config: String,
    pub order_count: usize,
    /// True when enumeration stopped at the limit; more orders may exist.
    pub order_count_capped: bool,
    pub generated: bool,
    pub error: Option<String>,
    pub wellformed: Option<bool>,
    pub violations: usize,
    pub confluent: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct AocReference {
    pub delta: String,
    pub referenced: String,
}

/// Strict-mode finding: a configuration contains a delta together with a
/// delta its constraint negates. Under precedence semantics this merely
/// forces an order; under conflict semantics it would be contradictory.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ConflictFinding {
    pub config: String,
    pub delta: String,
    pub negated: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct FamilySummary {
    pub configs: Vec<ConfigReport>,
    /// Deltas used by no configuration.
    pub redundant_deltas: Vec<String>,
    /// AOC literals that name deltas absent from every configuration.
    pub unused_aoc_references: Vec<AocReference>,
    pub conflicts: Vec<ConflictFinding>,
}

impl FamilySummary {
    pub fn all_ok(&self) -> bool {
        self.configs
            .iter()
            .all(|c| c.generated && c.wellformed == Some(true) && c.confluent == Some(true))
    }
}

/// Exhaustive per-configuration analysis: order count, generation,
/// well-formedness and confluence per config (rows sorted by name), plus
/// model-level diagnostics. `strict` additionally lints configurations
/// that contain a delta alongside one its AOC negates.
pub fn check_family(
    model: &DeltaModel,
    env: &TypeEnv,
    limit: usize,
    strict: bool,
) -> FamilySummary {
    let mut configs = Vec::new();
    for (name, config) in &model.configs {
        let row = match compute_orders(model, config, limit) {
            Err(e) => ConfigReport {
                config: name.clone(),
                order_count: 0,
                order_count_capped: false,
                generated: false,
                error: Some(format!("{}", e)),
                wellformed: None,
                violations: 0,
                confluent: None,
            },
            Ok(orders) => {
                let order_count = orders.len();
                let capped = order_count == limit;
                match apply_order(model, &orders[0])
                    .map_err(GenerateError::from)
                    .and_then(|raw| resolve_autoconnect(&raw, env).map_err(GenerateError::from))
                {
                    Err(e) => ConfigReport {
                        config: name.clone(),
                        order_count,
                        order_count_capped: capped,
                        generated: false,
                        error: Some(format!("{}", e)),
                        wellformed: None,
                        violations: 0,
                        confluent: None,
                    },
                    Ok(normalized) => {
                        let report = check_wellformed(&normalized, env);
                        let confluent = check_confluence(model, config, env, limit)
                            .ok()
                            .map(|r| r.confluent);
                        ConfigReport {
                            config: name.clone(),
                            order_count,
                            order_count_capped: capped,
                            generated: true,
                            error: None,
                            wellformed: Some(report.is_wellformed()),
                            violations: report.violations.len(),
                            confluent,
                        }
                    }
                }
            }
        };
        configs.push(row);
    }

    let used: BTreeSet<&str> = model
        .configs
        .values()
        .flat_map(|c| c.deltas.iter().map(String::as_str))
        .collect();

    let mut unused_aoc_references = Vec::new();
    for (name, delta) in &model.deltas {
        for referenced in delta.aoc.names() {
            if !used.contains(referenced) {
                unused_aoc_references.push(AocReference {
                    delta: name.clone(),
                    referenced: referenced.to_owned(),
                });
            }
        }
    }

    let mut conflicts = Vec::new();
    if strict {
        for (cname, config) in &model.configs {
            let members: BTreeSet<&str> = config.deltas.iter().map(String::as_str).collect();
            for d in &config.deltas {
                for negated in model.deltas[d].aoc.negated_names() {
                    if members.contains(negated) {
                        conflicts.push(ConflictFinding {
                            config: cname.clone(),
                            delta: d.clone(),
                            negated: negated.to_owned(),
                        });
                    }
                }
            }
        }
    }

    FamilySummary {
        configs,
        redundant_deltas: model
            .unused_deltas()
            .into_iter()
            .map(|s| s.to_owned())
            .collect(),
        unused_aoc_references,
        conflicts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SubcomponentDecl;
    use alloc::vec;

    fn applied(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|n| (*n).to_owned()).collect()
    }

    #[test]
    fn aoc_evaluation() {
        let e = AocExpr::and(
            AocExpr::name("DABS"),
            AocExpr::not(AocExpr::name("DTW")),
        );
        assert!(eval_aoc(&e, &applied(&["DABS"])));
        assert!(!eval_aoc(&e, &applied(&["DABS", "DTW"])));
        assert!(!eval_aoc(&e, &applied(&[])));
        assert!(eval_aoc(&AocExpr::True, &applied(&[])));
        let or = AocExpr::or(AocExpr::name("A"), AocExpr::name("B"));
        assert!(eval_aoc(&or, &applied(&["B"])));
    }

    fn delta(name: &str, aoc: AocExpr, ops: Vec<DeltaOp>) -> Delta {
        Delta {
            name: name.to_owned(),
            aoc,
            blocks: vec![crate::model::ModifyBlock {
                component: "Sys".to_owned(),
                ops,
            }],
        }
    }

    fn add_port(name: &str) -> DeltaOp {
        DeltaOp::AddPort(PortDecl::new(Direction::In, "T", name))
    }

    fn core() -> ComponentType {
        let mut c = ComponentType::new("Sys");
        c.ports.push(PortDecl::new(Direction::In, "T", "base"));
        c
    }

    fn chain_model() -> DeltaModel {
        // DB after DA; DC after DB && !DX; DX free — a small model with
        // chained ordering constraints.
        DeltaModel::new(
            core(),
            vec![
                delta("DA", AocExpr::True, vec![add_port("pa")]),
                delta("DB", AocExpr::name("DA"), vec![add_port("pb")]),
                delta(
                    "DC",
                    AocExpr::and(AocExpr::name("DB"), AocExpr::not(AocExpr::name("DX"))),
                    vec![add_port("pc")],
                ),
                delta("DX", AocExpr::True, vec![add_port("px")]),
            ],
            vec![
                DeltaConfig::new("All", &["DA", "DB", "DC", "DX"]),
                DeltaConfig::new("Pair", &["DA", "DB"]),
                DeltaConfig::new("Empty", &[]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn orders_single_chain() {
        let m = chain_model();
        let orders = compute_orders(&m, &m.configs["Pair"], usize::MAX).unwrap();
        assert_eq!(orders, vec![vec!["DA".to_owned(), "DB".to_owned()]]);
    }

    #[test]
    fn orders_with_negation_force_late_application() {
        let m = chain_model();
        let orders = compute_orders(&m, &m.configs["All"], usize::MAX).unwrap();
        // DC must come after DB but before DX.
        for o in &orders {
            let pos = |n: &str| o.iter().position(|d| d == n).unwrap();
            assert!(pos("DA") < pos("DB"));
            assert!(pos("DB") < pos("DC"));
            assert!(pos("DC") < pos("DX"));
        }
        assert_eq!(orders.len(), 1);
        assert_eq!(orders[0], vec!["DA", "DB", "DC", "DX"]);
    }

    #[test]
    fn empty_config_has_the_empty_order() {
        let m = chain_model();
        let orders = compute_orders(&m, &m.configs["Empty"], usize::MAX).unwrap();
        assert_eq!(orders, vec![Vec::<String>::new()]);
    }

    #[test]
    fn limit_caps_enumeration_deterministically() {
        let m = DeltaModel::new(
            core(),
            vec![
                delta("D1", AocExpr::True, vec![add_port("p1")]),
                delta("D2", AocExpr::True, vec![add_port("p2")]),
                delta("D3", AocExpr::True, vec![add_port("p3")]),
            ],
            vec![DeltaConfig::new("C", &["D1", "D2", "D3"])],
        )
        .unwrap();
        let all = compute_orders(&m, &m.configs["C"], usize::MAX).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec!["D1", "D2", "D3"]); // lexicographic first
        let two = compute_orders(&m, &m.configs["C"], 2).unwrap();
        assert_eq!(two.as_slice(), &all[..2]);
    }

    #[test]
    fn no_valid_order_reports_best_prefix() {
        // DB needs DA, DA needs DB: unsatisfiable together with a free DC.
        let m = DeltaModel::new(
            core(),
            vec![
                delta("DA", AocExpr::name("DB"), vec![add_port("pa")]),
                delta("DB", AocExpr::name("DA"), vec![add_port("pb")]),
                delta("DC", AocExpr::True, vec![add_port("pc")]),
            ],
            vec![DeltaConfig::new("C", &["DA", "DB", "DC"])],
        )
        .unwrap();
        let err = compute_orders(&m, &m.configs["C"], usize::MAX).unwrap_err();
        match err {
            OrderError::NoValidOrder { config, max_prefix } => {
                assert_eq!(config, "C");
                assert_eq!(max_prefix, vec!["DC"]);
            }
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn unknown_delta_in_foreign_config() {
        let m = chain_model();
        let foreign = DeltaConfig::new("F", &["DGhost"]);
        assert!(matches!(
            compute_orders(&m, &foreign, 1),
            Err(OrderError::UnknownDelta { .. })
        ));
    }

    #[test]
    fn apply_op_add_remove_port() {
        let c = core();
        let added = apply_op(&c, "Sys", &add_port("p")).unwrap();
        assert!(added.find_port("p").is_some());
        let err = apply_op(&added, "Sys", &add_port("p")).unwrap_err();
        assert_eq!(err.kind, OpErrorKind::ElementExists);
        let removed = apply_op(&added, "Sys", &DeltaOp::RemovePort("p".to_owned())).unwrap();
        assert!(structural_equal(&removed, &c));
        let err = apply_op(&c, "Sys", &DeltaOp::RemovePort("nosuch".to_owned())).unwrap_err();
        assert_eq!(err.kind, OpErrorKind::ElementMissing);
    }

    #[test]
    fn apply_op_target_must_match() {
        let err = apply_op(&core(), "Other", &add_port("p")).unwrap_err();
        assert_eq!(err.kind, OpErrorKind::TargetNotFound);
    }

    #[test]
    fn apply_op_replace_preserves_position_and_is_repeatable() {
        let mut c = core();
        c.subcomponents
            .push(SubcomponentDecl::new("PressureCalculator", "brakefunction"));
        c.subcomponents.push(SubcomponentDecl::new("Other", "o"));
        let replace = DeltaOp::ReplaceSubcomponent {
            instance_name: "brakefunction".to_owned(),
            replacement: SubcomponentDecl::new("ABS", "brakefunction"),
        };
        let once = apply_op(&c, "Sys", &replace).unwrap();
        assert_eq!(once.subcomponents[0].type_name, "ABS");
        assert_eq!(once.subcomponents[1].instance_name, "o");
        // Replace is keyed by instance name, so reapplying succeeds and is
        // the identity.
        let twice = apply_op(&once, "Sys", &replace).unwrap();
        assert!(structural_equal(&once, &twice));
    }

    #[test]
    fn apply_op_replace_collision_detected() {
        let mut c = core();
        c.subcomponents.push(SubcomponentDecl::new("A", "x"));
        c.subcomponents.push(SubcomponentDecl::new("B", "y"));
        let err = apply_op(
            &c,
            "Sys",
            &DeltaOp::ReplaceSubcomponent {
                instance_name: "x".to_owned(),
                replacement: SubcomponentDecl::new("C", "y"),
            },
        )
        .unwrap_err();
        assert_eq!(err.kind, OpErrorKind::ElementExists);
    }

    #[test]
    fn apply_op_connect_disconnect() {
        let mut c = core();
        c.subcomponents.push(SubcomponentDecl::new("S", "s"));
        let connect = DeltaOp::Connect {
            source: ConnectorEnd::outer("base"),
            target: ConnectorEnd::inner("s", "base"),
        };
        let connected = apply_op(&c, "Sys", &connect).unwrap();
        assert_eq!(connected.connectors.len(), 1);
        let err = apply_op(&connected, "Sys", &connect).unwrap_err();
        assert_eq!(err.kind, OpErrorKind::ConnectorExists);
        let disconnect = DeltaOp::Disconnect {
            source: ConnectorEnd::outer("base"),
            target: ConnectorEnd::inner("s", "base"),
        };
        let back = apply_op(&connected, "Sys", &disconnect).unwrap();
        assert!(structural_equal(&back, &c));
        let err = apply_op(&c, "Sys", &disconnect).unwrap_err();
        assert_eq!(err.kind, OpErrorKind::ConnectorMissing);
    }

    #[test]
    fn disconnect_does_not_remove_autoconnect_connectors() {
        let mut c = core();
        c.connectors.push(Connector {
            source: ConnectorEnd::outer("base"),
            target: ConnectorEnd::inner("s", "base"),
            origin: ConnectorOrigin::Autoconnect,
        });
        let err = apply_op(
            &c,
            "Sys",
            &DeltaOp::Disconnect {
                source: ConnectorEnd::outer("base"),
                target: ConnectorEnd::inner("s", "base"),
            },
        )
        .unwrap_err();
        assert_eq!(err.kind, OpErrorKind::ConnectorMissing);
    }

    #[test]
    fn apply_delta_reports_failing_op_position() {
        let d = delta(
            "DBad",
            AocExpr::True,
            vec![add_port("ok"), DeltaOp::RemovePort("ghost".to_owned())],
        );
        let input = core();
        let err = apply_delta(&input, &d).unwrap_err();
        assert_eq!(err.delta, "DBad");
        assert_eq!((err.block, err.op_index), (0, 1));
        assert_eq!(err.error.kind, OpErrorKind::ElementMissing);
        // Input is untouched regardless of the partial progress inside.
        assert_eq!(input, core());
    }

    fn autoconnect_fixture() -> (ComponentType, TypeEnv) {
        // Outer: in data, out result; inner calc has the matching ports.
        let mut outer = ComponentType::new("Outer");
        outer.autoconnect = true;
        outer.ports.push(PortDecl::new(Direction::In, "D", "data"));
        outer
            .ports
            .push(PortDecl::new(Direction::Out, "R", "result"));
        outer
            .subcomponents
            .push(SubcomponentDecl::new("Calc", "calc"));

        let mut calc = ComponentType::new("Calc");
        calc.ports.push(PortDecl::new(Direction::In, "D", "data"));
        calc.ports
            .push(PortDecl::new(Direction::Out, "R", "result"));
        let env: TypeEnv = [calc].into_iter().collect();
        (outer, env)
    }

    #[test]
    fn autoconnect_wires_outer_and_inner_ports() {
        let (outer, env) = autoconnect_fixture();
        let n = resolve_autoconnect(&outer, &env).unwrap();
        assert_eq!(n.connectors.len(), 2);
        assert!(n
            .connectors
            .iter()
            .all(|c| c.origin == ConnectorOrigin::Autoconnect));
        assert!(n.has_connector_pair(
            &ConnectorEnd::outer("data"),
            &ConnectorEnd::inner("calc", "data")
        ));
        assert!(n.has_connector_pair(
            &ConnectorEnd::inner("calc", "result"),
            &ConnectorEnd::outer("result")
        ));
        assert!(check_wellformed(&n, &env).is_wellformed());
    }

    #[test]
    fn autoconnect_is_idempotent_and_respects_flag() {
        let (outer, env) = autoconnect_fixture();
        let once = resolve_autoconnect(&outer, &env).unwrap();
        let twice = resolve_autoconnect(&once, &env).unwrap();
        assert_eq!(once, twice);

        let mut off = outer.clone();
        off.autoconnect = false;
        assert_eq!(resolve_autoconnect(&off, &env).unwrap(), off);
    }

    #[test]
    fn autoconnect_requires_matching_type() {
        let (mut outer, env) = autoconnect_fixture();
        outer.ports[0].type_name = "Mismatch".to_owned();
        let n = resolve_autoconnect(&outer, &env).unwrap();
        assert!(!n.has_connector_pair(
            &ConnectorEnd::outer("data"),
            &ConnectorEnd::inner("calc", "data")
        ));
    }

    #[test]
    fn autoconnect_between_subcomponents() {
        let mut outer = ComponentType::new("Outer");
        outer.autoconnect = true;
        outer.subcomponents.push(SubcomponentDecl::new("Prod", "prod"));
        outer.subcomponents.push(SubcomponentDecl::new("Cons", "cons"));
        let mut prod = ComponentType::new("Prod");
        prod.ports.push(PortDecl::new(Direction::Out, "D", "item"));
        let mut cons = ComponentType::new("Cons");
        cons.ports.push(PortDecl::new(Direction::In, "D", "item"));
        let env: TypeEnv = [prod, cons].into_iter().collect();
        let n = resolve_autoconnect(&outer, &env).unwrap();
        assert!(n.has_connector_pair(
            &ConnectorEnd::inner("prod", "item"),
            &ConnectorEnd::inner("cons", "item")
        ));
    }

    #[test]
    fn autoconnect_ambiguity_is_an_error() {
        let mut outer = ComponentType::new("Outer");
        outer.autoconnect = true;
        outer.ports.push(PortDecl::new(Direction::Out, "R", "result"));
        outer.subcomponents.push(SubcomponentDecl::new("Calc", "a"));
        outer.subcomponents.push(SubcomponentDecl::new("Calc", "b"));
        let mut calc = ComponentType::new("Calc");
        calc.ports.push(PortDecl::new(Direction::Out, "R", "result"));
        let env: TypeEnv = [calc].into_iter().collect();
        let err = resolve_autoconnect(&outer, &env).unwrap_err();
        assert_eq!(err.target, ConnectorEnd::outer("result"));
        assert_eq!(err.candidates.len(), 2);
    }

    #[test]
    fn explicit_source_is_not_reused_by_autoconnect() {
        // calc.result is explicitly routed into post.stage; the outer
        // result port must then be fed by post, not directly by calc.
        let (mut outer, _) = autoconnect_fixture();
        outer.subcomponents.push(SubcomponentDecl::new("Post", "post"));
        outer.connectors.push(Connector::explicit(
            ConnectorEnd::inner("calc", "result"),
            ConnectorEnd::inner("post", "stage"),
        ));
        let mut calc = ComponentType::new("Calc");
        calc.ports.push(PortDecl::new(Direction::In, "D", "data"));
        calc.ports.push(PortDecl::new(Direction::Out, "R", "result"));
        let mut post = ComponentType::new("Post");
        post.ports.push(PortDecl::new(Direction::In, "R", "stage"));
        post.ports.push(PortDecl::new(Direction::Out, "R", "result"));
        let env: TypeEnv = [calc, post].into_iter().collect();

        let n = resolve_autoconnect(&outer, &env).unwrap();
        assert!(n.has_connector_pair(
            &ConnectorEnd::inner("post", "result"),
            &ConnectorEnd::outer("result")
        ));
        assert!(!n.has_connector_pair(
            &ConnectorEnd::inner("calc", "result"),
            &ConnectorEnd::outer("result")
        ));
    }

    #[test]
    fn autoconnect_skips_unknown_types_silently() {
        let (mut outer, env) = autoconnect_fixture();
        outer
            .subcomponents
            .push(SubcomponentDecl::new("Mystery", "m"));
        let n = resolve_autoconnect(&outer, &env).unwrap();
        assert_eq!(n.connectors.len(), 2);
    }

    #[test]
    fn wellformedness_flags_each_rule() {
        let (outer, env) = autoconnect_fixture();
        let mut bad = resolve_autoconnect(&outer, &env).unwrap();
        bad.ports.push(PortDecl::new(Direction::In, "D", "data")); // duplicate
        bad.connectors.push(Connector::explicit(
            ConnectorEnd::outer("ghost"),
            ConnectorEnd::inner("calc", "data"),
        )); // missing endpoint + duplicate target is fine (pair differs)
        bad.connectors.push(Connector::explicit(
            ConnectorEnd::inner("calc", "result"),
            ConnectorEnd::inner("calc", "data"),
        )); // type mismatch R vs D
        bad.connectors.push(Connector::explicit(
            ConnectorEnd::outer("result"),
            ConnectorEnd::outer("data"),
        )); // direction: reads an outer out-port, writes an outer in-port
        let report = check_wellformed(&bad, &env);
        let rules: BTreeSet<WfRule> = report.violations.iter().map(|v| v.rule).collect();
        assert!(rules.contains(&WfRule::UniqueNames));
        assert!(rules.contains(&WfRule::EndpointExists));
        assert!(rules.contains(&WfRule::TypeCompatible));
        assert!(rules.contains(&WfRule::DirectionOk));

        let mut dup = resolve_autoconnect(&outer, &env).unwrap();
        let c = dup.connectors[0].clone();
        dup.connectors.push(c);
        let report = check_wellformed(&dup, &env);
        assert!(report
            .violations
            .iter()
            .any(|v| v.rule == WfRule::NoDuplicateConnector));
    }

    #[test]
    fn unknown_subcomponent_type_is_informational() {
        let mut c = core();
        c.subcomponents.push(SubcomponentDecl::new("Mystery", "m"));
        c.connectors.push(Connector::explicit(
            ConnectorEnd::outer("base"),
            ConnectorEnd::inner("m", "base"),
        ));
        let report = check_wellformed(&c, &TypeEnv::new());
        assert!(report.is_wellformed());
        assert_eq!(report.infos.len(), 1);
        assert_eq!(report.infos[0].rule, WfRule::UnknownType);
    }

    #[test]
    fn structural_equality_ignores_order_and_origin() {
        let (outer, env) = autoconnect_fixture();
        let a = resolve_autoconnect(&outer, &env).unwrap();
        let mut b = a.clone();
        b.ports.reverse();
        b.connectors.reverse();
        for c in &mut b.connectors {
            c.origin = ConnectorOrigin::Explicit;
        }
        assert!(structural_equal(&a, &b));
        b.ports.pop();
        assert!(!structural_equal(&a, &b));
        let d = structural_diff(&a, &b);
        assert_eq!(d.ports_only_in_a.len(), 1);
    }

    #[test]
    fn generate_variant_applies_first_order() {
        let m = chain_model();
        let env = TypeEnv::new();
        let v = generate_variant(&m, &m.configs["Pair"], &env).unwrap();
        assert_eq!(v.order, vec!["DA", "DB"]);
        assert!(v.raw.find_port("pa").is_some() && v.raw.find_port("pb").is_some());
        let empty = generate_variant(&m, &m.configs["Empty"], &env).unwrap();
        assert!(structural_equal(&empty.normalized, &m.core));
    }

    #[test]
    fn confluence_of_disjoint_additions() {
        let m = DeltaModel::new(
            core(),
            vec![
                delta("D1", AocExpr::True, vec![add_port("p1")]),
                delta("D2", AocExpr::True, vec![add_port("p2")]),
            ],
            vec![DeltaConfig::new("C", &["D1", "D2"])],
        )
        .unwrap();
        let r = check_confluence(&m, &m.configs["C"], &TypeEnv::new(), usize::MAX).unwrap();
        assert_eq!(r.orders_enumerated, 2);
        assert!(r.confluent);
        assert!(r.pruned.is_empty());
    }

    #[test]
    fn confluence_prunes_inapplicable_orders() {
        // D1 adds `base` (already present -> fails unless D2 removed it
        // first); D2 removes `base`. Only [D2, D1] applies.
        let m = DeltaModel::new(
            core(),
            vec![
                delta("D1", AocExpr::True, vec![add_port("base")]),
                delta("D2", AocExpr::True, vec![DeltaOp::RemovePort("base".to_owned())]),
            ],
            vec![DeltaConfig::new("C", &["D1", "D2"])],
        )
        .unwrap();
        let r = check_confluence(&m, &m.configs["C"], &TypeEnv::new(), usize::MAX).unwrap();
        assert_eq!(r.orders_enumerated, 2);
        assert_eq!(r.generated, 1);
        assert_eq!(r.pruned.len(), 1);
        assert_eq!(r.pruned[0].order, vec!["D1", "D2"]);
        assert!(r.confluent);
    }

    #[test]
    fn non_confluent_orders_produce_witness() {
        // Same port name, different types depending on order of replace…
        // simplest divergence: D1 removes p then adds p:U; D2 removes p
        // then adds p:V — they conflict, but both orders apply: the later
        // delta wins, so results differ.
        let mut c = core();
        c.ports.push(PortDecl::new(Direction::In, "T", "p"));
        let redefine = |ty: &str| {
            vec![
                DeltaOp::RemovePort("p".to_owned()),
                DeltaOp::AddPort(PortDecl::new(Direction::In, ty, "p")),
            ]
        };
        let m = DeltaModel::new(
            c,
            vec![
                delta("D1", AocExpr::True, redefine("U")),
                delta("D2", AocExpr::True, redefine("V")),
            ],
            vec![DeltaConfig::new("C", &["D1", "D2"])],
        )
        .unwrap();
        let r = check_confluence(&m, &m.configs["C"], &TypeEnv::new(), usize::MAX).unwrap();
        assert!(!r.confluent);
        let w = r.witness.unwrap();
        assert_ne!(w.order_a, w.order_b);
        assert!(!w.diff.is_empty());
    }

    #[test]
    fn family_summary_rows_and_diagnostics() {
        let mut m = chain_model();
        // An extra delta no config uses, whose AOC names another unused one.
        m.deltas.insert(
            "DUnused".to_owned(),
            delta("DUnused", AocExpr::name("DA"), vec![add_port("pu")]),
        );
        m.deltas.insert(
            "DOrphanRef".to_owned(),
            delta(
                "DOrphanRef",
                AocExpr::name("DUnused"),
                vec![add_port("po")],
            ),
        );
        let s = check_family(&m, &TypeEnv::new(), 100, false);
        assert_eq!(s.configs.len(), 3);
        assert!(s.configs.iter().all(|c| c.generated));
        assert_eq!(
            s.redundant_deltas,
            vec!["DOrphanRef".to_owned(), "DUnused".to_owned()]
        );
        assert_eq!(
            s.unused_aoc_references,
            vec![AocReference {
                delta: "DOrphanRef".to_owned(),
                referenced: "DUnused".to_owned()
            }]
        );
        assert!(s.all_ok());
    }

    #[test]
    fn strict_mode_flags_negated_pairs_in_same_config() {
        let m = chain_model();
        // All contains DC (aoc: DB && !DX) together with DX.
        let s = check_family(&m, &TypeEnv::new(), 100, true);
        assert_eq!(
            s.conflicts,
            vec![ConflictFinding {
                config: "All".to_owned(),
                delta: "DC".to_owned(),
                negated: "DX".to_owned()
            }]
        );
        let lenient = check_family(&m, &TypeEnv::new(), 100, false);
        assert!(lenient.conflicts.is_empty());
    }
}
