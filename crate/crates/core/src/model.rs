//! Core vocabulary: component types, deltas, configurations and the
//! application order constraint expressions that tie them together.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;

#[cfg(feature = "serde")]
use serde::Serialize;

/// Identifiers are `[A-Za-z][A-Za-z0-9_]*`. Keywords are not reserved; the
/// grammars are unambiguous without that.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    In,
    Out,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "in",
            Direction::Out => "out",
        })
    }
}

/// A typed, directed port. `type_name` references an arbitrary data type
/// name; port types are opaque and compared by name only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct PortDecl {
    pub direction: Direction,
    pub type_name: String,
    pub name: String,
}

impl PortDecl {
    pub fn new(direction: Direction, type_name: &str, name: &str) -> Self {
        PortDecl {
            direction,
            type_name: type_name.to_owned(),
            name: name.to_owned(),
        }
    }
}

/// A named instance of another component type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct SubcomponentDecl {
    pub type_name: String,
    /// Defaults to the type name when the source omits an instance name.
    pub instance_name: String,
}

impl SubcomponentDecl {
    pub fn new(type_name: &str, instance_name: &str) -> Self {
        SubcomponentDecl {
            type_name: type_name.to_owned(),
            instance_name: instance_name.to_owned(),
        }
    }
}

/// One end of a connector: a port of the enclosing component
/// (`subcomponent == None`) or a port of a named subcomponent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ConnectorEnd {
    pub subcomponent: Option<String>,
    pub port: String,
}

impl ConnectorEnd {
    pub fn outer(port: &str) -> Self {
        ConnectorEnd {
            subcomponent: None,
            port: port.to_owned(),
        }
    }

    pub fn inner(subcomponent: &str, port: &str) -> Self {
        ConnectorEnd {
            subcomponent: Some(subcomponent.to_owned()),
            port: port.to_owned(),
        }
    }
}

impl fmt::Display for ConnectorEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.subcomponent {
            Some(sub) => write!(f, "{}.{}", sub, self.port),
            None => f.write_str(&self.port),
        }
    }
}

/// Distinguishes connectors written in source from those synthesized by
/// autoconnect resolution. Ignored by structural comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ConnectorOrigin {
    Explicit,
    Autoconnect,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Connector {
    pub source: ConnectorEnd,
    pub target: ConnectorEnd,
    pub origin: ConnectorOrigin,
}

impl Connector {
    pub fn explicit(source: ConnectorEnd, target: ConnectorEnd) -> Self {
        Connector {
            source,
            target,
            origin: ConnectorOrigin::Explicit,
        }
    }

    /// Source/target pair, the identity used for duplicate detection and
    /// structural comparison.
    pub fn pair(&self) -> (&ConnectorEnd, &ConnectorEnd) {
        (&self.source, &self.target)
    }
}

impl fmt::Display for Connector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.source, self.target)
    }
}

/// A component type: interface ports plus an internal decomposition into
/// subcomponents and connectors. `autoconnect` records whether unconnected
/// ports should be matched up by name and type during normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ComponentType {
    pub name: String,
    pub autoconnect: bool,
    pub ports: Vec<PortDecl>,
    pub subcomponents: Vec<SubcomponentDecl>,
    pub connectors: Vec<Connector>,
}

impl ComponentType {
    pub fn new(name: &str) -> Self {
        ComponentType {
            name: name.to_owned(),
            autoconnect: false,
            ports: Vec::new(),
            subcomponents: Vec::new(),
            connectors: Vec::new(),
        }
    }

    pub fn find_port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn find_subcomponent(&self, instance: &str) -> Option<&SubcomponentDecl> {
        self.subcomponents.iter().find(|s| s.instance_name == instance)
    }

    pub fn has_connector_pair(&self, source: &ConnectorEnd, target: &ConnectorEnd) -> bool {
        self.connectors
            .iter()
            .any(|c| &c.source == source && &c.target == target)
    }

    /// Checks the invariants a single component type must satisfy regardless
    /// of context: valid identifiers, unique element names, no port that
    /// shadows a subcomponent, no self-loop connectors.
    pub fn check_local_invariants(&self) -> Vec<InvariantViolation> {
        let mut out = Vec::new();
        if !is_identifier(&self.name) {
            out.push(InvariantViolation::InvalidIdentifier {
                role: "component name",
                value: self.name.clone(),
            });
        }
        let mut port_names = BTreeSet::new();
        for p in &self.ports {
            for (role, value) in [("port name", &p.name), ("port type", &p.type_name)] {
                if !is_identifier(value) {
                    out.push(InvariantViolation::InvalidIdentifier {
                        role,
                        value: value.clone(),
                    });
                }
            }
            if !port_names.insert(p.name.as_str()) {
                out.push(InvariantViolation::DuplicatePortName(p.name.clone()));
            }
        }
        let mut sub_names = BTreeSet::new();
        for s in &self.subcomponents {
            for (role, value) in [
                ("subcomponent type", &s.type_name),
                ("subcomponent name", &s.instance_name),
            ] {
                if !is_identifier(value) {
                    out.push(InvariantViolation::InvalidIdentifier {
                        role,
                        value: value.clone(),
                    });
                }
            }
            if !sub_names.insert(s.instance_name.as_str()) {
                out.push(InvariantViolation::DuplicateSubcomponentName(
                    s.instance_name.clone(),
                ));
            }
        }
        for name in port_names.intersection(&sub_names) {
            out.push(InvariantViolation::PortSubcomponentClash((*name).to_owned()));
        }
        for c in &self.connectors {
            if c.source == c.target {
                out.push(InvariantViolation::SelfLoopConnector(c.clone()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum InvariantViolation {
    InvalidIdentifier { role: &'static str, value: String },
    DuplicatePortName(String),
    DuplicateSubcomponentName(String),
    PortSubcomponentClash(String),
    SelfLoopConnector(Connector),
    /// Annotated models only: an annotation uses the reserved core name.
    ReservedVariantName(String),
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvariantViolation::InvalidIdentifier { role, value } => {
                write!(f, "invalid {}: `{}`", role, value)
            }
            InvariantViolation::DuplicatePortName(n) => write!(f, "duplicate port name `{}`", n),
            InvariantViolation::DuplicateSubcomponentName(n) => {
                write!(f, "duplicate subcomponent name `{}`", n)
            }
            InvariantViolation::PortSubcomponentClash(n) => {
                write!(f, "`{}` names both a port and a subcomponent", n)
            }
            InvariantViolation::SelfLoopConnector(c) => {
                write!(f, "connector `{}` connects an end to itself", c)
            }
            InvariantViolation::ReservedVariantName(n) => {
                write!(f, "`{}` is reserved and cannot be used as a variant name", n)
            }
        }
    }
}

/// A single modification step inside a delta.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "op", rename_all = "snake_case"))]
pub enum DeltaOp {
    AddPort(PortDecl),
    RemovePort(String),
    AddSubcomponent(SubcomponentDecl),
    RemoveSubcomponent(String),
    /// Swaps the instance under `instance_name` for a new declaration with
    /// the same instance name; connectors to it stay valid by name.
    ReplaceSubcomponent {
        instance_name: String,
        replacement: SubcomponentDecl,
    },
    Connect {
        source: ConnectorEnd,
        target: ConnectorEnd,
    },
    Disconnect {
        source: ConnectorEnd,
        target: ConnectorEnd,
    },
}

impl fmt::Display for DeltaOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaOp::AddPort(p) => {
                write!(f, "add port {} {} {}", p.direction, p.type_name, p.name)
            }
            DeltaOp::RemovePort(n) => write!(f, "remove port {}", n),
            DeltaOp::AddSubcomponent(s) => {
                if s.instance_name == s.type_name {
                    write!(f, "add component {}", s.type_name)
                } else {
                    write!(f, "add component {} {}", s.type_name, s.instance_name)
                }
            }
            DeltaOp::RemoveSubcomponent(n) => write!(f, "remove component {}", n),
            DeltaOp::ReplaceSubcomponent {
                instance_name,
                replacement,
            } => write!(
                f,
                "replace component {} with component {} {}",
                instance_name, replacement.type_name, replacement.instance_name
            ),
            DeltaOp::Connect { source, target } => write!(f, "connect {} -> {}", source, target),
            DeltaOp::Disconnect { source, target } => {
                write!(f, "disconnect {} -> {}", source, target)
            }
        }
    }
}

/// The operations a delta applies to one named component type.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ModifyBlock {
    pub component: String,
    pub ops: Vec<DeltaOp>,
}

/// Application order constraint: a boolean expression over delta names.
/// `Name(d)` means "d has been applied before this delta", `Not` negates,
/// and `True` is the neutral constraint (no `after` clause).
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AocExpr {
    True,
    Name(String),
    Not(Box<AocExpr>),
    And(Box<AocExpr>, Box<AocExpr>),
    Or(Box<AocExpr>, Box<AocExpr>),
}

impl AocExpr {
    pub fn name(n: &str) -> Self {
        AocExpr::Name(n.to_owned())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: AocExpr) -> Self {
        AocExpr::Not(Box::new(e))
    }

    pub fn and(a: AocExpr, b: AocExpr) -> Self {
        AocExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: AocExpr, b: AocExpr) -> Self {
        AocExpr::Or(Box::new(a), Box::new(b))
    }

    /// All delta names referenced anywhere in the expression.
    pub fn names(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            AocExpr::True => {}
            AocExpr::Name(n) => {
                out.insert(n.as_str());
            }
            AocExpr::Not(e) => e.collect_names(out),
            AocExpr::And(a, b) | AocExpr::Or(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
        }
    }

    /// Delta names that occur under an odd number of negations, i.e. the
    /// constraint forbids them having been applied earlier.
    pub fn negated_names(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_polarized(false, &mut out);
        out
    }

    fn collect_polarized<'a>(&'a self, negated: bool, out: &mut BTreeSet<&'a str>) {
        match self {
            AocExpr::True => {}
            AocExpr::Name(n) => {
                if negated {
                    out.insert(n.as_str());
                }
            }
            AocExpr::Not(e) => e.collect_polarized(!negated, out),
            AocExpr::And(a, b) | AocExpr::Or(a, b) => {
                a.collect_polarized(negated, out);
                b.collect_polarized(negated, out);
            }
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, AocExpr::True)
    }

    /// Folds `True` out of the expression: `True && x → x`, `True || x →
    /// True`, `!True → True`. Here `True` stands for a constraint literal
    /// that became irrelevant (e.g. its delta was removed), not boolean
    /// truth — hence `!True` collapses to `True` as well. Identity on
    /// expressions that contain no `True` node, which includes everything
    /// the parser produces.
    pub fn simplified(&self) -> AocExpr {
        match self {
            AocExpr::True => AocExpr::True,
            AocExpr::Name(n) => AocExpr::Name(n.clone()),
            AocExpr::Not(e) => match e.simplified() {
                AocExpr::True => AocExpr::True,
                inner => AocExpr::not(inner),
            },
            AocExpr::And(a, b) => match (a.simplified(), b.simplified()) {
                (AocExpr::True, x) | (x, AocExpr::True) => x,
                (x, y) => AocExpr::and(x, y),
            },
            AocExpr::Or(a, b) => match (a.simplified(), b.simplified()) {
                (AocExpr::True, _) | (_, AocExpr::True) => AocExpr::True,
                (x, y) => AocExpr::or(x, y),
            },
        }
    }
}

/// A named delta: an application order constraint plus modify blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Delta {
    pub name: String,
    pub aoc: AocExpr,
    pub blocks: Vec<ModifyBlock>,
}

impl Delta {
    /// A delta must not constrain its order against itself.
    pub fn references_self(&self) -> bool {
        self.aoc.names().contains(self.name.as_str())
    }
}

/// A product configuration: the delta subset that produces one variant.
/// Order in `deltas` is as written; application order is computed from AOCs.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct DeltaConfig {
    pub name: String,
    pub deltas: Vec<String>,
}

impl DeltaConfig {
    pub fn new(name: &str, deltas: &[&str]) -> Self {
        DeltaConfig {
            name: name.to_owned(),
            deltas: deltas.iter().map(|d| (*d).to_owned()).collect(),
        }
    }
}

/// A whole delta model: core architecture, deltas and configurations,
/// indexed by name. Construction validates reference closure.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct DeltaModel {
    pub core: ComponentType,
    pub deltas: BTreeMap<String, Delta>,
    pub configs: BTreeMap<String, DeltaConfig>,
}

impl DeltaModel {
    pub fn new(
        core: ComponentType,
        deltas: Vec<Delta>,
        configs: Vec<DeltaConfig>,
    ) -> Result<Self, ModelError> {
        let mut delta_map = BTreeMap::new();
        for d in deltas {
            let name = d.name.clone();
            if delta_map.insert(name.clone(), d).is_some() {
                return Err(ModelError::DuplicateDelta(name));
            }
        }
        let mut config_map = BTreeMap::new();
        for c in configs {
            let name = c.name.clone();
            if config_map.insert(name.clone(), c).is_some() {
                return Err(ModelError::DuplicateConfig(name));
            }
        }
        let model = DeltaModel {
            core,
            deltas: delta_map,
            configs: config_map,
        };
        model.validate()?;
        Ok(model)
    }

    /// Reference closure plus per-element invariants: configs reference
    /// existing deltas exactly once, AOCs reference existing deltas and
    /// never their own delta, and the core's local invariants hold.
    pub fn validate(&self) -> Result<(), ModelError> {
        let violations = self.core.check_local_invariants();
        if !violations.is_empty() {
            return Err(ModelError::CoreInvariant(violations));
        }
        for (name, delta) in &self.deltas {
            if delta.references_self() {
                return Err(ModelError::SelfReferentialAoc(name.clone()));
            }
            for referenced in delta.aoc.names() {
                if !self.deltas.contains_key(referenced) {
                    return Err(ModelError::UnknownDeltaInAoc {
                        delta: name.clone(),
                        referenced: referenced.to_owned(),
                    });
                }
            }
        }
        for (name, config) in &self.configs {
            let mut seen = BTreeSet::new();
            for d in &config.deltas {
                if !self.deltas.contains_key(d) {
                    return Err(ModelError::UnknownDeltaInConfig {
                        config: name.clone(),
                        delta: d.clone(),
                    });
                }
                if !seen.insert(d.as_str()) {
                    return Err(ModelError::DuplicateDeltaInConfig {
                        config: name.clone(),
                        delta: d.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Deltas not used by any configuration.
    pub fn unused_deltas(&self) -> Vec<&str> {
        let used: BTreeSet<&str> = self
            .configs
            .values()
            .flat_map(|c| c.deltas.iter().map(String::as_str))
            .collect();
        self.deltas
            .keys()
            .map(String::as_str)
            .filter(|d| !used.contains(*d))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ModelError {
    DuplicateDelta(String),
    DuplicateConfig(String),
    CoreInvariant(Vec<InvariantViolation>),
    SelfReferentialAoc(String),
    UnknownDeltaInAoc { delta: String, referenced: String },
    UnknownDeltaInConfig { config: String, delta: String },
    DuplicateDeltaInConfig { config: String, delta: String },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::DuplicateDelta(n) => write!(f, "delta `{}` defined twice", n),
            ModelError::DuplicateConfig(n) => write!(f, "configuration `{}` defined twice", n),
            ModelError::CoreInvariant(vs) => {
                write!(f, "core architecture is invalid: ")?;
                let msgs: Vec<String> = vs.iter().map(|v| format!("{}", v)).collect();
                f.write_str(&msgs.join("; "))
            }
            ModelError::SelfReferentialAoc(n) => {
                write!(f, "delta `{}` references itself in its order constraint", n)
            }
            ModelError::UnknownDeltaInAoc { delta, referenced } => write!(
                f,
                "delta `{}` constrains order against unknown delta `{}`",
                delta, referenced
            ),
            ModelError::UnknownDeltaInConfig { config, delta } => write!(
                f,
                "configuration `{}` references unknown delta `{}`",
                config, delta
            ),
            ModelError::DuplicateDeltaInConfig { config, delta } => write!(
                f,
                "configuration `{}` lists delta `{}` more than once",
                config, delta
            ),
        }
    }
}
