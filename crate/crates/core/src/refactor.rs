//! Variant-preserving refactorings: removing order-constraint literals,
//! composing delta sequences into one delta, inverting deltas, and merging
//! deltas into the core. The `apply_*` entry points are transactional —
//! they regenerate every surviving configuration and refuse to return a
//! model whose products changed.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use core::fmt;

#[cfg(feature = "serde")]
use serde::Serialize;

use crate::engine::{
    apply_delta, compute_orders, eval_aoc, generate_variant, resolve_autoconnect,
    structural_diff, structural_equal, TypeEnv,
};
use crate::model::{
    AocExpr, ComponentType, Delta, DeltaConfig, DeltaModel, DeltaOp, ModelError, ModifyBlock,
};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct PreservationEntry {
    pub config: String,
    pub preserved: bool,
    pub detail: Option<String>,
}

/// Result of a successful refactoring. `preservation` has one entry per
/// configuration of the new model, each verified structurally equal to its
/// pre-refactoring variant.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct RefactoringOutcome {
    pub new_model: DeltaModel,
    pub removed_deltas: Vec<String>,
    pub added_deltas: Vec<String>,
    pub changed_configs: Vec<String>,
    pub preservation: Vec<PreservationEntry>,
    /// Advisory findings (non-fatal): partial sequence usage,
    /// non-contiguous orders, supported intermediate products, core
    /// reachability notes.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum RefactorError {
    UnknownDelta(String),
    UnknownConfig(String),
    DuplicateInSequence(String),
    SequenceTooShort { required: usize, got: usize },
    /// Every operation cancelled out; a delta must keep at least one.
    EmptyComposition { sequence: Vec<String> },
    NameCollision(String),
    /// Delta (or sequence) cannot be applied to the given context.
    Inapplicable { delta: String, reason: String },
    /// The sequence violates its own AOCs when applied from the empty set.
    SequenceOrderViolation { delta: String },
    PreservationViolation { report: Vec<PreservationEntry> },
    /// The transformed model failed validation (reference closure etc.).
    InvalidResult(ModelError),
}

impl fmt::Display for RefactorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefactorError::UnknownDelta(n) => write!(f, "unknown delta `{}`", n),
            RefactorError::UnknownConfig(n) => write!(f, "unknown configuration `{}`", n),
            RefactorError::DuplicateInSequence(n) => {
                write!(f, "delta `{}` appears twice in the sequence", n)
            }
            RefactorError::SequenceTooShort { required, got } => {
                write!(f, "sequence needs at least {} deltas, got {}", required, got)
            }
            RefactorError::EmptyComposition { sequence } => write!(
                f,
                "composing [{}] cancels every operation; the result would be an empty delta",
                sequence.join(", ")
            ),
            RefactorError::NameCollision(n) => {
                write!(f, "name `{}` is already taken by an unrelated delta", n)
            }
            RefactorError::Inapplicable { delta, reason } => {
                write!(f, "delta `{}` is not applicable: {}", delta, reason)
            }
            RefactorError::SequenceOrderViolation { delta } => write!(
                f,
                "sequence violates the order constraint of `{}` when applied from the empty set",
                delta
            ),
            RefactorError::PreservationViolation { report } => {
                let broken: Vec<&str> = report
                    .iter()
                    .filter(|e| !e.preserved)
                    .map(|e| e.config.as_str())
                    .collect();
                write!(
                    f,
                    "refactoring would change the generated variants of: {}",
                    broken.join(", ")
                )
            }
            RefactorError::InvalidResult(e) => write!(f, "refactored model is invalid: {}", e),
        }
    }
}

/// Replaces every literal of `name` — whatever its polarity — by the
/// always-irrelevant constraint and folds it away. Used when the named
/// delta no longer exists, so ordering relative to it means nothing.
/// Idempotent; never introduces new names.
pub fn remove_aoc_literal(expr: &AocExpr, name: &str) -> AocExpr {
    fn subst(e: &AocExpr, name: &str) -> AocExpr {
        match e {
            AocExpr::True => AocExpr::True,
            AocExpr::Name(n) => {
                if n == name {
                    AocExpr::True
                } else {
                    AocExpr::Name(n.clone())
                }
            }
            AocExpr::Not(x) => AocExpr::not(subst(x, name)),
            AocExpr::And(a, b) => AocExpr::and(subst(a, name), subst(b, name)),
            AocExpr::Or(a, b) => AocExpr::or(subst(a, name), subst(b, name)),
        }
    }
    subst(expr, name).simplified()
}

/// Polarity-aware rewrite for a delta that was absorbed into `new_name`:
/// positive occurrences become `new_name` (the dependency's effects now
/// arrive through the composed delta), negated occurrences are dropped.
fn rewrite_absorbed_literal(expr: &AocExpr, removed: &str, new_name: &str) -> AocExpr {
    fn walk(e: &AocExpr, removed: &str, new_name: &str, positive: bool) -> AocExpr {
        match e {
            AocExpr::True => AocExpr::True,
            AocExpr::Name(n) => {
                if n == removed {
                    if positive {
                        AocExpr::name(new_name)
                    } else {
                        AocExpr::True
                    }
                } else {
                    AocExpr::Name(n.clone())
                }
            }
            AocExpr::Not(x) => AocExpr::not(walk(x, removed, new_name, !positive)),
            AocExpr::And(a, b) => AocExpr::and(
                walk(a, removed, new_name, positive),
                walk(b, removed, new_name, positive),
            ),
            AocExpr::Or(a, b) => AocExpr::or(
                walk(a, removed, new_name, positive),
                walk(b, removed, new_name, positive),
            ),
        }
    }
    walk(expr, removed, new_name, true).simplified()
}

/// What an operation touches, for deciding whether two ops may interact.
#[derive(Debug, Clone, PartialEq, Eq)]
enum OpKey {
    Port(String),
    Sub(String),
    Conn(crate::model::ConnectorEnd, crate::model::ConnectorEnd),
}

fn op_keys(op: &DeltaOp) -> Vec<OpKey> {
    match op {
        DeltaOp::AddPort(p) => vec![OpKey::Port(p.name.clone())],
        DeltaOp::RemovePort(n) => vec![OpKey::Port(n.clone())],
        DeltaOp::AddSubcomponent(s) => vec![OpKey::Sub(s.instance_name.clone())],
        DeltaOp::RemoveSubcomponent(n) => vec![OpKey::Sub(n.clone())],
        DeltaOp::ReplaceSubcomponent {
            instance_name,
            replacement,
        } => {
            let mut keys = vec![OpKey::Sub(instance_name.clone())];
            if replacement.instance_name != *instance_name {
                keys.push(OpKey::Sub(replacement.instance_name.clone()));
            }
            keys
        }
        DeltaOp::Connect { source, target } | DeltaOp::Disconnect { source, target } => {
            vec![OpKey::Conn(source.clone(), target.clone())]
        }
    }
}

enum Rewrite {
    Cancel,
    Single(DeltaOp),
}

/// The pairwise simplification rules, applied to two ops that are adjacent
/// in their shared element's subsequence.
fn rewrite_pair(a: &DeltaOp, b: &DeltaOp) -> Option<Rewrite> {
    match (a, b) {
        (DeltaOp::AddPort(p), DeltaOp::RemovePort(n)) if p.name == *n => Some(Rewrite::Cancel),
        (DeltaOp::AddSubcomponent(s), DeltaOp::RemoveSubcomponent(n))
            if s.instance_name == *n =>
        {
            Some(Rewrite::Cancel)
        }
        (
            DeltaOp::AddSubcomponent(s),
            DeltaOp::ReplaceSubcomponent {
                instance_name,
                replacement,
            },
        ) if s.instance_name == *instance_name => {
            Some(Rewrite::Single(DeltaOp::AddSubcomponent(replacement.clone())))
        }
        (
            DeltaOp::ReplaceSubcomponent {
                instance_name: old1,
                replacement: mid,
            },
            DeltaOp::ReplaceSubcomponent {
                instance_name: old2,
                replacement: last,
            },
        ) if mid.instance_name == *old2 => Some(Rewrite::Single(DeltaOp::ReplaceSubcomponent {
            instance_name: old1.clone(),
            replacement: last.clone(),
        })),
        (DeltaOp::RemoveSubcomponent(n), DeltaOp::AddSubcomponent(s))
            if s.instance_name == *n =>
        {
            Some(Rewrite::Single(DeltaOp::ReplaceSubcomponent {
                instance_name: n.clone(),
                replacement: s.clone(),
            }))
        }
        (
            DeltaOp::Connect { source: s1, target: t1 },
            DeltaOp::Disconnect { source: s2, target: t2 },
        )
        | (
            DeltaOp::Disconnect { source: s1, target: t1 },
            DeltaOp::Connect { source: s2, target: t2 },
        ) if s1 == s2 && t1 == t2 => Some(Rewrite::Cancel),
        _ => None,
    }
}

/// Fixed-point pass: for each op, try to rewrite it with the next op that
/// touches a shared element (ops on unrelated elements keep their relative
/// order and never block a rewrite).
fn simplify_ops(mut ops: Vec<DeltaOp>) -> Vec<DeltaOp> {
    'restart: loop {
        let keys: Vec<Vec<OpKey>> = ops.iter().map(op_keys).collect();
        for i in 0..ops.len() {
            for key in &keys[i] {
                let next = (i + 1..ops.len()).find(|&j| keys[j].contains(key));
                if let Some(j) = next {
                    match rewrite_pair(&ops[i], &ops[j]) {
                        Some(Rewrite::Cancel) => {
                            ops.remove(j);
                            ops.remove(i);
                            continue 'restart;
                        }
                        Some(Rewrite::Single(op)) => {
                            ops[i] = op;
                            ops.remove(j);
                            continue 'restart;
                        }
                        None => {}
                    }
                }
            }
        }
        return ops;
    }
}

fn lookup_sequence<'a>(
    model: &'a DeltaModel,
    sequence: &[&str],
) -> Result<Vec<&'a Delta>, RefactorError> {
    let mut seen = BTreeSet::new();
    let mut deltas = Vec::new();
    for name in sequence {
        if !seen.insert(*name) {
            return Err(RefactorError::DuplicateInSequence((*name).to_owned()));
        }
        deltas.push(
            model
                .deltas
                .get(*name)
                .ok_or_else(|| RefactorError::UnknownDelta((*name).to_owned()))?,
        );
    }
    Ok(deltas)
}

/// Concatenates the sequence's operations (grouped per target component in
/// order of first appearance), simplifies per-element op chains, and joins
/// the AOCs: conjunction of all members' constraints with the members'
/// own literals removed.
pub fn compose_deltas(
    model: &DeltaModel,
    sequence: &[&str],
    new_name: &str,
) -> Result<Delta, RefactorError> {
    if sequence.len() < 2 {
        return Err(RefactorError::SequenceTooShort {
            required: 2,
            got: sequence.len(),
        });
    }
    let members = lookup_sequence(model, sequence)?;

    let mut groups: Vec<(String, Vec<DeltaOp>)> = Vec::new();
    for member in &members {
        for block in &member.blocks {
            match groups.iter_mut().find(|(c, _)| *c == block.component) {
                Some((_, ops)) => ops.extend(block.ops.iter().cloned()),
                None => groups.push((block.component.clone(), block.ops.clone())),
            }
        }
    }

    let mut blocks = Vec::new();
    for (component, ops) in groups {
        let simplified = simplify_ops(ops);
        if !simplified.is_empty() {
            blocks.push(ModifyBlock {
                component,
                ops: simplified,
            });
        }
    }
    if blocks.is_empty() {
        return Err(RefactorError::EmptyComposition {
            sequence: sequence.iter().map(|s| (*s).to_owned()).collect(),
        });
    }

    let mut aoc = members[0].aoc.clone();
    for member in &members[1..] {
        if !member.aoc.is_true() {
            aoc = AocExpr::and(aoc, member.aoc.clone());
        }
    }
    for name in sequence {
        aoc = remove_aoc_literal(&aoc, name);
    }

    Ok(Delta {
        name: new_name.to_owned(),
        aoc,
        blocks,
    })
}

// Cap for enumerating orders while checking advisory preconditions.
const ADVISORY_ORDER_LIMIT: usize = 1000;

/// Advisory precondition findings for composing `sequence`: configurations
/// using only part of it, valid orders that interleave other deltas into
/// it, and intermediate products (after a proper prefix) that coincide
/// with a supported variant.
pub fn compose_warnings(model: &DeltaModel, sequence: &[&str], env: &TypeEnv) -> Vec<String> {
    let mut warnings = Vec::new();
    let member_set: BTreeSet<&str> = sequence.iter().copied().collect();

    let mut variants: Vec<(&str, ComponentType)> = Vec::new();
    for (name, config) in &model.configs {
        if let Ok(v) = generate_variant(model, config, env) {
            variants.push((name, v.normalized));
        }
    }

    for (name, config) in &model.configs {
        let contained: Vec<&str> = config
            .deltas
            .iter()
            .map(String::as_str)
            .filter(|d| member_set.contains(d))
            .collect();
        if contained.is_empty() {
            continue;
        }
        if contained.len() < sequence.len() {
            warnings.push(format!(
                "configuration `{}` uses only part of the sequence ({})",
                name,
                contained.join(", ")
            ));
            continue;
        }

        let orders = match compute_orders(model, config, ADVISORY_ORDER_LIMIT) {
            Ok(o) => o,
            Err(_) => continue,
        };
        let mut contiguous_everywhere = true;
        for order in &orders {
            let positions: Vec<usize> = sequence
                .iter()
                .map(|m| order.iter().position(|d| d == m).unwrap())
                .collect();
            let in_order_and_adjacent = positions.windows(2).all(|w| w[1] == w[0] + 1);
            if !in_order_and_adjacent {
                warnings.push(format!(
                    "configuration `{}` admits order [{}] where the sequence is not applied \
                     contiguously in the given order",
                    name,
                    order.join(", ")
                ));
                contiguous_everywhere = false;
                break;
            }
        }

        // Intermediate products: walk the first order and compare the
        // state after each proper prefix of the sequence with every
        // supported variant.
        if contiguous_everywhere && !orders.is_empty() {
            let order = &orders[0];
            let first_member = order.iter().position(|d| member_set.contains(d.as_str()));
            if let Some(start) = first_member {
                let mut arch = model.core.clone();
                let mut applicable = true;
                for d in &order[..start] {
                    match apply_delta(&arch, &model.deltas[d]) {
                        Ok(next) => arch = next,
                        Err(_) => {
                            applicable = false;
                            break;
                        }
                    }
                }
                if applicable {
                    for (k, d) in order[start..].iter().enumerate() {
                        if k + 1 == sequence.len() {
                            break; // full sequence is not an intermediate
                        }
                        match apply_delta(&arch, &model.deltas[d]) {
                            Ok(next) => arch = next,
                            Err(_) => break,
                        }
                        if let Ok(normalized) = resolve_autoconnect(&arch, env) {
                            if let Some((vname, _)) = variants
                                .iter()
                                .find(|(_, v)| structural_equal(v, &normalized))
                            {
                                warnings.push(format!(
                                    "intermediate product after [{}] in configuration `{}` \
                                     equals the supported variant `{}`",
                                    order[start..=start + k].join(", "),
                                    name,
                                    vname
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    warnings
}

type VariantMap = BTreeMap<String, Result<ComponentType, String>>;

fn generate_all(model: &DeltaModel, env: &TypeEnv) -> VariantMap {
    model
        .configs
        .iter()
        .map(|(name, config)| {
            (
                name.clone(),
                generate_variant(model, config, env)
                    .map(|v| v.normalized)
                    .map_err(|e| e.to_string()),
            )
        })
        .collect()
}

fn check_preservation(
    expected: &VariantMap,
    new_model: &DeltaModel,
    env: &TypeEnv,
) -> Vec<PreservationEntry> {
    let regenerated = generate_all(new_model, env);
    let mut report = Vec::new();
    for (name, after) in &regenerated {
        let entry = match (expected.get(name), after) {
            (None, _) => PreservationEntry {
                config: name.clone(),
                preserved: false,
                detail: Some("no pre-refactoring variant to compare against".to_owned()),
            },
            (Some(Ok(before)), Ok(now)) => {
                let diff = structural_diff(before, now);
                PreservationEntry {
                    config: name.clone(),
                    preserved: diff.is_empty(),
                    detail: if diff.is_empty() {
                        None
                    } else {
                        Some(format!("{}", diff))
                    },
                }
            }
            (Some(Err(before)), Err(now)) => PreservationEntry {
                config: name.clone(),
                preserved: true,
                detail: Some(format!(
                    "not generatable before ({}) or after ({})",
                    before, now
                )),
            },
            (Some(Ok(_)), Err(now)) => PreservationEntry {
                config: name.clone(),
                preserved: false,
                detail: Some(format!("generated before, now fails: {}", now)),
            },
            (Some(Err(before)), Ok(_)) => PreservationEntry {
                config: name.clone(),
                preserved: false,
                detail: Some(format!(
                    "failed before ({}), now generates a variant",
                    before
                )),
            },
        };
        report.push(entry);
    }
    report
}

fn finish_outcome(
    expected: &VariantMap,
    new_model: DeltaModel,
    removed_deltas: Vec<String>,
    added_deltas: Vec<String>,
    changed_configs: Vec<String>,
    warnings: Vec<String>,
    env: &TypeEnv,
) -> Result<RefactoringOutcome, RefactorError> {
    new_model
        .validate()
        .map_err(RefactorError::InvalidResult)?;
    let preservation = check_preservation(expected, &new_model, env);
    if preservation.iter().any(|e| !e.preserved) {
        return Err(RefactorError::PreservationViolation {
            report: preservation,
        });
    }
    Ok(RefactoringOutcome {
        new_model,
        removed_deltas,
        added_deltas,
        changed_configs,
        preservation,
        warnings,
    })
}

/// Replaces the sequence by one composed delta named `new_name`: configs
/// containing the whole sequence reference the new delta instead, sequence
/// members no config uses anymore are dropped, and other deltas' AOC
/// literals naming a dropped member are rewritten (positive → `new_name`,
/// negated → removed). Rolled back if any configuration's variant changes.
pub fn apply_compose_refactoring(
    model: &DeltaModel,
    sequence: &[&str],
    new_name: &str,
    env: &TypeEnv,
) -> Result<RefactoringOutcome, RefactorError> {
    if model.deltas.contains_key(new_name) && !sequence.contains(&new_name) {
        return Err(RefactorError::NameCollision(new_name.to_owned()));
    }
    let composed = compose_deltas(model, sequence, new_name)?;
    let warnings = compose_warnings(model, sequence, env);
    let expected = generate_all(model, env);
    let member_set: BTreeSet<&str> = sequence.iter().copied().collect();

    let mut changed_configs = Vec::new();
    let mut new_configs: BTreeMap<String, DeltaConfig> = BTreeMap::new();
    for (name, config) in &model.configs {
        let contained = config
            .deltas
            .iter()
            .filter(|d| member_set.contains(d.as_str()))
            .count();
        let mut next = config.clone();
        if contained == sequence.len() {
            let mut replaced = false;
            next.deltas.retain_mut(|d| {
                if member_set.contains(d.as_str()) {
                    if replaced {
                        false
                    } else {
                        *d = new_name.to_owned();
                        replaced = true;
                        true
                    }
                } else {
                    true
                }
            });
            changed_configs.push(name.clone());
        }
        new_configs.insert(name.clone(), next);
    }

    let still_used: BTreeSet<&str> = new_configs
        .values()
        .flat_map(|c| c.deltas.iter().map(String::as_str))
        .collect();
    let dropped: Vec<String> = sequence
        .iter()
        .filter(|m| **m != new_name && !still_used.contains(**m))
        .map(|m| (*m).to_owned())
        .collect();

    let mut new_deltas: BTreeMap<String, Delta> = BTreeMap::new();
    for (name, delta) in &model.deltas {
        if dropped.iter().any(|d| d == name) || name == new_name {
            continue;
        }
        let mut next = delta.clone();
        for gone in &dropped {
            next.aoc = rewrite_absorbed_literal(&next.aoc, gone, new_name);
        }
        new_deltas.insert(name.clone(), next);
    }
    new_deltas.insert(new_name.to_owned(), composed);

    let new_model = DeltaModel {
        core: model.core.clone(),
        deltas: new_deltas,
        configs: new_configs,
    };
    finish_outcome(
        &expected,
        new_model,
        dropped,
        vec![new_name.to_owned()],
        changed_configs,
        warnings,
        env,
    )
}

/// Builds the delta that undoes `delta` on `context`: each operation is
/// inverted (declarations removed by the delta are recovered from the
/// forward simulation) and the inverted ops run in reverse order. The AOC
/// is left unconstrained — callers decide where the inverse may run.
pub fn invert_delta(
    delta: &Delta,
    context: &ComponentType,
    name: Option<&str>,
) -> Result<Delta, RefactorError> {
    let inapplicable = |reason: String| RefactorError::Inapplicable {
        delta: delta.name.clone(),
        reason,
    };

    let mut current = context.clone();
    let mut inverses: Vec<(String, DeltaOp)> = Vec::new();
    for block in &delta.blocks {
        for op in &block.ops {
            let inverse = match op {
                DeltaOp::AddPort(p) => DeltaOp::RemovePort(p.name.clone()),
                DeltaOp::RemovePort(n) => DeltaOp::AddPort(
                    current
                        .find_port(n)
                        .ok_or_else(|| inapplicable(format!("no port `{}` to recover", n)))?
                        .clone(),
                ),
                DeltaOp::AddSubcomponent(s) => {
                    DeltaOp::RemoveSubcomponent(s.instance_name.clone())
                }
                DeltaOp::RemoveSubcomponent(n) => DeltaOp::AddSubcomponent(
                    current
                        .find_subcomponent(n)
                        .ok_or_else(|| {
                            inapplicable(format!("no subcomponent `{}` to recover", n))
                        })?
                        .clone(),
                ),
                DeltaOp::ReplaceSubcomponent {
                    instance_name,
                    replacement,
                } => DeltaOp::ReplaceSubcomponent {
                    instance_name: replacement.instance_name.clone(),
                    replacement: current
                        .find_subcomponent(instance_name)
                        .ok_or_else(|| {
                            inapplicable(format!(
                                "no subcomponent `{}` to recover",
                                instance_name
                            ))
                        })?
                        .clone(),
                },
                DeltaOp::Connect { source, target } => DeltaOp::Disconnect {
                    source: source.clone(),
                    target: target.clone(),
                },
                DeltaOp::Disconnect { source, target } => DeltaOp::Connect {
                    source: source.clone(),
                    target: target.clone(),
                },
            };
            current = crate::engine::apply_op(&current, &block.component, op)
                .map_err(|e| inapplicable(e.to_string()))?;
            inverses.push((block.component.clone(), inverse));
        }
    }

    let mut blocks: Vec<ModifyBlock> = Vec::new();
    for (component, op) in inverses.into_iter().rev() {
        match blocks.last_mut() {
            Some(b) if b.component == component => b.ops.push(op),
            _ => blocks.push(ModifyBlock {
                component,
                ops: vec![op],
            }),
        }
    }

    Ok(Delta {
        name: name
            .map(ToOwned::to_owned)
            .unwrap_or_else(|| format!("DInverse{}", delta.name)),
        aoc: AocExpr::True,
        blocks,
    })
}

/// Applies the sequence to the core permanently: the resulting
/// architecture becomes the new core, the members disappear from configs
/// and the delta set, and surviving AOCs lose their literals. With
/// `with_inverse`, a delta `DInverse` (the sequence inverted against the
/// old core, constrained to run before every remaining delta) is added and
/// joined into every configuration that did not contain the sequence, so
/// the old core's products stay reachable. Rolled back if any
/// configuration's variant changes.
pub fn apply_merge_with_core(
    model: &DeltaModel,
    sequence: &[&str],
    with_inverse: bool,
    env: &TypeEnv,
) -> Result<RefactoringOutcome, RefactorError> {
    if sequence.is_empty() {
        return Err(RefactorError::SequenceTooShort {
            required: 1,
            got: 0,
        });
    }
    let members = lookup_sequence(model, sequence)?;

    let mut applied = BTreeSet::new();
    for member in &members {
        if !eval_aoc(&member.aoc, &applied) {
            return Err(RefactorError::SequenceOrderViolation {
                delta: member.name.clone(),
            });
        }
        applied.insert(member.name.clone());
    }

    let mut new_core = model.core.clone();
    for member in &members {
        new_core = apply_delta(&new_core, member).map_err(|e| RefactorError::Inapplicable {
            delta: member.name.clone(),
            reason: e.to_string(),
        })?;
    }

    let mut expected = generate_all(model, env);
    let member_set: BTreeSet<&str> = sequence.iter().copied().collect();

    let mut new_deltas: BTreeMap<String, Delta> = BTreeMap::new();
    for (name, delta) in &model.deltas {
        if member_set.contains(name.as_str()) {
            continue;
        }
        let mut next = delta.clone();
        for gone in sequence {
            next.aoc = remove_aoc_literal(&next.aoc, gone);
        }
        new_deltas.insert(name.clone(), next);
    }

    let mut warnings = Vec::new();
    let old_core_supported = match resolve_autoconnect(&model.core, env) {
        Ok(normalized) => expected
            .values()
            .any(|v| matches!(v, Ok(arch) if structural_equal(arch, &normalized))),
        Err(_) => false,
    };
    if with_inverse && !old_core_supported {
        warnings.push(
            "inverse requested, but the old core is not itself a supported variant".to_owned(),
        );
    }
    if !with_inverse && old_core_supported {
        warnings.push(
            "old core is a supported variant but no inverse is kept; it becomes unreachable"
                .to_owned(),
        );
    }

    let mut added_deltas = Vec::new();
    let mut changed_configs = Vec::new();
    let mut new_configs: BTreeMap<String, DeltaConfig> = BTreeMap::new();
    let inverse_name = "DInverse";

    for (name, config) in &model.configs {
        let contained = config
            .deltas
            .iter()
            .filter(|d| member_set.contains(d.as_str()))
            .count();
        let mut next = config.clone();
        next.deltas.retain(|d| !member_set.contains(d.as_str()));
        if with_inverse && contained < sequence.len() {
            next.deltas.insert(0, inverse_name.to_owned());
        }
        if next.deltas != config.deltas {
            changed_configs.push(name.clone());
        }
        new_configs.insert(name.clone(), next);
    }

    if with_inverse {
        if new_deltas.contains_key(inverse_name) {
            return Err(RefactorError::NameCollision(inverse_name.to_owned()));
        }
        let combined: Delta = if members.len() == 1 {
            (*members[0]).clone()
        } else {
            compose_deltas(model, sequence, "DMerged")?
        };
        let mut inverse = invert_delta(&combined, &model.core, Some(inverse_name))?;
        let mut aoc = AocExpr::True;
        for remaining in new_deltas.keys() {
            let negated = AocExpr::not(AocExpr::name(remaining));
            aoc = if aoc.is_true() {
                negated
            } else {
                AocExpr::and(aoc, negated)
            };
        }
        inverse.aoc = aoc;
        new_deltas.insert(inverse_name.to_owned(), inverse);
        added_deltas.push(inverse_name.to_owned());

        // The old core must stay reachable through some configuration; if
        // every config contained the sequence, add one for it.
        let has_inverse_only = new_configs
            .values()
            .any(|c| c.deltas == vec![inverse_name.to_owned()]);
        if !has_inverse_only {
            let old_core_config = "OldCore";
            if !new_configs.contains_key(old_core_config) {
                new_configs.insert(
                    old_core_config.to_owned(),
                    DeltaConfig::new(old_core_config, &[inverse_name]),
                );
                changed_configs.push(old_core_config.to_owned());
                expected.insert(
                    old_core_config.to_owned(),
                    resolve_autoconnect(&model.core, env)
                        .map_err(|e| e.to_string()),
                );
            }
        }
    }

    let new_model = DeltaModel {
        core: new_core,
        deltas: new_deltas,
        configs: new_configs,
    };
    finish_outcome(
        &expected,
        new_model,
        sequence.iter().map(|s| (*s).to_owned()).collect(),
        added_deltas,
        changed_configs,
        warnings,
        env,
    )
}

/// Drops configurations, prunes deltas left unused, and removes the pruned
/// deltas' literals from surviving AOCs. No preservation check: surviving
/// configurations keep their delta sets, and a pruned delta can only occur
/// negated-and-never-applied in their constraints.
pub fn remove_configs(model: &DeltaModel, names: &[&str]) -> Result<DeltaModel, RefactorError> {
    for name in names {
        if !model.configs.contains_key(*name) {
            return Err(RefactorError::UnknownConfig((*name).to_owned()));
        }
    }
    let mut next = model.clone();
    for name in names {
        next.configs.remove(*name);
    }
    let pruned: Vec<String> = next
        .unused_deltas()
        .into_iter()
        .map(ToOwned::to_owned)
        .collect();
    for name in &pruned {
        next.deltas.remove(name);
    }
    for delta in next.deltas.values_mut() {
        for gone in &pruned {
            delta.aoc = remove_aoc_literal(&delta.aoc, gone);
        }
    }
    next.validate().map_err(RefactorError::InvalidResult)?;
    Ok(next)
}

/// Swaps in a new definition for `old_name`. If the new delta is named
/// differently, configurations and AOC literals are renamed accordingly.
pub fn replace_delta(
    model: &DeltaModel,
    old_name: &str,
    new_delta: Delta,
) -> Result<DeltaModel, RefactorError> {
    if !model.deltas.contains_key(old_name) {
        return Err(RefactorError::UnknownDelta(old_name.to_owned()));
    }
    let new_name = new_delta.name.clone();
    if new_name != old_name && model.deltas.contains_key(&new_name) {
        return Err(RefactorError::NameCollision(new_name));
    }
    let mut next = model.clone();
    next.deltas.remove(old_name);
    if new_name != old_name {
        for delta in next.deltas.values_mut() {
            delta.aoc = rename_literal(&delta.aoc, old_name, &new_name);
        }
        for config in next.configs.values_mut() {
            for d in config.deltas.iter_mut() {
                if d == old_name {
                    *d = new_name.clone();
                }
            }
        }
    }
    next.deltas.insert(new_name, new_delta);
    next.validate().map_err(RefactorError::InvalidResult)?;
    Ok(next)
}

fn rename_literal(expr: &AocExpr, from: &str, to: &str) -> AocExpr {
    match expr {
        AocExpr::True => AocExpr::True,
        AocExpr::Name(n) => AocExpr::name(if n == from { to } else { n }),
        AocExpr::Not(e) => AocExpr::not(rename_literal(e, from, to)),
        AocExpr::And(a, b) => {
            AocExpr::and(rename_literal(a, from, to), rename_literal(b, from, to))
        }
        AocExpr::Or(a, b) => {
            AocExpr::or(rename_literal(a, from, to), rename_literal(b, from, to))
        }
    }
}

pub fn add_delta(model: &DeltaModel, delta: Delta) -> Result<DeltaModel, RefactorError> {
    if model.deltas.contains_key(&delta.name) {
        return Err(RefactorError::NameCollision(delta.name));
    }
    let mut next = model.clone();
    next.deltas.insert(delta.name.clone(), delta);
    next.validate().map_err(RefactorError::InvalidResult)?;
    Ok(next)
}

pub fn add_config(model: &DeltaModel, config: DeltaConfig) -> Result<DeltaModel, RefactorError> {
    if model.configs.contains_key(&config.name) {
        return Err(RefactorError::NameCollision(config.name));
    }
    let mut next = model.clone();
    next.configs.insert(config.name.clone(), config);
    next.validate().map_err(RefactorError::InvalidResult)?;
    Ok(next)
}
