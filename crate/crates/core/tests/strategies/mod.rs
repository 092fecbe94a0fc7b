//! Proptest generators shared by the property suites. Architectures are
//! built from fixed name pools so element names never collide; deltas are
//! materialized against a concrete architecture so every generated
//! operation is applicable at its position in the op sequence.
#![allow(dead_code)]

use proptest::prelude::*;

use deltarc_core::annotative::{Annotated, AnnotatedComponentType};
use deltarc_core::engine::apply_op;
use deltarc_core::model::{
    AocExpr, ComponentType, Connector, ConnectorEnd, Delta, DeltaOp, Direction, ModifyBlock,
    PortDecl, SubcomponentDecl,
};

pub const PORT_POOL: [&str; 10] = [
    "pa", "pb", "pc", "pd", "pe", "pf", "pg", "ph", "pi", "pj",
];
pub const SUB_POOL: [&str; 5] = ["sa", "sb", "sc", "sd", "se"];
pub const TYPE_POOL: [&str; 4] = ["Alpha", "Beta", "Gamma", "Kappa"];
pub const PORT_TYPE_POOL: [&str; 4] = ["Sig", "Cmd", "Val", "Ack"];
pub const VARIANT_POOL: [&str; 4] = ["VarA", "VarB", "VarC", "VarD"];

pub fn direction(bit: bool) -> Direction {
    if bit {
        Direction::In
    } else {
        Direction::Out
    }
}

fn pick<'a>(pool: &'a [&'a str], idx: u8) -> &'a str {
    pool[idx as usize % pool.len()]
}

/// Connector endpoints over the architecture's current elements: its own
/// ports and `sub.port` pairs (the inner port name is unchecked, matching
/// the language, where subcomponent interfaces live in separate files).
fn candidate_ends(arch: &ComponentType, seed: (u8, u8)) -> Option<ConnectorEnd> {
    let mut ends: Vec<ConnectorEnd> = arch
        .ports
        .iter()
        .map(|p| ConnectorEnd::outer(&p.name))
        .collect();
    for s in &arch.subcomponents {
        ends.push(ConnectorEnd::inner(
            &s.instance_name,
            pick(&PORT_POOL, seed.1),
        ));
    }
    if ends.is_empty() {
        None
    } else {
        Some(ends[seed.0 as usize % ends.len()].clone())
    }
}

#[derive(Debug, Clone)]
pub struct ArchSeed {
    pub ports: Vec<Option<(bool, u8)>>,
    pub subs: Vec<Option<u8>>,
    pub connectors: Vec<(u8, u8, u8)>,
    pub autoconnect: bool,
}

pub fn arb_arch_seed() -> impl Strategy<Value = ArchSeed> {
    (
        proptest::collection::vec(
            proptest::option::of((any::<bool>(), any::<u8>())),
            PORT_POOL.len(),
        ),
        proptest::collection::vec(proptest::option::of(any::<u8>()), SUB_POOL.len()),
        proptest::collection::vec((any::<u8>(), any::<u8>(), any::<u8>()), 0..5),
        any::<bool>(),
    )
        .prop_map(|(ports, subs, connectors, autoconnect)| ArchSeed {
            ports,
            subs,
            connectors,
            autoconnect,
        })
}

pub fn build_arch(name: &str, seed: &ArchSeed) -> ComponentType {
    let mut arch = ComponentType::new(name);
    arch.autoconnect = seed.autoconnect;
    for (i, p) in seed.ports.iter().enumerate() {
        if let Some((dir, ty)) = p {
            arch.ports.push(PortDecl::new(
                direction(*dir),
                pick(&PORT_TYPE_POOL, *ty),
                PORT_POOL[i],
            ));
        }
    }
    for (i, s) in seed.subs.iter().enumerate() {
        if let Some(ty) = s {
            arch.subcomponents
                .push(SubcomponentDecl::new(pick(&TYPE_POOL, *ty), SUB_POOL[i]));
        }
    }
    for (a, b, inner) in &seed.connectors {
        let src = candidate_ends(&arch, (*a, *inner));
        let tgt = candidate_ends(&arch, (*b, inner.wrapping_add(1)));
        if let (Some(src), Some(tgt)) = (src, tgt) {
            if src != tgt && !arch.has_connector_pair(&src, &tgt) {
                arch.connectors.push(Connector::explicit(src, tgt));
            }
        }
    }
    arch
}

pub fn arb_architecture() -> impl Strategy<Value = ComponentType> {
    arb_arch_seed().prop_map(|seed| build_arch("Sys", &seed))
}

/// An always-true-free constraint over the given delta names.
pub fn arb_aoc(names: Vec<String>) -> BoxedStrategy<AocExpr> {
    if names.is_empty() {
        return Just(AocExpr::True).boxed();
    }
    let leaf = proptest::sample::select(names).prop_map(|n| AocExpr::name(&n));
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(AocExpr::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| AocExpr::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| AocExpr::or(a, b)),
        ]
    })
    .boxed()
}

#[derive(Debug, Clone)]
pub enum OpSeed {
    AddPort { dir: bool, ty: u8, name: u8 },
    RemovePort { idx: u8 },
    AddSub { ty: u8, name: u8 },
    RemoveSub { idx: u8 },
    Replace { idx: u8, ty: u8 },
    Connect { a: u8, b: u8, inner: u8 },
    Disconnect { idx: u8 },
}

pub fn arb_op_seed() -> impl Strategy<Value = OpSeed> {
    prop_oneof![
        (any::<bool>(), any::<u8>(), any::<u8>())
            .prop_map(|(dir, ty, name)| OpSeed::AddPort { dir, ty, name }),
        any::<u8>().prop_map(|idx| OpSeed::RemovePort { idx }),
        (any::<u8>(), any::<u8>()).prop_map(|(ty, name)| OpSeed::AddSub { ty, name }),
        any::<u8>().prop_map(|idx| OpSeed::RemoveSub { idx }),
        (any::<u8>(), any::<u8>()).prop_map(|(idx, ty)| OpSeed::Replace { idx, ty }),
        (any::<u8>(), any::<u8>(), any::<u8>())
            .prop_map(|(a, b, inner)| OpSeed::Connect { a, b, inner }),
        any::<u8>().prop_map(|idx| OpSeed::Disconnect { idx }),
    ]
}

/// Turns a seed into an operation applicable to `arch`, or `None` when the
/// architecture offers no valid target for it.
fn try_op(arch: &ComponentType, seed: &OpSeed) -> Option<DeltaOp> {
    match seed {
        OpSeed::AddPort { dir, ty, name } => {
            let name = pick(&PORT_POOL, *name);
            if arch.find_port(name).is_some() || arch.find_subcomponent(name).is_some() {
                return None;
            }
            Some(DeltaOp::AddPort(PortDecl::new(
                direction(*dir),
                pick(&PORT_TYPE_POOL, *ty),
                name,
            )))
        }
        OpSeed::RemovePort { idx } => {
            if arch.ports.is_empty() {
                return None;
            }
            let name = &arch.ports[*idx as usize % arch.ports.len()].name;
            Some(DeltaOp::RemovePort(name.clone()))
        }
        OpSeed::AddSub { ty, name } => {
            let name = pick(&SUB_POOL, *name);
            if arch.find_port(name).is_some() || arch.find_subcomponent(name).is_some() {
                return None;
            }
            Some(DeltaOp::AddSubcomponent(SubcomponentDecl::new(
                pick(&TYPE_POOL, *ty),
                name,
            )))
        }
        OpSeed::RemoveSub { idx } => {
            if arch.subcomponents.is_empty() {
                return None;
            }
            let name = &arch.subcomponents[*idx as usize % arch.subcomponents.len()].instance_name;
            Some(DeltaOp::RemoveSubcomponent(name.clone()))
        }
        OpSeed::Replace { idx, ty } => {
            if arch.subcomponents.is_empty() {
                return None;
            }
            let s = &arch.subcomponents[*idx as usize % arch.subcomponents.len()];
            Some(DeltaOp::ReplaceSubcomponent {
                instance_name: s.instance_name.clone(),
                replacement: SubcomponentDecl::new(pick(&TYPE_POOL, *ty), &s.instance_name),
            })
        }
        OpSeed::Connect { a, b, inner } => {
            let src = candidate_ends(arch, (*a, *inner))?;
            let tgt = candidate_ends(arch, (*b, inner.wrapping_add(1)))?;
            if src == tgt || arch.has_connector_pair(&src, &tgt) {
                return None;
            }
            Some(DeltaOp::Connect {
                source: src,
                target: tgt,
            })
        }
        OpSeed::Disconnect { idx } => {
            let explicit: Vec<&Connector> = arch
                .connectors
                .iter()
                .filter(|c| c.origin == deltarc_core::model::ConnectorOrigin::Explicit)
                .collect();
            if explicit.is_empty() {
                return None;
            }
            let c = explicit[*idx as usize % explicit.len()];
            Some(DeltaOp::Disconnect {
                source: c.source.clone(),
                target: c.target.clone(),
            })
        }
    }
}

/// Materializes a delta whose op sequence is applicable to `arch` start to
/// finish. Seeds that have no valid target are skipped; if nothing
/// materializes, a fresh-port addition keeps the delta non-empty.
pub fn materialize_delta(arch: &ComponentType, name: &str, seeds: &[OpSeed]) -> Delta {
    let mut cur = arch.clone();
    let mut ops = Vec::new();
    for seed in seeds {
        if let Some(op) = try_op(&cur, seed) {
            cur = apply_op(&cur, &cur.name.clone(), &op).expect("materialized op applies");
            ops.push(op);
        }
    }
    if ops.is_empty() {
        let mut k = 0usize;
        let name = loop {
            let candidate = format!("zz{}", k);
            if cur.find_port(&candidate).is_none() && cur.find_subcomponent(&candidate).is_none() {
                break candidate;
            }
            k += 1;
        };
        ops.push(DeltaOp::AddPort(PortDecl::new(Direction::In, "Sig", &name)));
    }
    Delta {
        name: name.to_owned(),
        aoc: AocExpr::True,
        blocks: vec![ModifyBlock {
            component: arch.name.clone(),
            ops,
        }],
    }
}

pub fn arb_op_seeds() -> impl Strategy<Value = Vec<OpSeed>> {
    proptest::collection::vec(arb_op_seed(), 1..8)
}

/// Annotated model over the variant pool; unannotated elements are core.
pub fn arb_annotated() -> impl Strategy<Value = AnnotatedComponentType> {
    (
        arb_arch_seed(),
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), VARIANT_POOL.len()), 24),
    )
        .prop_map(|(seed, masks)| {
            let arch = build_arch("Sys", &seed);
            let mut masks = masks.into_iter();
            let mut annotate = move || -> Vec<&'static str> {
                match masks.next() {
                    Some(mask) => VARIANT_POOL
                        .iter()
                        .zip(mask)
                        .filter(|(_, on)| *on)
                        .map(|(v, _)| *v)
                        .collect(),
                    None => Vec::new(),
                }
            };
            AnnotatedComponentType {
                name: arch.name,
                autoconnect: arch.autoconnect,
                ports: arch
                    .ports
                    .into_iter()
                    .map(|p| Annotated::with_variants(p, annotate()))
                    .collect(),
                subcomponents: arch
                    .subcomponents
                    .into_iter()
                    .map(|s| Annotated::with_variants(s, annotate()))
                    .collect(),
                connectors: arch
                    .connectors
                    .into_iter()
                    .map(|c| Annotated::with_variants(c, annotate()))
                    .collect(),
            }
        })
}
