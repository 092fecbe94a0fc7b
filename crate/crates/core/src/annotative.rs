//! Annotative ("150%") representation: one architecture containing every
//! variant's elements, each tagged with the variant names it belongs to.
//! Untagged elements form the common core. Variants are obtained by
//! projection, the counterpart of delta application.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;

#[cfg(feature = "serde")]
use serde::Serialize;

use crate::model::{
    is_identifier, ComponentType, Connector, InvariantViolation, PortDecl, SubcomponentDecl,
};

/// Reserved variant name that projects only unannotated elements.
pub const CORE_VARIANT: &str = "core";

/// An architectural element plus the set of variants it belongs to.
/// An empty set marks a core element, present in every variant.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Annotated<T> {
    pub element: T,
    pub variants: BTreeSet<String>,
}

impl<T> Annotated<T> {
    pub fn core(element: T) -> Self {
        Annotated {
            element,
            variants: BTreeSet::new(),
        }
    }

    pub fn with_variants<'a, I: IntoIterator<Item = &'a str>>(element: T, variants: I) -> Self {
        Annotated {
            element,
            variants: variants.into_iter().map(|v| v.to_owned()).collect(),
        }
    }

    pub fn is_core(&self) -> bool {
        self.variants.is_empty()
    }

    fn included_in(&self, variant: &str) -> bool {
        if variant == CORE_VARIANT {
            self.is_core()
        } else {
            self.is_core() || self.variants.contains(variant)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct AnnotatedComponentType {
    pub name: String,
    pub autoconnect: bool,
    pub ports: Vec<Annotated<PortDecl>>,
    pub subcomponents: Vec<Annotated<SubcomponentDecl>>,
    pub connectors: Vec<Annotated<Connector>>,
}

impl AnnotatedComponentType {
    /// Every variant name that occurs in some annotation, sorted.
    pub fn list_variants(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for v in self.ports.iter().flat_map(|a| a.variants.iter()) {
            out.insert(v.as_str());
        }
        for v in self.subcomponents.iter().flat_map(|a| a.variants.iter()) {
            out.insert(v.as_str());
        }
        for v in self.connectors.iter().flat_map(|a| a.variants.iter()) {
            out.insert(v.as_str());
        }
        out
    }

    /// Keeps every element that is core or annotated with `variant` and
    /// strips the annotations. The reserved name [`CORE_VARIANT`] projects
    /// the pure core. The result must satisfy the plain component
    /// invariants; dangling connector ends are not an invariant violation
    /// here and surface in well-formedness checking instead.
    pub fn project_variant(&self, variant: &str) -> Result<ComponentType, ProjectionError> {
        if variant != CORE_VARIANT && !self.list_variants().contains(variant) {
            return Err(ProjectionError::UnknownVariant(variant.to_owned()));
        }
        let projected = ComponentType {
            name: self.name.clone(),
            autoconnect: self.autoconnect,
            ports: self
                .ports
                .iter()
                .filter(|a| a.included_in(variant))
                .map(|a| a.element.clone())
                .collect(),
            subcomponents: self
                .subcomponents
                .iter()
                .filter(|a| a.included_in(variant))
                .map(|a| a.element.clone())
                .collect(),
            connectors: self
                .connectors
                .iter()
                .filter(|a| a.included_in(variant))
                .map(|a| a.element.clone())
                .collect(),
        };
        let violations = projected.check_local_invariants();
        if violations.is_empty() {
            Ok(projected)
        } else {
            Err(ProjectionError::Invalid {
                variant: variant.to_owned(),
                violations,
            })
        }
    }

    /// Invariants of the combined model. Name uniqueness is required per
    /// variant, not globally: two same-named elements may coexist when
    /// their annotation sets are disjoint and both non-empty (e.g. variant
    /// groups sharing one instance name), because no projection then sees
    /// both. Annotation names must be identifiers and must not use the
    /// reserved core name.
    pub fn check_local_invariants(&self) -> Vec<InvariantViolation> {
        let mut out = Vec::new();
        if !is_identifier(&self.name) {
            out.push(InvariantViolation::InvalidIdentifier {
                role: "component name",
                value: self.name.clone(),
            });
        }
        for variants in self
            .ports
            .iter()
            .map(|a| &a.variants)
            .chain(self.subcomponents.iter().map(|a| &a.variants))
            .chain(self.connectors.iter().map(|a| &a.variants))
        {
            for v in variants {
                if v == CORE_VARIANT {
                    out.push(InvariantViolation::ReservedVariantName(v.clone()));
                } else if !is_identifier(v) {
                    out.push(InvariantViolation::InvalidIdentifier {
                        role: "variant name",
                        value: v.clone(),
                    });
                }
            }
        }

        let ports: Vec<(&str, &BTreeSet<String>)> = self
            .ports
            .iter()
            .map(|a| (a.element.name.as_str(), &a.variants))
            .collect();
        for (name, _) in overlapping_pairs(&ports) {
            out.push(InvariantViolation::DuplicatePortName(name.to_owned()));
        }
        let subs: Vec<(&str, &BTreeSet<String>)> = self
            .subcomponents
            .iter()
            .map(|a| (a.element.instance_name.as_str(), &a.variants))
            .collect();
        for (name, _) in overlapping_pairs(&subs) {
            out.push(InvariantViolation::DuplicateSubcomponentName(name.to_owned()));
        }
        for (pn, pv) in &ports {
            for (sn, sv) in &subs {
                if pn == sn && sets_overlap(pv, sv) {
                    out.push(InvariantViolation::PortSubcomponentClash((*pn).to_owned()));
                    break;
                }
            }
        }
        for c in &self.connectors {
            if c.element.source == c.element.target {
                out.push(InvariantViolation::SelfLoopConnector(c.element.clone()));
            }
        }
        out.dedup();
        out
    }
}

/// Two annotation sets can co-occur in some projection iff they intersect
/// or either is the core (empty) set.
fn sets_overlap(a: &BTreeSet<String>, b: &BTreeSet<String>) -> bool {
    a.is_empty() || b.is_empty() || a.intersection(b).next().is_some()
}

fn overlapping_pairs<'a>(
    items: &'a [(&'a str, &'a BTreeSet<String>)],
) -> BTreeSet<(&'a str, &'a str)> {
    let mut out = BTreeSet::new();
    for (i, (name_a, va)) in items.iter().enumerate() {
        for (name_b, vb) in items.iter().skip(i + 1) {
            if name_a == name_b && sets_overlap(va, vb) {
                out.insert((*name_a, *name_b));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ProjectionError {
    UnknownVariant(String),
    Invalid {
        variant: String,
        violations: Vec<InvariantViolation>,
    },
}

impl fmt::Display for ProjectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionError::UnknownVariant(v) => write!(f, "unknown variant `{}`", v),
            ProjectionError::Invalid { variant, violations } => {
                write!(
                    f,
                    "projection of variant `{}` violates component invariants:",
                    variant
                )?;
                for v in violations {
                    write!(f, " {};", v)?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConnectorEnd, Direction};
    use alloc::vec;

    fn port(name: &str) -> PortDecl {
        PortDecl::new(Direction::In, "T", name)
    }

    fn model() -> AnnotatedComponentType {
        AnnotatedComponentType {
            name: "BrakingSystem".to_owned(),
            autoconnect: true,
            ports: vec![
                Annotated::core(port("brake")),
                Annotated::with_variants(port("brakerear"), ["BikeWithABS"]),
                Annotated::with_variants(port("accel"), ["CarWithTC", "CarWithESC"]),
            ],
            subcomponents: vec![
                Annotated::with_variants(
                    SubcomponentDecl::new("PressureCalculator", "brakefunction"),
                    ["CarWithoutABS"],
                ),
                Annotated::with_variants(
                    SubcomponentDecl::new("ABS", "brakefunction"),
                    ["BikeWithABS", "CarWithTC", "CarWithESC"],
                ),
            ],
            connectors: vec![Annotated::with_variants(
                Connector::explicit(
                    ConnectorEnd::outer("accel"),
                    ConnectorEnd::inner("stabilizer", "accel"),
                ),
                ["CarWithTC"],
            )],
        }
    }

    #[test]
    fn variants_are_the_union_of_annotations() {
        let m = model();
        let names: Vec<&str> = m.list_variants().into_iter().collect();
        assert_eq!(
            names,
            vec![
                "BikeWithABS",
                "CarWithESC",
                "CarWithTC",
                "CarWithoutABS"
            ]
        );
    }

    #[test]
    fn projection_filters_by_annotation() {
        let m = model();
        let bike = m.project_variant("BikeWithABS").unwrap();
        assert!(bike.find_port("brake").is_some());
        assert!(bike.find_port("brakerear").is_some());
        assert!(bike.find_port("accel").is_none());
        assert_eq!(bike.find_subcomponent("brakefunction").unwrap().type_name, "ABS");
        assert!(bike.connectors.is_empty());

        let tc = m.project_variant("CarWithTC").unwrap();
        assert_eq!(tc.connectors.len(), 1);
    }

    #[test]
    fn core_projection_keeps_only_unannotated_elements() {
        let core = model().project_variant(CORE_VARIANT).unwrap();
        assert_eq!(core.ports.len(), 1);
        assert!(core.subcomponents.is_empty());
        assert!(core.connectors.is_empty());
    }

    #[test]
    fn core_elements_are_in_every_projection() {
        let m = model();
        let core = m.project_variant(CORE_VARIANT).unwrap();
        for v in m.list_variants() {
            let p = m.project_variant(v).unwrap();
            for port in &core.ports {
                assert!(p.ports.contains(port), "{} missing in {}", port.name, v);
            }
        }
    }

    #[test]
    fn unknown_variant_rejected() {
        assert_eq!(
            model().project_variant("Nope"),
            Err(ProjectionError::UnknownVariant("Nope".to_owned()))
        );
    }

    #[test]
    fn disjoint_same_name_elements_are_legal_but_overlap_is_not() {
        let mut m = model();
        assert!(m.check_local_invariants().is_empty());
        // Make the two brakefunction groups overlap in CarWithTC.
        m.subcomponents[0]
            .variants
            .insert("CarWithTC".to_owned());
        let violations = m.check_local_invariants();
        assert!(violations
            .contains(&InvariantViolation::DuplicateSubcomponentName("brakefunction".to_owned())));
        let err = m.project_variant("CarWithTC").unwrap_err();
        assert!(matches!(err, ProjectionError::Invalid { .. }));
    }

    #[test]
    fn core_duplicate_is_always_a_violation() {
        let mut m = model();
        m.ports.push(Annotated::core(port("brake")));
        assert!(m
            .check_local_invariants()
            .contains(&InvariantViolation::DuplicatePortName("brake".to_owned())));
    }

    #[test]
    fn reserved_and_invalid_annotation_names_flagged() {
        let mut m = model();
        m.ports
            .push(Annotated::with_variants(port("x"), ["core"]));
        m.ports
            .push(Annotated::with_variants(port("y"), ["9bad"]));
        let violations = m.check_local_invariants();
        assert!(violations.contains(&InvariantViolation::ReservedVariantName("core".to_owned())));
        assert!(violations.iter().any(|v| matches!(
            v,
            InvariantViolation::InvalidIdentifier { role: "variant name", .. }
        )));
    }
}
