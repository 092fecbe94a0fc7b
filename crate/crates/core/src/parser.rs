//! Recursive-descent parsers for the four input languages:
//!
//! * `.arc` — component architectures,
//! * `.delta` — named modification deltas with application order constraints,
//! * `.deltaconfig` — product configurations (delta subsets),
//! * annotated `.arc` — architectures whose declarations may carry
//!   `<<variant = "...">>` stereotypes.
//!
//! All parsers produce positioned errors and never panic on malformed
//! input. Source ordering of declarations is preserved; comments are
//! discarded. Port sections (`port in T a, out U b;`) and connector
//! fan-out (`connect s -> t1, t2;`) desugar to one declaration each.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;

#[cfg(feature = "serde")]
use serde::Serialize;

use crate::annotative::{Annotated, AnnotatedComponentType};
use crate::lexer::{tokenize, Token, TokenKind};
use crate::model::{
    AocExpr, ComponentType, Connector, ConnectorEnd, Delta, DeltaConfig, DeltaOp, Direction,
    InvariantViolation, ModifyBlock, PortDecl, SubcomponentDecl,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SourceKind {
    Architecture,
    Delta,
    Config,
    Annotated,
}

impl SourceKind {
    /// Kind implied by the file extension. Annotated models share `.arc`
    /// and are selected explicitly by the caller.
    pub fn from_path(path: &str) -> Option<SourceKind> {
        let ext = path.rsplit('.').next()?;
        match ext {
            "arc" => Some(SourceKind::Architecture),
            "delta" => Some(SourceKind::Delta),
            "deltaconfig" => Some(SourceKind::Config),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub path: String,
    pub kind: SourceKind,
    pub text: String,
}

impl SourceFile {
    pub fn new(path: &str, kind: SourceKind, text: &str) -> Self {
        SourceFile {
            path: path.to_owned(),
            kind,
            text: text.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "category", rename_all = "snake_case"))]
pub enum ParseErrorKind {
    Syntax,
    /// The text parsed but the resulting element breaks its invariants.
    Invariant(Vec<InvariantViolation>),
    /// A delta's order constraint references the delta itself.
    SelfReference,
    /// A configuration lists the same delta twice.
    DuplicateDelta,
    /// `<<variant = "">>` — a stereotype must name at least one variant.
    EmptyVariantList,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ParseError {
    pub path: String,
    /// 1-based.
    pub line: usize,
    /// 1-based.
    pub column: usize,
    pub message: String,
    /// Token spellings that would have been accepted here (syntax errors).
    pub expected: Vec<String>,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {}",
            self.path, self.line, self.column, self.message
        )?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

pub fn parse_architecture(src: &SourceFile) -> Result<ComponentType, ParseError> {
    let annotated = parse_component_file(src, false)?;
    let plain = strip_annotations(annotated);
    let violations = plain.check_local_invariants();
    if violations.is_empty() {
        Ok(plain)
    } else {
        Err(invariant_error(src, &plain.name, violations))
    }
}

pub fn parse_annotated(src: &SourceFile) -> Result<AnnotatedComponentType, ParseError> {
    let model = parse_component_file(src, true)?;
    let violations = model.check_local_invariants();
    if violations.is_empty() {
        Ok(model)
    } else {
        Err(invariant_error(src, &model.name, violations))
    }
}

pub fn parse_delta(src: &SourceFile) -> Result<Delta, ParseError> {
    let mut p = P::new(src)?;
    p.expect_kw("delta")?;
    let name_tok = p.expect_ident("delta name")?;
    let aoc = if p.at_kw("after") {
        p.bump();
        p.parse_aoc()?
    } else {
        AocExpr::True
    };
    p.expect_kind(TokenKind::LBrace)?;
    let mut blocks = Vec::new();
    while !p.at(TokenKind::RBrace) {
        blocks.push(p.parse_modify_block()?);
    }
    p.expect_kind(TokenKind::RBrace)?;
    p.expect_eof()?;

    let delta = Delta {
        name: name_tok.text.clone(),
        aoc,
        blocks,
    };
    if delta.references_self() {
        return Err(p.error_at(
            &name_tok,
            format!(
                "delta `{}` references itself in its order constraint",
                delta.name
            ),
            Vec::new(),
            ParseErrorKind::SelfReference,
        ));
    }
    if delta.blocks.iter().all(|b| b.ops.is_empty()) {
        return Err(p.error_at(
            &name_tok,
            format!("delta `{}` contains no operations", delta.name),
            Vec::new(),
            ParseErrorKind::Syntax,
        ));
    }
    Ok(delta)
}

pub fn parse_config(src: &SourceFile) -> Result<DeltaConfig, ParseError> {
    let mut p = P::new(src)?;
    p.expect_kw("deltaconfig")?;
    let name = p.expect_ident("configuration name")?.text;
    p.expect_kind(TokenKind::LBrace)?;
    let mut deltas: Vec<String> = Vec::new();
    if !p.at(TokenKind::RBrace) {
        loop {
            let tok = p.expect_ident("delta name")?;
            if deltas.contains(&tok.text) {
                return Err(p.error_at(
                    &tok,
                    format!("delta `{}` listed twice", tok.text),
                    Vec::new(),
                    ParseErrorKind::DuplicateDelta,
                ));
            }
            deltas.push(tok.text);
            if p.at(TokenKind::Comma) {
                p.bump();
            } else {
                break;
            }
        }
    }
    p.expect_kind(TokenKind::RBrace)?;
    p.expect_eof()?;
    Ok(DeltaConfig { name, deltas })
}

fn invariant_error(
    src: &SourceFile,
    component: &str,
    violations: Vec<InvariantViolation>,
) -> ParseError {
    let msgs: Vec<String> = violations.iter().map(|v| format!("{}", v)).collect();
    ParseError {
        path: src.path.clone(),
        line: 1,
        column: 1,
        message: format!("component `{}` is invalid: {}", component, msgs.join("; ")),
        expected: Vec::new(),
        kind: ParseErrorKind::Invariant(violations),
    }
}

fn strip_annotations(a: AnnotatedComponentType) -> ComponentType {
    ComponentType {
        name: a.name,
        autoconnect: a.autoconnect,
        ports: a.ports.into_iter().map(|p| p.element).collect(),
        subcomponents: a.subcomponents.into_iter().map(|s| s.element).collect(),
        connectors: a.connectors.into_iter().map(|c| c.element).collect(),
    }
}

fn parse_component_file(
    src: &SourceFile,
    allow_annotations: bool,
) -> Result<AnnotatedComponentType, ParseError> {
    let mut p = P::new(src)?;
    p.expect_kw("component")?;
    let name = p.expect_ident("component name")?.text;
    p.expect_kind(TokenKind::LBrace)?;

    let mut model = AnnotatedComponentType {
        name,
        autoconnect: false,
        ports: Vec::new(),
        subcomponents: Vec::new(),
        connectors: Vec::new(),
    };

    if p.at_kw("autoconnect") {
        p.bump();
        p.expect_kw("port")?;
        p.expect_kind(TokenKind::Semi)?;
        model.autoconnect = true;
    }

    while !p.at(TokenKind::RBrace) {
        p.parse_body_statement(&mut model, allow_annotations)?;
    }
    p.expect_kind(TokenKind::RBrace)?;
    p.expect_eof()?;
    Ok(model)
}

struct P<'a> {
    path: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

impl<'a> P<'a> {
    fn new(src: &'a SourceFile) -> Result<Self, ParseError> {
        let toks = tokenize(&src.path, &src.text)?;
        Ok(P {
            path: &src.path,
            toks,
            pos: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at(&self, kind: TokenKind) -> bool {
        self.peek().kind == kind
    }

    fn at_kw(&self, kw: &str) -> bool {
        let t = self.peek();
        t.kind == TokenKind::Ident && t.text == kw
    }

    fn describe_current(&self) -> String {
        let t = self.peek();
        match t.kind {
            TokenKind::Ident => format!("`{}`", t.text),
            TokenKind::Str => format!("\"{}\"", t.text),
            TokenKind::Eof => "end of file".to_owned(),
            k => k.describe().to_owned(),
        }
    }

    fn error_at(
        &self,
        tok: &Token,
        message: String,
        expected: Vec<String>,
        kind: ParseErrorKind,
    ) -> ParseError {
        ParseError {
            path: self.path.to_owned(),
            line: tok.line,
            column: tok.column,
            message,
            expected,
            kind,
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.error_at(
            &self.peek().clone(),
            format!("unexpected {}", self.describe_current()),
            expected.iter().map(|e| (*e).to_owned()).collect(),
            ParseErrorKind::Syntax,
        )
    }

    fn expect_kind(&mut self, kind: TokenKind) -> Result<Token, ParseError> {
        if self.at(kind) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[kind.describe()]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Token, ParseError> {
        if self.at_kw(kw) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[kw]))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<Token, ParseError> {
        if self.at(TokenKind::Ident) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[what]))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if self.at(TokenKind::Eof) {
            Ok(())
        } else {
            Err(self.unexpected(&["end of file"]))
        }
    }

    /// `<<variant = "A, B">>`, already positioned at `<<`.
    fn parse_stereotype(&mut self) -> Result<BTreeSet<String>, ParseError> {
        self.expect_kind(TokenKind::StereoOpen)?;
        self.expect_kw("variant")?;
        self.expect_kind(TokenKind::Eq)?;
        let s = self.expect_kind(TokenKind::Str)?;
        self.expect_kind(TokenKind::StereoClose)?;

        let mut names = BTreeSet::new();
        for raw in s.text.split(',') {
            let name = raw.trim();
            if name.is_empty() {
                continue;
            }
            names.insert(name.to_owned());
        }
        if names.is_empty() {
            return Err(self.error_at(
                &s,
                "stereotype lists no variant names".to_owned(),
                Vec::new(),
                ParseErrorKind::EmptyVariantList,
            ));
        }
        Ok(names)
    }

    fn maybe_stereotype(
        &mut self,
        allow_annotations: bool,
    ) -> Result<BTreeSet<String>, ParseError> {
        if self.at(TokenKind::StereoOpen) {
            if !allow_annotations {
                return Err(self.unexpected(&["port", "component", "connect", "}"]));
            }
            self.parse_stereotype()
        } else {
            Ok(BTreeSet::new())
        }
    }

    fn parse_body_statement(
        &mut self,
        model: &mut AnnotatedComponentType,
        allow_annotations: bool,
    ) -> Result<(), ParseError> {
        // A stereotype before `component`/`connect` annotates that whole
        // statement; inside a port section each declaration has its own.
        let leading = self.maybe_stereotype(allow_annotations)?;

        if self.at_kw("port") {
            if !leading.is_empty() {
                // Grammar places port annotations inside the section.
                return Err(self.unexpected(&["component", "connect"]));
            }
            self.bump();
            loop {
                let variants = self.maybe_stereotype(allow_annotations)?;
                let decl = self.parse_port_decl()?;
                model.ports.push(Annotated {
                    element: decl,
                    variants,
                });
                if self.at(TokenKind::Comma) {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect_kind(TokenKind::Semi)?;
        } else if self.at_kw("component") {
            self.bump();
            let decl = self.parse_subcomponent_decl()?;
            self.expect_kind(TokenKind::Semi)?;
            model.subcomponents.push(Annotated {
                element: decl,
                variants: leading,
            });
        } else if self.at_kw("connect") {
            self.bump();
            let source = self.parse_ref()?;
            self.expect_kind(TokenKind::Arrow)?;
            loop {
                let target = self.parse_ref()?;
                model.connectors.push(Annotated {
                    element: Connector::explicit(source.clone(), target),
                    variants: leading.clone(),
                });
                if self.at(TokenKind::Comma) {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect_kind(TokenKind::Semi)?;
        } else {
            return Err(self.unexpected(&["port", "component", "connect", "}"]));
        }
        Ok(())
    }

    /// `("in" | "out") TYPE NAME`
    fn parse_port_decl(&mut self) -> Result<PortDecl, ParseError> {
        let direction = if self.at_kw("in") {
            self.bump();
            Direction::In
        } else if self.at_kw("out") {
            self.bump();
            Direction::Out
        } else {
            return Err(self.unexpected(&["in", "out"]));
        };
        let type_name = self.expect_ident("port type")?.text;
        let name = self.expect_ident("port name")?.text;
        Ok(PortDecl {
            direction,
            type_name,
            name,
        })
    }

    /// `TYPE [INSTANCE]` after the `component` keyword; a missing instance
    /// name defaults to the type name.
    fn parse_subcomponent_decl(&mut self) -> Result<SubcomponentDecl, ParseError> {
        let type_name = self.expect_ident("subcomponent type")?.text;
        let instance_name = if self.at(TokenKind::Ident) {
            self.bump().text
        } else {
            type_name.clone()
        };
        Ok(SubcomponentDecl {
            type_name,
            instance_name,
        })
    }

    /// `NAME` (outer port) or `SUB.PORT`.
    fn parse_ref(&mut self) -> Result<ConnectorEnd, ParseError> {
        let first = self.expect_ident("port or subcomponent")?.text;
        if self.at(TokenKind::Dot) {
            self.bump();
            let port = self.expect_ident("port name")?.text;
            Ok(ConnectorEnd {
                subcomponent: Some(first),
                port,
            })
        } else {
            Ok(ConnectorEnd {
                subcomponent: None,
                port: first,
            })
        }
    }

    fn parse_modify_block(&mut self) -> Result<ModifyBlock, ParseError> {
        if !self.at_kw("modify") {
            return Err(self.unexpected(&["modify", "}"]));
        }
        self.bump();
        self.expect_kw("component")?;
        let component = self.expect_ident("component name")?.text;
        self.expect_kind(TokenKind::LBrace)?;
        let mut ops = Vec::new();
        while !self.at(TokenKind::RBrace) {
            self.parse_delta_op(&mut ops)?;
        }
        self.expect_kind(TokenKind::RBrace)?;
        Ok(ModifyBlock { component, ops })
    }

    fn parse_delta_op(&mut self, ops: &mut Vec<DeltaOp>) -> Result<(), ParseError> {
        if self.at_kw("add") {
            self.bump();
            if self.at_kw("port") {
                self.bump();
                loop {
                    ops.push(DeltaOp::AddPort(self.parse_port_decl()?));
                    if self.at(TokenKind::Comma) {
                        self.bump();
                    } else {
                        break;
                    }
                }
            } else if self.at_kw("component") {
                self.bump();
                ops.push(DeltaOp::AddSubcomponent(self.parse_subcomponent_decl()?));
            } else {
                return Err(self.unexpected(&["port", "component"]));
            }
        } else if self.at_kw("remove") {
            self.bump();
            if self.at_kw("port") {
                self.bump();
                ops.push(DeltaOp::RemovePort(self.expect_ident("port name")?.text));
            } else if self.at_kw("component") {
                self.bump();
                ops.push(DeltaOp::RemoveSubcomponent(
                    self.expect_ident("subcomponent name")?.text,
                ));
            } else {
                return Err(self.unexpected(&["port", "component"]));
            }
        } else if self.at_kw("replace") {
            self.bump();
            self.expect_kw("component")?;
            let instance_name = self.expect_ident("subcomponent name")?.text;
            self.expect_kw("with")?;
            self.expect_kw("component")?;
            let type_name = self.expect_ident("subcomponent type")?.text;
            let new_instance = self.expect_ident("subcomponent name")?.text;
            ops.push(DeltaOp::ReplaceSubcomponent {
                instance_name,
                replacement: SubcomponentDecl {
                    type_name,
                    instance_name: new_instance,
                },
            });
        } else if self.at_kw("connect") {
            self.bump();
            let source = self.parse_ref()?;
            self.expect_kind(TokenKind::Arrow)?;
            let target = self.parse_ref()?;
            ops.push(DeltaOp::Connect { source, target });
        } else if self.at_kw("disconnect") {
            self.bump();
            let source = self.parse_ref()?;
            self.expect_kind(TokenKind::Arrow)?;
            let target = self.parse_ref()?;
            ops.push(DeltaOp::Disconnect { source, target });
        } else {
            return Err(self.unexpected(&[
                "add",
                "remove",
                "replace",
                "connect",
                "disconnect",
                "}",
            ]));
        }
        self.expect_kind(TokenKind::Semi)?;
        Ok(())
    }

    /// `!` binds tighter than `&&`, which binds tighter than `||`.
    fn parse_aoc(&mut self) -> Result<AocExpr, ParseError> {
        let mut left = self.parse_aoc_and()?;
        while self.at(TokenKind::OrOr) {
            self.bump();
            let right = self.parse_aoc_and()?;
            left = AocExpr::or(left, right);
        }
        Ok(left)
    }

    fn parse_aoc_and(&mut self) -> Result<AocExpr, ParseError> {
        let mut left = self.parse_aoc_unary()?;
        while self.at(TokenKind::AndAnd) {
            self.bump();
            let right = self.parse_aoc_unary()?;
            left = AocExpr::and(left, right);
        }
        Ok(left)
    }

    fn parse_aoc_unary(&mut self) -> Result<AocExpr, ParseError> {
        if self.at(TokenKind::Bang) {
            self.bump();
            Ok(AocExpr::not(self.parse_aoc_unary()?))
        } else if self.at(TokenKind::LParen) {
            self.bump();
            let inner = self.parse_aoc()?;
            self.expect_kind(TokenKind::RParen)?;
            Ok(inner)
        } else if self.at(TokenKind::Ident) {
            Ok(AocExpr::Name(self.bump().text))
        } else {
            Err(self.unexpected(&["delta name", "!", "("]))
        }
    }
}
