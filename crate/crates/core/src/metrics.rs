//! Model-size measurement: visible-character counts, element counts per
//! scenario and representation, and comparison reports. Element counts are
//! taken over declarations as written in source (core plus everything
//! deltas introduce), not over any single generated variant, and only
//! explicit connectors count — autoconnect-synthesized ones do not.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

#[cfg(feature = "serde")]
use serde::Serialize;

use crate::annotative::AnnotatedComponentType;
use crate::engine::TypeEnv;
use crate::lexer::{tokenize, TokenKind};
use crate::model::{DeltaModel, DeltaOp};
use crate::parser::{ParseError, SourceFile, SourceKind};

/// A `/*` without its `*/`; carries the byte offset of the opener.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnterminatedComment {
    pub offset: usize,
}

impl fmt::Display for UnterminatedComment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unterminated block comment at byte {}", self.offset)
    }
}

/// Counts characters that are neither layout whitespace (space, tab, CR,
/// LF) nor inside a comment. Quoted strings are counted in full —
/// comment markers and spaces inside them are data, not formatting.
pub fn count_visible_chars(text: &str) -> Result<usize, UnterminatedComment> {
    let mut count = 0usize;
    let mut chars = text.char_indices().peekable();
    while let Some((offset, c)) = chars.next() {
        match c {
            ' ' | '\t' | '\r' | '\n' => {}
            '/' => match chars.peek() {
                Some((_, '/')) => {
                    for (_, c) in chars.by_ref() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                Some((_, '*')) => {
                    chars.next();
                    let mut closed = false;
                    while let Some((_, c)) = chars.next() {
                        if c == '*' {
                            if let Some((_, '/')) = chars.peek() {
                                chars.next();
                                closed = true;
                                break;
                            }
                        }
                    }
                    if !closed {
                        return Err(UnterminatedComment { offset });
                    }
                }
                _ => count += 1,
            },
            '"' => {
                count += 1;
                for (_, c) in chars.by_ref() {
                    count += 1;
                    if c == '"' {
                        break;
                    }
                }
            }
            _ => count += 1,
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ScenarioMetrics {
    /// Top-level component plus distinct subcomponent types that have a
    /// known interface declaration.
    pub components: usize,
    pub ports: usize,
    /// Explicit connectors only.
    pub connections: usize,
    pub variants: usize,
    /// Visible characters over all files.
    pub chars: usize,
    /// Visible characters spent on variability: delta and config files for
    /// the delta representation, stereotype annotations for the
    /// annotative one.
    pub varchars: usize,
    /// varchars / chars (0 when there is no text at all).
    pub rel_variant_info: f64,
    pub files: usize,
    pub maxchars: usize,
    pub avg_chars_per_file: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum MetricsError {
    UnterminatedComment { path: String, offset: usize },
    Parse(ParseError),
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::UnterminatedComment { path, offset } => {
                write!(f, "{}: unterminated block comment at byte {}", path, offset)
            }
            MetricsError::Parse(e) => write!(f, "{}", e),
        }
    }
}

impl From<ParseError> for MetricsError {
    fn from(e: ParseError) -> Self {
        MetricsError::Parse(e)
    }
}

fn count_file(file: &SourceFile) -> Result<usize, MetricsError> {
    count_visible_chars(&file.text).map_err(|e| MetricsError::UnterminatedComment {
        path: file.path.clone(),
        offset: e.offset,
    })
}

struct FileStats {
    chars: usize,
    files: usize,
    maxchars: usize,
}

fn file_stats(files: &[SourceFile]) -> Result<FileStats, MetricsError> {
    let mut chars = 0;
    let mut maxchars = 0;
    for f in files {
        let c = count_file(f)?;
        chars += c;
        maxchars = maxchars.max(c);
    }
    Ok(FileStats {
        chars,
        files: files.len(),
        maxchars,
    })
}

fn finish(
    components: usize,
    ports: usize,
    connections: usize,
    variants: usize,
    varchars: usize,
    stats: FileStats,
) -> ScenarioMetrics {
    let rel = if stats.chars == 0 {
        0.0
    } else {
        varchars as f64 / stats.chars as f64
    };
    let avg = if stats.files == 0 {
        0.0
    } else {
        stats.chars as f64 / stats.files as f64
    };
    ScenarioMetrics {
        components,
        ports,
        connections,
        variants,
        chars: stats.chars,
        varchars,
        rel_variant_info: rel,
        files: stats.files,
        maxchars: stats.maxchars,
        avg_chars_per_file: avg,
    }
}

/// Measures a delta model together with its source files. Ports and
/// connections are the declarations as written (core plus added-by-delta;
/// removed elements still count as written text); variability characters
/// are everything in `.delta` and `.deltaconfig` files.
pub fn measure_delta_model(
    files: &[SourceFile],
    model: &DeltaModel,
    env: &TypeEnv,
) -> Result<ScenarioMetrics, MetricsError> {
    let mut type_names: alloc::collections::BTreeSet<&str> = alloc::collections::BTreeSet::new();
    for s in &model.core.subcomponents {
        type_names.insert(&s.type_name);
    }
    let mut ports = model.core.ports.len();
    let mut connections = model.core.connectors.len();
    for delta in model.deltas.values() {
        for block in &delta.blocks {
            for op in &block.ops {
                match op {
                    DeltaOp::AddPort(_) => ports += 1,
                    DeltaOp::Connect { .. } => connections += 1,
                    DeltaOp::AddSubcomponent(s) => {
                        type_names.insert(&s.type_name);
                    }
                    DeltaOp::ReplaceSubcomponent { replacement, .. } => {
                        type_names.insert(&replacement.type_name);
                    }
                    _ => {}
                }
            }
        }
    }
    let components = 1 + type_names.iter().filter(|t| env.contains(t)).count();

    let mut varchars = 0;
    for f in files {
        if matches!(f.kind, SourceKind::Delta | SourceKind::Config) {
            varchars += count_file(f)?;
        }
    }
    let stats = file_stats(files)?;
    Ok(finish(
        components,
        ports,
        connections,
        model.configs.len(),
        varchars,
        stats,
    ))
}

/// Measures a 150% model. Variability characters are the stereotype
/// annotations themselves — each `<<variant = "...">>` token sequence,
/// layout whitespace stripped. `core_is_variant` adds one to the variant
/// count for product lines whose unannotated core is itself a supported
/// product (annotations never name it, so it is invisible to
/// `list_variants`).
pub fn measure_annotative_model(
    files: &[SourceFile],
    model: &AnnotatedComponentType,
    env: &TypeEnv,
    core_is_variant: bool,
) -> Result<ScenarioMetrics, MetricsError> {
    let mut type_names: alloc::collections::BTreeSet<&str> = alloc::collections::BTreeSet::new();
    for s in &model.subcomponents {
        type_names.insert(&s.element.type_name);
    }
    let components = 1 + type_names.iter().filter(|t| env.contains(t)).count();
    let variants = model.list_variants().len() + usize::from(core_is_variant);

    let mut varchars = 0;
    for f in files {
        varchars += stereotype_chars(f)?;
    }
    let stats = file_stats(files)?;
    Ok(finish(
        components,
        model.ports.len(),
        model.connectors.len(),
        variants,
        varchars,
        stats,
    ))
}

/// Visible characters of all stereotype spans in one file.
fn stereotype_chars(file: &SourceFile) -> Result<usize, MetricsError> {
    let tokens = tokenize(&file.path, &file.text)?;
    let mut total = 0;
    let mut open: Option<usize> = None;
    for t in &tokens {
        match t.kind {
            TokenKind::StereoOpen => open = Some(t.start),
            TokenKind::StereoClose => {
                if let Some(start) = open.take() {
                    let span = &file.text[start..t.end];
                    total += count_visible_chars(span).map_err(|e| {
                        MetricsError::UnterminatedComment {
                            path: file.path.clone(),
                            offset: start + e.offset,
                        }
                    })?;
                }
            }
            _ => {}
        }
    }
    Ok(total)
}

/// One scenario's measurements in the representations that exist for it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ScenarioComparison {
    pub label: String,
    pub delta: Option<ScenarioMetrics>,
    pub annotative: Option<ScenarioMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ComparisonReport {
    pub scenarios: Vec<ScenarioComparison>,
}

pub fn compare_scenarios(scenarios: Vec<ScenarioComparison>) -> ComparisonReport {
    ComparisonReport { scenarios }
}

fn round_nonneg(x: f64) -> u64 {
    (x + 0.5) as u64
}

const METRIC_ROWS: [&str; 10] = [
    "components",
    "ports",
    "connections",
    "variants",
    "chars",
    "varchars",
    "rel_variant_info",
    "files",
    "maxchars",
    "avg_chars_per_file",
];

fn metric_value(m: &ScenarioMetrics, row: &str, percent: bool) -> String {
    match row {
        "components" => m.components.to_string(),
        "ports" => m.ports.to_string(),
        "connections" => m.connections.to_string(),
        "variants" => m.variants.to_string(),
        "chars" => m.chars.to_string(),
        "varchars" => m.varchars.to_string(),
        "rel_variant_info" => {
            if percent {
                format!("{}%", round_nonneg(m.rel_variant_info * 100.0))
            } else {
                format!("{:.4}", m.rel_variant_info)
            }
        }
        "files" => m.files.to_string(),
        "maxchars" => m.maxchars.to_string(),
        "avg_chars_per_file" => round_nonneg(m.avg_chars_per_file).to_string(),
        _ => unreachable!(),
    }
}

fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

impl ComparisonReport {
    fn columns(&self) -> Vec<(String, &ScenarioMetrics)> {
        let mut cols = Vec::new();
        for s in &self.scenarios {
            if let Some(m) = &s.delta {
                cols.push((format!("{} (delta)", s.label), m));
            }
            if let Some(m) = &s.annotative {
                cols.push((format!("{} (150%)", s.label), m));
            }
        }
        cols
    }

    /// One row per metric, one column per scenario × representation.
    pub fn to_csv(&self) -> String {
        let cols = self.columns();
        let mut out = String::from("metric");
        for (label, _) in &cols {
            out.push(',');
            out.push_str(&csv_quote(label));
        }
        out.push('\n');
        for row in METRIC_ROWS {
            out.push_str(row);
            for (_, m) in &cols {
                out.push(',');
                out.push_str(&csv_quote(&metric_value(m, row, false)));
            }
            out.push('\n');
        }
        out
    }

    /// Two tables (one per representation), metrics as rows and scenarios
    /// as columns.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        for (title, pick) in [
            ("Delta-oriented", 0usize),
            ("Annotative (150% model)", 1usize),
        ] {
            let cols: Vec<(&str, &ScenarioMetrics)> = self
                .scenarios
                .iter()
                .filter_map(|s| {
                    let m = if pick == 0 { &s.delta } else { &s.annotative };
                    m.as_ref().map(|m| (s.label.as_str(), m))
                })
                .collect();
            if cols.is_empty() {
                continue;
            }
            out.push_str(&format!("## {}\n\n", title));
            out.push_str("| metric |");
            for (label, _) in &cols {
                out.push_str(&format!(" {} |", label));
            }
            out.push_str("\n|---|");
            for _ in &cols {
                out.push_str("---|");
            }
            out.push('\n');
            for row in METRIC_ROWS {
                out.push_str(&format!("| {} |", row));
                for (_, m) in &cols {
                    out.push_str(&format!(" {} |", metric_value(m, row, true)));
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }

    /// Chart dataset: total characters per scenario per representation.
    pub fn chart_chars(&self) -> Vec<(String, Option<usize>, Option<usize>)> {
        self.scenarios
            .iter()
            .map(|s| {
                (
                    s.label.clone(),
                    s.delta.as_ref().map(|m| m.chars),
                    s.annotative.as_ref().map(|m| m.chars),
                )
            })
            .collect()
    }

    /// Chart dataset: relative variability information per scenario per
    /// representation.
    pub fn chart_rel_info(&self) -> Vec<(String, Option<f64>, Option<f64>)> {
        self.scenarios
            .iter()
            .map(|s| {
                (
                    s.label.clone(),
                    s.delta.as_ref().map(|m| m.rel_variant_info),
                    s.annotative.as_ref().map(|m| m.rel_variant_info),
                )
            })
            .collect()
    }
}
