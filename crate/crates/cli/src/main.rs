use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use deltarc_cli::{family_dot, load_product_line, write_model, LoadError, ProductLine};
use deltarc_core::engine::{
    check_confluence, check_family, compute_orders, generate_variant, GenerateError, OrderError,
};
use deltarc_core::metrics::{
    compare_scenarios, measure_annotative_model, measure_delta_model, ScenarioComparison,
};
use deltarc_core::parser::{parse_annotated, SourceFile, SourceKind};
use deltarc_core::refactor::{
    apply_compose_refactoring, apply_merge_with_core, invert_delta, RefactorError,
    RefactoringOutcome,
};
use deltarc_core::unparse::{unparse_architecture, unparse_delta};

/// Cap for order enumeration in analyses; fixture families stay far below.
const ORDER_LIMIT: usize = 1000;

#[derive(Parser)]
#[command(
    name = "deltarc",
    version,
    about = "Delta-oriented architecture product lines: variant generation, \
             analysis, refactoring, projection, and metrics"
)]
struct Cli {
    /// Emit machine-readable JSON instead of human-readable text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a product-line directory and analyse every configuration.
    Check {
        dir: PathBuf,
        /// Treat warnings as findings and lint configurations that contain
        /// a delta together with one its constraint negates.
        #[arg(long)]
        strict: bool,
    },
    /// Generate the variant of one configuration.
    Generate {
        dir: PathBuf,
        #[arg(long)]
        config: String,
        /// Write to a file instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Skip autoconnect resolution; emit the raw applied architecture.
        #[arg(long)]
        no_normalize: bool,
    },
    /// Print valid delta application order(s) for a configuration.
    Order {
        dir: PathBuf,
        #[arg(long)]
        config: String,
        /// Print every valid order, not just the first.
        #[arg(long)]
        all: bool,
        /// Enumeration cap.
        #[arg(long, default_value_t = ORDER_LIMIT)]
        limit: usize,
    },
    /// Check that all valid orders of a configuration agree on the variant.
    Confluence {
        dir: PathBuf,
        #[arg(long)]
        config: String,
        #[arg(long, default_value_t = ORDER_LIMIT)]
        limit: usize,
    },
    /// Compose a delta sequence into a single delta (variant-preserving).
    Compose {
        dir: PathBuf,
        /// Sequence members, in application order.
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<String>,
        /// Name of the composed delta (may reuse a member's name).
        #[arg(long)]
        name: String,
        /// Rewrite the directory itself.
        #[arg(long)]
        in_place: bool,
        /// Write the refactored product line to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge a delta sequence into the core (variant-preserving).
    MergeCore {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<String>,
        /// Keep the old core reachable through an inverse delta.
        #[arg(long)]
        inverse: bool,
        #[arg(long)]
        in_place: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invert a delta against a context architecture.
    Invert {
        dir: PathBuf,
        #[arg(long)]
        delta: String,
        /// `core` or a configuration name; the inverse undoes the delta on
        /// that context.
        #[arg(long)]
        context: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Project one variant out of an annotated architecture file.
    Project {
        file: PathBuf,
        /// Variant name; `core` projects the unannotated model.
        #[arg(long)]
        variant: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Measure one or more scenario directories and emit a comparison.
    Metrics {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Annotated model to measure against a single directory (overrides
        /// the manifest's `[annotative]` entry).
        #[arg(long)]
        annotative: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Export core, deltas, order edges, and configurations as DOT.
    Graph {
        dir: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
    Json,
}

/// A command failure: usage/parse problems exit 2, analysis findings exit 1.
enum Failure {
    Usage(String),
    Findings(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Findings(_) => 1,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Findings(m) => m,
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli.command, json) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if json {
                println!(
                    "{}",
                    json!({ "error": f.message(), "exit": f.code() })
                );
            } else {
                eprintln!("error: {}", f.message());
            }
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command, json: bool) -> Result<(), Failure> {
    match command {
        Command::Check { dir, strict } => cmd_check(&dir, strict, json),
        Command::Generate {
            dir,
            config,
            out,
            no_normalize,
        } => cmd_generate(&dir, &config, out.as_deref(), no_normalize, json),
        Command::Order {
            dir,
            config,
            all,
            limit,
        } => cmd_order(&dir, &config, all, limit, json),
        Command::Confluence { dir, config, limit } => cmd_confluence(&dir, &config, limit, json),
        Command::Compose {
            dir,
            deltas,
            name,
            in_place,
            out,
        } => cmd_compose(&dir, &deltas, &name, in_place, out.as_deref(), json),
        Command::MergeCore {
            dir,
            deltas,
            inverse,
            in_place,
            out,
        } => cmd_merge_core(&dir, &deltas, inverse, in_place, out.as_deref(), json),
        Command::Invert {
            dir,
            delta,
            context,
            out,
        } => cmd_invert(&dir, &delta, &context, out.as_deref(), json),
        Command::Project { file, variant, out } => {
            cmd_project(&file, &variant, out.as_deref(), json)
        }
        Command::Metrics {
            dirs,
            annotative,
            format,
            out,
        } => cmd_metrics(&dirs, annotative.as_deref(), format, out.as_deref(), json),
        Command::Graph { dir, out } => cmd_graph(&dir, out.as_deref(), json),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e))),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn lookup_config<'a>(
    pl: &'a ProductLine,
    name: &str,
) -> Result<&'a deltarc_core::DeltaConfig, Failure> {
    pl.model.configs.get(name).ok_or_else(|| {
        Failure::Usage(format!(
            "no configuration `{}` in {} (have: {})",
            name,
            pl.root.display(),
            pl.model
                .configs
                .keys()
                .map(String::as_str)
                .collect::<Vec<_>>()
                .join(", ")
        ))
    })
}

fn refactor_failure(e: RefactorError) -> Failure {
    match e {
        RefactorError::UnknownDelta(_)
        | RefactorError::UnknownConfig(_)
        | RefactorError::DuplicateInSequence(_)
        | RefactorError::SequenceTooShort { .. }
        | RefactorError::NameCollision(_) => Failure::Usage(e.to_string()),
        _ => Failure::Findings(e.to_string()),
    }
}

fn cmd_check(dir: &Path, strict: bool, json: bool) -> Result<(), Failure> {
    let pl = load_product_line(dir)?;
    let summary = check_family(&pl.model, &pl.env, ORDER_LIMIT, strict);

    let annotative_violations: Vec<String> = pl
        .annotative
        .as_ref()
        .map(|side| {
            side.model
                .check_local_invariants()
                .iter()
                .map(|v| v.to_string())
                .collect()
        })
        .unwrap_or_default();

    let config_errors = !summary.all_ok();
    let warnings =
        !summary.redundant_deltas.is_empty() || !summary.unused_aoc_references.is_empty();
    let conflicts = !summary.conflicts.is_empty();
    let failed = config_errors
        || !annotative_violations.is_empty()
        || (strict && (warnings || conflicts));

    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "label": pl.label,
                "family": summary,
                "annotative_violations": annotative_violations,
                "ok": !failed,
            }))
            .expect("report serializes")
        );
    } else {
        println!("product line `{}` ({})", pl.label, pl.root.display());
        println!(
            "core `{}`, {} delta(s), {} configuration(s), {} environment type(s)",
            pl.model.core.name,
            pl.model.deltas.len(),
            pl.model.configs.len(),
            pl.env.len()
        );
        for row in &summary.configs {
            match &row.error {
                Some(e) => println!("  {}: ERROR {}", row.config, e),
                None => println!(
                    "  {}: {} order(s){}, {}, {}",
                    row.config,
                    row.order_count,
                    if row.order_count_capped { "+" } else { "" },
                    if row.wellformed == Some(true) {
                        "well-formed".to_owned()
                    } else {
                        format!("{} violation(s)", row.violations)
                    },
                    if row.confluent == Some(true) {
                        "confluent"
                    } else {
                        "NOT confluent"
                    },
                ),
            }
        }
        for d in &summary.redundant_deltas {
            println!("  warning: delta `{}` is used by no configuration", d);
        }
        for r in &summary.unused_aoc_references {
            println!(
                "  warning: `{}` constrains order against `{}`, which no configuration uses",
                r.delta, r.referenced
            );
        }
        for c in &summary.conflicts {
            println!(
                "  conflict: configuration `{}` contains `{}` although `{}` negates it",
                c.config, c.delta, c.negated
            );
        }
        for v in &annotative_violations {
            println!("  annotative: {}", v);
        }
        println!("{}", if failed { "FAILED" } else { "ok" });
    }

    if failed {
        Err(Failure::Findings(format!(
            "check of {} found problems",
            pl.root.display()
        )))
    } else {
        Ok(())
    }
}

fn cmd_generate(
    dir: &Path,
    config: &str,
    out: Option<&Path>,
    no_normalize: bool,
    json: bool,
) -> Result<(), Failure> {
    let pl = load_product_line(dir)?;
    let config = lookup_config(&pl, config)?;
    let variant = generate_variant(&pl.model, config, &pl.env)
        .map_err(|e| Failure::Findings(e.to_string()))?;
    let arch = if no_normalize {
        &variant.raw
    } else {
        &variant.normalized
    };
    let text = unparse_architecture(arch);
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "config": variant.config,
                "order": variant.order,
                "normalized": !no_normalize,
                "text": text,
            }))
            .expect("variant serializes")
        );
        if let Some(path) = out {
            fs::write(path, &text)
                .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))?;
        }
        Ok(())
    } else {
        emit(out, &text)
    }
}

fn cmd_order(
    dir: &Path,
    config: &str,
    all: bool,
    limit: usize,
    json: bool,
) -> Result<(), Failure> {
    let pl = load_product_line(dir)?;
    let config = lookup_config(&pl, config)?;
    let orders = compute_orders(&pl.model, config, limit).map_err(|e| match e {
        OrderError::NoValidOrder { .. } => Failure::Findings(e.to_string()),
        _ => Failure::Usage(e.to_string()),
    })?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "config": config.name,
                "orders": if all { orders.clone() } else { orders[..1].to_vec() },
                "enumerated": orders.len(),
                "capped": orders.len() == limit,
            }))
            .expect("orders serialize")
        );
    } else if all {
        for order in &orders {
            println!("{}", order.join(", "));
        }
    } else {
        println!("{}", orders[0].join(", "));
    }
    Ok(())
}

fn cmd_confluence(dir: &Path, config: &str, limit: usize, json: bool) -> Result<(), Failure> {
    let pl = load_product_line(dir)?;
    let config = lookup_config(&pl, config)?;
    let report = check_confluence(&pl.model, config, &pl.env, limit).map_err(|e| match e {
        GenerateError::Order(OrderError::UnknownDelta { .. }) => Failure::Usage(e.to_string()),
        _ => Failure::Findings(e.to_string()),
    })?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        println!(
            "configuration `{}`: {} valid order(s), {} generated",
            report.config, report.orders_enumerated, report.generated
        );
        for p in &report.pruned {
            println!("  pruned [{}]: {}", p.order.join(", "), p.reason);
        }
        match &report.witness {
            None => println!("confluent"),
            Some(w) => {
                println!("NOT confluent:");
                println!("  order A: {}", w.order_a.join(", "));
                println!("  order B: {}", w.order_b.join(", "));
                println!("  diff: {}", w.diff);
            }
        }
    }
    if report.confluent {
        Ok(())
    } else {
        Err(Failure::Findings(format!(
            "configuration `{}` is not confluent",
            config.name
        )))
    }
}

fn print_outcome(outcome: &RefactoringOutcome, json: bool) {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "removed_deltas": outcome.removed_deltas,
                "added_deltas": outcome.added_deltas,
                "changed_configs": outcome.changed_configs,
                "preservation": outcome.preservation,
                "warnings": outcome.warnings,
            }))
            .expect("outcome serializes")
        );
    } else {
        if !outcome.removed_deltas.is_empty() {
            println!("removed deltas: {}", outcome.removed_deltas.join(", "));
        }
        if !outcome.added_deltas.is_empty() {
            println!("added deltas: {}", outcome.added_deltas.join(", "));
        }
        if !outcome.changed_configs.is_empty() {
            println!("changed configurations: {}", outcome.changed_configs.join(", "));
        }
        for w in &outcome.warnings {
            println!("warning: {}", w);
        }
        for entry in &outcome.preservation {
            println!(
                "  {}: {}",
                entry.config,
                if entry.preserved { "preserved" } else { "CHANGED" }
            );
        }
    }
}

fn write_refactored(
    pl: &ProductLine,
    outcome: &RefactoringOutcome,
    in_place: bool,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let target = if in_place {
        pl.root.clone()
    } else {
        match out {
            Some(p) => p.to_path_buf(),
            None => return Ok(()), // print-only mode, nothing to write
        }
    };
    write_model(pl, &outcome.new_model, &target)
        .map_err(|e| Failure::Usage(format!("{}: {}", target.display(), e)))
}

fn cmd_compose(
    dir: &Path,
    deltas: &[String],
    name: &str,
    in_place: bool,
    out: Option<&Path>,
    json: bool,
) -> Result<(), Failure> {
    let pl = load_product_line(dir)?;
    let sequence: Vec<&str> = deltas.iter().map(String::as_str).collect();
    let outcome = apply_compose_refactoring(&pl.model, &sequence, name, &pl.env)
        .map_err(refactor_failure)?;
    if !json && !in_place && out.is_none() {
        print!("{}", unparse_delta(&outcome.new_model.deltas[name]));
    }
    print_outcome(&outcome, json);
    write_refactored(&pl, &outcome, in_place, out)
}

fn cmd_merge_core(
    dir: &Path,
    deltas: &[String],
    inverse: bool,
    in_place: bool,
    out: Option<&Path>,
    json: bool,
) -> Result<(), Failure> {
    if !in_place && out.is_none() {
        return Err(Failure::Usage(
            "merge-core rewrites the whole model: pass --in-place or --out DIR".to_owned(),
        ));
    }
    let pl = load_product_line(dir)?;
    let sequence: Vec<&str> = deltas.iter().map(String::as_str).collect();
    let outcome = apply_merge_with_core(&pl.model, &sequence, inverse, &pl.env)
        .map_err(refactor_failure)?;
    print_outcome(&outcome, json);
    write_refactored(&pl, &outcome, in_place, out)
}

fn cmd_invert(
    dir: &Path,
    delta: &str,
    context: &str,
    out: Option<&Path>,
    json: bool,
) -> Result<(), Failure> {
    let pl = load_product_line(dir)?;
    let delta = pl.model.deltas.get(delta).ok_or_else(|| {
        Failure::Usage(format!("no delta `{}` in {}", delta, pl.root.display()))
    })?;
    let context_arch = if context == "core" {
        pl.model.core.clone()
    } else {
        let config = lookup_config(&pl, context)?;
        generate_variant(&pl.model, config, &pl.env)
            .map_err(|e| Failure::Findings(e.to_string()))?
            .raw
    };
    let inverse =
        invert_delta(delta, &context_arch, None).map_err(|e| Failure::Findings(e.to_string()))?;
    let text = unparse_delta(&inverse);
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "delta": inverse.name,
                "context": context,
                "text": text,
            }))
            .expect("delta serializes")
        );
        if let Some(path) = out {
            fs::write(path, &text)
                .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))?;
        }
        Ok(())
    } else {
        emit(out, &text)
    }
}

fn cmd_project(
    file: &Path,
    variant: &str,
    out: Option<&Path>,
    json: bool,
) -> Result<(), Failure> {
    let text = fs::read_to_string(file)
        .map_err(|e| Failure::Usage(format!("{}: {}", file.display(), e)))?;
    let source = SourceFile::new(
        &file.to_string_lossy(),
        SourceKind::Architecture,
        &text,
    );
    let annotated = parse_annotated(&source)
        .map_err(|e| Failure::Usage(format!("{}: {}", file.display(), e)))?;
    let projected = annotated.project_variant(variant).map_err(|e| match e {
        deltarc_core::annotative::ProjectionError::UnknownVariant(_) => {
            Failure::Usage(e.to_string())
        }
        _ => Failure::Findings(e.to_string()),
    })?;
    let rendered = unparse_architecture(&projected);
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "variant": variant,
                "text": rendered,
            }))
            .expect("projection serializes")
        );
        if let Some(path) = out {
            fs::write(path, &rendered)
                .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))?;
        }
        Ok(())
    } else {
        emit(out, &rendered)
    }
}

fn cmd_metrics(
    dirs: &[PathBuf],
    annotative: Option<&Path>,
    format: Format,
    out: Option<&Path>,
    json: bool,
) -> Result<(), Failure> {
    if annotative.is_some() && dirs.len() != 1 {
        return Err(Failure::Usage(
            "--annotative overrides a single directory; for multi-scenario runs declare the \
             annotated model in each productline.toml"
                .to_owned(),
        ));
    }
    let mut scenarios = Vec::new();
    for dir in dirs {
        let pl = load_product_line(dir)?;
        let delta_metrics = measure_delta_model(&pl.metric_files(), &pl.model, &pl.env)
            .map_err(|e| Failure::Usage(e.to_string()))?;

        let annotative_metrics = if let Some(path) = annotative {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))?;
            let file = SourceFile::new(
                &path.to_string_lossy(),
                SourceKind::Architecture,
                &text,
            );
            let model = parse_annotated(&file)
                .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))?;
            let mut files = vec![file];
            files.extend(pl.env_files.iter().cloned());
            let core_is_variant = pl
                .annotative
                .as_ref()
                .is_some_and(|s| s.core_variant.is_some());
            Some(
                measure_annotative_model(&files, &model, &pl.env, core_is_variant)
                    .map_err(|e| Failure::Usage(e.to_string()))?,
            )
        } else if let Some(side) = &pl.annotative {
            Some(
                measure_annotative_model(
                    &side.files,
                    &side.model,
                    &pl.env,
                    side.core_variant.is_some(),
                )
                .map_err(|e| Failure::Usage(e.to_string()))?,
            )
        } else {
            None
        };

        scenarios.push(ScenarioComparison {
            label: pl.label.clone(),
            delta: Some(delta_metrics),
            annotative: annotative_metrics,
        });
    }
    let report = compare_scenarios(scenarios);
    let text = match (json, format) {
        (true, _) | (_, Format::Json) => format!(
            "{}\n",
            serde_json::to_string_pretty(&report).expect("report serializes")
        ),
        (_, Format::Csv) => report.to_csv(),
        (_, Format::Md) => report.to_markdown(),
    };
    emit(out, &text)
}

fn cmd_graph(dir: &Path, out: Option<&Path>, json: bool) -> Result<(), Failure> {
    let pl = load_product_line(dir)?;
    let dot = family_dot(&pl.model, ORDER_LIMIT);
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({ "dot": dot })).expect("dot serializes")
        );
        if let Some(path) = out {
            fs::write(path, &dot)
                .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))?;
        }
        Ok(())
    } else {
        emit(out, &dot)
    }
}
