//! Writing a delta model back to a product-line directory, either into a
//! fresh target directory (carrying the environment stubs and annotative
//! side along) or in place over the directory it was loaded from.

use std::fs;
use std::io;
use std::path::Path;

use deltarc_core::unparse::{unparse_architecture, unparse_config, unparse_delta};
use deltarc_core::DeltaModel;

use crate::productline::ProductLine;

fn manifest_text(pl: &ProductLine) -> String {
    let mut text = format!("label = \"{}\"\ncore = \"{}\"\n", pl.label, pl.core_file_name);
    if let Some(env) = &pl.env_dir_name {
        text.push_str(&format!("env = \"{}\"\n", env));
    }
    if let Some(side) = &pl.annotative {
        let rel = side
            .path
            .strip_prefix(&pl.root)
            .unwrap_or(&side.path)
            .to_string_lossy()
            .replace('\\', "/");
        text.push_str(&format!("\n[annotative]\nmodel = \"{}\"\n", rel));
        if let Some(v) = &side.core_variant {
            text.push_str(&format!("core_variant = \"{}\"\n", v));
        }
    }
    text
}

/// Writes `model` into `target`, copying stubs and the annotative model
/// from the loaded product line. The target directory is created if needed;
/// stale `.delta`/`.deltaconfig` files in it are removed.
pub fn write_model(pl: &ProductLine, model: &DeltaModel, target: &Path) -> io::Result<()> {
    fs::create_dir_all(target)?;

    // Drop generated-model files that no longer exist in the model, so an
    // in-place rewrite never leaves a stale delta behind.
    for entry in fs::read_dir(target)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if !entry.path().is_file() {
            continue;
        }
        let stale = match name.strip_suffix(".delta") {
            Some(stem) => !model.deltas.contains_key(stem),
            None => match name.strip_suffix(".deltaconfig") {
                Some(stem) => !model.configs.contains_key(stem),
                None => false,
            },
        };
        if stale {
            fs::remove_file(entry.path())?;
        }
    }

    fs::write(
        target.join(&pl.core_file_name),
        unparse_architecture(&model.core),
    )?;
    for (name, delta) in &model.deltas {
        fs::write(target.join(format!("{}.delta", name)), unparse_delta(delta))?;
    }
    for (name, config) in &model.configs {
        fs::write(
            target.join(format!("{}.deltaconfig", name)),
            unparse_config(config),
        )?;
    }

    if let Some(env) = &pl.env_dir_name {
        let env_dir = target.join(env);
        fs::create_dir_all(&env_dir)?;
        for file in &pl.env_files {
            fs::write(target.join(&file.path), &file.text)?;
        }
    }

    if let Some(side) = &pl.annotative {
        let rel = side.path.strip_prefix(&pl.root).unwrap_or(&side.path);
        if let Some(parent) = target.join(rel).parent() {
            fs::create_dir_all(parent)?;
        }
        // The annotative side is untouched by delta refactorings; carry the
        // original bytes. Read fully before writing: on an in-place rewrite
        // source and destination are the same file, and a streaming copy
        // would truncate it first.
        let bytes = fs::read(&side.path)?;
        fs::write(target.join(rel), bytes)?;
    }

    fs::write(target.join("productline.toml"), manifest_text(pl))?;
    Ok(())
}
