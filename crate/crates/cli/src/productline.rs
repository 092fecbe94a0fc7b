//! Loading a product-line directory.
//!
//! Layout: one core `.arc` file, any number of `.delta` and `.deltaconfig`
//! files at the top level, interface stubs for subcomponent types in an
//! environment subdirectory (default `env/`), and optionally an annotated
//! single-model twin of the family. An optional `productline.toml` manifest
//! pins the scenario label, the core file, the environment directory and the
//! annotative side:
//!
//! ```toml
//! label = "base"
//! core = "BrakingSystem.arc"
//! env = "env"
//!
//! [annotative]
//! model = "annotative/BrakingSystem.arc"
//! core_variant = "CarWithABS"   # the bare core is itself a product
//! ```
//!
//! Without a manifest the directory name serves as label, the core must be
//! the unique top-level `.arc` file, and `env/` is used when present.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use deltarc_core::annotative::AnnotatedComponentType;
use deltarc_core::engine::TypeEnv;
use deltarc_core::model::ModelError;
use deltarc_core::parser::{
    parse_annotated, parse_architecture, parse_config, parse_delta, ParseError, SourceFile,
    SourceKind,
};
use deltarc_core::DeltaModel;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    label: Option<String>,
    core: Option<String>,
    env: Option<String>,
    annotative: Option<AnnotativeManifest>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotativeManifest {
    model: String,
    core_variant: Option<String>,
}

/// The annotated 150% representation of the same family, when the
/// directory provides one.
#[derive(Debug, Clone)]
pub struct AnnotativeSide {
    pub path: PathBuf,
    pub model: AnnotatedComponentType,
    /// The annotated model file plus the environment stubs it shares with
    /// the delta side; this is the file set its metrics are computed over.
    pub files: Vec<SourceFile>,
    /// Variant name the bare core corresponds to, if the manifest says the
    /// unannotated model is itself a supported product.
    pub core_variant: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ProductLine {
    pub root: PathBuf,
    pub label: String,
    pub core_file_name: String,
    pub env_dir_name: Option<String>,
    pub model: DeltaModel,
    pub env: TypeEnv,
    pub core_file: SourceFile,
    pub delta_files: Vec<SourceFile>,
    pub config_files: Vec<SourceFile>,
    pub env_files: Vec<SourceFile>,
    pub annotative: Option<AnnotativeSide>,
}

impl ProductLine {
    /// Every file the delta-oriented representation consists of, for file
    /// and character statistics: core, deltas, configurations, stubs.
    pub fn metric_files(&self) -> Vec<SourceFile> {
        let mut files = Vec::with_capacity(
            1 + self.delta_files.len() + self.config_files.len() + self.env_files.len(),
        );
        files.push(self.core_file.clone());
        files.extend(self.delta_files.iter().cloned());
        files.extend(self.config_files.iter().cloned());
        files.extend(self.env_files.iter().cloned());
        files
    }
}

#[derive(Debug)]
pub enum LoadError {
    Io {
        path: PathBuf,
        error: io::Error,
    },
    Manifest {
        path: PathBuf,
        error: toml::de::Error,
    },
    /// Zero or several top-level .arc candidates and no manifest to pick one.
    NoCore {
        root: PathBuf,
        candidates: Vec<String>,
    },
    Parse {
        path: String,
        /// Boxed to keep the `Result` payload small on the happy path.
        error: Box<ParseError>,
    },
    Model(ModelError),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io { path, error } => write!(f, "{}: {}", path.display(), error),
            LoadError::Manifest { path, error } => {
                write!(f, "{}: invalid manifest: {}", path.display(), error)
            }
            LoadError::NoCore { root, candidates } => {
                if candidates.is_empty() {
                    write!(f, "{}: no core architecture file found", root.display())
                } else {
                    write!(
                        f,
                        "{}: several top-level .arc files ({}); name the core in productline.toml",
                        root.display(),
                        candidates.join(", ")
                    )
                }
            }
            LoadError::Parse { path, error } => write!(f, "{}: {}", path, error),
            LoadError::Model(e) => write!(f, "invalid product line: {}", e),
        }
    }
}

impl std::error::Error for LoadError {}

fn read_source(root: &Path, rel: &str, kind: SourceKind) -> Result<SourceFile, LoadError> {
    let path = root.join(rel);
    let text = fs::read_to_string(&path).map_err(|error| LoadError::Io {
        path: path.clone(),
        error,
    })?;
    Ok(SourceFile::new(rel, kind, &text))
}

/// Top-level file names with the given extension, sorted.
fn list_files(root: &Path, ext: &str) -> Result<Vec<String>, LoadError> {
    let entries = fs::read_dir(root).map_err(|error| LoadError::Io {
        path: root.to_path_buf(),
        error,
    })?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|error| LoadError::Io {
            path: root.to_path_buf(),
            error,
        })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.path().is_file() && name.ends_with(ext) {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

pub fn load_product_line(root: &Path) -> Result<ProductLine, LoadError> {
    let manifest_path = root.join("productline.toml");
    let manifest: Manifest = if manifest_path.is_file() {
        let text = fs::read_to_string(&manifest_path).map_err(|error| LoadError::Io {
            path: manifest_path.clone(),
            error,
        })?;
        toml::from_str(&text).map_err(|error| LoadError::Manifest {
            path: manifest_path.clone(),
            error,
        })?
    } else {
        Manifest::default()
    };

    let label = manifest.label.unwrap_or_else(|| {
        root.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| root.display().to_string())
    });

    let core_file_name = match manifest.core {
        Some(name) => name,
        None => {
            let candidates = list_files(root, ".arc")?;
            if candidates.len() == 1 {
                candidates.into_iter().next().unwrap()
            } else {
                return Err(LoadError::NoCore {
                    root: root.to_path_buf(),
                    candidates,
                });
            }
        }
    };

    let core_file = read_source(root, &core_file_name, SourceKind::Architecture)?;
    let core = parse_architecture(&core_file).map_err(|error| LoadError::Parse {
        path: core_file.path.clone(),
        error: Box::new(error),
    })?;

    let mut delta_files = Vec::new();
    let mut deltas = Vec::new();
    for name in list_files(root, ".delta")? {
        let file = read_source(root, &name, SourceKind::Delta)?;
        deltas.push(parse_delta(&file).map_err(|error| LoadError::Parse {
            path: file.path.clone(),
            error: Box::new(error),
        })?);
        delta_files.push(file);
    }

    let mut config_files = Vec::new();
    let mut configs = Vec::new();
    for name in list_files(root, ".deltaconfig")? {
        let file = read_source(root, &name, SourceKind::Config)?;
        configs.push(parse_config(&file).map_err(|error| LoadError::Parse {
            path: file.path.clone(),
            error: Box::new(error),
        })?);
        config_files.push(file);
    }

    let model = DeltaModel::new(core, deltas, configs).map_err(LoadError::Model)?;

    let env_dir_name = match manifest.env {
        Some(dir) => Some(dir),
        None if root.join("env").is_dir() => Some("env".to_owned()),
        None => None,
    };
    let mut env_files = Vec::new();
    let mut env = TypeEnv::new();
    if let Some(dir) = &env_dir_name {
        let env_root = root.join(dir);
        for name in list_files(&env_root, ".arc")? {
            let rel = format!("{}/{}", dir, name);
            let file = read_source(root, &rel, SourceKind::Architecture)?;
            let stub = parse_architecture(&file).map_err(|error| LoadError::Parse {
                path: file.path.clone(),
                error: Box::new(error),
            })?;
            env.insert(stub);
            env_files.push(file);
        }
    }

    let annotative = match manifest.annotative {
        None => None,
        Some(a) => {
            let file = read_source(root, &a.model, SourceKind::Architecture)?;
            let annotated = parse_annotated(&file).map_err(|error| LoadError::Parse {
                path: file.path.clone(),
                error: Box::new(error),
            })?;
            let mut files = vec![file];
            files.extend(env_files.iter().cloned());
            Some(AnnotativeSide {
                path: root.join(&a.model),
                model: annotated,
                files,
                core_variant: a.core_variant,
            })
        }
    };

    Ok(ProductLine {
        root: root.to_path_buf(),
        label,
        core_file_name,
        env_dir_name,
        model,
        env,
        core_file,
        delta_files,
        config_files,
        env_files,
        annotative,
    })
}
