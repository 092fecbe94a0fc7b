//! Filesystem and reporting layer over `deltarc-core`: product-line
//! directory loading, model write-out, and DOT graph export. The `deltarc`
//! binary is a thin CLI over these plus the core engine.

pub mod graph;
pub mod productline;
pub mod writeout;

pub use graph::family_dot;
pub use productline::{load_product_line, AnnotativeSide, LoadError, ProductLine};
pub use writeout::write_model;
