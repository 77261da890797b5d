//! Grammar text format, document conversion, DOT output and JSON reports.
//!
//! The format is described in `docs/grammar-format.md`.

pub mod dot;
pub mod export;
pub mod print;
pub mod report;
pub mod resolve;
pub mod syntax;

pub use export::{aogg_doc, grammar_doc, rule_doc};
pub use print::print_grammar;
pub use report::{CommuteSummary, ReportDoc, ReportKind, WeaveSummary};
pub use resolve::{load, resolve, Settings};
pub use syntax::{parse_grammar, FormatError, GrammarDoc};
