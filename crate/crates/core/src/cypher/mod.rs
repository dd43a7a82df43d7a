//! Cypher-subset front end: lexer, parser, schema validator and canonical
//! printer. Together with [`crate::schema`] this forms the deterministic
//! embedded executor used throughout the harness.

pub mod ast;
pub mod canon;
pub mod diag;
pub mod parser;
pub mod token;
pub mod validate;

pub use ast::QueryAst;
pub use canon::canonical_text;
pub use diag::{Diagnostic, ErrorClass, Span};
pub use parser::{parse, parse_source};
pub use token::{tokenize, Token, TokenKind};
pub use validate::validate;
