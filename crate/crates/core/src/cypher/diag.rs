//! Diagnostics produced by the lexer, parser and schema validator.

use serde::{Deserialize, Serialize};

use crate::model::{ExecutionMessage, MessageClass, MessageSource};

/// Half-open byte range into the query source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn point(at: usize) -> Self {
        Span { start: at, end: at }
    }

    /// Smallest span covering both inputs.
    pub fn merge(self, other: Span) -> Span {
        Span { start: self.start.min(other.start), end: self.end.max(other.end) }
    }
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// Error classes a query can be diagnosed with. This is the error subset of
/// [`MessageClass`]: it excludes `Success` (diagnostics are always errors)
/// and `TransportError` (validation never touches a network).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorClass {
    SyntaxError,
    UnknownLabel,
    UnknownRelationshipType,
    UnknownProperty,
    MalformedPath,
    DirectionViolation,
}

impl From<ErrorClass> for MessageClass {
    fn from(class: ErrorClass) -> Self {
        match class {
            ErrorClass::SyntaxError => MessageClass::SyntaxError,
            ErrorClass::UnknownLabel => MessageClass::UnknownLabel,
            ErrorClass::UnknownRelationshipType => MessageClass::UnknownRelationshipType,
            ErrorClass::UnknownProperty => MessageClass::UnknownProperty,
            ErrorClass::MalformedPath => MessageClass::MalformedPath,
            ErrorClass::DirectionViolation => MessageClass::DirectionViolation,
        }
    }
}

impl std::fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(&MessageClass::from(*self), f)
    }
}

/// One database-style diagnostic: class, source span, and a detail naming the
/// offending token, label, type or property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub class: ErrorClass,
    pub span: Span,
    pub detail: String,
}

impl Diagnostic {
    pub fn new(class: ErrorClass, span: Span, detail: impl Into<String>) -> Self {
        let detail = detail.into();
        debug_assert!(!detail.is_empty(), "diagnostic detail must be non-empty");
        Diagnostic { class, span, detail }
    }

    /// Render this diagnostic as an execution status message, embedding the
    /// span so downstream consumers (reflection prompts, CLI output) can
    /// point at the offending text.
    pub fn to_message(&self, source: MessageSource) -> ExecutionMessage {
        ExecutionMessage::new(
            self.class.into(),
            format!("{} (at {})", self.detail, self.span),
            source,
        )
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} [{}]: {}", self.class, self.span, self.detail)
    }
}
