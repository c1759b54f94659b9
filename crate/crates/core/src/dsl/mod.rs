//! The textual specification language (`.shr` files).
//!
//! ```text
//! labels { f/3; am/2; sigma/1; }
//! graph { node g, l, l1, s; edge AM: am(g, l1); edge F: f(g, l, s); edge S: sigma(s); }
//! use start, am_emit(start_sigma; port, loc, new) as trigger;
//! production go for f(g, l, s) { new g2, l2; on 0: go(g2, l2); rhs { edge f(g2, l2, s); node g, l; } }
//! rule { when overload if count(f) >= 1 then rep_share(target f#0; new, new); }
//! scenario { inject overload; apply 0; assert count(f) == 2; }
//! ```
//!
//! [`parse`] resolves every name and reports all errors it can find, each with a location.
//! [`serialize`] prints the canonical form, which parses back to an equal [`SpecFile`].

mod lexer;
mod lower;
mod parser;
mod print;

use std::fmt;

use crate::hypergraph::{Hypergraph, Label};
use crate::manager::{CmpOp, Event, PolicyRule};
use crate::production::Production;

pub use print::{print_graph, serialize};

/// A position in the source text. Lines and columns start at 1; `offset` is in bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DslError {
    /// Stable machine-readable code such as `SYNTAX` or `ACTION_ARITY_CLASH`.
    pub code: &'static str,
    pub message: String,
    pub span: SourceSpan,
}

impl DslError {
    pub(crate) fn new(code: &'static str, message: impl Into<String>, span: SourceSpan) -> Self {
        DslError {
            code,
            message: message.into(),
            span,
        }
    }
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} {}", self.span, self.code, self.message)
    }
}

impl std::error::Error for DslError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScenarioStep {
    Inject(Event),
    /// Applies the transition with this index in the current deterministic list.
    Apply(usize),
    AssertIso(Hypergraph),
    AssertCount { label: String, op: CmpOp, value: u64 },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpecFile {
    /// Sorted by name.
    pub labels: Vec<Label>,
    pub graph: Hypergraph,
    /// Sorted by name.
    pub productions: Vec<Production>,
    pub rules: Vec<PolicyRule>,
    /// `None` when the file has no scenario section.
    pub scenario: Option<Vec<ScenarioStep>>,
}

impl SpecFile {
    pub fn label(&self, name: &str) -> Option<&Label> {
        self.labels.iter().find(|l| l.name() == name)
    }
}

/// Parses and resolves a specification. On failure every diagnosable error is returned, sorted
/// by position.
pub fn parse(text: &str) -> Result<SpecFile, Vec<DslError>> {
    let mut errors = Vec::new();
    let tokens = lexer::lex(text, &mut errors);
    let mut parser = parser::Parser::new(tokens);
    let items = parser.items();
    errors.append(&mut parser.errors);
    let spec = lower::lower(items, &mut errors);
    if errors.is_empty() {
        Ok(spec)
    } else {
        errors.sort_by_key(|e| e.span);
        Err(errors)
    }
}
