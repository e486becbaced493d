//! Grammar frontend: syntax validation, tokenization, parsing, and AST
//! summarization for the analyzed language (Python 3, grammar pinned by the
//! `rustpython-parser` 0.4 dependency).
//!
//! Everything downstream (Halstead counting, cyclomatic complexity, the
//! structural features) consumes only the [`Token`] stream and the
//! [`SyntaxTree`] produced here, so the frozen token classes and node-kind
//! vocabulary in this module are the single point of grammar coupling.

mod token;
mod tree;

pub use token::{tokenize, Token, TokenKind};
pub use tree::{parse_source, NodeId, SyntaxTree, AST_KINDS};

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One row of the rationale corpus: a code rationale plus its metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceUnit {
    pub id: String,
    #[serde(rename = "code")]
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntaxCheck {
    pub valid: bool,
    pub diagnostics: Vec<Diagnostic>,
}

/// The three structural features read off the syntax tree.
///
/// `depth` counts nodes on the longest root-to-leaf path, so a lone root has
/// depth 1 and every feature is at least 1 for any parsed snippet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstSummary {
    pub node_count: usize,
    pub distinct_kinds: usize,
    pub depth: usize,
}

/// Checks whether the full text parses under the pinned grammar.
///
/// Invalid syntax is a *result*, not an error: the caller gets `valid=false`
/// plus a diagnostic locating the first failure.
pub fn validate_syntax(source: &str) -> SyntaxCheck {
    if source.trim().is_empty() {
        return SyntaxCheck {
            valid: false,
            diagnostics: vec![Diagnostic {
                line: 1,
                column: 0,
                message: "empty source".into(),
            }],
        };
    }
    match tree::parse_module(source) {
        Ok(_) => SyntaxCheck {
            valid: true,
            diagnostics: Vec::new(),
        },
        Err(Error::Parse {
            line,
            column,
            message,
        }) => SyntaxCheck {
            valid: false,
            diagnostics: vec![Diagnostic {
                line,
                column,
                message,
            }],
        },
        Err(e) => SyntaxCheck {
            valid: false,
            diagnostics: vec![Diagnostic {
                line: 1,
                column: 0,
                message: e.to_string(),
            }],
        },
    }
}

/// Summarizes a tree into the three structural features.
pub fn summarize_ast(tree: &SyntaxTree) -> AstSummary {
    AstSummary {
        node_count: tree.node_count(),
        distinct_kinds: tree.distinct_kinds(),
        depth: tree.depth(),
    }
}

/// Byte-offset to 1-based line / 0-based column lookup.
pub(crate) struct LineIndex {
    line_starts: Vec<usize>,
}

impl LineIndex {
    pub fn new(source: &str) -> Self {
        let mut line_starts = vec![0];
        for (i, b) in source.bytes().enumerate() {
            if b == b'\n' {
                line_starts.push(i + 1);
            }
        }
        LineIndex { line_starts }
    }

    pub fn locate(&self, offset: usize) -> (usize, usize) {
        let line = self
            .line_starts
            .partition_point(|&start| start <= offset)
            .saturating_sub(1);
        (line + 1, offset - self.line_starts[line])
    }
}
