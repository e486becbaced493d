//! Halstead operator/operand tallies and the difficulty measure.
//!
//! Classification is a frozen rule table over the tokenizer's token classes:
//!
//! * operators — `OPERATOR` tokens, `KEYWORD` tokens, `PUNCT` tokens, and
//!   each matched bracket pair counted as one occurrence identified by its
//!   opening lexeme;
//! * operands — `NAME`, `NUMBER` and `STRING` tokens.
//!
//! `COMMENT`, `NEWLINE`, `INDENT_MARKER` and `OTHER` tokens never count.
//! Distinct identity is the lexeme.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{Token, TokenKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalsteadCounts {
    /// n1: distinct operators.
    pub distinct_operators: usize,
    /// n2: distinct operands.
    pub distinct_operands: usize,
    /// N1: total operator occurrences (bookkeeping, unused by difficulty).
    pub total_operators: usize,
    /// N2: total operand occurrences.
    pub total_operands: usize,
}

/// Tallies operators and operands over a token stream from a valid snippet.
pub fn halstead_counts(tokens: &[Token]) -> Result<HalsteadCounts> {
    let mut operators: HashSet<&str> = HashSet::new();
    let mut operands: HashSet<&str> = HashSet::new();
    let mut total_operators = 0;
    let mut total_operands = 0;
    let mut bracket_stack: Vec<&str> = Vec::new();

    for token in tokens {
        match token.kind {
            TokenKind::Operator | TokenKind::Keyword | TokenKind::Punct => {
                operators.insert(&token.lexeme);
                total_operators += 1;
            }
            TokenKind::BracketOpen => bracket_stack.push(&token.lexeme),
            TokenKind::BracketClose => {
                let open = bracket_stack.pop().ok_or_else(|| {
                    Error::Internal(format!(
                        "unmatched closing bracket {:?} at line {}",
                        token.lexeme, token.line
                    ))
                })?;
                // one operator occurrence per matched pair
                operators.insert(open);
                total_operators += 1;
            }
            TokenKind::Name | TokenKind::Number | TokenKind::String => {
                operands.insert(&token.lexeme);
                total_operands += 1;
            }
            TokenKind::Comment
            | TokenKind::Newline
            | TokenKind::IndentMarker
            | TokenKind::Other => {}
        }
    }
    if !bracket_stack.is_empty() {
        return Err(Error::Internal("unmatched opening bracket".into()));
    }
    Ok(HalsteadCounts {
        distinct_operators: operators.len(),
        distinct_operands: operands.len(),
        total_operators,
        total_operands,
    })
}

/// Halstead difficulty `(n1/2) * (N2/n2)`; 0 when there are no operands.
pub fn difficulty(counts: &HalsteadCounts) -> f64 {
    if counts.distinct_operands == 0 {
        return 0.0;
    }
    (counts.distinct_operators as f64 / 2.0)
        * (counts.total_operands as f64 / counts.distinct_operands as f64)
}

/// The classification rule table, exposed for the `rules` introspection
/// command so tests and documentation share one source of truth.
pub fn classification_table() -> serde_json::Value {
    serde_json::json!({
        "operators": {
            "token_classes": ["OPERATOR", "KEYWORD", "PUNCT"],
            "bracket_pairs": "each matched pair is one operator occurrence, identified by the opening lexeme",
        },
        "operands": {
            "token_classes": ["NAME", "NUMBER", "STRING"],
        },
        "excluded": ["COMMENT", "NEWLINE", "INDENT_MARKER", "OTHER"],
        "distinct_identity": "lexeme",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::tokenize;

    fn counts(src: &str) -> HalsteadCounts {
        halstead_counts(&tokenize(src).unwrap()).unwrap()
    }

    #[test]
    fn hand_counted_assignment() {
        // operators: =, + ; operands: x, a, b
        let c = counts("x = a + b");
        assert_eq!(
            c,
            HalsteadCounts {
                distinct_operators: 2,
                distinct_operands: 3,
                total_operators: 2,
                total_operands: 3,
            }
        );
        assert_eq!(difficulty(&c), 1.0);
    }

    #[test]
    fn hand_counted_call() {
        // the paren pair is one operator; operands: print, x
        let c = counts("print(x)");
        assert_eq!(
            c,
            HalsteadCounts {
                distinct_operators: 1,
                distinct_operands: 2,
                total_operators: 1,
                total_operands: 2,
            }
        );
    }

    #[test]
    fn lone_literal_has_no_operators() {
        let c = counts("42");
        assert_eq!(
            c,
            HalsteadCounts {
                distinct_operators: 0,
                distinct_operands: 1,
                total_operators: 0,
                total_operands: 1,
            }
        );
        assert_eq!(difficulty(&c), 0.0);
    }

    #[test]
    fn difficulty_formula() {
        let c = HalsteadCounts {
            distinct_operators: 4,
            distinct_operands: 2,
            total_operators: 5,
            total_operands: 6,
        };
        assert_eq!(difficulty(&c), 6.0);
    }

    #[test]
    fn comments_do_not_count() {
        let with = counts("x = a + b  # sum\n");
        let without = counts("x = a + b\n");
        assert_eq!(with, without);
    }

    #[test]
    fn rerun_is_identical() {
        let toks = tokenize("y = f(a, b) + g[0]").unwrap();
        assert_eq!(
            halstead_counts(&toks).unwrap(),
            halstead_counts(&toks).unwrap()
        );
    }

    #[test]
    fn invariants_hold() {
        for src in ["x = a + b", "print(x)", "42", "def f():\n    return 1\n"] {
            let c = counts(src);
            assert!(c.distinct_operators <= c.total_operators);
            assert!(c.distinct_operands <= c.total_operands);
            if c.distinct_operands == 0 {
                assert_eq!(c.total_operands, 0);
            }
        }
    }
}
