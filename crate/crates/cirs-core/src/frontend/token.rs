//! Tokenizer: wraps the grammar lexer and classifies every token into the
//! frozen token classes consumed by Halstead counting.

use rustpython_parser::lexer::lex;
use rustpython_parser::{Mode, Tok};
use serde::{Deserialize, Serialize};

use super::LineIndex;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TokenKind {
    Keyword,
    Name,
    Number,
    String,
    Operator,
    BracketOpen,
    BracketClose,
    Punct,
    Newline,
    IndentMarker,
    Comment,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// 1-based line of the token start.
    pub line: usize,
    /// 0-based byte column of the token start.
    pub column: usize,
}

/// Lexes valid source into the ordered token stream.
///
/// Lexemes are sliced from the source, so concatenating them in order (plus
/// the skipped whitespace) reconstructs the input. Comments are kept and
/// tagged, never dropped.
pub fn tokenize(source: &str) -> Result<Vec<Token>> {
    if source.trim().is_empty() {
        return Err(Error::EmptySource);
    }
    let index = LineIndex::new(source);
    let mut tokens = Vec::new();
    for item in lex(source, Mode::Module) {
        let (tok, range) = item.map_err(|e| {
            let (line, column) = index.locate(e.location.to_usize());
            Error::Parse {
                line,
                column,
                message: e.error.to_string(),
            }
        })?;
        if matches!(tok, Tok::EndOfFile) {
            continue;
        }
        let kind = classify(&tok);
        let start = range.start().to_usize();
        let end = range.end().to_usize();
        let lexeme = match kind {
            // Indent/Dedent and logical newlines may span or carry no text.
            TokenKind::Newline | TokenKind::IndentMarker => String::new(),
            _ => source[start..end].to_string(),
        };
        let (line, column) = index.locate(start);
        tokens.push(Token {
            kind,
            lexeme,
            line,
            column,
        });
    }
    Ok(tokens)
}

fn classify(tok: &Tok) -> TokenKind {
    use Tok::*;
    match tok {
        Name { .. } => TokenKind::Name,
        Int { .. } | Float { .. } | Complex { .. } => TokenKind::Number,
        String { .. } => TokenKind::String,
        Comment(_) => TokenKind::Comment,
        Newline | NonLogicalNewline => TokenKind::Newline,
        Indent | Dedent => TokenKind::IndentMarker,
        Lpar | Lsqb | Lbrace => TokenKind::BracketOpen,
        Rpar | Rsqb | Rbrace => TokenKind::BracketClose,
        Comma | Colon | Dot | Semi | Rarrow => TokenKind::Punct,
        False | None | True | And | As | Assert | Async | Await | Break | Class | Continue
        | Def | Del | Elif | Else | Except | Finally | For | From | Global | If | Import | In
        | Is | Lambda | Nonlocal | Not | Or | Pass | Raise | Return | Try | While | With
        | Yield | Match | Case | Type => TokenKind::Keyword,
        Ellipsis | StartModule | StartInteractive | StartExpression | EndOfFile => TokenKind::Other,
        _ => TokenKind::Operator,
    }
}
