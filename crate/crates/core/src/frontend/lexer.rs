//! Lexer for MiniSol.

use super::FrontendError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Operator,
    IntLiteral,
    BoolLiteral,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-indexed.
    pub line: usize,
    /// 1-indexed, counted in characters.
    pub column: usize,
}

pub const KEYWORDS: [&str; 6] = ["func", "var", "if", "else", "while", "return"];

/// Fixed operator alphabet. `=` is assignment; it is never an RHS operator token.
pub const OPERATORS: [&str; 15] = [
    "+", "-", "*", "/", "%", "<", ">", "<=", ">=", "==", "!=", "&&", "||", "!", "=",
];

const PUNCT: [char; 6] = ['(', ')', '{', '}', ',', ';'];

pub fn tokenize(source: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut column = 1;

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        // `//` comments run to end of line
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                column += 1;
            }
            continue;
        }

        let start_col = column;
        let push = |tokens: &mut Vec<Token>, kind, text: String| {
            tokens.push(Token {
                kind,
                text,
                line,
                column: start_col,
            })
        };

        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            column += i - start;
            let kind = if text == "true" || text == "false" {
                TokenKind::BoolLiteral
            } else if KEYWORDS.contains(&text.as_str()) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            push(&mut tokens, kind, text);
            continue;
        }

        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            column += i - start;
            push(&mut tokens, TokenKind::IntLiteral, text);
            continue;
        }

        if PUNCT.contains(&c) {
            i += 1;
            column += 1;
            push(&mut tokens, TokenKind::Punct, c.to_string());
            continue;
        }

        // two-character operators first
        if let Some(&next) = chars.get(i + 1) {
            let pair: String = [c, next].iter().collect();
            if pair.len() == 2 && OPERATORS.contains(&pair.as_str()) {
                i += 2;
                column += 2;
                push(&mut tokens, TokenKind::Operator, pair);
                continue;
            }
        }
        let single = c.to_string();
        if OPERATORS.contains(&single.as_str()) {
            i += 1;
            column += 1;
            push(&mut tokens, TokenKind::Operator, single);
            continue;
        }

        return Err(FrontendError::Lex {
            line,
            column,
            found: c,
        });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_text(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn lexes_division_line() {
        use TokenKind::*;
        assert_eq!(
            kinds_and_text("x = y / r"),
            vec![
                (Identifier, "x".into()),
                (Operator, "=".into()),
                (Identifier, "y".into()),
                (Operator, "/".into()),
                (Identifier, "r".into()),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").unwrap().is_empty());
    }

    #[test]
    fn rejects_dollar() {
        match tokenize("x = 3 $ 4") {
            Err(FrontendError::Lex { line, column, found }) => {
                assert_eq!((line, column, found), (1, 7, '$'));
            }
            other => panic!("expected lex error, got {other:?}"),
        }
    }

    #[test]
    fn strips_comments_and_tracks_positions() {
        let toks = tokenize("a <= b // trailing\n  !c").unwrap();
        let pos: Vec<_> = toks.iter().map(|t| (t.text.as_str(), t.line, t.column)).collect();
        assert_eq!(
            pos,
            vec![("a", 1, 1), ("<=", 1, 3), ("b", 1, 6), ("!", 2, 3), ("c", 2, 4)]
        );
    }

    #[test]
    fn keywords_and_bools() {
        let toks = tokenize("while true return").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Keyword);
        assert_eq!(toks[1].kind, TokenKind::BoolLiteral);
        assert_eq!(toks[2].kind, TokenKind::Keyword);
    }
}
