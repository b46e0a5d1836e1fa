use super::{ModelConfig, ModelError};
use crate::dependence::{
    encode_path_capped, get_path_with_mode, line_tokens, EncodedPath, EndPoint, PathOrOneHot, TokenClass, Vocab,
};
use crate::frontend::{parse_source, Ast};

/// Where a token's define vector comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DefineSource {
    /// No usable definition: the fixed undefined vector.
    Undefined,
    /// Operator or built-in: a row of the one-hot projection.
    OneHot(usize),
    /// Recursive representation of another line.
    Line(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenSlot {
    pub text: String,
    pub class: TokenClass,
    pub endpoint: EndPoint,
    pub define: DefineSource,
    /// Encoded context path; `None` for operators, built-ins, and tokens
    /// without a definition.
    pub context: Option<EncodedPath>,
}

/// A parsed program with every representable line's token slots resolved
/// against a vocabulary and endpoint mode.
#[derive(Debug, Clone)]
pub struct PreparedProgram {
    pub id: String,
    pub ast: Ast,
    /// Slots of lines `1..=represented_lines()`; index 0 is line 1.
    lines: Vec<Vec<TokenSlot>>,
}

impl PreparedProgram {
    pub fn from_source(id: &str, source: &str, vocab: &Vocab, cfg: &ModelConfig) -> Result<Self, ModelError> {
        let ast = parse_source(source).map_err(crate::dependence::DependenceError::from)?;
        Self::new(id, ast, vocab, cfg)
    }

    pub fn new(id: &str, ast: Ast, vocab: &Vocab, cfg: &ModelConfig) -> Result<Self, ModelError> {
        let mode = cfg.endpoint_mode();
        let count = ast.line_count.min(cfg.max_lines);
        let mut lines = Vec::with_capacity(count);
        for line in 1..=count {
            let mut slots = Vec::new();
            for occ in line_tokens(&ast, line, cfg.max_tokens_per_line)? {
                let (endpoint, repr) = get_path_with_mode(&occ, line, &ast, mode)?;
                let (define, context) = match repr {
                    PathOrOneHot::OneHot { text, class } => (DefineSource::OneHot(vocab.one_hot_index(&text, class)), None),
                    PathOrOneHot::Empty => (DefineSource::Undefined, None),
                    PathOrOneHot::Path(p) => {
                        let define = match endpoint {
                            Some(ep) if ep <= count => DefineSource::Line(ep),
                            _ => DefineSource::Undefined,
                        };
                        (define, Some(encode_path_capped(&p, vocab, cfg.max_path_len)))
                    }
                };
                slots.push(TokenSlot {
                    text: occ.text,
                    class: occ.class,
                    endpoint,
                    define,
                    context,
                });
            }
            lines.push(slots);
        }
        Ok(PreparedProgram {
            id: id.to_string(),
            ast,
            lines,
        })
    }

    /// Number of lines that have representations (at most the line cap).
    pub fn represented_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn slots(&self, line: usize) -> Option<&[TokenSlot]> {
        line.checked_sub(1).and_then(|i| self.lines.get(i)).map(Vec::as_slice)
    }
}
