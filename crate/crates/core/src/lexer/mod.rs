//! Tokenization, anonymization, and numericalization of method text.
//!
//! The pipeline is `tokenize -> anonymize -> numericalize -> one_hot`:
//! raw source becomes a list of raw lexemes, then a list of vocabulary
//! lexemes (identifiers replaced by placeholders, literals by class tokens),
//! then an index sequence, then the one-hot input matrix fed to the models.

mod vocab;

pub use vocab::{
    is_reserved_word, VocabError, Vocabulary, BOOL_LIT, CHAR_LIT, CONTROL_TOKENS, FLOAT_LIT, ID,
    INT_LIT, KEPT_NAMES, METHOD, MULTI_PUNCT, NULL_LIT, OTHER_METHOD, STR_LIT,
};

use crate::matrix::Matrix;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LexError {
    #[error("unterminated literal starting at offset {0}")]
    UnterminatedLiteral(usize),
    #[error("illegal character {1:?} at offset {0}")]
    IllegalCharacter(usize, char),
    #[error("lexeme {lexeme:?} at position {position} is not in the vocabulary")]
    UnknownLexeme { lexeme: String, position: usize },
    #[error("a method must contain at least one token")]
    EmptySequence,
    #[error("token index {index} is out of range for one-hot width {width}")]
    IndexOutOfRange { index: usize, width: usize },
}

/// A raw token with its byte span in the source it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct RawToken {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Anonymized method as parallel index/lexeme/span lists.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    indices: Vec<usize>,
    lexemes: Vec<String>,
    spans: Vec<(usize, usize)>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn lexemes(&self) -> &[String] {
        &self.lexemes
    }

    pub fn spans(&self) -> &[(usize, usize)] {
        &self.spans
    }

    pub fn lexeme(&self, k: usize) -> &str {
        &self.lexemes[k]
    }

    pub fn render(&self) -> String {
        self.lexemes.join(" ")
    }
}

/// One-hot encoding of a token sequence: exactly one 1 per row, at the
/// token's vocabulary index.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHotMatrix {
    matrix: Matrix,
}

impl OneHotMatrix {
    /// Build directly from indices, without a full token sequence.
    pub fn from_indices(indices: &[usize], width: usize) -> Result<Self, LexError> {
        if indices.is_empty() {
            return Err(LexError::EmptySequence);
        }
        let mut matrix = Matrix::zeros(indices.len(), width);
        for (row, &ix) in indices.iter().enumerate() {
            if ix >= width {
                return Err(LexError::IndexOutOfRange { index: ix, width });
            }
            matrix.set(row, ix, 1.0);
        }
        Ok(Self { matrix })
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn width(&self) -> usize {
        self.matrix.cols()
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Split method text into raw lexemes with byte spans.
///
/// Multi-character operators are matched before single-character
/// punctuation; comments and whitespace are discarded; string and char
/// literals keep their quotes so later stages can classify them.
pub fn tokenize_spanned(body: &str) -> Result<Vec<RawToken>, LexError> {
    let bytes = body.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = body[pos..].chars().next().unwrap();
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        // comments
        if c == '/' && bytes.get(pos + 1) == Some(&b'/') {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        if c == '/' && bytes.get(pos + 1) == Some(&b'*') {
            let mut k = pos + 2;
            while k + 1 < bytes.len() && !(bytes[k] == b'*' && bytes[k + 1] == b'/') {
                k += 1;
            }
            pos = if k + 1 < bytes.len() {
                k + 2
            } else {
                bytes.len()
            };
            continue;
        }
        let start = pos;
        if is_ident_start(c) {
            let mut end = pos;
            for ch in body[pos..].chars() {
                if is_ident_char(ch) {
                    end += ch.len_utf8();
                } else {
                    break;
                }
            }
            tokens.push(RawToken {
                text: body[start..end].to_string(),
                start,
                end,
            });
            pos = end;
            continue;
        }
        if c.is_ascii_digit()
            || (c == '.' && matches!(bytes.get(pos + 1), Some(b) if b.is_ascii_digit()))
        {
            let end = scan_number(bytes, pos);
            tokens.push(RawToken {
                text: body[start..end].to_string(),
                start,
                end,
            });
            pos = end;
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = bytes[pos];
            let mut k = pos + 1;
            loop {
                if k >= bytes.len() {
                    return Err(LexError::UnterminatedLiteral(start));
                }
                if bytes[k] == b'\\' {
                    k += 2;
                    continue;
                }
                if bytes[k] == quote {
                    k += 1;
                    break;
                }
                if bytes[k] == b'\n' {
                    return Err(LexError::UnterminatedLiteral(start));
                }
                k += 1;
            }
            if k > bytes.len() {
                return Err(LexError::UnterminatedLiteral(start));
            }
            tokens.push(RawToken {
                text: body[start..k].to_string(),
                start,
                end: k,
            });
            pos = k;
            continue;
        }
        // multi-character operators first
        if let Some(op) = MULTI_PUNCT.iter().find(|op| body[pos..].starts_with(**op)) {
            tokens.push(RawToken {
                text: (*op).to_string(),
                start,
                end: pos + op.len(),
            });
            pos += op.len();
            continue;
        }
        if "()[]{};,.=+-*/%<>!&|^~?:@".contains(c) {
            tokens.push(RawToken {
                text: c.to_string(),
                start,
                end: pos + 1,
            });
            pos += 1;
            continue;
        }
        return Err(LexError::IllegalCharacter(pos, c));
    }
    Ok(tokens)
}

fn scan_number(bytes: &[u8], mut pos: usize) -> usize {
    let start = pos;
    // hex / binary
    if bytes[pos] == b'0' && pos + 1 < bytes.len() {
        let marker = bytes[pos + 1].to_ascii_lowercase();
        if marker == b'x' || marker == b'b' {
            pos += 2;
            while pos < bytes.len() && (bytes[pos].is_ascii_hexdigit() || bytes[pos] == b'_') {
                pos += 1;
            }
            if pos < bytes.len() && (bytes[pos] | 0x20) == b'l' {
                pos += 1;
            }
            return pos.max(start + 2);
        }
    }
    let digits = |bytes: &[u8], mut p: usize| {
        while p < bytes.len() && (bytes[p].is_ascii_digit() || bytes[p] == b'_') {
            p += 1;
        }
        p
    };
    pos = digits(bytes, pos);
    if pos < bytes.len()
        && bytes[pos] == b'.'
        && matches!(bytes.get(pos + 1), Some(b) if b.is_ascii_digit())
    {
        pos = digits(bytes, pos + 1);
    } else if pos < bytes.len() && bytes[pos] == b'.' && bytes[start] != b'.' {
        // trailing-dot float like "1."
        pos += 1;
    }
    if pos < bytes.len() && (bytes[pos] | 0x20) == b'e' {
        let mut k = pos + 1;
        if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
            k += 1;
        }
        if k < bytes.len() && bytes[k].is_ascii_digit() {
            pos = digits(bytes, k);
        }
    }
    if pos < bytes.len() && matches!(bytes[pos] | 0x20, b'f' | b'd' | b'l') {
        pos += 1;
    }
    pos
}

/// Split method text into raw lexemes.
pub fn tokenize(body: &str) -> Result<Vec<String>, LexError> {
    Ok(tokenize_spanned(body)?
        .into_iter()
        .map(|t| t.text)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RawKind {
    Identifier,
    Reserved,
    Int,
    Float,
    Str,
    Char,
    Bool,
    Null,
    Punct,
}

fn classify(lexeme: &str) -> RawKind {
    let first = lexeme.chars().next().expect("empty lexeme");
    if first == '"' {
        return RawKind::Str;
    }
    if first == '\'' {
        return RawKind::Char;
    }
    if lexeme == "true" || lexeme == "false" {
        return RawKind::Bool;
    }
    if lexeme == "null" {
        return RawKind::Null;
    }
    if is_ident_start(first) {
        return if is_reserved_word(lexeme) {
            RawKind::Reserved
        } else {
            RawKind::Identifier
        };
    }
    if first.is_ascii_digit() || (first == '.' && lexeme.len() > 1) {
        let lower = lexeme.to_ascii_lowercase();
        // hex and binary forms are integers no matter what they end in
        if lower.starts_with("0x") || lower.starts_with("0b") {
            return RawKind::Int;
        }
        let is_float = lower.contains('.')
            || lower.ends_with('f')
            || lower.ends_with('d')
            || lower.contains('e');
        return if is_float {
            RawKind::Float
        } else {
            RawKind::Int
        };
    }
    RawKind::Punct
}

/// Map raw lexemes onto the closed vocabulary.
///
/// Identifier handling, in order of precedence: the method's own name
/// becomes `method`; identifiers in call position (immediately before `(`)
/// or in `known_methods` become `other_method`; the kept names `i`, `j`,
/// `n` pass through; everything else becomes `id`. Single-digit integers
/// pass through as digits; all other literals collapse to their class
/// token. Reserved words and punctuation are untouched. Total on tokenizer
/// output, and idempotent.
pub fn anonymize(
    lexemes: &[String],
    method_name: &str,
    known_methods: &HashSet<String>,
) -> Vec<String> {
    let mut out = Vec::with_capacity(lexemes.len());
    for (k, lex) in lexemes.iter().enumerate() {
        let mapped = match classify(lex) {
            RawKind::Reserved | RawKind::Punct => lex.clone(),
            RawKind::Identifier => {
                let calls = lexemes.get(k + 1).map(String::as_str) == Some("(");
                if lex == method_name {
                    METHOD.to_string()
                } else if calls || known_methods.contains(lex) {
                    OTHER_METHOD.to_string()
                } else if KEPT_NAMES.contains(&lex.as_str()) {
                    lex.clone()
                } else {
                    ID.to_string()
                }
            }
            RawKind::Int => {
                if lex.len() == 1 {
                    lex.clone()
                } else {
                    INT_LIT.to_string()
                }
            }
            RawKind::Float => FLOAT_LIT.to_string(),
            RawKind::Str => STR_LIT.to_string(),
            RawKind::Char => CHAR_LIT.to_string(),
            RawKind::Bool => BOOL_LIT.to_string(),
            RawKind::Null => NULL_LIT.to_string(),
        };
        out.push(mapped);
    }
    out
}

/// Positions of `id` tokens grouped by the identifier they replaced.
///
/// Recorded in the corpus manifest for completeness; nothing downstream
/// consumes it.
pub fn identifier_groups(raw_lexemes: &[String], anonymized: &[String]) -> Vec<Vec<usize>> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, (raw, anon)) in raw_lexemes.iter().zip(anonymized).enumerate() {
        if anon == ID {
            match order.iter().position(|name| name == raw) {
                Some(g) => groups[g].push(k),
                None => {
                    order.push(raw.clone());
                    groups.push(vec![k]);
                }
            }
        }
    }
    groups
}

/// Turn vocabulary lexemes into an index sequence.
///
/// Spans are taken over the canonical space-joined rendering of the lexemes.
pub fn numericalize(lexemes: &[String], vocab: &Vocabulary) -> Result<TokenSequence, LexError> {
    if lexemes.is_empty() {
        return Err(LexError::EmptySequence);
    }
    let mut spans = Vec::with_capacity(lexemes.len());
    let mut offset = 0;
    for lex in lexemes {
        spans.push((offset, offset + lex.len()));
        offset += lex.len() + 1;
    }
    numericalize_spanned(lexemes, &spans, vocab)
}

/// As [`numericalize`], with caller-provided spans into the original body.
pub fn numericalize_spanned(
    lexemes: &[String],
    spans: &[(usize, usize)],
    vocab: &Vocabulary,
) -> Result<TokenSequence, LexError> {
    if lexemes.is_empty() {
        return Err(LexError::EmptySequence);
    }
    assert_eq!(
        lexemes.len(),
        spans.len(),
        "span list must parallel lexemes"
    );
    let mut indices = Vec::with_capacity(lexemes.len());
    for (position, lex) in lexemes.iter().enumerate() {
        match vocab.index_of(lex) {
            Some(ix) => indices.push(ix),
            None => {
                return Err(LexError::UnknownLexeme {
                    lexeme: lex.clone(),
                    position,
                })
            }
        }
    }
    Ok(TokenSequence {
        indices,
        lexemes: lexemes.to_vec(),
        spans: spans.to_vec(),
    })
}

/// Row-per-token one-hot matrix of width `width`.
pub fn one_hot(seq: &TokenSequence, width: usize) -> Result<OneHotMatrix, LexError> {
    OneHotMatrix::from_indices(seq.indices(), width)
}

/// Full front half of the pipeline: raw body to anonymized token sequence,
/// keeping spans into the original text.
pub fn analyze_method(
    body: &str,
    method_name: &str,
    known_methods: &HashSet<String>,
    vocab: &Vocabulary,
) -> Result<TokenSequence, LexError> {
    let raw = tokenize_spanned(body)?;
    let raw_texts: Vec<String> = raw.iter().map(|t| t.text.clone()).collect();
    let anon = anonymize(&raw_texts, method_name, known_methods);
    let spans: Vec<(usize, usize)> = raw.iter().map(|t| (t.start, t.end)).collect();
    numericalize_spanned(&anon, &spans, vocab)
}
