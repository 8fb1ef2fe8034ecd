//! The closed token vocabulary.
//!
//! Anonymized method text is drawn from this fixed list and nothing else.
//! The list is ordered; a lexeme's position is its numeric index and the
//! one-hot column used by the models, so the order is part of every trained
//! model's contract (a checksum of the list is stored in model files).
//!
//! Sections, in order:
//!   - the 7 control tokens that get special flow edges
//!   - anonymization placeholders (`id`, `other_method`)
//!   - the kept short variable names (`i`, `j`, `n`)
//!   - single digits, which pass through anonymization
//!   - literal class tokens (`int_lit`, `float_lit`, ...)
//!   - keywords
//!   - primitive and common library type names, kept readable on purpose
//!   - punctuation and operators, exactly the set the tokenizer can emit

use std::collections::HashMap;
use thiserror::Error;

/// The 7 tokens that add non-linear control-flow edges.
pub const CONTROL_TOKENS: [&str; 7] = ["if", "else", "do", "while", "for", "return", "method"];

/// Variable names that survive anonymization.
pub const KEPT_NAMES: [&str; 3] = ["i", "j", "n"];

pub const INT_LIT: &str = "int_lit";
pub const FLOAT_LIT: &str = "float_lit";
pub const STR_LIT: &str = "str_lit";
pub const CHAR_LIT: &str = "char_lit";
pub const BOOL_LIT: &str = "bool_lit";
pub const NULL_LIT: &str = "null_lit";

pub const ID: &str = "id";
pub const METHOD: &str = "method";
pub const OTHER_METHOD: &str = "other_method";

const KEYWORDS: [&str; 35] = [
    "abstract",
    "assert",
    "break",
    "case",
    "catch",
    "class",
    "const",
    "continue",
    "default",
    "enum",
    "extends",
    "final",
    "finally",
    "goto",
    "implements",
    "import",
    "instanceof",
    "interface",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "volatile",
];

const PRIMITIVE_TYPES: [&str; 10] = [
    "boolean", "byte", "char", "double", "float", "int", "long", "short", "void", "String",
];

const LIBRARY_TYPES: [&str; 25] = [
    "Object",
    "Integer",
    "Boolean",
    "Character",
    "Byte",
    "Short",
    "Long",
    "Double",
    "Float",
    "Number",
    "List",
    "ArrayList",
    "Map",
    "HashMap",
    "Set",
    "HashSet",
    "Collection",
    "Iterator",
    "Optional",
    "StringBuilder",
    "Math",
    "System",
    "Exception",
    "RuntimeException",
    "Override",
];

const SINGLE_PUNCT: [&str; 25] = [
    "(", ")", "{", "}", "[", "]", ";", ",", ".", "=", "+", "-", "*", "/", "%", "<", ">", "!", "&",
    "|", "^", "~", "?", ":", "@",
];

/// Multi-character operators, matched before single characters.
pub const MULTI_PUNCT: [&str; 13] = [
    "==", "<=", ">=", "!=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "->",
];

#[derive(Debug, Error, PartialEq)]
pub enum VocabError {
    #[error("lexeme {lexeme:?} at position {position} is not in the vocabulary")]
    UnknownLexeme { lexeme: String, position: usize },
    #[error("vocabulary file line {0} is empty")]
    EmptyLine(usize),
    #[error("duplicate lexeme {0:?} in vocabulary file")]
    Duplicate(String),
}

/// Closed bijection between lexemes and indices.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    lexemes: Vec<String>,
    index_of: HashMap<String, usize>,
}

impl Vocabulary {
    /// The built-in vocabulary used by the whole pipeline.
    pub fn builtin() -> Self {
        let mut lexemes: Vec<&str> = Vec::new();
        lexemes.extend(CONTROL_TOKENS);
        lexemes.extend([ID, OTHER_METHOD]);
        lexemes.extend(KEPT_NAMES);
        lexemes.extend(["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"]);
        lexemes.extend([INT_LIT, FLOAT_LIT, STR_LIT, CHAR_LIT, BOOL_LIT, NULL_LIT]);
        lexemes.extend(KEYWORDS);
        lexemes.extend(PRIMITIVE_TYPES);
        lexemes.extend(LIBRARY_TYPES);
        lexemes.extend(SINGLE_PUNCT);
        lexemes.extend(MULTI_PUNCT);
        Self::from_lexemes(lexemes.into_iter().map(String::from).collect())
            .expect("builtin vocabulary is well formed")
    }

    pub fn from_lexemes(lexemes: Vec<String>) -> Result<Self, VocabError> {
        let mut index_of = HashMap::with_capacity(lexemes.len());
        for (k, lex) in lexemes.iter().enumerate() {
            if lex.is_empty() {
                return Err(VocabError::EmptyLine(k));
            }
            if index_of.insert(lex.clone(), k).is_some() {
                return Err(VocabError::Duplicate(lex.clone()));
            }
        }
        Ok(Self { lexemes, index_of })
    }

    /// Number of lexemes; the one-hot dimension.
    pub fn size(&self) -> usize {
        self.lexemes.len()
    }

    pub fn lexemes(&self) -> &[String] {
        &self.lexemes
    }

    pub fn lexeme(&self, index: usize) -> &str {
        &self.lexemes[index]
    }

    pub fn index_of(&self, lexeme: &str) -> Option<usize> {
        self.index_of.get(lexeme).copied()
    }

    pub fn contains(&self, lexeme: &str) -> bool {
        self.index_of.contains_key(lexeme)
    }

    /// FNV-1a 64 over the serialized lexeme list. Stored in model files so a
    /// model is never decoded against a different vocabulary.
    pub fn checksum(&self) -> u64 {
        let mut hash: u64 = 0xcbf29ce484222325;
        for lex in &self.lexemes {
            for b in lex.as_bytes() {
                hash ^= u64::from(*b);
                hash = hash.wrapping_mul(0x100000001b3);
            }
            hash ^= u64::from(b'\n');
            hash = hash.wrapping_mul(0x100000001b3);
        }
        hash
    }

    /// One lexeme per line; the 0-based line number is the index.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for lex in &self.lexemes {
            out.push_str(lex);
            out.push('\n');
        }
        out
    }

    pub fn from_file_string(text: &str) -> Result<Self, VocabError> {
        let lexemes: Vec<String> = text.lines().map(String::from).collect();
        Self::from_lexemes(lexemes)
    }
}

/// Words the tokenizer recognizes as reserved: they pass through
/// anonymization unchanged. Covers keywords, kept type names, and the
/// vocabulary's own placeholder tokens so that anonymized text re-anonymizes
/// to itself.
pub fn is_reserved_word(word: &str) -> bool {
    CONTROL_TOKENS.contains(&word)
        || word == ID
        || word == OTHER_METHOD
        || [INT_LIT, FLOAT_LIT, STR_LIT, CHAR_LIT, BOOL_LIT, NULL_LIT].contains(&word)
        || KEYWORDS.contains(&word)
        || PRIMITIVE_TYPES.contains(&word)
        || LIBRARY_TYPES.contains(&word)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_is_bijective_and_sized() {
        let v = Vocabulary::builtin();
        assert_eq!(v.size(), 136);
        for (k, lex) in v.lexemes().iter().enumerate() {
            assert_eq!(v.index_of(lex), Some(k));
        }
    }

    #[test]
    fn builtin_contains_required_tokens() {
        let v = Vocabulary::builtin();
        for t in CONTROL_TOKENS {
            assert!(v.contains(t), "missing control token {t}");
        }
        for t in [ID, OTHER_METHOD, "i", "j", "n"] {
            assert!(v.contains(t));
        }
        for d in 0..10 {
            assert!(v.contains(&d.to_string()));
        }
        for t in [INT_LIT, FLOAT_LIT, STR_LIT, CHAR_LIT, BOOL_LIT, NULL_LIT] {
            assert!(v.contains(t));
        }
        for op in MULTI_PUNCT {
            assert!(v.contains(op));
        }
    }

    #[test]
    fn file_roundtrip_preserves_order_and_checksum() {
        let v = Vocabulary::builtin();
        let text = v.to_file_string();
        let back = Vocabulary::from_file_string(&text).unwrap();
        assert_eq!(back.lexemes(), v.lexemes());
        assert_eq!(back.checksum(), v.checksum());
    }

    #[test]
    fn checksum_changes_with_order() {
        let a = Vocabulary::from_lexemes(vec!["x".into(), "y".into()]).unwrap();
        let b = Vocabulary::from_lexemes(vec!["y".into(), "x".into()]).unwrap();
        assert_ne!(a.checksum(), b.checksum());
    }

    #[test]
    fn duplicate_lexeme_rejected() {
        let err = Vocabulary::from_lexemes(vec!["x".into(), "x".into()]).unwrap_err();
        assert_eq!(err, VocabError::Duplicate("x".into()));
    }
}
