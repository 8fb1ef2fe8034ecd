//! Method-level corpus acquisition and the manifest format.
//!
//! A corpus is a list of [`MethodText`] units, coming either from
//! [`extract::extract_methods`] over real source files or from the
//! [`synth`] generator. [`split_corpus`] anonymizes every method, tags a
//! deterministic train/test split, and produces the [`CorpusManifest`]
//! that the training side consumes.

pub mod extract;
pub mod synth;

pub use extract::extract_methods;
pub use synth::{generate_synthetic, GenShape};

use crate::lexer::{
    self, anonymize, identifier_groups, numericalize, LexError, TokenSequence, Vocabulary,
};
use crate::rng::PortableRng;
use std::collections::HashSet;
use thiserror::Error;

const SPLIT_STREAM: u64 = 0x73706c69; // stream tag for the split shuffle

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unbalanced delimiters at offset {0}")]
    UnbalancedDelimiters(usize),
    #[error("invalid generator shape: {0}")]
    InvalidShape(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("method {origin:?} failed the lexing pipeline: {source}")]
    Process {
        origin: String,
        #[source]
        source: LexError,
    },
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("manifest line {line}: {reason}")]
    MalformedManifest { line: usize, reason: String },
}

/// One method as raw text: signature start through the matching `}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodText {
    pub name: String,
    pub body: String,
    pub origin: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn tag(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Split> {
        match tag {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// A processed method: anonymized lexemes plus provenance and split tag.
///
/// `id_groups` records which `id` positions shared an identifier in the
/// original text; it is carried for completeness and not consumed by the
/// models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub origin: String,
    pub name: String,
    pub split: Split,
    pub lexemes: Vec<String>,
    pub id_groups: Vec<Vec<usize>>,
}

impl ManifestEntry {
    pub fn token_sequence(&self, vocab: &Vocabulary) -> Result<TokenSequence, LexError> {
        numericalize(&self.lexemes, vocab)
    }
}

/// The whole processed corpus, in stable entry order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusManifest {
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn split_entries(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn train_count(&self) -> usize {
        self.split_entries(Split::Train).count()
    }

    pub fn test_count(&self) -> usize {
        self.split_entries(Split::Test).count()
    }

    /// Line-oriented plain text: a header line, then one tab-separated
    /// record per method (origin, name, split, space-joined lexemes,
    /// identifier groups).
    pub fn to_file_string(&self) -> String {
        let mut out = format!("manifest v1 seed={}\n", self.seed);
        for e in &self.entries {
            let groups = if e.id_groups.is_empty() {
                "-".to_string()
            } else {
                e.id_groups
                    .iter()
                    .map(|g| g.iter().map(usize::to_string).collect::<Vec<_>>().join("."))
                    .collect::<Vec<_>>()
                    .join(";")
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                e.origin,
                e.name,
                e.split.tag(),
                e.lexemes.join(" "),
                groups
            ));
        }
        out
    }

    pub fn from_file_string(text: &str) -> Result<Self, CorpusError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(CorpusError::MalformedManifest {
            line: 1,
            reason: "empty file".into(),
        })?;
        let seed = header
            .strip_prefix("manifest v1 seed=")
            .and_then(|s| s.parse().ok())
            .ok_or(CorpusError::MalformedManifest {
                line: 1,
                reason: format!("bad header {header:?}"),
            })?;
        let mut entries = Vec::new();
        for (k, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(CorpusError::MalformedManifest {
                    line: k + 1,
                    reason: format!("expected 5 tab-separated fields, got {}", fields.len()),
                });
            }
            let split = Split::from_tag(fields[2]).ok_or(CorpusError::MalformedManifest {
                line: k + 1,
                reason: format!("unknown split tag {:?}", fields[2]),
            })?;
            let lexemes: Vec<String> = fields[3].split(' ').map(String::from).collect();
            if lexemes.is_empty() || lexemes.iter().any(String::is_empty) {
                return Err(CorpusError::MalformedManifest {
                    line: k + 1,
                    reason: "empty token sequence".into(),
                });
            }
            let id_groups = if fields[4] == "-" {
                Vec::new()
            } else {
                fields[4]
                    .split(';')
                    .map(|g| {
                        g.split('.')
                            .map(|p| {
                                p.parse().map_err(|_| CorpusError::MalformedManifest {
                                    line: k + 1,
                                    reason: format!("bad id group {g:?}"),
                                })
                            })
                            .collect::<Result<Vec<usize>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?
            };
            entries.push(ManifestEntry {
                origin: fields[0].to_string(),
                name: fields[1].to_string(),
                split,
                lexemes,
                id_groups,
            });
        }
        Ok(CorpusManifest { seed, entries })
    }
}

/// Anonymize every method and tag a deterministic train/test split.
///
/// The shuffle is a pure function of `seed`; `floor(test_fraction * N)`
/// entries become the test set. Entry order in the manifest follows the
/// input order. `test_fraction` must lie in `(0, 1)`.
pub fn split_corpus(
    entries: &[MethodText],
    seed: u64,
    test_fraction: f64,
) -> Result<CorpusManifest, CorpusError> {
    assert!(
        test_fraction > 0.0 && test_fraction < 1.0,
        "test_fraction must be in (0,1)"
    );
    if entries.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let vocab = Vocabulary::builtin();
    let known: HashSet<String> = entries.iter().map(|m| m.name.clone()).collect();

    let mut order: Vec<usize> = (0..entries.len()).collect();
    let mut rng = PortableRng::from_parts(&[seed, SPLIT_STREAM]);
    rng.shuffle(&mut order);
    let test_count = (test_fraction * entries.len() as f64).floor() as usize;
    let test_set: HashSet<usize> = order.into_iter().take(test_count).collect();

    let mut manifest_entries = Vec::with_capacity(entries.len());
    for (k, method) in entries.iter().enumerate() {
        let raw = lexer::tokenize(&method.body).map_err(|source| CorpusError::Process {
            origin: method.origin.clone(),
            source,
        })?;
        let anon = anonymize(&raw, &method.name, &known);
        let groups = identifier_groups(&raw, &anon);
        // closed-vocabulary check; anonymized output must numericalize
        numericalize(&anon, &vocab).map_err(|source| CorpusError::Process {
            origin: method.origin.clone(),
            source,
        })?;
        manifest_entries.push(ManifestEntry {
            origin: method.origin.clone(),
            name: method.name.clone(),
            split: if test_set.contains(&k) {
                Split::Test
            } else {
                Split::Train
            },
            lexemes: anon,
            id_groups: groups,
        });
    }
    Ok(CorpusManifest {
        seed,
        entries: manifest_entries,
    })
}
