//! Cross-module pipeline properties: corpus -> lexer -> flowgraph ->
//! manifest, on both hand fixtures and generated corpora.

use gcae_core::corpus::{
    extract_methods, generate_synthetic, split_corpus, CorpusManifest, GenShape,
};
use gcae_core::flowgraph::{build_flow_edges, linear_edges};
use gcae_core::lexer::{anonymize, numericalize, one_hot, tokenize, Vocabulary};
use proptest::prelude::*;
use std::collections::HashSet;

#[test]
fn generated_corpora_reach_the_final_token() {
    // breadth-first search oracle over the raw edge set
    fn reaches_end(edges: &std::collections::BTreeSet<(usize, usize)>, n: usize) -> bool {
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            for &(i, j) in edges.iter() {
                if i == v && !seen[j] {
                    queue.push_back(j);
                }
            }
        }
        seen[n - 1]
    }

    let vocab = Vocabulary::builtin();
    let methods = generate_synthetic(13, 150, GenShape::default()).unwrap();
    let known: HashSet<String> = methods.iter().map(|m| m.name.clone()).collect();
    for m in &methods {
        let raw = tokenize(&m.body).unwrap();
        let anon = anonymize(&raw, &m.name, &known);
        let seq = numericalize(&anon, &vocab).unwrap();
        let graph = build_flow_edges(&seq).unwrap();
        assert!(
            reaches_end(graph.edges(), seq.len()),
            "end unreachable for {}",
            m.origin
        );
    }
}

#[test]
fn extraction_feeds_the_pipeline() {
    let source = "
        class Demo {
            int twice(int n) { return n + n; }
            int loop(int n) { int s = 0; while (n > 0) { s += n; n--; } return s; }
        }
    ";
    let vocab = Vocabulary::builtin();
    let methods = extract_methods(source).unwrap();
    assert_eq!(methods.len(), 2);
    let known: HashSet<String> = methods.iter().map(|m| m.name.clone()).collect();
    for m in &methods {
        let raw = tokenize(&m.body).unwrap();
        let anon = anonymize(&raw, &m.name, &known);
        let seq = numericalize(&anon, &vocab).unwrap();
        build_flow_edges(&seq).unwrap();
    }
}

#[test]
fn manifest_written_and_reloaded_trains_identically() {
    use gcae_core::flowgraph::Regime;
    use gcae_core::training::{fit, TrainConfig};
    let methods = generate_synthetic(21, 12, GenShape::default()).unwrap();
    let manifest = split_corpus(&methods, 21, 0.25).unwrap();
    let reloaded = CorpusManifest::from_file_string(&manifest.to_file_string()).unwrap();
    let cfg = TrainConfig {
        hidden: 8,
        latent: 2,
        epochs: 2,
        ..TrainConfig::for_regime(Regime::Sequence)
    };
    let a = fit(&manifest, &cfg).unwrap();
    let b = fit(&reloaded, &cfg).unwrap();
    assert_eq!(a.params.checksum(), b.params.checksum());
}

proptest! {
    /// Anonymization is idempotent on anything the generator produces.
    #[test]
    fn anonymize_idempotent_on_generated_methods(seed in 0u64..500, index in 0usize..8) {
        let methods = generate_synthetic(seed, index + 1, GenShape::default()).unwrap();
        let m = &methods[index];
        let raw = tokenize(&m.body).unwrap();
        let once = anonymize(&raw, &m.name, &HashSet::new());
        let twice = anonymize(&once, &m.name, &HashSet::new());
        prop_assert_eq!(once, twice);
    }

    /// One-hot rows always argmax back to the index sequence.
    #[test]
    fn one_hot_argmax_roundtrip(indices in proptest::collection::vec(0usize..50, 1..40)) {
        let vocab = Vocabulary::builtin();
        let lexemes: Vec<String> = indices.iter().map(|&ix| vocab.lexeme(ix).to_string()).collect();
        let seq = numericalize(&lexemes, &vocab).unwrap();
        let m = one_hot(&seq, vocab.size()).unwrap();
        for r in 0..m.rows() {
            prop_assert_eq!(m.as_matrix().row_argmax(r), seq.indices()[r]);
            let sum: f64 = m.as_matrix().row(r).iter().sum();
            prop_assert_eq!(sum, 1.0);
        }
    }

    /// A method without the seven control tokens always yields the chain.
    #[test]
    fn straight_line_methods_have_chain_graphs(seed in 0u64..300) {
        let methods = generate_synthetic(seed, 1, GenShape::straight_line()).unwrap();
        let vocab = Vocabulary::builtin();
        let raw = tokenize(&methods[0].body).unwrap();
        let anon = anonymize(&raw, &methods[0].name, &HashSet::new());
        let seq = numericalize(&anon, &vocab).unwrap();
        let g = build_flow_edges(&seq).unwrap();
        let chain = linear_edges(seq.len());
        prop_assert_eq!(g.edges(), chain.edges());
    }

    /// Manifest round-trips byte-exactly through its file format.
    #[test]
    fn manifest_roundtrip(seed in 0u64..200, count in 1usize..12) {
        let methods = generate_synthetic(seed, count, GenShape::default()).unwrap();
        let manifest = split_corpus(&methods, seed, 0.4).unwrap();
        let text = manifest.to_file_string();
        let back = CorpusManifest::from_file_string(&text).unwrap();
        prop_assert_eq!(&back, &manifest);
        prop_assert_eq!(back.to_file_string(), text);
    }
}
