//! Token-level flow graphs and the normalized propagation matrix.
//!
//! Three regimes feed the same model architecture:
//! - `sequence`: the linear chain plus extra edges for the seven control
//!   tokens (`if else do while for return method`)
//! - `linear`: just the chain `k -> k+1`
//! - `naive`: no edges; after self-loop augmentation the propagation
//!   matrix is exactly the identity
//!
//! Edge rules for the sequence regime, applied per occurrence on top of the
//! linear chain:
//! - `if` / `else`: an extra edge from the block's `{` to its matching `}`,
//!   so flow may skip the block. `else if` contributes nothing of its own;
//!   the inner `if` is handled when its own token is reached.
//! - `while` / `for`: with the condition's closing `)` at `p`, the body
//!   braces at `b..c`, and the keyword at `w`: a skip edge `(p, c+1)` when
//!   `c+1` is in range, and a back edge `(c, w)`.
//! - `do`: with the trailing condition's `)` at `q` and the keyword at `w`:
//!   a back edge `(q, w)`; the linear continuation stands.
//! - `method` in call position (recursion): with the invocation's closing
//!   `)` at `r`: an edge `(r, 0)` to the start of the sequence; the linear
//!   continuation stands. The declaration's own `method` token (before the
//!   body's first `{`) does not count as a call.
//! - `return` at `t` with its statement-ending `;` at `s`: flow runs
//!   linearly `t..s`, then `s`'s linear successor edge is replaced by the
//!   single edge `(s, n-1)`. When the `;` already sits at `n-2` this
//!   degenerates to the linear edge.
//!
//! The two `;` inside a `for (...)` header are plain straight-line tokens;
//! they neither end statements nor interact with the `return` rule.

use crate::lexer::TokenSequence;
use crate::matrix::Matrix;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("malformed structure at token {position}: {reason}")]
    MalformedStructure { position: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Sequence,
    Linear,
    Naive,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Sequence, Regime::Linear, Regime::Naive];

    pub fn tag(self) -> &'static str {
        match self {
            Regime::Sequence => "sequence",
            Regime::Linear => "linear",
            Regime::Naive => "naive",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Regime> {
        match tag {
            "sequence" => Some(Regime::Sequence),
            "linear" => Some(Regime::Linear),
            "naive" => Some(Regime::Naive),
            _ => None,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Directed edge set over token positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    regime: Regime,
}

impl FlowGraph {
    /// Build from an explicit edge set. Panics on out-of-range endpoints.
    pub fn from_parts(n: usize, edges: BTreeSet<(usize, usize)>, regime: Regime) -> Self {
        assert!(n >= 1, "sequence length must be positive");
        for &(i, j) in &edges {
            assert!(i < n && j < n, "edge ({i},{j}) out of range for n={n}");
        }
        Self { n, edges, regime }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Plain-text export: a header line then one `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n={} regime={}\n", self.n, self.regime.tag());
        for (i, j) in &self.edges {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }
}

/// How many times each special-token rule fired while building a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RuleCounts {
    pub if_rule: usize,
    pub else_rule: usize,
    pub loop_rule: usize,
    pub do_rule: usize,
    pub recursion_rule: usize,
    pub return_rule: usize,
}

impl RuleCounts {
    pub fn total(&self) -> usize {
        self.if_rule
            + self.else_rule
            + self.loop_rule
            + self.do_rule
            + self.recursion_rule
            + self.return_rule
    }
}

/// A sequence-regime graph together with which rules produced it.
#[derive(Debug, Clone)]
pub struct FlowAnalysis {
    pub graph: FlowGraph,
    pub counts: RuleCounts,
}

/// The chain `{(k, k+1)}` over `n` tokens.
pub fn linear_edges(n: usize) -> FlowGraph {
    assert!(n >= 1, "sequence length must be positive");
    FlowGraph {
        n,
        edges: (0..n.saturating_sub(1)).map(|k| (k, k + 1)).collect(),
        regime: Regime::Linear,
    }
}

/// The empty edge set; normalization turns it into the identity.
pub fn naive_edges(n: usize) -> FlowGraph {
    assert!(n >= 1, "sequence length must be positive");
    FlowGraph {
        n,
        edges: BTreeSet::new(),
        regime: Regime::Naive,
    }
}

/// Graph for the regime, from the token sequence.
pub fn edges_for_regime(seq: &TokenSequence, regime: Regime) -> Result<FlowGraph, FlowError> {
    match regime {
        Regime::Sequence => build_flow_edges(seq),
        Regime::Linear => Ok(linear_edges(seq.len())),
        Regime::Naive => Ok(naive_edges(seq.len())),
    }
}

/// Control-flow edge set of an anonymized method.
pub fn build_flow_edges(seq: &TokenSequence) -> Result<FlowGraph, FlowError> {
    Ok(analyze_flow(seq)?.graph)
}

/// As [`build_flow_edges`], also reporting per-rule fire counts.
pub fn analyze_flow(seq: &TokenSequence) -> Result<FlowAnalysis, FlowError> {
    let lex: Vec<&str> = seq.lexemes().iter().map(String::as_str).collect();
    let n = lex.len();
    let mut edges: BTreeSet<(usize, usize)> =
        (0..n.saturating_sub(1)).map(|k| (k, k + 1)).collect();
    let mut counts = RuleCounts::default();

    // The declaration's `method` token lies before the body's first `{`
    // and is not a recursive call.
    let body_start = lex.iter().position(|&t| t == "{").unwrap_or(n);

    for w in 0..n {
        match lex[w] {
            "if" => {
                let p = expect_then_match(&lex, w, "(", ")")?;
                let b = expect_at(&lex, p + 1, "{", w)?;
                let c = match_forward(&lex, b, "{", "}")?;
                edges.insert((b, c));
                counts.if_rule += 1;
            }
            "else" => {
                if lex.get(w + 1) == Some(&"if") {
                    // handled by the `if` occurrence itself
                    continue;
                }
                let b = expect_at(&lex, w + 1, "{", w)?;
                let c = match_forward(&lex, b, "{", "}")?;
                edges.insert((b, c));
                counts.else_rule += 1;
            }
            "while" => {
                // the trailing condition of a do-loop is handled at `do`
                if is_do_while_tail(&lex, w) {
                    continue;
                }
                let p = expect_then_match(&lex, w, "(", ")")?;
                let b = expect_at(&lex, p + 1, "{", w)?;
                let c = match_forward(&lex, b, "{", "}")?;
                if c + 1 < n {
                    edges.insert((p, c + 1));
                }
                edges.insert((c, w));
                counts.loop_rule += 1;
            }
            "for" => {
                let p = expect_then_match(&lex, w, "(", ")")?;
                let b = expect_at(&lex, p + 1, "{", w)?;
                let c = match_forward(&lex, b, "{", "}")?;
                if c + 1 < n {
                    edges.insert((p, c + 1));
                }
                edges.insert((c, w));
                counts.loop_rule += 1;
            }
            "do" => {
                let b = expect_at(&lex, w + 1, "{", w)?;
                let c = match_forward(&lex, b, "{", "}")?;
                if lex.get(c + 1) != Some(&"while") {
                    return Err(FlowError::MalformedStructure {
                        position: c + 1,
                        reason: "do block must be followed by while".into(),
                    });
                }
                let q = expect_then_match(&lex, c + 1, "(", ")")?;
                edges.insert((q, w));
                counts.do_rule += 1;
            }
            "method" if w > body_start && lex.get(w + 1) == Some(&"(") => {
                let r = match_forward(&lex, w + 1, "(", ")")?;
                edges.insert((r, 0));
                counts.recursion_rule += 1;
            }
            "return" => {
                let s = find_forward(&lex, w, ";").ok_or(FlowError::MalformedStructure {
                    position: w,
                    reason: "return statement has no terminating semicolon".into(),
                })?;
                if s + 1 < n {
                    edges.remove(&(s, s + 1));
                    edges.insert((s, n - 1));
                }
                counts.return_rule += 1;
            }
            _ => {}
        }
    }

    Ok(FlowAnalysis {
        graph: FlowGraph {
            n,
            edges,
            regime: Regime::Sequence,
        },
        counts,
    })
}

/// True when the `while` at `w` is the tail of a `do { ... } while (...)`.
fn is_do_while_tail(lex: &[&str], w: usize) -> bool {
    w > 0
        && lex[w - 1] == "}"
        && matches!(match_backward(lex, w - 1, "{", "}"), Some(b) if b > 0 && lex[b - 1] == "do")
}

fn expect_at(lex: &[&str], pos: usize, token: &str, context: usize) -> Result<usize, FlowError> {
    if lex.get(pos) == Some(&token) {
        Ok(pos)
    } else {
        Err(FlowError::MalformedStructure {
            position: context,
            reason: format!("expected {token:?} at token {pos}"),
        })
    }
}

/// Expect `open` right after `keyword_pos` and return its matching `close`.
fn expect_then_match(
    lex: &[&str],
    keyword_pos: usize,
    open: &str,
    close: &str,
) -> Result<usize, FlowError> {
    let open_pos = expect_at(lex, keyword_pos + 1, open, keyword_pos)?;
    match_forward(lex, open_pos, open, close)
}

/// Position of the delimiter matching the opener at `open_pos`.
fn match_forward(
    lex: &[&str],
    open_pos: usize,
    open: &str,
    close: &str,
) -> Result<usize, FlowError> {
    let mut depth = 0usize;
    for (k, &t) in lex.iter().enumerate().skip(open_pos) {
        if t == open {
            depth += 1;
        } else if t == close {
            depth -= 1;
            if depth == 0 {
                return Ok(k);
            }
        }
    }
    Err(FlowError::MalformedStructure {
        position: open_pos,
        reason: format!("unmatched {open:?}"),
    })
}

/// Position of the opener matching the closer at `close_pos`.
fn match_backward(lex: &[&str], close_pos: usize, open: &str, close: &str) -> Option<usize> {
    let mut depth = 0usize;
    for k in (0..=close_pos).rev() {
        if lex[k] == close {
            depth += 1;
        } else if lex[k] == open {
            depth -= 1;
            if depth == 0 {
                return Some(k);
            }
        }
    }
    None
}

fn find_forward(lex: &[&str], from: usize, token: &str) -> Option<usize> {
    (from..lex.len()).find(|&k| lex[k] == token)
}

/// Dense normalized propagation matrix applied at every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrix {
    matrix: Matrix,
    regime: Regime,
}

impl PropagationMatrix {
    pub fn as_matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }
}

/// Self-loop augmentation and symmetric normalization.
///
/// With `A` the directed 0/1 adjacency of the edge set, the result is
/// `D^{-1/2} (A + I) D^{-1/2}` where `D` holds the row sums of `A + I`.
/// The formula is applied to the directed adjacency as-is, so the output
/// is not in general a symmetric matrix. The self loop keeps every row sum
/// at least 1, so the normalization never divides by zero, and the naive
/// regime comes out as exactly the identity.
pub fn normalize(graph: &FlowGraph) -> PropagationMatrix {
    let n = graph.n();
    let mut tilde = Matrix::identity(n);
    for &(i, j) in graph.edges() {
        assert!(i < n && j < n, "edge endpoint out of range");
        tilde.set(i, j, tilde.get(i, j).max(1.0));
    }
    let mut inv_sqrt_degree = vec![0.0; n];
    for (k, slot) in inv_sqrt_degree.iter_mut().enumerate() {
        let row_sum: f64 = tilde.row(k).iter().sum();
        *slot = 1.0 / row_sum.sqrt();
    }
    let mut matrix = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let a = tilde.get(i, j);
            if a != 0.0 {
                matrix.set(i, j, inv_sqrt_degree[i] * a * inv_sqrt_degree[j]);
            }
        }
    }
    PropagationMatrix {
        matrix,
        regime: graph.regime(),
    }
}
