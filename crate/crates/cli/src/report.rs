//! Report and metrics-log writers.
//!
//! Every file starts with a format-version line and a provenance line
//! (seed, config checksum, vocabulary checksum). Nothing time-dependent is
//! written, so identical runs produce byte-identical files.

use gcae_core::corpus::CorpusManifest;
use gcae_core::flowgraph::Regime;
use gcae_core::lexer::Vocabulary;
use gcae_core::training::{CurvePoint, MetricsRecord};

/// Shared provenance block.
#[derive(Debug, Clone, Copy)]
pub struct Provenance {
    pub seed: u64,
    pub config_checksum: u64,
    pub vocab_checksum: u64,
}

impl Provenance {
    fn line(&self) -> String {
        format!(
            "# seed={} config={:016x} vocab={:016x}\n",
            self.seed, self.config_checksum, self.vocab_checksum
        )
    }
}

/// Metrics log: documented header row, then one record per sample.
/// Shared by per-epoch logs, curve files, and evaluation rows.
pub const METRICS_HEADER: &str = "epoch\tstep\tsplit\tregime\tloss\taccuracy";

pub fn metrics_log(
    provenance: Provenance,
    regime: Regime,
    epochs: &[MetricsRecord],
    test: Option<&MetricsRecord>,
    train_size: usize,
) -> String {
    let mut out = String::from("# gcae metrics v1\n");
    out.push_str(&provenance.line());
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for rec in epochs {
        out.push_str(&format!(
            "{}\t{}\ttrain\t{}\t{}\t{}\n",
            rec.epoch,
            train_size,
            regime.tag(),
            rec.mean_loss,
            rec.mean_accuracy
        ));
    }
    if let Some(rec) = test {
        out.push_str(&format!(
            "{}\t{}\ttest\t{}\t{}\t{}\n",
            rec.epoch,
            train_size,
            regime.tag(),
            rec.mean_loss,
            rec.mean_accuracy
        ));
    }
    out
}

/// Training-curve file: running means sampled during the epoch.
pub fn curve_log(provenance: Provenance, regime: Regime, curve: &[CurvePoint]) -> String {
    let mut out = String::from("# gcae training curve v1\n");
    out.push_str(&provenance.line());
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for p in curve {
        out.push_str(&format!(
            "{}\t{}\ttrain\t{}\t{}\t{}\n",
            p.epoch,
            p.step,
            regime.tag(),
            p.loss,
            p.accuracy
        ));
    }
    out
}

/// Comparison table: one row per regime, mean and sigma of loss and
/// accuracy on the shared test split.
pub fn comparison_table(provenance: Provenance, rows: &[(Regime, &MetricsRecord)]) -> String {
    let mut out = String::from("# gcae comparison report v1\n");
    out.push_str(&provenance.line());
    out.push_str("regime\tmean_loss\tloss_std\tmean_accuracy\taccuracy_std\n");
    for (regime, rec) in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            regime.tag(),
            rec.mean_loss,
            rec.loss_std,
            rec.mean_accuracy,
            rec.accuracy_std
        ));
    }
    out
}

/// Reconstruction dump: for each picked test method, the original token
/// row followed by one decoded row per regime.
pub fn reconstruction_dump(provenance: Provenance, blocks: &[ReconstructionBlock]) -> String {
    let mut out = String::from("# gcae reconstruction dump v1\n");
    out.push_str(&provenance.line());
    for block in blocks {
        out.push_str(&format!(
            "method origin={} n={}\n",
            block.origin,
            block.original.len()
        ));
        out.push_str(&format!("original\t{}\n", block.original.join(" ")));
        for (regime, tokens) in &block.decoded {
            out.push_str(&format!("{}\t{}\n", regime.tag(), tokens.join(" ")));
        }
        out.push('\n');
    }
    out
}

pub struct ReconstructionBlock {
    pub origin: String,
    pub original: Vec<String>,
    pub decoded: Vec<(Regime, Vec<String>)>,
}

/// Vocabulary frequency table over the whole corpus, descending by count,
/// ties by vocabulary index.
pub fn vocab_frequencies(
    provenance: Provenance,
    manifest: &CorpusManifest,
    vocab: &Vocabulary,
) -> String {
    let mut counts = vec![0usize; vocab.size()];
    for entry in &manifest.entries {
        for lex in &entry.lexemes {
            if let Some(ix) = vocab.index_of(lex) {
                counts[ix] += 1;
            }
        }
    }
    let mut order: Vec<usize> = (0..vocab.size()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut out = String::from("# gcae vocabulary frequencies v1\n");
    out.push_str(&provenance.line());
    out.push_str("lexeme\tcount\n");
    for ix in order {
        out.push_str(&format!("{}\t{}\n", vocab.lexeme(ix), counts[ix]));
    }
    out
}
