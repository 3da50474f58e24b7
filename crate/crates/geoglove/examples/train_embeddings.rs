//! GloVe training on a synthetic two-cluster corpus: build the
//! vocabulary, accumulate distance-weighted co-occurrences, train with
//! AdaGrad and inspect the geometry that falls out.
//!
//!     cargo run -p geoglove --example train_embeddings

use geoglove::fixtures;
use geoglove::glove::{self, GloveConfig};
use geoglove::ranking::cosine_similarity;

fn main() {
    let streams = fixtures::two_cluster_corpus(20_260_808, 12, 18);
    println!("corpus: {} documents", streams.len());

    let config = GloveConfig {
        dim: 16,
        epochs: 30,
        min_count: 1,
        seed: 7,
        ..GloveConfig::default()
    };
    let vocab = glove::build_vocabulary(&streams, config.min_count).expect("non-empty corpus");
    let cooc = glove::accumulate_cooc(&streams, &vocab, config.window);
    println!(
        "vocabulary: {} words, co-occurrence entries: {} (total mass {:.1})",
        vocab.len(),
        cooc.nnz(),
        cooc.total_mass()
    );

    let trained = glove::train_glove(&cooc, vocab, &config).expect("training converges");
    println!(
        "loss: {:.4} -> {:.4} over {} epochs",
        trained.loss_trace[0],
        trained.loss_trace.last().unwrap(),
        config.epochs
    );

    let (within, across) = fixtures::cluster_cosine_means(&trained.table);
    println!("mean cosine within clusters {within:.3}, across clusters {across:.3}");

    // nearest neighbours of one rock-cluster word
    let query = "granite";
    let qv = trained.table.vector(query).expect("query in vocabulary");
    let mut sims: Vec<(f64, &str)> = trained
        .table
        .vocab()
        .words()
        .iter()
        .filter(|w| w.as_str() != query)
        .map(|w| {
            let s = cosine_similarity(qv, trained.table.vector(w).unwrap()).unwrap();
            (s, w.as_str())
        })
        .collect();
    sims.sort_by(|a, b| b.0.total_cmp(&a.0));
    println!("\nnearest to `{query}`:");
    for (s, w) in sims.iter().take(5) {
        println!("  {w:<10} {s:+.3}");
    }
}
