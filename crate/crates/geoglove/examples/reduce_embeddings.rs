//! The four dimensionality-reduction techniques on a shared fixture:
//! PCA, autoencoder, VAE and VAE-LSTM, all mapping 40-d vectors to 2-d.
//!
//!     cargo run -p geoglove --example reduce_embeddings

use geoglove::fixtures;
use geoglove::nnkit::Tensor;
use geoglove::reducers::{self, ReducerKind, ReducerSpec};

fn main() {
    // 200 vectors in 40 dimensions, intrinsically 2-d plus noise
    let table = fixtures::synthetic_embedding_table(99, 200, 40);
    let base = ReducerSpec {
        hidden_dims: vec![24, 12, 6],
        epochs: 40,
        batch_size: 32,
        lr: 1e-3,
        kl_weight: 0.1,
        lstm_steps: 10,
        lstm_features: 4,
        lstm_hidden: 16,
        seed: 5,
        ..ReducerSpec::default()
    };

    let mut sample = Vec::new();
    for i in 0..3 {
        sample.extend_from_slice(table.vector_at(i));
    }
    let batch = Tensor::matrix(3, table.dim(), sample).expect("finite fixture");

    for kind in ReducerKind::ALL {
        let spec = ReducerSpec {
            kind,
            ..base.clone()
        };
        let model = reducers::fit(&table, &spec).expect("fit succeeds");
        let reduced = model.transform(&batch).expect("matching width");
        print!("{:<28}", kind.label());
        match model.training_trace().last() {
            Some(last) => println!(
                "recon {:.4} -> {:.4} (kl {:.4})",
                model.training_trace()[0].recon,
                last.recon,
                last.kl
            ),
            None => println!("no training needed"),
        }
        for r in 0..reduced.rows().min(3) {
            let row = reduced.row_slice(r);
            let shown: Vec<String> = row.iter().take(4).map(|v| format!("{v:+.3}")).collect();
            println!(
                "    vector {r} -> [{}{}]",
                shown.join(", "),
                if row.len() > 4 { ", ..." } else { "" }
            );
        }
    }
}
