//! Keyword-to-city ranking on the planted-resource fixture: train small
//! embeddings, filter the vocabulary against a gazetteer, and list the
//! cities most similar to "lithium".
//!
//!     cargo run -p geoglove --example rank_cities

use geoglove::fixtures;
use geoglove::gazetteer;
use geoglove::glove::{self, GloveConfig};
use geoglove::ranking;
use geoglove::reducers::ReducerModel;

fn main() {
    let world = fixtures::planted_world(20_260_808);
    let config = GloveConfig {
        dim: 16,
        epochs: 30,
        min_count: 1,
        seed: 3,
        ..GloveConfig::default()
    };
    let vocab = glove::build_vocabulary(&world.streams, config.min_count).unwrap();
    let cooc = glove::accumulate_cooc(&world.streams, &vocab, config.window);
    let trained = glove::train_glove(&cooc, vocab, &config).unwrap();

    let fvocab = gazetteer::filter_vocabulary(&trained.table, &world.english, &world.cities);
    println!(
        "vocabulary {} -> filtered {} (city names + listed English words)",
        trained.table.len(),
        fvocab.len()
    );

    let model = ReducerModel::identity(trained.table.dim());
    let scores = ranking::score_all(&world.keyword, &trained.table, &model, &fvocab).unwrap();
    let top = ranking::top_k_cities(&scores.scores, &fvocab, 10);

    println!("\nRank | City | Admin-name");
    for row in &top.rows {
        println!("{} | {} | {}", row.rank, row.word, row.city.admin_name);
    }
    println!(
        "\n(the three `Ore Belt` cities were planted next to the synthetic mine; \
         everything in `Far Ring` sits thousands of kilometres away)"
    );
    print!("{}", ranking::ranking_csv(&top.rows));
}
