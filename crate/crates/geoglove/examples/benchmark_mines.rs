//! Haversine benchmarking: distance from each top-ranked city to its
//! nearest mine, RMSE per technique, and a GeoJSON overlay.
//!
//!     cargo run -p geoglove --example benchmark_mines

use geoglove::benchmark;
use geoglove::fixtures;
use geoglove::gazetteer;
use geoglove::glove::{self, GloveConfig};
use geoglove::reducers::{self, ReducerKind, ReducerSpec};

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

    let mut summary = Vec::new();
    for kind in [ReducerKind::None, ReducerKind::Pca] {
        let spec = ReducerSpec {
            kind,
            seed: 9,
            ..ReducerSpec::default()
        };
        let model = reducers::fit(&trained.table, &spec).unwrap();
        let report = benchmark::run_benchmark(
            &world.keyword,
            &trained.table,
            &model,
            &fvocab,
            &world.mines,
            10,
        )
        .unwrap();
        println!("{}", benchmark::summary_line(kind, report.rmse_km));
        for row in report.rows.iter().take(3) {
            println!(
                "  #{} {} -> {} ({:.1} km)",
                row.ranked.rank, row.ranked.word, row.nearest_mine.name, row.distance_km
            );
        }
        if kind == ReducerKind::None {
            let geojson = benchmark::emit_geojson(&report, &world.mines);
            let features = geojson["features"].as_array().unwrap().len();
            println!("  geojson: {features} point features (cities + mines)");
        }
        summary.push((kind, report.rmse_km));
    }
    println!("\nsummary.csv:\n{}", benchmark::summary_csv(&summary));
}
