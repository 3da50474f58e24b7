//! The whole pipeline against the shipped demo data, driven through the
//! same stage functions the CLI uses. Artifacts land in a temporary
//! directory and are listed at the end.
//!
//!     cargo run -p geoglove --example full_pipeline

use std::path::{Path, PathBuf};

use geoglove::pipeline::{self, PipelineConfig};

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let out = std::env::temp_dir().join("geoglove-full-pipeline-demo");
    let _ = std::fs::remove_dir_all(&out);

    let cfg = pipeline::parse_config(&data.join("config.txt")).expect("demo config parses");
    // the demo config's paths are relative to the repository root
    let cfg = PipelineConfig {
        corpus: Some(data.join("corpus")),
        cities: Some(data.join("cities.csv")),
        mines: Some(data.join("mines.csv")),
        output_dir: out.clone(),
        ..cfg
    };

    pipeline::cmd_all(&cfg, true).expect("pipeline runs");

    println!("\nartifacts in {}:", out.display());
    let mut files: Vec<PathBuf> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for f in files {
        let size = std::fs::metadata(&f).map(|m| m.len()).unwrap_or(0);
        println!(
            "  {:>8} B  {}",
            size,
            f.file_name().unwrap().to_string_lossy()
        );
    }
}
