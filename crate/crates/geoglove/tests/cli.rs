//! End-to-end tests of the `geoglove` binary: exit codes, printed
//! output, artifact layout and stage caching.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geoglove"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
    config: PathBuf,
}

/// A tiny but complete input set: three documents, a gazetteer with a
/// homonym pair, two mines.
fn workspace() -> Workspace {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let corpus = root.join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    std::fs::write(
        corpus.join("a.txt"),
        "Lithium pegmatites near Bikita carry lithium and spodumene. \
         Bikita lithium output grows. Manono lithium dikes carry spodumene and lithium.",
    )
    .unwrap();
    std::fs::write(
        corpus.join("b.txt"),
        "Gold reefs near Cobar yield gold. Cobar copper and gold camps persist. \
         Manono lithium assays improve while Cobar stays gold country.",
    )
    .unwrap();
    std::fs::write(
        corpus.join("c.txt"),
        "Survey notes mention granite, basalt and gneiss. Granite hosts veins; \
         basalt flows cover granite near the gneiss belt.",
    )
    .unwrap();
    std::fs::write(
        root.join("cities.csv"),
        "city,city_ascii,lat,lng,country,iso2,iso3,admin_name\n\
         Bikita,Bikita,-20.0833,31.6167,Zimbabwe,ZW,ZWE,Masvingo\n\
         Manono,Manono,-7.3,27.4167,DR Congo,CD,COD,Tanganyika\n\
         Cobar,Cobar,-31.4983,145.8344,Australia,AU,AUS,New South Wales\n\
         Cobar,Cobar,-30.0,146.0,Australia,AU,AUS,Imaginary\n",
    )
    .unwrap();
    std::fs::write(
        root.join("mines.csv"),
        "name,lat,lng,commodity\n\
         Bikita Minerals,-20.0897,31.4192,lithium\n\
         Manono-Kitotolo,-7.2904,27.4579,lithium\n",
    )
    .unwrap();
    std::fs::write(root.join("english.txt"), "lithium\ngold\ngranite\n").unwrap();

    let config = root.join("config.txt");
    std::fs::write(
        &config,
        format!(
            "[paths]\n\
             corpus = {}\n\
             cities = {}\n\
             mines = {}\n\
             english_words = {}\n\
             output_dir = {}\n\
             [run]\n\
             keyword = lithium\n\
             k = 4\n\
             seed = 11\n\
             kinds = none,pca\n\
             [glove]\n\
             dim = 8\n\
             window = 6\n\
             epochs = 6\n\
             min_count = 2\n\
             [reducer]\n\
             hidden_dims = 6,4\n\
             epochs = 2\n\
             batch_size = 8\n",
            corpus.display(),
            root.join("cities.csv").display(),
            root.join("mines.csv").display(),
            root.join("english.txt").display(),
            root.join("out").display(),
        ),
    )
    .unwrap();
    Workspace {
        _dir: dir,
        root,
        config,
    }
}

fn config_str(ws: &Workspace) -> String {
    ws.config.to_string_lossy().into_owned()
}

#[test]
fn usage_and_unknown_flags_exit_2() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["train"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--config"));
}

#[test]
fn missing_corpus_path_exits_2_and_names_the_key() {
    let ws = workspace();
    let bad = ws.root.join("bad.txt");
    std::fs::write(&bad, "[paths]\noutput_dir = out\n").unwrap();
    let out = run(&["train", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`corpus`"), "{}", stderr(&out));
}

#[test]
fn train_prints_vocabulary_size_matching_independent_count() {
    let ws = workspace();
    let out = run(&["train", "--config", &config_str(&ws)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let printed: usize = text
        .lines()
        .find_map(|l| l.strip_prefix("train: vocabulary size "))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|n| n.parse().ok())
        .expect("vocabulary size line");

    // independent recount: unique processed tokens with frequency >= 2
    let docs = geoglove::corpus::load_corpus(&ws.root.join("corpus")).unwrap();
    let stops = geoglove::corpus::StopWordList::default_english();
    let streams = geoglove::corpus::process_corpus(&docs, &stops).unwrap();
    let mut freq = std::collections::HashMap::new();
    for s in &streams {
        for t in &s.tokens {
            *freq.entry(t.clone()).or_insert(0u64) += 1;
        }
    }
    let expected = freq.values().filter(|&&c| c >= 2).count();
    assert_eq!(printed, expected);
}

#[test]
fn train_twice_writes_identical_embeddings() {
    let ws = workspace();
    let run_into = |out_dir: &Path| {
        let out = run(&[
            "train",
            "--config",
            &config_str(&ws),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        std::fs::read(out_dir.join("embeddings.txt")).unwrap()
    };
    let a = run_into(&ws.root.join("out_a"));
    let b = run_into(&ws.root.join("out_b"));
    assert_eq!(a, b);
}

#[test]
fn reduce_skips_none_and_writes_one_file_per_network_kind() {
    let ws = workspace();
    assert_eq!(
        run(&["train", "--config", &config_str(&ws)]).status.code(),
        Some(0)
    );
    let out = run(&["reduce", "--config", &config_str(&ws)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("skipped none"));
    assert!(ws.root.join("out/model_pca.txt").exists());
    assert!(!ws.root.join("out/model_none.txt").exists());
}

#[test]
fn reduce_without_embeddings_exits_4() {
    let ws = workspace();
    let out = run(&["reduce", "--config", &config_str(&ws)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("embeddings.txt"), "{}", stderr(&out));
}

#[test]
fn rank_prints_table_header_and_expands_homonyms() {
    let ws = workspace();
    assert_eq!(
        run(&["train", "--config", &config_str(&ws)]).status.code(),
        Some(0)
    );
    let out = run(&["rank", "--config", &config_str(&ws), "--kind", "none"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("Rank | City | Admin-name"), "{text}");
    // the duplicate-name gazetteer rows occupy consecutive ranks
    let cobar_rows: Vec<&str> = text.lines().filter(|l| l.contains("| cobar |")).collect();
    assert_eq!(cobar_rows.len(), 2, "{text}");
    assert!(ws.root.join("out/ranking_none.csv").exists());
}

#[test]
fn unknown_keyword_exits_3_with_suggestions() {
    let ws = workspace();
    assert_eq!(
        run(&["train", "--config", &config_str(&ws)]).status.code(),
        Some(0)
    );
    let out = run(&[
        "rank",
        "--config",
        &config_str(&ws),
        "--kind",
        "none",
        "--keyword",
        "lithiumm",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("lithiumm"), "{err}");
    assert!(err.contains("nearest: lithium"), "{err}");
}

#[test]
fn benchmark_without_model_exits_4_naming_the_file() {
    let ws = workspace();
    assert_eq!(
        run(&["train", "--config", &config_str(&ws)]).status.code(),
        Some(0)
    );
    let out = run(&["benchmark", "--config", &config_str(&ws)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("model_pca.txt"), "{}", stderr(&out));
}

#[test]
fn benchmark_writes_summary_with_one_row_per_kind() {
    let ws = workspace();
    assert_eq!(
        run(&["train", "--config", &config_str(&ws)]).status.code(),
        Some(0)
    );
    assert_eq!(
        run(&["reduce", "--config", &config_str(&ws)]).status.code(),
        Some(0)
    );
    let out = run(&["benchmark", "--config", &config_str(&ws)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = std::fs::read_to_string(ws.root.join("out/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3); // header + none + pca
    assert_eq!(lines[0], "technique,rmse_km");
    assert!(lines[1].starts_with("No Dimensionality Reduction,"));
    assert!(lines[2].starts_with("PCA,"));
    assert!(ws.root.join("out/cities_none.geojson").exists());
}

#[test]
fn all_then_rerun_skips_every_stage() {
    let ws = workspace();
    let first = run(&["all", "--config", &config_str(&ws)]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert!(stdout(&first).contains("train: vocabulary size"));

    let second = run(&["all", "--config", &config_str(&ws)]);
    assert_eq!(second.status.code(), Some(0), "{}", stderr(&second));
    let text = stdout(&second);
    for stage in ["train: skipped", "reduce: skipped", "benchmark: skipped"] {
        assert!(text.contains(stage), "expected `{stage}` in:\n{text}");
    }
    assert!(text.contains("rank none: skipped"), "{text}");
}

#[test]
fn deleting_embeddings_forces_a_full_rerun() {
    let ws = workspace();
    assert_eq!(
        run(&["all", "--config", &config_str(&ws)]).status.code(),
        Some(0)
    );
    std::fs::remove_file(ws.root.join("out/embeddings.txt")).unwrap();
    let rerun = run(&["all", "--config", &config_str(&ws)]);
    assert_eq!(rerun.status.code(), Some(0), "{}", stderr(&rerun));
    let text = stdout(&rerun);
    assert!(text.contains("train: vocabulary size"), "{text}");
    assert!(!text.contains("train: skipped"), "{text}");
    assert!(!text.contains("reduce: skipped (up to date)"), "{text}");
}

#[test]
fn forced_reruns_are_byte_identical() {
    let ws = workspace();
    assert_eq!(
        run(&["all", "--config", &config_str(&ws)]).status.code(),
        Some(0)
    );
    let before = std::fs::read(ws.root.join("out/report_pca.csv")).unwrap();
    let out = run(&["all", "--config", &config_str(&ws), "--force"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(!stdout(&out).contains("skipped (up to date)"));
    let after = std::fs::read(ws.root.join("out/report_pca.csv")).unwrap();
    assert_eq!(before, after);
}

/// Hand-written embeddings with exact values give a ranking CSV that is
/// stable across platforms, so it can be frozen byte for byte.
#[test]
fn rank_matches_golden_csv_on_handmade_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(
        root.join("embeddings.txt"),
        "#glove dim=2 vocab=5\n\
         lithium\t1\t0\n\
         bikita\t1\t0\n\
         calama\t1\t1\n\
         uyuni\t0\t1\n\
         salta\t-1\t0\n",
    )
    .unwrap();
    std::fs::write(
        root.join("cities.csv"),
        "city,city_ascii,lat,lng,country,iso2,iso3,admin_name\n\
         Bikita,Bikita,-20.1,31.6,Zimbabwe,ZW,ZWE,Masvingo\n\
         Bikita,Bikita,-19.9,31.5,Zimbabwe,ZW,ZWE,Second\n\
         Calama,Calama,-22.5,-68.9,Chile,CL,CHL,Antofagasta\n\
         Uyuni,Uyuni,-20.5,-66.8,Bolivia,BO,BOL,Potosí\n\
         Salta,Salta,-24.8,-65.4,Argentina,AR,ARG,Salta\n",
    )
    .unwrap();
    std::fs::write(
        root.join("mines.csv"),
        "name,lat,lng,commodity\nm,0,0,lithium\n",
    )
    .unwrap();
    std::fs::write(root.join("english.txt"), "lithium\n").unwrap();
    // output_dir doubles as the location of the pre-made embeddings
    let config = root.join("config.txt");
    std::fs::write(
        &config,
        format!(
            "[paths]\n\
             corpus = {root}\n\
             cities = {root}/cities.csv\n\
             mines = {root}/mines.csv\n\
             english_words = {root}/english.txt\n\
             output_dir = {root}\n\
             [run]\n\
             keyword = lithium\n\
             k = 10\n",
            root = root.display()
        ),
    )
    .unwrap();
    let out = run(&[
        "rank",
        "--config",
        config.to_str().unwrap(),
        "--kind",
        "none",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let golden = "rank,word,city,admin_name,country,lat,lng,score\n\
                  1,bikita,Bikita,Masvingo,Zimbabwe,-20.1,31.6,1.000000\n\
                  2,bikita,Bikita,Second,Zimbabwe,-19.9,31.5,1.000000\n\
                  3,calama,Calama,Antofagasta,Chile,-22.5,-68.9,0.707107\n\
                  4,uyuni,Uyuni,Potosí,Bolivia,-20.5,-66.8,0.000000\n\
                  5,salta,Salta,Salta,Argentina,-24.8,-65.4,-1.000000\n";
    let written = std::fs::read_to_string(root.join("ranking_none.csv")).unwrap();
    assert_eq!(written, golden);
}
