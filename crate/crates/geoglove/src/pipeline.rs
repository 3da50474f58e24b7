//! Pipeline orchestration: a flat `key = value` config file with section
//! headers drives the corpus -> embeddings -> filter -> reduce -> rank ->
//! benchmark chain. Every stage writes its artifacts atomically into the
//! output directory and can be skipped when they are newer than the
//! stage's inputs.
//!
//! One global seed drives everything: each stage mixes an FNV-1a hash of
//! its name ("train", "reduce.<kind>") into the seed, so runs are fully
//! reproducible while stages stay decorrelated.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use crate::benchmark::{self, BenchmarkReport};
use crate::corpus::{self, StopWordList};
use crate::error::{Error, Result};
use crate::gazetteer::{self, FilteredVocabulary};
use crate::glove::{self, EmbeddingTable, GloveConfig};
use crate::ioutil;
use crate::ranking;
use crate::reducers::{self, ReducerKind, ReducerModel, ReducerSpec};
use crate::rng;

/// Everything a pipeline run needs. Paths the loaded subcommands do not
/// use may stay unset.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub english_words: Option<PathBuf>,
    pub cities: Option<PathBuf>,
    pub mines: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub keyword: String,
    pub k: usize,
    pub seed: u64,
    pub kinds: Vec<ReducerKind>,
    pub glove: GloveConfig,
    pub reducer: ReducerSpec,
    /// Where this config was loaded from, when it came from a file.
    pub config_path: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            stopwords: None,
            english_words: None,
            cities: None,
            mines: None,
            output_dir: PathBuf::from("out"),
            keyword: "lithium".into(),
            k: 10,
            seed: 42,
            kinds: ReducerKind::ALL.to_vec(),
            glove: GloveConfig::default(),
            reducer: ReducerSpec::default(),
            config_path: None,
        }
    }
}

/// Parses the config file format: `[section]` headers, `key = value`
/// lines, `#` comments, blank lines ignored.
pub fn parse_config(path: &Path) -> Result<PipelineConfig> {
    let text = ioutil::read_to_string(path)?;
    let mut cfg = PipelineConfig {
        config_path: Some(path.to_path_buf()),
        ..PipelineConfig::default()
    };
    let display = path.display().to_string();
    let err = |line: u64, msg: String| Error::Parse {
        path: display.clone(),
        line,
        msg,
    };

    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            if !["paths", "run", "glove", "reducer"].contains(&section.as_str()) {
                return Err(err(line_no, format!("unknown section `[{section}]`")));
            }
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(line_no, format!("expected `key = value`, got `{line}`")))?;
        if value.is_empty() {
            return Err(err(line_no, format!("empty value for `{key}`")));
        }
        let bad = |what: &str| err(line_no, format!("bad {what} value `{value}` for `{key}`"));
        match (section.as_str(), key) {
            ("paths", "corpus") => cfg.corpus = Some(PathBuf::from(value)),
            ("paths", "stopwords") => cfg.stopwords = Some(PathBuf::from(value)),
            ("paths", "english_words") => cfg.english_words = Some(PathBuf::from(value)),
            ("paths", "cities") => cfg.cities = Some(PathBuf::from(value)),
            ("paths", "mines") => cfg.mines = Some(PathBuf::from(value)),
            ("paths", "output_dir") => cfg.output_dir = PathBuf::from(value),
            ("run", "keyword") => cfg.keyword = value.to_string(),
            ("run", "k") => cfg.k = value.parse().map_err(|_| bad("integer"))?,
            ("run", "seed") => cfg.seed = value.parse().map_err(|_| bad("integer"))?,
            ("run", "kinds") => {
                cfg.kinds = value
                    .split(',')
                    .map(|k| ReducerKind::parse(k.trim()))
                    .collect::<Result<_>>()?;
            }
            ("glove", "dim") => cfg.glove.dim = value.parse().map_err(|_| bad("integer"))?,
            ("glove", "window") => cfg.glove.window = value.parse().map_err(|_| bad("integer"))?,
            ("glove", "x_max") => cfg.glove.x_max = value.parse().map_err(|_| bad("float"))?,
            ("glove", "alpha") => cfg.glove.alpha = value.parse().map_err(|_| bad("float"))?,
            ("glove", "lr") => cfg.glove.lr = value.parse().map_err(|_| bad("float"))?,
            ("glove", "epochs") => cfg.glove.epochs = value.parse().map_err(|_| bad("integer"))?,
            ("glove", "min_count") => {
                cfg.glove.min_count = value.parse().map_err(|_| bad("integer"))?
            }
            ("reducer", "latent_dim") => {
                cfg.reducer.latent_dim = value.parse().map_err(|_| bad("integer"))?
            }
            ("reducer", "hidden_dims") => {
                cfg.reducer.hidden_dims = value
                    .split(',')
                    .map(|h| h.trim().parse().map_err(|_| bad("integer list")))
                    .collect::<std::result::Result<_, _>>()?;
            }
            ("reducer", "epochs") => {
                cfg.reducer.epochs = value.parse().map_err(|_| bad("integer"))?
            }
            ("reducer", "batch_size") => {
                cfg.reducer.batch_size = value.parse().map_err(|_| bad("integer"))?
            }
            ("reducer", "lr") => cfg.reducer.lr = value.parse().map_err(|_| bad("float"))?,
            ("reducer", "kl_weight") => {
                cfg.reducer.kl_weight = value.parse().map_err(|_| bad("float"))?
            }
            ("reducer", "lstm_steps") => {
                cfg.reducer.lstm_steps = value.parse().map_err(|_| bad("integer"))?
            }
            ("reducer", "lstm_features") => {
                cfg.reducer.lstm_features = value.parse().map_err(|_| bad("integer"))?
            }
            ("reducer", "lstm_hidden") => {
                cfg.reducer.lstm_hidden = value.parse().map_err(|_| bad("integer"))?
            }
            _ => {
                return Err(err(
                    line_no,
                    format!("unknown key `{key}` in section `[{section}]`"),
                ));
            }
        }
    }
    if cfg.k < 1 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    Ok(cfg)
}

impl PipelineConfig {
    fn require<'a>(&self, field: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        field.as_deref().ok_or_else(|| {
            Error::Config(format!(
                "missing `{key}` path: set `{key} = ...` under [paths] in the config file"
            ))
        })
    }

    pub fn embeddings_path(&self) -> PathBuf {
        self.output_dir.join("embeddings.txt")
    }

    pub fn loss_trace_path(&self) -> PathBuf {
        self.output_dir.join("loss_trace.csv")
    }

    pub fn model_path(&self, kind: ReducerKind) -> PathBuf {
        self.output_dir.join(format!("model_{kind}.txt"))
    }

    pub fn reducer_trace_path(&self, kind: ReducerKind) -> PathBuf {
        self.output_dir.join(format!("trace_{kind}.csv"))
    }

    pub fn ranking_path(&self, kind: ReducerKind) -> PathBuf {
        self.output_dir.join(format!("ranking_{kind}.csv"))
    }

    pub fn report_path(&self, kind: ReducerKind) -> PathBuf {
        self.output_dir.join(format!("report_{kind}.csv"))
    }

    pub fn geojson_path(&self, kind: ReducerKind) -> PathBuf {
        self.output_dir.join(format!("cities_{kind}.geojson"))
    }

    pub fn summary_path(&self) -> PathBuf {
        self.output_dir.join("summary.csv")
    }

    fn stop_words(&self) -> Result<StopWordList> {
        match &self.stopwords {
            Some(p) => StopWordList::load(p),
            None => Ok(StopWordList::default_english()),
        }
    }

    fn english_words(&self) -> Result<Vec<String>> {
        match &self.english_words {
            Some(p) => gazetteer::load_word_list(p),
            None => Ok(gazetteer::default_english_words()),
        }
    }

    fn ensure_output_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.output_dir)
            .map_err(|e| Error::io(self.output_dir.display().to_string(), e))
    }
}

/// What `cmd_train` produced.
#[derive(Debug)]
pub struct TrainOutcome {
    pub vocab_size: usize,
    pub cooc_entries: usize,
    pub final_loss: f64,
}

/// Runs corpus preprocessing and GloVe training, writing `embeddings.txt`
/// and `loss_trace.csv`.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<TrainOutcome> {
    let corpus_path = cfg.require(&cfg.corpus, "corpus")?;
    cfg.ensure_output_dir()?;
    let docs = corpus::load_corpus(corpus_path)?;
    let stops = cfg.stop_words()?;
    let streams = corpus::process_corpus(&docs, &stops)?;

    let mut glove_cfg = cfg.glove.clone();
    glove_cfg.seed = rng::derive_seed(cfg.seed, "train");
    let vocab = glove::build_vocabulary(&streams, glove_cfg.min_count)?;
    let cooc = glove::accumulate_cooc(&streams, &vocab, glove_cfg.window);
    let vocab_size = vocab.len();
    let trained = glove::train_glove(&cooc, vocab, &glove_cfg)?;

    glove::save_embeddings(&trained.table, &cfg.embeddings_path())?;
    let mut trace = String::from("epoch,mean_loss\n");
    for (i, loss) in trained.loss_trace.iter().enumerate() {
        let _ = writeln!(trace, "{},{loss:.16e}", i + 1);
    }
    ioutil::write_atomic(&cfg.loss_trace_path(), trace.as_bytes())?;

    let outcome = TrainOutcome {
        vocab_size,
        cooc_entries: cooc.nnz(),
        final_loss: trained.loss_trace.last().copied().unwrap_or(f64::NAN),
    };
    println!(
        "train: vocabulary size {} ({} co-occurrence entries), final mean loss {:.6}",
        outcome.vocab_size, outcome.cooc_entries, outcome.final_loss
    );
    Ok(outcome)
}

/// Fits every configured reducer kind. `none` needs no model file and is
/// logged as skipped; a failing kind is reported and the rest continue.
pub fn cmd_reduce(cfg: &PipelineConfig) -> Result<Vec<ReducerKind>> {
    let emb_path = cfg.embeddings_path();
    if !emb_path.exists() {
        return Err(Error::MissingArtifact(emb_path));
    }
    cfg.ensure_output_dir()?;
    let table = glove::load_embeddings(&emb_path)?;

    let mut written = Vec::new();
    let mut first_failure: Option<Error> = None;
    for &kind in &cfg.kinds {
        if kind == ReducerKind::None {
            println!("reduce: skipped none (identity transform needs no model file)");
            continue;
        }
        let spec = ReducerSpec {
            kind,
            seed: rng::derive_seed(cfg.seed, &format!("reduce.{kind}")),
            ..cfg.reducer.clone()
        };
        match reducers::fit(&table, &spec) {
            Ok(model) => {
                if model.is_degenerate() {
                    eprintln!(
                        "reduce: warning: {kind} covariance is rank-deficient; padded components"
                    );
                }
                reducers::save_model(&model, &cfg.model_path(kind))?;
                ioutil::write_atomic(
                    &cfg.reducer_trace_path(kind),
                    reducers::trace_csv(model.training_trace()).as_bytes(),
                )?;
                println!("reduce: wrote {}", cfg.model_path(kind).display());
                written.push(kind);
            }
            Err(e) => {
                eprintln!("reduce: {kind} failed: {e}");
                first_failure.get_or_insert(e);
            }
        }
    }
    match first_failure {
        Some(e) => Err(e),
        None => Ok(written),
    }
}

fn load_model_for(
    cfg: &PipelineConfig,
    table: &EmbeddingTable,
    kind: ReducerKind,
) -> Result<ReducerModel> {
    if kind == ReducerKind::None {
        return Ok(ReducerModel::identity(table.dim()));
    }
    let path = cfg.model_path(kind);
    if !path.exists() {
        return Err(Error::MissingArtifact(path));
    }
    reducers::load_model(&path, kind)
}

fn load_filter_inputs(cfg: &PipelineConfig) -> Result<(EmbeddingTable, FilteredVocabulary)> {
    let emb_path = cfg.embeddings_path();
    if !emb_path.exists() {
        return Err(Error::MissingArtifact(emb_path));
    }
    let table = glove::load_embeddings(&emb_path)?;
    let cities = gazetteer::load_cities(cfg.require(&cfg.cities, "cities")?)?;
    let english = cfg.english_words()?;
    let fvocab = gazetteer::filter_vocabulary(&table, &english, &cities);
    Ok((table, fvocab))
}

/// Adds nearest-word suggestions to an unknown-keyword error.
fn with_suggestions(e: Error, table: &EmbeddingTable) -> Error {
    match e {
        Error::UnknownKeyword { keyword, .. } => {
            let mut scored: Vec<(usize, &String)> = table
                .vocab()
                .words()
                .iter()
                .map(|w| (levenshtein(&keyword, w), w))
                .collect();
            scored.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
            let suggestions = scored.iter().take(5).map(|(_, w)| (*w).clone()).collect();
            Error::UnknownKeyword {
                keyword,
                suggestions,
            }
        }
        other => other,
    }
}

pub(crate) fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Ranks cities for one technique, writes `ranking_<kind>.csv` and prints
/// the Rank / City / Admin-name table.
pub fn cmd_rank(cfg: &PipelineConfig, kind: ReducerKind) -> Result<Vec<ranking::RankedCity>> {
    let (table, fvocab) = load_filter_inputs(cfg)?;
    let model = load_model_for(cfg, &table, kind)?;
    cfg.ensure_output_dir()?;

    let scores = ranking::score_all(&cfg.keyword, &table, &model, &fvocab)
        .map_err(|e| with_suggestions(e, &table))?;
    if scores.skipped_zero_norm > 0 {
        eprintln!(
            "rank: skipped {} zero-norm vectors in the {kind} space",
            scores.skipped_zero_norm
        );
    }
    let top = ranking::top_k_cities(&scores.scores, &fvocab, cfg.k);
    if top.short_list {
        eprintln!(
            "rank: only {} city rows available (asked for {})",
            top.rows.len(),
            cfg.k
        );
    }
    ioutil::write_atomic(
        &cfg.ranking_path(kind),
        ranking::ranking_csv(&top.rows).as_bytes(),
    )?;

    println!("technique: {}", kind.label());
    println!("Rank | City | Admin-name");
    for r in &top.rows {
        println!("{} | {} | {}", r.rank, r.word, r.city.admin_name);
    }
    Ok(top.rows)
}

/// Benchmarks every configured kind against the mine table, writing
/// per-kind reports, GeoJSON overlays and the two-column summary CSV.
pub fn cmd_benchmark(cfg: &PipelineConfig) -> Result<Vec<BenchmarkReport>> {
    let (table, fvocab) = load_filter_inputs(cfg)?;
    let mines = gazetteer::load_mines(cfg.require(&cfg.mines, "mines")?)?;
    cfg.ensure_output_dir()?;

    let mut reports = Vec::new();
    let mut summary_rows = Vec::new();
    for &kind in &cfg.kinds {
        let model = load_model_for(cfg, &table, kind)?;
        let report = benchmark::run_benchmark(&cfg.keyword, &table, &model, &fvocab, &mines, cfg.k)
            .map_err(|e| with_suggestions(e, &table))?;
        ioutil::write_atomic(
            &cfg.report_path(kind),
            benchmark::report_csv(&report).as_bytes(),
        )?;
        let geojson = benchmark::emit_geojson(&report, &mines);
        ioutil::write_atomic(
            &cfg.geojson_path(kind),
            format!("{:#}\n", geojson).as_bytes(),
        )?;
        println!("{}", benchmark::summary_line(kind, report.rmse_km));
        summary_rows.push((kind, report.rmse_km));
        reports.push(report);
    }
    ioutil::write_atomic(
        &cfg.summary_path(),
        benchmark::summary_csv(&summary_rows).as_bytes(),
    )?;
    Ok(reports)
}

fn newest_mtime(path: &Path) -> Option<SystemTime> {
    if path.is_dir() {
        let mut newest = None;
        for entry in fs::read_dir(path).ok()? {
            let p = entry.ok()?.path();
            let m = newest_mtime(&p)?;
            newest = Some(newest.map_or(m, |n: SystemTime| n.max(m)));
        }
        newest
    } else {
        fs::metadata(path).ok()?.modified().ok()
    }
}

/// True when every output exists and none is older than any input.
fn up_to_date(outputs: &[PathBuf], inputs: &[PathBuf]) -> bool {
    let mut oldest_output: Option<SystemTime> = None;
    for o in outputs {
        match newest_mtime(o) {
            Some(m) => oldest_output = Some(oldest_output.map_or(m, |cur: SystemTime| cur.min(m))),
            None => return false,
        }
    }
    let Some(oldest) = oldest_output else {
        return outputs.is_empty();
    };
    for i in inputs {
        if let Some(m) = newest_mtime(i)
            && m > oldest
        {
            return false;
        }
    }
    true
}

fn input_paths(cfg: &PipelineConfig) -> Vec<PathBuf> {
    let mut v = Vec::new();
    for p in [&cfg.corpus, &cfg.stopwords, &cfg.config_path]
        .into_iter()
        .flatten()
    {
        v.push(p.clone());
    }
    v
}

/// Runs the full pipeline with stage skipping: train, reduce, rank per
/// kind, benchmark. `force` re-runs everything regardless of mtimes.
pub fn cmd_all(cfg: &PipelineConfig, force: bool) -> Result<()> {
    cfg.ensure_output_dir()?;
    if let Some(src) = &cfg.config_path {
        let copy = cfg.output_dir.join("pipeline_config.txt");
        if fs::canonicalize(src).ok() != fs::canonicalize(&copy).ok() {
            let bytes = fs::read(src).map_err(|e| Error::io(src.display().to_string(), e))?;
            ioutil::write_atomic(&copy, &bytes)?;
        }
    }

    let train_outputs = vec![cfg.embeddings_path(), cfg.loss_trace_path()];
    if !force && up_to_date(&train_outputs, &input_paths(cfg)) {
        println!("train: skipped (up to date)");
    } else {
        cmd_train(cfg)?;
    }

    let model_outputs: Vec<PathBuf> = cfg
        .kinds
        .iter()
        .filter(|&&k| k != ReducerKind::None)
        .map(|&k| cfg.model_path(k))
        .collect();
    if !force && up_to_date(&model_outputs, &train_outputs) {
        println!("reduce: skipped (up to date)");
    } else {
        cmd_reduce(cfg)?;
    }

    let mut rank_inputs = model_outputs.clone();
    rank_inputs.push(cfg.embeddings_path());
    if let Some(c) = &cfg.cities {
        rank_inputs.push(c.clone());
    }
    for &kind in &cfg.kinds {
        let out = vec![cfg.ranking_path(kind)];
        if !force && up_to_date(&out, &rank_inputs) {
            println!("rank {kind}: skipped (up to date)");
        } else {
            cmd_rank(cfg, kind)?;
        }
    }

    let mut bench_outputs: Vec<PathBuf> = cfg
        .kinds
        .iter()
        .flat_map(|&k| [cfg.report_path(k), cfg.geojson_path(k)])
        .collect();
    bench_outputs.push(cfg.summary_path());
    let mut bench_inputs = rank_inputs;
    if let Some(m) = &cfg.mines {
        bench_inputs.push(m.clone());
    }
    if !force && up_to_date(&bench_outputs, &bench_inputs) {
        println!("benchmark: skipped (up to date)");
    } else {
        cmd_benchmark(cfg)?;
    }
    Ok(())
}
