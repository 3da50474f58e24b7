//! GloVe embedding training: sparse distance-weighted co-occurrence
//! counts fitted by AdaGrad on the weighted least-squares objective
//! f(x_ij) (w_i . w~_j + b_i + b~_j - ln x_ij)^2.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::corpus::TokenStream;
use crate::error::{Error, Result};
use crate::ioutil;
use crate::rng;

/// Bijective word/index mapping with per-word corpus frequencies.
/// Indices are dense and ordered by descending frequency, ties broken
/// lexicographically.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn from_ranked(ranked: Vec<(String, u64)>) -> Self {
        let index = ranked
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let (words, counts) = ranked.into_iter().unzip();
        Self {
            words,
            counts,
            index,
        }
    }

    /// Rebuilds a vocabulary in a given order with unknown frequencies
    /// (used when loading embeddings from disk).
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::DimensionMismatch(format!("duplicate word `{w}`")));
            }
        }
        let counts = vec![0; words.len()];
        Ok(Self {
            words,
            counts,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }
}

/// Words with corpus frequency >= `min_count`, most frequent first.
pub fn build_vocabulary(streams: &[TokenStream], min_count: u64) -> Result<Vocabulary> {
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for s in streams {
        for t in &s.tokens {
            *freq.entry(t).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, u64)> = freq
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(w, c)| (w.to_string(), c))
        .collect();
    if ranked.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocabulary::from_ranked(ranked))
}

/// Sparse symmetric word-word co-occurrence counts with 1/distance
/// weighting. Both (i, j) and (j, i) are stored.
#[derive(Debug, Clone, Default)]
pub struct CoocMatrix {
    entries: BTreeMap<(u32, u32), f64>,
}

impl CoocMatrix {
    pub fn get(&self, i: u32, j: u32) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum over all stored entries.
    pub fn total_mass(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &x)| (i, j, x))
    }
}

/// Counts in-window pairs per document: a pair at distance d adds 1/d to
/// both x_ij and x_ji. Out-of-vocabulary tokens still occupy positions.
pub fn accumulate_cooc(streams: &[TokenStream], vocab: &Vocabulary, window: usize) -> CoocMatrix {
    let mut m = CoocMatrix::default();
    for s in streams {
        let ids: Vec<Option<usize>> = s.tokens.iter().map(|t| vocab.index_of(t)).collect();
        for (p, center) in ids.iter().enumerate() {
            let Some(i) = *center else { continue };
            for d in 1..=window {
                let Some(other) = ids.get(p + d) else { break };
                let Some(j) = *other else { continue };
                let w = 1.0 / d as f64;
                *m.entries.entry((i as u32, j as u32)).or_insert(0.0) += w;
                *m.entries.entry((j as u32, i as u32)).or_insert(0.0) += w;
            }
        }
    }
    m
}

/// The GloVe weighting function: (x / x_max)^alpha below the cap, 1 above.
pub fn glove_weight(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x < x_max {
        (x / x_max).powf(alpha)
    } else {
        1.0
    }
}

/// Training hyperparameters. Defaults follow the published GloVe setup.
#[derive(Debug, Clone)]
pub struct GloveConfig {
    pub dim: usize,
    pub window: usize,
    pub x_max: f64,
    pub alpha: f64,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub min_count: u64,
}

impl Default for GloveConfig {
    fn default() -> Self {
        Self {
            dim: 200,
            window: 10,
            x_max: 100.0,
            alpha: 0.75,
            lr: 0.05,
            epochs: 25,
            seed: 42,
            min_count: 5,
        }
    }
}

impl GloveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Config("glove dim must be >= 2".into()));
        }
        if self.window < 1 {
            return Err(Error::Config("glove window must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config("glove alpha must be in (0, 1]".into()));
        }
        if self.x_max <= 0.0 {
            return Err(Error::Config("glove x_max must be > 0".into()));
        }
        if self.lr <= 0.0 {
            return Err(Error::Config("glove lr must be > 0".into()));
        }
        Ok(())
    }
}

/// Trained embeddings: one final vector (main + context sum) per word.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    vocab: Vocabulary,
    dim: usize,
    vectors: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(vocab: Vocabulary, dim: usize, vectors: Vec<f64>) -> Result<Self> {
        if vectors.len() != vocab.len() * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} words x {dim} dims needs {} values, got {}",
                vocab.len(),
                vocab.len() * dim,
                vectors.len()
            )));
        }
        if !vectors.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteValue("embedding table".into()));
        }
        Ok(Self {
            vocab,
            dim,
            vectors,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vocab.index_of(word).map(|i| self.vector_at(i))
    }

    pub fn vector_at(&self, index: usize) -> &[f64] {
        &self.vectors[index * self.dim..(index + 1) * self.dim]
    }
}

/// Output of [`train_glove`]: the table plus the per-epoch mean loss.
#[derive(Debug, Clone)]
pub struct GloveTraining {
    pub table: EmbeddingTable,
    pub loss_trace: Vec<f64>,
}

/// AdaGrad training over shuffled nonzero entries, exactly reproducible
/// for a given (corpus, config, seed) triple. Main and context parameters
/// start uniform in [-0.5/dim, 0.5/dim); accumulators start at 1.
pub fn train_glove(
    cooc: &CoocMatrix,
    vocab: Vocabulary,
    config: &GloveConfig,
) -> Result<GloveTraining> {
    config.validate()?;
    if cooc.is_empty() {
        return Err(Error::Config("co-occurrence matrix is empty".into()));
    }
    let v = vocab.len();
    let dim = config.dim;
    let mut r = rng::seeded(config.seed);
    let half = 0.5 / dim as f64;
    let mut main = init_uniform(&mut r, v * dim, half);
    let mut ctx = init_uniform(&mut r, v * dim, half);
    let mut b_main = init_uniform(&mut r, v, half);
    let mut b_ctx = init_uniform(&mut r, v, half);
    let mut g_main = vec![1.0f64; v * dim];
    let mut g_ctx = vec![1.0f64; v * dim];
    let mut gb_main = vec![1.0f64; v];
    let mut gb_ctx = vec![1.0f64; v];

    let mut entries: Vec<(u32, u32, f64)> = cooc.iter().collect();
    let nnz = entries.len() as f64;
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        rng::shuffle(&mut r, &mut entries);
        let mut epoch_loss = 0.0;
        for &(i, j, x) in &entries {
            let (i, j) = (i as usize, j as usize);
            let wi = &mut main[i * dim..(i + 1) * dim];
            let wj = &mut ctx[j * dim..(j + 1) * dim];
            let dot: f64 = wi.iter().zip(wj.iter()).map(|(a, b)| a * b).sum();
            let diff = dot + b_main[i] + b_ctx[j] - x.ln();
            if !diff.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            let f = glove_weight(x, config.x_max, config.alpha);
            let fdiff = f * diff;
            epoch_loss += fdiff * diff;

            let step = config.lr * fdiff;
            let gi = &mut g_main[i * dim..(i + 1) * dim];
            let gj = &mut g_ctx[j * dim..(j + 1) * dim];
            for k in 0..dim {
                let t1 = step * wj[k];
                let t2 = step * wi[k];
                wi[k] -= t1 / gi[k].sqrt();
                wj[k] -= t2 / gj[k].sqrt();
                gi[k] += t1 * t1;
                gj[k] += t2 * t2;
            }
            b_main[i] -= step / gb_main[i].sqrt();
            b_ctx[j] -= step / gb_ctx[j].sqrt();
            gb_main[i] += step * step;
            gb_ctx[j] += step * step;
        }
        let mean = epoch_loss / nnz;
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        trace.push(mean);
    }

    let vectors: Vec<f64> = main.iter().zip(&ctx).map(|(a, b)| a + b).collect();
    Ok(GloveTraining {
        table: EmbeddingTable::new(vocab, dim, vectors)?,
        loss_trace: trace,
    })
}

fn init_uniform(r: &mut rand_chacha::ChaCha8Rng, n: usize, half: f64) -> Vec<f64> {
    (0..n).map(|_| rng::uniform_symmetric(r, half)).collect()
}

/// Writes `#glove dim=D vocab=V` then one `word<TAB>v1<TAB>...` row per
/// word with 17 significant digits, atomically.
pub fn save_embeddings(table: &EmbeddingTable, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "#glove dim={} vocab={}\n",
        table.dim(),
        table.len()
    ));
    for i in 0..table.len() {
        out.push_str(table.vocab.word(i));
        for v in table.vector_at(i) {
            out.push_str(&format!("\t{v:.16e}"));
        }
        out.push('\n');
    }
    ioutil::write_atomic(path, out.as_bytes())
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = ioutil::read_to_string(path)?;
    let display = path.display().to_string();
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: display.clone(),
        line,
        msg,
    };

    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(Error::EmptyVocabulary);
    };
    let (dim, vocab_size) = parse_header(header)
        .ok_or_else(|| parse_err(1, "expected header `#glove dim=D vocab=V`".to_string()))?;

    let mut words = Vec::new();
    let mut vectors = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = idx as u64 + 1;
        let mut fields = line.split('\t');
        let word = fields.next().unwrap_or("");
        if word.is_empty() {
            return Err(parse_err(line_no, "missing word".into()));
        }
        let row: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("bad float `{f}`")))
            })
            .collect::<Result<_>>()?;
        if row.len() != dim {
            return Err(parse_err(
                line_no,
                format!("expected {dim} values, got {}", row.len()),
            ));
        }
        words.push(word.to_string());
        vectors.extend_from_slice(&row);
    }
    if words.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    if words.len() != vocab_size {
        return Err(Error::DimensionMismatch(format!(
            "header says vocab={vocab_size}, file has {} rows",
            words.len()
        )));
    }
    EmbeddingTable::new(Vocabulary::from_words(words)?, dim, vectors)
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix("#glove ")?;
    let mut dim = None;
    let mut vocab = None;
    for part in rest.split_whitespace() {
        if let Some(v) = part.strip_prefix("dim=") {
            dim = v.parse().ok();
        } else if let Some(v) = part.strip_prefix("vocab=") {
            vocab = v.parse().ok();
        }
    }
    Some((dim?, vocab?))
}
