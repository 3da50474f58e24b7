//! Dimensionality reduction behind a single interface: fit on an
//! embedding table, then transform any batch of vectors to the reduced
//! space. Five techniques: `none`, `pca`, `ae`, `vae`, `vae-lstm`.

mod nets;
mod pca;

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::glove::EmbeddingTable;
use crate::ioutil;
use crate::nnkit::Tensor;

use nets::{AeArch, NetArch, NetParams, VaeArch, VaeLstmArch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReducerKind {
    None,
    Pca,
    Ae,
    Vae,
    VaeLstm,
}

impl ReducerKind {
    pub const ALL: [ReducerKind; 5] = [
        ReducerKind::None,
        ReducerKind::Pca,
        ReducerKind::Ae,
        ReducerKind::Vae,
        ReducerKind::VaeLstm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReducerKind::None => "none",
            ReducerKind::Pca => "pca",
            ReducerKind::Ae => "ae",
            ReducerKind::Vae => "vae",
            ReducerKind::VaeLstm => "vae-lstm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ReducerKind::None),
            "pca" => Ok(ReducerKind::Pca),
            "ae" => Ok(ReducerKind::Ae),
            "vae" => Ok(ReducerKind::Vae),
            "vae-lstm" => Ok(ReducerKind::VaeLstm),
            other => Err(Error::Config(format!(
                "unknown reducer kind `{other}` (expected none, pca, ae, vae or vae-lstm)"
            ))),
        }
    }

    /// Human-readable technique label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            ReducerKind::None => "No Dimensionality Reduction",
            ReducerKind::Pca => "PCA",
            ReducerKind::Ae => "Autoencoder",
            ReducerKind::Vae => "Variational Autoencoder(VAE)",
            ReducerKind::VaeLstm => "VAE with LSTM",
        }
    }
}

impl fmt::Display for ReducerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Hyperparameters shared by the reducer family.
#[derive(Debug, Clone)]
pub struct ReducerSpec {
    pub kind: ReducerKind,
    pub latent_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub kl_weight: f64,
    pub lstm_steps: usize,
    pub lstm_features: usize,
    pub lstm_hidden: usize,
}

impl Default for ReducerSpec {
    fn default() -> Self {
        Self {
            kind: ReducerKind::None,
            latent_dim: 2,
            hidden_dims: vec![128, 64, 32, 16, 8],
            epochs: 200,
            batch_size: 256,
            lr: 1e-3,
            seed: 42,
            kl_weight: 1.0,
            lstm_steps: 25,
            lstm_features: 8,
            lstm_hidden: 64,
        }
    }
}

impl ReducerSpec {
    pub fn with_kind(kind: ReducerKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    fn validate(&self, input_dim: usize) -> Result<()> {
        if self.latent_dim < 1 {
            return Err(Error::Config("latent_dim must be >= 1".into()));
        }
        match self.kind {
            ReducerKind::Ae | ReducerKind::Vae => {
                if self.hidden_dims.is_empty() {
                    return Err(Error::Config("hidden_dims must not be empty".into()));
                }
                if !self.hidden_dims.windows(2).all(|w| w[0] > w[1]) {
                    return Err(Error::Config(
                        "hidden_dims must be strictly decreasing".into(),
                    ));
                }
            }
            ReducerKind::VaeLstm => {
                if self.lstm_steps * self.lstm_features != input_dim {
                    return Err(Error::Config(format!(
                        "lstm chunking {} x {} does not cover the input dimension {input_dim}",
                        self.lstm_steps, self.lstm_features
                    )));
                }
                if self.lstm_hidden < 1 {
                    return Err(Error::Config("lstm_hidden must be >= 1".into()));
                }
            }
            ReducerKind::Pca => {
                if input_dim < self.latent_dim {
                    return Err(Error::Config(format!(
                        "pca needs input dim >= latent_dim, got {input_dim} < {}",
                        self.latent_dim
                    )));
                }
            }
            ReducerKind::None => {}
        }
        Ok(())
    }
}

/// One per-epoch loss record (epoch 0 is the pre-training evaluation).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    pub loss: f64,
    pub recon: f64,
    pub kl: f64,
}

#[derive(Debug, Clone)]
enum ModelParams {
    Identity,
    Pca {
        mean: Vec<f64>,
        /// latent x dim, rows are components.
        components: Vec<f64>,
    },
    Net(NetParams),
}

/// A fitted reducer: the spec it was fitted with, its parameters, the
/// training trace, and (for PCA) a rank-deficiency flag.
#[derive(Debug, Clone)]
pub struct ReducerModel {
    spec: ReducerSpec,
    input_dim: usize,
    params: ModelParams,
    training_trace: Vec<TraceRow>,
    degenerate: bool,
}

impl ReducerModel {
    /// The `none` technique: transform is the identity.
    pub fn identity(input_dim: usize) -> Self {
        Self {
            spec: ReducerSpec::with_kind(ReducerKind::None),
            input_dim,
            params: ModelParams::Identity,
            training_trace: Vec::new(),
            degenerate: false,
        }
    }

    pub fn kind(&self) -> ReducerKind {
        self.spec.kind
    }

    pub fn spec(&self) -> &ReducerSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Output dimension of [`ReducerModel::transform`].
    pub fn output_dim(&self) -> usize {
        match self.spec.kind {
            ReducerKind::None => self.input_dim,
            _ => self.spec.latent_dim,
        }
    }

    pub fn training_trace(&self) -> &[TraceRow] {
        &self.training_trace
    }

    /// True when PCA had to pad rank-deficient covariance with an
    /// arbitrary orthonormal complement.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    fn arch(&self) -> Box<dyn NetArch> {
        match self.spec.kind {
            ReducerKind::Ae => Box::new(AeArch::new(
                self.input_dim,
                &self.spec.hidden_dims,
                self.spec.latent_dim,
            )),
            ReducerKind::Vae => Box::new(VaeArch::new(
                self.input_dim,
                &self.spec.hidden_dims,
                self.spec.latent_dim,
            )),
            ReducerKind::VaeLstm => Box::new(VaeLstmArch {
                steps: self.spec.lstm_steps,
                features: self.spec.lstm_features,
                hidden: self.spec.lstm_hidden,
                latent: self.spec.latent_dim,
            }),
            _ => unreachable!("arch() is only called for network kinds"),
        }
    }

    /// Maps a batch of vectors to the reduced space. Deterministic for
    /// every kind (VAE variants return the latent mean; no sampling).
    pub fn transform(&self, vectors: &Tensor) -> Result<Tensor> {
        if vectors.cols() != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "transform expects {} columns, got {}",
                self.input_dim,
                vectors.cols()
            )));
        }
        match &self.params {
            ModelParams::Identity => Ok(vectors.clone()),
            ModelParams::Pca { mean, components } => {
                let (n, d) = (vectors.rows(), vectors.cols());
                let latent = self.spec.latent_dim;
                let mut centered = Vec::with_capacity(n * d);
                for r in 0..n {
                    for (v, m) in vectors.row_slice(r).iter().zip(mean) {
                        centered.push(v - m);
                    }
                }
                let out = crate::nnkit::Tensor::matrix(
                    n,
                    latent,
                    matmul_rows(&centered, n, components, latent, d),
                )?;
                Ok(out)
            }
            ModelParams::Net(p) => self.arch().encode(p, vectors),
        }
    }
}

fn matmul_rows(a: &[f64], ar: usize, b: &[f64], br: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; ar * br];
    for i in 0..ar {
        for j in 0..br {
            let mut acc = 0.0;
            for t in 0..k {
                acc += a[i * k + t] * b[j * k + t];
            }
            out[i * br + j] = acc;
        }
    }
    out
}

fn table_tensor(table: &EmbeddingTable) -> Tensor {
    let mut data = Vec::with_capacity(table.len() * table.dim());
    for i in 0..table.len() {
        data.extend_from_slice(table.vector_at(i));
    }
    Tensor::from_raw(vec![table.len(), table.dim()], data)
}

/// Linear projection onto the top principal components of the (centered)
/// embedding vectors. Rank-deficient covariance is padded and flagged
/// rather than failing the pipeline.
pub fn fit_pca(table: &EmbeddingTable, spec: &ReducerSpec) -> Result<ReducerModel> {
    let spec = ReducerSpec {
        kind: ReducerKind::Pca,
        ..spec.clone()
    };
    spec.validate(table.dim())?;
    if table.len() < spec.latent_dim {
        return Err(Error::Config(format!(
            "pca needs at least {} vectors, got {}",
            spec.latent_dim,
            table.len()
        )));
    }
    let data = table_tensor(table);
    let fit = pca::fit_pca_params(&data, spec.latent_dim)?;
    Ok(ReducerModel {
        input_dim: table.dim(),
        params: ModelParams::Pca {
            mean: fit.mean,
            components: fit.components,
        },
        training_trace: Vec::new(),
        degenerate: fit.degenerate,
        spec,
    })
}

fn fit_net(table: &EmbeddingTable, spec: ReducerSpec) -> Result<ReducerModel> {
    spec.validate(table.dim())?;
    let model_stub = ReducerModel {
        spec: spec.clone(),
        input_dim: table.dim(),
        params: ModelParams::Identity,
        training_trace: Vec::new(),
        degenerate: false,
    };
    let arch = model_stub.arch();
    let data = table_tensor(table);
    let (params, trace) = nets::train_net(arch.as_ref(), &data, &spec)?;
    Ok(ReducerModel {
        params: ModelParams::Net(params),
        training_trace: trace,
        ..model_stub
    })
}

/// Autoencoder reducer trained by Adam on reconstruction MSE.
pub fn fit_autoencoder(table: &EmbeddingTable, spec: &ReducerSpec) -> Result<ReducerModel> {
    fit_net(
        table,
        ReducerSpec {
            kind: ReducerKind::Ae,
            ..spec.clone()
        },
    )
}

/// VAE reducer: MSE plus kl_weight x Gaussian KL; transform returns mu.
pub fn fit_vae(table: &EmbeddingTable, spec: &ReducerSpec) -> Result<ReducerModel> {
    fit_net(
        table,
        ReducerSpec {
            kind: ReducerKind::Vae,
            ..spec.clone()
        },
    )
}

/// VAE-LSTM reducer over the chunked input sequence.
pub fn fit_vae_lstm(table: &EmbeddingTable, spec: &ReducerSpec) -> Result<ReducerModel> {
    fit_net(
        table,
        ReducerSpec {
            kind: ReducerKind::VaeLstm,
            ..spec.clone()
        },
    )
}

/// Fits whichever kind the spec names (`none` needs no fitting).
pub fn fit(table: &EmbeddingTable, spec: &ReducerSpec) -> Result<ReducerModel> {
    match spec.kind {
        ReducerKind::None => Ok(ReducerModel {
            spec: spec.clone(),
            input_dim: table.dim(),
            params: ModelParams::Identity,
            training_trace: Vec::new(),
            degenerate: false,
        }),
        ReducerKind::Pca => fit_pca(table, spec),
        ReducerKind::Ae => fit_autoencoder(table, spec),
        ReducerKind::Vae => fit_vae(table, spec),
        ReducerKind::VaeLstm => fit_vae_lstm(table, spec),
    }
}

/// Builds the spec's network architecture at a seeded initialization
/// point and compares the analytic gradient of its full training loss
/// (reconstruction plus weighted KL where applicable) against central
/// finite differences at a random input batch. Returns the maximum
/// relative error over every parameter, input and noise component.
pub fn gradient_check(spec: &ReducerSpec, input_dim: usize, batch: usize) -> Result<f64> {
    if matches!(spec.kind, ReducerKind::None | ReducerKind::Pca) {
        return Err(Error::Config(
            "gradient_check applies to the network reducers".into(),
        ));
    }
    spec.validate(input_dim)?;
    let stub = ReducerModel {
        spec: spec.clone(),
        input_dim,
        params: ModelParams::Identity,
        training_trace: Vec::new(),
        degenerate: false,
    };
    Ok(nets::gradient_check_arch(
        stub.arch().as_ref(),
        input_dim,
        batch,
        spec.seed,
        spec.kl_weight,
    ))
}

const FLOAT_FMT_HELP: &str = "expected float";

/// Serializes spec + parameters as a text file:
/// a `#reducer` header, a `#spec` line, one `#param name rows cols` block
/// per tensor and a trailing `#end`.
pub fn save_model(model: &ReducerModel, path: &Path) -> Result<()> {
    let s = &model.spec;
    let mut out = String::new();
    out.push_str(&format!(
        "#reducer kind={} dim={} latent={} seed={}\n",
        s.kind, model.input_dim, s.latent_dim, s.seed
    ));
    let hidden: Vec<String> = s.hidden_dims.iter().map(|d| d.to_string()).collect();
    out.push_str(&format!(
        "#spec hidden={} epochs={} batch={} lr={} kl_weight={} lstm_steps={} lstm_features={} lstm_hidden={} degenerate={}\n",
        hidden.join(","),
        s.epochs,
        s.batch_size,
        s.lr,
        s.kl_weight,
        s.lstm_steps,
        s.lstm_features,
        s.lstm_hidden,
        model.degenerate
    ));
    let mut write_block = |name: &str, rows: usize, cols: usize, data: &[f64]| {
        out.push_str(&format!("#param {name} {rows} {cols}\n"));
        for r in 0..rows {
            let row = &data[r * cols..(r + 1) * cols];
            let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&fields.join("\t"));
            out.push('\n');
        }
    };
    match &model.params {
        ModelParams::Identity => {}
        ModelParams::Pca { mean, components } => {
            write_block("mean", 1, mean.len(), mean);
            write_block("components", model.spec.latent_dim, mean.len(), components);
        }
        ModelParams::Net(p) => {
            for (name, t) in p.entries() {
                write_block(name, t.rows(), t.cols(), t.data());
            }
        }
    }
    out.push_str("#end\n");
    ioutil::write_atomic(path, out.as_bytes())
}

/// Loads a model file, requiring its kind to match `expected`. The
/// training trace is not stored in model files, so it comes back empty.
pub fn load_model(path: &Path, expected: ReducerKind) -> Result<ReducerModel> {
    let text = ioutil::read_to_string(path)?;
    let display = path.display().to_string();
    let err = |line: u64, msg: String| Error::Parse {
        path: display.clone(),
        line,
        msg,
    };

    let mut lines = text.lines().enumerate().peekable();
    let Some((_, header)) = lines.next() else {
        return Err(err(1, "empty model file".into()));
    };
    let header_kv = parse_kv(header, "#reducer ").ok_or_else(|| {
        err(
            1,
            "expected `#reducer kind=... dim=... latent=... seed=...`".into(),
        )
    })?;
    let kind = ReducerKind::parse(
        get_kv(&header_kv, "kind").ok_or_else(|| err(1, "missing kind".into()))?,
    )?;
    if kind != expected {
        return Err(Error::KindMismatch {
            expected: expected.as_str().into(),
            found: kind.as_str().into(),
        });
    }
    let input_dim: usize = parse_field(&header_kv, "dim").map_err(|m| err(1, m))?;
    let latent_dim: usize = parse_field(&header_kv, "latent").map_err(|m| err(1, m))?;
    let seed: u64 = parse_field(&header_kv, "seed").map_err(|m| err(1, m))?;

    let Some((_, spec_line)) = lines.next() else {
        return Err(err(2, "missing #spec line".into()));
    };
    let spec_kv =
        parse_kv(spec_line, "#spec ").ok_or_else(|| err(2, "expected `#spec ...`".into()))?;
    let hidden_raw = get_kv(&spec_kv, "hidden").unwrap_or("");
    let hidden_dims: Vec<usize> = if hidden_raw.is_empty() {
        Vec::new()
    } else {
        hidden_raw
            .split(',')
            .map(|h| {
                h.parse()
                    .map_err(|_| err(2, format!("bad hidden dim `{h}`")))
            })
            .collect::<Result<_>>()?
    };
    let spec = ReducerSpec {
        kind,
        latent_dim,
        hidden_dims,
        epochs: parse_field(&spec_kv, "epochs").map_err(|m| err(2, m))?,
        batch_size: parse_field(&spec_kv, "batch").map_err(|m| err(2, m))?,
        lr: parse_field(&spec_kv, "lr").map_err(|m| err(2, m))?,
        seed,
        kl_weight: parse_field(&spec_kv, "kl_weight").map_err(|m| err(2, m))?,
        lstm_steps: parse_field(&spec_kv, "lstm_steps").map_err(|m| err(2, m))?,
        lstm_features: parse_field(&spec_kv, "lstm_features").map_err(|m| err(2, m))?,
        lstm_hidden: parse_field(&spec_kv, "lstm_hidden").map_err(|m| err(2, m))?,
    };
    let degenerate = get_kv(&spec_kv, "degenerate") == Some("true");

    // parameter blocks
    let mut blocks: Vec<(String, usize, usize, Vec<f64>)> = Vec::new();
    let mut saw_end = false;
    while let Some((idx, line)) = lines.next() {
        let line_no = idx as u64 + 1;
        if line == "#end" {
            saw_end = true;
            break;
        }
        let rest = line.strip_prefix("#param ").ok_or_else(|| {
            err(
                line_no,
                format!("expected `#param` or `#end`, got `{line}`"),
            )
        })?;
        let mut parts = rest.split_whitespace();
        let name = parts
            .next()
            .ok_or_else(|| err(line_no, "missing parameter name".into()))?
            .to_string();
        let rows: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| err(line_no, "missing row count".into()))?;
        let cols: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| err(line_no, "missing column count".into()))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let Some((ridx, row_line)) = lines.next() else {
                return Err(err(line_no, format!("block `{name}` is truncated")));
            };
            let row_no = ridx as u64 + 1;
            for field in row_line.split('\t') {
                data.push(
                    field
                        .parse::<f64>()
                        .map_err(|_| err(row_no, format!("{FLOAT_FMT_HELP}, got `{field}`")))?,
                );
            }
            if data.len() % cols != 0 {
                return Err(err(row_no, format!("row width is not {cols}")));
            }
        }
        if data.len() != rows * cols {
            return Err(err(line_no, format!("block `{name}` has wrong size")));
        }
        blocks.push((name, rows, cols, data));
    }
    if !saw_end {
        return Err(err(
            text.lines().count() as u64,
            "missing #end (truncated file)".into(),
        ));
    }

    let params = match kind {
        ReducerKind::None => {
            if !blocks.is_empty() {
                return Err(err(3, "kind none carries no parameters".into()));
            }
            ModelParams::Identity
        }
        ReducerKind::Pca => {
            let mut mean = None;
            let mut components = None;
            for (name, _r, c, data) in blocks {
                if c != input_dim {
                    return Err(err(
                        0,
                        format!("pca block `{name}` width {c} != dim {input_dim}"),
                    ));
                }
                match name.as_str() {
                    "mean" => mean = Some(data),
                    "components" => components = Some(data),
                    other => return Err(err(0, format!("unexpected pca block `{other}`"))),
                }
            }
            ModelParams::Pca {
                mean: mean.ok_or_else(|| err(0, "missing `mean` block".into()))?,
                components: components
                    .ok_or_else(|| err(0, "missing `components` block".into()))?,
            }
        }
        _ => {
            let stub = ReducerModel {
                spec: spec.clone(),
                input_dim,
                params: ModelParams::Identity,
                training_trace: Vec::new(),
                degenerate: false,
            };
            let expected_names = stub.arch().param_names();
            let got: Vec<&String> = blocks.iter().map(|(n, ..)| n).collect();
            if got.len() != expected_names.len()
                || !expected_names.iter().zip(&got).all(|(a, b)| &a == b)
            {
                return Err(err(
                    0,
                    "parameter blocks do not match the architecture".into(),
                ));
            }
            let entries = blocks
                .into_iter()
                .map(|(name, rows, cols, data)| {
                    let shape = if rows == 1 && !name.ends_with(".w") {
                        vec![cols]
                    } else {
                        vec![rows, cols]
                    };
                    Ok((name, Tensor::new(shape, data)?))
                })
                .collect::<Result<Vec<_>>>()?;
            ModelParams::Net(NetParams::from_entries(entries))
        }
    };

    Ok(ReducerModel {
        spec,
        input_dim,
        params,
        training_trace: Vec::new(),
        degenerate,
    })
}

fn parse_kv<'a>(line: &'a str, prefix: &str) -> Option<Vec<(&'a str, &'a str)>> {
    let rest = line.strip_prefix(prefix)?;
    Some(
        rest.split_whitespace()
            .filter_map(|part| part.split_once('='))
            .collect(),
    )
}

fn get_kv<'a>(kv: &[(&'a str, &'a str)], key: &str) -> Option<&'a str> {
    kv.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

fn parse_field<T: std::str::FromStr>(
    kv: &[(&str, &str)],
    key: &str,
) -> std::result::Result<T, String> {
    get_kv(kv, key)
        .ok_or_else(|| format!("missing `{key}`"))?
        .parse()
        .map_err(|_| format!("bad value for `{key}`"))
}

/// Renders the training trace CSV (`epoch,loss,recon,kl`).
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("epoch,loss,recon,kl\n");
    for row in trace {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e}\n",
            row.epoch, row.loss, row.recon, row.kl
        ));
    }
    out
}
