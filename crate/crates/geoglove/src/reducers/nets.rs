//! The three network reducers behind one architecture abstraction: a
//! plain autoencoder, a VAE, and a VAE whose encoder/decoder are
//! unrolled LSTMs over a chunked view of the input vector.
//!
//! Training builds a fresh autodiff graph per batch; inference uses the
//! plain forward ops (the encoder mean path, never sampling).

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nnkit::{
    AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS, Graph, LstmCellParams, NodeId, Tensor,
    adam_step, dense_forward, lstm_cell, relu,
};
use crate::rng;

use super::{ReducerSpec, TraceRow};

/// Named parameter tensors in a fixed order (creation order = draw order,
/// which keeps seeded initialization reproducible).
#[derive(Debug, Clone)]
pub(crate) struct NetParams {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl NetParams {
    pub(crate) fn from_entries(entries: Vec<(String, Tensor)>) -> Self {
        let (names, tensors) = entries.into_iter().unzip();
        Self { names, tensors }
    }

    pub(crate) fn get(&self, name: &str) -> &Tensor {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"));
        &self.tensors[i]
    }

    pub(crate) fn entries(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.tensors.iter())
    }

    fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }
}

/// Graph leaf ids for every parameter, aligned with [`NetParams`].
pub(crate) struct ParamNodes {
    names: Vec<String>,
    ids: Vec<NodeId>,
}

impl ParamNodes {
    fn id(&self, name: &str) -> NodeId {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"));
        self.ids[i]
    }
}

pub(crate) fn register_params(g: &mut Graph, p: &NetParams) -> ParamNodes {
    ParamNodes {
        names: p.names.clone(),
        ids: p.tensors.iter().map(|t| g.leaf(t.clone())).collect(),
    }
}

enum Init {
    Xavier {
        fan_in: usize,
        fan_out: usize,
    },
    Zeros,
    /// LSTM bias with the forget gate set to one.
    ForgetOne {
        hidden: usize,
    },
}

struct ParamSpec {
    name: String,
    shape: Vec<usize>,
    init: Init,
}

fn dense_spec(prefix: &str, input: usize, output: usize) -> [ParamSpec; 2] {
    [
        ParamSpec {
            name: format!("{prefix}.w"),
            shape: vec![output, input],
            init: Init::Xavier {
                fan_in: input,
                fan_out: output,
            },
        },
        ParamSpec {
            name: format!("{prefix}.b"),
            shape: vec![output],
            init: Init::Zeros,
        },
    ]
}

fn lstm_spec(prefix: &str, input: usize, hidden: usize) -> [ParamSpec; 3] {
    [
        ParamSpec {
            name: format!("{prefix}.wx"),
            shape: vec![4 * hidden, input],
            init: Init::Xavier {
                fan_in: input,
                fan_out: hidden,
            },
        },
        ParamSpec {
            name: format!("{prefix}.wh"),
            shape: vec![4 * hidden, hidden],
            init: Init::Xavier {
                fan_in: hidden,
                fan_out: hidden,
            },
        },
        ParamSpec {
            name: format!("{prefix}.b"),
            shape: vec![4 * hidden],
            init: Init::ForgetOne { hidden },
        },
    ]
}

fn init_params(specs: Vec<ParamSpec>, r: &mut ChaCha8Rng) -> NetParams {
    let entries = specs
        .into_iter()
        .map(|s| {
            let n: usize = s.shape.iter().product();
            let data = match s.init {
                Init::Xavier { fan_in, fan_out } => {
                    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    (0..n).map(|_| rng::uniform_symmetric(r, limit)).collect()
                }
                Init::Zeros => vec![0.0; n],
                Init::ForgetOne { hidden } => {
                    let mut b = vec![0.0; n];
                    for v in b.iter_mut().skip(hidden).take(hidden) {
                        *v = 1.0;
                    }
                    b
                }
            };
            (s.name, Tensor::from_raw(s.shape, data))
        })
        .collect();
    NetParams::from_entries(entries)
}

pub(crate) struct LossNodes {
    pub total: NodeId,
    pub recon: NodeId,
    pub kl: Option<NodeId>,
}

pub(crate) trait NetArch {
    fn init(&self, r: &mut ChaCha8Rng) -> NetParams;
    fn latent_dim(&self) -> usize;
    fn uses_noise(&self) -> bool;
    fn build_loss(
        &self,
        g: &mut Graph,
        pn: &ParamNodes,
        x: NodeId,
        noise: Option<NodeId>,
        kl_weight: f64,
    ) -> LossNodes;
    fn encode(&self, p: &NetParams, x: &Tensor) -> Result<Tensor>;
    /// Parameter names in creation order, for model-file validation.
    fn param_names(&self) -> Vec<String>;
}

fn graph_dense(g: &mut Graph, pn: &ParamNodes, prefix: &str, x: NodeId) -> NodeId {
    let w = pn.id(&format!("{prefix}.w"));
    let b = pn.id(&format!("{prefix}.b"));
    let lin = g.matmul_nt(x, w);
    g.add_row(lin, b)
}

fn graph_mse(g: &mut Graph, pred: NodeId, target: NodeId) -> NodeId {
    let d = g.sub(pred, target);
    let sq = g.mul(d, d);
    g.mean_all(sq)
}

fn graph_kl(g: &mut Graph, mu: NodeId, logvar: NodeId) -> NodeId {
    // -1/2 mean over batch of sum_l (1 + logvar - mu^2 - exp(logvar))
    let batch = g.value(mu).rows() as f64;
    let one_plus = g.add_const(logvar, 1.0);
    let mu_sq = g.mul(mu, mu);
    let part = g.sub(one_plus, mu_sq);
    let var = g.exp(logvar);
    let term = g.sub(part, var);
    let total = g.sum_all(term);
    g.scale(total, -0.5 / batch)
}

fn graph_reparam(g: &mut Graph, mu: NodeId, logvar: NodeId, noise: NodeId) -> NodeId {
    let half = g.scale(logvar, 0.5);
    let std = g.exp(half);
    let scaled = g.mul(std, noise);
    g.add(mu, scaled)
}

fn graph_lstm_step(
    g: &mut Graph,
    pn: &ParamNodes,
    prefix: &str,
    x: NodeId,
    h: NodeId,
    c: NodeId,
    hidden: usize,
) -> (NodeId, NodeId) {
    let wx = pn.id(&format!("{prefix}.wx"));
    let wh = pn.id(&format!("{prefix}.wh"));
    let b = pn.id(&format!("{prefix}.b"));
    let xz = g.matmul_nt(x, wx);
    let hz = g.matmul_nt(h, wh);
    let sum = g.add(xz, hz);
    let pre = g.add_row(sum, b);
    let i_pre = g.slice_cols(pre, 0, hidden);
    let i_g = g.sigmoid(i_pre);
    let f_pre = g.slice_cols(pre, hidden, hidden);
    let f_g = g.sigmoid(f_pre);
    let g_pre = g.slice_cols(pre, 2 * hidden, hidden);
    let g_c = g.tanh(g_pre);
    let o_pre = g.slice_cols(pre, 3 * hidden, hidden);
    let o_g = g.sigmoid(o_pre);
    let fc = g.mul(f_g, c);
    let ig = g.mul(i_g, g_c);
    let c_new = g.add(fc, ig);
    let c_act = g.tanh(c_new);
    let h_new = g.mul(o_g, c_act);
    (h_new, c_new)
}

fn lstm_params_of(p: &NetParams, prefix: &str) -> LstmCellParams {
    LstmCellParams::new(
        p.get(&format!("{prefix}.wx")).clone(),
        p.get(&format!("{prefix}.wh")).clone(),
        p.get(&format!("{prefix}.b")).clone(),
    )
    .expect("architect-built lstm params are consistent")
}

/// Plain autoencoder: every hidden layer ReLU, linear latent and output.
pub(crate) struct AeArch {
    /// Encoder dimension chain, input first, latent last.
    pub chain: Vec<usize>,
}

impl AeArch {
    pub(crate) fn new(input: usize, hidden: &[usize], latent: usize) -> Self {
        let mut chain = Vec::with_capacity(hidden.len() + 2);
        chain.push(input);
        chain.extend_from_slice(hidden);
        chain.push(latent);
        Self { chain }
    }

    fn layer_specs(&self) -> Vec<ParamSpec> {
        let mut specs = Vec::new();
        let n = self.chain.len() - 1;
        for i in 0..n {
            specs.extend(dense_spec(
                &format!("enc{i}"),
                self.chain[i],
                self.chain[i + 1],
            ));
        }
        for i in 0..n {
            specs.extend(dense_spec(
                &format!("dec{i}"),
                self.chain[n - i],
                self.chain[n - i - 1],
            ));
        }
        specs
    }

    fn graph_encode(&self, g: &mut Graph, pn: &ParamNodes, x: NodeId) -> NodeId {
        let n = self.chain.len() - 1;
        let mut a = x;
        for i in 0..n {
            a = graph_dense(g, pn, &format!("enc{i}"), a);
            if i + 1 < n {
                a = g.relu(a);
            }
        }
        a
    }

    fn graph_decode(&self, g: &mut Graph, pn: &ParamNodes, z: NodeId) -> NodeId {
        let n = self.chain.len() - 1;
        let mut a = z;
        for i in 0..n {
            a = graph_dense(g, pn, &format!("dec{i}"), a);
            if i + 1 < n {
                a = g.relu(a);
            }
        }
        a
    }
}

impl NetArch for AeArch {
    fn init(&self, r: &mut ChaCha8Rng) -> NetParams {
        init_params(self.layer_specs(), r)
    }

    fn latent_dim(&self) -> usize {
        *self.chain.last().expect("non-empty chain")
    }

    fn uses_noise(&self) -> bool {
        false
    }

    fn build_loss(
        &self,
        g: &mut Graph,
        pn: &ParamNodes,
        x: NodeId,
        _noise: Option<NodeId>,
        _kl_weight: f64,
    ) -> LossNodes {
        let z = self.graph_encode(g, pn, x);
        let y = self.graph_decode(g, pn, z);
        let recon = graph_mse(g, y, x);
        LossNodes {
            total: recon,
            recon,
            kl: None,
        }
    }

    fn encode(&self, p: &NetParams, x: &Tensor) -> Result<Tensor> {
        let n = self.chain.len() - 1;
        let mut a = x.clone();
        for i in 0..n {
            a = dense_forward(&a, p.get(&format!("enc{i}.w")), p.get(&format!("enc{i}.b")))?;
            if i + 1 < n {
                a = relu(&a);
            }
        }
        Ok(a)
    }

    fn param_names(&self) -> Vec<String> {
        self.layer_specs().into_iter().map(|s| s.name).collect()
    }
}

/// VAE: the AE trunk ends in mu/logvar heads; the decoder is shared with
/// the AE shape. Inference returns mu.
pub(crate) struct VaeArch {
    /// Trunk chain: input first, last entry feeds the heads.
    pub trunk: Vec<usize>,
    pub latent: usize,
}

impl VaeArch {
    pub(crate) fn new(input: usize, hidden: &[usize], latent: usize) -> Self {
        let mut trunk = Vec::with_capacity(hidden.len() + 1);
        trunk.push(input);
        trunk.extend_from_slice(hidden);
        Self { trunk, latent }
    }

    fn layer_specs(&self) -> Vec<ParamSpec> {
        let mut specs = Vec::new();
        for i in 0..self.trunk.len() - 1 {
            specs.extend(dense_spec(
                &format!("enc{i}"),
                self.trunk[i],
                self.trunk[i + 1],
            ));
        }
        let head_in = *self.trunk.last().expect("non-empty trunk");
        specs.extend(dense_spec("mu", head_in, self.latent));
        specs.extend(dense_spec("logvar", head_in, self.latent));
        // decoder mirrors: latent -> reversed hidden -> input
        let mut dec_chain = vec![self.latent];
        dec_chain.extend(self.trunk.iter().skip(1).rev());
        dec_chain.push(self.trunk[0]);
        for i in 0..dec_chain.len() - 1 {
            specs.extend(dense_spec(
                &format!("dec{i}"),
                dec_chain[i],
                dec_chain[i + 1],
            ));
        }
        specs
    }

    fn graph_trunk(&self, g: &mut Graph, pn: &ParamNodes, x: NodeId) -> NodeId {
        let mut a = x;
        for i in 0..self.trunk.len() - 1 {
            a = graph_dense(g, pn, &format!("enc{i}"), a);
            a = g.relu(a);
        }
        a
    }

    fn graph_decode(&self, g: &mut Graph, pn: &ParamNodes, z: NodeId) -> NodeId {
        let n_dec = self.trunk.len();
        let mut a = z;
        for i in 0..n_dec {
            a = graph_dense(g, pn, &format!("dec{i}"), a);
            if i + 1 < n_dec {
                a = g.relu(a);
            }
        }
        a
    }
}

impl NetArch for VaeArch {
    fn init(&self, r: &mut ChaCha8Rng) -> NetParams {
        init_params(self.layer_specs(), r)
    }

    fn latent_dim(&self) -> usize {
        self.latent
    }

    fn uses_noise(&self) -> bool {
        true
    }

    fn build_loss(
        &self,
        g: &mut Graph,
        pn: &ParamNodes,
        x: NodeId,
        noise: Option<NodeId>,
        kl_weight: f64,
    ) -> LossNodes {
        let trunk = self.graph_trunk(g, pn, x);
        let mu = graph_dense(g, pn, "mu", trunk);
        let logvar = graph_dense(g, pn, "logvar", trunk);
        let z = match noise {
            Some(n) => graph_reparam(g, mu, logvar, n),
            None => mu,
        };
        let y = self.graph_decode(g, pn, z);
        let recon = graph_mse(g, y, x);
        let kl = graph_kl(g, mu, logvar);
        let weighted = g.scale(kl, kl_weight);
        let total = g.add(recon, weighted);
        LossNodes {
            total,
            recon,
            kl: Some(kl),
        }
    }

    fn encode(&self, p: &NetParams, x: &Tensor) -> Result<Tensor> {
        let mut a = x.clone();
        for i in 0..self.trunk.len() - 1 {
            a = dense_forward(&a, p.get(&format!("enc{i}.w")), p.get(&format!("enc{i}.b")))?;
            a = relu(&a);
        }
        dense_forward(&a, p.get("mu.w"), p.get("mu.b"))
    }

    fn param_names(&self) -> Vec<String> {
        self.layer_specs().into_iter().map(|s| s.name).collect()
    }
}

/// VAE with LSTM encoder/decoder. The input vector is read as `steps`
/// chunks of `features`; the encoder's final hidden state feeds the
/// mu/logvar heads; the decoder maps the latent to an initial LSTM state
/// and unrolls `steps` times with the latent as per-step input.
pub(crate) struct VaeLstmArch {
    pub steps: usize,
    pub features: usize,
    pub hidden: usize,
    pub latent: usize,
}

impl VaeLstmArch {
    fn layer_specs(&self) -> Vec<ParamSpec> {
        let mut specs = Vec::new();
        specs.extend(lstm_spec("enc_lstm", self.features, self.hidden));
        specs.extend(dense_spec("mu", self.hidden, self.latent));
        specs.extend(dense_spec("logvar", self.hidden, self.latent));
        specs.extend(dense_spec("dec_state", self.latent, 2 * self.hidden));
        specs.extend(lstm_spec("dec_lstm", self.latent, self.hidden));
        specs.extend(dense_spec("out", self.hidden, self.features));
        specs
    }

    fn graph_encode_state(&self, g: &mut Graph, pn: &ParamNodes, x: NodeId) -> NodeId {
        let batch = g.value(x).rows();
        let mut h = g.leaf(Tensor::zeros(vec![batch, self.hidden]));
        let mut c = g.leaf(Tensor::zeros(vec![batch, self.hidden]));
        for t in 0..self.steps {
            let xt = g.slice_cols(x, t * self.features, self.features);
            let (h2, c2) = graph_lstm_step(g, pn, "enc_lstm", xt, h, c, self.hidden);
            h = h2;
            c = c2;
        }
        h
    }

    fn graph_decode(&self, g: &mut Graph, pn: &ParamNodes, z: NodeId) -> NodeId {
        let state = graph_dense(g, pn, "dec_state", z);
        let mut h = g.slice_cols(state, 0, self.hidden);
        let mut c = g.slice_cols(state, self.hidden, self.hidden);
        let mut outs = Vec::with_capacity(self.steps);
        for _ in 0..self.steps {
            let (h2, c2) = graph_lstm_step(g, pn, "dec_lstm", z, h, c, self.hidden);
            h = h2;
            c = c2;
            outs.push(graph_dense(g, pn, "out", h));
        }
        g.concat_cols(&outs)
    }
}

impl NetArch for VaeLstmArch {
    fn init(&self, r: &mut ChaCha8Rng) -> NetParams {
        init_params(self.layer_specs(), r)
    }

    fn latent_dim(&self) -> usize {
        self.latent
    }

    fn uses_noise(&self) -> bool {
        true
    }

    fn build_loss(
        &self,
        g: &mut Graph,
        pn: &ParamNodes,
        x: NodeId,
        noise: Option<NodeId>,
        kl_weight: f64,
    ) -> LossNodes {
        let enc = self.graph_encode_state(g, pn, x);
        let mu = graph_dense(g, pn, "mu", enc);
        let logvar = graph_dense(g, pn, "logvar", enc);
        let z = match noise {
            Some(n) => graph_reparam(g, mu, logvar, n),
            None => mu,
        };
        let y = self.graph_decode(g, pn, z);
        let recon = graph_mse(g, y, x);
        let kl = graph_kl(g, mu, logvar);
        let weighted = g.scale(kl, kl_weight);
        let total = g.add(recon, weighted);
        LossNodes {
            total,
            recon,
            kl: Some(kl),
        }
    }

    fn encode(&self, p: &NetParams, x: &Tensor) -> Result<Tensor> {
        let batch = x.rows();
        if x.cols() != self.steps * self.features {
            return Err(Error::ShapeMismatch(format!(
                "vae-lstm encode: input has {} columns, needs {}",
                x.cols(),
                self.steps * self.features
            )));
        }
        let cell = lstm_params_of(p, "enc_lstm");
        let mut h = Tensor::zeros(vec![batch, self.hidden]);
        let mut c = Tensor::zeros(vec![batch, self.hidden]);
        for t in 0..self.steps {
            let mut chunk = Vec::with_capacity(batch * self.features);
            for r in 0..batch {
                let row = x.row_slice(r);
                chunk.extend_from_slice(&row[t * self.features..(t + 1) * self.features]);
            }
            let xt = Tensor::from_raw(vec![batch, self.features], chunk);
            let (h2, c2) = lstm_cell(&xt, &h, &c, &cell)?;
            h = h2;
            c = c2;
        }
        dense_forward(&h, p.get("mu.w"), p.get("mu.b"))
    }

    fn param_names(&self) -> Vec<String> {
        self.layer_specs().into_iter().map(|s| s.name).collect()
    }
}

fn gather_rows(data: &Tensor, indices: &[usize]) -> Tensor {
    let cols = data.cols();
    let mut out = Vec::with_capacity(indices.len() * cols);
    for &i in indices {
        out.extend_from_slice(data.row_slice(i));
    }
    Tensor::from_raw(vec![indices.len(), cols], out)
}

fn normal_tensor(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| rng::standard_normal(r)).collect();
    Tensor::from_raw(vec![rows, cols], data)
}

/// Full-dataset loss evaluation with the latent mean (no sampling), used
/// for the per-epoch trace so traces are deterministic and comparable.
fn eval_trace_row(
    arch: &dyn NetArch,
    params: &NetParams,
    data: &Tensor,
    kl_weight: f64,
    epoch: usize,
) -> Result<TraceRow> {
    let mut g = Graph::new();
    let pn = register_params(&mut g, params);
    let x = g.leaf(data.clone());
    let loss = arch.build_loss(&mut g, &pn, x, None, kl_weight);
    let total = g.value(loss.total).data()[0];
    if !total.is_finite() {
        return Err(Error::NonFiniteValue("reducer loss".into()));
    }
    Ok(TraceRow {
        epoch,
        loss: total,
        recon: g.value(loss.recon).data()[0],
        kl: loss.kl.map(|k| g.value(k).data()[0]).unwrap_or(0.0),
    })
}

/// Adam training over shuffled mini-batches. The trace starts with an
/// epoch-0 evaluation of the freshly initialized model, then one row per
/// epoch.
pub(crate) fn train_net(
    arch: &dyn NetArch,
    data: &Tensor,
    spec: &ReducerSpec,
) -> Result<(NetParams, Vec<TraceRow>)> {
    let mut r = rng::seeded(spec.seed);
    let mut params = arch.init(&mut r);
    let mut adam = AdamState::new(&params.tensors);
    let n = data.rows();
    let batch_size = spec.batch_size.max(1);

    let mut trace = Vec::with_capacity(spec.epochs + 1);
    trace.push(eval_trace_row(arch, &params, data, spec.kl_weight, 0)?);

    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=spec.epochs {
        rng::shuffle(&mut r, &mut order);
        for batch in order.chunks(batch_size) {
            let x = gather_rows(data, batch);
            let noise = arch
                .uses_noise()
                .then(|| normal_tensor(&mut r, batch.len(), arch.latent_dim()));

            let mut g = Graph::new();
            let pn = register_params(&mut g, &params);
            let x_id = g.leaf(x);
            let noise_id = noise.map(|t| g.leaf(t));
            let loss = arch.build_loss(&mut g, &pn, x_id, noise_id, spec.kl_weight);
            if !g.value(loss.total).data()[0].is_finite() {
                return Err(Error::NonFiniteValue(format!(
                    "training loss at epoch {epoch}"
                )));
            }
            let grads = g.backward(loss.total);
            let grad_vecs: Vec<Vec<f64>> =
                pn.ids.iter().map(|&id| grads.wrt(id).to_vec()).collect();
            adam_step(
                params.tensors_mut(),
                &grad_vecs,
                &mut adam,
                spec.lr,
                DEFAULT_BETA1,
                DEFAULT_BETA2,
                DEFAULT_EPS,
            );
        }
        trace.push(eval_trace_row(arch, &params, data, spec.kl_weight, epoch)?);
    }
    Ok((params, trace))
}

/// Finite-difference check of an architecture's full loss at a seeded
/// random point: every parameter, the input batch and (for the VAE
/// variants) the noise draw are perturbed.
pub(crate) fn gradient_check_arch(
    arch: &dyn NetArch,
    input_dim: usize,
    batch: usize,
    seed: u64,
    kl_weight: f64,
) -> f64 {
    let mut r = rng::seeded(seed);
    let params = arch.init(&mut r);
    let x = Tensor::from_raw(
        vec![batch, input_dim],
        (0..batch * input_dim)
            .map(|_| rng::uniform_symmetric(&mut r, 1.0))
            .collect(),
    );
    let noise = arch
        .uses_noise()
        .then(|| normal_tensor(&mut r, batch, arch.latent_dim()));

    let mut point: Vec<Tensor> = params.tensors.clone();
    point.push(x);
    if let Some(n) = &noise {
        point.push(n.clone());
    }
    let names = params.names.clone();
    let uses_noise = arch.uses_noise();
    crate::nnkit::grad_check(
        |g, ids| {
            let pn = ParamNodes {
                names: names.clone(),
                ids: ids[..names.len()].to_vec(),
            };
            let x_id = ids[names.len()];
            let noise_id = uses_noise.then(|| ids[names.len() + 1]);
            arch.build_loss(g, &pn, x_id, noise_id, kl_weight).total
        },
        &point,
    )
}
