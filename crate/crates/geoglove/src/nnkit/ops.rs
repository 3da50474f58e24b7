//! Forward-only layer and loss operations.
//!
//! These are the building blocks the reducers use at inference time; the
//! training path goes through [`super::graph`], which shares the same
//! kernels, so the gradient checks there cover this code too.

use crate::error::{Error, Result};

use super::graph::sigmoid_scalar;
use super::tensor::{Tensor, matmul_nt};

/// y = x * W^T + b, with `b` broadcast over the batch.
pub fn dense_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    if x.cols() != w.cols() || b.len() != w.rows() {
        return Err(Error::ShapeMismatch(format!(
            "dense: x is {}x{}, w is {}x{}, b has {}",
            x.rows(),
            x.cols(),
            w.rows(),
            w.cols(),
            b.len()
        )));
    }
    let (rows, out_dim) = (x.rows(), w.rows());
    let mut data = matmul_nt(x.data(), rows, w.data(), out_dim, x.cols());
    for (i, v) in data.iter_mut().enumerate() {
        *v += b.data()[i % out_dim];
    }
    finite(Tensor::from_raw(vec![rows, out_dim], data), "dense_forward")
}

/// Elementwise max(0, x).
pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::from_raw(x.shape().to_vec(), data)
}

/// Parameters of a single LSTM cell. The four gates are stacked in the
/// order input, forget, candidate, output, so `w_input` is 4H x I,
/// `w_hidden` is 4H x H and `bias` has 4H entries.
#[derive(Debug, Clone)]
pub struct LstmCellParams {
    pub w_input: Tensor,
    pub w_hidden: Tensor,
    pub bias: Tensor,
    pub hidden: usize,
    pub input: usize,
}

impl LstmCellParams {
    pub fn new(w_input: Tensor, w_hidden: Tensor, bias: Tensor) -> Result<Self> {
        let four_h = w_input.rows();
        if !four_h.is_multiple_of(4) {
            return Err(Error::ShapeMismatch(format!(
                "lstm gate matrix rows {four_h} not divisible by 4"
            )));
        }
        let hidden = four_h / 4;
        let input = w_input.cols();
        if w_hidden.rows() != four_h || w_hidden.cols() != hidden || bias.len() != four_h {
            return Err(Error::ShapeMismatch(format!(
                "lstm params disagree: w_input {}x{}, w_hidden {}x{}, bias {}",
                w_input.rows(),
                w_input.cols(),
                w_hidden.rows(),
                w_hidden.cols(),
                bias.len()
            )));
        }
        Ok(Self {
            w_input,
            w_hidden,
            bias,
            hidden,
            input,
        })
    }
}

/// One LSTM step: sigmoid input/forget/output gates, tanh candidate,
/// c' = f.c + i.g, h' = o.tanh(c').
pub fn lstm_cell(
    x: &Tensor,
    h: &Tensor,
    c: &Tensor,
    p: &LstmCellParams,
) -> Result<(Tensor, Tensor)> {
    let batch = x.rows();
    if x.cols() != p.input
        || h.rows() != batch
        || h.cols() != p.hidden
        || c.rows() != batch
        || c.cols() != p.hidden
    {
        return Err(Error::ShapeMismatch(format!(
            "lstm_cell: x {}x{}, h {}x{}, c {}x{} vs input {}, hidden {}",
            x.rows(),
            x.cols(),
            h.rows(),
            h.cols(),
            c.rows(),
            c.cols(),
            p.input,
            p.hidden
        )));
    }
    let hd = p.hidden;
    let mut gates = matmul_nt(x.data(), batch, p.w_input.data(), 4 * hd, p.input);
    let from_h = matmul_nt(h.data(), batch, p.w_hidden.data(), 4 * hd, hd);
    for (i, v) in gates.iter_mut().enumerate() {
        *v += from_h[i] + p.bias.data()[i % (4 * hd)];
    }

    let mut h_new = vec![0.0; batch * hd];
    let mut c_new = vec![0.0; batch * hd];
    for r in 0..batch {
        let row = &gates[r * 4 * hd..(r + 1) * 4 * hd];
        for k in 0..hd {
            let i_g = sigmoid_scalar(row[k]);
            let f_g = sigmoid_scalar(row[hd + k]);
            let g_c = row[2 * hd + k].tanh();
            let o_g = sigmoid_scalar(row[3 * hd + k]);
            let c_next = f_g * c.data()[r * hd + k] + i_g * g_c;
            c_new[r * hd + k] = c_next;
            h_new[r * hd + k] = o_g * c_next.tanh();
        }
    }
    let h_t = finite(Tensor::from_raw(vec![batch, hd], h_new), "lstm_cell")?;
    let c_t = finite(Tensor::from_raw(vec![batch, hd], c_new), "lstm_cell")?;
    Ok((h_t, c_t))
}

/// Mean over all elements of (pred - target)^2.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch(format!(
            "mse: {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let sum: f64 = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum();
    let v = sum / pred.len() as f64;
    if !v.is_finite() {
        return Err(Error::NonFiniteValue("mse_loss".into()));
    }
    Ok(v)
}

/// KL divergence of N(mu, exp(logvar)) from the standard normal, averaged
/// over the batch: mean_b of -1/2 sum_l (1 + logvar - mu^2 - exp(logvar)).
pub fn gaussian_kl(mu: &Tensor, logvar: &Tensor) -> Result<f64> {
    if mu.shape() != logvar.shape() {
        return Err(Error::ShapeMismatch(format!(
            "gaussian_kl: {:?} vs {:?}",
            mu.shape(),
            logvar.shape()
        )));
    }
    let sum: f64 = mu
        .data()
        .iter()
        .zip(logvar.data())
        .map(|(&m, &lv)| 1.0 + lv - m * m - lv.exp())
        .sum();
    let v = -0.5 * sum / mu.rows() as f64;
    if !v.is_finite() {
        return Err(Error::NonFiniteValue("gaussian_kl".into()));
    }
    Ok(v)
}

/// z = mu + exp(logvar / 2) . noise, with caller-supplied noise draws.
pub fn reparameterize(mu: &Tensor, logvar: &Tensor, noise: &Tensor) -> Result<Tensor> {
    if mu.shape() != logvar.shape() || mu.shape() != noise.shape() {
        return Err(Error::ShapeMismatch(format!(
            "reparameterize: {:?} / {:?} / {:?}",
            mu.shape(),
            logvar.shape(),
            noise.shape()
        )));
    }
    let data = mu
        .data()
        .iter()
        .zip(logvar.data())
        .zip(noise.data())
        .map(|((&m, &lv), &n)| m + (lv * 0.5).exp() * n)
        .collect();
    finite(
        Tensor::from_raw(mu.shape().to_vec(), data),
        "reparameterize",
    )
}

fn finite(t: Tensor, what: &str) -> Result<Tensor> {
    if t.is_finite() {
        Ok(t)
    } else {
        Err(Error::NonFiniteValue(what.into()))
    }
}
