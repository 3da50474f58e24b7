//! Dense double-precision tensors (rank 1 or 2) and the matrix kernels
//! shared by the forward ops and the autodiff graph.

use crate::error::{Error, Result};

/// A dense row-major tensor of `f64` values.
///
/// Public constructors reject non-finite values, so a `Tensor` obtained
/// through the public API always holds finite data.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteValue("tensor construction".into()));
        }
        Ok(Self { shape, data })
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn row(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(vec![n], data)
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(vec![1], vec![value])
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    /// Bypasses the finiteness check; for internal kernels whose inputs are
    /// already validated.
    pub(crate) fn from_raw(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row count; a rank-1 tensor is treated as a single row.
    pub fn rows(&self) -> usize {
        if self.shape.len() == 2 {
            self.shape[0]
        } else {
            1
        }
    }

    /// Column count; a rank-1 tensor is its own row of columns.
    pub fn cols(&self) -> usize {
        match self.shape.len() {
            2 => self.shape[1],
            1 => self.shape[0],
            _ => self.data.len(),
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row_slice(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// c[ar x br] = a[ar x k] * b[br x k]^T  (dot products of rows).
pub(crate) fn matmul_nt(a: &[f64], ar: usize, b: &[f64], br: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; ar * br];
    for i in 0..ar {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * br..(i + 1) * br];
        for (j, o) in orow.iter_mut().enumerate() {
            *o = dot(arow, &b[j * k..(j + 1) * k]);
        }
    }
    out
}

/// Eight-lane unrolled dot product; the independent accumulators let the
/// FP pipeline overlap instead of serializing on one add chain.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len();
    let mut acc = [0.0f64; 8];
    let whole = k - k % 8;
    for o in (0..whole).step_by(8) {
        for l in 0..8 {
            acc[l] += a[o + l] * b[o + l];
        }
    }
    let mut tail = 0.0;
    for t in whole..k {
        tail += a[t] * b[t];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// c[ar x bc] = a[ar x k] * b[k x bc].
pub(crate) fn matmul_nn(a: &[f64], ar: usize, b: &[f64], bc: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; ar * bc];
    for i in 0..ar {
        let orow = &mut out[i * bc..(i + 1) * bc];
        for t in 0..k {
            let av = a[i * k + t];
            if av == 0.0 {
                continue;
            }
            let brow = &b[t * bc..(t + 1) * bc];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// c[ac x bc] = a[k x ac]^T * b[k x bc].
pub(crate) fn matmul_tn(a: &[f64], ac: usize, b: &[f64], bc: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; ac * bc];
    for t in 0..k {
        let arow = &a[t * ac..(t + 1) * ac];
        let brow = &b[t * bc..(t + 1) * bc];
        for (i, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[i * bc..(i + 1) * bc];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_length_mismatch() {
        assert!(matches!(
            Tensor::matrix(2, 2, vec![1.0; 3]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            Tensor::row(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteValue(_))
        ));
        assert!(matches!(
            Tensor::scalar(f64::INFINITY),
            Err(Error::NonFiniteValue(_))
        ));
    }

    #[test]
    fn matmul_kernels_agree_on_hand_case() {
        // a = [[1,2],[3,4]], b = [[5,6],[7,8]]
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        // a * b = [[19,22],[43,50]]
        assert_eq!(matmul_nn(&a, 2, &b, 2, 2), vec![19.0, 22.0, 43.0, 50.0]);
        // a * b^T = [[17,23],[39,53]]
        assert_eq!(matmul_nt(&a, 2, &b, 2, 2), vec![17.0, 23.0, 39.0, 53.0]);
        // a^T * b = [[26,30],[38,44]]
        assert_eq!(matmul_tn(&a, 2, &b, 2, 2), vec![26.0, 30.0, 38.0, 44.0]);
    }
}
