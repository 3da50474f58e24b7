//! Central-finite-difference validation of the reverse-mode gradients.

use super::graph::{Graph, NodeId};
use super::tensor::Tensor;

const STEP: f64 = 1e-5;

/// Compares the reverse-mode gradient of a scalar-valued graph function
/// against central differences at `point`, component by component, and
/// returns the maximum relative error with denominator
/// max(|analytic|, |numeric|, 1e-8).
///
/// `build` receives leaf ids in the same order as `point` and must return
/// a scalar node.
pub fn grad_check<F>(build: F, point: &[Tensor]) -> f64
where
    F: Fn(&mut Graph, &[NodeId]) -> NodeId,
{
    let eval = |tensors: &[Tensor]| -> (Graph, Vec<NodeId>, NodeId) {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = tensors.iter().map(|t| g.leaf(t.clone())).collect();
        let out = build(&mut g, &ids);
        (g, ids, out)
    };

    let (graph, ids, out) = eval(point);
    assert_eq!(
        graph.value(out).len(),
        1,
        "grad_check needs a scalar function"
    );
    let grads = graph.backward(out);
    let analytic: Vec<Vec<f64>> = ids.iter().map(|&id| grads.wrt(id).to_vec()).collect();

    let mut max_rel: f64 = 0.0;
    let mut perturbed = point.to_vec();
    for (ti, analytic_t) in analytic.iter().enumerate() {
        for (k, &a) in analytic_t.iter().enumerate() {
            let orig = perturbed[ti].data()[k];

            perturbed[ti].data_mut()[k] = orig + STEP;
            let (g_plus, _, out_plus) = eval(&perturbed);
            let f_plus = g_plus.value(out_plus).data()[0];

            perturbed[ti].data_mut()[k] = orig - STEP;
            let (g_minus, _, out_minus) = eval(&perturbed);
            let f_minus = g_minus.value(out_minus).data()[0];

            perturbed[ti].data_mut()[k] = orig;

            let numeric = (f_plus - f_minus) / (2.0 * STEP);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            max_rel = max_rel.max(rel);
        }
    }
    max_rel
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_tensor(rng: &mut rand_chacha::ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
        let data = (0..rows * cols)
            .map(|_| rng::uniform_symmetric(rng, 1.0))
            .collect();
        Tensor::matrix(rows, cols, data).unwrap()
    }

    #[test]
    fn sum_of_squares_checks_tightly() {
        let mut r = rng::seeded(5);
        let x = random_tensor(&mut r, 1, 8);
        let err = grad_check(
            |g, ids| {
                let sq = g.mul(ids[0], ids[0]);
                g.sum_all(sq)
            },
            &[x],
        );
        assert!(err < 1e-7, "max rel err {err}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let x = Tensor::row(vec![0.3, -0.4]).unwrap();
        let err = grad_check(
            |g, ids| {
                let zero = g.scale(ids[0], 0.0);
                g.sum_all(zero)
            },
            &[x],
        );
        assert_eq!(err, 0.0);
    }

    #[test]
    fn dense_relu_mse_composition_passes() {
        let mut r = rng::seeded(6);
        let x = random_tensor(&mut r, 3, 4);
        let w = random_tensor(&mut r, 5, 4);
        let b = random_tensor(&mut r, 1, 5);
        let target = random_tensor(&mut r, 3, 5);
        let err = grad_check(
            |g, ids| {
                let lin = g.matmul_nt(ids[0], ids[1]);
                let biased = g.add_row(lin, ids[2]);
                let act = g.relu(biased);
                let d = g.sub(act, ids[3]);
                let sq = g.mul(d, d);
                g.mean_all(sq)
            },
            &[x, w, b, target],
        );
        assert!(err < 1e-4, "max rel err {err}");
    }

    #[test]
    fn sigmoid_tanh_exp_chain_passes() {
        let mut r = rng::seeded(7);
        let x = random_tensor(&mut r, 2, 3);
        let err = grad_check(
            |g, ids| {
                let s = g.sigmoid(ids[0]);
                let t = g.tanh(s);
                let e = g.exp(t);
                g.mean_all(e)
            },
            &[x],
        );
        assert!(err < 1e-6, "max rel err {err}");
    }
}
