use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// `softmax(Q K^T / sqrt(d_k)) V`, returning the output and the attention map.
pub fn scaled_dot_attention(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    d_k: usize,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if d_k == 0 {
        return Err(Error::InvalidInput("d_k must be positive".into()));
    }
    if q.ncols() != k.ncols() || k.nrows() != v.nrows() || q.nrows() == 0 || k.nrows() == 0 {
        return Err(Error::InvalidInput(format!(
            "incompatible shapes Q {:?}, K {:?}, V {:?}",
            q.dim(),
            k.dim(),
            v.dim()
        )));
    }
    let mut scores = q.dot(&k.t()) / (d_k as f64).sqrt();
    for mut row in scores.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        row.mapv_inplace(|s| (s - max).exp());
        let total = row.sum();
        row.mapv_inplace(|e| e / total);
    }
    let out = scores.dot(v);
    Ok((out, scores))
}

#[cfg(test)]
mod tests {
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn single_position_attends_to_itself() {
        let q = array![[0.3, -1.0]];
        let v = array![[2.0, 5.0, -1.0]];
        let (out, attn) = scaled_dot_attention(&q, &q, &v, 2).unwrap();
        assert_eq!(attn, array![[1.0]]);
        assert_eq!(out, v);
    }

    #[test]
    fn zero_queries_average_values() {
        let q = Array2::zeros((3, 2));
        let k = array![[1.0, 2.0], [-3.0, 0.5], [0.0, 4.0]];
        let v = array![[1.0, 0.0], [2.0, 3.0], [6.0, -3.0]];
        let (out, attn) = scaled_dot_attention(&q, &k, &v, 2).unwrap();
        for a in attn.iter() {
            assert!((a - 1.0 / 3.0).abs() < 1e-15);
        }
        for row in out.rows() {
            assert!((row[0] - 3.0).abs() < 1e-12);
            assert!(row[1].abs() < 1e-12);
        }
    }

    #[test]
    fn random_case_matches_loops() {
        let mut rng = StreamRng::seed_from_u64(5);
        let mut rand_mat = |r, c| Array2::from_shape_fn((r, c), |_| rng.random_range(-2.0..2.0));
        let (q, k, v) = (rand_mat(3, 4), rand_mat(3, 4), rand_mat(3, 4));
        let (out, attn) = scaled_dot_attention(&q, &k, &v, 4).unwrap();
        for i in 0..3 {
            let scores: Vec<f64> = (0..3)
                .map(|j| (0..4).map(|c| q[[i, c]] * k[[j, c]]).sum::<f64>() / 2.0)
                .collect();
            let z: f64 = scores.iter().map(|s| s.exp()).sum();
            for j in 0..3 {
                assert!((attn[[i, j]] - scores[j].exp() / z).abs() < 1e-9);
            }
            for c in 0..4 {
                let expect: f64 = (0..3).map(|j| scores[j].exp() / z * v[[j, c]]).sum();
                assert!((out[[i, c]] - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = Array2::zeros((2, 3));
        let b = Array2::zeros((2, 4));
        assert!(scaled_dot_attention(&a, &b, &a, 3).is_err());
        assert!(scaled_dot_attention(&a, &a, &Array2::zeros((3, 3)), 3).is_err());
        assert!(scaled_dot_attention(&a, &a, &a, 0).is_err());
    }
}
