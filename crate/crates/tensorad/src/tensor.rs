use rayon::prelude::*;

use crate::error::TensorError;

/// Work threshold (multiply-adds) below which matmul stays single-threaded.
const PAR_MATMUL_THRESHOLD: usize = 1 << 16;

/// A dense, contiguous, row-major f64 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn full(shape: &[usize], value: f64) -> Tensor {
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn scalar(value: f64) -> Tensor {
        Tensor {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn from_vec(data: Vec<f64>, shape: &[usize]) -> Result<Tensor, TensorError> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(TensorError::DataLength {
                shape: shape.to_vec(),
                got: data.len(),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.numel(), 1);
        self.data[0]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor, TensorError> {
        if self.shape != other.shape {
            return Err(TensorError::ShapeMismatch {
                op: "zip_map",
                lhs: self.shape.clone(),
                rhs: other.shape.clone(),
            });
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Adds `scale * other` into `self` in place. Shapes must match.
    pub fn add_scaled(&mut self, other: &Tensor, scale: f64) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += scale * b;
        }
    }

    pub fn reshaped(&self, shape: &[usize]) -> Result<Tensor, TensorError> {
        let to_elems: usize = shape.iter().product();
        if to_elems != self.numel() {
            return Err(TensorError::ReshapeMismatch {
                from: self.shape.clone(),
                from_elems: self.numel(),
                to: shape.to_vec(),
                to_elems,
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }

    /// Reorders axes; `axes` must be a permutation of `0..rank`.
    pub fn permuted(&self, axes: &[usize]) -> Result<Tensor, TensorError> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        if axes.len() != rank || axes.iter().any(|&a| a >= rank || std::mem::replace(&mut seen[a], true)) {
            return Err(TensorError::BadPermutation {
                axes: axes.to_vec(),
                rank,
            });
        }
        let out_shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let in_strides = strides_of(&self.shape);
        let out_strides = strides_of(&out_shape);
        let mut out = vec![0.0; self.numel()];
        // Walk the output linearly, translating each index back to the input.
        let mut idx = vec![0usize; rank];
        for (o, slot) in out.iter_mut().enumerate() {
            let mut rem = o;
            let mut src = 0usize;
            for d in 0..rank {
                let q = rem / out_strides[d];
                rem -= q * out_strides[d];
                idx[d] = q;
                src += q * in_strides[axes[d]];
            }
            *slot = self.data[src];
        }
        Ok(Tensor {
            shape: out_shape,
            data: out,
        })
    }

    /// Matrix product. Both operands need rank >= 2 with identical leading
    /// (batch) dimensions: `(..., m, k) x (..., k, n) -> (..., m, n)`.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        let (a, b) = (self, rhs);
        let mismatch = || TensorError::ShapeMismatch {
            op: "matmul",
            lhs: a.shape.clone(),
            rhs: b.shape.clone(),
        };
        if a.rank() < 2 || b.rank() < 2 || a.rank() != b.rank() {
            return Err(mismatch());
        }
        let r = a.rank();
        if a.shape[..r - 2] != b.shape[..r - 2] || a.shape[r - 1] != b.shape[r - 2] {
            return Err(mismatch());
        }
        let (m, k, n) = (a.shape[r - 2], a.shape[r - 1], b.shape[r - 1]);
        let batch: usize = a.shape[..r - 2].iter().product();
        let mut out_shape = a.shape.clone();
        out_shape[r - 2] = m;
        out_shape[r - 1] = n;
        let mut out = vec![0.0; batch * m * n];
        for bi in 0..batch {
            matmul2d(
                &a.data[bi * m * k..(bi + 1) * m * k],
                &b.data[bi * k * n..(bi + 1) * k * n],
                m,
                k,
                n,
                &mut out[bi * m * n..(bi + 1) * m * n],
            );
        }
        Ok(Tensor {
            shape: out_shape,
            data: out,
        })
    }

    /// `self (..., m, n) x rhs^T` where rhs is `(..., k, n)`, giving `(..., m, k)`.
    pub(crate) fn matmul_nt(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        let (a, b) = (self, rhs);
        let r = a.rank();
        debug_assert_eq!(r, b.rank());
        debug_assert_eq!(a.shape[..r - 2], b.shape[..r - 2]);
        debug_assert_eq!(a.shape[r - 1], b.shape[r - 1]);
        let (m, n, k) = (a.shape[r - 2], a.shape[r - 1], b.shape[r - 2]);
        let batch: usize = a.shape[..r - 2].iter().product();
        let mut out_shape = a.shape.clone();
        out_shape[r - 2] = m;
        out_shape[r - 1] = k;
        let mut out = vec![0.0; batch * m * k];
        for bi in 0..batch {
            matmul2d_nt(
                &a.data[bi * m * n..(bi + 1) * m * n],
                &b.data[bi * k * n..(bi + 1) * k * n],
                m,
                n,
                k,
                &mut out[bi * m * k..(bi + 1) * m * k],
            );
        }
        Ok(Tensor {
            shape: out_shape,
            data: out,
        })
    }

    /// `self^T x rhs` where self is `(..., m, k)` and rhs `(..., m, n)`, giving `(..., k, n)`.
    pub(crate) fn matmul_tn(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        let (a, b) = (self, rhs);
        let r = a.rank();
        debug_assert_eq!(r, b.rank());
        debug_assert_eq!(a.shape[..r - 2], b.shape[..r - 2]);
        debug_assert_eq!(a.shape[r - 2], b.shape[r - 2]);
        let (m, k, n) = (a.shape[r - 2], a.shape[r - 1], b.shape[r - 1]);
        let batch: usize = a.shape[..r - 2].iter().product();
        let mut out_shape = a.shape.clone();
        out_shape[r - 2] = k;
        out_shape[r - 1] = n;
        let mut out = vec![0.0; batch * k * n];
        for bi in 0..batch {
            matmul2d_tn(
                &a.data[bi * m * k..(bi + 1) * m * k],
                &b.data[bi * m * n..(bi + 1) * m * n],
                m,
                k,
                n,
                &mut out[bi * k * n..(bi + 1) * k * n],
            );
        }
        Ok(Tensor {
            shape: out_shape,
            data: out,
        })
    }

    pub fn sum_all(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Mean over one axis, removing it from the shape.
    pub fn mean_axis(&self, axis: usize) -> Result<Tensor, TensorError> {
        if axis >= self.rank() {
            return Err(TensorError::BadAxis {
                op: "mean_axis",
                axis,
                shape: self.shape.clone(),
            });
        }
        let len = self.shape[axis];
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut out_shape = self.shape.clone();
        out_shape.remove(axis);
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for l in 0..len {
                let base = (o * len + l) * inner;
                let dst = &mut out[o * inner..(o + 1) * inner];
                for (d, &v) in dst.iter_mut().zip(&self.data[base..base + inner]) {
                    *d += v;
                }
            }
        }
        let scale = 1.0 / len as f64;
        for v in out.iter_mut() {
            *v *= scale;
        }
        Tensor::from_vec(out, &out_shape)
    }

    /// Row-wise sum of a rank-2 tensor: `[R, C] -> [R, 1]`.
    pub fn row_sum(&self) -> Result<Tensor, TensorError> {
        let (r, c) = self.as_2d("row_sum")?;
        let data: Vec<f64> = (0..r)
            .map(|i| self.data[i * c..(i + 1) * c].iter().sum())
            .collect();
        Tensor::from_vec(data, &[r, 1])
    }

    /// Row-wise max of a rank-2 tensor: `[R, C] -> [R, 1]`.
    pub fn row_max(&self) -> Result<Tensor, TensorError> {
        let (r, c) = self.as_2d("row_max")?;
        if c == 0 {
            return Err(TensorError::EmptyOperands { op: "row_max" });
        }
        let data: Vec<f64> = (0..r)
            .map(|i| {
                self.data[i * c..(i + 1) * c]
                    .iter()
                    .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
            })
            .collect();
        Tensor::from_vec(data, &[r, 1])
    }

    /// Softmax over the last axis.
    pub fn softmax_lastdim(&self) -> Tensor {
        let c = *self.shape.last().expect("rank >= 1");
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(c.max(1)) {
            let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        Tensor {
            shape: self.shape.clone(),
            data,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn as_2d(&self, op: &'static str) -> Result<(usize, usize), TensorError> {
        if self.rank() != 2 {
            return Err(TensorError::BadRank {
                op,
                expected: 2,
                shape: self.shape.clone(),
            });
        }
        Ok((self.shape[0], self.shape[1]))
    }
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// `out += a x b` for row-major 2-D blocks. The i-k-j loop order keeps both
/// the `b` row and the output row contiguous. Rows are independent, so the
/// parallel split is bitwise deterministic.
fn matmul2d(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    let row = |i: usize, orow: &mut [f64]| {
        let arow = &a[i * k..(i + 1) * k];
        for (kk, &av) in arow.iter().enumerate() {
            if av != 0.0 {
                let brow = &b[kk * n..(kk + 1) * n];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
    };
    if m * k * n >= PAR_MATMUL_THRESHOLD && m > 1 {
        out.par_chunks_mut(n).enumerate().for_each(|(i, orow)| row(i, orow));
    } else {
        for (i, orow) in out.chunks_exact_mut(n).enumerate() {
            row(i, orow);
        }
    }
}

/// `out += a x b^T`: dot products of contiguous rows.
fn matmul2d_nt(a: &[f64], b: &[f64], m: usize, n: usize, k: usize, out: &mut [f64]) {
    let row = |i: usize, orow: &mut [f64]| {
        let arow = &a[i * n..(i + 1) * n];
        for (j, o) in orow.iter_mut().enumerate() {
            let brow = &b[j * n..(j + 1) * n];
            let mut acc = 0.0;
            for (&x, &y) in arow.iter().zip(brow) {
                acc += x * y;
            }
            *o += acc;
        }
    };
    if m * n * k >= PAR_MATMUL_THRESHOLD && m > 1 {
        out.par_chunks_mut(k).enumerate().for_each(|(i, orow)| row(i, orow));
    } else {
        for (i, orow) in out.chunks_exact_mut(k).enumerate() {
            row(i, orow);
        }
    }
}

/// `out += a^T x b` where a is `(m, k)` and b `(m, n)`: accumulate one outer
/// product per source row.
fn matmul2d_tn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    // Parallelizing over output rows would stride through `a`; at the sizes
    // this crate serves, the sequential accumulation wins.
    let _ = m;
    for (arow, brow) in a.chunks_exact(k).zip(b.chunks_exact(n)) {
        for (kk, &av) in arow.iter().enumerate() {
            if av != 0.0 {
                let orow = &mut out[kk * n..(kk + 1) * n];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matmul_against_identity() {
        let a = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[2, 3]).unwrap();
        let eye = Tensor::from_vec(
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            &[3, 3],
        )
        .unwrap();
        assert_eq!(a.matmul(&eye).unwrap(), a);
    }

    #[test]
    fn matmul_hand_example() {
        let a = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0], &[2, 2]).unwrap();
        let b = Tensor::from_vec(vec![5.0, 6.0, 7.0, 8.0], &[2, 2]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_batched_matches_per_slice() {
        let a = Tensor::from_vec((0..12).map(|v| v as f64).collect(), &[2, 2, 3]).unwrap();
        let b = Tensor::from_vec((0..18).map(|v| (v as f64) * 0.5).collect(), &[2, 3, 3]).unwrap();
        let c = a.matmul(&b).unwrap();
        for bi in 0..2 {
            let a2 = Tensor::from_vec(a.data()[bi * 6..(bi + 1) * 6].to_vec(), &[2, 3]).unwrap();
            let b2 = Tensor::from_vec(b.data()[bi * 9..(bi + 1) * 9].to_vec(), &[3, 3]).unwrap();
            let c2 = a2.matmul(&b2).unwrap();
            assert_eq!(&c.data()[bi * 6..(bi + 1) * 6], c2.data());
        }
    }

    #[test]
    fn matmul_rejects_inner_mismatch() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[4, 2]);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[4, 2]"), "{msg}");
    }

    #[test]
    fn transposed_variants_match_explicit_permute() {
        let a = Tensor::from_vec((0..6).map(|v| v as f64 + 1.0).collect(), &[2, 3]).unwrap();
        let b = Tensor::from_vec((0..12).map(|v| v as f64 * 0.25).collect(), &[4, 3]).unwrap();
        let nt = a.matmul_nt(&b).unwrap();
        let via_permute = a.matmul(&b.permuted(&[1, 0]).unwrap()).unwrap();
        assert_eq!(nt, via_permute);

        let c = Tensor::from_vec((0..8).map(|v| v as f64).collect(), &[2, 4]).unwrap();
        let tn = a.matmul_tn(&c).unwrap();
        let via_permute = a.permuted(&[1, 0]).unwrap().matmul(&c).unwrap();
        assert_eq!(tn, via_permute);
    }

    #[test]
    fn permute_reverses_axes() {
        let t = Tensor::from_vec((0..24).map(|v| v as f64).collect(), &[2, 3, 4]).unwrap();
        let p = t.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.shape(), &[4, 2, 3]);
        // p[i, j, k] == t[j, k, i]
        assert_eq!(p.data()[0], t.data()[0]);
        let idx_p = 1 * 6 + 0 * 3 + 2; // p[1, 0, 2]
        let idx_t = 0 * 12 + 2 * 4 + 1; // t[0, 2, 1]
        assert_eq!(p.data()[idx_p], t.data()[idx_t]);
    }

    #[test]
    fn permute_rejects_non_permutation() {
        let t = Tensor::zeros(&[2, 2]);
        assert!(matches!(
            t.permuted(&[0, 0]),
            Err(TensorError::BadPermutation { .. })
        ));
    }

    #[test]
    fn mean_axis_middle() {
        let t = Tensor::from_vec((0..12).map(|v| v as f64).collect(), &[2, 3, 2]).unwrap();
        let m = t.mean_axis(1).unwrap();
        assert_eq!(m.shape(), &[2, 2]);
        assert_abs_diff_eq!(m.data()[0], (0.0 + 2.0 + 4.0) / 3.0);
        assert_abs_diff_eq!(m.data()[3], (7.0 + 9.0 + 11.0) / 3.0);
    }

    #[test]
    fn softmax_of_uniform_row_is_uniform() {
        let t = Tensor::full(&[3, 4], 0.7);
        let s = t.softmax_lastdim();
        for &v in s.data() {
            assert_abs_diff_eq!(v, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let t = Tensor::from_vec(
            vec![1.0, -2.0, 0.5, 900.0, 3.0, 0.0, -1.0, 2.5],
            &[2, 4],
        )
        .unwrap();
        let s = t.softmax_lastdim();
        for row in s.data().chunks(4) {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reshape_checks_element_count() {
        let t = Tensor::zeros(&[2, 3]);
        assert!(t.reshaped(&[3, 2]).is_ok());
        assert!(matches!(
            t.reshaped(&[4, 2]),
            Err(TensorError::ReshapeMismatch { .. })
        ));
    }

    #[test]
    fn row_reductions() {
        let t = Tensor::from_vec(vec![1.0, 5.0, 2.0, -3.0, 0.0, 4.0], &[2, 3]).unwrap();
        assert_eq!(t.row_sum().unwrap().data(), &[8.0, 1.0]);
        assert_eq!(t.row_max().unwrap().data(), &[5.0, 4.0]);
        assert_eq!(t.sum_all(), 9.0);
    }
}
