use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Stride-1 cross-correlation with "same" zero padding (`K / 2` on each side).
///
/// `input` is `[N, C_in, H, W]`, `weights` is `[C_out, C_in, K, K]` with odd
/// `K`; the output is `[N, C_out, H, W]`.
pub fn conv2d_forward<T: Scalar>(input: &Tensor<T>, weights: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, c_in, h, w) = dims4(input, "conv2d input")?;
    let (c_out, wc_in, k, k2) = dims4(weights, "conv2d weights")?;
    if wc_in != c_in || k != k2 || k % 2 == 0 {
        return Err(Error::ShapeMismatch {
            left: input.shape().to_vec(),
            right: weights.shape().to_vec(),
            context: "conv2d input vs weights",
        });
    }
    let per_in = c_in * h * w;
    let per_out = c_out * h * w;
    let mut out = vec![T::zero(); n * per_out];
    for s in 0..n {
        conv_single(
            &input.data()[s * per_in..(s + 1) * per_in],
            c_in,
            h,
            w,
            weights.data(),
            c_out,
            k,
            &mut out[s * per_out..(s + 1) * per_out],
        );
    }
    Tensor::new(vec![n, c_out, h, w], out)
}

/// Gradients of `conv2d_forward` for a batch: returns `(d_weights, d_input)`.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    d_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let (n, c_in, h, w) = dims4(input, "conv2d input")?;
    let (c_out, _, k, _) = dims4(weights, "conv2d weights")?;
    if d_out.shape() != [n, c_out, h, w] {
        return Err(Error::ShapeMismatch {
            left: d_out.shape().to_vec(),
            right: vec![n, c_out, h, w],
            context: "conv2d output gradient",
        });
    }
    let per_in = c_in * h * w;
    let per_out = c_out * h * w;
    let mut dw = vec![T::zero(); weights.len()];
    let mut dx = vec![T::zero(); input.len()];
    for s in 0..n {
        conv_backward_single(
            &input.data()[s * per_in..(s + 1) * per_in],
            c_in,
            h,
            w,
            weights.data(),
            c_out,
            k,
            &d_out.data()[s * per_out..(s + 1) * per_out],
            &mut dw,
            Some(&mut dx[s * per_in..(s + 1) * per_in]),
        );
    }
    Ok((
        Tensor::new(weights.shape().to_vec(), dw)?,
        Tensor::new(input.shape().to_vec(), dx)?,
    ))
}

fn dims4<T: Scalar>(t: &Tensor<T>, what: &'static str) -> Result<(usize, usize, usize, usize)> {
    match *t.shape() {
        [a, b, c, d] => Ok((a, b, c, d)),
        _ => Err(Error::ShapeMismatch {
            left: t.shape().to_vec(),
            right: vec![0, 0, 0, 0],
            context: what,
        }),
    }
}

/// Valid output range along one axis for kernel tap `tap` with padding `pad`.
#[inline]
fn valid_range(tap: usize, pad: usize, len: usize) -> (usize, usize) {
    // output position o reads input o + tap - pad, which must lie in [0, len)
    let lo = pad.saturating_sub(tap);
    let hi = (len + pad).saturating_sub(tap).min(len);
    (lo, hi)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_single<T: Scalar>(
    x: &[T],
    c_in: usize,
    h: usize,
    w: usize,
    weights: &[T],
    c_out: usize,
    k: usize,
    out: &mut [T],
) {
    let pad = k / 2;
    let plane = h * w;
    for o in 0..c_out {
        let out_plane = &mut out[o * plane..(o + 1) * plane];
        for c in 0..c_in {
            let x_plane = &x[c * plane..(c + 1) * plane];
            for i in 0..k {
                let (y_lo, y_hi) = valid_range(i, pad, h);
                for j in 0..k {
                    let wv = weights[((o * c_in + c) * k + i) * k + j];
                    if wv == T::zero() {
                        continue;
                    }
                    let (x_lo, x_hi) = valid_range(j, pad, w);
                    for oy in y_lo..y_hi {
                        let iy = oy + i - pad;
                        let src = &x_plane[iy * w + x_lo + j - pad..iy * w + x_hi + j - pad];
                        let dst = &mut out_plane[oy * w + x_lo..oy * w + x_hi];
                        for (d, &s) in dst.iter_mut().zip(src) {
                            *d += wv * s;
                        }
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward_single<T: Scalar>(
    x: &[T],
    c_in: usize,
    h: usize,
    w: usize,
    weights: &[T],
    c_out: usize,
    k: usize,
    d_out: &[T],
    d_weights: &mut [T],
    mut d_x: Option<&mut [T]>,
) {
    let pad = k / 2;
    let plane = h * w;
    for o in 0..c_out {
        let g_plane = &d_out[o * plane..(o + 1) * plane];
        for c in 0..c_in {
            let x_plane = &x[c * plane..(c + 1) * plane];
            for i in 0..k {
                let (y_lo, y_hi) = valid_range(i, pad, h);
                for j in 0..k {
                    let widx = ((o * c_in + c) * k + i) * k + j;
                    let (x_lo, x_hi) = valid_range(j, pad, w);
                    let mut acc = T::zero();
                    for oy in y_lo..y_hi {
                        let iy = oy + i - pad;
                        let src = &x_plane[iy * w + x_lo + j - pad..iy * w + x_hi + j - pad];
                        let g = &g_plane[oy * w + x_lo..oy * w + x_hi];
                        for (&gv, &sv) in g.iter().zip(src) {
                            acc += gv * sv;
                        }
                    }
                    d_weights[widx] += acc;
                    if let Some(dx) = d_x.as_deref_mut() {
                        let wv = weights[widx];
                        if wv == T::zero() {
                            continue;
                        }
                        let dx_plane = &mut dx[c * plane..(c + 1) * plane];
                        for oy in y_lo..y_hi {
                            let iy = oy + i - pad;
                            let g = &g_plane[oy * w + x_lo..oy * w + x_hi];
                            let dst =
                                &mut dx_plane[iy * w + x_lo + j - pad..iy * w + x_hi + j - pad];
                            for (d, &gv) in dst.iter_mut().zip(g) {
                                *d += wv * gv;
                            }
                        }
                    }
                }
            }
        }
    }
}
