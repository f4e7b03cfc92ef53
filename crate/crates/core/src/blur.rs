use std::ops::{Add, Mul};

/// Separable Gaussian blur of a row-major `nx × ny` array, with zero
/// samples assumed beyond the edges. Sigmas are in samples; a sigma of zero
/// leaves that axis untouched.
pub(crate) fn gaussian_blur<T>(
    data: &[T],
    nx: usize,
    ny: usize,
    sx: f64,
    sy: f64,
    zero: T,
) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let mut out = data.to_vec();
    if sx > 0.0 {
        let k = kernel(sx);
        let r = k.len() / 2;
        let mut row = vec![zero; nx];
        for j in 0..ny {
            let src = &out[j * nx..(j + 1) * nx];
            for (i, dst) in row.iter_mut().enumerate() {
                let mut acc = zero;
                for (t, &w) in k.iter().enumerate() {
                    let s = i as isize + t as isize - r as isize;
                    if s >= 0 && (s as usize) < nx {
                        acc = acc + src[s as usize] * w;
                    }
                }
                *dst = acc;
            }
            out[j * nx..(j + 1) * nx].copy_from_slice(&row);
        }
    }
    if sy > 0.0 {
        let k = kernel(sy);
        let r = k.len() / 2;
        let mut col = vec![zero; ny];
        for i in 0..nx {
            for (j, dst) in col.iter_mut().enumerate() {
                let mut acc = zero;
                for (t, &w) in k.iter().enumerate() {
                    let s = j as isize + t as isize - r as isize;
                    if s >= 0 && (s as usize) < ny {
                        acc = acc + out[s as usize * nx + i] * w;
                    }
                }
                *dst = acc;
            }
            for (j, v) in col.iter().enumerate() {
                out[j * nx + i] = *v;
            }
        }
    }
    out
}

/// Normalized discrete Gaussian truncated at 4σ (at least one tap each side).
fn kernel(sigma: f64) -> Vec<f64> {
    let r = ((4.0 * sigma).ceil() as usize).max(1);
    let mut k: Vec<f64> = (0..=2 * r)
        .map(|t| {
            let d = t as f64 - r as f64;
            (-0.5 * d * d / (sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= s);
    k
}
