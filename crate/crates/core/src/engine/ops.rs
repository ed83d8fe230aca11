//! Scalar building blocks of the forward pass. Every reduction runs left to
//! right in fp32 so results do not depend on how work is split across threads.

/// `out[i] = w[i] * x[i] / sqrt(mean(x^2) + eps)`.
pub fn rmsnorm(out: &mut [f32], x: &[f32], w: &[f32], eps: f32) {
    debug_assert!(!x.is_empty() && out.len() == x.len() && w.len() == x.len());
    let mut ss = 0.0f32;
    for v in x {
        ss += v * v;
    }
    ss /= x.len() as f32;
    let scale = 1.0 / (ss + eps).sqrt();
    for ((o, xi), wi) in out.iter_mut().zip(x).zip(w) {
        *o = wi * (scale * xi);
    }
}

/// In-place softmax with max subtraction.
pub fn softmax(x: &mut [f32]) {
    debug_assert!(!x.is_empty());
    let max = x.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0f32;
    for v in x.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in x.iter_mut() {
        *v /= sum;
    }
}

pub fn silu(x: f32) -> f32 {
    x / (1.0 + (-x).exp())
}

/// Rotates consecutive `(even, odd)` pairs of `q` and `k` by
/// `pos * theta_base^(-2i / head_size)`, where `i` is the pair index within
/// its head. `k` may be shorter than `q` (grouped-query attention).
pub fn rope_apply(q: &mut [f32], k: &mut [f32], pos: usize, head_size: usize, theta_base: f32) {
    debug_assert!(head_size.is_multiple_of(2));
    for i in (0..q.len()).step_by(2) {
        let head_dim = i % head_size;
        let freq = 1.0 / theta_base.powf(head_dim as f32 / head_size as f32);
        let angle = pos as f32 * freq;
        let (sin, cos) = angle.sin_cos();
        rotate(&mut q[i..i + 2], cos, sin);
        if i < k.len() {
            rotate(&mut k[i..i + 2], cos, sin);
        }
    }
}

fn rotate(pair: &mut [f32], cos: f32, sin: f32) {
    let (a, b) = (pair[0], pair[1]);
    pair[0] = a * cos - b * sin;
    pair[1] = a * sin + b * cos;
}
