//! Reference transformer in f64 with no KV cache: every call recomputes the
//! whole prefix from scratch. Shares nothing with the engine except the
//! tensor naming convention.

#![allow(dead_code)]

use llamabench::model_io::names;
use llamabench::Model;

fn t(model: &Model, name: &str) -> Vec<f64> {
    model
        .tensor(name)
        .unwrap()
        .data
        .iter()
        .map(|&v| v as f64)
        .collect()
}

fn matvec(w: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    w.chunks(n)
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn rms(x: &[f64], w: &[f64], eps: f64) -> Vec<f64> {
    let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let inv = 1.0 / (ms + eps).sqrt();
    x.iter().zip(w).map(|(a, g)| a * inv * g).collect()
}

fn rotate(v: &mut [f64], pos: usize, head_size: usize, theta: f64) {
    for head in v.chunks_mut(head_size) {
        for pair in 0..head_size / 2 {
            let angle = pos as f64 * theta.powf(-2.0 * pair as f64 / head_size as f64);
            let (s, c) = angle.sin_cos();
            let (a, b) = (head[2 * pair], head[2 * pair + 1]);
            head[2 * pair] = a * c - b * s;
            head[2 * pair + 1] = a * s + b * c;
        }
    }
}

/// Logits after the last token of `tokens`.
pub fn naive_logits(model: &Model, tokens: &[u32], eps: f64) -> Vec<f64> {
    let c = model.config;
    let hs = c.dim / c.n_heads;
    let group = c.n_heads / c.n_kv_heads;
    let emb = t(model, names::TOKEN_EMBEDDING);
    let mut xs: Vec<Vec<f64>> = tokens
        .iter()
        .map(|&tok| emb[tok as usize * c.dim..(tok as usize + 1) * c.dim].to_vec())
        .collect();

    for l in 0..c.n_layers {
        let (wq, wk, wv, wo) = (
            t(model, &names::attn_q(l)),
            t(model, &names::attn_k(l)),
            t(model, &names::attn_v(l)),
            t(model, &names::attn_output(l)),
        );
        let an = t(model, &names::attn_norm(l));
        let normed: Vec<Vec<f64>> = xs.iter().map(|x| rms(x, &an, eps)).collect();
        let mut qs = Vec::new();
        let mut ks = Vec::new();
        let mut vs = Vec::new();
        for (p, h) in normed.iter().enumerate() {
            let mut q = matvec(&wq, h);
            let mut k = matvec(&wk, h);
            rotate(&mut q, p, hs, 10000.0);
            rotate(&mut k, p, hs, 10000.0);
            qs.push(q);
            ks.push(k);
            vs.push(matvec(&wv, h));
        }
        for p in 0..xs.len() {
            let mut attn_out = vec![0.0; c.dim];
            for head in 0..c.n_heads {
                let kvh = head / group;
                let q = &qs[p][head * hs..(head + 1) * hs];
                let scores: Vec<f64> = (0..=p)
                    .map(|s| {
                        let k = &ks[s][kvh * hs..(kvh + 1) * hs];
                        q.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() / (hs as f64).sqrt()
                    })
                    .collect();
                let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
                let z: f64 = e.iter().sum();
                for (s, w) in e.iter().enumerate() {
                    let v = &vs[s][kvh * hs..(kvh + 1) * hs];
                    for d in 0..hs {
                        attn_out[head * hs + d] += w / z * v[d];
                    }
                }
            }
            let proj = matvec(&wo, &attn_out);
            for (x, d) in xs[p].iter_mut().zip(proj) {
                *x += d;
            }
        }
        let fnorm = t(model, &names::ffn_norm(l));
        let (w1, w2, w3) = (
            t(model, &names::ffn_gate(l)),
            t(model, &names::ffn_down(l)),
            t(model, &names::ffn_up(l)),
        );
        for x in xs.iter_mut() {
            let h = rms(x, &fnorm, eps);
            let gate = matvec(&w1, &h);
            let up = matvec(&w3, &h);
            let act: Vec<f64> = gate
                .iter()
                .zip(&up)
                .map(|(g, u)| g / (1.0 + (-g).exp()) * u)
                .collect();
            for (xi, d) in x.iter_mut().zip(matvec(&w2, &act)) {
                *xi += d;
            }
        }
    }
    let last = rms(xs.last().unwrap(), &t(model, names::OUTPUT_NORM), eps);
    let cls = if c.shared_classifier {
        emb
    } else {
        t(model, names::CLASSIFIER)
    };
    matvec(&cls, &last)
}

/// Largest `|got - want|` relative to the largest `|want|`, so individual
/// near-zero logits don't dominate.
pub fn max_rel_err(got: &[f32], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    got.iter()
        .zip(want)
        .map(|(g, w)| (*g as f64 - w).abs() / scale)
        .fold(0.0, f64::max)
}
