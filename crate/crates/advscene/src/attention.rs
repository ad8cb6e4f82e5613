//! Forward-only attention kernels: windowed / shifted-window multi-head
//! self-attention with relative position bias, consecutive block pairs,
//! patch merging, and query-driven cross-attention.
//!
//! Everything here is pure evaluation of caller-supplied (or seeded random)
//! parameters; nothing is learned.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AttentionError {
    #[error("window size {m} does not divide feature map {h}x{w}")]
    WindowDoesNotDivide { m: usize, h: usize, w: usize },
    #[error("shift {shift} must satisfy 0 <= shift < window size {m}")]
    BadShift { shift: usize, m: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("tensor container: {0}")]
    Container(String),
}

/// Token grid of shape H x W x C, row-major with channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub values: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        FeatureMap {
            height,
            width,
            channels,
            values: vec![0.0; height * width * channels],
        }
    }

    #[inline]
    pub fn token(&self, y: usize, x: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.values[i..i + self.channels]
    }

    /// Cyclic roll by `(dy, dx)` (positive moves content down/right).
    pub fn roll(&self, dy: isize, dx: isize) -> FeatureMap {
        let (h, w, c) = (self.height, self.width, self.channels);
        let mut out = FeatureMap::zeros(h, w, c);
        for y in 0..h {
            let sy = (y as isize - dy).rem_euclid(h as isize) as usize;
            for x in 0..w {
                let sx = (x as isize - dx).rem_euclid(w as isize) as usize;
                let src = (sy * w + sx) * c;
                let dst = (y * w + x) * c;
                out.values[dst..dst + c].copy_from_slice(&self.values[src..src + c]);
            }
        }
        out
    }
}

/// Window configuration: size `M` and cyclic shift `s` (0 for plain window
/// attention, `M/2` for the shifted variant).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub window_size: usize,
    pub shift: usize,
}

impl WindowSpec {
    pub fn validate(&self, height: usize, width: usize) -> Result<(), AttentionError> {
        let m = self.window_size;
        if self.shift >= m {
            return Err(AttentionError::BadShift {
                shift: self.shift,
                m,
            });
        }
        if m == 0 || height % m != 0 || width % m != 0 {
            return Err(AttentionError::WindowDoesNotDivide {
                m,
                h: height,
                w: width,
            });
        }
        Ok(())
    }
}

/// Multi-head attention parameters. The four projections are C x C row-major
/// matrices applied as `y = x W`; head `i` owns the column slice
/// `[i*d, (i+1)*d)` of `wq`/`wk`/`wv` and the matching row slice of `wo`.
/// `bias_table` holds the (2M-1)^2 x heads relative position bias.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub heads: usize,
    pub channels: usize,
    pub window_size: usize,
    pub wq: Vec<f64>,
    pub wk: Vec<f64>,
    pub wv: Vec<f64>,
    pub wo: Vec<f64>,
    pub bias_table: Vec<f64>,
    pub head_weights: Vec<f64>,
}

impl AttentionParams {
    pub fn head_dim(&self) -> usize {
        self.channels / self.heads
    }

    pub fn validate(&self) -> Result<(), AttentionError> {
        let c = self.channels;
        if self.heads == 0 || c % self.heads != 0 {
            return Err(AttentionError::ShapeMismatch(format!(
                "head count {} must divide channels {c}",
                self.heads
            )));
        }
        let side = 2 * self.window_size - 1;
        let checks = [
            ("wq", self.wq.len(), c * c),
            ("wk", self.wk.len(), c * c),
            ("wv", self.wv.len(), c * c),
            ("wo", self.wo.len(), c * c),
            ("bias_table", self.bias_table.len(), side * side * self.heads),
            ("head_weights", self.head_weights.len(), self.heads),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(AttentionError::ShapeMismatch(format!(
                    "{name}: expected {want} values, got {got}"
                )));
            }
        }
        Ok(())
    }

    /// Draws all parameters from a seeded Gaussian (std 0.02) with unit head
    /// weights.
    pub fn random(channels: usize, heads: usize, window_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.02).unwrap();
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| normal.sample(&mut rng)).collect() };
        let side = 2 * window_size - 1;
        AttentionParams {
            heads,
            channels,
            window_size,
            wq: draw(channels * channels),
            wk: draw(channels * channels),
            wv: draw(channels * channels),
            wo: draw(channels * channels),
            bias_table: draw(side * side * heads),
            head_weights: vec![1.0; heads],
        }
    }

    /// Bias for a (query, key) token pair inside one M x M window.
    fn window_bias(&self, head: usize, q: usize, k: usize) -> f64 {
        let m = self.window_size;
        let side = 2 * m - 1;
        let (qy, qx) = (q / m, q % m);
        let (ky, kx) = (k / m, k % m);
        let dy = qy as isize - ky as isize + (m as isize - 1);
        let dx = qx as isize - kx as isize + (m as isize - 1);
        self.bias_table[(dy as usize * side + dx as usize) * self.heads + head]
    }
}

/// Per-block parameters: LayerNorm scale/offset before the attention and MLP
/// sub-modules, and the C -> 4C -> C MLP weights with biases.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub ln_attn_scale: Vec<f64>,
    pub ln_attn_offset: Vec<f64>,
    pub ln_mlp_scale: Vec<f64>,
    pub ln_mlp_offset: Vec<f64>,
    pub mlp_w1: Vec<f64>,
    pub mlp_b1: Vec<f64>,
    pub mlp_w2: Vec<f64>,
    pub mlp_b2: Vec<f64>,
}

impl BlockParams {
    /// Identity LayerNorm, zero MLP: the block reduces to its residuals.
    pub fn zeros(channels: usize) -> Self {
        BlockParams {
            ln_attn_scale: vec![1.0; channels],
            ln_attn_offset: vec![0.0; channels],
            ln_mlp_scale: vec![1.0; channels],
            ln_mlp_offset: vec![0.0; channels],
            mlp_w1: vec![0.0; channels * 4 * channels],
            mlp_b1: vec![0.0; 4 * channels],
            mlp_w2: vec![0.0; 4 * channels * channels],
            mlp_b2: vec![0.0; channels],
        }
    }

    pub fn random(channels: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.02).unwrap();
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| normal.sample(&mut rng)).collect() };
        BlockParams {
            ln_attn_scale: vec![1.0; channels],
            ln_attn_offset: vec![0.0; channels],
            ln_mlp_scale: vec![1.0; channels],
            ln_mlp_offset: vec![0.0; channels],
            mlp_w1: draw(channels * 4 * channels),
            mlp_b1: draw(4 * channels),
            mlp_w2: draw(4 * channels * channels),
            mlp_b2: draw(channels),
        }
    }

    pub fn validate(&self, channels: usize) -> Result<(), AttentionError> {
        let c = channels;
        let checks = [
            ("ln_attn_scale", self.ln_attn_scale.len(), c),
            ("ln_attn_offset", self.ln_attn_offset.len(), c),
            ("ln_mlp_scale", self.ln_mlp_scale.len(), c),
            ("ln_mlp_offset", self.ln_mlp_offset.len(), c),
            ("mlp_w1", self.mlp_w1.len(), c * 4 * c),
            ("mlp_b1", self.mlp_b1.len(), 4 * c),
            ("mlp_w2", self.mlp_w2.len(), 4 * c * c),
            ("mlp_b2", self.mlp_b2.len(), c),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(AttentionError::ShapeMismatch(format!(
                    "{name}: expected {want} values, got {got}"
                )));
            }
        }
        Ok(())
    }
}

const LN_EPS: f64 = 1e-12;

/// Row-major matmul: (n x k) * (k x m) -> (n x m).
pub fn matmul(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * m..(p + 1) * m];
            let orow = &mut out[i * m..(i + 1) * m];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// Per-token LayerNorm over channels, then elementwise scale and offset.
pub fn layer_norm(tokens: &[f64], n: usize, c: usize, scale: &[f64], offset: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * c];
    for i in 0..n {
        let row = &tokens[i * c..(i + 1) * c];
        let mean = row.iter().sum::<f64>() / c as f64;
        let var = row.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / c as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        for j in 0..c {
            out[i * c + j] = (row[j] - mean) * inv * scale[j] + offset[j];
        }
    }
    out
}

/// Smooth GELU nonlinearity (tanh approximation).
pub fn gelu(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * x * (1.0 + (c * (x + 0.044715 * x * x * x)).tanh())
}

/// Single-head scaled-dot-product attention with optional additive bias:
/// `softmax(Q K^T / sqrt(d) + B) V`. `q` is nq x d, `k`/`v` are nk x d,
/// `bias` (when given) is nq x nk. Returns nq x d.
pub fn softmax_attention(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    nq: usize,
    nk: usize,
    d: usize,
    bias: Option<&[f64]>,
) -> Vec<f64> {
    let scale = 1.0 / (d as f64).sqrt();
    let mut out = vec![0.0; nq * d];
    let mut logits = vec![0.0; nk];
    for i in 0..nq {
        for j in 0..nk {
            let mut dot = 0.0;
            for p in 0..d {
                dot += q[i * d + p] * k[j * d + p];
            }
            logits[j] = dot * scale + bias.map_or(0.0, |b| b[i * nk + j]);
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for l in logits.iter_mut() {
            *l = (*l - max).exp();
            denom += *l;
        }
        for j in 0..nk {
            let w = logits[j] / denom;
            for p in 0..d {
                out[i * d + p] += w * v[j * d + p];
            }
        }
    }
    out
}

/// Attention weight matrix (row-stochastic) for one head; exposed for the
/// normalization and convexity checks.
pub fn attention_weights(
    q: &[f64],
    k: &[f64],
    nq: usize,
    nk: usize,
    d: usize,
    bias: Option<&[f64]>,
) -> Vec<f64> {
    // Attend to a basis of value vectors: column j of the weight matrix is
    // the attention output against indicator values.
    let scale = 1.0 / (d as f64).sqrt();
    let mut weights = vec![0.0; nq * nk];
    let mut logits = vec![0.0; nk];
    for i in 0..nq {
        for j in 0..nk {
            let mut dot = 0.0;
            for p in 0..d {
                dot += q[i * d + p] * k[j * d + p];
            }
            logits[j] = dot * scale + bias.map_or(0.0, |b| b[i * nk + j]);
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
        for j in 0..nk {
            weights[i * nk + j] = (logits[j] - max).exp() / denom;
        }
    }
    weights
}

enum BiasMode {
    None,
    Window,
}

/// Head-weighted multi-head attention: per head `i`,
/// `softmax(Q_i K_i^T / sqrt(d) + B_i) V_i` projected through head `i`'s
/// output slice, summed with weight `w_i`.
fn multi_head(
    q_tokens: &[f64],
    nq: usize,
    kv_tokens: &[f64],
    nk: usize,
    params: &AttentionParams,
    bias: BiasMode,
) -> Vec<f64> {
    let c = params.channels;
    let d = params.head_dim();
    let q_all = matmul(q_tokens, &params.wq, nq, c, c);
    let k_all = matmul(kv_tokens, &params.wk, nk, c, c);
    let v_all = matmul(kv_tokens, &params.wv, nk, c, c);

    let slice_head = |all: &[f64], n: usize, head: usize| -> Vec<f64> {
        let mut out = vec![0.0; n * d];
        for i in 0..n {
            out[i * d..(i + 1) * d].copy_from_slice(&all[i * c + head * d..i * c + (head + 1) * d]);
        }
        out
    };

    let mut out = vec![0.0; nq * c];
    for head in 0..params.heads {
        let q = slice_head(&q_all, nq, head);
        let k = slice_head(&k_all, nk, head);
        let v = slice_head(&v_all, nk, head);
        let bias_mat: Option<Vec<f64>> = match &bias {
            BiasMode::None => None,
            BiasMode::Window => {
                let mut b = vec![0.0; nq * nk];
                for i in 0..nq {
                    for j in 0..nk {
                        b[i * nk + j] = params.window_bias(head, i, j);
                    }
                }
                Some(b)
            }
        };
        let head_out = softmax_attention(&q, &k, &v, nq, nk, d, bias_mat.as_deref());
        // Project through head's rows of wo: (nq x d) * (d x c).
        let wo_slice = &params.wo[head * d * c..(head + 1) * d * c];
        let projected = matmul(&head_out, wo_slice, nq, d, c);
        let w = params.head_weights[head];
        for (o, p) in out.iter_mut().zip(&projected) {
            *o += w * p;
        }
    }
    out
}

/// Window self-attention over one M x M token block (tokens are M^2 x C)
/// with the relative position bias from the parameter table.
pub fn window_attention(tokens: &[f64], params: &AttentionParams) -> Result<Vec<f64>, AttentionError> {
    params.validate()?;
    let n = params.window_size * params.window_size;
    if tokens.len() != n * params.channels {
        return Err(AttentionError::ShapeMismatch(format!(
            "window tokens: expected {} values, got {}",
            n * params.channels,
            tokens.len()
        )));
    }
    Ok(multi_head(tokens, n, tokens, n, params, BiasMode::Window))
}

/// Dense self-attention over N x C tokens without positional bias.
pub fn dense_attention(tokens: &[f64], n: usize, params: &AttentionParams) -> Result<Vec<f64>, AttentionError> {
    params.validate()?;
    if tokens.len() != n * params.channels {
        return Err(AttentionError::ShapeMismatch(format!(
            "tokens: expected {} values, got {}",
            n * params.channels,
            tokens.len()
        )));
    }
    Ok(multi_head(tokens, n, tokens, n, params, BiasMode::None))
}

/// Decoder cross-attention: Q from the learnable task queries (K x C), keys
/// and values projected from the flattened encoder memory. No positional
/// bias.
pub fn cross_attention(
    queries: &[f64],
    num_queries: usize,
    memory: &FeatureMap,
    params: &AttentionParams,
) -> Result<Vec<f64>, AttentionError> {
    params.validate()?;
    if queries.len() != num_queries * params.channels {
        return Err(AttentionError::ShapeMismatch(format!(
            "queries: expected {} values, got {}",
            num_queries * params.channels,
            queries.len()
        )));
    }
    if memory.channels != params.channels {
        return Err(AttentionError::ShapeMismatch(format!(
            "memory channels {} != params channels {}",
            memory.channels, params.channels
        )));
    }
    let n = memory.height * memory.width;
    Ok(multi_head(
        queries,
        num_queries,
        &memory.values,
        n,
        params,
        BiasMode::None,
    ))
}

/// Splits the map into non-overlapping M x M windows after a cyclic roll by
/// (-s, -s). Windows are emitted row-major; each holds M^2 x C values.
pub fn window_partition(
    map: &FeatureMap,
    spec: &WindowSpec,
) -> Result<Vec<Vec<f64>>, AttentionError> {
    spec.validate(map.height, map.width)?;
    let m = spec.window_size;
    let rolled = if spec.shift > 0 {
        map.roll(-(spec.shift as isize), -(spec.shift as isize))
    } else {
        map.clone()
    };
    let (c, wx) = (map.channels, map.width / m);
    let mut windows = Vec::with_capacity((map.height / m) * wx);
    for wy in 0..map.height / m {
        for wxi in 0..wx {
            let mut tokens = Vec::with_capacity(m * m * c);
            for iy in 0..m {
                let y = wy * m + iy;
                for ix in 0..m {
                    tokens.extend_from_slice(rolled.token(y, wxi * m + ix));
                }
            }
            windows.push(tokens);
        }
    }
    Ok(windows)
}

/// Inverse of [`window_partition`], including the un-roll.
pub fn window_reverse(
    windows: &[Vec<f64>],
    spec: &WindowSpec,
    height: usize,
    width: usize,
    channels: usize,
) -> Result<FeatureMap, AttentionError> {
    spec.validate(height, width)?;
    let m = spec.window_size;
    let wx = width / m;
    if windows.len() != (height / m) * wx {
        return Err(AttentionError::ShapeMismatch(format!(
            "expected {} windows, got {}",
            (height / m) * wx,
            windows.len()
        )));
    }
    let mut rolled = FeatureMap::zeros(height, width, channels);
    for (wi, tokens) in windows.iter().enumerate() {
        if tokens.len() != m * m * channels {
            return Err(AttentionError::ShapeMismatch(format!(
                "window {wi}: expected {} values, got {}",
                m * m * channels,
                tokens.len()
            )));
        }
        let (wy, wxi) = (wi / wx, wi % wx);
        for iy in 0..m {
            for ix in 0..m {
                let src = (iy * m + ix) * channels;
                let dst = ((wy * m + iy) * width + wxi * m + ix) * channels;
                rolled.values[dst..dst + channels].copy_from_slice(&tokens[src..src + channels]);
            }
        }
    }
    Ok(if spec.shift > 0 {
        rolled.roll(spec.shift as isize, spec.shift as isize)
    } else {
        rolled
    })
}

fn windowed_msa(
    map: &FeatureMap,
    params: &AttentionParams,
    spec: &WindowSpec,
) -> Result<FeatureMap, AttentionError> {
    let windows = window_partition(map, spec)?;
    let attended: Result<Vec<Vec<f64>>, _> = windows
        .iter()
        .map(|w| window_attention(w, params))
        .collect();
    window_reverse(&attended?, spec, map.height, map.width, map.channels)
}

fn mlp(tokens: &[f64], n: usize, c: usize, block: &BlockParams) -> Vec<f64> {
    let mut hidden = matmul(tokens, &block.mlp_w1, n, c, 4 * c);
    for i in 0..n {
        for j in 0..4 * c {
            hidden[i * 4 * c + j] = gelu(hidden[i * 4 * c + j] + block.mlp_b1[j]);
        }
    }
    let mut out = matmul(&hidden, &block.mlp_w2, n, 4 * c, c);
    for i in 0..n {
        for j in 0..c {
            out[i * c + j] += block.mlp_b2[j];
        }
    }
    out
}

fn residual_block(
    map: &FeatureMap,
    attn: &AttentionParams,
    block: &BlockParams,
    spec: &WindowSpec,
) -> Result<FeatureMap, AttentionError> {
    let (h, w, c) = (map.height, map.width, map.channels);
    let n = h * w;
    // attention branch: z_hat = MSA(LN(z)) + z
    let normed = layer_norm(&map.values, n, c, &block.ln_attn_scale, &block.ln_attn_offset);
    let normed_map = FeatureMap {
        height: h,
        width: w,
        channels: c,
        values: normed,
    };
    let attended = windowed_msa(&normed_map, attn, spec)?;
    let mut z_hat = map.clone();
    for (o, a) in z_hat.values.iter_mut().zip(&attended.values) {
        *o += a;
    }
    // mlp branch: z = MLP(LN(z_hat)) + z_hat
    let normed = layer_norm(&z_hat.values, n, c, &block.ln_mlp_scale, &block.ln_mlp_offset);
    let mlp_out = mlp(&normed, n, c, block);
    let mut z = z_hat;
    for (o, m) in z.values.iter_mut().zip(&mlp_out) {
        *o += m;
    }
    Ok(z)
}

/// Two consecutive blocks: plain-window attention + MLP, then shifted-window
/// attention (shift M/2) + MLP, each with pre-LayerNorm and residuals.
/// Output shape equals input shape.
pub fn swin_block_pair(
    map: &FeatureMap,
    attn: &AttentionParams,
    blocks: &[BlockParams; 2],
    window_size: usize,
) -> Result<FeatureMap, AttentionError> {
    if attn.channels != map.channels || attn.window_size != window_size {
        return Err(AttentionError::ShapeMismatch(format!(
            "attention params (C={}, M={}) do not match map C={} / window {window_size}",
            attn.channels, attn.window_size, map.channels
        )));
    }
    for b in blocks {
        b.validate(map.channels)?;
    }
    let plain = WindowSpec {
        window_size,
        shift: 0,
    };
    let shifted = WindowSpec {
        window_size,
        shift: window_size / 2,
    };
    let z = residual_block(map, attn, &blocks[0], &plain)?;
    residual_block(&z, attn, &blocks[1], &shifted)
}

/// 2x2 patch merging: neighborhood channels concatenated in (top-left,
/// bottom-left, top-right, bottom-right) order, then projected 4C -> 2C.
pub fn patch_merge(map: &FeatureMap, merge_weights: &[f64]) -> Result<FeatureMap, AttentionError> {
    let (h, w, c) = (map.height, map.width, map.channels);
    if h % 2 != 0 || w % 2 != 0 {
        return Err(AttentionError::ShapeMismatch(format!(
            "patch merge needs even dims, got {h}x{w}"
        )));
    }
    if merge_weights.len() != 4 * c * 2 * c {
        return Err(AttentionError::ShapeMismatch(format!(
            "merge weights: expected {} values, got {}",
            4 * c * 2 * c,
            merge_weights.len()
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut concat = vec![0.0; oh * ow * 4 * c];
    for y in 0..oh {
        for x in 0..ow {
            let dst = (y * ow + x) * 4 * c;
            let quads = [
                map.token(2 * y, 2 * x),
                map.token(2 * y + 1, 2 * x),
                map.token(2 * y, 2 * x + 1),
                map.token(2 * y + 1, 2 * x + 1),
            ];
            for (qi, quad) in quads.iter().enumerate() {
                concat[dst + qi * c..dst + (qi + 1) * c].copy_from_slice(quad);
            }
        }
    }
    let values = matmul(&concat, merge_weights, oh * ow, 4 * c, 2 * c);
    Ok(FeatureMap {
        height: oh,
        width: ow,
        channels: 2 * c,
        values,
    })
}

/// A named tensor in the flat binary parameter container.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

/// Serializes tensors to the container format: per record a little-endian
/// u32 name length, the UTF-8 name, a u32 rank, u64 dims, then the f64
/// payload.
pub fn write_tensors(tensors: &[NamedTensor]) -> Vec<u8> {
    let mut out = Vec::new();
    for t in tensors {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
        for &d in &t.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_tensors(bytes: &[u8]) -> Result<Vec<NamedTensor>, AttentionError> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8], AttentionError> {
        if *pos + n > bytes.len() {
            return Err(AttentionError::Container(format!(
                "truncated at byte {pos} (wanted {n} more)",
                pos = *pos
            )));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    let mut tensors = Vec::new();
    while pos < bytes.len() {
        let name_len = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(&mut pos, name_len)?.to_vec())
            .map_err(|e| AttentionError::Container(e.to_string()))?;
        let rank = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize);
        }
        let count: usize = dims.iter().product();
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
        }
        tensors.push(NamedTensor { name, dims, data });
    }
    Ok(tensors)
}
