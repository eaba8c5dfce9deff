use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ForecastError, Mode, NetworkSpec, Result};

/// Parameters of one LSTM direction. Gate blocks are stacked in the order
/// input, forget, candidate, output; matrices are row-major with `4 * units`
/// rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub input_dim: usize,
    pub units: usize,
    /// Input-to-hidden weights, `4u x input_dim`.
    pub w: Vec<f64>,
    /// Hidden-to-hidden weights, `4u x u`.
    pub u: Vec<f64>,
    pub b: Vec<f64>,
}

impl CellParams {
    pub fn zeros(input_dim: usize, units: usize) -> Self {
        Self { input_dim, units, w: vec![0.0; 4 * units * input_dim], u: vec![0.0; 4 * units * units], b: vec![0.0; 4 * units] }
    }

    /// Glorot-uniform weights, zero biases except the forget gate at 1.
    pub fn init<R: Rng>(input_dim: usize, units: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_dim, units);
        let lim_w = (6.0 / (input_dim + 4 * units) as f64).sqrt();
        let lim_u = (6.0 / (5 * units) as f64).sqrt();
        p.w.iter_mut().for_each(|v| *v = rng.random_range(-lim_w..lim_w));
        p.u.iter_mut().for_each(|v| *v = rng.random_range(-lim_u..lim_u));
        p.b[units..2 * units].iter_mut().for_each(|v| *v = 1.0);
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub forward: CellParams,
    /// Present in bidirectional mode only.
    pub backward: Option<CellParams>,
}

impl LayerParams {
    pub fn output_dim(&self) -> usize {
        self.forward.units * if self.backward.is_some() { 2 } else { 1 }
    }
}

/// Affine read-out from the last step's features to a scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub w: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layers: Vec<LayerParams>,
    pub head: HeadParams,
}

/// Named view of one parameter tensor.
pub struct Tensor<'a> {
    pub name: String,
    pub shape: (usize, usize),
    pub data: &'a [f64],
    /// Weights are penalised by L2; biases are not.
    pub is_weight: bool,
}

impl NetworkParams {
    pub fn init<R: Rng>(spec: &NetworkSpec, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(spec.num_layers);
        let mut dim = spec.input_dim;
        for _ in 0..spec.num_layers {
            let forward = CellParams::init(dim, spec.units, rng);
            let backward = (spec.mode == Mode::Bilstm).then(|| CellParams::init(dim, spec.units, rng));
            let layer = LayerParams { forward, backward };
            dim = layer.output_dim();
            layers.push(layer);
        }
        let lim = (6.0 / (dim + 1) as f64).sqrt();
        let head = HeadParams { w: (0..dim).map(|_| rng.random_range(-lim..lim)).collect(), b: 0.0 };
        Self { layers, head }
    }

    /// Structure for `spec` with every entry zero.
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let mut layers = Vec::with_capacity(spec.num_layers);
        let mut dim = spec.input_dim;
        for _ in 0..spec.num_layers {
            let forward = CellParams::zeros(dim, spec.units);
            let backward = (spec.mode == Mode::Bilstm).then(|| CellParams::zeros(dim, spec.units));
            let layer = LayerParams { forward, backward };
            dim = layer.output_dim();
            layers.push(layer);
        }
        Self { layers, head: HeadParams { w: vec![0.0; dim], b: 0.0 } }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |c: &CellParams| CellParams::zeros(c.input_dim, c.units);
        Self {
            layers: self.layers.iter().map(|l| LayerParams { forward: z(&l.forward), backward: l.backward.as_ref().map(z) }).collect(),
            head: HeadParams { w: vec![0.0; self.head.w.len()], b: 0.0 },
        }
    }

    /// All tensors in canonical order: per layer forward (w, u, b), then
    /// backward (w, u, b), then the head weights and bias.
    pub fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            for (dir, cell) in [("forward", Some(&layer.forward)), ("backward", layer.backward.as_ref())] {
                let Some(c) = cell else { continue };
                let rows = 4 * c.units;
                out.push(Tensor { name: format!("layer{l}.{dir}.w"), shape: (rows, c.input_dim), data: &c.w, is_weight: true });
                out.push(Tensor { name: format!("layer{l}.{dir}.u"), shape: (rows, c.units), data: &c.u, is_weight: true });
                out.push(Tensor { name: format!("layer{l}.{dir}.b"), shape: (rows, 1), data: &c.b, is_weight: false });
            }
        }
        out.push(Tensor { name: "head.w".into(), shape: (1, self.head.w.len()), data: &self.head.w, is_weight: true });
        out.push(Tensor { name: "head.b".into(), shape: (1, 1), data: std::slice::from_ref(&self.head.b), is_weight: false });
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            let LayerParams { forward, backward } = layer;
            for c in std::iter::once(forward).chain(backward.as_mut()) {
                out.push(&mut c.w);
                out.push(&mut c.u);
                out.push(&mut c.b);
            }
        }
        out.push(&mut self.head.w);
        out.push(std::slice::from_mut(&mut self.head.b));
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.data.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut k = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[k..k + t.len()]);
            k += t.len();
        }
        assert_eq!(k, flat.len(), "flat parameter length mismatch");
    }

    /// Mask over the flat vector: true where the entry is a weight.
    pub fn weight_mask(&self) -> Vec<bool> {
        self.tensors().iter().flat_map(|t| std::iter::repeat_n(t.is_weight, t.data.len())).collect()
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_sq_norm(&self) -> f64 {
        self.tensors().iter().filter(|t| t.is_weight).flat_map(|t| t.data.iter()).map(|v| v * v).sum()
    }

    /// Overwrite from `other`; shapes must match.
    pub fn copy_from(&mut self, other: &NetworkParams) {
        self.set_flat(&other.to_flat());
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Activations of one time step, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates `[i, f, g, o]`, length `4u`.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    pub(crate) h: Vec<f64>,
    pub(crate) c: Vec<f64>,
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(ForecastError::ShapeMismatch { expected, got });
    }
    Ok(())
}

fn step(x: &[f64], h_prev: &[f64], c_prev: &[f64], p: &CellParams) -> StepCache {
    let (n, d) = (p.units, p.input_dim);
    let mut z = p.b.clone();
    for (r, zr) in z.iter_mut().enumerate() {
        let wr = &p.w[r * d..(r + 1) * d];
        let ur = &p.u[r * n..(r + 1) * n];
        *zr += wr.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + ur.iter().zip(h_prev).map(|(a, b)| a * b).sum::<f64>();
    }
    let mut gates = z;
    for (k, g) in gates.iter_mut().enumerate() {
        *g = if (2 * n..3 * n).contains(&k) { g.tanh() } else { sigmoid(*g) };
    }
    let mut c = vec![0.0; n];
    let mut tanh_c = vec![0.0; n];
    let mut h = vec![0.0; n];
    for j in 0..n {
        c[j] = gates[n + j] * c_prev[j] + gates[j] * gates[2 * n + j];
        tanh_c[j] = c[j].tanh();
        h[j] = gates[3 * n + j] * tanh_c[j];
    }
    StepCache { x: x.to_vec(), h_prev: h_prev.to_vec(), c_prev: c_prev.to_vec(), gates, tanh_c, h, c }
}

/// One LSTM step: returns the new hidden and cell states.
pub fn forward_cell(x: &[f64], h_prev: &[f64], c_prev: &[f64], p: &CellParams) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(p.input_dim, x.len())?;
    check_len(p.units, h_prev.len())?;
    check_len(p.units, c_prev.len())?;
    check_len(4 * p.units * p.input_dim, p.w.len())?;
    check_len(4 * p.units * p.units, p.u.len())?;
    check_len(4 * p.units, p.b.len())?;
    let s = step(x, h_prev, c_prev, p);
    Ok((s.h, s.c))
}

/// Runs a direction over `xs` in the given order from zero state.
pub(crate) fn run_direction<'a>(xs: impl Iterator<Item = &'a [f64]>, p: &CellParams) -> Vec<StepCache> {
    let mut h = vec![0.0; p.units];
    let mut c = vec![0.0; p.units];
    let mut out = Vec::new();
    for x in xs {
        let s = step(x, &h, &c, p);
        h.clone_from(&s.h);
        c.clone_from(&s.c);
        out.push(s);
    }
    out
}

/// Backpropagates through a direction. `dh[k]` is the loss gradient with
/// respect to the hidden state at processing step `k`. Accumulates into
/// `grad` and returns input gradients in processing order.
pub(crate) fn backprop_direction(caches: &[StepCache], dh: &[Vec<f64>], p: &CellParams, grad: &mut CellParams) -> Vec<Vec<f64>> {
    let (n, d) = (p.units, p.input_dim);
    let mut dh_next = vec![0.0; n];
    let mut dc_next = vec![0.0; n];
    let mut dxs = vec![Vec::new(); caches.len()];
    let mut dz = vec![0.0; 4 * n];
    for k in (0..caches.len()).rev() {
        let s = &caches[k];
        let g = &s.gates;
        for j in 0..n {
            let dhj = dh[k][j] + dh_next[j];
            let (i, f, gg, o) = (g[j], g[n + j], g[2 * n + j], g[3 * n + j]);
            let dc = dc_next[j] + dhj * o * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
            dz[j] = dc * gg * i * (1.0 - i);
            dz[n + j] = dc * s.c_prev[j] * f * (1.0 - f);
            dz[2 * n + j] = dc * i * (1.0 - gg * gg);
            dz[3 * n + j] = dhj * s.tanh_c[j] * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        let mut dx = vec![0.0; d];
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        for (r, &dzr) in dz.iter().enumerate() {
            if dzr == 0.0 {
                continue;
            }
            grad.b[r] += dzr;
            let (wr, gwr) = (&p.w[r * d..(r + 1) * d], &mut grad.w[r * d..(r + 1) * d]);
            for q in 0..d {
                gwr[q] += dzr * s.x[q];
                dx[q] += dzr * wr[q];
            }
            let (ur, gur) = (&p.u[r * n..(r + 1) * n], &mut grad.u[r * n..(r + 1) * n]);
            for q in 0..n {
                gur[q] += dzr * s.h_prev[q];
                dh_next[q] += dzr * ur[q];
            }
        }
        dxs[k] = dx;
    }
    dxs
}

/// Layer cache: per-direction step caches in processing order.
pub(crate) struct LayerCache {
    fwd: Vec<StepCache>,
    bwd: Option<Vec<StepCache>>,
}

pub(crate) fn layer_forward(xs: &[Vec<f64>], layer: &LayerParams) -> (Vec<Vec<f64>>, LayerCache) {
    let fwd = run_direction(xs.iter().map(Vec::as_slice), &layer.forward);
    let bwd = layer.backward.as_ref().map(|p| run_direction(xs.iter().rev().map(Vec::as_slice), p));
    let m = xs.len();
    let out = (0..m)
        .map(|t| {
            let mut y = fwd[t].h.clone();
            if let Some(b) = &bwd {
                y.extend_from_slice(&b[m - 1 - t].h);
            }
            y
        })
        .collect();
    (out, LayerCache { fwd, bwd })
}

/// Given output gradients per time step, accumulates parameter gradients
/// and returns input gradients per time step.
pub(crate) fn layer_backward(dy: &[Vec<f64>], cache: &LayerCache, layer: &LayerParams, grad: &mut LayerParams) -> Vec<Vec<f64>> {
    let n = layer.forward.units;
    let m = dy.len();
    let dh_f: Vec<Vec<f64>> = dy.iter().map(|g| g[..n].to_vec()).collect();
    let mut dx = backprop_direction(&cache.fwd, &dh_f, &layer.forward, &mut grad.forward);
    if let (Some(bc), Some(bp), Some(bg)) = (&cache.bwd, &layer.backward, grad.backward.as_mut()) {
        let dh_b: Vec<Vec<f64>> = (0..m).map(|k| dy[m - 1 - k][n..].to_vec()).collect();
        let dxb = backprop_direction(bc, &dh_b, bp, bg);
        for k in 0..m {
            for (a, b) in dx[m - 1 - k].iter_mut().zip(&dxb[k]) {
                *a += b;
            }
        }
    }
    dx
}

/// Per-step outputs of one (bi)directional layer: `[h_forward, h_backward]`
/// in bidirectional mode, `h_forward` otherwise.
pub fn forward_bilayer(xs: &[Vec<f64>], layer: &LayerParams) -> Result<Vec<Vec<f64>>> {
    if xs.is_empty() {
        return Err(ForecastError::ShapeMismatch { expected: 1, got: 0 });
    }
    for x in xs {
        check_len(layer.forward.input_dim, x.len())?;
    }
    Ok(layer_forward(xs, layer).0)
}

/// Full forward pass to a scalar. With `dropout = Some((rate, rng))`, each
/// layer's output is dropped with inverted scaling; otherwise the pass is
/// deterministic.
pub fn forward_stacked<R: Rng>(xs: &[Vec<f64>], params: &NetworkParams, dropout: Option<(f64, &mut R)>) -> Result<f64> {
    if xs.is_empty() {
        return Err(ForecastError::ShapeMismatch { expected: 1, got: 0 });
    }
    let d0 = params.layers.first().map_or(0, |l| l.forward.input_dim);
    for x in xs {
        check_len(d0, x.len())?;
    }
    Ok(sample_pass(xs, params, dropout, None))
}

/// Shared forward (and optionally backward) pass for one window. When
/// `backward` is given as `(dloss_dpred_fn, grad)`, gradients for this
/// sample are accumulated into `grad`.
pub(crate) fn sample_pass<R: Rng>(
    xs: &[Vec<f64>],
    params: &NetworkParams,
    mut dropout: Option<(f64, &mut R)>,
    backward: Option<(&dyn Fn(f64) -> f64, &mut NetworkParams)>,
) -> f64 {
    let mut caches = Vec::with_capacity(params.layers.len());
    let mut masks: Vec<Option<Vec<Vec<f64>>>> = Vec::with_capacity(params.layers.len());
    let mut cur: Vec<Vec<f64>> = xs.to_vec();
    for layer in &params.layers {
        let (mut out, cache) = layer_forward(&cur, layer);
        let mask = match dropout.as_mut() {
            Some((rate, rng)) if *rate > 0.0 => {
                let keep = 1.0 - *rate;
                let mask: Vec<Vec<f64>> =
                    out.iter().map(|y| y.iter().map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect()).collect();
                for (y, m) in out.iter_mut().zip(&mask) {
                    y.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
                }
                Some(mask)
            }
            _ => None,
        };
        caches.push(cache);
        masks.push(mask);
        cur = out;
    }
    let last = cur.last().expect("nonempty sequence");
    let pred = params.head.b + params.head.w.iter().zip(last).map(|(a, b)| a * b).sum::<f64>();

    if let Some((dloss, grad)) = backward {
        let g = dloss(pred);
        grad.head.b += g;
        let m = cur.len();
        let mut dy: Vec<Vec<f64>> = vec![vec![0.0; last.len()]; m];
        for (k, (gw, &w)) in grad.head.w.iter_mut().zip(&params.head.w).enumerate() {
            *gw += g * last[k];
            dy[m - 1][k] = g * w;
        }
        for l in (0..params.layers.len()).rev() {
            if let Some(mask) = &masks[l] {
                for (d, mk) in dy.iter_mut().zip(mask) {
                    d.iter_mut().zip(mk).for_each(|(a, b)| *a *= b);
                }
            }
            dy = layer_backward(&dy, &caches[l], &params.layers[l], &mut grad.layers[l]);
        }
    }
    pred
}
