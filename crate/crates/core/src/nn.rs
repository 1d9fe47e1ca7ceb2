//! Unidirectional LSTM and affine layers.
//!
//! Gate blocks in every `4·hidden` tensor are ordered `[input, forget, cell, output]`.
//! Pre-activations are `w_input·x + bias_input + w_recurrent·h + bias_recurrent`;
//! there are no peepholes or projections.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, check_finite, check_len};
use crate::Result;

/// Parameters of one LSTM layer. Matrices are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    input_dim: usize,
    hidden_dim: usize,
    /// `4·hidden × input`
    pub w_input: Vec<f32>,
    /// `4·hidden × hidden`
    pub w_recurrent: Vec<f32>,
    pub bias_input: Vec<f32>,
    pub bias_recurrent: Vec<f32>,
}

/// Hidden and cell vectors of one LSTM layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f32>,
    pub c: Vec<f32>,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        Self { h: vec![0.0; hidden_dim], c: vec![0.0; hidden_dim] }
    }
}

/// States of `batch` independent sequences run through the same layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmBatchState {
    batch: usize,
    /// `batch × hidden`
    pub h: Vec<f32>,
    /// `batch × hidden`
    pub c: Vec<f32>,
}

impl LstmBatchState {
    pub fn zeros(batch: usize, hidden_dim: usize) -> Self {
        Self { batch, h: vec![0.0; batch * hidden_dim], c: vec![0.0; batch * hidden_dim] }
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

impl Lstm {
    pub fn new(
        input_dim: usize,
        hidden_dim: usize,
        w_input: Vec<f32>,
        w_recurrent: Vec<f32>,
        bias_input: Vec<f32>,
        bias_recurrent: Vec<f32>,
    ) -> Result<Self> {
        let layer = Self { input_dim, hidden_dim, w_input, w_recurrent, bias_input, bias_recurrent };
        layer.validate()?;
        Ok(layer)
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let g = 4 * hidden_dim;
        Self {
            input_dim,
            hidden_dim,
            w_input: vec![0.0; g * input_dim],
            w_recurrent: vec![0.0; g * hidden_dim],
            bias_input: vec![0.0; g],
            bias_recurrent: vec![0.0; g],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = 4 * self.hidden_dim;
        check_len("lstm w_input", g * self.input_dim, self.w_input.len())?;
        check_len("lstm w_recurrent", g * self.hidden_dim, self.w_recurrent.len())?;
        check_len("lstm bias_input", g, self.bias_input.len())?;
        check_len("lstm bias_recurrent", g, self.bias_recurrent.len())?;
        check_finite("lstm w_input", &self.w_input)?;
        check_finite("lstm w_recurrent", &self.w_recurrent)?;
        check_finite("lstm bias_input", &self.bias_input)?;
        check_finite("lstm bias_recurrent", &self.bias_recurrent)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn param_count(&self) -> usize {
        self.w_input.len() + self.w_recurrent.len() + self.bias_input.len() + self.bias_recurrent.len()
    }

    /// Advances `state` by one input vector. The new output is `state.h`.
    pub fn step(&self, x: &[f32], state: &mut LstmState) -> Result<()> {
        check_len("lstm input", self.input_dim, x.len())?;
        check_len("lstm state h", self.hidden_dim, state.h.len())?;
        check_len("lstm state c", self.hidden_dim, state.c.len())?;
        check_finite("lstm input", x)?;
        let mut gates = vec![0.0f32; 4 * self.hidden_dim];
        for (r, g) in gates.iter_mut().enumerate() {
            let from_input = dot(&self.w_input[r * self.input_dim..(r + 1) * self.input_dim], x) + self.bias_input[r];
            let from_hidden =
                dot(&self.w_recurrent[r * self.hidden_dim..(r + 1) * self.hidden_dim], &state.h) + self.bias_recurrent[r];
            *g = from_input + from_hidden;
        }
        apply_gates(&gates, &mut state.h, &mut state.c);
        Ok(())
    }

    /// Runs a whole sequence from `state`, returning one output per input.
    pub fn sequence(&self, xs: &[Vec<f32>], state: &mut LstmState) -> Result<Vec<Vec<f32>>> {
        xs.iter()
            .map(|x| {
                self.step(x, state)?;
                Ok(state.h.clone())
            })
            .collect()
    }

    /// Advances `batch` independent sequences by one step. `xs` is `batch × input`.
    ///
    /// Every row goes through the same kernel, so identical rows with identical
    /// states produce identical results regardless of their position.
    pub fn step_batch(&self, xs: &[f32], state: &mut LstmBatchState, gates: &mut Vec<f32>) -> Result<()> {
        let (b, h) = (state.batch, self.hidden_dim);
        check_len("lstm batch input", b * self.input_dim, xs.len())?;
        check_len("lstm batch state h", b * h, state.h.len())?;
        check_finite("lstm batch input", xs)?;
        gates.clear();
        gates.resize(b * 4 * h, 0.0);
        gemm_nt(b, self.input_dim, 4 * h, xs, &self.w_input, gates, false);
        gemm_nt(b, h, 4 * h, &state.h, &self.w_recurrent, gates, true);
        for ((g, hs), cs) in gates.chunks_exact_mut(4 * h).zip(state.h.chunks_exact_mut(h)).zip(state.c.chunks_exact_mut(h)) {
            for ((v, bi), br) in g.iter_mut().zip(&self.bias_input).zip(&self.bias_recurrent) {
                *v += bi + br;
            }
            apply_gates(g, hs, cs);
        }
        Ok(())
    }
}

fn apply_gates(gates: &[f32], h: &mut [f32], c: &mut [f32]) {
    let n = h.len();
    let (i, rest) = gates.split_at(n);
    let (f, rest) = rest.split_at(n);
    let (g, o) = rest.split_at(n);
    for k in 0..n {
        let c_new = sigmoid(f[k]) * c[k] + sigmoid(i[k]) * libm::tanhf(g[k]);
        c[k] = c_new;
        h[k] = sigmoid(o[k]) * libm::tanhf(c_new);
    }
}

#[inline]
pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + libm::expf(-x))
}

/// Affine map `y = weight·x + bias` with `weight` of shape `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    in_dim: usize,
    out_dim: usize,
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Affine {
    pub fn new(in_dim: usize, out_dim: usize, weight: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        let layer = Self { in_dim, out_dim, weight, bias };
        layer.validate()?;
        Ok(layer)
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, weight: vec![0.0; in_dim * out_dim], bias: vec![0.0; out_dim] }
    }

    pub fn validate(&self) -> Result<()> {
        check_len("affine weight", self.in_dim * self.out_dim, self.weight.len())?;
        check_len("affine bias", self.out_dim, self.bias.len())?;
        check_finite("affine weight", &self.weight)?;
        check_finite("affine bias", &self.bias)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn forward(&self, x: &[f32]) -> Result<Vec<f32>> {
        check_len("affine input", self.in_dim, x.len())?;
        Ok(self
            .weight
            .chunks_exact(self.in_dim.max(1))
            .take(self.out_dim)
            .zip(&self.bias)
            .map(|(row, b)| dot(row, x) + b)
            .collect())
    }

    /// Applies the map to each row of `xs` (`batch × in`), returning `batch × out`.
    pub fn forward_batch(&self, xs: &[f32], batch: usize) -> Result<Vec<f32>> {
        check_len("affine batch input", batch * self.in_dim, xs.len())?;
        let mut out = vec![0.0; batch * self.out_dim];
        gemm_nt(batch, self.in_dim, self.out_dim, xs, &self.weight, &mut out, false);
        for row in out.chunks_exact_mut(self.out_dim.max(1)) {
            for (v, b) in row.iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(out)
    }
}

/// Two or more stacked LSTM layers followed by an affine output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStack {
    pub layers: Vec<Lstm>,
    pub affine: Affine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackState {
    pub layers: Vec<LstmState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackBatchState {
    pub layers: Vec<LstmBatchState>,
    gates: Vec<f32>,
}

impl LstmStack {
    pub fn zeros(input_dim: usize, hidden: &[usize], output_dim: usize) -> Self {
        let mut layers = Vec::with_capacity(hidden.len());
        let mut d = input_dim;
        for &h in hidden {
            layers.push(Lstm::zeros(d, h));
            d = h;
        }
        Self { layers, affine: Affine::zeros(d, output_dim) }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(self.affine.in_dim, Lstm::input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.affine.out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Lstm::param_count).sum::<usize>() + self.affine.param_count()
    }

    pub fn validate(&self) -> Result<()> {
        let mut d = self.input_dim();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.validate()?;
            if layer.input_dim != d {
                bail!(Shape, "layer {i} expects input {}, previous layer gives {d}", layer.input_dim);
            }
            d = layer.hidden_dim;
        }
        self.affine.validate()?;
        if self.affine.in_dim != d {
            bail!(Shape, "affine expects input {}, last layer gives {d}", self.affine.in_dim);
        }
        Ok(())
    }

    pub fn initial_state(&self) -> StackState {
        StackState { layers: self.layers.iter().map(|l| LstmState::zeros(l.hidden_dim)).collect() }
    }

    pub fn initial_batch_state(&self, batch: usize) -> StackBatchState {
        StackBatchState {
            layers: self.layers.iter().map(|l| LstmBatchState::zeros(batch, l.hidden_dim)).collect(),
            gates: Vec::new(),
        }
    }

    /// One time step through every layer and the output map.
    pub fn forward(&self, x: &[f32], state: &mut StackState) -> Result<Vec<f32>> {
        if state.layers.len() != self.layers.len() {
            bail!(Contract, "stack has {} layers, state has {}", self.layers.len(), state.layers.len());
        }
        let mut input = x;
        for (layer, s) in self.layers.iter().zip(state.layers.iter_mut()) {
            layer.step(input, s)?;
            input = &s.h;
        }
        self.affine.forward(input)
    }

    /// One time step for each of `batch` independent rows (`xs` is `batch × input`).
    pub fn forward_batch(&self, xs: &[f32], state: &mut StackBatchState) -> Result<Vec<f32>> {
        if state.layers.len() != self.layers.len() {
            bail!(Contract, "stack has {} layers, state has {}", self.layers.len(), state.layers.len());
        }
        let batch = state.layers.first().map_or(xs.len() / self.input_dim().max(1), LstmBatchState::batch);
        let StackBatchState { layers, gates } = state;
        let mut input = xs;
        for (layer, s) in self.layers.iter().zip(layers.iter_mut()) {
            layer.step_batch(input, s, gates)?;
            input = &s.h;
        }
        self.affine.forward_batch(input, batch)
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `c (m×n) [+]= a (m×k) · bᵀ` where `b` is stored row-major as `n × k`.
fn gemm_nt(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32], accumulate: bool) {
    assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the asserts above bound every index the strides can reach.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
