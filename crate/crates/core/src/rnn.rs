//! Sequential GRU sentence scorer.
//!
//! Sentences are visited left to right. Each sentence input is the mean word
//! embedding of its tokens; a single-layer GRU produces a state per sentence,
//! and each sentence is scored from its state with content, salience,
//! novelty (against the probability-weighted running summary) and position
//! terms:
//!
//! ```text
//! logit_j = w_c.h_j + h_j' W_s d - h_j' W_n tanh(s_j) + w_ap a_j + w_rp r_j + b
//! s_j     = sum_{i<j} p_i h_i,    d = tanh(mean_j h_j)
//! ```
//!
//! Gradients are exact (hand-written reverse mode, including the path from
//! every `p_i` through the running summary).

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::summary::{MethodTag, Summary};
use crate::textproc::{sentence_embedding, EmbeddingTable};
use crate::weaklabel::LabeledSentence;

const MODEL_MAGIC: &[u8] = b"PROJSUM-GRU";
const MODEL_VERSION: u32 = 1;

/// Dense row-major matrix. Vectors are `n x 1`, scalars `1 x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn uniform(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Self {
        Matrix {
            rows,
            cols,
            data: (0..rows * cols)
                .map(|_| rng.gen_range(-scale..=scale))
                .collect(),
        }
    }

    /// `M x`
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `M' y`
    pub fn mul_t(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (row, &yi) in self.data.chunks_exact(self.cols).zip(y) {
            if yi != 0.0 {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += a * yi;
                }
            }
        }
        out
    }

    /// `self += scale * a b'`
    pub fn add_outer(&mut self, a: &[f64], b: &[f64], scale: f64) {
        for (row, &ai) in self.data.chunks_exact_mut(self.cols).zip(a) {
            let f = ai * scale;
            if f != 0.0 {
                for (r, bj) in row.iter_mut().zip(b) {
                    *r += f * bj;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &[f64], scale: f64) {
        for (a, b) in self.data.iter_mut().zip(other) {
            *a += scale * b;
        }
    }

    pub fn scalar(&self) -> f64 {
        self.data[0]
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// GRU cell weights: input (`W_*`, `d_h x d_in`), recurrent (`U_*`,
/// `d_h x d_h`) and biases for the update, reset and candidate gates.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub d_in: usize,
    pub d_h: usize,
    pub w_z: Matrix,
    pub w_r: Matrix,
    pub w_h: Matrix,
    pub u_z: Matrix,
    pub u_r: Matrix,
    pub u_h: Matrix,
    pub b_z: Matrix,
    pub b_r: Matrix,
    pub b_h: Matrix,
}

impl GruParams {
    pub fn zeros(d_in: usize, d_h: usize) -> Self {
        GruParams {
            d_in,
            d_h,
            w_z: Matrix::zeros(d_h, d_in),
            w_r: Matrix::zeros(d_h, d_in),
            w_h: Matrix::zeros(d_h, d_in),
            u_z: Matrix::zeros(d_h, d_h),
            u_r: Matrix::zeros(d_h, d_h),
            u_h: Matrix::zeros(d_h, d_h),
            b_z: Matrix::zeros(d_h, 1),
            b_r: Matrix::zeros(d_h, 1),
            b_h: Matrix::zeros(d_h, 1),
        }
    }

    pub fn uniform(d_in: usize, d_h: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let mut p = GruParams::zeros(d_in, d_h);
        for t in p.tensors_mut() {
            *t = Matrix::uniform(t.rows, t.cols, scale, rng);
        }
        p
    }

    pub const NAMES: [&'static str; 9] = [
        "w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h",
    ];

    pub fn tensors(&self) -> [&Matrix; 9] {
        [
            &self.w_z, &self.w_r, &self.w_h, &self.u_z, &self.u_r, &self.u_h, &self.b_z, &self.b_r,
            &self.b_h,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix; 9] {
        [
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }
}

#[derive(Debug, Clone)]
struct GruCache {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    candidate: Vec<f64>,
    h: Vec<f64>,
}

fn gru_forward(p: &GruParams, x: &[f64], h_prev: &[f64]) -> GruCache {
    let d_h = p.d_h;
    let wz = p.w_z.mul(x);
    let uz = p.u_z.mul(h_prev);
    let wr = p.w_r.mul(x);
    let ur = p.u_r.mul(h_prev);
    let z: Vec<f64> = (0..d_h)
        .map(|i| sigmoid(wz[i] + uz[i] + p.b_z.data[i]))
        .collect();
    let r: Vec<f64> = (0..d_h)
        .map(|i| sigmoid(wr[i] + ur[i] + p.b_r.data[i]))
        .collect();
    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
    let wh = p.w_h.mul(x);
    let uh = p.u_h.mul(&rh);
    let candidate: Vec<f64> = (0..d_h)
        .map(|i| (wh[i] + uh[i] + p.b_h.data[i]).tanh())
        .collect();
    let h = (0..d_h)
        .map(|i| (1.0 - z[i]) * h_prev[i] + z[i] * candidate[i])
        .collect();
    GruCache {
        h_prev: h_prev.to_vec(),
        z,
        r,
        candidate,
        h,
    }
}

/// Accumulates parameter gradients into `grads`; returns `(dx, dh_prev)`.
fn gru_backward(
    p: &GruParams,
    x: &[f64],
    c: &GruCache,
    dh: &[f64],
    grads: &mut GruParams,
) -> (Vec<f64>, Vec<f64>) {
    let d_h = p.d_h;
    let mut dh_prev: Vec<f64> = (0..d_h).map(|i| dh[i] * (1.0 - c.z[i])).collect();
    let da_z: Vec<f64> = (0..d_h)
        .map(|i| dh[i] * (c.candidate[i] - c.h_prev[i]) * c.z[i] * (1.0 - c.z[i]))
        .collect();
    let da_h: Vec<f64> = (0..d_h)
        .map(|i| dh[i] * c.z[i] * (1.0 - c.candidate[i] * c.candidate[i]))
        .collect();
    let rh: Vec<f64> = c.r.iter().zip(&c.h_prev).map(|(a, b)| a * b).collect();
    let d_rh = p.u_h.mul_t(&da_h);
    let da_r: Vec<f64> = (0..d_h)
        .map(|i| d_rh[i] * c.h_prev[i] * c.r[i] * (1.0 - c.r[i]))
        .collect();
    for i in 0..d_h {
        dh_prev[i] += d_rh[i] * c.r[i];
    }

    grads.w_h.add_outer(&da_h, x, 1.0);
    grads.u_h.add_outer(&da_h, &rh, 1.0);
    grads.b_h.add_scaled(&da_h, 1.0);
    grads.w_z.add_outer(&da_z, x, 1.0);
    grads.u_z.add_outer(&da_z, &c.h_prev, 1.0);
    grads.b_z.add_scaled(&da_z, 1.0);
    grads.w_r.add_outer(&da_r, x, 1.0);
    grads.u_r.add_outer(&da_r, &c.h_prev, 1.0);
    grads.b_r.add_scaled(&da_r, 1.0);

    for (acc, v) in dh_prev.iter_mut().zip(p.u_z.mul_t(&da_z)) {
        *acc += v;
    }
    for (acc, v) in dh_prev.iter_mut().zip(p.u_r.mul_t(&da_r)) {
        *acc += v;
    }
    let mut dx = p.w_z.mul_t(&da_z);
    for (acc, v) in dx.iter_mut().zip(p.w_r.mul_t(&da_r)) {
        *acc += v;
    }
    for (acc, v) in dx.iter_mut().zip(p.w_h.mul_t(&da_h)) {
        *acc += v;
    }
    (dx, dh_prev)
}

fn check_dims(p: &GruParams, x: &[f64], h_prev: &[f64]) -> Result<()> {
    if x.len() != p.d_in {
        return Err(Error::Dimension {
            expected: p.d_in,
            found: x.len(),
        });
    }
    if h_prev.len() != p.d_h {
        return Err(Error::Dimension {
            expected: p.d_h,
            found: h_prev.len(),
        });
    }
    Ok(())
}

/// One GRU transition:
/// `z = s(W_z x + U_z h + b_z)`, `r = s(W_r x + U_r h + b_r)`,
/// `c = tanh(W_h x + U_h (r*h) + b_h)`, `h' = (1 - z)*h + z*c`.
pub fn gru_step(params: &GruParams, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
    check_dims(params, x, h_prev)?;
    Ok(gru_forward(params, x, h_prev).h)
}

/// Gradients of `upstream . gru_step(params, x, h_prev)`.
#[derive(Debug, Clone)]
pub struct GruStepGradient {
    pub params: GruParams,
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
}

pub fn gru_step_gradient(
    params: &GruParams,
    x: &[f64],
    h_prev: &[f64],
    upstream: &[f64],
) -> Result<GruStepGradient> {
    check_dims(params, x, h_prev)?;
    if upstream.len() != params.d_h {
        return Err(Error::Dimension {
            expected: params.d_h,
            found: upstream.len(),
        });
    }
    let cache = gru_forward(params, x, h_prev);
    let mut grads = GruParams::zeros(params.d_in, params.d_h);
    let (dx, dh_prev) = gru_backward(params, x, &cache, upstream, &mut grads);
    Ok(GruStepGradient {
        params: grads,
        x: dx,
        h_prev: dh_prev,
    })
}

/// All trainable weights: the GRU cell plus the scoring head.
#[derive(Debug, Clone, PartialEq)]
pub struct SummarizerParams {
    pub gru: GruParams,
    /// `1 x d_h`
    pub content: Matrix,
    /// `d_h x d_h`
    pub salience: Matrix,
    /// `d_h x d_h`
    pub novelty: Matrix,
    pub abs_position: Matrix,
    pub rel_position: Matrix,
    pub bias: Matrix,
}

impl SummarizerParams {
    pub const HEAD_NAMES: [&'static str; 6] = [
        "content",
        "salience",
        "novelty",
        "abs_position",
        "rel_position",
        "bias",
    ];

    pub fn zeros(d_in: usize, d_h: usize) -> Self {
        SummarizerParams {
            gru: GruParams::zeros(d_in, d_h),
            content: Matrix::zeros(1, d_h),
            salience: Matrix::zeros(d_h, d_h),
            novelty: Matrix::zeros(d_h, d_h),
            abs_position: Matrix::zeros(1, 1),
            rel_position: Matrix::zeros(1, 1),
            bias: Matrix::zeros(1, 1),
        }
    }

    pub fn uniform(d_in: usize, d_h: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let mut p = SummarizerParams::zeros(d_in, d_h);
        for t in p.tensors_mut() {
            *t = Matrix::uniform(t.rows, t.cols, scale, rng);
        }
        p
    }

    pub fn d_in(&self) -> usize {
        self.gru.d_in
    }

    pub fn d_h(&self) -> usize {
        self.gru.d_h
    }

    pub fn names() -> impl Iterator<Item = &'static str> {
        GruParams::NAMES.into_iter().chain(Self::HEAD_NAMES)
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut v: Vec<&Matrix> = self.gru.tensors().into_iter().collect();
        v.extend([
            &self.content,
            &self.salience,
            &self.novelty,
            &self.abs_position,
            &self.rel_position,
            &self.bias,
        ]);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut v: Vec<&mut Matrix> = self.gru.tensors_mut().into_iter().collect();
        v.extend([
            &mut self.content,
            &mut self.salience,
            &mut self.novelty,
            &mut self.abs_position,
            &mut self.rel_position,
            &mut self.bias,
        ]);
        v
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors()
            .iter()
            .flat_map(|t| t.data.iter().copied())
            .collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.data.len();
            t.data.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.data.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

/// Per-sentence inputs of one document.
#[derive(Debug, Clone)]
pub struct SentenceInputs {
    pub embeddings: Vec<Vec<f64>>,
    /// Normalized position `a_j`.
    pub absolute: Vec<f64>,
    /// `index / n`.
    pub relative: Vec<f64>,
}

impl SentenceInputs {
    pub fn from_document(doc: &Document, table: &EmbeddingTable) -> Self {
        let n = doc.len();
        SentenceInputs {
            embeddings: doc
                .sentences
                .iter()
                .map(|s| sentence_embedding(&s.tokens, table).vector.0)
                .collect(),
            absolute: doc.sentences.iter().map(|s| s.position_norm).collect(),
            relative: doc
                .sentences
                .iter()
                .map(|s| s.index as f64 / n as f64)
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }
}

#[derive(Debug, Clone)]
struct Trace {
    cells: Vec<GruCache>,
    doc_vector: Vec<f64>,
    novelty_inputs: Vec<Vec<f64>>,
    logits: Vec<f64>,
    probs: Vec<f64>,
}

fn forward(p: &SummarizerParams, inputs: &SentenceInputs) -> Trace {
    let d_h = p.d_h();
    let n = inputs.len();
    let mut cells = Vec::with_capacity(n);
    let mut h = vec![0.0; d_h];
    for x in &inputs.embeddings {
        let c = gru_forward(&p.gru, x, &h);
        h = c.h.clone();
        cells.push(c);
    }
    let mut mean = vec![0.0; d_h];
    for c in &cells {
        for (m, v) in mean.iter_mut().zip(&c.h) {
            *m += v;
        }
    }
    let doc_vector: Vec<f64> = mean.iter().map(|m| (m / n as f64).tanh()).collect();
    let salience_d = p.salience.mul(&doc_vector);

    let mut running: Vec<f64> = vec![0.0; d_h];
    let mut novelty_inputs = Vec::with_capacity(n);
    let mut logits = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    for (j, c) in cells.iter().enumerate() {
        let t: Vec<f64> = running.iter().map(|s| s.tanh()).collect();
        let logit = dot(&p.content.data, &c.h) + dot(&c.h, &salience_d)
            - dot(&c.h, &p.novelty.mul(&t))
            + p.abs_position.scalar() * inputs.absolute[j]
            + p.rel_position.scalar() * inputs.relative[j]
            + p.bias.scalar();
        let prob = sigmoid(logit);
        for (s, v) in running.iter_mut().zip(&c.h) {
            *s += prob * v;
        }
        novelty_inputs.push(t);
        logits.push(logit);
        probs.push(prob);
    }
    Trace {
        cells,
        doc_vector,
        novelty_inputs,
        logits,
        probs,
    }
}

fn log_loss(logit: f64, label: f64) -> f64 {
    // -[y log s(l) + (1 - y) log(1 - s(l))] = softplus(l) - y l
    let softplus = if logit > 0.0 {
        logit + (-logit).exp().ln_1p()
    } else {
        logit.exp().ln_1p()
    };
    softplus - label * logit
}

fn weighted_loss(trace: &Trace, labels: &[f64], weight: f64) -> f64 {
    trace
        .logits
        .iter()
        .zip(labels)
        .map(|(&l, &y)| log_loss(l, y))
        .sum::<f64>()
        * weight
}

/// Adds into `grads` the gradient of a scalar whose partial derivative with
/// respect to logit `j`, holding the other logits fixed, is `direct[j]`.
/// The path through the running summary is handled here.
fn backward(
    p: &SummarizerParams,
    inputs: &SentenceInputs,
    trace: &Trace,
    direct: &[f64],
    grads: &mut SummarizerParams,
) {
    let d_h = p.d_h();
    let n = inputs.len();
    let d = &trace.doc_vector;
    let salience_d = p.salience.mul(d);
    let mut d_running = vec![0.0; d_h];
    let mut d_doc = vec![0.0; d_h];
    let mut d_states = vec![vec![0.0; d_h]; n];

    for j in (0..n).rev() {
        let h = &trace.cells[j].h;
        let t = &trace.novelty_inputs[j];
        let prob = trace.probs[j];
        let g = direct[j] + prob * (1.0 - prob) * dot(&d_running, h);

        grads.content.add_scaled(h, g);
        grads.salience.add_outer(h, d, g);
        grads.novelty.add_outer(h, t, -g);
        grads.abs_position.data[0] += g * inputs.absolute[j];
        grads.rel_position.data[0] += g * inputs.relative[j];
        grads.bias.data[0] += g;

        let novelty_t = p.novelty.mul(t);
        let dh = &mut d_states[j];
        for i in 0..d_h {
            dh[i] = g * (p.content.data[i] + salience_d[i] - novelty_t[i]) + prob * d_running[i];
        }
        for (acc, v) in d_doc.iter_mut().zip(p.salience.mul_t(h)) {
            *acc += g * v;
        }
        let dt = p.novelty.mul_t(h);
        for i in 0..d_h {
            d_running[i] += -g * dt[i] * (1.0 - t[i] * t[i]);
        }
    }

    let d_mean: Vec<f64> = (0..d_h)
        .map(|i| d_doc[i] * (1.0 - d[i] * d[i]) / n as f64)
        .collect();
    let mut carry = vec![0.0; d_h];
    for j in (0..n).rev() {
        let dh: Vec<f64> = (0..d_h)
            .map(|i| d_states[j][i] + d_mean[i] + carry[i])
            .collect();
        let (_, dh_prev) = gru_backward(
            &p.gru,
            &inputs.embeddings[j],
            &trace.cells[j],
            &dh,
            &mut grads.gru,
        );
        carry = dh_prev;
    }
}

fn loss_direct(trace: &Trace, labels: &[f64], weight: f64) -> Vec<f64> {
    trace
        .probs
        .iter()
        .zip(labels)
        .map(|(&q, &y)| weight * (q - y))
        .collect()
}

/// Summed log-loss of one document and its gradient.
pub fn document_loss_gradient(
    p: &SummarizerParams,
    inputs: &SentenceInputs,
    labels: &[f64],
) -> (f64, SummarizerParams) {
    let trace = forward(p, inputs);
    let mut grads = SummarizerParams::zeros(p.d_in(), p.d_h());
    backward(
        p,
        inputs,
        &trace,
        &loss_direct(&trace, labels, 1.0),
        &mut grads,
    );
    (weighted_loss(&trace, labels, 1.0), grads)
}

pub fn document_loss(p: &SummarizerParams, inputs: &SentenceInputs, labels: &[f64]) -> f64 {
    let trace = forward(p, inputs);
    trace
        .logits
        .iter()
        .zip(labels)
        .map(|(&l, &y)| log_loss(l, y))
        .sum()
}

/// Probabilities for raw inputs.
pub fn score_inputs(p: &SummarizerParams, inputs: &SentenceInputs) -> Vec<f64> {
    forward(p, inputs).probs
}

/// Gradient of `sum_j upstream[j] * p_j` with respect to every weight.
pub fn score_gradient(
    p: &SummarizerParams,
    inputs: &SentenceInputs,
    upstream: &[f64],
) -> Result<SummarizerParams> {
    if upstream.len() != inputs.len() {
        return Err(Error::LengthMismatch {
            left: inputs.len(),
            right: upstream.len(),
        });
    }
    let trace = forward(p, inputs);
    let direct: Vec<f64> = trace
        .probs
        .iter()
        .zip(upstream)
        .map(|(&q, &u)| u * q * (1.0 - q))
        .collect();
    let mut grads = SummarizerParams::zeros(p.d_in(), p.d_h());
    backward(p, inputs, &trace, &direct, &mut grads);
    Ok(grads)
}

/// Mean per-sentence log-loss over a batch and its gradient.
pub fn batch_loss_gradient(
    p: &SummarizerParams,
    batch: &[(&SentenceInputs, &[f64])],
) -> (f64, SummarizerParams) {
    let total: usize = batch.iter().map(|(i, _)| i.len()).sum();
    let mut grads = SummarizerParams::zeros(p.d_in(), p.d_h());
    if total == 0 {
        return (0.0, grads);
    }
    let weight = 1.0 / total as f64;
    let mut loss = 0.0;
    for (inputs, labels) in batch {
        let trace = forward(p, inputs);
        backward(
            p,
            inputs,
            &trace,
            &loss_direct(&trace, labels, weight),
            &mut grads,
        );
        loss += weighted_loss(&trace, labels, weight);
    }
    (loss, grads)
}

pub fn batch_loss(p: &SummarizerParams, batch: &[(&SentenceInputs, &[f64])]) -> f64 {
    let total: usize = batch.iter().map(|(i, _)| i.len()).sum();
    if total == 0 {
        return 0.0;
    }
    batch
        .iter()
        .map(|(i, l)| document_loss(p, i, l))
        .sum::<f64>()
        / total as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RnnConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for RnnConfig {
    fn default() -> Self {
        RnnConfig {
            hidden: 32,
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 4,
            init_scale: 0.08,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingBatchReport {
    pub epoch: usize,
    pub mean_loss: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone)]
pub struct GruSummarizerModel {
    pub embeddings: Arc<EmbeddingTable>,
    pub params: SummarizerParams,
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
}

/// Per-sentence binary targets (1.0 in summary, 0.0 outside) for a document.
#[derive(Debug, Clone)]
pub struct LabeledDocument {
    pub doc: Document,
    pub labels: Vec<f64>,
}

/// Pairs documents with their weak labels. Documents without a label for
/// every sentence are dropped.
pub fn attach_binary_labels(docs: &[Document], labels: &[LabeledSentence]) -> Vec<LabeledDocument> {
    use std::collections::HashMap;
    let mut by_doc: HashMap<&str, Vec<Option<f64>>> = HashMap::new();
    for d in docs {
        by_doc.insert(d.project_id.as_str(), vec![None; d.len()]);
    }
    for l in labels {
        if let Some(slots) = by_doc.get_mut(l.project_id.as_str()) {
            if let Some(slot) = slots.get_mut(l.sentence_index) {
                *slot = Some(if l.is_in_summary() { 1.0 } else { 0.0 });
            }
        }
    }
    docs.iter()
        .filter(|d| !d.is_empty())
        .filter_map(|d| {
            let slots = &by_doc[d.project_id.as_str()];
            let labels: Option<Vec<f64>> = slots.iter().copied().collect();
            labels.map(|labels| LabeledDocument {
                doc: d.clone(),
                labels,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainedRnn {
    pub model: GruSummarizerModel,
    pub reports: Vec<TrainingBatchReport>,
}

/// Mini-batch gradient descent on mean binary cross-entropy, with a seeded
/// shuffle of documents every epoch.
pub fn train_rnn(
    corpus: &[LabeledDocument],
    embeddings: Arc<EmbeddingTable>,
    cfg: RnnConfig,
) -> Result<TrainedRnn> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    for d in corpus {
        if d.labels.len() != d.doc.len() {
            return Err(Error::LengthMismatch {
                left: d.labels.len(),
                right: d.doc.len(),
            });
        }
    }
    let labels = corpus.iter().flat_map(|d| d.labels.iter());
    let (pos, total) = labels.fold((0usize, 0usize), |(p, t), &y| {
        (p + (y > 0.5) as usize, t + 1)
    });
    if pos == 0 || pos == total {
        return Err(Error::SingleClass);
    }
    if cfg.hidden == 0 || cfg.batch_size == 0 {
        return Err(Error::Config(
            "hidden size and batch size must be positive".into(),
        ));
    }

    let inputs: Vec<SentenceInputs> = corpus
        .iter()
        .map(|d| SentenceInputs::from_document(&d.doc, &embeddings))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params =
        SummarizerParams::uniform(embeddings.dimension(), cfg.hidden, cfg.init_scale, &mut rng);
    let mut order: Vec<usize> = (0..corpus.len())
        .filter(|&i| !inputs[i].is_empty())
        .collect();
    let mut reports = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut sentences = 0usize;
        let mut grad_norm_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&SentenceInputs, &[f64])> = chunk
                .iter()
                .map(|&i| (&inputs[i], corpus[i].labels.as_slice()))
                .collect();
            let n: usize = batch.iter().map(|(i, _)| i.len()).sum();
            let (loss, grads) = batch_loss_gradient(&params, &batch);
            loss_sum += loss * n as f64;
            sentences += n;
            grad_norm_sum += grads.norm();
            batches += 1;
            for (t, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
                t.add_scaled(&g.data, -cfg.learning_rate);
            }
        }
        let report = TrainingBatchReport {
            epoch,
            mean_loss: loss_sum / sentences.max(1) as f64,
            gradient_norm: grad_norm_sum / batches.max(1) as f64,
        };
        log::debug!(
            "rnn epoch {epoch}: loss {:.6}, |grad| {:.6}",
            report.mean_loss,
            report.gradient_norm
        );
        reports.push(report);
    }

    Ok(TrainedRnn {
        model: GruSummarizerModel {
            embeddings,
            params,
            seed: cfg.seed,
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
        },
        reports,
    })
}

/// Hidden states per sentence and the pooled document vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDocument {
    pub states: Vec<Vec<f64>>,
    pub doc_vector: Vec<f64>,
}

pub fn encode_document(model: &GruSummarizerModel, doc: &Document) -> Result<EncodedDocument> {
    if doc.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let inputs = SentenceInputs::from_document(doc, &model.embeddings);
    let trace = forward(&model.params, &inputs);
    Ok(EncodedDocument {
        states: trace.cells.into_iter().map(|c| c.h).collect(),
        doc_vector: trace.doc_vector,
    })
}

pub fn score_sentences(model: &GruSummarizerModel, doc: &Document) -> Result<Vec<f64>> {
    if doc.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let inputs = SentenceInputs::from_document(doc, &model.embeddings);
    Ok(score_inputs(&model.params, &inputs))
}

/// Greedy selection by descending probability (ties to the lower index):
/// a sentence is taken if the running word count stays within
/// `budget * total`. At least one sentence is always taken. Returns indices
/// in document order.
pub fn select_within_budget(probs: &[f64], lengths: &[usize], budget: f64) -> Vec<usize> {
    if probs.is_empty() {
        return Vec::new();
    }
    let total: usize = lengths.iter().sum();
    let limit = budget * total as f64;
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let mut chosen = Vec::new();
    let mut words = 0usize;
    for &i in &order {
        if (words + lengths[i]) as f64 <= limit {
            words += lengths[i];
            chosen.push(i);
        }
    }
    if chosen.is_empty() {
        chosen.push(order[0]);
    }
    chosen.sort_unstable();
    chosen
}

pub fn summarize_rnn(model: &GruSummarizerModel, doc: &Document, budget: f64) -> Result<Summary> {
    let probs = score_sentences(model, doc)?;
    let lengths: Vec<usize> = doc.sentences.iter().map(|s| s.tokens.len()).collect();
    let indices = select_within_budget(&probs, &lengths, budget);
    Ok(Summary::from_indices(doc, indices, MethodTag::Rnn))
}

impl GruSummarizerModel {
    /// Binary layout, all integers and reals little-endian: magic, version,
    /// `d_in`, `d_h`, embedding fingerprint, seed, epochs, learning rate,
    /// tensor count, then per tensor its name, rows, cols and row-major data.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.params.d_in() as u32).to_le_bytes());
        out.extend_from_slice(&(self.params.d_h() as u32).to_le_bytes());
        out.extend_from_slice(&self.embeddings.fingerprint().to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.epochs as u32).to_le_bytes());
        out.extend_from_slice(&self.learning_rate.to_le_bytes());
        let tensors = self.params.tensors();
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, t) in SummarizerParams::names().zip(tensors) {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rows as u32).to_le_bytes());
            out.extend_from_slice(&(t.cols as u32).to_le_bytes());
            for x in &t.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], embeddings: Arc<EmbeddingTable>) -> Result<Self> {
        let mut r = Cursor::new(bytes);
        let truncated = |_| Error::format(0, "truncated model file");
        let mut magic = vec![0u8; MODEL_MAGIC.len()];
        r.read_exact(&mut magic).map_err(truncated)?;
        if magic != MODEL_MAGIC {
            return Err(Error::format(0, "not a GRU model file"));
        }
        let u32_ = |r: &mut Cursor<&[u8]>| -> Result<u32> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b).map_err(truncated)?;
            Ok(u32::from_le_bytes(b))
        };
        let u64_ = |r: &mut Cursor<&[u8]>| -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(truncated)?;
            Ok(u64::from_le_bytes(b))
        };
        let version = u32_(&mut r)?;
        if version != MODEL_VERSION {
            return Err(Error::format(
                0,
                format!("unsupported model version {version}"),
            ));
        }
        let d_in = u32_(&mut r)? as usize;
        let d_h = u32_(&mut r)? as usize;
        let fingerprint = u64_(&mut r)?;
        if fingerprint != embeddings.fingerprint() {
            return Err(Error::ModelMismatch {
                model: fingerprint,
                input: embeddings.fingerprint(),
            });
        }
        if d_in != embeddings.dimension() {
            return Err(Error::Dimension {
                expected: embeddings.dimension(),
                found: d_in,
            });
        }
        let seed = u64_(&mut r)?;
        let epochs = u32_(&mut r)? as usize;
        let learning_rate = f64::from_bits(u64_(&mut r)?);
        let count = u32_(&mut r)? as usize;
        let mut params = SummarizerParams::zeros(d_in, d_h);
        let names: Vec<&str> = SummarizerParams::names().collect();
        if count != names.len() {
            return Err(Error::format(
                0,
                format!("expected {} tensors, found {count}", names.len()),
            ));
        }
        for (expected_name, t) in names.into_iter().zip(params.tensors_mut()) {
            let len = u32_(&mut r)? as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name).map_err(truncated)?;
            if name != expected_name.as_bytes() {
                return Err(Error::format(0, format!("expected tensor {expected_name}")));
            }
            let rows = u32_(&mut r)? as usize;
            let cols = u32_(&mut r)? as usize;
            if (rows, cols) != (t.rows, t.cols) {
                return Err(Error::format(
                    0,
                    format!(
                        "tensor {expected_name} has shape {rows}x{cols}, expected {}x{}",
                        t.rows, t.cols
                    ),
                ));
            }
            for x in t.data.iter_mut() {
                *x = f64::from_bits(u64_(&mut r)?);
                if !x.is_finite() {
                    return Err(Error::format(
                        0,
                        format!("non-finite value in {expected_name}"),
                    ));
                }
            }
        }
        if (r.position() as usize) != bytes.len() {
            return Err(Error::format(0, "trailing bytes after model"));
        }
        Ok(GruSummarizerModel {
            embeddings,
            params,
            seed,
            epochs,
            learning_rate,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, embeddings: Arc<EmbeddingTable>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        GruSummarizerModel::from_bytes(&bytes, embeddings)
    }
}
