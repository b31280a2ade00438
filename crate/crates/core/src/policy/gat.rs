//! GATv2 attention layer.
//!
//! For node `i` and every `j` in its aggregation set (incoming neighbours
//! plus `i` itself) each head scores
//! `a · LeakyReLU(Θ_s x_i + Θ_t x_j)`, normalizes the scores with a softmax
//! over the set, and aggregates `Σ α_ij Θ_t x_j`. The head bias is added
//! after aggregation and the activation applied last.

use crate::error::GnnError;
use crate::num::Real;

pub const LEAKY_SLOPE: f64 = 0.2;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).fold(T::zero(), |acc, (&w, &v)| acc + w * v))
            .collect()
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams<T> {
    /// Applied to the aggregating node.
    pub theta_s: Matrix<T>,
    /// Applied to the neighbour, both in the score and in the message.
    pub theta_t: Matrix<T>,
    pub att: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> HeadParams<T> {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            theta_s: Matrix::zeros(out_dim, in_dim),
            theta_t: Matrix::zeros(out_dim, in_dim),
            att: vec![T::zero(); out_dim],
            bias: vec![T::zero(); out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.theta_t.cols
    }

    pub fn out_dim(&self) -> usize {
        self.theta_t.rows
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U + Copy) -> HeadParams<U> {
        HeadParams {
            theta_s: self.theta_s.map(f),
            theta_t: self.theta_t.map(f),
            att: self.att.iter().map(|&v| f(v)).collect(),
            bias: self.bias.iter().map(|&v| f(v)).collect(),
        }
    }

    fn check(&self) -> Result<(), GnnError> {
        let (o, i) = (self.out_dim(), self.in_dim());
        if self.theta_s.rows != o
            || self.theta_s.cols != i
            || self.att.len() != o
            || self.bias.len() != o
        {
            return Err(GnnError::Dimension("inconsistent head parameter shapes".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// Incoming aggregation set per node: the node itself first, then its
/// distinct in-neighbours in ascending order.
pub fn aggregation_sets(nodes: usize, edges: &[(usize, usize)]) -> Result<Vec<Vec<usize>>, GnnError> {
    let mut sets: Vec<Vec<usize>> = (0..nodes).map(|i| vec![i]).collect();
    for &(src, dst) in edges {
        if src >= nodes || dst >= nodes {
            return Err(GnnError::BadEdge { src, dst, nodes });
        }
        if src != dst {
            sets[dst].push(src);
        }
    }
    for set in &mut sets {
        set[1..].sort_unstable();
        set.dedup();
    }
    Ok(sets)
}

fn leaky_relu<T: Real>(x: T) -> T {
    if x >= T::zero() {
        x
    } else {
        x * T::lit(LEAKY_SLOPE)
    }
}

/// Attention coefficients of one head: `alpha[i]` is aligned with `sets[i]`.
fn head_attention<T: Real>(
    source: &[Vec<T>],
    target: &[Vec<T>],
    att: &[T],
    sets: &[Vec<usize>],
) -> Vec<Vec<T>> {
    sets.iter()
        .enumerate()
        .map(|(i, set)| {
            let scores: Vec<T> = set
                .iter()
                .map(|&j| {
                    source[i]
                        .iter()
                        .zip(&target[j])
                        .zip(att)
                        .fold(T::zero(), |acc, ((&s, &t), &a)| acc + a * leaky_relu(s + t))
                })
                .collect();
            softmax(&scores)
        })
        .collect()
}

pub fn softmax<T: Real>(scores: &[T]) -> Vec<T> {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / total).collect()
}

/// Output of a layer together with the per-head attention coefficients.
#[derive(Debug, Clone)]
pub struct LayerTrace<T> {
    pub output: Vec<Vec<T>>,
    pub sets: Vec<Vec<usize>>,
    /// `attention[h][i]` aligned with `sets[i]`.
    pub attention: Vec<Vec<Vec<T>>>,
}

pub fn gatv2_layer<T: Real>(
    features: &[Vec<T>],
    edges: &[(usize, usize)],
    heads: &[HeadParams<T>],
    concat: bool,
    activation: Activation,
) -> Result<Vec<Vec<T>>, GnnError> {
    gatv2_layer_traced(features, edges, heads, concat, activation).map(|t| t.output)
}

pub fn gatv2_layer_traced<T: Real>(
    features: &[Vec<T>],
    edges: &[(usize, usize)],
    heads: &[HeadParams<T>],
    concat: bool,
    activation: Activation,
) -> Result<LayerTrace<T>, GnnError> {
    let first = heads.first().ok_or_else(|| GnnError::Dimension("layer has no heads".into()))?;
    for h in heads {
        h.check()?;
        if h.in_dim() != first.in_dim() || h.out_dim() != first.out_dim() {
            return Err(GnnError::Dimension("heads disagree on shape".into()));
        }
    }
    if let Some((node, x)) = features.iter().enumerate().find(|(_, x)| x.len() != first.in_dim()) {
        return Err(GnnError::Dimension(format!(
            "node {node} has {} features, layer expects {}",
            x.len(),
            first.in_dim()
        )));
    }
    let n = features.len();
    let sets = aggregation_sets(n, edges)?;
    let out_dim = first.out_dim();
    let width = if concat { out_dim * heads.len() } else { out_dim };
    let mut output = vec![vec![T::zero(); width]; n];
    let mut attention = Vec::with_capacity(heads.len());

    for (h, head) in heads.iter().enumerate() {
        let source: Vec<Vec<T>> = features.iter().map(|x| head.theta_s.mul_vec(x)).collect();
        let target: Vec<Vec<T>> = features.iter().map(|x| head.theta_t.mul_vec(x)).collect();
        let alpha = head_attention(&source, &target, &head.att, &sets);
        let offset = if concat { h * out_dim } else { 0 };
        for i in 0..n {
            for d in 0..out_dim {
                let agg = sets[i]
                    .iter()
                    .zip(&alpha[i])
                    .fold(T::zero(), |acc, (&j, &a)| acc + a * target[j][d]);
                output[i][offset + d] = output[i][offset + d] + agg + head.bias[d];
            }
        }
        attention.push(alpha);
    }

    for (i, row) in output.iter_mut().enumerate() {
        for v in row.iter_mut() {
            if !v.is_finite() {
                return Err(GnnError::NonFinite { node: i });
            }
            if activation == Activation::Relu {
                *v = v.max(T::zero());
            }
        }
    }
    Ok(LayerTrace { output, sets, attention })
}
