use std::collections::HashMap;

use crate::tensor::{matmul_nn, matmul_nt, matmul_tn};
use crate::{NumericsError, ParamId, ParamStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(usize, usize),
    /// a · bᵀ
    MatMulNt(usize, usize),
    /// x [n×m] plus a bias vector [m] broadcast over rows
    AddBias(usize, usize),
    Add(usize, usize),
    Scale(usize, f64),
    Relu(usize),
    SoftmaxRows(usize),
    LayerNorm {
        x: usize,
        gain: usize,
        bias: usize,
        eps: f64,
    },
    SliceRows {
        x: usize,
        start: usize,
        end: usize,
    },
    ConcatRows(Vec<usize>),
    SliceCols {
        x: usize,
        start: usize,
        end: usize,
    },
    ConcatCols(Vec<usize>),
    Reshape(usize),
    MseLoss {
        pred: usize,
        target: usize,
    },
}

struct Node {
    op: Op,
    value: Tensor,
}

/// Gradients produced by one backward pass, keyed by parameter, in the order
/// the parameters entered the graph.
#[derive(Debug, Clone, Default)]
pub struct GradMap {
    entries: Vec<(ParamId, Tensor)>,
}

impl GradMap {
    pub fn iter(&self) -> impl Iterator<Item = &(ParamId, Tensor)> {
        self.entries.iter()
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.entries.iter().find(|(p, _)| *p == id).map(|(_, g)| g)
    }
}

/// Eager define-by-run computation tape over a shared parameter store.
/// Values are computed as nodes are added; `backward` walks the tape in
/// reverse creation order, which fixes the accumulation order.
pub struct Graph<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: HashMap<ParamId, usize>,
    param_order: Vec<(ParamId, usize)>,
    consumed: bool,
}

impl<'p> Graph<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Graph {
            store,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
            param_order: Vec::new(),
            consumed: false,
        }
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        debug_assert!(value.is_all_finite(), "non-finite node value");
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, n: NodeId) -> &Tensor {
        &self.nodes[n.0].value
    }

    pub fn input(&mut self, t: Tensor) -> NodeId {
        self.push(Op::Input, t)
    }

    /// Brings a parameter into the graph; repeated calls return the same node
    /// so gradient contributions accumulate in one place.
    pub fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(&idx) = self.param_nodes.get(&id) {
            return NodeId(idx);
        }
        let value = self.store.get(id).value.clone();
        let node = self.push(Op::Param(id), value);
        self.param_nodes.insert(id, node.0);
        self.param_order.push((id, node.0));
        node
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumericsError> {
        let v = matmul_nn(self.value(a), self.value(b))?;
        Ok(self.push(Op::MatMul(a.0, b.0), v))
    }

    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumericsError> {
        let v = matmul_nt(self.value(a), self.value(b))?;
        Ok(self.push(Op::MatMulNt(a.0, b.0), v))
    }

    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId, NumericsError> {
        let (n, m) = self.value(x).dims2()?;
        let b = self.value(bias);
        if b.shape() != [m] {
            return Err(NumericsError::ShapeMismatch {
                what: "add_bias",
                lhs: vec![n, m],
                rhs: b.shape().to_vec(),
            });
        }
        let mut v = self.value(x).clone();
        for row in v.data_mut().chunks_mut(m) {
            for (o, bv) in row.iter_mut().zip(b.data()) {
                *o += bv;
            }
        }
        Ok(self.push(Op::AddBias(x.0, bias.0), v))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumericsError> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(NumericsError::ShapeMismatch {
                what: "add",
                lhs: self.value(a).shape().to_vec(),
                rhs: self.value(b).shape().to_vec(),
            });
        }
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        Ok(self.push(Op::Add(a.0, b.0), v))
    }

    pub fn scale(&mut self, x: NodeId, s: f64) -> NodeId {
        let mut v = self.value(x).clone();
        v.scale_assign(s);
        self.push(Op::Scale(x.0, s), v)
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let mut v = self.value(x).clone();
        for o in v.data_mut() {
            if *o < 0.0 {
                *o = 0.0;
            }
        }
        self.push(Op::Relu(x.0), v)
    }

    /// Row-wise softmax with max subtraction; rows sum to one.
    pub fn softmax_rows(&mut self, x: NodeId) -> Result<NodeId, NumericsError> {
        let (_, m) = self.value(x).dims2()?;
        let mut v = self.value(x).clone();
        for row in v.data_mut().chunks_mut(m) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for o in row.iter_mut() {
                *o = (*o - max).exp();
                sum += *o;
            }
            for o in row.iter_mut() {
                *o /= sum;
            }
        }
        Ok(self.push(Op::SoftmaxRows(x.0), v))
    }

    /// Row-wise standardization followed by a learned affine map.
    pub fn layer_norm(
        &mut self,
        x: NodeId,
        gain: NodeId,
        bias: NodeId,
        eps: f64,
    ) -> Result<NodeId, NumericsError> {
        let (_, m) = self.value(x).dims2()?;
        if self.value(gain).shape() != [m] || self.value(bias).shape() != [m] {
            return Err(NumericsError::ShapeMismatch {
                what: "layer_norm",
                lhs: self.value(x).shape().to_vec(),
                rhs: self.value(gain).shape().to_vec(),
            });
        }
        let mut v = self.value(x).clone();
        let g = self.value(gain).data().to_vec();
        let b = self.value(bias).data().to_vec();
        for row in v.data_mut().chunks_mut(m) {
            let (mu, inv_std) = row_moments(row, eps);
            for (j, o) in row.iter_mut().enumerate() {
                *o = (*o - mu) * inv_std * g[j] + b[j];
            }
        }
        Ok(self.push(
            Op::LayerNorm {
                x: x.0,
                gain: gain.0,
                bias: bias.0,
                eps,
            },
            v,
        ))
    }

    pub fn slice_rows(&mut self, x: NodeId, start: usize, end: usize) -> Result<NodeId, NumericsError> {
        let (n, m) = self.value(x).dims2()?;
        if start >= end || end > n {
            return Err(NumericsError::ShapeMismatch {
                what: "slice_rows",
                lhs: vec![n, m],
                rhs: vec![start, end],
            });
        }
        let v = Tensor::from_vec(
            &[end - start, m],
            self.value(x).data()[start * m..end * m].to_vec(),
        )?;
        Ok(self.push(Op::SliceRows { x: x.0, start, end }, v))
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId, NumericsError> {
        assert!(!parts.is_empty());
        let (_, m) = self.value(parts[0]).dims2()?;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let (n, m2) = self.value(p).dims2()?;
            if m2 != m {
                return Err(NumericsError::ShapeMismatch {
                    what: "concat_rows",
                    lhs: vec![rows, m],
                    rhs: self.value(p).shape().to_vec(),
                });
            }
            rows += n;
            data.extend_from_slice(self.value(p).data());
        }
        let v = Tensor::from_vec(&[rows, m], data)?;
        Ok(self.push(Op::ConcatRows(parts.iter().map(|p| p.0).collect()), v))
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, end: usize) -> Result<NodeId, NumericsError> {
        let (n, m) = self.value(x).dims2()?;
        if start >= end || end > m {
            return Err(NumericsError::ShapeMismatch {
                what: "slice_cols",
                lhs: vec![n, m],
                rhs: vec![start, end],
            });
        }
        let w = end - start;
        let mut data = Vec::with_capacity(n * w);
        for row in self.value(x).data().chunks(m) {
            data.extend_from_slice(&row[start..end]);
        }
        let v = Tensor::from_vec(&[n, w], data)?;
        Ok(self.push(Op::SliceCols { x: x.0, start, end }, v))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId, NumericsError> {
        assert!(!parts.is_empty());
        let (n, _) = self.value(parts[0]).dims2()?;
        let mut widths = Vec::with_capacity(parts.len());
        let mut total = 0;
        for &p in parts {
            let (n2, m) = self.value(p).dims2()?;
            if n2 != n {
                return Err(NumericsError::ShapeMismatch {
                    what: "concat_cols",
                    lhs: vec![n],
                    rhs: self.value(p).shape().to_vec(),
                });
            }
            widths.push(m);
            total += m;
        }
        let mut data = Vec::with_capacity(n * total);
        for i in 0..n {
            for (pi, &p) in parts.iter().enumerate() {
                let m = widths[pi];
                data.extend_from_slice(&self.value(p).data()[i * m..(i + 1) * m]);
            }
        }
        let v = Tensor::from_vec(&[n, total], data)?;
        Ok(self.push(Op::ConcatCols(parts.iter().map(|p| p.0).collect()), v))
    }

    pub fn reshape(&mut self, x: NodeId, shape: &[usize]) -> Result<NodeId, NumericsError> {
        let v = self.value(x).reshaped(shape)?;
        Ok(self.push(Op::Reshape(x.0), v))
    }

    /// Mean squared difference, a scalar node.
    pub fn mse_loss(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId, NumericsError> {
        let p = self.value(pred);
        let t = self.value(target);
        if p.shape() != t.shape() || p.is_empty() {
            return Err(NumericsError::ShapeMismatch {
                what: "mse_loss",
                lhs: p.shape().to_vec(),
                rhs: t.shape().to_vec(),
            });
        }
        let n = p.len() as f64;
        let v = p
            .data()
            .iter()
            .zip(t.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n;
        Ok(self.push(
            Op::MseLoss {
                pred: pred.0,
                target: target.0,
            },
            Tensor::scalar(v),
        ))
    }

    /// Reverse-mode sweep from a scalar loss. Consumes the tape: building a
    /// fresh forward pass is required before calling backward again.
    pub fn backward(&mut self, loss: NodeId) -> Result<GradMap, NumericsError> {
        if self.consumed {
            return Err(NumericsError::State(
                "backward already ran on this graph; rebuild the forward pass".into(),
            ));
        }
        self.consumed = true;
        if loss.0 >= self.nodes.len() {
            return Err(NumericsError::State("unknown loss node".into()));
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(NumericsError::ShapeMismatch {
                what: "backward seed (scalar loss required)",
                lhs: self.nodes[loss.0].value.shape().to_vec(),
                rhs: vec![1],
            });
        }

        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        let seed = Tensor::from_vec(self.nodes[loss.0].value.shape(), vec![1.0])?;
        grads[loss.0] = Some(seed);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let op = self.nodes[idx].op.clone();
            match op {
                Op::Input | Op::Param(_) => {
                    grads[idx] = Some(g); // keep for collection below
                    continue;
                }
                Op::MatMul(a, b) => {
                    let da = matmul_nt(&g, &self.nodes[b].value)?;
                    let db = matmul_tn(&self.nodes[a].value, &g)?;
                    accumulate(&mut grads, a, da);
                    accumulate(&mut grads, b, db);
                }
                Op::MatMulNt(a, b) => {
                    let da = matmul_nn(&g, &self.nodes[b].value)?;
                    let db = matmul_tn(&g, &self.nodes[a].value)?;
                    accumulate(&mut grads, a, da);
                    accumulate(&mut grads, b, db);
                }
                Op::AddBias(x, bias) => {
                    let (_, m) = g.dims2()?;
                    let mut db = Tensor::zeros(&[m]);
                    for row in g.data().chunks(m) {
                        for (o, v) in db.data_mut().iter_mut().zip(row) {
                            *o += v;
                        }
                    }
                    accumulate(&mut grads, bias, db);
                    accumulate(&mut grads, x, g);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, a, g.clone());
                    accumulate(&mut grads, b, g);
                }
                Op::Scale(x, s) => {
                    let mut dx = g;
                    dx.scale_assign(s);
                    accumulate(&mut grads, x, dx);
                }
                Op::Relu(x) => {
                    let mut dx = g;
                    for (o, &xv) in dx.data_mut().iter_mut().zip(self.nodes[x].value.data()) {
                        if xv <= 0.0 {
                            *o = 0.0;
                        }
                    }
                    accumulate(&mut grads, x, dx);
                }
                Op::SoftmaxRows(x) => {
                    let s = &self.nodes[idx].value;
                    let (_, m) = s.dims2()?;
                    let mut dx = g;
                    for (drow, srow) in dx.data_mut().chunks_mut(m).zip(s.data().chunks(m)) {
                        let inner: f64 = drow.iter().zip(srow).map(|(d, s)| d * s).sum();
                        for (d, &sv) in drow.iter_mut().zip(srow) {
                            *d = sv * (*d - inner);
                        }
                    }
                    accumulate(&mut grads, x, dx);
                }
                Op::LayerNorm { x, gain, bias, eps } => {
                    let xv = &self.nodes[x].value;
                    let (n, m) = xv.dims2()?;
                    let gv = self.nodes[gain].value.data().to_vec();
                    let mut dgain = Tensor::zeros(&[m]);
                    let mut dbias = Tensor::zeros(&[m]);
                    let mut dx = Tensor::zeros(&[n, m]);
                    for i in 0..n {
                        let xrow = &xv.data()[i * m..(i + 1) * m];
                        let grow = &g.data()[i * m..(i + 1) * m];
                        let (mu, inv_std) = row_moments(xrow, eps);
                        let xhat: Vec<f64> =
                            xrow.iter().map(|&v| (v - mu) * inv_std).collect();
                        for j in 0..m {
                            dgain.data_mut()[j] += grow[j] * xhat[j];
                            dbias.data_mut()[j] += grow[j];
                        }
                        let dxhat: Vec<f64> =
                            grow.iter().zip(&gv).map(|(g, gn)| g * gn).collect();
                        let mean_dxhat: f64 = dxhat.iter().sum::<f64>() / m as f64;
                        let mean_dxhat_xhat: f64 =
                            dxhat.iter().zip(&xhat).map(|(a, b)| a * b).sum::<f64>() / m as f64;
                        let drow = &mut dx.data_mut()[i * m..(i + 1) * m];
                        for j in 0..m {
                            drow[j] =
                                inv_std * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
                        }
                    }
                    accumulate(&mut grads, gain, dgain);
                    accumulate(&mut grads, bias, dbias);
                    accumulate(&mut grads, x, dx);
                }
                Op::SliceRows { x, start, end } => {
                    let (n, m) = self.nodes[x].value.dims2()?;
                    let mut dx = Tensor::zeros(&[n, m]);
                    dx.data_mut()[start * m..end * m].copy_from_slice(g.data());
                    accumulate(&mut grads, x, dx);
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let (n, m) = self.nodes[p].value.dims2()?;
                        let dp = Tensor::from_vec(
                            &[n, m],
                            g.data()[offset..offset + n * m].to_vec(),
                        )?;
                        offset += n * m;
                        accumulate(&mut grads, p, dp);
                    }
                }
                Op::SliceCols { x, start, end } => {
                    let (n, m) = self.nodes[x].value.dims2()?;
                    let w = end - start;
                    let mut dx = Tensor::zeros(&[n, m]);
                    for i in 0..n {
                        dx.data_mut()[i * m + start..i * m + end]
                            .copy_from_slice(&g.data()[i * w..(i + 1) * w]);
                    }
                    accumulate(&mut grads, x, dx);
                }
                Op::ConcatCols(parts) => {
                    let widths: Vec<usize> = parts
                        .iter()
                        .map(|&p| self.nodes[p].value.dims2().map(|(_, m)| m))
                        .collect::<Result<_, _>>()?;
                    let total: usize = widths.iter().sum();
                    let n = g.len() / total;
                    let mut offset = 0;
                    for (pi, p) in parts.iter().enumerate() {
                        let m = widths[pi];
                        let mut dp = Tensor::zeros(&[n, m]);
                        for i in 0..n {
                            dp.data_mut()[i * m..(i + 1) * m]
                                .copy_from_slice(&g.data()[i * total + offset..i * total + offset + m]);
                        }
                        offset += m;
                        accumulate(&mut grads, *p, dp);
                    }
                }
                Op::Reshape(x) => {
                    let dx = g.reshaped(self.nodes[x].value.shape())?;
                    accumulate(&mut grads, x, dx);
                }
                Op::MseLoss { pred, target } => {
                    let p = &self.nodes[pred].value;
                    let t = &self.nodes[target].value;
                    let n = p.len() as f64;
                    let seed = g.data()[0];
                    let mut dp = Tensor::zeros(p.shape());
                    let mut dt = Tensor::zeros(t.shape());
                    for ((dpv, dtv), (pv, tv)) in dp
                        .data_mut()
                        .iter_mut()
                        .zip(dt.data_mut())
                        .zip(p.data().iter().zip(t.data()))
                    {
                        let d = seed * 2.0 * (pv - tv) / n;
                        *dpv = d;
                        *dtv = -d;
                    }
                    accumulate(&mut grads, pred, dp);
                    accumulate(&mut grads, target, dt);
                }
            }
        }

        let mut entries = Vec::with_capacity(self.param_order.len());
        for &(pid, node_idx) in &self.param_order {
            let g = grads[node_idx]
                .take()
                .unwrap_or_else(|| Tensor::zeros(self.nodes[node_idx].value.shape()));
            entries.push((pid, g));
        }
        Ok(GradMap { entries })
    }
}

fn accumulate(grads: &mut [Option<Tensor>], idx: usize, delta: Tensor) {
    match &mut grads[idx] {
        Some(t) => t.add_assign(&delta),
        slot @ None => *slot = Some(delta),
    }
}

/// Mean and inverse standard deviation (population, epsilon-guarded) of one row.
fn row_moments(row: &[f64], eps: f64) -> (f64, f64) {
    let m = row.len() as f64;
    let mu = row.iter().sum::<f64>() / m;
    let var = row.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / m;
    (mu, 1.0 / (var + eps).sqrt())
}
