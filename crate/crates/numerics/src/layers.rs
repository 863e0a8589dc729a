use rand::Rng;

use crate::{Graph, NodeId, NumericsError, ParamId, ParamStore, Tensor};

/// y = xW + b
#[derive(Debug, Clone, Copy)]
pub struct LinearParams {
    pub w: ParamId,
    pub b: ParamId,
}

impl LinearParams {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        d_in: usize,
        d_out: usize,
        rng: &mut R,
    ) -> Self {
        let w = store.register_uniform(&format!("{name}.w"), d_in, d_out, rng);
        let b = store.register(&format!("{name}.b"), Tensor::zeros(&[d_out]));
        LinearParams { w, b }
    }

    pub fn forward(&self, g: &mut Graph, x: NodeId) -> Result<NodeId, NumericsError> {
        let w = g.param(self.w);
        let b = g.param(self.b);
        let xw = g.matmul(x, w)?;
        g.add_bias(xw, b)
    }
}

/// Row standardization with learned gain and bias.
#[derive(Debug, Clone, Copy)]
pub struct LayerNormParams {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl LayerNormParams {
    pub fn register(store: &mut ParamStore, name: &str, d: usize) -> Self {
        let gain = store.register(
            &format!("{name}.gain"),
            Tensor::from_vec(&[d], vec![1.0; d]).unwrap(),
        );
        let bias = store.register(&format!("{name}.bias"), Tensor::zeros(&[d]));
        LayerNormParams { gain, bias }
    }

    pub fn forward(&self, g: &mut Graph, x: NodeId, eps: f64) -> Result<NodeId, NumericsError> {
        let gain = g.param(self.gain);
        let bias = g.param(self.bias);
        g.layer_norm(x, gain, bias, eps)
    }
}

/// Scaled dot-product self-attention over all positions, several heads in
/// parallel, concatenated and projected back to the model width.
#[derive(Debug, Clone)]
pub struct MhaParams {
    pub qkv: [LinearParams; 3],
    pub out: LinearParams,
    pub n_heads: usize,
    pub d_model: usize,
}

impl MhaParams {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        d_model: usize,
        n_heads: usize,
        rng: &mut R,
    ) -> Result<Self, NumericsError> {
        if n_heads == 0 || d_model % n_heads != 0 {
            return Err(NumericsError::State(format!(
                "d_model {d_model} not divisible by n_heads {n_heads}"
            )));
        }
        let q = LinearParams::register(store, &format!("{name}.q"), d_model, d_model, rng);
        let k = LinearParams::register(store, &format!("{name}.k"), d_model, d_model, rng);
        let v = LinearParams::register(store, &format!("{name}.v"), d_model, d_model, rng);
        let out = LinearParams::register(store, &format!("{name}.out"), d_model, d_model, rng);
        Ok(MhaParams {
            qkv: [q, k, v],
            out,
            n_heads,
            d_model,
        })
    }

    pub fn forward(&self, g: &mut Graph, x: NodeId) -> Result<NodeId, NumericsError> {
        self.forward_with_attn(g, x).map(|(o, _)| o)
    }

    /// Also returns the per-head attention-weight nodes for inspection.
    pub fn forward_with_attn(
        &self,
        g: &mut Graph,
        x: NodeId,
    ) -> Result<(NodeId, Vec<NodeId>), NumericsError> {
        let q = self.qkv[0].forward(g, x)?;
        let k = self.qkv[1].forward(g, x)?;
        let v = self.qkv[2].forward(g, x)?;
        let head_dim = self.d_model / self.n_heads;
        let scale = 1.0 / (head_dim as f64).sqrt();
        let mut heads = Vec::with_capacity(self.n_heads);
        let mut attns = Vec::with_capacity(self.n_heads);
        for h in 0..self.n_heads {
            let (c0, c1) = (h * head_dim, (h + 1) * head_dim);
            let qh = g.slice_cols(q, c0, c1)?;
            let kh = g.slice_cols(k, c0, c1)?;
            let vh = g.slice_cols(v, c0, c1)?;
            let logits = g.matmul_nt(qh, kh)?;
            let scaled = g.scale(logits, scale);
            let attn = g.softmax_rows(scaled)?;
            let oh = g.matmul(attn, vh)?;
            heads.push(oh);
            attns.push(attn);
        }
        let concat = g.concat_cols(&heads)?;
        let out = self.out.forward(g, concat)?;
        Ok((out, attns))
    }
}

/// Position-wise two-layer MLP with a ReLU in between.
#[derive(Debug, Clone, Copy)]
pub struct FfnParams {
    pub l1: LinearParams,
    pub l2: LinearParams,
}

impl FfnParams {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        d_model: usize,
        d_ff: usize,
        rng: &mut R,
    ) -> Self {
        FfnParams {
            l1: LinearParams::register(store, &format!("{name}.l1"), d_model, d_ff, rng),
            l2: LinearParams::register(store, &format!("{name}.l2"), d_ff, d_model, rng),
        }
    }

    pub fn forward(&self, g: &mut Graph, x: NodeId) -> Result<NodeId, NumericsError> {
        let h = self.l1.forward(g, x)?;
        let a = g.relu(h);
        self.l2.forward(g, a)
    }
}
