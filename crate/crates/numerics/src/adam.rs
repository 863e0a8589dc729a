use crate::{NumericsError, ParamId, ParamStore, Tensor};

/// Adam with bias correction over a fixed set of trainable parameters.
/// Parameters outside the set are never touched, which is what implements
/// decoder-only fine-tuning.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    trainable: Vec<ParamId>,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(store: &ParamStore, trainable: Vec<ParamId>, lr: f64) -> Self {
        let m = trainable
            .iter()
            .map(|&id| Tensor::zeros(store.get(id).value.shape()))
            .collect();
        let v = trainable
            .iter()
            .map(|&id| Tensor::zeros(store.get(id).value.shape()))
            .collect();
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            trainable,
            m,
            v,
        }
    }

    pub fn trainable(&self) -> &[ParamId] {
        &self.trainable
    }

    /// One update over the trainable set from the gradients currently
    /// installed on the store. Consumes the gradients.
    pub fn step(&mut self, store: &mut ParamStore) -> Result<(), NumericsError> {
        if !store.grads_ready() {
            return Err(NumericsError::State(
                "adam step without populated gradients".into(),
            ));
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (k, &id) in self.trainable.iter().enumerate() {
            let param = store.get_mut(id);
            let g = param.grad.data().to_vec();
            let m = self.m[k].data_mut();
            let v = self.v[k].data_mut();
            let theta = param.value.data_mut();
            for i in 0..g.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                theta[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            if !param.value.is_all_finite() {
                return Err(NumericsError::NonFinite(format!(
                    "parameter {} after adam step {}",
                    param.name, self.step
                )));
            }
        }
        store.mark_grads_consumed();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{GradAccum, Graph};

    fn scalar_store(theta: f64) -> (ParamStore, ParamId) {
        let mut store = ParamStore::new();
        let id = store.register("theta", Tensor::from_vec(&[1], vec![theta]).unwrap());
        (store, id)
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let (mut store, id) = scalar_store(0.5);
        let mut adam = AdamState::new(&store, vec![id], 1e-3);
        store.set_grads(GradAccum::zeros(&store));
        adam.step(&mut store).unwrap();
        assert_eq!(store.get(id).value.data()[0], 0.5);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn first_step_with_unit_gradient_moves_by_learning_rate() {
        let (mut store, id) = scalar_store(0.0);
        let mut adam = AdamState::new(&store, vec![id], 1e-3);
        // Seeding backward from the parameter itself yields d(theta)/d(theta) = 1.
        let mut g = Graph::new(&store);
        let p = g.param(id);
        let map = g.backward(p).unwrap();
        assert_eq!(map.get(id).unwrap().data(), &[1.0]);
        let mut accum = GradAccum::zeros(&store);
        accum.add_map(&map);
        store.set_grads(accum);
        adam.step(&mut store).unwrap();
        // First step: m_hat = v_hat = 1, so the move is -lr/(1 + eps).
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((store.get(id).value.data()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn adam_converges_on_square_loss() {
        let (mut store, id) = scalar_store(1.0);
        let mut adam = AdamState::new(&store, vec![id], 1e-3);
        let mut history = Vec::new();
        for _ in 0..100 {
            let mut g = Graph::new(&store);
            let p = g.param(id);
            let zero = g.input(Tensor::scalar(0.0));
            let loss = g.mse_loss(p, zero).unwrap();
            let map = g.backward(loss).unwrap();
            let mut accum = GradAccum::zeros(&store);
            accum.add_map(&map);
            store.set_grads(accum);
            adam.step(&mut store).unwrap();
            history.push(store.get(id).value.data()[0].abs());
        }
        for w in history[5..].windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "no monotone decrease after warm-up");
        }
        assert!(*history.last().unwrap() < 1.0);
    }

    #[test]
    fn step_without_gradients_is_a_state_error() {
        let (mut store, id) = scalar_store(0.0);
        let mut adam = AdamState::new(&store, vec![id], 1e-3);
        match adam.step(&mut store) {
            Err(NumericsError::State(_)) => {}
            other => panic!("expected state error, got {other:?}"),
        }
    }
}
