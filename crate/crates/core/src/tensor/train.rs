use super::{Batch, LossKind, LossSpec, ToyModel};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Parameter gradients laid out like `ToyModel::params`: layer, tensor, element.
pub type Gradients<T> = Vec<Vec<Vec<T>>>;

fn zero_grads<T: Scalar>(model: &ToyModel<T>) -> Gradients<T> {
    model
        .params()
        .iter()
        .map(|group| group.iter().map(|t| vec![T::zero(); t.len()]).collect())
        .collect()
}

/// Mean batch loss and its gradient with respect to every parameter.
pub fn batch_gradients<T: Scalar>(
    model: &ToyModel<T>,
    batch: &Batch<T>,
    loss: &LossSpec<T>,
) -> Result<(T, Gradients<T>)> {
    if batch.is_empty() {
        return Err(invalid("empty batch"));
    }
    let mut grads = zero_grads(model);
    let mut total = T::zero();
    let scale = T::one() / T::from_usize_lossy(batch.len());
    let last_layer = model.layers().len().saturating_sub(1);
    match (batch, loss.kind) {
        (Batch::Triplets(items), LossKind::Triplet) => {
            for (a, p, n) in items {
                let (ea, ca) = model.forward_cached(a)?;
                let (ep, cp) = model.forward_cached(p)?;
                let (en, cn) = model.forward_cached(n)?;
                let (v, ga, gp, gn) = loss.triplet_grad(&ea, &ep, &en);
                if !v.is_finite() {
                    return Err(Error::NonFinite { layer: last_layer });
                }
                total += v;
                if v > T::zero() {
                    model.backward(&ca, scaled(ga, scale), &mut grads);
                    model.backward(&cp, scaled(gp, scale), &mut grads);
                    model.backward(&cn, scaled(gn, scale), &mut grads);
                }
            }
        }
        (Batch::Pairs(items), LossKind::Contrastive) => {
            for (a, b, similar) in items {
                let (ea, ca) = model.forward_cached(a)?;
                let (eb, cb) = model.forward_cached(b)?;
                let (v, ga, gb) = loss.pair_grad(&ea, &eb, *similar);
                if !v.is_finite() {
                    return Err(Error::NonFinite { layer: last_layer });
                }
                total += v;
                if v > T::zero() {
                    model.backward(&ca, scaled(ga, scale), &mut grads);
                    model.backward(&cb, scaled(gb, scale), &mut grads);
                }
            }
        }
        (Batch::Triplets(_), LossKind::Contrastive) => {
            return Err(invalid("contrastive loss needs a batch of pairs"))
        }
        (Batch::Pairs(_), LossKind::Triplet) => {
            return Err(invalid("triplet loss needs a batch of triplets"))
        }
    }
    Ok((total * scale, grads))
}

fn scaled<T: Scalar>(mut v: Vec<T>, s: T) -> Vec<T> {
    for x in &mut v {
        *x *= s;
    }
    v
}

/// Plain SGD with optional heavy-ball momentum.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    pub lr: T,
    pub momentum: T,
    velocity: Option<Gradients<T>>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(lr: T, momentum: T) -> Result<Self> {
        if !(lr >= T::zero()) || !(momentum >= T::zero() && momentum < T::one()) {
            return Err(invalid(format!(
                "need lr >= 0 and momentum in [0, 1), got lr={lr} momentum={momentum}"
            )));
        }
        Ok(Self {
            lr,
            momentum,
            velocity: None,
        })
    }

    /// Drops the momentum buffer, e.g. after the parameter shapes changed.
    pub fn reset(&mut self) {
        self.velocity = None;
    }

    /// One update on `batch`; returns the loss measured before the update.
    pub fn step(
        &mut self,
        model: &mut ToyModel<T>,
        batch: &Batch<T>,
        loss: &LossSpec<T>,
    ) -> Result<T> {
        let (value, grads) = batch_gradients(model, batch, loss)?;
        if self.lr == T::zero() {
            return Ok(value);
        }
        let stale = self.velocity.as_ref().is_some_and(|v| {
            v.len() != grads.len()
                || v.iter().zip(&grads).any(|(a, b)| {
                    a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.len() != y.len())
                })
        });
        if stale {
            self.velocity = None;
        }
        let use_momentum = self.momentum > T::zero();
        if use_momentum && self.velocity.is_none() {
            self.velocity = Some(zero_grads(model));
        }
        for (layer, (group, g_group)) in model.params_mut().iter_mut().zip(&grads).enumerate() {
            for (slot, (tensor, g)) in group.iter_mut().zip(g_group).enumerate() {
                let data = tensor.data_mut();
                if use_momentum {
                    let v = &mut self.velocity.as_mut().expect("initialised")[layer][slot];
                    for ((w, &gv), vel) in data.iter_mut().zip(g).zip(v.iter_mut()) {
                        *vel = self.momentum * *vel + gv;
                        *w -= self.lr * *vel;
                    }
                } else {
                    for (w, &gv) in data.iter_mut().zip(g) {
                        *w -= self.lr * gv;
                    }
                }
                if data.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { layer });
                }
            }
        }
        Ok(value)
    }
}

/// One plain SGD update. Returns the pre-update batch loss.
pub fn train_step<T: Scalar>(
    model: &mut ToyModel<T>,
    batch: &Batch<T>,
    loss: &LossSpec<T>,
    lr: T,
) -> Result<T> {
    if !(lr >= T::zero()) {
        return Err(invalid(format!("learning rate must be >= 0, got {lr}")));
    }
    Sgd::new(lr, T::zero())?.step(model, batch, loss)
}
