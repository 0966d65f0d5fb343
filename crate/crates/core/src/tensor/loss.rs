use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Contrastive,
    Triplet,
}

/// Metric-learning loss over embedding pairs or triplets.
///
/// Contrastive, for a pair `(a, b, y)`:
/// `y * |a - b|^2 + (1 - y) * max(0, margin - |a - b|)^2`.
/// Triplet: `max(0, |a - p| - |a - n| + margin)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec<T> {
    pub kind: LossKind,
    pub margin: T,
}

impl<T: Scalar> LossSpec<T> {
    pub fn new(kind: LossKind, margin: T) -> Result<Self> {
        if !(margin >= T::zero()) {
            return Err(invalid(format!("loss margin must be >= 0, got {margin}")));
        }
        Ok(Self { kind, margin })
    }

    pub fn triplet(margin: T) -> Result<Self> {
        Self::new(LossKind::Triplet, margin)
    }

    pub fn contrastive(margin: T) -> Result<Self> {
        Self::new(LossKind::Contrastive, margin)
    }

    /// Triplet loss and its gradients with respect to anchor, positive, negative.
    pub(crate) fn triplet_grad(&self, a: &[T], p: &[T], n: &[T]) -> (T, Vec<T>, Vec<T>, Vec<T>) {
        let dim = a.len();
        let d_ap = crate::scalar::l2_distance(a, p);
        let d_an = crate::scalar::l2_distance(a, n);
        let value = d_ap - d_an + self.margin;
        let mut ga = vec![T::zero(); dim];
        let mut gp = vec![T::zero(); dim];
        let mut gn = vec![T::zero(); dim];
        if value <= T::zero() {
            return (T::zero(), ga, gp, gn);
        }
        // d|u|/du = u / |u|, taken as zero at u = 0
        for i in 0..dim {
            let u = if d_ap > T::zero() {
                (a[i] - p[i]) / d_ap
            } else {
                T::zero()
            };
            let v = if d_an > T::zero() {
                (a[i] - n[i]) / d_an
            } else {
                T::zero()
            };
            ga[i] = u - v;
            gp[i] = -u;
            gn[i] = v;
        }
        (value, ga, gp, gn)
    }

    /// Contrastive loss and its gradients with respect to both embeddings.
    pub(crate) fn pair_grad(&self, a: &[T], b: &[T], similar: bool) -> (T, Vec<T>, Vec<T>) {
        let dim = a.len();
        let d = crate::scalar::l2_distance(a, b);
        let mut ga = vec![T::zero(); dim];
        let two = T::lit(2.0);
        let value;
        if similar {
            value = d * d;
            for i in 0..dim {
                ga[i] = two * (a[i] - b[i]);
            }
        } else {
            let gap = self.margin - d;
            if gap <= T::zero() {
                return (T::zero(), ga, vec![T::zero(); dim]);
            }
            value = gap * gap;
            if d > T::zero() {
                for i in 0..dim {
                    ga[i] = -two * gap * (a[i] - b[i]) / d;
                }
            }
        }
        let gb = ga.iter().map(|&g| -g).collect();
        (value, ga, gb)
    }
}

/// One mini-batch of training examples. Each example tensor is a single
/// `[C, H, W]` image.
#[derive(Debug, Clone, PartialEq)]
pub enum Batch<T> {
    /// `(anchor, positive, negative)`.
    Triplets(Vec<(Tensor<T>, Tensor<T>, Tensor<T>)>),
    /// `(a, b, similar)`.
    Pairs(Vec<(Tensor<T>, Tensor<T>, bool)>),
}

impl<T> Batch<T> {
    pub fn len(&self) -> usize {
        match self {
            Batch::Triplets(v) => v.len(),
            Batch::Pairs(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
