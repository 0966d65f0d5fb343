//! Seeded synthetic retrieval task.
//!
//! Each class has a prototype on the unit sphere of a small latent space. A
//! sample is its class prototype plus isotropic Gaussian noise, rendered to a
//! `[C, H, W]` image by one fixed random linear map shared by all classes.
//! Raising `noise` makes classes overlap; the split into train, gallery and
//! query images is per class.

use std::borrow::Cow;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::scheduler::{EpochData, RetrievalSet};
use crate::tensor::{Batch, LossKind, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyTaskConfig {
    pub classes: usize,
    pub train_per_class: usize,
    pub gallery_per_class: usize,
    pub query_per_class: usize,
    pub latent_dim: usize,
    /// Standard deviation of the latent noise; prototypes have unit norm.
    pub noise: f64,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
}

impl Default for ToyTaskConfig {
    fn default() -> Self {
        Self {
            classes: 16,
            train_per_class: 24,
            gallery_per_class: 12,
            query_per_class: 4,
            latent_dim: 8,
            noise: 0.2,
            channels: 1,
            height: 12,
            width: 12,
            seed: 7,
        }
    }
}

impl ToyTaskConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| crate::Error::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| crate::Error::Format(e.to_string()))
    }

    pub fn samples_per_class(&self) -> usize {
        self.train_per_class + self.gallery_per_class + self.query_per_class
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(invalid("need at least two classes"));
        }
        if self.train_per_class < 2 || self.gallery_per_class == 0 || self.query_per_class == 0 {
            return Err(invalid(
                "each class needs >= 2 train, >= 1 gallery and >= 1 query samples",
            ));
        }
        if self.latent_dim == 0 || self.channels == 0 || self.height == 0 || self.width == 0 {
            return Err(invalid("latent and image dimensions must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(invalid("noise must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ToyDataset<T> {
    pub config: ToyTaskConfig,
    pub train: Vec<(Tensor<T>, usize)>,
    pub retrieval: RetrievalSet<T>,
}

impl<T: Scalar> ToyDataset<T> {
    pub fn generate(config: &ToyTaskConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.latent_dim;
        let pixels = config.channels * config.height * config.width;
        let gauss = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

        let map: Vec<f64> = (0..pixels * d)
            .map(|_| gauss(&mut rng) / (d as f64).sqrt())
            .collect();
        let prototypes: Vec<Vec<f64>> = (0..config.classes)
            .map(|_| loop {
                let v: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-12 {
                    break v.into_iter().map(|x| x / n).collect();
                }
            })
            .collect();

        let shape = vec![config.channels, config.height, config.width];
        let render = |rng: &mut ChaCha8Rng, proto: &[f64]| -> Result<Tensor<T>> {
            let z: Vec<f64> = proto
                .iter()
                .map(|p| p + config.noise * gauss(rng))
                .collect();
            let img = (0..pixels)
                .map(|i| {
                    T::lit(
                        map[i * d..(i + 1) * d]
                            .iter()
                            .zip(&z)
                            .map(|(m, z)| m * z)
                            .sum(),
                    )
                })
                .collect();
            Tensor::new(shape.clone(), img)
        };

        let mut train = Vec::new();
        let mut gallery = Vec::new();
        let mut queries = Vec::new();
        for (label, proto) in prototypes.iter().enumerate() {
            for _ in 0..config.train_per_class {
                train.push((render(&mut rng, proto)?, label));
            }
            for _ in 0..config.gallery_per_class {
                gallery.push((render(&mut rng, proto)?, label));
            }
            for _ in 0..config.query_per_class {
                queries.push((render(&mut rng, proto)?, label));
            }
        }
        Ok(Self {
            config: config.clone(),
            train,
            retrieval: RetrievalSet { gallery, queries },
        })
    }

    /// Query images, used as probes for embedding drift.
    pub fn probes(&self) -> Vec<Tensor<T>> {
        self.retrieval
            .queries
            .iter()
            .map(|(x, _)| x.clone())
            .collect()
    }

    pub fn sampler(
        &self,
        kind: LossKind,
        batch_size: usize,
        seed: u64,
    ) -> Result<BatchSampler<'_, T>> {
        BatchSampler::new(&self.train, kind, batch_size, seed)
    }
}

/// Draws a fresh set of triplets or pairs each epoch: every training image is
/// an anchor once, in an epoch-specific shuffled order.
#[derive(Debug, Clone)]
pub struct BatchSampler<'a, T> {
    data: &'a [(Tensor<T>, usize)],
    by_class: Vec<Vec<usize>>,
    kind: LossKind,
    batch_size: usize,
    seed: u64,
}

impl<'a, T: Scalar> BatchSampler<'a, T> {
    pub fn new(
        data: &'a [(Tensor<T>, usize)],
        kind: LossKind,
        batch_size: usize,
        seed: u64,
    ) -> Result<Self> {
        if batch_size == 0 {
            return Err(invalid("batch size must be positive"));
        }
        let classes = data.iter().map(|(_, l)| l + 1).max().unwrap_or(0);
        let mut by_class = vec![Vec::new(); classes];
        for (i, (_, l)) in data.iter().enumerate() {
            by_class[*l].push(i);
        }
        let usable = by_class.iter().filter(|c| c.len() >= 2).count();
        if usable == 0 || by_class.iter().filter(|c| !c.is_empty()).count() < 2 {
            return Err(invalid(
                "sampling needs two classes and a class with two samples",
            ));
        }
        Ok(Self {
            data,
            by_class,
            kind,
            batch_size,
            seed,
        })
    }

    fn epoch_batches(&self, epoch: usize) -> Vec<Batch<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(epoch as u64 + 1);
        let mut anchors: Vec<usize> = (0..self.data.len())
            .filter(|&i| self.by_class[self.data[i].1].len() >= 2)
            .collect();
        anchors.shuffle(&mut rng);
        let img = |i: usize| self.data[i].0.clone();
        let mut out = Vec::new();
        for chunk in anchors.chunks(self.batch_size) {
            let mut triplets = Vec::new();
            let mut pairs = Vec::new();
            for (j, &a) in chunk.iter().enumerate() {
                let label = self.data[a].1;
                let same = &self.by_class[label];
                let p = loop {
                    let c = same[rng.random_range(0..same.len())];
                    if c != a {
                        break c;
                    }
                };
                let n = loop {
                    let c = rng.random_range(0..self.data.len());
                    if self.data[c].1 != label {
                        break c;
                    }
                };
                match self.kind {
                    LossKind::Triplet => triplets.push((img(a), img(p), img(n))),
                    LossKind::Contrastive if j % 2 == 0 => pairs.push((img(a), img(p), true)),
                    LossKind::Contrastive => pairs.push((img(a), img(n), false)),
                }
            }
            out.push(match self.kind {
                LossKind::Triplet => Batch::Triplets(triplets),
                LossKind::Contrastive => Batch::Pairs(pairs),
            });
        }
        out
    }
}

impl<T: Scalar> EpochData<T> for BatchSampler<'_, T> {
    fn batches(&self, epoch: usize) -> Cow<'_, [Batch<T>]> {
        Cow::Owned(self.epoch_batches(epoch))
    }
}
