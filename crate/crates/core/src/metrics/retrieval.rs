use crate::error::{invalid, Error, Result};
use crate::scalar::{l2_distance, Scalar};
use crate::tensor::{Tensor, ToyModel};

/// One embedded image with its class label. Items with equal `id` are the
/// same image, so a query never retrieves its own gallery copy.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalItem<T> {
    pub id: Option<usize>,
    pub embedding: Vec<T>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalEval<T> {
    pub gallery: Vec<RetrievalItem<T>>,
    pub queries: Vec<RetrievalItem<T>>,
}

impl<T: Scalar> RetrievalEval<T> {
    pub fn new(gallery: Vec<RetrievalItem<T>>, queries: Vec<RetrievalItem<T>>) -> Result<Self> {
        let dim = gallery
            .first()
            .map(|g| g.embedding.len())
            .ok_or_else(|| invalid("empty gallery"))?;
        if queries.is_empty() {
            return Err(invalid("no queries"));
        }
        if gallery
            .iter()
            .chain(&queries)
            .any(|i| i.embedding.len() != dim)
        {
            return Err(invalid("embeddings differ in dimension"));
        }
        Ok(Self { gallery, queries })
    }

    /// Embeds labelled images with `model`. Gallery item `i` gets id `i`;
    /// queries get no id.
    pub fn from_model(
        model: &ToyModel<T>,
        gallery: &[(Tensor<T>, usize)],
        queries: &[(Tensor<T>, usize)],
    ) -> Result<Self> {
        let embed = |set: &[(Tensor<T>, usize)], with_id: bool| -> Result<Vec<RetrievalItem<T>>> {
            set.iter()
                .enumerate()
                .map(|(i, (x, label))| {
                    Ok(RetrievalItem {
                        id: with_id.then_some(i),
                        embedding: model.embed(x)?.into_data(),
                        label: *label,
                    })
                })
                .collect()
        };
        Self::new(embed(gallery, true)?, embed(queries, false)?)
    }

    /// Gallery indices for query `q` sorted by ascending distance, ties by index.
    fn ranking(&self, q: &RetrievalItem<T>) -> Vec<usize> {
        let mut order: Vec<(T, usize)> = self
            .gallery
            .iter()
            .enumerate()
            .filter(|(_, g)| q.id.is_none() || g.id != q.id)
            .map(|(i, g)| (l2_distance(&q.embedding, &g.embedding), i))
            .collect();
        order.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then(a.1.cmp(&b.1))
        });
        order.into_iter().map(|(_, i)| i).collect()
    }
}

/// Mean over queries of average precision on the full gallery ranking.
pub fn mean_average_precision<T: Scalar>(eval: &RetrievalEval<T>) -> Result<f64> {
    let mut total = 0.0;
    for q in &eval.queries {
        let ranking = eval.ranking(q);
        let relevant = ranking
            .iter()
            .filter(|&&i| eval.gallery[i].label == q.label)
            .count();
        if relevant == 0 {
            return Err(Error::MissingClass { label: q.label });
        }
        let mut hits = 0usize;
        let mut ap = 0.0;
        for (rank, &i) in ranking.iter().enumerate() {
            if eval.gallery[i].label == q.label {
                hits += 1;
                ap += hits as f64 / (rank + 1) as f64;
            }
        }
        total += ap / relevant as f64;
    }
    Ok(total / eval.queries.len() as f64)
}

/// Fraction of queries with a same-class item among the top `k`.
pub fn rank_at<T: Scalar>(eval: &RetrievalEval<T>, k: usize) -> Result<f64> {
    if k == 0 || k > eval.gallery.len() {
        return Err(invalid(format!(
            "k = {k} outside 1..={}",
            eval.gallery.len()
        )));
    }
    let found = eval
        .queries
        .iter()
        .filter(|q| {
            eval.ranking(q)
                .iter()
                .take(k)
                .any(|&i| eval.gallery[i].label == q.label)
        })
        .count();
    Ok(found as f64 / eval.queries.len() as f64)
}

/// Mean Euclidean distance between the two models' embeddings of each probe.
pub fn embedding_drift<T: Scalar>(
    a: &ToyModel<T>,
    b: &ToyModel<T>,
    probes: &[Tensor<T>],
) -> Result<f64> {
    if a.embedding_dim() != b.embedding_dim() {
        return Err(Error::ShapeMismatch {
            left: vec![a.embedding_dim()],
            right: vec![b.embedding_dim()],
            context: "embedding dimensions",
        });
    }
    if probes.is_empty() {
        return Err(invalid("empty probe set"));
    }
    let mut total = 0.0;
    for x in probes {
        total += l2_distance(a.embed(x)?.data(), b.embed(x)?.data()).as_f64();
    }
    Ok(total / probes.len() as f64)
}
