use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// K nearest neighbours under Euclidean distance. Every training point tied
/// with the k-th nearest distance joins the average, so predictions do not
/// depend on row order. `k` larger than the training set means "all rows".
#[derive(Clone, Debug)]
pub struct Knn {
    x: Array2<f64>,
    y: Vec<f64>,
    k: usize,
}

impl Knn {
    pub fn fit(x: ArrayView2<f64>, y: &[f64], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("n_neighbors must be >= 1".into()));
        }
        Ok(Self { x: x.to_owned(), y: y.to_vec(), k: k.min(y.len()) })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(self.y.len());
        x.rows()
            .into_iter()
            .map(|q| {
                dist.clear();
                dist.extend(self.x.rows().into_iter().enumerate().map(|(i, r)| {
                    let d: f64 = r.iter().zip(q.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d, i)
                }));
                let kth = self.k - 1;
                let (_, &mut (cut, _), _) = dist.select_nth_unstable_by(kth, |a, b| a.0.total_cmp(&b.0));
                let (sum, count) = dist
                    .iter()
                    .filter(|(d, _)| *d <= cut)
                    .fold((0.0, 0usize), |(s, c), (_, i)| (s + self.y[*i], c + 1));
                sum / count as f64
            })
            .collect()
    }
}
