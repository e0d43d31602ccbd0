//! Multinomial logistic regression on frozen features.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    /// Fraction of each class used for training; the rest is the test split.
    pub train_fraction: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            train_fraction: 0.5,
            iterations: 2000,
            learning_rate: 0.5,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub accuracy: f64,
    pub train_accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub classes: usize,
}

/// Softmax classifier over standardized features.
#[derive(Debug, Clone)]
pub struct LinearClassifier {
    mean: Array1<f64>,
    std: Array1<f64>,
    weights: Array2<f64>,
    bias: Array1<f64>,
    labels: Vec<i64>,
}

impl LinearClassifier {
    pub fn fit(features: &Array2<f64>, labels: &[i64], opts: &ProbeOptions) -> Result<Self> {
        let (n, f) = features.dim();
        if n != labels.len() {
            return Err(Error::LengthMismatch(n, labels.len()));
        }
        let mut classes: Vec<i64> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::DegenerateSplit(format!(
                "training split has {} class(es)",
                classes.len()
            )));
        }
        let k = classes.len();
        let mean = features.mean_axis(Axis(0)).expect("non-empty");
        let std = features
            .std_axis(Axis(0), 0.0)
            .mapv(|s| if s > 1e-12 { s } else { 1.0 });
        let x = (features - &mean) / &std;
        let y: Vec<usize> = labels
            .iter()
            .map(|l| classes.binary_search(l).expect("present"))
            .collect();

        let mut weights = Array2::<f64>::zeros((f, k));
        let mut bias = Array1::<f64>::zeros(k);
        for _ in 0..opts.iterations {
            let mut probs = x.dot(&weights) + &bias;
            for mut row in probs.rows_mut() {
                let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                row.mapv_inplace(|z| (z - m).exp());
                let s = row.sum();
                row.mapv_inplace(|z| z / s);
            }
            for (i, &c) in y.iter().enumerate() {
                probs[[i, c]] -= 1.0;
            }
            probs /= n as f64;
            let gw = x.t().dot(&probs) + &(&weights * opts.l2);
            let gb = probs.sum_axis(Axis(0));
            weights.scaled_add(-opts.learning_rate, &gw);
            bias.scaled_add(-opts.learning_rate, &gb);
        }
        Ok(Self {
            mean,
            std,
            weights,
            bias,
            labels: classes,
        })
    }

    pub fn predict(&self, features: &Array2<f64>) -> Vec<i64> {
        let x = (features - &self.mean) / &self.std;
        let scores = x.dot(&self.weights) + &self.bias;
        scores
            .rows()
            .into_iter()
            .map(|row| {
                let best = row
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
                self.labels[best.0]
            })
            .collect()
    }
}

fn accuracy(pred: &[i64], truth: &[i64]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

fn stack(rows: &[&Vec<f64>]) -> Result<Array2<f64>> {
    let f = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != f) {
        return Err(Error::ShapeMismatch("feature vectors differ in length".into()));
    }
    Ok(Array2::from_shape_fn((rows.len(), f), |(i, j)| rows[i][j]))
}

/// Stratified seeded split, fit on train, accuracy on test.
pub fn linear_probe(features: &[(Vec<f64>, i64)], opts: &ProbeOptions, seed: u64) -> Result<ProbeReport> {
    if !(opts.train_fraction > 0.0 && opts.train_fraction < 1.0) {
        return Err(Error::InvalidArgument("train_fraction must lie in (0, 1)".into()));
    }
    let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, (_, label)) in features.iter().enumerate() {
        by_class.entry(*label).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for idx in by_class.values_mut() {
        idx.shuffle(&mut rng);
        let cut = ((idx.len() as f64) * opts.train_fraction).round() as usize;
        let cut = cut.clamp(usize::from(idx.len() > 1), idx.len().saturating_sub(1).max(1));
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    if test.is_empty() {
        return Err(Error::DegenerateSplit("test split is empty".into()));
    }
    let gather = |ids: &[usize]| -> Result<(Array2<f64>, Vec<i64>)> {
        let rows: Vec<&Vec<f64>> = ids.iter().map(|&i| &features[i].0).collect();
        Ok((stack(&rows)?, ids.iter().map(|&i| features[i].1).collect()))
    };
    let (x_train, y_train) = gather(&train)?;
    let (x_test, y_test) = gather(&test)?;
    let clf = LinearClassifier::fit(&x_train, &y_train, opts)?;
    Ok(ProbeReport {
        accuracy: accuracy(&clf.predict(&x_test), &y_test),
        train_accuracy: accuracy(&clf.predict(&x_train), &y_train),
        n_train: train.len(),
        n_test: test.len(),
        classes: by_class.len(),
    })
}
