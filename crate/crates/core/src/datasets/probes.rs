//! Linear probe classifiers used to certify the synthetic dataset margins.
//!
//! Both probes are nearest-centroid classifiers over z-scored features
//! (linear decision boundaries), fit on the training split and scored on
//! the test split.

use super::{DatasetBundle, LabeledImage, SyntheticSpec};
use crate::spectral::dft2;

/// Nearest-centroid classifier over standardised features.
pub struct NearestCentroid {
    means: Vec<f64>,
    stds: Vec<f64>,
    centroids: Vec<Vec<f64>>,
}

impl NearestCentroid {
    pub fn fit(features: &[Vec<f64>], labels: &[usize], class_count: usize) -> Self {
        let dim = features[0].len();
        let n = features.len() as f64;
        let mut means = vec![0.0; dim];
        for f in features {
            for (m, v) in means.iter_mut().zip(f) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; dim];
        for f in features {
            for ((s, v), m) in stds.iter_mut().zip(f).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut stds {
            *s = (*s / n).sqrt().max(1e-12);
        }
        let mut centroids = vec![vec![0.0; dim]; class_count];
        let mut counts = vec![0usize; class_count];
        for (f, &label) in features.iter().zip(labels) {
            counts[label] += 1;
            for (c, (v, (m, s))) in centroids[label]
                .iter_mut()
                .zip(f.iter().zip(means.iter().zip(&stds)))
            {
                *c += (v - m) / s;
            }
        }
        for (centroid, &count) in centroids.iter_mut().zip(&counts) {
            for c in centroid.iter_mut() {
                *c /= count.max(1) as f64;
            }
        }
        Self {
            means,
            stds,
            centroids,
        }
    }

    pub fn predict(&self, feature: &[f64]) -> usize {
        let z: Vec<f64> = feature
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (ix, centroid) in self.centroids.iter().enumerate() {
            let d: f64 = centroid
                .iter()
                .zip(&z)
                .map(|(c, v)| (c - v) * (c - v))
                .sum();
            if d < best_d {
                best_d = d;
                best = ix;
            }
        }
        best
    }

    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[usize]) -> f64 {
        let correct = features
            .iter()
            .zip(labels)
            .filter(|(f, &l)| self.predict(f) == l)
            .count();
        correct as f64 / labels.len() as f64
    }
}

/// Spectral magnitude at each class's planted coordinate.
pub fn shortcut_features(image: &LabeledImage, spec: &SyntheticSpec) -> Vec<f64> {
    let spectrum = dft2(&image.image).expect("synthetic sizes are powers of two");
    spec.shortcut_pairs
        .iter()
        .map(|&(u, v)| spectrum.get(0, u, v).norm())
        .collect()
}

/// Spectral energy summed over each class's band cells (shortcut cells are
/// already excluded by [`SyntheticSpec::band_cells`]).
pub fn broadband_features(image: &LabeledImage, spec: &SyntheticSpec) -> Vec<f64> {
    let spectrum = dft2(&image.image).expect("synthetic sizes are powers of two");
    (0..spec.classes)
        .map(|c| {
            spec.band_cells(c)
                .iter()
                .map(|&(u, v)| spectrum.get(0, u, v).norm_sqr())
                .sum()
        })
        .collect()
}

fn probe_accuracy(
    bundle: &DatasetBundle,
    extract: impl Fn(&LabeledImage) -> Vec<f64> + Sync,
) -> f64 {
    let train_features = crate::exec::map_collect(&bundle.train, &extract);
    let train_labels: Vec<usize> = bundle.train.iter().map(|li| li.class).collect();
    let probe = NearestCentroid::fit(&train_features, &train_labels, bundle.class_count);
    let test_features = crate::exec::map_collect(&bundle.test, &extract);
    let test_labels: Vec<usize> = bundle.test.iter().map(|li| li.class).collect();
    probe.accuracy(&test_features, &test_labels)
}

/// Test accuracy of the linear probe on planted-pair magnitudes.
pub fn shortcut_probe_accuracy(bundle: &DatasetBundle, spec: &SyntheticSpec) -> f64 {
    probe_accuracy(bundle, |li| shortcut_features(li, spec))
}

/// Test accuracy of the linear probe on band energies alone.
pub fn broadband_probe_accuracy(bundle: &DatasetBundle, spec: &SyntheticSpec) -> f64 {
    probe_accuracy(bundle, |li| broadband_features(li, spec))
}
