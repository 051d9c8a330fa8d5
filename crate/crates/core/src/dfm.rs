//! Dominant frequency maps: greedy per-frequency-pair removal under an
//! accuracy-degradation budget.
//!
//! For one class, the search starts from an all-ones mask and visits
//! conjugate frequency pairs in a configurable order (lowest mean spectral
//! energy first by default). Each pair is tentatively cleared; the class
//! accuracy of the model on the filtered evaluation images decides whether
//! the removal becomes permanent. A pair is dominant — and restored — when
//! clearing it drops accuracy by more than the per-step threshold or would
//! push cumulative degradation past the budget. The final mask therefore
//! retains at least `(1 - budget)` of the standard class accuracy.

use crate::datasets::{gather, subset_by_class, LabeledImage};
use crate::exec;
use crate::model::{evaluate, ClassifierModel};
use crate::seeding::derive_seed;
use crate::spectral::{
    apply_mask, dft2, idft2, mirror_coord, FrequencyMask, ImageTensor, Spectrum,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DfmError {
    #[error("evaluation images must share one class; found classes {0} and {1}")]
    MixedClasses(usize, usize),
    #[error("no evaluation images for class {class}")]
    EmptyClass { class: usize },
    #[error("model never predicts class {class}; its DFM is undefined")]
    DegenerateClass { class: usize },
    #[error("invalid search config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
}

/// Frequency visitation policy for the greedy search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisitOrder {
    /// Lowest mean spectral energy first (default): likely-irrelevant
    /// frequencies are tried while the budget is still untouched.
    EnergyAscending,
    EnergyDescending,
    Raster,
    RandomSeeded,
}

/// Search parameters. The 30% budget caps total class-accuracy degradation;
/// the per-step threshold caps the drop any single removal may cause.
#[derive(Debug, Clone, PartialEq)]
pub struct DfmSearchConfig {
    pub budget: f64,
    pub per_step_threshold: f64,
    pub visit_order: VisitOrder,
    pub eval_subset_size: usize,
    pub seed: u64,
}

impl DfmSearchConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            budget: 0.30,
            per_step_threshold: 0.01,
            visit_order: VisitOrder::EnergyAscending,
            eval_subset_size: 200,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DfmError> {
        if !(self.per_step_threshold > 0.0)
            || self.per_step_threshold > self.budget
            || !(self.budget < 1.0)
        {
            return Err(DfmError::BadConfig(
                "need 0 < per_step_threshold <= budget < 1".into(),
            ));
        }
        if self.eval_subset_size == 0 {
            return Err(DfmError::BadConfig("eval_subset_size must be > 0".into()));
        }
        Ok(())
    }
}

/// A per-class binary frequency mask plus its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantFrequencyMap {
    pub class_id: usize,
    pub mask: FrequencyMask,
    pub retained_accuracy: f64,
    pub standard_accuracy: f64,
    pub budget: f64,
    pub source_model_id: String,
    pub frequency_count: usize,
}

impl DominantFrequencyMap {
    /// JSON export for inspection; stable key order.
    pub fn to_json(&self) -> String {
        let bits: String = self
            .mask
            .bits()
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        format!(
            "{{\"class_id\": {}, \"height\": {}, \"width\": {}, \"budget\": {}, \
             \"standard_accuracy\": {}, \"retained_accuracy\": {}, \"frequency_count\": {}, \
             \"source_model_id\": \"{}\", \"mask\": \"{}\"}}",
            self.class_id,
            self.mask.height(),
            self.mask.width(),
            self.budget,
            self.standard_accuracy,
            self.retained_accuracy,
            self.frequency_count,
            self.source_model_id,
            bits
        )
    }
}

/// Fraction of `spectra` classified as `class` after masking.
fn class_accuracy_with_mask(
    model: &ClassifierModel,
    spectra: &[Spectrum],
    mask: &FrequencyMask,
    class: usize,
) -> f64 {
    let correct = exec::count_matching(spectra, |spec| {
        let masked = apply_mask(spec, mask).expect("mask matches spectrum dims");
        let image = idft2(&masked, true).expect("spectrum is transformable");
        model.predict(&image).expect("image matches model input") == class
    });
    correct as f64 / spectra.len() as f64
}

/// Sequential counterpart of the masked-accuracy measurement, for the bench
/// suite.
pub fn class_accuracy_with_mask_seq(
    model: &ClassifierModel,
    images: &[ImageTensor],
    mask: &FrequencyMask,
    class: usize,
) -> f64 {
    let correct = exec::count_matching_seq(images, |img| {
        let spec = dft2(img).expect("power-of-two image");
        let masked = apply_mask(&spec, mask).expect("mask matches spectrum dims");
        let image = idft2(&masked, true).expect("spectrum is transformable");
        model.predict(&image).expect("image matches model input") == class
    });
    correct as f64 / images.len() as f64
}

/// Parallel-dispatch counterpart of [`class_accuracy_with_mask_seq`].
pub fn class_accuracy_with_mask_batch(
    model: &ClassifierModel,
    images: &[ImageTensor],
    mask: &FrequencyMask,
    class: usize,
) -> f64 {
    let correct = exec::count_matching(images, |img| {
        let spec = dft2(img).expect("power-of-two image");
        let masked = apply_mask(&spec, mask).expect("mask matches spectrum dims");
        let image = idft2(&masked, true).expect("spectrum is transformable");
        model.predict(&image).expect("image matches model input") == class
    });
    correct as f64 / images.len() as f64
}

/// Canonical representatives of all conjugate pairs: cells whose linear
/// index does not exceed their mirror's.
fn canonical_pairs(height: usize, width: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for u in 0..height {
        for v in 0..width {
            let (mu, mv) = mirror_coord(height, width, u, v);
            if u * width + v <= mu * width + mv {
                pairs.push((u, v));
            }
        }
    }
    pairs
}

fn order_pairs(
    pairs: &mut Vec<(usize, usize)>,
    spectra: &[Spectrum],
    config: &DfmSearchConfig,
    class: usize,
) {
    match config.visit_order {
        VisitOrder::Raster => {}
        VisitOrder::RandomSeeded => {
            let mut rng =
                ChaCha20Rng::seed_from_u64(derive_seed(config.seed, "dfm-order", &[class as u64]));
            pairs.shuffle(&mut rng);
        }
        VisitOrder::EnergyAscending | VisitOrder::EnergyDescending => {
            let (h, w) = (spectra[0].height(), spectra[0].width());
            let inv = 1.0 / spectra.len() as f64;
            let energies: Vec<(f64, (usize, usize))> = pairs
                .iter()
                .map(|&(u, v)| {
                    let (mu, mv) = mirror_coord(h, w, u, v);
                    let mut e = 0.0;
                    for spec in spectra {
                        for c in 0..spec.channels() {
                            e += spec.get(c, u, v).norm_sqr();
                            if (mu, mv) != (u, v) {
                                e += spec.get(c, mu, mv).norm_sqr();
                            }
                        }
                    }
                    (e * inv, (u, v))
                })
                .collect();
            let mut sorted = energies;
            sorted.sort_by(|a, b| {
                let cmp = a.0.partial_cmp(&b.0).expect("energies are finite");
                let cmp = if config.visit_order == VisitOrder::EnergyDescending {
                    cmp.reverse()
                } else {
                    cmp
                };
                cmp.then_with(|| {
                    let ka = a.1 .0 * w + a.1 .1;
                    let kb = b.1 .0 * w + b.1 .1;
                    ka.cmp(&kb)
                })
            });
            *pairs = sorted.into_iter().map(|(_, p)| p).collect();
        }
    }
}

/// Compute the dominant frequency map of one class.
///
/// `class_images` must all carry the same label. At most
/// `config.eval_subset_size` of them (a seeded subset) are used for the
/// accuracy measurements.
pub fn compute_dfm(
    model: &ClassifierModel,
    class_images: &[LabeledImage],
    config: &DfmSearchConfig,
) -> Result<DominantFrequencyMap, DfmError> {
    config.validate()?;
    let Some(first) = class_images.first() else {
        return Err(DfmError::EmptyClass { class: 0 });
    };
    let class = first.class;
    if let Some(other) = class_images.iter().find(|li| li.class != class) {
        return Err(DfmError::MixedClasses(class, other.class));
    }

    let subset: Vec<&LabeledImage> = if class_images.len() > config.eval_subset_size {
        let mut order: Vec<usize> = (0..class_images.len()).collect();
        let mut rng =
            ChaCha20Rng::seed_from_u64(derive_seed(config.seed, "dfm-subset", &[class as u64]));
        order.shuffle(&mut rng);
        let mut picked = order[..config.eval_subset_size].to_vec();
        picked.sort_unstable();
        picked.iter().map(|&ix| &class_images[ix]).collect()
    } else {
        class_images.iter().collect()
    };

    let spectra: Vec<Spectrum> = exec::map_collect(&subset, |li| {
        dft2(&li.image).expect("power-of-two image dimensions")
    });
    let n = subset.len() as f64;
    let standard_correct = exec::count_matching(&subset, |li| {
        model.predict(&li.image).expect("image matches model input") == class
    });
    let standard_accuracy = standard_correct as f64 / n;
    if standard_accuracy == 0.0 {
        return Err(DfmError::DegenerateClass { class });
    }

    let (h, w) = (spectra[0].height(), spectra[0].width());
    let mut pairs = canonical_pairs(h, w);
    order_pairs(&mut pairs, &spectra, config, class);

    let floor = (1.0 - config.budget) * standard_accuracy;
    let mut mask = FrequencyMask::all_ones(h, w);
    let mut current_accuracy = standard_accuracy;
    for (u, v) in pairs {
        let mut tentative = mask.clone();
        tentative.clear_pair(u, v);
        let accuracy = class_accuracy_with_mask(model, &spectra, &tentative, class);
        let step_drop = current_accuracy - accuracy;
        // dominant pair: restore when the step threshold or the cumulative
        // budget would be exceeded
        if step_drop > config.per_step_threshold || accuracy < floor {
            continue;
        }
        mask = tentative;
        current_accuracy = accuracy;
        debug_assert!(current_accuracy >= floor);
    }

    let retained_accuracy = class_accuracy_with_mask(model, &spectra, &mask, class);
    debug_assert_eq!(retained_accuracy, current_accuracy);
    debug_assert!(mask.is_symmetric());
    let frequency_count = mask.count_ones();
    Ok(DominantFrequencyMap {
        class_id: class,
        mask,
        retained_accuracy,
        standard_accuracy,
        budget: config.budget,
        source_model_id: model.model_id(),
        frequency_count,
    })
}

/// One DFM per class, classes processed independently (and in parallel).
pub fn compute_all_dfms(
    model: &ClassifierModel,
    test_set: &[LabeledImage],
    class_count: usize,
    config: &DfmSearchConfig,
) -> Result<Vec<DominantFrequencyMap>, DfmError> {
    let per_class: Vec<Vec<LabeledImage>> = (0..class_count)
        .map(|c| gather(test_set, &subset_by_class(test_set, c)))
        .collect();
    if let Some(missing) = per_class.iter().position(|imgs| imgs.is_empty()) {
        return Err(DfmError::EmptyClass { class: missing });
    }
    let results = exec::map_collect(&per_class, |images| compute_dfm(model, images, config));
    results.into_iter().collect()
}

/// Summary over a set of DFMs: per-class retained-cell counts plus coverage
/// union and intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct DfmStats {
    pub per_class_counts: Vec<(usize, usize)>,
    pub mean_count: f64,
    pub union: FrequencyMask,
    pub intersection: FrequencyMask,
}

impl DfmStats {
    pub fn union_count(&self) -> usize {
        self.union.count_ones()
    }

    pub fn intersection_count(&self) -> usize {
        self.intersection.count_ones()
    }
}

pub fn dfm_stats(dfms: &[DominantFrequencyMap]) -> Result<DfmStats, DfmError> {
    let Some(first) = dfms.first() else {
        return Err(DfmError::BadConfig("dfm_stats needs a non-empty set".into()));
    };
    let (h, w) = (first.mask.height(), first.mask.width());
    let mut union = FrequencyMask::all_zeros(h, w);
    let mut intersection = FrequencyMask::all_ones(h, w);
    let mut per_class_counts = Vec::with_capacity(dfms.len());
    let mut total = 0usize;
    for dfm in dfms {
        per_class_counts.push((dfm.class_id, dfm.frequency_count));
        total += dfm.frequency_count;
        for u in 0..h {
            for v in 0..w {
                let bit = dfm.mask.get(u, v);
                if bit {
                    union.set(u, v, true);
                } else {
                    intersection.set(u, v, false);
                }
            }
        }
    }
    Ok(DfmStats {
        per_class_counts,
        mean_count: total as f64 / dfms.len() as f64,
        union,
        intersection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LayerSpec, ParamSet};
    use std::f64::consts::TAU;

    /// Linear 3-class fixture: classes 0 and 1 carry fixed-phase gratings at
    /// distinct planted pairs, class 2 is plain gray. The hand-built dense
    /// model projects onto each grating and gives class 2 a small bias, so
    /// removing a planted pair collapses its class onto class 2.
    struct LinearFixture {
        model: ClassifierModel,
        images: Vec<LabeledImage>,
        pairs: [(usize, usize); 2],
        size: usize,
    }

    fn grating(size: usize, (u, v): (usize, usize), amplitude: f64) -> ImageTensor {
        let c = (size / 2) as f64;
        let (du, dv) = (u as f64 - c, v as f64 - c);
        let mut img = ImageTensor::zeros(1, size, size);
        for y in 0..size {
            for x in 0..size {
                let ang = TAU * (du * y as f64 + dv * x as f64) / size as f64;
                img.set(0, y, x, 0.5 + amplitude * ang.cos());
            }
        }
        img
    }

    fn linear_fixture() -> LinearFixture {
        let size = 16usize;
        let pairs = [(8 + 3, 8 + 2), (8 + 2, 8 + 5)];
        let amplitude = 0.2;

        let mut images = Vec::new();
        for (ix, &pair) in pairs.iter().enumerate() {
            for m in 0..6 {
                images.push(LabeledImage {
                    image: grating(size, pair, amplitude),
                    class: ix,
                    index: m,
                });
            }
        }
        for m in 0..6 {
            images.push(LabeledImage {
                image: ImageTensor::constant(1, size, size, 0.5),
                class: 2,
                index: m,
            });
        }

        let mut model = ClassifierModel::new(
            vec![
                LayerSpec::Flatten,
                LayerSpec::Dense { out_dim: 3 },
            ],
            (1, size, size),
            3,
            0,
        )
        .unwrap();
        let mut params = ParamSet::zeros_like(model.params());
        let template = [grating(size, pairs[0], 1.0), grating(size, pairs[1], 1.0)];
        let scale = 4.0 / (size * size) as f64;
        for cls in 0..2 {
            for (j, &px) in template[cls].data().iter().enumerate() {
                params.layers[1].weights[cls * size * size + j] = (px - 0.5) * scale;
            }
        }
        params.layers[1].bias[2] = 0.01;
        *model.params_mut() = params;
        LinearFixture {
            model,
            images,
            pairs,
            size,
        }
    }

    #[test]
    fn fixture_classifies_perfectly_and_collapses_without_its_pair() {
        let fx = linear_fixture();
        assert_eq!(evaluate(&fx.model, &fx.images), 1.0);
        // removing only the planted pair collapses class 0's accuracy
        let class0 = gather(&fx.images, &subset_by_class(&fx.images, 0));
        let mut mask = FrequencyMask::all_ones(fx.size, fx.size);
        mask.clear_pair(fx.pairs[0].0, fx.pairs[0].1);
        let spectra: Vec<Spectrum> = class0.iter().map(|li| dft2(&li.image).unwrap()).collect();
        let acc = class_accuracy_with_mask(&fx.model, &spectra, &mask, 0);
        assert_eq!(acc, 0.0);
    }

    #[test]
    fn search_recovers_exactly_the_planted_pair() {
        let fx = linear_fixture();
        let config = DfmSearchConfig::new(3);
        let class0 = gather(&fx.images, &subset_by_class(&fx.images, 0));
        let dfm = compute_dfm(&fx.model, &class0, &config).unwrap();
        assert_eq!(dfm.frequency_count, 2);
        assert!(dfm.mask.get(fx.pairs[0].0, fx.pairs[0].1));
        let (mu, mv) = mirror_coord(fx.size, fx.size, fx.pairs[0].0, fx.pairs[0].1);
        assert!(dfm.mask.get(mu, mv));
        assert!(!dfm.mask.get(fx.pairs[1].0, fx.pairs[1].1));
        assert_eq!(dfm.standard_accuracy, 1.0);
        assert!(dfm.retained_accuracy >= 0.7 * dfm.standard_accuracy);
    }

    #[test]
    fn all_classes_get_their_own_pair_and_not_the_others() {
        let fx = linear_fixture();
        let config = DfmSearchConfig::new(5);
        let dfms = compute_all_dfms(&fx.model, &fx.images, 3, &config).unwrap();
        assert_eq!(dfms.len(), 3);
        for cls in 0..2 {
            assert!(dfms[cls].mask.get(fx.pairs[cls].0, fx.pairs[cls].1));
            let other = fx.pairs[1 - cls];
            assert!(!dfms[cls].mask.get(other.0, other.1));
            assert!(dfms[cls].mask.is_symmetric());
        }
        // the gray class never depends on any frequency
        assert_eq!(dfms[2].frequency_count, 0);
        assert_eq!(dfms[2].retained_accuracy, 1.0);
    }

    #[test]
    fn search_is_deterministic() {
        let fx = linear_fixture();
        let config = DfmSearchConfig::new(9);
        let a = compute_all_dfms(&fx.model, &fx.images, 3, &config).unwrap();
        let b = compute_all_dfms(&fx.model, &fx.images, 3, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_classifier_keeps_nothing() {
        // model with a positive bias for class 0 and zero weights predicts
        // class 0 regardless of input
        let size = 8usize;
        let mut model = ClassifierModel::new(
            vec![LayerSpec::Flatten, LayerSpec::Dense { out_dim: 2 }],
            (1, size, size),
            2,
            0,
        )
        .unwrap();
        let mut params = ParamSet::zeros_like(model.params());
        params.layers[1].bias[0] = 1.0;
        *model.params_mut() = params;

        let images: Vec<LabeledImage> = (0..5)
            .map(|m| LabeledImage {
                image: ImageTensor::constant(1, size, size, 0.4),
                class: 0,
                index: m,
            })
            .collect();
        let dfm = compute_dfm(&model, &images, &DfmSearchConfig::new(1)).unwrap();
        assert_eq!(dfm.frequency_count, 0);
        assert_eq!(dfm.standard_accuracy, 1.0);
        assert_eq!(dfm.retained_accuracy, 1.0);
    }

    #[test]
    fn degenerate_class_is_an_error() {
        let size = 8usize;
        let mut model = ClassifierModel::new(
            vec![LayerSpec::Flatten, LayerSpec::Dense { out_dim: 2 }],
            (1, size, size),
            2,
            0,
        )
        .unwrap();
        let mut params = ParamSet::zeros_like(model.params());
        params.layers[1].bias[0] = 1.0;
        *model.params_mut() = params;
        let images: Vec<LabeledImage> = (0..4)
            .map(|m| LabeledImage {
                image: ImageTensor::constant(1, size, size, 0.4),
                class: 1,
                index: m,
            })
            .collect();
        assert!(matches!(
            compute_dfm(&model, &images, &DfmSearchConfig::new(1)),
            Err(DfmError::DegenerateClass { class: 1 })
        ));
    }

    #[test]
    fn mixed_classes_and_missing_classes_error() {
        let fx = linear_fixture();
        let err = compute_dfm(&fx.model, &fx.images, &DfmSearchConfig::new(1)).unwrap_err();
        assert!(matches!(err, DfmError::MixedClasses(..)));
        let only_two: Vec<LabeledImage> = fx
            .images
            .iter()
            .filter(|li| li.class < 2)
            .cloned()
            .collect();
        assert!(matches!(
            compute_all_dfms(&fx.model, &only_two, 3, &DfmSearchConfig::new(1)),
            Err(DfmError::EmptyClass { class: 2 })
        ));
    }

    #[test]
    fn filtering_with_a_dfm_is_idempotent_when_no_clamping_occurs() {
        let fx = linear_fixture();
        let config = DfmSearchConfig::new(7);
        let class0 = gather(&fx.images, &subset_by_class(&fx.images, 0));
        let dfm = compute_dfm(&fx.model, &class0, &config).unwrap();
        let img = &fx.images[0].image;
        let once = crate::spectral::filter_image(img, &dfm.mask).unwrap();
        let twice = crate::spectral::filter_image(&once, &dfm.mask).unwrap();
        assert!(twice.max_abs_diff(&once) < 1e-6);
    }

    #[test]
    fn stats_count_cells_and_coverage() {
        let all_ones = DominantFrequencyMap {
            class_id: 0,
            mask: FrequencyMask::all_ones(32, 32),
            retained_accuracy: 1.0,
            standard_accuracy: 1.0,
            budget: 0.3,
            source_model_id: "x".into(),
            frequency_count: 1024,
        };
        let stats = dfm_stats(std::slice::from_ref(&all_ones)).unwrap();
        assert_eq!(stats.per_class_counts, vec![(0, 1024)]);
        assert_eq!(stats.union_count(), 1024);

        let mut a = FrequencyMask::all_zeros(8, 8);
        a.set_pair(1, 2);
        let mut b = FrequencyMask::all_zeros(8, 8);
        b.set_pair(2, 5);
        let mk = |class_id, mask: FrequencyMask| DominantFrequencyMap {
            class_id,
            frequency_count: mask.count_ones(),
            mask,
            retained_accuracy: 1.0,
            standard_accuracy: 1.0,
            budget: 0.3,
            source_model_id: "x".into(),
        };
        let stats = dfm_stats(&[mk(0, a), mk(1, b)]).unwrap();
        assert_eq!(stats.union_count(), 4);
        assert_eq!(stats.intersection_count(), 0);
        assert_eq!(stats.mean_count, 2.0);
        assert_eq!(stats.per_class_counts, vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn raster_and_random_orders_also_respect_the_budget() {
        let fx = linear_fixture();
        for order in [VisitOrder::Raster, VisitOrder::RandomSeeded, VisitOrder::EnergyDescending] {
            let config = DfmSearchConfig {
                visit_order: order,
                ..DfmSearchConfig::new(13)
            };
            let class1 = gather(&fx.images, &subset_by_class(&fx.images, 1));
            let dfm = compute_dfm(&fx.model, &class1, &config).unwrap();
            assert!(dfm.retained_accuracy >= 0.7 * dfm.standard_accuracy);
            assert!(dfm.mask.get(fx.pairs[1].0, fx.pairs[1].1));
        }
    }
}
