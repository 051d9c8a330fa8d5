//! Datasets: synthetic planted-shortcut generation, the CIFAR-10 binary
//! loader, deterministic views, and binary persistence for every artifact.
//!
//! The synthetic dataset plants two independent sources of class evidence in
//! every image: a single-frequency sinusoid per class (the shortcut, with
//! random phase so it lives in spectral magnitude) and an oriented band of
//! gratings (broadband evidence). A model can reach high accuracy through
//! either route, which is the property the DFM machinery is exercised
//! against. Both margins are checked at generation time by two linear probe
//! classifiers rather than assumed.

pub mod cifar;
pub mod persist;
pub mod probes;

use crate::exec;
use crate::seeding::derive_seed;
use crate::spectral::{mirror_coord, ImageTensor};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid synthetic spec: {0}")]
    BadSpec(String),
    #[error("synthetic generation margin failed: {probe} probe accuracy {accuracy:.3} below {required:.2}")]
    GenerationMargin {
        probe: &'static str,
        accuracy: f64,
        required: f64,
    },
    #[error("class {class} is empty or missing")]
    EmptyClass { class: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message} (byte offset {offset})")]
    Format {
        path: String,
        offset: usize,
        message: String,
    },
    #[error("config error: {0}")]
    Config(String),
}

/// One sample: image, class label, and position within its split.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image: ImageTensor,
    pub class: usize,
    pub index: usize,
}

/// Where a bundle came from; `digest` is a SHA-256 hex string over the
/// source (canonical spec text or raw file bytes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Synthetic { digest: String, summary: String },
    File { digest: String, summary: String },
}

/// Train/val/test splits plus class count and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub train: Vec<LabeledImage>,
    pub val: Vec<LabeledImage>,
    pub test: Vec<LabeledImage>,
    pub class_count: usize,
    pub provenance: Provenance,
}

impl DatasetBundle {
    pub fn image_shape(&self) -> (usize, usize, usize) {
        let img = &self.train[0].image;
        (img.channels(), img.height(), img.width())
    }
}

/// Oriented-grating band parameters: an annulus sector of frequency cells
/// around each class's orientation, each carrying a random-phase grating.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    pub radius_min: f64,
    pub radius_max: f64,
    pub half_width_degrees: f64,
    pub amplitude: f64,
}

impl Default for BandSpec {
    fn default() -> Self {
        Self {
            radius_min: 3.0,
            radius_max: 7.0,
            half_width_degrees: 25.0,
            amplitude: 0.012,
        }
    }
}

/// Parameters of the synthetic planted-shortcut dataset.
///
/// `samples_per_class` counts training images; validation and test splits
/// hold `max(8, n/4)` and `max(16, n/2)` images per class. Images are
/// single-channel, `size x size`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub size: usize,
    pub samples_per_class: usize,
    /// One DC-centered frequency coordinate per class.
    pub shortcut_pairs: Vec<(usize, usize)>,
    pub shortcut_amplitude: f64,
    pub band: BandSpec,
    pub noise_std: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// The default 4-class, 32x32 dataset used across the test suites.
    pub fn with_defaults(seed: u64) -> Self {
        let classes = 4;
        let size = 32;
        Self {
            classes,
            size,
            samples_per_class: 128,
            shortcut_pairs: Self::default_shortcut_pairs(classes, size),
            shortcut_amplitude: 0.012,
            band: BandSpec::default(),
            noise_std: 0.02,
            seed,
        }
    }

    /// Evenly spread shortcut coordinates at radius ~10, outside the default
    /// broadband annulus, pairwise distinct and distinct from their mirrors.
    pub fn default_shortcut_pairs(classes: usize, size: usize) -> Vec<(usize, usize)> {
        let center = (size / 2) as f64;
        let radius = 10.0_f64.min(center - 2.0);
        let mut pairs = Vec::with_capacity(classes);
        for c in 0..classes {
            // angles in the upper half-plane so no pair is another's mirror
            let angle = (c as f64 + 0.5) * std::f64::consts::PI / classes as f64;
            let du = (radius * angle.sin()).round() as i64;
            let dv = (radius * angle.cos()).round() as i64;
            pairs.push((
                (size as i64 / 2 + du) as usize,
                (size as i64 / 2 + dv) as usize,
            ));
        }
        pairs
    }

    pub fn val_per_class(&self) -> usize {
        (self.samples_per_class / 4).max(8)
    }

    pub fn test_per_class(&self) -> usize {
        (self.samples_per_class / 2).max(16)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.classes < 2 {
            return Err(DataError::BadSpec("need at least 2 classes".into()));
        }
        if !self.size.is_power_of_two() {
            return Err(DataError::BadSpec(format!(
                "size {} must be a power of two",
                self.size
            )));
        }
        if self.samples_per_class == 0 {
            return Err(DataError::BadSpec("samples_per_class must be > 0".into()));
        }
        if self.shortcut_pairs.len() != self.classes {
            return Err(DataError::BadSpec(format!(
                "expected {} shortcut pairs, got {}",
                self.classes,
                self.shortcut_pairs.len()
            )));
        }
        if !(self.shortcut_amplitude > 0.0) || !(self.band.amplitude > 0.0) {
            return Err(DataError::BadSpec("amplitudes must be positive".into()));
        }
        if self.noise_std < 0.0 {
            return Err(DataError::BadSpec("noise_std must be >= 0".into()));
        }
        let center = (self.size / 2, self.size / 2);
        for (ix, &(u, v)) in self.shortcut_pairs.iter().enumerate() {
            if u >= self.size || v >= self.size {
                return Err(DataError::BadSpec(format!(
                    "shortcut pair {ix} at ({u}, {v}) out of bounds"
                )));
            }
            let mirror = mirror_coord(self.size, self.size, u, v);
            if (u, v) == mirror || (u, v) == center {
                return Err(DataError::BadSpec(format!(
                    "shortcut pair {ix} at ({u}, {v}) is self-mirrored"
                )));
            }
            for (jx, &other) in self.shortcut_pairs.iter().enumerate() {
                if jx != ix && (other == (u, v) || other == mirror) {
                    return Err(DataError::BadSpec(format!(
                        "shortcut pairs {ix} and {jx} collide (directly or via mirrors)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical (upper half-plane) band cells of one class, as DC-centered
    /// coordinates. Excludes every class's shortcut cell.
    pub fn band_cells(&self, class: usize) -> Vec<(usize, usize)> {
        let n = self.size as i64;
        let c = n / 2;
        let theta = class as f64 * 180.0 / self.classes as f64;
        let mut cells = Vec::new();
        for du in 0..=(self.band.radius_max.ceil() as i64) {
            for dv in -(self.band.radius_max.ceil() as i64)..=(self.band.radius_max.ceil() as i64) {
                if du == 0 && dv <= 0 {
                    continue; // canonical representative of each mirror pair
                }
                let r = ((du * du + dv * dv) as f64).sqrt();
                if r < self.band.radius_min || r > self.band.radius_max {
                    continue;
                }
                let phi = (du as f64).atan2(dv as f64).to_degrees(); // [0, 180)
                let mut diff = (phi - theta).abs() % 180.0;
                if diff > 90.0 {
                    diff = 180.0 - diff;
                }
                if diff > self.band.half_width_degrees {
                    continue;
                }
                let coord = ((c + du) as usize, (c + dv) as usize);
                if self.shortcut_pairs.iter().any(|&p| {
                    p == coord || mirror_coord(self.size, self.size, p.0, p.1) == coord
                }) {
                    continue;
                }
                cells.push(coord);
            }
        }
        cells
    }

    /// Canonical textual form; hashed for provenance.
    pub fn canonical_text(&self) -> String {
        let pairs: Vec<String> = self
            .shortcut_pairs
            .iter()
            .map(|(u, v)| format!("{u}:{v}"))
            .collect();
        format!(
            "classes = {}\nsize = {}\nsamples_per_class = {}\nshortcut_pairs = {}\n\
             shortcut_amplitude = {}\nband_radius_min = {}\nband_radius_max = {}\n\
             band_half_width_degrees = {}\nband_amplitude = {}\nnoise_std = {}\nseed = {}\n",
            self.classes,
            self.size,
            self.samples_per_class,
            pairs.join(","),
            self.shortcut_amplitude,
            self.band.radius_min,
            self.band.radius_max,
            self.band.half_width_degrees,
            self.band.amplitude,
            self.noise_std,
            self.seed
        )
    }

    /// Parse a spec from the key-value file format written by
    /// [`SyntheticSpec::canonical_text`]. Unknown keys are hard errors.
    pub fn from_file_text(text: &str) -> Result<Self, DataError> {
        let mut file = crate::keyval::KeyValueFile::parse(text)
            .map_err(|e| DataError::Config(e.to_string()))?;
        let mut spec_err = |e: crate::keyval::KeyValError| DataError::Config(e.to_string());
        let mut top = file.section("");
        let classes = top.opt_usize("classes").map_err(&mut spec_err)?.unwrap_or(4);
        let size = top.opt_usize("size").map_err(&mut spec_err)?.unwrap_or(32);
        let samples_per_class = top
            .opt_usize("samples_per_class")
            .map_err(&mut spec_err)?
            .unwrap_or(128);
        let seed = top.opt_u64("seed").map_err(&mut spec_err)?.unwrap_or(0);
        let shortcut_amplitude = top
            .opt_f64("shortcut_amplitude")
            .map_err(&mut spec_err)?
            .unwrap_or(0.012);
        let noise_std = top
            .opt_f64("noise_std")
            .map_err(&mut spec_err)?
            .unwrap_or(0.02);
        let defaults = BandSpec::default();
        let band = BandSpec {
            radius_min: top
                .opt_f64("band_radius_min")
                .map_err(&mut spec_err)?
                .unwrap_or(defaults.radius_min),
            radius_max: top
                .opt_f64("band_radius_max")
                .map_err(&mut spec_err)?
                .unwrap_or(defaults.radius_max),
            half_width_degrees: top
                .opt_f64("band_half_width_degrees")
                .map_err(&mut spec_err)?
                .unwrap_or(defaults.half_width_degrees),
            amplitude: top
                .opt_f64("band_amplitude")
                .map_err(&mut spec_err)?
                .unwrap_or(defaults.amplitude),
        };
        let shortcut_pairs = match top
            .opt_list("shortcut_pairs", |item| {
                let (u, v) = item
                    .split_once(':')
                    .ok_or_else(|| format!("expected `u:v`, got `{item}`"))?;
                Ok((
                    u.trim().parse::<usize>().map_err(|e| e.to_string())?,
                    v.trim().parse::<usize>().map_err(|e| e.to_string())?,
                ))
            })
            .map_err(&mut spec_err)?
        {
            Some(pairs) => pairs,
            None => Self::default_shortcut_pairs(classes, size),
        };
        file.ensure_consumed().map_err(spec_err)?;
        let spec = Self {
            classes,
            size,
            samples_per_class,
            shortcut_pairs,
            shortcut_amplitude,
            band,
            noise_std,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

const SPLIT_TRAIN: u64 = 0;
const SPLIT_VAL: u64 = 1;
const SPLIT_TEST: u64 = 2;

fn synth_image(spec: &SyntheticSpec, split: u64, class: usize, ordinal: usize) -> ImageTensor {
    let n = spec.size;
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(
        spec.seed,
        "synth-image",
        &[split, class as u64, ordinal as u64],
    ));
    let noise = Normal::new(0.0, spec.noise_std.max(f64::MIN_POSITIVE)).expect("std positive");

    // Each component is a cosine grating with wave vector (du, dv) cycles
    // per image and a fresh phase.
    let mut components: Vec<(f64, f64, f64, f64)> = Vec::new(); // (du, dv, amplitude, phase)
    for &(u, v) in spec.band_cells(class).iter() {
        let du = u as f64 - (n / 2) as f64;
        let dv = v as f64 - (n / 2) as f64;
        components.push((du, dv, spec.band.amplitude, rng.gen::<f64>() * TAU));
    }
    let (su, sv) = spec.shortcut_pairs[class];
    components.push((
        su as f64 - (n / 2) as f64,
        sv as f64 - (n / 2) as f64,
        spec.shortcut_amplitude,
        rng.gen::<f64>() * TAU,
    ));

    let mut data = vec![0.5f64; n * n];
    for &(du, dv, amp, phase) in &components {
        for y in 0..n {
            let row_phase = TAU * du * y as f64 / n as f64 + phase;
            let row = &mut data[y * n..(y + 1) * n];
            for (x, px) in row.iter_mut().enumerate() {
                *px += amp * (row_phase + TAU * dv * x as f64 / n as f64).cos();
            }
        }
    }
    if spec.noise_std > 0.0 {
        for px in &mut data {
            *px += noise.sample(&mut rng);
        }
    }
    for px in &mut data {
        *px = px.clamp(0.0, 1.0);
    }
    ImageTensor::new(1, n, n, data).expect("sized buffer")
}

fn synth_split(spec: &SyntheticSpec, split: u64, per_class: usize) -> Vec<LabeledImage> {
    let total = per_class * spec.classes;
    exec::map_indexed(total, |ix| {
        let class = ix % spec.classes;
        let ordinal = ix / spec.classes;
        LabeledImage {
            image: synth_image(spec, split, class, ordinal),
            class,
            index: ix,
        }
    })
}

/// Generate the synthetic planted-shortcut dataset and check both evidence
/// margins with linear probes: the shortcut probe (spectral magnitudes at
/// the planted pairs) must reach 95% test accuracy and the broadband probe
/// (band energies, shortcut cells excluded) must reach 85%.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<DatasetBundle, DataError> {
    spec.validate()?;
    for c in 0..spec.classes {
        if spec.band_cells(c).is_empty() {
            return Err(DataError::BadSpec(format!(
                "class {c} has an empty broadband band"
            )));
        }
    }
    let train = synth_split(spec, SPLIT_TRAIN, spec.samples_per_class);
    let val = synth_split(spec, SPLIT_VAL, spec.val_per_class());
    let test = synth_split(spec, SPLIT_TEST, spec.test_per_class());

    let digest = hex_digest(spec.canonical_text().as_bytes());
    let bundle = DatasetBundle {
        train,
        val,
        test,
        class_count: spec.classes,
        provenance: Provenance::Synthetic {
            digest,
            summary: format!(
                "synthetic {} classes, {}x{}, seed {}",
                spec.classes, spec.size, spec.size, spec.seed
            ),
        },
    };

    let shortcut_acc = probes::shortcut_probe_accuracy(&bundle, spec);
    if shortcut_acc < 0.95 {
        return Err(DataError::GenerationMargin {
            probe: "shortcut",
            accuracy: shortcut_acc,
            required: 0.95,
        });
    }
    let band_acc = probes::broadband_probe_accuracy(&bundle, spec);
    if band_acc < 0.85 {
        return Err(DataError::GenerationMargin {
            probe: "broadband",
            accuracy: band_acc,
            required: 0.85,
        });
    }
    Ok(bundle)
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Indices of all images with the given class, in dataset order.
/// A non-copying view: pair with [`gather`] to materialise.
pub fn subset_by_class(images: &[LabeledImage], class: usize) -> Vec<usize> {
    images
        .iter()
        .enumerate()
        .filter(|(_, li)| li.class == class)
        .map(|(ix, _)| ix)
        .collect()
}

/// Seeded Fisher-Yates permutation of `0..n`.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order
}

/// Disjoint split of `0..n` into (kept, holdout) with `holdout_fraction`
/// going to the second part, seeded.
pub fn split_indices(n: usize, holdout_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let order = shuffled_indices(n, seed);
    let holdout = ((n as f64) * holdout_fraction).round() as usize;
    let cut = n - holdout.min(n);
    (order[..cut].to_vec(), order[cut..].to_vec())
}

/// Materialise a view. Cloned samples keep their original `index` field.
pub fn gather(images: &[LabeledImage], indices: &[usize]) -> Vec<LabeledImage> {
    indices.iter().map(|&ix| images[ix].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dft2;

    fn small_spec(seed: u64) -> SyntheticSpec {
        let mut spec = SyntheticSpec::with_defaults(seed);
        spec.samples_per_class = 24;
        spec
    }

    #[test]
    fn default_spec_is_valid() {
        SyntheticSpec::with_defaults(7).validate().unwrap();
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = small_spec(11);
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_histogram_is_exactly_balanced() {
        let bundle = generate_synthetic(&small_spec(3)).unwrap();
        for split in [&bundle.train, &bundle.val, &bundle.test] {
            let mut counts = vec![0usize; bundle.class_count];
            for li in split.iter() {
                counts[li.class] += 1;
            }
            assert!(counts.iter().all(|&c| c == counts[0]));
        }
    }

    #[test]
    fn pixels_stay_in_unit_range() {
        let bundle = generate_synthetic(&small_spec(5)).unwrap();
        for li in bundle.train.iter().chain(&bundle.val).chain(&bundle.test) {
            assert!(li.image.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn planted_magnitude_dominates_other_classes_at_its_coordinate() {
        let spec = small_spec(13);
        let bundle = generate_synthetic(&spec).unwrap();
        let all: Vec<&LabeledImage> = bundle.train.iter().chain(&bundle.test).collect();
        let mut wins = 0usize;
        let mut total = 0usize;
        for li in &all {
            let (u, v) = spec.shortcut_pairs[li.class];
            let own = dft2(&li.image).unwrap().get(0, u, v).norm();
            let max_other = all
                .iter()
                .filter(|o| o.class != li.class)
                .map(|o| dft2(&o.image).unwrap().get(0, u, v).norm())
                .fold(0.0, f64::max);
            total += 1;
            if own > max_other {
                wins += 1;
            }
        }
        // own-class magnitude beats every foreign image in >= 99% of samples
        assert!(wins as f64 >= 0.99 * total as f64, "{wins}/{total}");
    }

    #[test]
    fn margin_failure_is_reported() {
        let mut spec = small_spec(17);
        spec.shortcut_amplitude = 1e-6; // indistinguishable from noise
        let err = generate_synthetic(&spec).unwrap_err();
        assert!(matches!(
            err,
            DataError::GenerationMargin {
                probe: "shortcut",
                ..
            }
        ));
    }

    #[test]
    fn subset_sizes_sum_to_dataset_size() {
        let bundle = generate_synthetic(&small_spec(19)).unwrap();
        let total: usize = (0..bundle.class_count)
            .map(|c| subset_by_class(&bundle.test, c).len())
            .sum();
        assert_eq!(total, bundle.test.len());
    }

    #[test]
    fn shuffle_and_split_are_seeded_views() {
        assert_eq!(shuffled_indices(50, 9), shuffled_indices(50, 9));
        assert_ne!(shuffled_indices(50, 9), shuffled_indices(50, 10));
        let (a, b) = split_indices(100, 0.1, 4);
        assert_eq!(a.len(), 90);
        assert_eq!(b.len(), 10);
        let mut seen = vec![false; 100];
        for &ix in a.iter().chain(&b) {
            assert!(!seen[ix], "index {ix} appears twice");
            seen[ix] = true;
        }
    }

    #[test]
    fn spec_round_trips_through_file_text() {
        let spec = SyntheticSpec::with_defaults(23);
        let parsed = SyntheticSpec::from_file_text(&spec.canonical_text()).unwrap();
        assert_eq!(parsed, spec);
    }

    #[test]
    fn spec_file_rejects_unknown_keys() {
        let err = SyntheticSpec::from_file_text("classes = 4\nturbo = yes\n").unwrap_err();
        assert!(err.to_string().contains("turbo"));
    }
}
