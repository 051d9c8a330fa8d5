//! 2D discrete Fourier transforms, Hermitian-symmetric binary masks, and the
//! spectral filtering operation used by DFM search and DFM-X augmentation.
//!
//! Conventions, fixed once for the whole crate:
//!
//! - Spectra are stored DC-centered: the zero-frequency component sits at
//!   `(height/2, width/2)` and masks use the same indexing.
//! - The forward transform is unscaled; the inverse divides by
//!   `height * width`, so `idft2(dft2(x)) == x` up to rounding.
//! - Dimensions must be powers of two (radix-2 transform).
//! - One mask is shared across all channels of an image.

mod fft;

use num_complex::Complex64;
use thiserror::Error;

/// Errors from transform and mask operations.
#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("dimensions {height}x{width} are not powers of two")]
    NonPowerOfTwo { height: usize, width: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: String, right: String },
    #[error("frequency coordinate ({u}, {v}) out of bounds for {height}x{width}")]
    OutOfBounds {
        u: usize,
        v: usize,
        height: usize,
        width: usize,
    },
    #[error("data length {got} does not match {channels}x{height}x{width}")]
    BadDataLength {
        channels: usize,
        height: usize,
        width: usize,
        got: usize,
    },
}

/// A real-valued image: `channels` row-major `height x width` planes.
///
/// Pixels live in `[0, 1]` after any clamping operation; intermediate
/// grids (e.g. input gradients reusing this container) may exceed that
/// range.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self, SpectralError> {
        if data.len() != channels * height * width {
            return Err(SpectralError::BadDataLength {
                channels,
                height,
                width,
                got: data.len(),
            });
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn constant(channels: usize, height: usize, width: usize, value: f64) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, value: f64) {
        self.data[(c * self.height + y) * self.width + x] = value;
    }

    /// One channel plane as a row-major slice.
    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    /// Clamp every sample into `[0, 1]`.
    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn dims_match(&self, other_h: usize, other_w: usize) -> bool {
        self.height == other_h && self.width == other_w
    }
}

/// A complex spectrum with the DC component at `(height/2, width/2)`.
///
/// A spectrum of a real image satisfies Hermitian symmetry: the value at
/// `(u, v)` equals the conjugate of the value at [`mirror_coord`]`(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<Complex64>,
    ) -> Result<Self, SpectralError> {
        if data.len() != channels * height * width {
            return Err(SpectralError::BadDataLength {
                channels,
                height,
                width,
                got: data.len(),
            });
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![Complex64::default(); channels * height * width],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// DC coordinate, `(height/2, width/2)`.
    pub fn center(&self) -> (usize, usize) {
        (self.height / 2, self.width / 2)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, c: usize, u: usize, v: usize) -> Complex64 {
        self.data[(c * self.height + u) * self.width + v]
    }

    pub fn set(&mut self, c: usize, u: usize, v: usize, value: Complex64) {
        self.data[(c * self.height + u) * self.width + v] = value;
    }

    /// Total spectral energy, `sum |X|^2` over channels and cells.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Binary frequency mask, DC-centered like [`Spectrum`]. Bit 1 keeps a
/// frequency, 0 removes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl FrequencyMask {
    pub fn all_ones(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![true; height * width],
        }
    }

    pub fn all_zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Result<Self, SpectralError> {
        if bits.len() != height * width {
            return Err(SpectralError::BadDataLength {
                channels: 1,
                height,
                width,
                got: bits.len(),
            });
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.width + v]
    }

    pub fn set(&mut self, u: usize, v: usize, value: bool) {
        self.bits[u * self.width + v] = value;
    }

    /// Clear a frequency together with its conjugate mirror.
    pub fn clear_pair(&mut self, u: usize, v: usize) {
        let (mu, mv) = mirror_coord(self.height, self.width, u, v);
        self.set(u, v, false);
        self.set(mu, mv, false);
    }

    /// Set a frequency together with its conjugate mirror.
    pub fn set_pair(&mut self, u: usize, v: usize) {
        let (mu, mv) = mirror_coord(self.height, self.width, u, v);
        self.set(u, v, true);
        self.set(mu, mv, true);
    }

    /// Number of retained frequency cells.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// True when every bit equals its mirrored bit.
    pub fn is_symmetric(&self) -> bool {
        for u in 0..self.height {
            for v in 0..self.width {
                let (mu, mv) = mirror_coord(self.height, self.width, u, v);
                if self.get(u, v) != self.get(mu, mv) {
                    return false;
                }
            }
        }
        true
    }
}

/// Conjugate-mirror coordinate of `(u, v)` about the DC-centered origin.
///
/// DC and the Nyquist rows/columns map to themselves.
pub fn mirror_coord(height: usize, width: usize, u: usize, v: usize) -> (usize, usize) {
    let cu = height / 2;
    let cv = width / 2;
    let mu = (2 * cu + height - u) % height;
    let mv = (2 * cv + width - v) % width;
    (mu, mv)
}

fn require_power_of_two(height: usize, width: usize) -> Result<(), SpectralError> {
    if height.is_power_of_two() && width.is_power_of_two() {
        Ok(())
    } else {
        Err(SpectralError::NonPowerOfTwo { height, width })
    }
}

/// Move DC from `(0, 0)` to the grid center (self-inverse for power-of-two
/// dimensions).
fn shift_center(grid: &[Complex64], height: usize, width: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); grid.len()];
    let hy = height / 2;
    let hx = width / 2;
    for y in 0..height {
        let ty = (y + hy) % height;
        for x in 0..width {
            let tx = (x + hx) % width;
            out[ty * width + tx] = grid[y * width + x];
        }
    }
    out
}

/// Forward 2D DFT of every channel, DC-centered, unscaled.
pub fn dft2(image: &ImageTensor) -> Result<Spectrum, SpectralError> {
    require_power_of_two(image.height, image.width)?;
    let (h, w) = (image.height, image.width);
    let mut data = Vec::with_capacity(image.data.len());
    for c in 0..image.channels {
        let mut grid: Vec<Complex64> = image
            .plane(c)
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft::fft2_inplace(&mut grid, h, w, false);
        data.extend(shift_center(&grid, h, w));
    }
    Spectrum::new(image.channels, h, w, data)
}

/// Inverse 2D DFT. Divides by `height * width`, takes the real part, and
/// clamps into `[0, 1]` when `clamp` is set.
pub fn idft2(spectrum: &Spectrum, clamp: bool) -> Result<ImageTensor, SpectralError> {
    idft2_with_residue(spectrum, clamp).map(|(img, _)| img)
}

/// Like [`idft2`], also returning the largest imaginary magnitude discarded
/// when taking the real part. For a Hermitian-symmetric spectrum the residue
/// is numerical noise.
pub fn idft2_with_residue(
    spectrum: &Spectrum,
    clamp: bool,
) -> Result<(ImageTensor, f64), SpectralError> {
    require_power_of_two(spectrum.height, spectrum.width)?;
    let (h, w) = (spectrum.height, spectrum.width);
    let scale = 1.0 / (h * w) as f64;
    let mut data = Vec::with_capacity(spectrum.data.len());
    let mut residue = 0.0f64;
    for c in 0..spectrum.channels {
        let n = h * w;
        let plane = &spectrum.data[c * n..(c + 1) * n];
        let mut grid = shift_center(plane, h, w);
        fft::fft2_inplace(&mut grid, h, w, true);
        for z in &grid {
            let re = z.re * scale;
            residue = residue.max((z.im * scale).abs());
            data.push(if clamp { re.clamp(0.0, 1.0) } else { re });
        }
    }
    let image = ImageTensor::new(spectrum.channels, h, w, data)?;
    Ok((image, residue))
}

/// Symmetrize a mask: each output bit is the OR of the input bit and its
/// mirror, so masked spectra of real images invert to real images.
/// Idempotent.
pub fn symmetrize_mask(mask: &FrequencyMask) -> FrequencyMask {
    let mut out = mask.clone();
    for u in 0..mask.height {
        for v in 0..mask.width {
            if mask.get(u, v) {
                let (mu, mv) = mirror_coord(mask.height, mask.width, u, v);
                out.set(mu, mv, true);
            }
        }
    }
    out
}

/// Element-wise mask multiplication, one shared mask for all channels.
/// The caller supplies a symmetrized mask.
pub fn apply_mask(spectrum: &Spectrum, mask: &FrequencyMask) -> Result<Spectrum, SpectralError> {
    if !spectrum.dims_match_mask(mask) {
        return Err(SpectralError::DimensionMismatch {
            left: format!("spectrum {}x{}", spectrum.height, spectrum.width),
            right: format!("mask {}x{}", mask.height, mask.width),
        });
    }
    debug_assert!(mask.is_symmetric(), "apply_mask expects a symmetrized mask");
    let mut out = spectrum.clone();
    let n = spectrum.height * spectrum.width;
    for c in 0..spectrum.channels {
        let plane = &mut out.data[c * n..(c + 1) * n];
        for (z, keep) in plane.iter_mut().zip(&mask.bits) {
            if !keep {
                *z = Complex64::default();
            }
        }
    }
    Ok(out)
}

impl Spectrum {
    fn dims_match_mask(&self, mask: &FrequencyMask) -> bool {
        self.height == mask.height && self.width == mask.width
    }
}

/// Filter an image through a binary frequency mask:
/// transform, multiply, invert, clamp into `[0, 1]`.
pub fn filter_image(
    image: &ImageTensor,
    mask: &FrequencyMask,
) -> Result<ImageTensor, SpectralError> {
    if !image.dims_match(mask.height, mask.width) {
        return Err(SpectralError::DimensionMismatch {
            left: format!("image {}x{}", image.height, image.width),
            right: format!("mask {}x{}", mask.height, mask.width),
        });
    }
    let spectrum = dft2(image)?;
    let masked = apply_mask(&spectrum, mask)?;
    idft2(&masked, true)
}

/// Zero one frequency and its conjugate mirror in every channel, so the
/// inverse image stays real.
pub fn remove_single_frequency(
    spectrum: &Spectrum,
    coord: (usize, usize),
) -> Result<Spectrum, SpectralError> {
    let (u, v) = coord;
    if u >= spectrum.height || v >= spectrum.width {
        return Err(SpectralError::OutOfBounds {
            u,
            v,
            height: spectrum.height,
            width: spectrum.width,
        });
    }
    let (mu, mv) = mirror_coord(spectrum.height, spectrum.width, u, v);
    let mut out = spectrum.clone();
    for c in 0..spectrum.channels {
        out.set(c, u, v, Complex64::default());
        out.set(c, mu, mv, Complex64::default());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::f64::consts::TAU;

    /// Direct O(N^4) DFT oracle, DC-centered to match `dft2`. Kept
    /// deliberately naive and independent of the radix-2 path.
    fn brute_force_dft2(image: &ImageTensor) -> Spectrum {
        let (h, w) = (image.height(), image.width());
        let mut out = Spectrum::zeros(image.channels(), h, w);
        for c in 0..image.channels() {
            for ku in 0..h {
                for kv in 0..w {
                    let mut acc = Complex64::default();
                    for y in 0..h {
                        for x in 0..w {
                            let ang = -TAU
                                * (ku as f64 * y as f64 / h as f64
                                    + kv as f64 * x as f64 / w as f64);
                            acc += image.get(c, y, x) * Complex64::new(ang.cos(), ang.sin());
                        }
                    }
                    // shift (ku, kv) so DC lands at the center
                    let su = (ku + h / 2) % h;
                    let sv = (kv + w / 2) % w;
                    out.set(c, su, sv, acc);
                }
            }
        }
        out
    }

    fn random_image(channels: usize, h: usize, w: usize, seed: u64) -> ImageTensor {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..channels * h * w).map(|_| rng.gen::<f64>()).collect();
        ImageTensor::new(channels, h, w, data).unwrap()
    }

    #[test]
    fn oracle_matches_hand_checked_2x2() {
        // x = [[a, b], [c, d]] has unshifted DFT
        //   X(0,0)=a+b+c+d  X(0,1)=a-b+c-d  X(1,0)=a+b-c-d  X(1,1)=a-b-c+d
        let (a, b, c, d) = (0.7, 0.1, 0.4, 0.9);
        let img = ImageTensor::new(1, 2, 2, vec![a, b, c, d]).unwrap();
        let spec = brute_force_dft2(&img);
        // center (1,1) holds DC after the shift
        assert!((spec.get(0, 1, 1).re - (a + b + c + d)).abs() < 1e-12);
        assert!((spec.get(0, 1, 0).re - (a - b + c - d)).abs() < 1e-12);
        assert!((spec.get(0, 0, 1).re - (a + b - c - d)).abs() < 1e-12);
        assert!((spec.get(0, 0, 0).re - (a - b - c + d)).abs() < 1e-12);
        for z in spec.data() {
            assert!(z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_image_has_dc_only() {
        let img = ImageTensor::constant(1, 8, 8, 1.0);
        let spec = dft2(&img).unwrap();
        let (cu, cv) = spec.center();
        for u in 0..8 {
            for v in 0..8 {
                let z = spec.get(0, u, v);
                if (u, v) == (cu, cv) {
                    assert!((z.re - 64.0).abs() < 1e-12);
                    assert!(z.im.abs() < 1e-12);
                } else {
                    assert!(z.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_image_transforms_to_zero_spectrum() {
        let spec = dft2(&ImageTensor::zeros(2, 8, 8)).unwrap();
        assert!(spec.energy() == 0.0);
    }

    #[test]
    fn dft2_matches_brute_force_oracle() {
        for (seed, ch, n) in [(1u64, 1usize, 8usize), (2, 3, 8), (3, 3, 16)] {
            let img = random_image(ch, n, n, seed);
            let fast = dft2(&img).unwrap();
            let slow = brute_force_dft2(&img);
            let max_err = fast
                .data()
                .iter()
                .zip(slow.data())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(max_err < 1e-6, "max abs error {max_err}");
        }
    }

    #[test]
    fn non_power_of_two_dimensions_are_rejected() {
        let img = ImageTensor::zeros(1, 12, 8);
        assert!(matches!(
            dft2(&img),
            Err(SpectralError::NonPowerOfTwo { .. })
        ));
    }

    #[test]
    fn round_trip_is_identity() {
        let img = random_image(3, 32, 32, 9);
        let back = idft2(&dft2(&img).unwrap(), false).unwrap();
        assert!(back.max_abs_diff(&img) < 1e-8);
    }

    #[test]
    fn dc_only_spectrum_inverts_to_constant() {
        // Under the unscaled-forward convention, DC value H*W*0.5 inverts
        // to the constant image 0.5.
        let mut spec = Spectrum::zeros(1, 8, 8);
        let (cu, cv) = spec.center();
        spec.set(0, cu, cv, Complex64::new(8.0 * 8.0 * 0.5, 0.0));
        let img = idft2(&spec, false).unwrap();
        for &v in img.data() {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_spectrum_has_tiny_imaginary_residue() {
        let img = random_image(1, 16, 16, 4);
        let spec = dft2(&img).unwrap();
        let (_, residue) = idft2_with_residue(&spec, false).unwrap();
        assert!(residue < 1e-9, "residue {residue}");
    }

    #[test]
    fn symmetrize_all_ones_is_fixed_point() {
        let mask = FrequencyMask::all_ones(8, 8);
        assert_eq!(symmetrize_mask(&mask), mask);
    }

    #[test]
    fn symmetrize_single_off_center_bit_sets_exactly_two() {
        let mut mask = FrequencyMask::all_zeros(8, 8);
        mask.set(1, 3, true);
        let sym = symmetrize_mask(&mask);
        assert_eq!(sym.count_ones(), 2);
        assert!(sym.get(1, 3));
        let (mu, mv) = mirror_coord(8, 8, 1, 3);
        assert!(sym.get(mu, mv));
        // idempotent
        assert_eq!(symmetrize_mask(&sym), sym);
    }

    #[test]
    fn symmetrize_dc_bit_stays_single() {
        let mut mask = FrequencyMask::all_zeros(8, 8);
        mask.set(4, 4, true);
        let sym = symmetrize_mask(&mask);
        assert_eq!(sym.count_ones(), 1);
        assert!(sym.get(4, 4));
    }

    #[test]
    fn mirror_is_involutive_and_fixes_dc() {
        for (h, w) in [(8usize, 8usize), (16, 32), (1, 8)] {
            assert_eq!(mirror_coord(h, w, h / 2, w / 2), (h / 2, w / 2));
            for u in 0..h {
                for v in 0..w {
                    let (mu, mv) = mirror_coord(h, w, u, v);
                    assert_eq!(mirror_coord(h, w, mu, mv), (u, v));
                }
            }
        }
    }

    #[test]
    fn identity_and_annihilator_masks() {
        let img = random_image(2, 8, 8, 5);
        let spec = dft2(&img).unwrap();
        let ones = FrequencyMask::all_ones(8, 8);
        assert_eq!(apply_mask(&spec, &ones).unwrap(), spec);
        let zeros = FrequencyMask::all_zeros(8, 8);
        assert!(apply_mask(&spec, &zeros).unwrap().energy() == 0.0);
    }

    #[test]
    fn dc_only_mask_preserves_constant_image_spectrum() {
        let img = ImageTensor::constant(1, 8, 8, 0.3);
        let spec = dft2(&img).unwrap();
        let mut mask = FrequencyMask::all_zeros(8, 8);
        mask.set(4, 4, true);
        let masked = apply_mask(&spec, &mask).unwrap();
        let diff = masked
            .data()
            .iter()
            .zip(spec.data())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10);
    }

    #[test]
    fn apply_mask_rejects_dimension_mismatch() {
        let spec = Spectrum::zeros(1, 8, 8);
        let mask = FrequencyMask::all_ones(4, 4);
        assert!(matches!(
            apply_mask(&spec, &mask),
            Err(SpectralError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn filter_with_all_ones_is_identity() {
        let img = random_image(3, 16, 16, 6);
        let filtered = filter_image(&img, &FrequencyMask::all_ones(16, 16)).unwrap();
        assert!(filtered.max_abs_diff(&img) < 1e-8);
    }

    #[test]
    fn filter_with_all_zeros_gives_zero_image() {
        let img = random_image(1, 8, 8, 7);
        let filtered = filter_image(&img, &FrequencyMask::all_zeros(8, 8)).unwrap();
        assert!(filtered.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn low_pass_reduces_checkerboard_variance() {
        let mut img = ImageTensor::zeros(1, 16, 16);
        for y in 0..16 {
            for x in 0..16 {
                img.set(0, y, x, if (x + y) % 2 == 0 { 1.0 } else { 0.0 });
            }
        }
        let mut mask = FrequencyMask::all_zeros(16, 16);
        for du in -1i64..=1 {
            for dv in -1i64..=1 {
                mask.set((8 + du) as usize, (8 + dv) as usize, true);
            }
        }
        let mask = symmetrize_mask(&mask);
        let filtered = filter_image(&img, &mask).unwrap();
        assert!(filtered.variance() < img.variance());
    }

    #[test]
    fn removing_dc_from_constant_gives_zero_image() {
        let img = ImageTensor::constant(1, 8, 8, 0.8);
        let spec = dft2(&img).unwrap();
        let removed = remove_single_frequency(&spec, spec.center()).unwrap();
        let back = idft2(&removed, false).unwrap();
        assert!(back.data().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn removing_zero_energy_coordinate_is_noop() {
        let img = ImageTensor::constant(1, 8, 8, 0.8);
        let spec = dft2(&img).unwrap();
        let removed = remove_single_frequency(&spec, (1, 2)).unwrap();
        assert_eq!(removed, spec);
    }

    #[test]
    fn removing_planted_grating_frequency_kills_its_energy() {
        // Plant a single cosine grating; removing its pair must leave the
        // inverse image with essentially no energy at that grating.
        let (h, w) = (16usize, 16usize);
        let (du, dv) = (3i64, 5i64);
        let mut img = ImageTensor::zeros(1, h, w);
        for y in 0..h {
            for x in 0..w {
                let ang = TAU * (du as f64 * y as f64 / h as f64 + dv as f64 * x as f64 / w as f64);
                img.set(0, y, x, 0.5 + 0.25 * ang.cos());
            }
        }
        let spec = dft2(&img).unwrap();
        let coord = ((h as i64 / 2 + du) as usize, (w as i64 / 2 + dv) as usize);
        assert!(spec.get(0, coord.0, coord.1).norm() > 1.0);
        let removed = remove_single_frequency(&spec, coord).unwrap();
        let back = idft2(&removed, false).unwrap();
        // project the residual image back onto the grating
        let respec = dft2(&back).unwrap();
        assert!(respec.get(0, coord.0, coord.1).norm() < 1e-9);
    }

    #[test]
    fn remove_single_frequency_rejects_out_of_bounds() {
        let spec = Spectrum::zeros(1, 8, 8);
        assert!(matches!(
            remove_single_frequency(&spec, (8, 0)),
            Err(SpectralError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn parseval_energy_is_consistent() {
        // Unscaled forward transform: sum|X|^2 = H*W * sum|x|^2.
        for seed in [11u64, 12, 13] {
            let img = random_image(2, 16, 16, seed);
            let spec = dft2(&img).unwrap();
            let pixel_energy: f64 = img.data().iter().map(|v| v * v).sum();
            let expected = pixel_energy * (16.0 * 16.0);
            let rel = (spec.energy() - expected).abs() / expected;
            assert!(rel < 1e-6, "relative error {rel}");
        }
    }

    #[test]
    fn transform_is_linear() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        for _ in 0..5 {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let b: f64 = rng.gen_range(-2.0..2.0);
            let x = random_image(1, 16, 16, rng.gen());
            let y = random_image(1, 16, 16, rng.gen());
            let combined_data: Vec<f64> = x
                .data()
                .iter()
                .zip(y.data())
                .map(|(&xv, &yv)| a * xv + b * yv)
                .collect();
            let combined = ImageTensor::new(1, 16, 16, combined_data).unwrap();
            let left = dft2(&combined).unwrap();
            let sx = dft2(&x).unwrap();
            let sy = dft2(&y).unwrap();
            let max_err = left
                .data()
                .iter()
                .zip(sx.data().iter().zip(sy.data()))
                .map(|(l, (zx, zy))| (l - (zx * a + zy * b)).norm())
                .fold(0.0, f64::max);
            assert!(max_err < 1e-9, "max err {max_err}");
        }
    }
}
