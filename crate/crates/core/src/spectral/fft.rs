//! Iterative radix-2 Cooley-Tukey transform for power-of-two lengths.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// In-place radix-2 FFT. `inverse` flips the twiddle sign; no scaling is
/// applied in either direction (the caller divides by the length once for
/// a full inverse).
pub(crate) fn fft_inplace(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two(), "radix-2 transform needs 2^k length");
    if n <= 1 {
        return;
    }

    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }

    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * TAU / len as f64;
        let wlen = Complex64::new(ang.cos(), ang.sin());
        for start in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            let half = len / 2;
            for k in 0..half {
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
                w *= wlen;
            }
        }
        len <<= 1;
    }
}

/// In-place 2D FFT over a row-major `height x width` grid: rows first, then
/// columns through a scratch buffer.
pub(crate) fn fft2_inplace(grid: &mut [Complex64], height: usize, width: usize, inverse: bool) {
    debug_assert_eq!(grid.len(), height * width);
    for row in grid.chunks_exact_mut(width) {
        fft_inplace(row, inverse);
    }
    let mut column = vec![Complex64::default(); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = grid[y * width + x];
        }
        fft_inplace(&mut column, inverse);
        for y in 0..height {
            grid[y * width + x] = column[y];
        }
    }
}
