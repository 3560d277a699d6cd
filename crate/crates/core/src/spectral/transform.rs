use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{GridSpec, ModeTable};

/// Multi-dimensional FFT between compact retained-mode coefficients and
/// physical grid values.
///
/// Real fields are transformed two at a time by packing them into the real
/// and imaginary parts of one complex transform.
pub struct Transform {
    modes: Arc<ModeTable>,
    n: usize,
    dim: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    lines: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Transform {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.resolution();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        let points = grid.points();
        Self {
            modes: grid.modes(),
            n,
            dim: grid.dimension(),
            fwd,
            inv,
            buf: vec![Complex64::new(0.0, 0.0); points],
            lines: vec![Complex64::new(0.0, 0.0); points],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.modes.grid
    }

    pub fn points(&self) -> usize {
        self.buf.len()
    }

    /// Physical values of one or two real fields from their compact
    /// coefficients.
    pub fn inverse_pair(
        &mut self,
        a: &[Complex64],
        b: Option<&[Complex64]>,
        out_a: &mut [f64],
        out_b: Option<&mut [f64]>,
    ) {
        let modes = Arc::clone(&self.modes);
        self.buf.fill(Complex64::new(0.0, 0.0));
        match b {
            Some(b) => {
                for m in 0..modes.len() {
                    let (x, y) = (a[m], b[m]);
                    // a + i b
                    self.buf[modes.fft_index[m]] = Complex64::new(x.re - y.im, x.im + y.re);
                }
            }
            None => {
                for (&idx, &z) in modes.fft_index.iter().zip(a) {
                    self.buf[idx] = z;
                }
            }
        }
        self.fft_nd(true);
        for (o, z) in out_a.iter_mut().zip(&self.buf) {
            *o = z.re;
        }
        if let Some(out_b) = out_b {
            for (o, z) in out_b.iter_mut().zip(&self.buf) {
                *o = z.im;
            }
        }
    }

    /// Retained Fourier coefficients `û_k = N^{-d} Σ_x u(x) e^{-ik·x}` of
    /// one or two real grid functions.
    pub fn forward_pair(
        &mut self,
        a: &[f64],
        b: Option<&[f64]>,
        out_a: &mut [Complex64],
        out_b: Option<&mut [Complex64]>,
    ) {
        match b {
            Some(b) => {
                for ((z, &x), &y) in self.buf.iter_mut().zip(a).zip(b) {
                    *z = Complex64::new(x, y);
                }
            }
            None => {
                for (z, &x) in self.buf.iter_mut().zip(a) {
                    *z = Complex64::new(x, 0.0);
                }
            }
        }
        self.fft_nd(false);
        let scale = 1.0 / self.buf.len() as f64;
        let modes = Arc::clone(&self.modes);
        match out_b {
            Some(out_b) => {
                for m in 0..modes.len() {
                    let z = self.buf[modes.fft_index[m]];
                    let zc = self.buf[modes.fft_index[modes.conj[m]]].conj();
                    out_a[m] = (z + zc) * (0.5 * scale);
                    let d = (z - zc) * (0.5 * scale);
                    // (z - zc) / 2i
                    out_b[m] = Complex64::new(d.im, -d.re);
                }
            }
            None => {
                for (o, &idx) in out_a.iter_mut().zip(&modes.fft_index) {
                    *o = self.buf[idx] * scale;
                }
            }
        }
    }

    /// N-d transform that skips the 1-d lines which are zero on input
    /// (inverse) or never read on output (forward). Only retained wavenumbers
    /// are nonzero in spectral space, so a line is needed only when its
    /// indices on the axes transformed in spectral space are retained.
    fn fft_nd(&mut self, inverse: bool) {
        let axes: Vec<usize> = if inverse { (0..self.dim).rev().collect() } else { (0..self.dim).collect() };
        for axis in axes {
            self.axis_pass(axis, inverse);
        }
    }

    /// 1-d transforms along `axis` for the slabs whose lower-axis indices are
    /// all retained.
    fn axis_pass(&mut self, axis: usize, inverse: bool) {
        let fft = if inverse { &self.inv } else { &self.fwd };
        let n = self.n;
        let cut = self.modes.grid.cutoff() as usize;
        let retained = |i: usize| i <= cut || i >= n - cut;
        let stride = n.pow((self.dim - 1 - axis) as u32);
        let block = n * stride;
        for (slab_index, slab) in self.buf.chunks_exact_mut(block).enumerate() {
            let mut rest = slab_index;
            let mut keep = true;
            for _ in 0..axis {
                keep &= retained(rest % n);
                rest /= n;
            }
            if !keep {
                continue;
            }
            if stride == 1 {
                fft.process_with_scratch(slab, &mut self.scratch);
                continue;
            }
            let lines = &mut self.lines[..block];
            transpose(slab, lines, n, stride);
            fft.process_with_scratch(lines, &mut self.scratch);
            transpose(lines, slab, stride, n);
        }
    }
}

const TILE: usize = 8;

/// `dst[c * rows + r] = src[r * cols + c]`, in cache-sized tiles.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    assert!(src.len() >= rows * cols && dst.len() >= rows * cols);
    for r0 in (0..rows).step_by(TILE) {
        let r1 = (r0 + TILE).min(rows);
        for c0 in (0..cols).step_by(TILE) {
            let c1 = (c0 + TILE).min(cols);
            for r in r0..r1 {
                for c in c0..c1 {
                    // SAFETY: r < rows and c < cols, and both slices hold rows * cols values
                    unsafe { *dst.get_unchecked_mut(c * rows + r) = *src.get_unchecked(r * cols + c) };
                }
            }
        }
    }
}
