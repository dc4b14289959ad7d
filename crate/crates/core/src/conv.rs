//! Linear convolution of hypercubic arrays, directly or through a
//! zero-padded real FFT.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Full linear convolution of two d-dimensional cubes with sides `sf` and
/// `sk`; the result has side `sf + sk − 1`. Output slabs along the first
/// axis are computed in parallel, each in a fixed order.
pub fn convolve_direct(f: &[f64], sf: usize, k: &[f64], sk: usize, d: usize) -> Vec<f64> {
    let so = sf + sk - 1;
    let mut out = vec![0.0; so.pow(d as u32)];
    if d == 1 {
        accumulate_1d(&mut out, f, k);
        return out;
    }
    let f_slab = sf.pow(d as u32 - 1);
    let k_slab = sk.pow(d as u32 - 1);
    let o_slab = so.pow(d as u32 - 1);
    out.par_chunks_mut(o_slab).enumerate().for_each(|(a, slab)| {
        let lo = a.saturating_sub(sk - 1);
        let hi = a.min(sf - 1);
        for i in lo..=hi {
            let fs = &f[i * f_slab..(i + 1) * f_slab];
            if fs.iter().all(|&v| v == 0.0) {
                continue;
            }
            let ks = &k[(a - i) * k_slab..(a - i + 1) * k_slab];
            accumulate(slab, fs, sf, ks, sk, d - 1);
        }
    });
    out
}

fn accumulate(out: &mut [f64], f: &[f64], sf: usize, k: &[f64], sk: usize, d: usize) {
    if d == 1 {
        accumulate_1d(out, f, k);
        return;
    }
    let so = sf + sk - 1;
    let f_slab = sf.pow(d as u32 - 1);
    let k_slab = sk.pow(d as u32 - 1);
    let o_slab = so.pow(d as u32 - 1);
    for i in 0..sf {
        let fs = &f[i * f_slab..(i + 1) * f_slab];
        if fs.iter().all(|&v| v == 0.0) {
            continue;
        }
        for j in 0..sk {
            let ks = &k[j * k_slab..(j + 1) * k_slab];
            accumulate(&mut out[(i + j) * o_slab..(i + j + 1) * o_slab], fs, sf, ks, sk, d - 1);
        }
    }
}

fn accumulate_1d(out: &mut [f64], f: &[f64], k: &[f64]) {
    for (i, &fv) in f.iter().enumerate() {
        if fv == 0.0 {
            continue;
        }
        for (o, &kv) in out[i..i + k.len()].iter_mut().zip(k) {
            *o += fv * kv;
        }
    }
}

/// Smallest 2^a 3^b that is at least n.
pub fn fast_len(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p3 = 1usize;
    while p3 < best {
        let mut m = p3;
        while m < n {
            m *= 2;
        }
        best = best.min(m);
        p3 *= 3;
    }
    best
}

/// Forward/inverse real FFT of N^d cubes: real transforms along the last
/// (contiguous) axis and complex transforms along the others.
struct CubeFft {
    n: usize,
    d: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl CubeFft {
    fn new(n: usize, d: usize) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut complex = FftPlanner::<f64>::new();
        Self {
            n,
            d,
            r2c: real.plan_fft_forward(n),
            c2r: real.plan_fft_inverse(n),
            fwd: complex.plan_fft_forward(n),
            inv: complex.plan_fft_inverse(n),
        }
    }

    fn half(&self) -> usize {
        self.n / 2 + 1
    }

    fn spectrum_len(&self) -> usize {
        self.n.pow(self.d as u32 - 1) * self.half()
    }

    /// Transforms a real N^d cube in place into its half spectrum.
    fn forward(&self, mut real: Vec<f64>) -> Vec<Complex64> {
        let n = self.n;
        let h = self.half();
        let rows = real.len() / n;
        let mut spec = vec![Complex64::new(0.0, 0.0); rows * h];
        let mut scratch = self.r2c.make_scratch_vec();
        for (row, out) in real.chunks_mut(n).zip(spec.chunks_mut(h)) {
            self.r2c.process_with_scratch(row, out, &mut scratch).expect("buffer sizes match the plan");
        }
        self.complex_axes(&mut spec, &self.fwd);
        spec
    }

    fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        let n = self.n;
        let h = self.half();
        self.complex_axes(&mut spec, &self.inv);
        let rows = spec.len() / h;
        let mut real = vec![0.0; rows * n];
        let mut scratch = self.c2r.make_scratch_vec();
        for (row, out) in spec.chunks_mut(h).zip(real.chunks_mut(n)) {
            // the imaginary parts of the DC and Nyquist bins are rounding noise
            row[0].im = 0.0;
            if n.is_multiple_of(2) {
                row[h - 1].im = 0.0;
            }
            self.c2r.process_with_scratch(row, out, &mut scratch).expect("buffer sizes match the plan");
        }
        let norm = 1.0 / (n as f64).powi(self.d as i32);
        real.iter_mut().for_each(|v| *v *= norm);
        real
    }

    /// Complex transforms along every axis except the last.
    fn complex_axes(&self, spec: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let h = self.half();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..self.d - 1 {
            // stride of `axis` in a cube with dims n × ... × n × h
            let stride = h * n.pow((self.d - 2 - axis) as u32);
            let block = stride * n;
            for base in (0..spec.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = spec[start + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, slot) in line.iter().enumerate() {
                        spec[start + j * stride] = *slot;
                    }
                }
            }
        }
    }
}

/// Convolves fields against one fixed kernel by FFT, caching plans and
/// kernel spectra per padded length.
pub struct FftConvolver {
    kernel: Vec<f64>,
    sk: usize,
    d: usize,
    cache: HashMap<usize, (CubeFft, Vec<Complex64>)>,
}

impl FftConvolver {
    pub fn new(kernel: &[f64], sk: usize, d: usize) -> Self {
        Self { kernel: kernel.to_vec(), sk, d, cache: HashMap::new() }
    }

    /// Full linear convolution of an `sf`-sided cube with the kernel.
    pub fn convolve(&mut self, f: &[f64], sf: usize) -> Vec<f64> {
        let d = self.d;
        let so = sf + self.sk - 1;
        let n = fast_len(so);
        let sk = self.sk;
        let kernel = &self.kernel;
        let (plan, kspec) = self.cache.entry(n).or_insert_with(|| {
            let plan = CubeFft::new(n, d);
            let kspec = plan.forward(embed(kernel, sk, n, d));
            (plan, kspec)
        });
        let mut spec = plan.forward(embed(f, sf, n, d));
        debug_assert_eq!(spec.len(), plan.spectrum_len());
        spec.iter_mut().zip(kspec.iter()).for_each(|(a, b)| *a *= b);
        let padded = plan.inverse(spec);
        extract(&padded, n, so, d)
    }
}

/// Places an s^d cube at the low corner of an n^d zero cube.
fn embed(src: &[f64], s: usize, n: usize, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; n.pow(d as u32)];
    let rows = s.pow(d as u32 - 1);
    let mut idx = vec![0usize; d - 1];
    for r in 0..rows {
        let mut rem = r;
        for slot in idx.iter_mut().rev() {
            *slot = rem % s;
            rem /= s;
        }
        let dst = idx.iter().fold(0, |acc, &c| acc * n + c) * n;
        out[dst..dst + s].copy_from_slice(&src[r * s..(r + 1) * s]);
    }
    out
}

/// Reads the low-corner s^d cube out of an n^d cube.
fn extract(src: &[f64], n: usize, s: usize, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; s.pow(d as u32)];
    let rows = s.pow(d as u32 - 1);
    let mut idx = vec![0usize; d - 1];
    for r in 0..rows {
        let mut rem = r;
        for slot in idx.iter_mut().rev() {
            *slot = rem % s;
            rem /= s;
        }
        let from = idx.iter().fold(0, |acc, &c| acc * n + c) * n;
        out[r * s..(r + 1) * s].copy_from_slice(&src[from..from + s]);
    }
    out
}

/// Crops the centred `so_new`-sided cube out of an `so`-sided cube.
pub fn crop_centered(src: &[f64], so: usize, so_new: usize, d: usize) -> Vec<f64> {
    assert!(so_new <= so && (so - so_new).is_multiple_of(2));
    if so_new == so {
        return src.to_vec();
    }
    let off = (so - so_new) / 2;
    let mut out = vec![0.0; so_new.pow(d as u32)];
    let rows = so_new.pow(d as u32 - 1);
    let mut idx = vec![0usize; d - 1];
    for r in 0..rows {
        let mut rem = r;
        for slot in idx.iter_mut().rev() {
            *slot = rem % so_new + off;
            rem /= so_new;
        }
        let from = idx.iter().fold(0, |acc, &c| acc * so + c) * so + off;
        out[r * so_new..(r + 1) * so_new].copy_from_slice(&src[from..from + so_new]);
    }
    out
}
