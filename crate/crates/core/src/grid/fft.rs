use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Complex 3D FFT on an `n^3` C-order array, built from 1D transforms along
/// each axis. The inverse is normalized so `inverse(forward(x)) == x`.
pub struct Fft3 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Shared plan for grids of size `n`.
pub fn fft3(n: usize) -> Arc<Fft3> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Fft3>>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(Fft3::new(n)))
        .clone()
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv);
        let s = 1.0 / (self.n * self.n * self.n) as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform keeping only the real part.
    pub fn inverse_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut spec);
        spec.into_iter().map(|c| c.re).collect()
    }

    /// Spectra of two real arrays from a single complex transform.
    pub fn forward_real_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| Complex64::new(*x, *y)).collect();
        self.forward(&mut z);
        let n = self.n;
        let neg = |idx: usize| {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            (((n - i) % n) * n + (n - j) % n) * n + (n - k) % n
        };
        let half = Complex64::new(0.5, 0.0);
        let mut sa = vec![Complex64::default(); z.len()];
        let mut sb = vec![Complex64::default(); z.len()];
        sa.par_iter_mut()
            .zip(sb.par_iter_mut())
            .enumerate()
            .for_each(|(idx, (x, y))| {
                let p = z[idx];
                let q = z[neg(idx)].conj();
                *x = (p + q) * half;
                *y = Complex64::new(0.0, -0.5) * (p - q);
            });
        (sa, sb)
    }

    /// Inverse of two Hermitian spectra through one complex transform.
    pub fn inverse_real_pair(&self, a: Vec<Complex64>, b: Vec<Complex64>) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut z: Vec<Complex64> = a.into_iter().zip(b).map(|(x, y)| x + i * y).collect();
        self.inverse(&mut z);
        z.into_iter().map(|c| (c.re, c.im)).unzip()
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "array does not match the plan size");
        let scratch_len = fft.get_inplace_scratch_len();

        // z: contiguous lines
        data.par_chunks_mut(n * n).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, plane| fft.process_with_scratch(plane, scratch),
        );

        // y: transpose each x-plane, transform rows, transpose back
        data.par_chunks_mut(n * n).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, plane| {
                transpose_square(plane, n);
                fft.process_with_scratch(plane, scratch);
                transpose_square(plane, n);
            },
        );

        // x: for each j, copy the (i, k) slab transposed into a scratch
        // buffer, transform its rows, copy back
        let base = SharedMut(data.as_mut_ptr());
        (0..n).into_par_iter().for_each_init(
            || {
                (
                    vec![Complex64::default(); n * n],
                    vec![Complex64::default(); scratch_len],
                )
            },
            |(slab, scratch), j| {
                let p = base.get();
                for i in 0..n {
                    for k in 0..n {
                        // SAFETY: index (i, j, k) is in bounds, and slab j
                        // touches only elements with this j, so no two tasks
                        // alias.
                        slab[k * n + i] = unsafe { *p.add((i * n + j) * n + k) };
                    }
                }
                fft.process_with_scratch(slab, scratch);
                for i in 0..n {
                    for k in 0..n {
                        // SAFETY: as above.
                        unsafe { *p.add((i * n + j) * n + k) = slab[k * n + i] };
                    }
                }
            },
        );
    }
}

/// Raw pointer shared across tasks that write disjoint elements.
#[derive(Clone, Copy)]
struct SharedMut(*mut Complex64);

// SAFETY: used only for writes to disjoint indices from different tasks.
unsafe impl Send for SharedMut {}
unsafe impl Sync for SharedMut {}

impl SharedMut {
    fn get(self) -> *mut Complex64 {
        self.0
    }
}

fn transpose_square(a: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            a.swap(r * n + c, c * n + r);
        }
    }
}
