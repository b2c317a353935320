//! Three-dimensional complex FFT built from per-axis rustfft plans.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Smallest 5-smooth integer `>= n`.
pub fn good_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Unnormalised forward/inverse 3D transforms over an x-fastest buffer.
pub struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.map(|n| planner.plan_fft_forward(n));
        let inverse = dims.map(|n| planner.plan_fft_inverse(n));
        Fft3 { dims, forward, inverse }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.forward);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inverse);
    }

    fn run(&self, buf: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [nx, ny, nz] = self.dims;
        assert_eq!(buf.len(), nx * ny * nz);
        let scratch_len = plans.iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0);
        let mut scratch = vec![Complex64::default(); scratch_len];
        if nx > 1 {
            plans[0].process_with_scratch(buf, &mut scratch);
        }
        if ny > 1 {
            let mut tmp = vec![Complex64::default(); nx * ny];
            for slab in buf.chunks_exact_mut(nx * ny) {
                for j in 0..ny {
                    for i in 0..nx {
                        tmp[i * ny + j] = slab[j * nx + i];
                    }
                }
                plans[1].process_with_scratch(&mut tmp, &mut scratch);
                for j in 0..ny {
                    for i in 0..nx {
                        slab[j * nx + i] = tmp[i * ny + j];
                    }
                }
            }
        }
        if nz > 1 {
            let mut tmp = vec![Complex64::default(); nx * nz];
            let plane = nx * ny;
            for j in 0..ny {
                for k in 0..nz {
                    let row = &buf[k * plane + j * nx..k * plane + j * nx + nx];
                    for (i, v) in row.iter().enumerate() {
                        tmp[i * nz + k] = *v;
                    }
                }
                plans[2].process_with_scratch(&mut tmp, &mut scratch);
                for k in 0..nz {
                    let row = &mut buf[k * plane + j * nx..k * plane + j * nx + nx];
                    for (i, v) in row.iter_mut().enumerate() {
                        *v = tmp[i * nz + k];
                    }
                }
            }
        }
    }
}
