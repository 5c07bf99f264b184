use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Lines gathered per batch when transforming a strided axis.
const BATCH: usize = 16;

/// Unnormalized multi-dimensional FFT over an `n^dims` row-major hypercube.
///
/// Results stay in FFT index order. The inverse is not scaled by `1/n^dims`;
/// callers fold that factor into whatever they multiply in momentum space.
pub struct NdFft {
    n: usize,
    dims: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    lines: Vec<Complex64>,
}

impl NdFft {
    pub fn new(n: usize, dims: usize) -> Self {
        assert!(dims >= 1, "at least one axis");
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            dims,
            forward,
            inverse,
            scratch: vec![Complex64::default(); scratch_len],
            lines: vec![Complex64::default(); n * BATCH],
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        let plan = Arc::clone(&self.forward);
        self.transform(data, plan.as_ref());
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let plan = Arc::clone(&self.inverse);
        self.transform(data, plan.as_ref());
    }

    /// Transform a single axis only.
    pub fn forward_axis(&mut self, data: &mut [Complex64], axis: usize) {
        let plan = Arc::clone(&self.forward);
        self.transform_axis(data, axis, plan.as_ref());
    }

    pub fn inverse_axis(&mut self, data: &mut [Complex64], axis: usize) {
        let plan = Arc::clone(&self.inverse);
        self.transform_axis(data, axis, plan.as_ref());
    }

    fn transform(&mut self, data: &mut [Complex64], plan: &dyn Fft<f64>) {
        for axis in 0..self.dims {
            self.transform_axis(data, axis, plan);
        }
    }

    fn transform_axis(&mut self, data: &mut [Complex64], axis: usize, plan: &dyn Fft<f64>) {
        assert_eq!(data.len(), self.len(), "field length does not match transform");
        assert!(axis < self.dims);
        let n = self.n;
        let stride = n.pow((self.dims - 1 - axis) as u32);
        if stride == 1 {
            plan.process_with_scratch(data, &mut self.scratch);
            return;
        }
        let block = n * stride;
        for base in (0..data.len()).step_by(block) {
            let mut inner = 0;
            while inner < stride {
                let width = BATCH.min(stride - inner);
                for m in 0..n {
                    let row = base + m * stride + inner;
                    for b in 0..width {
                        self.lines[b * n + m] = data[row + b];
                    }
                }
                plan.process_with_scratch(&mut self.lines[..width * n], &mut self.scratch);
                for m in 0..n {
                    let row = base + m * stride + inner;
                    for b in 0..width {
                        data[row + b] = self.lines[b * n + m];
                    }
                }
                inner += width;
            }
        }
    }
}

impl std::fmt::Debug for NdFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NdFft")
            .field("n", &self.n)
            .field("dims", &self.dims)
            .finish()
    }
}
