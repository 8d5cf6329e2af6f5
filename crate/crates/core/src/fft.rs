//! 3D transforms built from 1D FFT passes along each axis.
//!
//! Convention: the forward transform carries the `1/N³` factor, the inverse
//! carries none, so `û(0)` is the mean of the field and the discrete
//! Parseval identity reads `cell_volume · Σ_x |f|² = L³ · Σ_k |f̂|²`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::grid::Grid;

/// Forward 3D transform, in place. Output is in FFT index order along each
/// axis, x fastest.
pub fn forward(grid: &Grid, data: &mut [Complex64]) {
    crate::init_threads();
    debug_assert_eq!(data.len(), grid.len());
    pass_x(grid, data, true);
    pass_y(grid, data, true);
    pass_z(grid, data, true);
    let scale = 1.0 / grid.len() as f64;
    data.par_iter_mut().for_each(|v| *v *= scale);
}

/// Inverse 3D transform, in place.
pub fn inverse(grid: &Grid, data: &mut [Complex64]) {
    crate::init_threads();
    debug_assert_eq!(data.len(), grid.len());
    pass_x(grid, data, false);
    pass_y(grid, data, false);
    pass_z(grid, data, false);
}

fn pass_x(grid: &Grid, data: &mut [Complex64], fwd: bool) {
    let n = grid.n();
    let plan = if fwd {
        grid.fft_forward_plan().clone()
    } else {
        grid.fft_inverse_plan().clone()
    };
    let scratch_len = plan.get_inplace_scratch_len();
    data.par_chunks_exact_mut(n).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, line| plan.process_with_scratch(line, scratch),
    );
}

fn pass_y(grid: &Grid, data: &mut [Complex64], fwd: bool) {
    let n = grid.n();
    let plan = if fwd {
        grid.fft_forward_plan().clone()
    } else {
        grid.fft_inverse_plan().clone()
    };
    let scratch_len = plan.get_inplace_scratch_len();
    // One slab per iz; lines run along iy with stride n.
    data.par_chunks_exact_mut(n * n).for_each_init(
        || {
            (
                vec![Complex64::default(); n],
                vec![Complex64::default(); scratch_len],
            )
        },
        |(line, scratch), slab| {
            for ix in 0..n {
                for iy in 0..n {
                    line[iy] = slab[ix + n * iy];
                }
                plan.process_with_scratch(line, scratch);
                for iy in 0..n {
                    slab[ix + n * iy] = line[iy];
                }
            }
        },
    );
}

fn pass_z(grid: &Grid, data: &mut [Complex64], fwd: bool) {
    let n = grid.n();
    let n2 = n * n;
    let plan = if fwd {
        grid.fft_forward_plan().clone()
    } else {
        grid.fft_inverse_plan().clone()
    };
    let scratch_len = plan.get_inplace_scratch_len();
    // For fixed iy the points (ix, iy, iz) form an n×n plane with contiguous
    // ix rows; stage the plane in a cache-resident scratch so the strided
    // z-lines never leave L1/L2. Distinct iy values touch disjoint indices.
    let data_ptr = SendPtr(data.as_mut_ptr());
    (0..n).into_par_iter().for_each_init(
        || {
            (
                vec![Complex64::default(); n2],
                vec![Complex64::default(); n],
                vec![Complex64::default(); scratch_len],
            )
        },
        |(plane, line, scratch), iy| {
            let base = unsafe { std::slice::from_raw_parts_mut(data_ptr.get(), n2 * n) };
            for iz in 0..n {
                let src = &base[n * iy + n2 * iz..n * iy + n2 * iz + n];
                plane[n * iz..n * iz + n].copy_from_slice(src);
            }
            for ix in 0..n {
                for iz in 0..n {
                    line[iz] = plane[ix + n * iz];
                }
                plan.process_with_scratch(line, scratch);
                for iz in 0..n {
                    plane[ix + n * iz] = line[iz];
                }
            }
            for iz in 0..n {
                let dst = &mut base[n * iy + n2 * iz..n * iy + n2 * iz + n];
                dst.copy_from_slice(&plane[n * iz..n * iz + n]);
            }
        },
    );
}

// Distinct iy values touch disjoint index sets in pass_z, so the shared
// mutable pointer is race-free.
struct SendPtr(*mut Complex64);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

impl SendPtr {
    fn get(&self) -> *mut Complex64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn round_trip_random() {
        let g = Grid::new(16, 2.5).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let orig: Vec<Complex64> = (0..g.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut data = orig.clone();
        forward(&g, &mut data);
        inverse(&g, &mut data);
        let max: f64 = orig
            .iter()
            .zip(&data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let scale: f64 = orig.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max / scale < 1e-12, "round trip error {}", max / scale);
    }

    #[test]
    fn single_mode_lands_on_its_index() {
        let g = Grid::new(8, 2.0 * std::f64::consts::PI).unwrap();
        let n = g.n();
        let (mx, my, mz) = (2i32, -3i32, 1i32);
        let mut data = vec![Complex64::default(); g.len()];
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let [x, y, z] = g.position(ix, iy, iz);
                    let phase = mx as f64 * x + my as f64 * y + mz as f64 * z;
                    data[g.idx(ix, iy, iz)] = Complex64::new(phase.cos(), phase.sin());
                }
            }
        }
        forward(&g, &mut data);
        let to_idx = |m: i32| if m >= 0 { m as usize } else { (m + n as i32) as usize };
        let hot = g.idx(to_idx(mx), to_idx(my), to_idx(mz));
        assert!((data[hot] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let rest: f64 = data
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != hot)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        assert!(rest < 1e-12);
    }

    #[test]
    fn parseval_is_exact() {
        let g = Grid::new(8, 1.7).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let orig: Vec<Complex64> = (0..g.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let phys: f64 = orig.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_volume();
        let mut data = orig;
        forward(&g, &mut data);
        let spec: f64 = data.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.volume();
        assert!((phys - spec).abs() / phys < 1e-13);
    }
}
