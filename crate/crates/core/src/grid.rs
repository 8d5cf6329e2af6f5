//! Periodic cubic grid: wavenumbers, quadrature, dealias rule, FFT plans.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::MsError;
use crate::Result;

/// Uniform periodic discretization of the cube `[0, L)³` with `N` points per
/// axis. Wavenumbers are `k_m = 2π m / L` for `m ∈ {-N/2, …, N/2-1}`, stored
/// in FFT index order. The quadrature rule `∫ f ≈ cell_volume · Σ f(x_j)` is
/// exact for band-limited trigonometric polynomials.
pub struct Grid {
    n: usize,
    length: f64,
    /// Wavenumber per FFT index (full symbol, Nyquist carries -N/2).
    k_axis: Vec<f64>,
    /// Wavenumber used by first derivatives: Nyquist mode zeroed so that
    /// odd-order derivatives of real fields stay real.
    k_deriv: Vec<f64>,
    /// Integer mode per FFT index.
    modes: Vec<i32>,
    /// `|k|²` per flattened grid index (full symbol).
    k2_flat: Vec<f64>,
    /// Derivative wavenumber per flattened index and axis (Nyquist zeroed).
    kd_flat: [Vec<f64>; 3],
    /// Two-thirds-rule retention mask per flattened index.
    keep_flat: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid {
    /// Builds a grid with `n` points per axis (even, at least 4) on a box of
    /// side `length`.
    pub fn new(n: usize, length: f64) -> Result<Arc<Grid>> {
        if n < 4 || n % 2 != 0 {
            return Err(MsError::InvalidGrid(format!(
                "N must be even and at least 4, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(MsError::InvalidGrid(format!(
                "L must be positive and finite, got {length}"
            )));
        }
        let mut modes = Vec::with_capacity(n);
        let mut k_axis = Vec::with_capacity(n);
        let mut k_deriv = Vec::with_capacity(n);
        for i in 0..n {
            let m = if i < n / 2 { i as i32 } else { i as i32 - n as i32 };
            modes.push(m);
            let k = TAU * m as f64 / length;
            k_axis.push(k);
            k_deriv.push(if i == n / 2 { 0.0 } else { k });
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);

        let npts = n * n * n;
        let mut k2_flat = Vec::with_capacity(npts);
        let mut kd_flat: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(npts));
        let mut keep_flat = Vec::with_capacity(npts);
        let keep_axis: Vec<bool> = modes.iter().map(|&m| 3 * m.unsigned_abs() as usize <= n).collect();
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let k = [k_axis[ix], k_axis[iy], k_axis[iz]];
                    k2_flat.push(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
                    kd_flat[0].push(k_deriv[ix]);
                    kd_flat[1].push(k_deriv[iy]);
                    kd_flat[2].push(k_deriv[iz]);
                    keep_flat.push(keep_axis[ix] && keep_axis[iy] && keep_axis[iz]);
                }
            }
        }

        Ok(Arc::new(Grid {
            n,
            length,
            k_axis,
            k_deriv,
            modes,
            k2_flat,
            kd_flat,
            keep_flat,
            fwd,
            inv,
        }))
    }

    /// `|k|²` per flattened index (full symbol, Nyquist included).
    pub fn k2_flat(&self) -> &[f64] {
        &self.k2_flat
    }

    /// Derivative wavenumbers per flattened index for one axis.
    pub fn kd_flat(&self, axis: usize) -> &[f64] {
        &self.kd_flat[axis]
    }

    /// Two-thirds retention mask per flattened index.
    pub fn keep_flat(&self) -> &[bool] {
        &self.keep_flat
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of grid points, `N³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.length / self.n as f64;
        h * h * h
    }

    pub fn volume(&self) -> f64 {
        self.length * self.length * self.length
    }

    /// Per-axis wavenumbers in FFT index order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k_axis
    }

    /// Per-axis first-derivative wavenumbers (Nyquist zeroed).
    pub fn deriv_wavenumbers(&self) -> &[f64] {
        &self.k_deriv
    }

    /// Integer modes in FFT index order.
    pub fn modes(&self) -> &[i32] {
        &self.modes
    }

    /// Flattened index with x fastest: `ix + N (iy + N iz)`.
    #[inline]
    pub fn idx(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    /// Physical coordinates of grid point `(ix, iy, iz)`.
    #[inline]
    pub fn position(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        let h = self.length / self.n as f64;
        [ix as f64 * h, iy as f64 * h, iz as f64 * h]
    }

    /// Two-thirds rule: retain the axis mode `m` iff `3 |m| ≤ N`.
    #[inline]
    pub fn dealias_keep(&self, m: i32) -> bool {
        3 * m.unsigned_abs() as usize <= self.n
    }

    /// Largest retained |m| per axis under the two-thirds rule.
    pub fn dealias_mode_bound(&self) -> i32 {
        (self.n / 3) as i32
    }

    /// Largest |k|² representable on the grid (`dealiased = false`) or kept by
    /// the two-thirds mask (`dealiased = true`).
    pub fn max_k2(&self, dealiased: bool) -> f64 {
        let m = if dealiased {
            self.dealias_mode_bound() as f64
        } else {
            (self.n / 2) as f64
        };
        let k = TAU * m / self.length;
        3.0 * k * k
    }

    pub(crate) fn fft_forward_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.fwd
    }

    pub(crate) fn fft_inverse_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.inv
    }
}

/// Checks that two fields live on the same grid.
pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(MsError::GridMismatch)
    }
}
