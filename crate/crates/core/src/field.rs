//! Scalar and vector fields sampled on a [`Grid`].

use std::sync::Arc;

use num_complex::Complex64;

use crate::fft;
use crate::grid::{same_grid, Grid};
use crate::Result;

/// Complex scalar samples on a grid (houses `u`, `φ`, `ρ`, gauge functions).
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![Complex64::default(); grid.len()],
        }
    }

    /// Samples a function of position.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let n = grid.n();
        let mut values = vec![Complex64::default(); grid.len()];
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    values[grid.idx(ix, iy, iz)] = f(grid.position(ix, iy, iz));
                }
            }
        }
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len());
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Spectral coefficients (forward transform of the samples).
    pub fn to_spectral(&self) -> Vec<Complex64> {
        let mut data = self.values.clone();
        fft::forward(&self.grid, &mut data);
        data
    }

    pub fn from_spectral(grid: &Arc<Grid>, mut spec: Vec<Complex64>) -> Self {
        fft::inverse(grid, &mut spec);
        ScalarField {
            grid: grid.clone(),
            values: spec,
        }
    }

    /// Discrete L² norm, `sqrt(cell_volume · Σ |f|²)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `self + c · other`, grids must match.
    pub fn add_scaled(&self, c: Complex64, other: &ScalarField) -> Result<ScalarField> {
        same_grid(&self.grid, &other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(ScalarField {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn scale(&self, c: Complex64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Drops the imaginary part (used after operations that are real by
    /// construction up to roundoff).
    pub fn realize(mut self) -> ScalarField {
        for v in &mut self.values {
            v.im = 0.0;
        }
        self
    }
}

/// Real 3-vector samples on a grid (houses `A`, `∂tA`, `J`, `E`, `B`, the
/// Lorentz force). The `solenoidal` flag is a constructor-maintained hint;
/// numeric checks go through [`VectorField::div_residual`].
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Arc<Grid>,
    comps: [Vec<f64>; 3],
    pub solenoidal: bool,
}

impl VectorField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        VectorField {
            grid: grid.clone(),
            comps: std::array::from_fn(|_| vec![0.0; grid.len()]),
            solenoidal: true,
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let n = grid.n();
        let mut comps: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; grid.len()]);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let v = f(grid.position(ix, iy, iz));
                    let idx = grid.idx(ix, iy, iz);
                    for j in 0..3 {
                        comps[j][idx] = v[j];
                    }
                }
            }
        }
        VectorField {
            grid: grid.clone(),
            comps,
            solenoidal: false,
        }
    }

    pub fn from_comps(grid: &Arc<Grid>, comps: [Vec<f64>; 3]) -> Self {
        for c in &comps {
            assert_eq!(c.len(), grid.len());
        }
        VectorField {
            grid: grid.clone(),
            comps,
            solenoidal: false,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn comp(&self, j: usize) -> &[f64] {
        &self.comps[j]
    }

    pub fn comp_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.comps[j]
    }

    /// Spectral coefficients of component `j`.
    pub fn comp_spectral(&self, j: usize) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = self.comps[j]
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft::forward(&self.grid, &mut data);
        data
    }

    /// Rebuilds a component from spectral coefficients, discarding the
    /// imaginary roundoff residue.
    pub fn comp_from_spectral(grid: &Arc<Grid>, mut spec: Vec<Complex64>) -> Vec<f64> {
        fft::inverse(grid, &mut spec);
        spec.into_iter().map(|v| v.re).collect()
    }

    /// Discrete L² norm of the vector field, `sqrt(cell_volume · Σ |F(x)|²)`.
    pub fn l2_norm(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..3 {
            s += self.comps[j].iter().map(|v| v * v).sum::<f64>();
        }
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.grid.len() {
            let p = self.comps[0][i] * self.comps[0][i]
                + self.comps[1][i] * self.comps[1][i]
                + self.comps[2][i] * self.comps[2][i];
            m = m.max(p);
        }
        m.sqrt()
    }

    pub fn add_scaled(&self, c: f64, other: &VectorField) -> Result<VectorField> {
        same_grid(&self.grid, &other.grid)?;
        let comps = std::array::from_fn(|j| {
            self.comps[j]
                .iter()
                .zip(&other.comps[j])
                .map(|(a, b)| a + c * b)
                .collect()
        });
        Ok(VectorField {
            grid: self.grid.clone(),
            comps,
            solenoidal: self.solenoidal && other.solenoidal,
        })
    }

    pub fn scale(&self, c: f64) -> VectorField {
        VectorField {
            grid: self.grid.clone(),
            comps: std::array::from_fn(|j| self.comps[j].iter().map(|v| c * v).collect()),
            solenoidal: self.solenoidal,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|v| v.is_finite()))
    }

    /// Relative spectral divergence residual `max_k |k·F̂(k)| / max_k |F̂(k)|`.
    /// Returns 0 for the zero field.
    pub fn div_residual(&self) -> f64 {
        let spec: [Vec<Complex64>; 3] = std::array::from_fn(|j| self.comp_spectral(j));
        let n = self.grid.n();
        let k = self.grid.deriv_wavenumbers();
        let mut max_div = 0.0f64;
        let mut max_amp = 0.0f64;
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let idx = self.grid.idx(ix, iy, iz);
                    let kx = k[ix];
                    let ky = k[iy];
                    let kz = k[iz];
                    let d = kx * spec[0][idx].norm()
                        + ky * spec[1][idx].norm()
                        + kz * spec[2][idx].norm();
                    // |k·F̂| bound via component magnitudes is too loose;
                    // use the actual dot product.
                    let dot = spec[0][idx] * kx + spec[1][idx] * ky + spec[2][idx] * kz;
                    let _ = d;
                    max_div = max_div.max(dot.norm());
                    let amp = spec[0][idx]
                        .norm()
                        .max(spec[1][idx].norm())
                        .max(spec[2][idx].norm());
                    max_amp = max_amp.max(amp);
                }
            }
        }
        if max_amp == 0.0 {
            0.0
        } else {
            max_div / max_amp
        }
    }
}

/// Complex 3-vector samples (houses the magnetic gradient `(∇ - iA)u`).
#[derive(Clone, Debug)]
pub struct CVectorField {
    grid: Arc<Grid>,
    comps: [Vec<Complex64>; 3],
}

impl CVectorField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        CVectorField {
            grid: grid.clone(),
            comps: std::array::from_fn(|_| vec![Complex64::default(); grid.len()]),
        }
    }

    pub fn from_comps(grid: &Arc<Grid>, comps: [Vec<Complex64>; 3]) -> Self {
        for c in &comps {
            assert_eq!(c.len(), grid.len());
        }
        CVectorField {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn comp(&self, j: usize) -> &[Complex64] {
        &self.comps[j]
    }

    pub fn comp_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.comps[j]
    }

    pub fn l2_norm(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..3 {
            s += self.comps[j].iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Real parts as a [`VectorField`]; imaginary residue is discarded.
    pub fn realize(&self) -> VectorField {
        VectorField {
            grid: self.grid.clone(),
            comps: std::array::from_fn(|j| self.comps[j].iter().map(|v| v.re).collect()),
            solenoidal: false,
        }
    }
}
