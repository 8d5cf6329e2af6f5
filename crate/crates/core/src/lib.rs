//! Pseudo-spectral solver and diagnostics suite for the defocusing
//! Maxwell-Schrödinger system in the Coulomb gauge, posed on a periodic box.
//!
//! The evolved unknowns are a complex order parameter `u` and a real,
//! divergence-free magnetic potential `A` (together with `∂tA`), coupled
//! through
//!
//! ```text
//! i ∂t u = -Δ_A u + φ u + |u|^(γ-1) u,      Δ_A = (∇ - iA)²,
//! □ A    = P J,                              J   = 2 Im( ū (∇ - iA) u ),
//! ```
//!
//! with `φ = (-Δ)⁻¹ |u|²` (zero-mean convention on the torus) and `P` the
//! Helmholtz–Leray projection onto divergence-free fields.
//!
//! The crate is organized as a small stack of layers:
//!
//! - [`grid`], [`field`], [`spectral`]: the periodic grid, scalar/vector
//!   fields, and all Fourier-side operators (derivatives, Bessel operators,
//!   inverse Laplacian, Leray projection, dealiasing, free propagators).
//! - [`physics`]: the physical content of the system (electric potential,
//!   current, magnetic operators, nonlinearity, observables, gauge
//!   transformation).
//! - [`diagnostics`]: charge, energy, the modified energy and the right-hand
//!   side of its derivative identity, Sobolev/magnetic/mixed norms, the
//!   Lorentz-force integrability monitor and growth-law fitting.
//! - [`integrators`] and [`picard`]: an RK4 reference integrator, a Strang
//!   splitting integrator built from the exact free flows, the linear
//!   magnetic propagator, and a fixed-point (Picard/Duhamel) solution mode.
//! - [`config`], [`init`], [`snapshot`], [`timeseries`]: TOML configuration,
//!   reproducible initial data, a bit-exact binary snapshot format, and CSV
//!   diagnostics output.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod fft;
pub mod grid;
pub mod init;
pub mod integrators;
pub mod physics;
pub mod picard;
pub mod snapshot;
pub mod spectral;
pub mod timeseries;

pub use error::MsError;
pub use num_complex;
pub use field::{CVectorField, ScalarField, VectorField};
pub use grid::Grid;
pub use physics::{PhysParams, State};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, MsError>;

use once_cell::sync::Lazy;

#[cfg(test)]
pub(crate) mod testutil {
    use std::sync::Arc;

    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    use crate::field::{ScalarField, VectorField};
    use crate::grid::Grid;

    pub fn rel_err(got: f64, want: f64) -> f64 {
        (got - want).abs() / want.abs().max(1e-300)
    }

    /// Random complex scalar field with entries in the unit box.
    pub fn random_scalar(grid: &Arc<Grid>, seed: u64) -> ScalarField {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        ScalarField::from_values(
            grid,
            (0..grid.len())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
    }

    /// Random real vector field.
    pub fn random_vector(grid: &Arc<Grid>, seed: u64) -> VectorField {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        VectorField::from_comps(
            grid,
            std::array::from_fn(|_| {
                (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()
            }),
        )
    }

    /// Random solenoidal, band-limited vector field.
    pub fn random_solenoidal(grid: &Arc<Grid>, seed: u64) -> VectorField {
        crate::spectral::dealias_vec(&crate::spectral::helmholtz_project(&random_vector(
            grid, seed,
        )))
    }

    /// Band-limited random state satisfying the gauge constraint.
    pub fn random_state(grid: &Arc<Grid>, seed: u64) -> crate::physics::State {
        let u = crate::spectral::dealias(&smooth_scalar(grid, seed));
        let a = random_solenoidal(grid, seed + 1000).scale(0.3);
        let at = random_solenoidal(grid, seed + 2000).scale(0.3);
        crate::physics::State::new(0.0, u, a, at).unwrap()
    }

    /// Smooth band-limited complex field (a handful of low modes).
    pub fn smooth_scalar(grid: &Arc<Grid>, seed: u64) -> ScalarField {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let coeffs: Vec<(f64, f64, [f64; 3])> = (0..5)
            .map(|_| {
                (
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                    [
                        rng.gen_range(-2..3) as f64,
                        rng.gen_range(-2..3) as f64,
                        rng.gen_range(-2..3) as f64,
                    ],
                )
            })
            .collect();
        let tau_l = std::f64::consts::TAU / grid.length();
        ScalarField::from_fn(grid, |x| {
            let mut v = Complex64::default();
            for (re, im, m) in &coeffs {
                let phase = tau_l * (m[0] * x[0] + m[1] * x[1] + m[2] * x[2]);
                v += Complex64::new(*re, *im) * Complex64::cis(phase);
            }
            v
        })
    }
}

/// Initializes the global worker pool, honoring the `MS_THREADS` environment
/// variable as an upper bound on parallelism. Called lazily by the transform
/// layer; safe to call repeatedly.
pub fn init_threads() {
    static INIT: Lazy<()> = Lazy::new(|| {
        if let Ok(v) = std::env::var("MS_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    // Ignore the error if a pool was already installed.
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build_global();
                }
            }
        }
    });
    Lazy::force(&INIT);
}
