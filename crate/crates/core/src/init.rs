//! Reproducible initial data: Gaussian bumps, single modes, and seeded
//! random solenoidal fields.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Deserialize;

use crate::error::MsError;
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::physics::State;
use crate::spectral::{dealias_spec, for_each_mode, project_spec};
use crate::Result;

/// Initial datum for the order parameter.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum UInit {
    #[serde(rename = "zero")]
    Zero,
    /// Periodized Gaussian bump `amplitude · Π_j g(x_j - center_j) · e^{ik·x}`
    /// with `k = 2π phase_k / L`.
    #[serde(rename = "gaussian_u")]
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 3],
        #[serde(default)]
        phase_k: [i64; 3],
    },
    /// Single plane wave `amplitude · e^{ik·x}` with `k = 2π k / L`.
    #[serde(rename = "mode_u")]
    Mode { k: [i64; 3], amplitude: f64 },
}

impl Default for UInit {
    fn default() -> Self {
        UInit::Zero
    }
}

/// Initial datum for a wave-component field (`A` or `∂tA`).
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum AInit {
    #[serde(rename = "zero")]
    Zero,
    /// `amplitude · polarization · cos(k·x)`, Leray-projected. Rejected when
    /// the polarization is parallel to `k` (the projection would null it).
    #[serde(rename = "mode_A")]
    Mode {
        k: [i64; 3],
        polarization: [f64; 3],
        amplitude: f64,
    },
    /// Seeded random field: white noise shaped by `|k|^spectrum_slope`,
    /// band-limited to the two-thirds ball, Leray-projected, and rescaled so
    /// the pointwise maximum equals `amplitude`. Deterministic given `seed`.
    #[serde(rename = "random_A")]
    Random {
        seed: u64,
        spectrum_slope: f64,
        amplitude: f64,
    },
}

impl Default for AInit {
    fn default() -> Self {
        AInit::Zero
    }
}

/// Full initial-data specification for the state triple.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    #[serde(default)]
    pub u: UInit,
    #[serde(default)]
    pub a: AInit,
    #[serde(default)]
    pub at: AInit,
}

/// Builds the initial state. The wave components are passed through the
/// Leray projection, so `div A = div ∂tA = 0` holds by construction.
pub fn make_initial_data(spec: &InitSpec, grid: &Arc<Grid>) -> Result<State> {
    let u = build_u(&spec.u, grid)?;
    let a = build_a(&spec.a, grid, 0)?;
    let at = build_a(&spec.at, grid, 1)?;
    State::new(0.0, u, a, at)
}

fn build_u(spec: &UInit, grid: &Arc<Grid>) -> Result<ScalarField> {
    match spec {
        UInit::Zero => Ok(ScalarField::zeros(grid)),
        UInit::Mode { k, amplitude } => {
            if !amplitude.is_finite() {
                return Err(MsError::InvalidParam("mode_u amplitude must be finite".into()));
            }
            let kv = mode_wavevector(*k, grid);
            let amp = *amplitude;
            Ok(ScalarField::from_fn(grid, |x| {
                let phase = kv[0] * x[0] + kv[1] * x[1] + kv[2] * x[2];
                amp * Complex64::cis(phase)
            }))
        }
        UInit::Gaussian {
            amplitude,
            width,
            center,
            phase_k,
        } => {
            if !(*width > 0.0) {
                return Err(MsError::InvalidParam(format!(
                    "gaussian_u width must be positive, got {width}"
                )));
            }
            let l = grid.length();
            let kv = mode_wavevector(*phase_k, grid);
            let amp = *amplitude;
            let w = *width;
            let c = *center;
            Ok(ScalarField::from_fn(grid, |x| {
                let mut env = 1.0;
                for j in 0..3 {
                    env *= periodized_gaussian(x[j] - c[j], w, l);
                }
                let phase = kv[0] * x[0] + kv[1] * x[1] + kv[2] * x[2];
                amp * env * Complex64::cis(phase)
            }))
        }
    }
}

fn mode_wavevector(m: [i64; 3], grid: &Grid) -> [f64; 3] {
    let f = TAU / grid.length();
    [f * m[0] as f64, f * m[1] as f64, f * m[2] as f64]
}

/// Sum over the nearest periodic images; smooth on the torus for widths up
/// to a sizable fraction of the box.
fn periodized_gaussian(d: f64, width: f64, l: f64) -> f64 {
    let mut s = 0.0;
    for i in -3i32..=3 {
        let r = d - i as f64 * l;
        s += (-r * r / (2.0 * width * width)).exp();
    }
    s
}

fn build_a(spec: &AInit, grid: &Arc<Grid>, salt: u64) -> Result<VectorField> {
    match spec {
        AInit::Zero => Ok(VectorField::zeros(grid)),
        AInit::Mode {
            k,
            polarization,
            amplitude,
        } => {
            let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
            let k_norm2 = kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2];
            let p_norm2: f64 = polarization.iter().map(|v| v * v).sum();
            if p_norm2 == 0.0 {
                return Err(MsError::InvalidParam("mode_A polarization must be nonzero".into()));
            }
            if k_norm2 > 0.0 {
                let dot = kf[0] * polarization[0] + kf[1] * polarization[1] + kf[2] * polarization[2];
                let transverse2 = p_norm2 - dot * dot / k_norm2;
                if transverse2 < 1e-24 * p_norm2 {
                    return Err(MsError::InvalidParam(
                        "mode_A polarization is parallel to k; the projection would null it".into(),
                    ));
                }
            }
            let kv = mode_wavevector(*k, grid);
            let amp = *amplitude;
            let pol = *polarization;
            let raw = VectorField::from_fn(grid, |x| {
                let c = (kv[0] * x[0] + kv[1] * x[1] + kv[2] * x[2]).cos();
                [amp * pol[0] * c, amp * pol[1] * c, amp * pol[2] * c]
            });
            Ok(crate::spectral::helmholtz_project(&raw))
        }
        AInit::Random {
            seed,
            spectrum_slope,
            amplitude,
        } => {
            if !amplitude.is_finite() || !spectrum_slope.is_finite() {
                return Err(MsError::InvalidParam("random_A parameters must be finite".into()));
            }
            Ok(random_solenoidal(grid, *seed, salt, *spectrum_slope, *amplitude))
        }
    }
}

/// Deterministic random field pipeline (documented in the format notes):
/// ChaCha12 white noise in grid order per component, spectral shaping by
/// `|k|^slope` with the mean dropped, two-thirds band limit, Leray
/// projection, pointwise-maximum rescale.
fn random_solenoidal(
    grid: &Arc<Grid>,
    seed: u64,
    salt: u64,
    slope: f64,
    amplitude: f64,
) -> VectorField {
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt);
    let mut spec: [Vec<Complex64>; 3] = std::array::from_fn(|_| {
        let mut data: Vec<Complex64> = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0))
            .collect();
        crate::fft::forward(grid, &mut data);
        data
    });
    for comp in spec.iter_mut() {
        for_each_mode(grid, |idx, k, _| {
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                comp[idx] = Complex64::default();
            } else {
                comp[idx] *= k2.sqrt().powf(slope);
            }
        });
        dealias_spec(grid, comp);
    }
    project_spec(grid, &mut spec);
    let comps = spec.map(|s| VectorField::comp_from_spectral(grid, s));
    let mut f = VectorField::from_comps(grid, comps);
    f.solenoidal = true;
    let peak = f.linf_norm();
    if peak > 0.0 {
        f = f.scale(amplitude / peak);
        f.solenoidal = true;
    }
    f
}
