//! Conserved quantities, norms, and monitors: charge, energy, the modified
//! energy and its derivative identity, Sobolev/magnetic/mixed norms, the
//! diamagnetic check, Lorentz-force integrability, and growth-law fitting.

use num_complex::Complex64;

use crate::error::MsError;
use crate::field::{ScalarField, VectorField};
use crate::physics::{
    self, magnetic_gradient, magnetic_laplacian, solve_phi, PhysParams, State,
};
use crate::spectral::{bessel, for_each_mode, gradient, inv_laplacian_zero_mean};
use crate::Result;

/// One row of streamed diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub charge: f64,
    pub energy: f64,
    pub e2: f64,
    /// NaN when `γ ≤ 2` (the derivative identity needs `γ > 2`).
    pub e2_rhs: f64,
    /// `(s, ‖u‖_{H^s})` pairs; the CSV schema uses `s ∈ {1, 2}`.
    pub sobolev: Vec<(f64, f64)>,
    pub sigma_a: f64,
    pub sigma_minus1_at: f64,
    pub m_norm: f64,
    pub lorentz_l1: f64,
    pub diamag_violation: f64,
}

impl DiagnosticRecord {
    pub fn h_norm_u(&self, s: f64) -> Option<f64> {
        self.sobolev
            .iter()
            .find(|(sv, _)| (*sv - s).abs() < 1e-12)
            .map(|(_, v)| *v)
    }
}

/// A space-time norm `L^q_T W^{s,r}` specification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedNormSpec {
    pub q: f64,
    pub s: f64,
    pub r: f64,
}

impl MixedNormSpec {
    pub fn new(q: f64, s: f64, r: f64) -> Result<MixedNormSpec> {
        for (name, e) in [("q", q), ("r", r)] {
            if !(e >= 1.0) {
                return Err(MsError::InvalidParam(format!(
                    "mixed norm exponent {name} must lie in [1, inf], got {e}"
                )));
            }
        }
        Ok(MixedNormSpec { q, s, r })
    }

    /// Klein–Gordon admissible: `1/q + 1/r = 1/2`, `q > 2`.
    pub fn is_kg_admissible(&self) -> bool {
        self.q > 2.0 && (1.0 / self.q + 1.0 / self.r - 0.5).abs() < 1e-12
    }

    /// Schrödinger admissible: `2/q + 3/r = 3/2`, `q ≥ 2`.
    pub fn is_schrodinger_admissible(&self) -> bool {
        self.q >= 2.0 && (2.0 / self.q + 3.0 / self.r - 1.5).abs() < 1e-12
    }
}

/// Charge `Q = cell_volume · Σ |u|²` (the squared discrete L² norm).
pub fn charge(u: &ScalarField) -> f64 {
    let s: f64 = u.values().iter().map(|v| v.norm_sqr()).sum();
    s * u.grid().cell_volume()
}

/// Conserved energy
/// `∫ |∇_A u|² + ½(|∂tA|² + |∇A|² + |∇φ|²) + 2/(γ+1) |u|^{γ+1}`,
/// with `φ = (-Δ)⁻¹|u|²`. Every summand is nonnegative.
pub fn energy(s: &State, p: &PhysParams) -> f64 {
    let grid = s.grid();
    let cv = grid.cell_volume();
    let mg = magnetic_gradient(&s.u, &s.a).expect("state grids match");
    let mut kin = 0.0;
    for j in 0..3 {
        kin += mg.comp(j).iter().map(|v| v.norm_sqr()).sum::<f64>();
    }

    let phi = solve_phi(&s.u);
    let gphi = gradient(&phi);
    let mut electro = 0.0;
    for j in 0..3 {
        electro += gphi.comp(j).iter().map(|v| v.re * v.re).sum::<f64>();
    }

    let mut wave_grad = 0.0;
    for j in 0..3 {
        let c = ScalarField::from_values(
            grid,
            s.a.comp(j).iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        );
        let g = gradient(&c);
        for axis in 0..3 {
            wave_grad += g.comp(axis).iter().map(|v| v.re * v.re).sum::<f64>();
        }
    }
    let mut wave_t = 0.0;
    for j in 0..3 {
        wave_t += s.at.comp(j).iter().map(|v| v * v).sum::<f64>();
    }

    let pow_exp = (p.gamma + 1.0) / 2.0;
    let pot: f64 = s
        .u
        .values()
        .iter()
        .map(|v| crate::physics::rho_pow(v.norm_sqr(), pow_exp))
        .sum();

    cv * (kin + 0.5 * (wave_t + wave_grad + electro) + 2.0 / (p.gamma + 1.0) * pot)
}

/// Modified energy
/// `E₂ = ∫ |∂tu|² - (γ-1)|u|^{γ-1}|∇|u||² - (γ-1)/γ |u|^{2γ}`,
/// returned as `(e2, r_part, s_part)` where `r_part` is the subtracted
/// quadrature and `s_part = ‖(φ + |u|^{γ-1})u‖_{L²}`.
pub fn modified_energy(s: &State, p: &PhysParams, dealias: bool) -> Result<(f64, f64, f64)> {
    let grid = s.grid();
    let cv = grid.cell_volume();
    let du = physics::dt_u_from_equation(s, p, dealias)?;
    let dt_u_sq: f64 = du.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * cv;

    let abs_u = ScalarField::from_values(
        grid,
        s.u.values()
            .iter()
            .map(|v| Complex64::new(v.norm(), 0.0))
            .collect(),
    );
    let grad_abs = gradient(&abs_u);
    let gamma = p.gamma;
    let mut r_part = 0.0;
    for i in 0..grid.len() {
        let m = s.u.values()[i].norm();
        let g2 = grad_abs.comp(0)[i].re.powi(2)
            + grad_abs.comp(1)[i].re.powi(2)
            + grad_abs.comp(2)[i].re.powi(2);
        r_part += (gamma - 1.0) * m.powf(gamma - 1.0) * g2
            + (gamma - 1.0) / gamma * m.powf(2.0 * gamma);
    }
    r_part *= cv;

    let phi = solve_phi(&s.u);
    let mut s_part = 0.0;
    for i in 0..grid.len() {
        let m = s.u.values()[i].norm();
        let w = phi.values()[i].re + m.powf(gamma - 1.0);
        s_part += (w * m).powi(2);
    }
    let s_part = (s_part * cv).sqrt();

    Ok((dt_u_sq - r_part, r_part, s_part))
}

/// The five integrand terms of the modified-energy derivative identity.
#[derive(Clone, Copy, Debug)]
pub struct ModifiedEnergyRhs {
    /// `∫ 4 Re(∂tA·∇_A u · conj(∂t u))`
    pub advection: f64,
    /// `∫ (γ-1)(γ-3) |u|^{γ-2} ∂t|u| |∇|u||²` — identically absent at γ = 3.
    pub grad_abs: f64,
    /// `∫ 2(γ-1) |u|^{γ-2} ∂t|u| |∇_A u|²`
    pub grad_mag: f64,
    /// `∫ 2(γ-1) φ |u|^γ ∂t|u|`
    pub potential: f64,
    /// `∫ 2 Im(u ∂tφ conj(∂t u))`
    pub electric: f64,
}

impl ModifiedEnergyRhs {
    pub fn total(&self) -> f64 {
        self.advection + self.grad_abs + self.grad_mag + self.potential + self.electric
    }
}

/// Evaluates the right-hand side of `dE₂/dt` term by term. Requires `γ > 2`;
/// `∂t|u|` is computed as `Re(ū ∂tu)/|u|`, floored to 0 where
/// `|u| < 1e-12 · max|u|`.
pub fn modified_energy_rhs_terms(
    s: &State,
    p: &PhysParams,
    dealias: bool,
) -> Result<ModifiedEnergyRhs> {
    if !(p.gamma > 2.0) {
        return Err(MsError::InvalidParam(format!(
            "modified-energy derivative requires gamma > 2, got {}",
            p.gamma
        )));
    }
    let grid = s.grid();
    let cv = grid.cell_volume();
    let gamma = p.gamma;
    let du = physics::dt_u_from_equation(s, p, dealias)?;
    let mg = magnetic_gradient(&s.u, &s.a)?;
    let phi = solve_phi(&s.u);

    let abs_u = ScalarField::from_values(
        grid,
        s.u.values()
            .iter()
            .map(|v| Complex64::new(v.norm(), 0.0))
            .collect(),
    );
    let grad_abs = gradient(&abs_u);

    let dt_rho = ScalarField::from_values(
        grid,
        s.u.values()
            .iter()
            .zip(du.values())
            .map(|(&uv, &dv)| Complex64::new(2.0 * (uv.conj() * dv).re, 0.0))
            .collect(),
    );
    let dt_phi = inv_laplacian_zero_mean(&dt_rho).realize();

    let floor = 1e-12 * s.u.linf_norm();
    let c1 = (gamma - 1.0) * (gamma - 3.0);
    let c2 = 2.0 * (gamma - 1.0);

    let (mut advection, mut t_grad_abs, mut grad_mag, mut potential, mut electric) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..grid.len() {
        let uv = s.u.values()[i];
        let dv = du.values()[i];
        let m = uv.norm();

        let at_dot_mg = s.at.comp(0)[i] * mg.comp(0)[i]
            + s.at.comp(1)[i] * mg.comp(1)[i]
            + s.at.comp(2)[i] * mg.comp(2)[i];
        advection += 4.0 * (at_dot_mg * dv.conj()).re;

        let dt_abs = if m <= floor {
            0.0
        } else {
            (uv.conj() * dv).re / m
        };
        if dt_abs != 0.0 {
            let m_pow = m.powf(gamma - 2.0);
            let g2 = grad_abs.comp(0)[i].re.powi(2)
                + grad_abs.comp(1)[i].re.powi(2)
                + grad_abs.comp(2)[i].re.powi(2);
            let mg2 = mg.comp(0)[i].norm_sqr() + mg.comp(1)[i].norm_sqr()
                + mg.comp(2)[i].norm_sqr();
            t_grad_abs += c1 * m_pow * dt_abs * g2;
            grad_mag += c2 * m_pow * dt_abs * mg2;
            potential += c2 * phi.values()[i].re * m_pow * m * m * dt_abs;
        }

        electric += 2.0 * (uv * dt_phi.values()[i].re * dv.conj()).im;
    }

    Ok(ModifiedEnergyRhs {
        advection: advection * cv,
        grad_abs: t_grad_abs * cv,
        grad_mag: grad_mag * cv,
        potential: potential * cv,
        electric: electric * cv,
    })
}

/// Total of the derivative-identity right-hand side.
pub fn modified_energy_rhs(s: &State, p: &PhysParams, dealias: bool) -> Result<f64> {
    Ok(modified_energy_rhs_terms(s, p, dealias)?.total())
}

/// Sobolev norm `‖u‖_{H^s} = ‖(1-Δ)^{s/2} u‖_{L²}`, evaluated spectrally.
pub fn sobolev_norm(f: &ScalarField, s: f64) -> f64 {
    let spec = f.to_spectral();
    let mut acc = 0.0;
    for_each_mode(f.grid(), |idx, k, _| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        acc += (1.0 + k2).powf(s) * spec[idx].norm_sqr();
    });
    (acc * f.grid().volume()).sqrt()
}

/// Sobolev norm of a real vector field (root sum of squares over the three
/// component norms).
pub fn sobolev_norm_vec(f: &VectorField, s: f64) -> f64 {
    let grid = f.grid();
    let mut acc = 0.0;
    for j in 0..3 {
        let spec = f.comp_spectral(j);
        for_each_mode(grid, |idx, k, _| {
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            acc += (1.0 + k2).powf(s) * spec[idx].norm_sqr();
        });
    }
    (acc * grid.volume()).sqrt()
}

/// `W^{s,p}` norm: grid `L^p` norm of the Bessel potential `(1-Δ)^{s/2} f`.
/// `p = ∞` gives the max norm.
pub fn wsp_norm(f: &ScalarField, s: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(MsError::InvalidParam(format!(
            "Lebesgue exponent must lie in [1, inf], got {p}"
        )));
    }
    let g = bessel(f, s);
    Ok(lp_of_values(g.values().iter().map(|v| v.norm()), f.grid(), p))
}

/// `W^{s,p}` norm of a real vector field, using the pointwise Euclidean
/// magnitude of the Bessel-filtered field.
pub fn wsp_norm_vec(f: &VectorField, s: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(MsError::InvalidParam(format!(
            "Lebesgue exponent must lie in [1, inf], got {p}"
        )));
    }
    let g = crate::spectral::bessel_vec(f, s);
    let mags = (0..f.grid().len()).map(|i| {
        (g.comp(0)[i] * g.comp(0)[i] + g.comp(1)[i] * g.comp(1)[i] + g.comp(2)[i] * g.comp(2)[i])
            .sqrt()
    });
    Ok(lp_of_values(mags, f.grid(), p))
}

fn lp_of_values(values: impl Iterator<Item = f64>, grid: &crate::Grid, p: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        let s: f64 = values.map(|v| v.powf(p)).sum();
        (s * grid.cell_volume()).powf(1.0 / p)
    }
}

/// Magnetic Sobolev norm `‖(-Δ_A + 1)^{s/2} u‖_{L²}` for `s ∈ {1, 2}`:
/// the quadratic-form route `sqrt(‖∇_A u‖² + ‖u‖²)` at `s = 1`, the direct
/// operator application at `s = 2`. Fractional orders are not diagonalizable
/// in Fourier space and are rejected.
pub fn magnetic_sobolev_norm(u: &ScalarField, a: &VectorField, s: u32) -> Result<f64> {
    match s {
        1 => {
            let mg = magnetic_gradient(u, a)?;
            Ok((mg.l2_norm().powi(2) + u.l2_norm().powi(2)).sqrt())
        }
        2 => {
            let lap = magnetic_laplacian(u, a, false)?;
            let op = u.add_scaled(Complex64::new(-1.0, 0.0), &lap)?;
            Ok(op.l2_norm())
        }
        _ => Err(MsError::InvalidParam(format!(
            "magnetic Sobolev order must be 1 or 2, got {s}"
        ))),
    }
}

/// The `M^{s,σ} = H^s × Σ^σ` norm of a state, component-sum convention:
/// `‖u‖_{H^s} + ‖A‖_{H^σ} + ‖∂tA‖_{H^{σ-1}}`.
pub fn m_norm(s: &State, reg_s: f64, sigma: f64) -> f64 {
    sobolev_norm(&s.u, reg_s) + sobolev_norm_vec(&s.a, sigma) + sobolev_norm_vec(&s.at, sigma - 1.0)
}

/// `L^q` norm in time of a sampled scalar series by trapezoidal quadrature
/// (`q = ∞`: max over samples). Requires at least two time-sorted samples.
pub fn time_lq_norm(series: &[(f64, f64)], q: f64) -> Result<f64> {
    if series.len() < 2 {
        return Err(MsError::Series(format!(
            "need at least 2 samples, got {}",
            series.len()
        )));
    }
    for w in series.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(MsError::Series("series times must be strictly increasing".into()));
        }
    }
    if q.is_infinite() {
        return Ok(series.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max));
    }
    if !(q >= 1.0) {
        return Err(MsError::InvalidParam(format!(
            "time exponent must lie in [1, inf], got {q}"
        )));
    }
    let mut acc = 0.0;
    for w in series.windows(2) {
        let dt = w[1].0 - w[0].0;
        acc += 0.5 * dt * (w[0].1.abs().powf(q) + w[1].1.abs().powf(q));
    }
    Ok(acc.powf(1.0 / q))
}

/// Mixed norm `L^q_T W^{s,r}` of a scalar time series.
pub fn mixed_norm(series: &[(f64, &ScalarField)], spec: &MixedNormSpec) -> Result<f64> {
    let vals: Result<Vec<(f64, f64)>> = series
        .iter()
        .map(|(t, f)| Ok((*t, wsp_norm(f, spec.s, spec.r)?)))
        .collect();
    time_lq_norm(&vals?, spec.q)
}

/// Mixed norm `L^q_T W^{s,r}` of a vector time series.
pub fn mixed_norm_vec(series: &[(f64, &VectorField)], spec: &MixedNormSpec) -> Result<f64> {
    let vals: Result<Vec<(f64, f64)>> = series
        .iter()
        .map(|(t, f)| Ok((*t, wsp_norm_vec(f, spec.s, spec.r)?)))
        .collect();
    time_lq_norm(&vals?, spec.q)
}

/// Lorentz-force integrability monitor: the `L²_T` norm of the per-time
/// series `‖F_L(t)‖_{L¹}`.
pub fn lorentz_l2t_l1(series: &[(f64, f64)]) -> Result<f64> {
    time_lq_norm(series, 2.0)
}

/// `‖F_L(t)‖_{L¹}` at a single time (quadrature of the pointwise Euclidean
/// magnitude).
pub fn lorentz_l1(s: &State) -> Result<f64> {
    let f = physics::lorentz_force(s)?;
    let grid = s.grid();
    let mut acc = 0.0;
    for i in 0..grid.len() {
        acc += (f.comp(0)[i] * f.comp(0)[i]
            + f.comp(1)[i] * f.comp(1)[i]
            + f.comp(2)[i] * f.comp(2)[i])
            .sqrt();
    }
    Ok(acc * grid.cell_volume())
}

/// Pointwise diamagnetic check: the maximum over grid points of
/// `(|∇|u|| - |∇_A u|)₊`. With a refined `(u, A)` pair on a doubled grid,
/// also reports the per-doubling decay slope `log2(coarse/fine)`.
pub fn diamagnetic_report(
    u: &ScalarField,
    a: &VectorField,
    refined: Option<(&ScalarField, &VectorField)>,
) -> Result<(f64, Option<f64>)> {
    let coarse = diamagnetic_violation(u, a)?;
    let slope = match refined {
        Some((uf, af)) => {
            let fine = diamagnetic_violation(uf, af)?;
            if coarse > 0.0 && fine > 0.0 {
                Some((coarse / fine).log2())
            } else {
                None
            }
        }
        None => None,
    };
    Ok((coarse, slope))
}

fn diamagnetic_violation(u: &ScalarField, a: &VectorField) -> Result<f64> {
    let grid = u.grid();
    let mg = magnetic_gradient(u, a)?;
    let abs_u = ScalarField::from_values(
        grid,
        u.values()
            .iter()
            .map(|v| Complex64::new(v.norm(), 0.0))
            .collect(),
    );
    let grad_abs = gradient(&abs_u);
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        let ga = (grad_abs.comp(0)[i].re.powi(2)
            + grad_abs.comp(1)[i].re.powi(2)
            + grad_abs.comp(2)[i].re.powi(2))
        .sqrt();
        let gm = (mg.comp(0)[i].norm_sqr() + mg.comp(1)[i].norm_sqr() + mg.comp(2)[i].norm_sqr())
            .sqrt();
        worst = worst.max(ga - gm);
    }
    Ok(worst.max(0.0))
}

/// Least-squares fit of the growth law of a running-sup norm series.
#[derive(Clone, Debug)]
pub struct GrowthFit {
    /// Slope of `log(norm)` against `log(1 + T)`.
    pub poly_exponent: f64,
    /// Slope of `log(norm)` against `T`.
    pub exp_rate: f64,
    /// Residuals of the polynomial-law fit, one per sample.
    pub residuals: Vec<f64>,
}

impl GrowthFit {
    pub fn residual_norm(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

/// Fits descriptive growth exponents to a running-sup series `(T, sup norm)`.
/// Requires at least 4 samples, strictly increasing `T ≥ 0`, positive and
/// nondecreasing norms.
pub fn growth_fit(series: &[(f64, f64)]) -> Result<GrowthFit> {
    if series.len() < 4 {
        return Err(MsError::Series(format!(
            "growth fit needs at least 4 samples, got {}",
            series.len()
        )));
    }
    for w in series.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(MsError::Series("series times must be strictly increasing".into()));
        }
        if w[1].1 < w[0].1 {
            return Err(MsError::Series(
                "running-sup input must be nondecreasing".into(),
            ));
        }
    }
    if series.iter().any(|(t, v)| *t < 0.0 || !(*v > 0.0)) {
        return Err(MsError::Series(
            "growth fit needs T >= 0 and positive norms".into(),
        ));
    }
    let xs_poly: Vec<f64> = series.iter().map(|(t, _)| (1.0 + t).ln()).collect();
    let xs_exp: Vec<f64> = series.iter().map(|(t, _)| *t).collect();
    let ys: Vec<f64> = series.iter().map(|(_, v)| v.ln()).collect();
    let (poly_exponent, poly_icept) = lsq_slope(&xs_poly, &ys)?;
    let (exp_rate, _) = lsq_slope(&xs_exp, &ys)?;
    let residuals = xs_poly
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (poly_icept + poly_exponent * x))
        .collect();
    Ok(GrowthFit {
        poly_exponent,
        exp_rate,
        residuals,
    })
}

fn lsq_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(MsError::Series("degenerate abscissa in least squares".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Turns a sampled series into its running supremum.
pub fn running_sup(series: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(series.len());
    let mut sup = f64::NEG_INFINITY;
    for &(t, v) in series {
        sup = sup.max(v);
        out.push((t, sup));
    }
    out
}

/// Computes the full per-time diagnostic record for a state.
pub fn compute_record(s: &State, p: &PhysParams, dealias: bool) -> Result<DiagnosticRecord> {
    let q = charge(&s.u);
    let en = energy(s, p);
    let (e2, _, _) = modified_energy(s, p, dealias)?;
    let e2_rhs = if p.gamma > 2.0 {
        modified_energy_rhs(s, p, dealias)?
    } else {
        f64::NAN
    };
    let h1 = sobolev_norm(&s.u, 1.0);
    let h2 = sobolev_norm(&s.u, 2.0);
    let sigma_a = sobolev_norm_vec(&s.a, p.sigma);
    let sigma_minus1_at = sobolev_norm_vec(&s.at, p.sigma - 1.0);
    let (diamag_violation, _) = diamagnetic_report(&s.u, &s.a, None)?;
    Ok(DiagnosticRecord {
        t: s.t,
        charge: q,
        energy: en,
        e2,
        e2_rhs,
        sobolev: vec![(1.0, h1), (2.0, h2)],
        sigma_a,
        sigma_minus1_at,
        m_norm: h2 + sigma_a + sigma_minus1_at,
        lorentz_l1: lorentz_l1(s)?,
        diamag_violation,
    })
}
