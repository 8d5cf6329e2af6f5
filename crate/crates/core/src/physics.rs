//! Physical content of the coupled system: state assembly, electric
//! potential, current, magnetic differential operators, nonlinearity,
//! electromagnetic observables, Lorentz force, and gauge transformation.

use num_complex::Complex64;

use crate::error::MsError;
use crate::field::{CVectorField, ScalarField, VectorField};
use crate::grid::same_grid;
use crate::spectral::{
    self, curl, dealias_spec, for_each_mode, gradient, inv_laplacian_zero_mean,
};
use crate::Result;

/// Physical parameters: nonlinearity exponent `γ > 1` and the regularity
/// index `σ ∈ [4/3, 3)` used by the norm diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysParams {
    pub gamma: f64,
    pub sigma: f64,
}

pub const SIGMA_MIN: f64 = 4.0 / 3.0;
pub const SIGMA_MAX: f64 = 3.0;

impl PhysParams {
    pub fn new(gamma: f64, sigma: f64) -> Result<PhysParams> {
        if !(gamma > 1.0) {
            return Err(MsError::InvalidParam(format!(
                "gamma must exceed 1, got {gamma}"
            )));
        }
        if !(sigma >= SIGMA_MIN && sigma < SIGMA_MAX) {
            return Err(MsError::InvalidParam(format!(
                "sigma must lie in [4/3, 3), got {sigma}"
            )));
        }
        Ok(PhysParams { gamma, sigma })
    }
}

/// The evolved triple `(u, A, ∂tA)` at one time, with `div A = div ∂tA = 0`
/// enforced at construction.
#[derive(Clone, Debug)]
pub struct State {
    pub t: f64,
    pub u: ScalarField,
    pub a: VectorField,
    pub at: VectorField,
}

/// Divergence residual accepted by [`State::new`].
pub const DIV_TOL: f64 = 1e-10;

impl State {
    pub fn new(t: f64, u: ScalarField, a: VectorField, at: VectorField) -> Result<State> {
        same_grid(u.grid(), a.grid())?;
        same_grid(u.grid(), at.grid())?;
        for f in [&a, &at] {
            let residual = f.div_residual();
            if residual > DIV_TOL {
                return Err(MsError::NotSolenoidal { residual });
            }
        }
        Ok(State { t, u, a, at })
    }

    /// Skips the divergence check; for integrator internals that preserve
    /// the constraint by construction.
    pub(crate) fn new_unchecked(t: f64, u: ScalarField, a: VectorField, at: VectorField) -> State {
        State { t, u, a, at }
    }

    pub fn zero(grid: &std::sync::Arc<crate::Grid>) -> State {
        State {
            t: 0.0,
            u: ScalarField::zeros(grid),
            a: VectorField::zeros(grid),
            at: VectorField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &std::sync::Arc<crate::Grid> {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.a.is_finite() && self.at.is_finite()
    }
}

/// Electric potential `φ = (-Δ)⁻¹ |u|²`, real and zero-mean.
pub fn solve_phi(u: &ScalarField) -> ScalarField {
    let rho = charge_density(u);
    inv_laplacian_zero_mean(&rho).realize()
}

/// `ρ^e` with fast paths for the half-integer-quarter exponents the solver
/// meets most often.
#[inline]
pub(crate) fn rho_pow(rho: f64, e: f64) -> f64 {
    if e == 1.0 {
        rho
    } else if e == 0.75 {
        (rho * rho.sqrt()).sqrt()
    } else if e == 0.5 {
        rho.sqrt()
    } else if e == 1.5 {
        rho * rho.sqrt()
    } else if e == 1.75 {
        rho * (rho * rho.sqrt()).sqrt()
    } else if e == 2.0 {
        rho * rho
    } else {
        rho.powf(e)
    }
}

/// Charge density `ρ = |u|²` as a real scalar field.
pub fn charge_density(u: &ScalarField) -> ScalarField {
    ScalarField::from_values(
        u.grid(),
        u.values()
            .iter()
            .map(|v| Complex64::new(v.norm_sqr(), 0.0))
            .collect(),
    )
}

/// Magnetic gradient `∇_A u = (∇ - iA) u`, component-wise `∂_j u - i A_j u`.
pub fn magnetic_gradient(u: &ScalarField, a: &VectorField) -> Result<CVectorField> {
    same_grid(u.grid(), a.grid())?;
    let mut g = gradient(u);
    for j in 0..3 {
        let c = g.comp_mut(j);
        for (v, (&aj, &uv)) in c.iter_mut().zip(a.comp(j).iter().zip(u.values())) {
            *v -= Complex64::new(0.0, aj) * uv;
        }
    }
    Ok(g)
}

/// Magnetic Laplacian `Δ_A u = Δu - i(∇·(Au) + A·∇u) - |A|²u` in the Coulomb
/// gauge. The advection part is kept in the symmetrized (skew-adjoint) form,
/// which coincides with `-2iA·∇u` up to the aliasing of the product `Au`;
/// with `dealias` the product terms are passed through the two-thirds mask.
pub fn magnetic_laplacian(u: &ScalarField, a: &VectorField, dealias: bool) -> Result<ScalarField> {
    same_grid(u.grid(), a.grid())?;
    debug_assert!(a.div_residual() < 1e-6, "magnetic_laplacian needs div A = 0");
    let grid = u.grid();
    let spec_u = u.to_spectral();

    // grad u (per component) for the pointwise A·∇u term
    let grad = gradient(u);

    // spectral divergence of Au
    let mut div_au = vec![Complex64::default(); grid.len()];
    for axis in 0..3 {
        let mut au: Vec<Complex64> = u
            .values()
            .iter()
            .zip(a.comp(axis))
            .map(|(&uv, &av)| uv * av)
            .collect();
        crate::fft::forward(grid, &mut au);
        for_each_mode(grid, |idx, _, kd| {
            div_au[idx] += Complex64::new(0.0, kd[axis]) * au[idx];
        });
    }

    // pointwise bundle: -i A·∇u - |A|² u
    let mut bundle: Vec<Complex64> = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let a_dot_grad = a.comp(0)[i] * grad.comp(0)[i]
            + a.comp(1)[i] * grad.comp(1)[i]
            + a.comp(2)[i] * grad.comp(2)[i];
        let a2 = a.comp(0)[i] * a.comp(0)[i]
            + a.comp(1)[i] * a.comp(1)[i]
            + a.comp(2)[i] * a.comp(2)[i];
        bundle.push(-Complex64::i() * a_dot_grad - a2 * u.values()[i]);
    }
    crate::fft::forward(grid, &mut bundle);

    // assemble in spectral space: Δu - i div(Au) + bundle
    let mut out = vec![Complex64::default(); grid.len()];
    for_each_mode(grid, |idx, k, _| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        out[idx] = -k2 * spec_u[idx] - Complex64::i() * div_au[idx] + bundle[idx];
    });
    if dealias {
        // mask only the product terms; Δu of a masked state is already in-ball
        let mut lin = spec_u;
        for_each_mode(grid, |idx, k, _| {
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            lin[idx] *= -k2;
            out[idx] -= lin[idx];
        });
        dealias_spec(grid, &mut out);
        for (o, l) in out.iter_mut().zip(&lin) {
            *o += l;
        }
    }
    Ok(ScalarField::from_spectral(grid, out))
}

/// Defocusing power nonlinearity `|u|^{γ-1} u`, evaluated pointwise.
pub fn nonlinearity(u: &ScalarField, gamma: f64) -> Result<ScalarField> {
    if !(gamma > 1.0) {
        return Err(MsError::InvalidParam(format!(
            "nonlinearity requires gamma > 1, got {gamma}"
        )));
    }
    let values = if gamma == 3.0 {
        u.values().iter().map(|&v| v.norm_sqr() * v).collect()
    } else {
        let e = (gamma - 1.0) / 2.0;
        u.values()
            .iter()
            .map(|&v| v.norm_sqr().powf(e) * v)
            .collect()
    };
    Ok(ScalarField::from_values(u.grid(), values))
}

/// Electric current `J = 2 Im( ū (∇ - iA) u ) = 2 Im(ū ∇u) - 2 |u|² A`.
/// With `project` the Leray projection is applied; with `dealias` the
/// two-thirds mask is applied first.
pub fn current_j(
    u: &ScalarField,
    a: &VectorField,
    project: bool,
    dealias: bool,
) -> Result<VectorField> {
    same_grid(u.grid(), a.grid())?;
    let grid = u.grid();
    let grad = gradient(u);
    let mut comps: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; grid.len()]);
    for j in 0..3 {
        for i in 0..grid.len() {
            let uv = u.values()[i];
            comps[j][i] =
                2.0 * (uv.conj() * grad.comp(j)[i]).im - 2.0 * uv.norm_sqr() * a.comp(j)[i];
        }
    }
    let mut out = VectorField::from_comps(grid, comps);
    if project || dealias {
        let mut spec: [Vec<Complex64>; 3] = std::array::from_fn(|j| out.comp_spectral(j));
        if dealias {
            for s in spec.iter_mut() {
                dealias_spec(grid, s);
            }
        }
        if project {
            spectral::project_spec(grid, &mut spec);
        }
        out = VectorField::from_comps(grid, spec.map(|s| VectorField::comp_from_spectral(grid, s)));
        out.solenoidal = project;
    }
    Ok(out)
}

/// Right-hand side of the order-parameter equation,
/// `∂t u = -i( -Δ_A u + φ u + |u|^{γ-1} u )`.
pub fn schrodinger_rhs(s: &State, p: &PhysParams, dealias: bool) -> Result<ScalarField> {
    let (du, _, _) = full_rhs(s, p, dealias)?;
    Ok(du)
}

/// `∂t u` recovered from the equation; named input for the modified-energy
/// diagnostics.
pub fn dt_u_from_equation(s: &State, p: &PhysParams, dealias: bool) -> Result<ScalarField> {
    schrodinger_rhs(s, p, dealias)
}

/// Right-hand side of the wave equation as a first-order system:
/// `(∂t A, ∂t(∂tA)) = (At, ΔA + P J)`. The second slot is solenoidal.
pub fn wave_rhs(s: &State, dealias: bool) -> Result<(VectorField, VectorField)> {
    let j = current_j(&s.u, &s.a, true, dealias)?;
    let mut att = laplacian_vec_plus(&s.a, &j);
    att.solenoidal = s.a.solenoidal && j.solenoidal;
    Ok((s.at.clone(), att))
}

fn laplacian_vec_plus(a: &VectorField, add: &VectorField) -> VectorField {
    let grid = a.grid();
    let comps = std::array::from_fn(|j| {
        let mut spec = a.comp_spectral(j);
        for_each_mode(grid, |idx, k, _| {
            spec[idx] *= -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        });
        let lap = VectorField::comp_from_spectral(grid, spec);
        lap.iter()
            .zip(add.comp(j))
            .map(|(l, s)| l + s)
            .collect::<Vec<f64>>()
    });
    VectorField::from_comps(grid, comps)
}

/// Combined right-hand side `(∂t u, ∂t A, ∂t At)` sharing spectra between the
/// Schrödinger and wave parts. This is what the integrators call.
pub fn full_rhs(
    s: &State,
    p: &PhysParams,
    dealias: bool,
) -> Result<(ScalarField, VectorField, VectorField)> {
    let grid = s.grid();
    same_grid(s.u.grid(), s.a.grid())?;
    let u = &s.u;
    let a = &s.a;
    let npts = grid.len();

    let spec_u = u.to_spectral();
    let grad = gradient(u);
    let k2s = grid.k2_flat();

    // ρ and φ
    let mut phi: Vec<Complex64> = u
        .values()
        .iter()
        .map(|v| Complex64::new(v.norm_sqr(), 0.0))
        .collect();
    let rho: Vec<f64> = phi.iter().map(|v| v.re).collect();
    crate::fft::forward(grid, &mut phi);
    for (v, &k2) in phi.iter_mut().zip(k2s) {
        if k2 == 0.0 {
            *v = Complex64::default();
        } else {
            *v /= k2;
        }
    }
    crate::fft::inverse(grid, &mut phi);
    let phi: Vec<f64> = phi.into_iter().map(|v| v.re).collect();

    // spectral divergence of Au
    let mut div_au = vec![Complex64::default(); npts];
    for axis in 0..3 {
        let mut au: Vec<Complex64> = u
            .values()
            .iter()
            .zip(a.comp(axis))
            .map(|(&uv, &av)| uv * av)
            .collect();
        crate::fft::forward(grid, &mut au);
        let kd = grid.kd_flat(axis);
        for ((acc, v), &k) in div_au.iter_mut().zip(&au).zip(kd) {
            *acc += Complex64::new(0.0, k) * v;
        }
    }

    // pointwise bundle: -i A·∇u - (|A|² + φ + |u|^{γ-1}) u
    let pow_exp = (p.gamma - 1.0) / 2.0;
    let (g0, g1, g2) = (grad.comp(0), grad.comp(1), grad.comp(2));
    let (a0, a1, a2c) = (a.comp(0), a.comp(1), a.comp(2));
    let uvals = u.values();
    let mut bundle: Vec<Complex64> = Vec::with_capacity(npts);
    for i in 0..npts {
        let uv = uvals[i];
        let a_dot_grad = a0[i] * g0[i] + a1[i] * g1[i] + a2c[i] * g2[i];
        let a2 = a0[i] * a0[i] + a1[i] * a1[i] + a2c[i] * a2c[i];
        let pw = rho_pow(rho[i], pow_exp);
        bundle.push(-Complex64::i() * a_dot_grad - (a2 + phi[i] + pw) * uv);
    }
    crate::fft::forward(grid, &mut bundle);

    // ∂t u = i ( Δu - i div(Au) + bundle ), product terms masked
    let mut du_spec: Vec<Complex64> = div_au
        .iter()
        .zip(&bundle)
        .map(|(d, b)| -Complex64::i() * d + b)
        .collect();
    if dealias {
        dealias_spec(grid, &mut du_spec);
    }
    for ((v, &su), &k2) in du_spec.iter_mut().zip(&spec_u).zip(k2s) {
        *v = Complex64::i() * (*v - k2 * su);
    }
    let du = ScalarField::from_spectral(grid, du_spec);

    // J = 2 Im(ū ∇u) - 2ρA, masked and projected, plus ΔA
    let mut att_spec: [Vec<Complex64>; 3] = std::array::from_fn(|j| {
        let gj = grad.comp(j);
        let aj = a.comp(j);
        let mut jc: Vec<Complex64> = Vec::with_capacity(npts);
        for i in 0..npts {
            let uv = u.values()[i];
            let val = 2.0 * (uv.conj() * gj[i]).im - 2.0 * rho[i] * aj[i];
            jc.push(Complex64::new(val, 0.0));
        }
        crate::fft::forward(grid, &mut jc);
        if dealias {
            dealias_spec(grid, &mut jc);
        }
        jc
    });
    spectral::project_spec(grid, &mut att_spec);
    for j in 0..3 {
        let mut spec_a = a.comp_spectral(j);
        for (v, &k2) in spec_a.iter_mut().zip(k2s) {
            *v *= k2;
        }
        for (acc, v) in att_spec[j].iter_mut().zip(&spec_a) {
            *acc -= v;
        }
    }
    let mut att = VectorField::from_comps(
        grid,
        att_spec.map(|s| VectorField::comp_from_spectral(grid, s)),
    );
    att.solenoidal = a.solenoidal;
    Ok((du, s.at.clone(), att))
}

/// Electric field `E = -∂tA - ∇φ`.
pub fn electric_field(s: &State) -> VectorField {
    let phi = solve_phi(&s.u);
    let gphi = gradient(&phi).realize();
    s.at.scale(-1.0)
        .add_scaled(-1.0, &gphi)
        .expect("grids match")
}

/// Magnetic field `B = ∇ × A`.
pub fn magnetic_field(a: &VectorField) -> VectorField {
    curl(a)
}

/// Lorentz force density `F_L = ρE + J×B`, evaluated pointwise with the
/// unprojected current.
pub fn lorentz_force(s: &State) -> Result<VectorField> {
    let grid = s.grid();
    let e = electric_field(s);
    let b = magnetic_field(&s.a);
    let j = current_j(&s.u, &s.a, false, false)?;
    let mut comps: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; grid.len()]);
    for i in 0..grid.len() {
        let rho = s.u.values()[i].norm_sqr();
        let jv = [j.comp(0)[i], j.comp(1)[i], j.comp(2)[i]];
        let bv = [b.comp(0)[i], b.comp(1)[i], b.comp(2)[i]];
        let cross = [
            jv[1] * bv[2] - jv[2] * bv[1],
            jv[2] * bv[0] - jv[0] * bv[2],
            jv[0] * bv[1] - jv[1] * bv[0],
        ];
        for c in 0..3 {
            comps[c][i] = rho * e.comp(c)[i] + cross[c];
        }
    }
    Ok(VectorField::from_comps(grid, comps))
}

/// Result of a gauge transformation `(u, φ, A) ↦ (e^{iλ}u, φ - λt, A + ∇λ)`.
#[derive(Clone, Debug)]
pub struct GaugeTransformed {
    pub u: ScalarField,
    pub phi: ScalarField,
    pub a: VectorField,
}

/// Applies the gauge transformation with gauge function `λ` and its time
/// derivative `λt` (both real). `φ` is derived from the Coulomb-gauge state.
pub fn gauge_transform(
    s: &State,
    lambda: &ScalarField,
    lambda_t: &ScalarField,
) -> Result<GaugeTransformed> {
    same_grid(s.u.grid(), lambda.grid())?;
    same_grid(s.u.grid(), lambda_t.grid())?;
    for l in [lambda, lambda_t] {
        let im_max = l.values().iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        let scale = l.linf_norm().max(1.0);
        if im_max > 1e-12 * scale {
            return Err(MsError::InvalidParam(
                "gauge function must be real-valued".into(),
            ));
        }
    }
    let u = ScalarField::from_values(
        s.grid(),
        s.u.values()
            .iter()
            .zip(lambda.values())
            .map(|(&uv, lv)| uv * Complex64::cis(lv.re))
            .collect(),
    );
    let phi0 = solve_phi(&s.u);
    let phi = ScalarField::from_values(
        s.grid(),
        phi0.values()
            .iter()
            .zip(lambda_t.values())
            .map(|(p, l)| Complex64::new(p.re - l.re, 0.0))
            .collect(),
    );
    let glam = gradient(lambda).realize();
    let a = s.a.add_scaled(1.0, &glam)?;
    Ok(GaugeTransformed { u, phi, a })
}

/// Residual of the Lorenz-gauge condition `∂tφ' + div A'` for data obtained
/// from a Coulomb-gauge state by the transformation with gauge family
/// `λ(t) = λ + t λt` (so `∂ttλ = 0`): the residual reduces to
/// `(-Δ)⁻¹ ∂t|u|² + Δλ`.
pub fn lorenz_gauge_residual(
    s: &State,
    p: &PhysParams,
    lambda: &ScalarField,
    dealias: bool,
) -> Result<ScalarField> {
    let du = schrodinger_rhs(s, p, dealias)?;
    let dt_rho = ScalarField::from_values(
        s.grid(),
        s.u.values()
            .iter()
            .zip(du.values())
            .map(|(&uv, &dv)| Complex64::new(2.0 * (uv.conj() * dv).re, 0.0))
            .collect(),
    );
    let dt_phi = inv_laplacian_zero_mean(&dt_rho).realize();
    let lap_lambda = crate::spectral::laplacian(lambda).realize();
    dt_phi.add_scaled(Complex64::new(1.0, 0.0), &lap_lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gradient as sgrad, laplacian};
    use crate::testutil::*;
    use crate::Grid;
    use std::f64::consts::TAU;
    use std::sync::Arc;

    fn grid16() -> Arc<Grid> {
        Grid::new(16, TAU).unwrap()
    }

    fn plane_wave(grid: &Arc<Grid>, m: [f64; 3]) -> ScalarField {
        ScalarField::from_fn(grid, |x| {
            Complex64::cis(m[0] * x[0] + m[1] * x[1] + m[2] * x[2])
        })
    }

    fn const_vec(grid: &Arc<Grid>, v: [f64; 3]) -> VectorField {
        let mut f = VectorField::from_fn(grid, |_| v);
        f.solenoidal = true; // constants are divergence-free on the torus
        f
    }

    fn max_cdiff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }


    #[test]
    fn phi_of_constant_vanishes() {
        let g = grid16();
        let u = ScalarField::from_fn(&g, |_| Complex64::new(0.9, -0.3));
        assert!(solve_phi(&u).linf_norm() < 1e-13);
    }

    #[test]
    fn phi_single_mode_hand_inversion() {
        // u = sqrt(2) cos(2 x₁): ρ = 1 + cos(4 x₁), φ = cos(4 x₁)/16
        let g = grid16();
        let u = ScalarField::from_fn(&g, |x| {
            Complex64::new(2.0f64.sqrt() * (2.0 * x[0]).cos(), 0.0)
        });
        let phi = solve_phi(&u);
        let want = ScalarField::from_fn(&g, |x| Complex64::new((4.0 * x[0]).cos() / 16.0, 0.0));
        assert!(max_cdiff(phi.values(), want.values()) < 1e-13);
    }

    #[test]
    fn phi_is_quadratically_homogeneous() {
        let g = grid16();
        let u = smooth_scalar(&g, 40);
        let lam = 1.7;
        let a = solve_phi(&u.scale(Complex64::new(lam, 0.0)));
        let b = solve_phi(&u).scale(Complex64::new(lam * lam, 0.0));
        assert!(max_cdiff(a.values(), b.values()) / b.linf_norm().max(1e-300) < 1e-12);
    }

    #[test]
    fn magnetic_gradient_cases() {
        let g = grid16();
        let u = smooth_scalar(&g, 41);
        // A = 0 reduces to the plain gradient
        let mg = magnetic_gradient(&u, &VectorField::zeros(&g)).unwrap();
        let gr = sgrad(&u);
        for j in 0..3 {
            assert!(max_cdiff(mg.comp(j), gr.comp(j)) == 0.0);
        }
        // plane wave with constant A: i(k - a) e^{ik·x}
        let k = [2.0, -1.0, 3.0];
        let a = [0.3, -0.2, 0.5];
        let pw = plane_wave(&g, k);
        let mg = magnetic_gradient(&pw, &const_vec(&g, a)).unwrap();
        for j in 0..3 {
            let want: Vec<Complex64> = pw
                .values()
                .iter()
                .map(|v| Complex64::new(0.0, k[j] - a[j]) * v)
                .collect();
            assert!(max_cdiff(mg.comp(j), &want) < 1e-12);
        }
        // constant u: -i a c
        let c = Complex64::new(0.4, 0.7);
        let cu = ScalarField::from_fn(&g, |_| c);
        let mg = magnetic_gradient(&cu, &const_vec(&g, a)).unwrap();
        for j in 0..3 {
            let want = -Complex64::i() * a[j] * c;
            for v in mg.comp(j) {
                assert!((v - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn magnetic_laplacian_cases() {
        let g = grid16();
        let u = smooth_scalar(&g, 42);
        // A = 0 reduces to the Laplacian
        let ml = magnetic_laplacian(&u, &VectorField::zeros(&g), false).unwrap();
        let want = laplacian(&u);
        assert!(max_cdiff(ml.values(), want.values()) / want.linf_norm() < 1e-12);

        // plane wave with constant A: -|k - a|² e^{ik·x} (exact for both
        // product rules since constants create no new modes)
        let k = [2.0, -1.0, 3.0];
        let a = [0.3, -0.2, 0.5];
        let pw = plane_wave(&g, k);
        let k_minus_a2: f64 = (0..3).map(|j| (k[j] - a[j]) * (k[j] - a[j])).sum();
        for dealias in [false, true] {
            let ml = magnetic_laplacian(&pw, &const_vec(&g, a), dealias).unwrap();
            let want: Vec<Complex64> = pw.values().iter().map(|v| -k_minus_a2 * v).collect();
            assert!(max_cdiff(ml.values(), &want) < 1e-11);
        }

        // constant u: -|A|² c pointwise for any solenoidal A (raw products)
        let c = Complex64::new(0.8, -0.1);
        let cu = ScalarField::from_fn(&g, |_| c);
        let af = random_solenoidal(&g, 77);
        let ml = magnetic_laplacian(&cu, &af, false).unwrap();
        for i in 0..g.len() {
            let a2 = af.comp(0)[i].powi(2) + af.comp(1)[i].powi(2) + af.comp(2)[i].powi(2);
            assert!((ml.values()[i] + a2 * c).norm() < 1e-11);
        }
    }

    #[test]
    fn nonlinearity_cases() {
        let g = grid16();
        assert!(nonlinearity(&smooth_scalar(&g, 1), 1.0).is_err());
        assert!(nonlinearity(&smooth_scalar(&g, 1), 0.5).is_err());

        let u = smooth_scalar(&g, 43);
        let cubic = nonlinearity(&u, 3.0).unwrap();
        for (got, v) in cubic.values().iter().zip(u.values()) {
            assert!((got - v.norm_sqr() * v).norm() < 1e-15);
        }

        let c = 0.6;
        let cu = ScalarField::from_fn(&g, |_| Complex64::new(c, 0.0));
        let p = nonlinearity(&cu, 2.5).unwrap();
        for v in p.values() {
            assert!((v - Complex64::new(c.powf(2.5), 0.0)).norm() < 1e-15);
        }

        // phase equivariance
        let theta = Complex64::cis(0.9);
        let a = nonlinearity(&u.scale(theta), 2.5).unwrap();
        let b = nonlinearity(&u, 2.5).unwrap().scale(theta);
        assert!(max_cdiff(a.values(), b.values()) < 1e-14);
    }

    #[test]
    fn current_cases() {
        let g = grid16();
        // real u with A = 0 carries no current
        let ru = smooth_scalar(&g, 44).realize();
        let j = current_j(&ru, &VectorField::zeros(&g), false, false).unwrap();
        assert!(j.l2_norm() / ru.l2_norm().max(1e-300) < 1e-12);

        // plane wave: J = 2k, constant
        let k = [2.0, -1.0, 3.0];
        let pw = plane_wave(&g, k);
        let j = current_j(&pw, &VectorField::zeros(&g), false, false).unwrap();
        for axis in 0..3 {
            for v in j.comp(axis) {
                assert!((v - 2.0 * k[axis]).abs() < 1e-12);
            }
        }

        // constant u: J = -2|c|² A, and the projection leaves it unchanged
        let c = Complex64::new(0.5, -0.6);
        let cu = ScalarField::from_fn(&g, |_| c);
        let a = random_solenoidal(&g, 45);
        for project in [false, true] {
            let j = current_j(&cu, &a, project, false).unwrap();
            for axis in 0..3 {
                for (got, av) in j.comp(axis).iter().zip(a.comp(axis)) {
                    assert!((got + 2.0 * c.norm_sqr() * av).abs() < 1e-11);
                }
            }
        }

        // projected current is a fixed point of the projection
        let u = smooth_scalar(&g, 46);
        let jp = current_j(&u, &a, true, true).unwrap();
        let jpp = crate::spectral::helmholtz_project(&jp);
        let mut diff = 0.0f64;
        for axis in 0..3 {
            for (x, y) in jpp.comp(axis).iter().zip(jp.comp(axis)) {
                diff = diff.max((x - y).abs());
            }
        }
        assert!(diff / jp.linf_norm().max(1e-300) < 1e-12);
        assert!(jp.div_residual() < 1e-10);
    }

    #[test]
    fn schrodinger_rhs_cases() {
        let g = grid16();
        let p = PhysParams::new(2.5, 1.5).unwrap();
        let zero = State::zero(&g);
        assert!(schrodinger_rhs(&zero, &p, true).unwrap().linf_norm() == 0.0);

        // constant c > 0 with A = 0: ∂tu = -i c^γ (φ vanishes by zero-mean)
        let c = 0.8;
        let s = State::new(
            0.0,
            ScalarField::from_fn(&g, |_| Complex64::new(c, 0.0)),
            VectorField::zeros(&g),
            VectorField::zeros(&g),
        )
        .unwrap();
        let du = schrodinger_rhs(&s, &p, false).unwrap();
        let want = -Complex64::i() * c.powf(2.5);
        for v in du.values() {
            assert!((v - want).norm() < 1e-13);
        }

        // with the potential and power terms subtracted, the A = 0 equation
        // is linear: rhs + i(φu + |u|^{γ-1}u) = iΔu
        let u = smooth_scalar(&g, 47);
        let s = State::new(0.0, u.clone(), VectorField::zeros(&g), VectorField::zeros(&g)).unwrap();
        let du = schrodinger_rhs(&s, &p, false).unwrap();
        let phi = solve_phi(&u);
        let pw = nonlinearity(&u, p.gamma).unwrap();
        let mut residual = 0.0f64;
        let lap = laplacian(&u);
        for i in 0..g.len() {
            let lhs = du.values()[i]
                + Complex64::i() * (phi.values()[i].re * u.values()[i] + pw.values()[i]);
            residual = residual.max((lhs - Complex64::i() * lap.values()[i]).norm());
        }
        assert!(residual / lap.linf_norm() < 1e-12);
    }

    #[test]
    fn wave_rhs_cases() {
        let g = grid16();
        // free wave: single solenoidal mode gives ∂t(At) = -|k|² A
        let a = crate::spectral::helmholtz_project(&VectorField::from_fn(&g, |x| {
            [0.0, (3.0 * x[0]).cos(), 0.0]
        }));
        let s = State::new(0.0, ScalarField::zeros(&g), a.clone(), VectorField::zeros(&g)).unwrap();
        let (da, dat) = wave_rhs(&s, true).unwrap();
        assert!(da.l2_norm() == 0.0);
        for j in 0..3 {
            for (got, av) in dat.comp(j).iter().zip(a.comp(j)) {
                assert!((got + 9.0 * av).abs() < 1e-11);
            }
        }

        // zero state maps to zero
        let z = State::zero(&g);
        let (da, dat) = wave_rhs(&z, true).unwrap();
        assert!(da.l2_norm() == 0.0 && dat.l2_norm() == 0.0);

        // plane wave source with A = 0: ∂t(At) = P(2k) = 2k kept on the torus
        let k = [2.0, -1.0, 0.0];
        let s = State::new(
            0.0,
            plane_wave(&g, k),
            VectorField::zeros(&g),
            VectorField::zeros(&g),
        )
        .unwrap();
        let (_, dat) = wave_rhs(&s, true).unwrap();
        for j in 0..3 {
            for v in dat.comp(j) {
                assert!((v - 2.0 * k[j]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn coulomb_gauge_preserved_by_wave_rhs() {
        let g = grid16();
        for seed in [3, 9, 27] {
            let s = crate::testutil::random_state(&g, seed);
            let (_, dat) = wave_rhs(&s, true).unwrap();
            assert!(dat.div_residual() < 1e-10);
        }
    }

    #[test]
    fn electric_and_magnetic_fields() {
        let g = grid16();
        // u = 0 and At = 0 gives E = 0
        let z = State::zero(&g);
        assert!(electric_field(&z).l2_norm() == 0.0);

        // A = (0, sin(2x₁), 0): B = (0, 0, 2cos(2x₁))
        let a = crate::spectral::helmholtz_project(&VectorField::from_fn(&g, |x| {
            [0.0, (2.0 * x[0]).sin(), 0.0]
        }));
        let b = magnetic_field(&a);
        for i in 0..g.len() {
            assert!(b.comp(0)[i].abs() < 1e-12);
            assert!(b.comp(1)[i].abs() < 1e-12);
        }
        let want = VectorField::from_fn(&g, |x| [0.0, 0.0, 2.0 * (2.0 * x[0]).cos()]);
        for (got, w) in b.comp(2).iter().zip(want.comp(2)) {
            assert!((got - w).abs() < 1e-12);
        }
        // div B = 0 always
        let ar = random_vector(&g, 50);
        assert!(magnetic_field(&ar).div_residual() < 1e-12);
    }

    #[test]
    fn lorentz_force_cases() {
        let g = grid16();
        assert!(lorentz_force(&State::zero(&g)).unwrap().l2_norm() == 0.0);

        // A = 0, real u, At = 0: F_L = ρ (-∇φ) exactly
        let ru = smooth_scalar(&g, 51).realize();
        let s = State::new(0.0, ru.clone(), VectorField::zeros(&g), VectorField::zeros(&g)).unwrap();
        let f = lorentz_force(&s).unwrap();
        let phi = solve_phi(&ru);
        let gphi = sgrad(&phi);
        for i in 0..g.len() {
            let rho = ru.values()[i].norm_sqr();
            for j in 0..3 {
                assert!((f.comp(j)[i] + rho * gphi.comp(j)[i].re).abs() < 1e-12);
            }
        }

        // generic state against an independent pointwise re-evaluation
        let s = crate::testutil::random_state(&g, 52);
        let f = lorentz_force(&s).unwrap();
        let e = electric_field(&s);
        let b = magnetic_field(&s.a);
        let j = current_j(&s.u, &s.a, false, false).unwrap();
        let mut worst = 0.0f64;
        for i in 0..g.len() {
            let rho = s.u.values()[i].norm_sqr();
            let jv = [j.comp(0)[i], j.comp(1)[i], j.comp(2)[i]];
            let bv = [b.comp(0)[i], b.comp(1)[i], b.comp(2)[i]];
            let want = [
                rho * e.comp(0)[i] + jv[1] * bv[2] - jv[2] * bv[1],
                rho * e.comp(1)[i] + jv[2] * bv[0] - jv[0] * bv[2],
                rho * e.comp(2)[i] + jv[0] * bv[1] - jv[1] * bv[0],
            ];
            for c in 0..3 {
                worst = worst.max((f.comp(c)[i] - want[c]).abs());
            }
        }
        assert!(worst < 1e-12);
    }

    #[test]
    fn gauge_transform_invariants() {
        let g = grid16();
        let s = crate::testutil::random_state(&g, 60);
        let lambda = smooth_scalar(&g, 61).realize();
        let lambda_t = smooth_scalar(&g, 62).realize();
        let gt = gauge_transform(&s, &lambda, &lambda_t).unwrap();

        // |u'| = |u| and ρ' = ρ
        for (a, b) in gt.u.values().iter().zip(s.u.values()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-13 * b.norm().max(1.0));
        }
        // B invariance: curl(A + ∇λ) = curl A
        let b0 = magnetic_field(&s.a);
        let b1 = magnetic_field(&gt.a);
        let mut diff = 0.0f64;
        for j in 0..3 {
            for (x, y) in b1.comp(j).iter().zip(b0.comp(j)) {
                diff = diff.max((x - y).abs());
            }
        }
        assert!(diff / b0.linf_norm().max(1e-300) < 1e-12);

        // constant λ with λt = 0: A unchanged, u picks up a global phase,
        // φ unchanged
        let c = ScalarField::from_fn(&g, |_| Complex64::new(0.4, 0.0));
        let zt = ScalarField::zeros(&g);
        let gt = gauge_transform(&s, &c, &zt).unwrap();
        let mut adiff = 0.0f64;
        for j in 0..3 {
            for (x, y) in gt.a.comp(j).iter().zip(s.a.comp(j)) {
                adiff = adiff.max((x - y).abs());
            }
        }
        assert!(adiff < 1e-12);
        let phase = Complex64::cis(0.4);
        for (x, y) in gt.u.values().iter().zip(s.u.values()) {
            assert!((x - phase * y).norm() < 1e-13);
        }
        let phi0 = solve_phi(&s.u);
        assert!(max_cdiff(gt.phi.values(), phi0.values()) < 1e-13);

        // complex gauge functions are rejected
        let bad = smooth_scalar(&g, 63);
        assert!(gauge_transform(&s, &bad, &zt).is_err());
    }

    #[test]
    fn rejects_non_solenoidal_state() {
        let g = grid16();
        let bad = VectorField::from_fn(&g, |x| [(2.0 * x[0]).cos(), 0.0, 0.0]);
        assert!(matches!(
            State::new(0.0, ScalarField::zeros(&g), bad, VectorField::zeros(&g)),
            Err(MsError::NotSolenoidal { .. })
        ));
    }
}
