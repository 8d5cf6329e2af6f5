//! Fixed-point solution mode: the Duhamel solution map and its iteration,
//! mirroring the contraction construction behind local well-posedness.
//!
//! The map sends a candidate `(u, A)` to `(v, B)` with
//!
//! ```text
//! v(t) = U_A(t,0) u0 - i ∫₀ᵗ U_A(t,τ) N(u)(τ) dτ,      N(u) = φu + |u|^{γ-1}u,
//! (□+1) B = P J(u, A) + A,
//! ```
//!
//! where `U_A` is the linear magnetic propagator and the wave part uses the
//! mass-1 Klein–Gordon flow with the compensating `+A` source. Duhamel
//! integrals are discretized by trapezoidal quadrature on the candidate's
//! uniform sample times, composed incrementally through the two-parameter
//! propagator property.

use num_complex::Complex64;

use crate::diagnostics::{self, MixedNormSpec};
use crate::error::MsError;
use crate::field::{ScalarField, VectorField};
use crate::integrators::{magnetic_propagator_with, TrajMeta, Trajectory};
use crate::physics::{self, PhysParams, State};
use crate::spectral::free_kg_step;
use crate::Result;

/// Options for the fixed-point iteration.
#[derive(Clone, Copy, Debug)]
pub struct PicardOpts {
    /// Propagator substeps per sampling interval.
    pub substeps: usize,
    /// Stop when the iteration distance falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub dealias: bool,
}

impl Default for PicardOpts {
    fn default() -> Self {
        PicardOpts {
            substeps: 4,
            tol: 1e-10,
            max_iter: 30,
            dealias: true,
        }
    }
}

/// Convergence report of the fixed-point iteration.
#[derive(Clone, Debug)]
pub struct PicardReport {
    pub iterates: usize,
    /// `d(Φ^{n+1}, Φ^n)` per iterate.
    pub d_distances: Vec<f64>,
    /// Successive distance ratios; reported only when the previous distance
    /// exceeds 1e-14.
    pub contraction_factors: Vec<f64>,
    /// Per-iterate surrogate of the order-parameter radius: max `H²` norm
    /// over samples plus the max finite-difference `L²` time derivative.
    pub radii_u: Vec<f64>,
    /// Per-iterate surrogate of the wave radius: max over samples of
    /// `‖A‖_{H^{4/3}} + ‖∂tA‖_{H^{1/3}}`.
    pub radii_a: Vec<f64>,
    pub converged: bool,
    /// Set when the contraction factors stayed at or above 1 persistently.
    pub diverged: bool,
}

/// Metric of the contraction argument, discretized:
/// `d = max_i ‖u₁-u₂‖_{L²}(t_i) + ‖A₁-A₂‖_{L⁴_T L⁴}`.
pub fn fixed_point_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.samples.len() != b.samples.len() {
        return Err(MsError::Sampling(format!(
            "trajectories have {} and {} samples",
            a.samples.len(),
            b.samples.len()
        )));
    }
    let mut du_max = 0.0f64;
    let mut diff_series: Vec<(f64, VectorField)> = Vec::with_capacity(a.samples.len());
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        if (sa.t - sb.t).abs() > 1e-12 * (1.0 + sa.t.abs()) {
            return Err(MsError::Sampling("sample times differ".into()));
        }
        let du = sa
            .u
            .add_scaled(Complex64::new(-1.0, 0.0), &sb.u)?
            .l2_norm();
        du_max = du_max.max(du);
        diff_series.push((sa.t, sa.a.add_scaled(-1.0, &sb.a)?));
    }
    let spec = MixedNormSpec::new(4.0, 0.0, 4.0)?;
    let refs: Vec<(f64, &VectorField)> = diff_series.iter().map(|(t, f)| (*t, f)).collect();
    let a_part = diagnostics::mixed_norm_vec(&refs, &spec)?;
    Ok(du_max + a_part)
}

fn check_uniform(traj: &Trajectory) -> Result<f64> {
    if traj.samples.len() < 2 {
        return Err(MsError::Sampling(
            "candidate needs at least two samples".into(),
        ));
    }
    let h = traj.samples[1].t - traj.samples[0].t;
    for w in traj.samples.windows(2) {
        let dt = w[1].t - w[0].t;
        if (dt - h).abs() > 1e-10 * h.max(1e-300) || !(dt > 0.0) {
            return Err(MsError::Sampling(
                "candidate sampling must be uniform and increasing".into(),
            ));
        }
    }
    Ok(h)
}

/// Applies the Duhamel solution map to a uniformly sampled candidate
/// trajectory, for the given initial data. Produces `(v, B, ∂tB)` at the
/// same sample times.
pub fn picard_map(
    candidate: &Trajectory,
    data: &State,
    p: &PhysParams,
    opts: &PicardOpts,
) -> Result<Trajectory> {
    let h = check_uniform(candidate)?;
    let grid = data.grid();
    crate::grid::same_grid(grid, candidate.samples[0].grid())?;
    let m = candidate.samples.len() - 1;
    let half_i = Complex64::new(0.0, -0.5 * h); // -i h/2

    // nonlinearity and wave source at the candidate's sample times
    let mut nl: Vec<ScalarField> = Vec::with_capacity(m + 1);
    let mut src: Vec<VectorField> = Vec::with_capacity(m + 1);
    for s in &candidate.samples {
        let phi = physics::solve_phi(&s.u);
        let pw = physics::nonlinearity(&s.u, p.gamma)?;
        let mut values = pw.into_values();
        for (v, (uv, ph)) in values
            .iter_mut()
            .zip(s.u.values().iter().zip(phi.values()))
        {
            *v += ph.re * uv;
        }
        let mut n = ScalarField::from_values(grid, values);
        if opts.dealias {
            n = crate::spectral::dealias(&n);
        }
        nl.push(n);

        let pj = physics::current_j(&s.u, &s.a, true, opts.dealias)?;
        src.push(pj.add_scaled(1.0, &s.a)?);
    }

    let mut samples = Vec::with_capacity(m + 1);
    samples.push(State::new_unchecked(
        candidate.samples[0].t,
        data.u.clone(),
        data.a.clone(),
        data.at.clone(),
    ));

    let mut v = data.u.clone();
    let mut b = data.a.clone();
    let mut bt = data.at.clone();
    for i in 1..=m {
        let t_prev = candidate.samples[i - 1].t;
        let t_cur = candidate.samples[i].t;

        // order parameter: propagate v together with the left trapezoid node
        let a_prev = candidate.samples[i - 1].a.clone();
        let a_cur = candidate.samples[i].a.clone();
        let a_of_t = |t: f64| -> VectorField {
            let w = ((t - t_prev) / h).clamp(0.0, 1.0);
            let mut f = a_prev.scale(1.0 - w).add_scaled(w, &a_cur).expect("grids match");
            f.solenoidal = a_prev.solenoidal && a_cur.solenoidal;
            f
        };
        let carried = v.add_scaled(half_i, &nl[i - 1])?;
        let propagated =
            magnetic_propagator_with(&carried, &a_of_t, t_prev, t_cur, opts.substeps, opts.dealias)?;
        v = propagated.add_scaled(half_i, &nl[i])?;

        // wave part: mass-1 flow with trapezoidal source kicks on ∂tB
        let kicked = bt.add_scaled(0.5 * h, &src[i - 1])?;
        let (nb, nbt) = free_kg_step(&b, &kicked, h, 1.0)?;
        b = nb;
        bt = nbt.add_scaled(0.5 * h, &src[i])?;

        samples.push(State::new_unchecked(t_cur, v.clone(), b.clone(), bt.clone()));
    }

    Ok(Trajectory {
        samples,
        records: Vec::new(),
        meta: TrajMeta {
            integrator: "picard",
            dt: h,
            params: *p,
        },
        blow_up: None,
    })
}

/// Constant-in-time extension of the data over `samples + 1` uniform nodes.
pub fn constant_candidate(data: &State, t_end: f64, samples: usize, p: &PhysParams) -> Trajectory {
    let h = t_end / samples as f64;
    let states = (0..=samples)
        .map(|i| {
            State::new_unchecked(
                i as f64 * h,
                data.u.clone(),
                data.a.clone(),
                data.at.clone(),
            )
        })
        .collect();
    Trajectory {
        samples: states,
        records: Vec::new(),
        meta: TrajMeta {
            integrator: "picard",
            dt: h,
            params: *p,
        },
        blow_up: None,
    }
}

/// Iterates the solution map from the constant-in-time extension of the
/// data until the fixed-point distance drops below `tol` (or `max_iter`).
/// Divergence (persistent contraction factors at or above 1) is reported,
/// not silently accepted.
pub fn picard_solve(
    data: &State,
    p: &PhysParams,
    t_end: f64,
    samples: usize,
    opts: &PicardOpts,
) -> Result<(Trajectory, PicardReport)> {
    if samples < 1 {
        return Err(MsError::InvalidParam("need at least 1 sampling interval".into()));
    }
    if !(t_end > 0.0) {
        return Err(MsError::InvalidParam(format!(
            "picard horizon must be positive, got {t_end}"
        )));
    }
    // pin the data to the same constraint manifold the grid integrators use
    let mut data = State::new_unchecked(data.t, data.u.clone(), data.a.clone(), data.at.clone());
    crate::integrators::enforce_constraints(&mut data, opts.dealias);
    let data = &data;
    let mut current = constant_candidate(data, t_end, samples, p);
    let mut report = PicardReport {
        iterates: 0,
        d_distances: Vec::new(),
        contraction_factors: Vec::new(),
        radii_u: Vec::new(),
        radii_a: Vec::new(),
        converged: false,
        diverged: false,
    };

    for _ in 0..opts.max_iter {
        let next = picard_map(&current, data, p, opts)?;
        let d = fixed_point_distance(&next, &current)?;
        report.iterates += 1;
        if let Some(&prev) = report.d_distances.last() {
            if prev > 1e-14 {
                report.contraction_factors.push(d / prev);
            }
        }
        report.d_distances.push(d);
        let (ru, ra) = radii(&next);
        report.radii_u.push(ru);
        report.radii_a.push(ra);
        current = next;
        if !d.is_finite() {
            // iterates left the finite regime; no contraction on this horizon
            report.diverged = true;
            break;
        }
        if d < opts.tol {
            report.converged = true;
            break;
        }
    }
    let recent = report.contraction_factors.iter().rev().take(3);
    let growing = recent.clone().count() == 3 && recent.clone().all(|&f| f >= 1.0);
    if !report.converged && growing {
        report.diverged = true;
    }
    Ok((current, report))
}

/// Monitored radius surrogates of the contraction space: the `L^∞_T H²` and
/// finite-difference `W^{1,∞}_T L²` norms for `u`, and
/// `L^∞_T (H^{4/3} × H^{1/3})` for the wave pair.
fn radii(traj: &Trajectory) -> (f64, f64) {
    let mut h2 = 0.0f64;
    let mut w1 = 0.0f64;
    let mut wave = 0.0f64;
    for s in &traj.samples {
        h2 = h2.max(diagnostics::sobolev_norm(&s.u, 2.0));
        wave = wave.max(
            diagnostics::sobolev_norm_vec(&s.a, 4.0 / 3.0)
                + diagnostics::sobolev_norm_vec(&s.at, 1.0 / 3.0),
        );
    }
    for w in traj.samples.windows(2) {
        let h = w[1].t - w[0].t;
        if h > 0.0 {
            let du = w[1]
                .u
                .add_scaled(Complex64::new(-1.0, 0.0), &w[0].u)
                .expect("grids match")
                .l2_norm();
            w1 = w1.max(du / h);
        }
    }
    (h2 + w1, wave)
}
