//! Gluing to the hyperbolic background and conformal correction of the
//! scalar curvature back to R ≥ -n(n-1), plus the ACG model extension.
//!
//! The conformal equation is solved for v = u - 1 so that the tiny
//! corrections produced by distant gluing keep their relative precision.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    conformal_coefficient, cutoff, curvature_excess, Metric, PerturbedMetric, Profile, RadialGeometry, WarpedMetric,
};
use crate::grid::{GridField, Rank};
use crate::jet::Jet;
use crate::mass::energy_momentum;

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffProfile {
    pub lambda: f64,
    pub chi: GridField,
}

impl CutoffProfile {
    pub fn new(grid: Arc<crate::grid::RadialGrid>, lambda: f64) -> Result<Self> {
        grid.check_inside(lambda)?;
        grid.check_inside(lambda + 1.0)?;
        let chi = GridField::from_fn(grid, Rank::Scalar, |r| cutoff(lambda, Jet::constant(r)).value());
        Ok(CutoffProfile { lambda, chi })
    }
}

/// χ_λ h: equals g for r ≤ λ and g_H for r ≥ λ + 1.
pub fn glue_with_background(g: &PerturbedMetric, lambda: f64) -> Result<PerturbedMetric> {
    if !g.is_radial() {
        return Err(Error::Unsupported { detail: "gluing angle-dependent h".into() });
    }
    let chi = CutoffProfile::new(g.grid().clone(), lambda)?.chi;
    let p = g.p().zip_with(&chi, |h, c| c * h)?;
    let q = g.q().zip_with(&chi, |h, c| c * h)?;
    PerturbedMetric::from_fields(g.n(), p, q, None, g.delta())
}

/// Glued metric g_λ, in closed form for warped input.
pub fn glue_metric(g: &Metric, lambda: f64) -> Result<Metric> {
    match g {
        Metric::Warped(w) => {
            CutoffProfile::new(w.grid().clone(), lambda)?;
            let profile = Profile::Glued { inner: Box::new(w.profile().clone()), lambda };
            Ok(WarpedMetric::new(w.n(), w.grid().clone(), profile)?.into())
        }
        Metric::Perturbed(p) => Ok(glue_with_background(p, lambda)?.into()),
    }
}

/// Excess values this far below zero are rounding noise of an Einstein metric.
pub const SOURCE_ROUNDOFF: f64 = 1e-12;

/// χ_λ (R_g + n(n-1)), the source term of the conformal equation. Rounding
/// negatives are kept so that the forcing cancels exactly where χ_λ = 1.
pub fn gluing_source(g: &Metric, lambda: f64) -> Result<GridField> {
    let chi = CutoffProfile::new(g.grid().clone(), lambda)?.chi;
    curvature_excess(g)?.zip_with(&chi, |e, c| c * e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Absolute bound on the final sup-norm update.
    pub tol: f64,
    /// Bound on the final update relative to |v|, node by node.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, rel_tol: 1e-12, max_iter: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalSolution {
    /// v = u - 1.
    pub v: GridField,
    pub tau: f64,
    pub lambda: f64,
    /// sup over nodes of the discrete residual of the equation.
    pub residual: f64,
    pub iterations: usize,
    /// sup |v_{k+1} - v_k| per iteration.
    pub updates: Vec<f64>,
}

impl ConformalSolution {
    pub fn u(&self) -> GridField {
        self.v.map(|v| 1.0 + v)
    }
}

fn exponent(n: usize) -> f64 {
    (n as f64 + 2.0) / (n as f64 - 2.0)
}

/// n(n-1)[(1+v)^p - 1 - v]: the nonlinearity beyond its first-order part.
fn power_gap(n: usize, v: f64) -> f64 {
    let nf = n as f64;
    nf * (nf - 1.0) * ((exponent(n) * v.ln_1p()).exp_m1() - v)
}

/// Check that 1 ± τ are super- and subsolutions at every node.
pub fn check_barriers(geo: &RadialGeometry, source: &[f64], tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter { name: "tau", detail: format!("{tau} not in (0, 1)") });
    }
    for i in 0..geo.grid.len() {
        let e = geo.curvature_excess_at(i);
        // F(v) = ε(1+v) + n(n-1)[(1+v)^p - (1+v)] - source, with R = ε - n(n-1).
        let f = |v: f64| e * (1.0 + v) + power_gap(geo.n, v) - source[i];
        let (sup, sub) = (f(tau), f(-tau));
        let slack = 1e-14 * (e.abs() + source[i].abs());
        if sup < -slack || sub > slack {
            return Err(Error::BarrierViolation {
                tau,
                r: geo.grid.nodes()[i],
                detail: format!("barrier defects {sup:e} (upper), {sub:e} (lower)"),
            });
        }
    }
    Ok(())
}

/// Solve a tridiagonal system in place (Thomas algorithm).
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = diag[0];
    c[0] = upper[0] / d;
    rhs[0] /= d;
    for i in 1..n {
        d = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / d } else { 0.0 };
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / d;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Three-point stencil of -a_n Δ (without the zero-order term) at node i:
/// zero Neumann via a mirrored ghost at the inner end.
fn laplace_row(geo: &RadialGeometry, an: f64, i: usize) -> (f64, f64, f64) {
    let nodes = geo.grid.nodes();
    let (c2, c1) = geo.laplacian_coefficients(i);
    if i == 0 {
        let h = nodes[1] - nodes[0];
        let w = an * c2 * 2.0 / (h * h);
        return (0.0, w, -w);
    }
    let (w1, w2) = geo.grid.interior_weights(i);
    (
        -an * (c2 * w2[0] + c1 * w1[0]),
        -an * (c2 * w2[1] + c1 * w1[1]),
        -an * (c2 * w2[2] + c1 * w1[2]),
    )
}

/// Monotone iteration from u⁺ = 1 + τ for
/// -a_n Δ u + R u = -n(n-1) u^{(n+2)/(n-2)} + source,
/// zero Neumann at r0, u = 1 at r_max.
pub fn solve_conformal(g_lambda: &Metric, source: &GridField, tau: f64, lambda: f64) -> Result<ConformalSolution> {
    solve_conformal_with(g_lambda, source, tau, lambda, SolverOptions::default())
}

pub fn solve_conformal_with(
    g_lambda: &Metric,
    source: &GridField,
    tau: f64,
    lambda: f64,
    opts: SolverOptions,
) -> Result<ConformalSolution> {
    let geo = g_lambda.geometry()?;
    let n = geo.n;
    let nf = n as f64;
    let len = geo.grid.len();
    if source.values().len() != len {
        return Err(Error::InvalidParameter { name: "source", detail: "length differs from grid".into() });
    }
    if let Some(s) = source.values().iter().find(|s| !(**s >= -SOURCE_ROUNDOFF)) {
        return Err(Error::InvalidParameter { name: "source", detail: format!("must be nonnegative, found {s}") });
    }
    check_barriers(&geo, source.values(), tau)?;
    let excess: Vec<f64> = (0..len).map(|i| geo.curvature_excess_at(i)).collect();
    // Forcing of the v-equation: -a_n Δv + R v + n(n-1)[(1+v)^p - 1] = source - ε.
    let forcing: Vec<f64> = (0..len).map(|i| source.values()[i] - excess[i]).collect();
    let grid = geo.grid.clone();
    if forcing.iter().all(|f| *f == 0.0) {
        return Ok(ConformalSolution {
            v: GridField::zeros(grid, Rank::Scalar),
            tau,
            lambda,
            residual: 0.0,
            iterations: 0,
            updates: vec![],
        });
    }
    let an = conformal_coefficient(n);
    let p = exponent(n);
    let shift = nf * (nf - 1.0) * p * (1.0 + tau).powf(p - 1.0);
    let mut lower = vec![0.0; len];
    let mut diag = vec![0.0; len];
    let mut upper = vec![0.0; len];
    for i in 0..len - 1 {
        let (l, d, u) = laplace_row(&geo, an, i);
        lower[i] = l;
        diag[i] = d + excess[i] - nf * (nf - 1.0) + shift;
        upper[i] = u;
    }
    diag[len - 1] = 1.0;
    // n(n-1)[(1+v)^p - 1] = n(n-1)v + power_gap.
    let nonlinear = |v: f64| nf * (nf - 1.0) * v + power_gap(n, v);
    let mut v = vec![tau; len];
    v[len - 1] = 0.0;
    let mut updates = Vec::new();
    for iter in 1..=opts.max_iter {
        let mut next: Vec<f64> = (0..len).map(|i| shift * v[i] - nonlinear(v[i]) + forcing[i]).collect();
        next[len - 1] = 0.0;
        thomas(&lower, &diag, &upper, &mut next);
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(i) = (0..len).find(|&i| next[i] > v[i] + 1e-12 * scale) {
            return Err(Error::NonConvergent {
                detail: format!("iterate increased at r = {} ({:e} > {:e})", grid.nodes()[i], next[i], v[i]),
            });
        }
        let update = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // Pointwise relative change: the tail of v is many orders below its peak.
        let relative = next
            .iter()
            .zip(&v)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(f64::MIN_POSITIVE) })
            .fold(0.0, f64::max);
        v = next;
        updates.push(update);
        if update == 0.0 || (update < opts.tol && relative <= opts.rel_tol) {
            if let Some(i) = (0..len).find(|&i| v[i].abs() > tau) {
                return Err(Error::BarrierViolation {
                    tau,
                    r: grid.nodes()[i],
                    detail: format!("solution left the barriers: v = {:e}", v[i]),
                });
            }
            let residual = (0..len - 1)
                .map(|i| {
                    let (l, d, u) = laplace_row(&geo, an, i);
                    let left = if i > 0 { l * v[i - 1] } else { 0.0 };
                    let lap = left + d * v[i] + u * v[i + 1];
                    (lap + (excess[i] - nf * (nf - 1.0)) * v[i] + nonlinear(v[i]) - forcing[i]).abs()
                })
                .fold(0.0, f64::max);
            return Ok(ConformalSolution {
                v: GridField::new(grid, v, Rank::Scalar)?,
                tau,
                lambda,
                residual,
                iterations: iter,
                updates,
            });
        }
    }
    Err(Error::NonConvergent { detail: format!("no convergence in {} iterations", opts.max_iter) })
}

/// g̃ = u^{4/(n-2)} g_λ tabulated as a perturbation of g_H.
pub fn conformal_metric(g_lambda: &Metric, sol: &ConformalSolution) -> Result<PerturbedMetric> {
    let geo = g_lambda.geometry()?;
    let nf = geo.n as f64;
    let wm1: Vec<f64> = sol.v.values().iter().map(|v| (4.0 / (nf - 2.0) * v.ln_1p()).exp_m1()).collect();
    let p = (0..wm1.len()).map(|i| wm1[i] + (1.0 + wm1[i]) * geo.p[i]).collect();
    let q = (0..wm1.len()).map(|i| wm1[i] + (1.0 + wm1[i]) * geo.q[i]).collect();
    let delta = match g_lambda {
        Metric::Perturbed(m) => m.delta(),
        Metric::Warped(_) => nf,
    };
    PerturbedMetric::radial(geo.n, geo.grid.clone(), p, q, delta)
}

/// Width of the end layers left out of the identity residual, so that it is
/// measured on a fixed set of radii under refinement.
pub const BOUNDARY_LAYER: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeformationReport {
    /// sup |R(g̃) + n(n-1) - u^{-(n+2)/(n-2)} source| on [r0 + 0.1, r_max - 0.1],
    /// R(g̃) by finite differences of g̃.
    pub identity_residual: f64,
    /// sup |R(g̃) + n(n-1)| over nodes with χ_λ = 0, by the conformal law.
    pub tail_curvature_error: f64,
    /// Fitted exponent k in v ~ e^{-k r} on the hyperbolic tail; None if v vanishes there.
    pub decay_exponent: Option<f64>,
    /// sup over nodes of the smallest ε with (1-ε)g ≤ g̃ ≤ (1+ε)g.
    pub bilinear_distance: f64,
    pub mass_original: Vec<f64>,
    pub mass_deformed: Vec<f64>,
    pub mass_error_estimate: f64,
    /// |m̃ - m| (Euclidean norm over components).
    pub mass_drift: f64,
    /// m̃₀ - m₀ from the Hawking-mass transport identity; None unless the
    /// original metric has R = -n(n-1) wherever χ_λ < 1.
    pub quasilocal_mass_shift: Option<f64>,
}

/// m_H = (ρ^{n-2}/2)(1 + ρ² - |∇ρ|²) with ρ = √B satisfies
/// dm_H/dr = ρ' ρ^{n-1} (R + n(n-1)) / (2(n-1)) on warped metrics, so the
/// change of mass under g → g̃ is the change of m_H at r0 plus the integral
/// of the change in the curvature term. Everything is formed from v, so the
/// result keeps relative precision when the shift is far below the mass.
fn quasilocal_mass_shift(
    sol: &ConformalSolution,
    glued: &RadialGeometry,
    orig: &RadialGeometry,
    chi: &[f64],
) -> Result<Option<f64>> {
    let n = orig.n;
    let nf = n as f64;
    let len = orig.grid.len();
    let excess: Vec<f64> = (0..len).map(|i| orig.curvature_excess_at(i)).collect();
    if (0..len).any(|i| ((1.0 - chi[i]) * excess[i]).abs() > SOURCE_ROUNDOFF) {
        return Ok(None);
    }
    let v = sol.v.values();
    let grid = &orig.grid;
    let dv: Vec<f64> = (0..len).map(|i| grid.d1_at(i, |k| v[k])).collect();
    let ew = 2.0 / (nf - 2.0);
    // ρ̃ = u^{2/(n-2)} ρ_λ.
    let integrand: Vec<f64> = (0..len)
        .map(|i| {
            if excess[i] == 0.0 || chi[i] == 0.0 {
                return 0.0;
            }
            let rho = glued.b[i].sqrt();
            let drho = glued.db[i] / (2.0 * rho);
            let u = 1.0 + v[i];
            let rho_t = u.powf(ew) * rho;
            let drho_t = u.powf(ew) * (drho + ew * rho * dv[i] / u);
            let rho0 = orig.b[i].sqrt();
            let drho0 = orig.db[i] / (2.0 * rho0);
            let p = exponent(n);
            (drho_t * rho_t.powi(n as i32 - 1) * u.powf(-p) * chi[i] - drho0 * rho0.powi(n as i32 - 1))
                * excess[i]
                / (2.0 * (nf - 1.0))
        })
        .collect();
    // An Einstein original contributes only rounding noise here.
    let einstein = excess.iter().all(|e| e.abs() <= SOURCE_ROUNDOFF);
    let bulk = if einstein { 0.0 } else { grid.integrate_between(&integrand, grid.r0(), grid.r_max())? };
    // Boundary term at r0, where g_λ = g.
    let rho = orig.b[0].sqrt();
    let drho = orig.db[0] / (2.0 * rho);
    let x = drho * drho / orig.a[0];
    let (u, w_m1) = (1.0 + v[0], (2.0 * ew * v[0].ln_1p()).exp_m1());
    let delta = rho * ew * dv[0] / u;
    let dx = (2.0 * drho * delta + delta * delta) / orig.a[0];
    let u2_m1 = v[0] * (2.0 + v[0]);
    let boundary = 0.5
        * rho.powi(n as i32 - 2)
        * (u2_m1 * (1.0 + rho * rho - x) + u * u * (w_m1 * rho * rho - dx));
    let shift = boundary + bulk;
    Ok(Some(2.0 * (nf - 1.0) * crate::grid::sphere_area(n - 1) * shift))
}

/// Nodes beyond the gluing annulus used for the decay fit: [λ + 1.5, r_max - 3].
pub fn tail_window(lambda: f64, r_max: f64) -> (f64, f64) {
    (lambda + 1.5, r_max - 3.0)
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn verify_deformation(
    sol: &ConformalSolution,
    g_lambda: &Metric,
    source: &GridField,
    g_original: &Metric,
    mass_radii: &[f64],
) -> Result<DeformationReport> {
    let geo = g_lambda.geometry()?;
    let orig = g_original.geometry()?;
    let n = geo.n;
    let nf = n as f64;
    let p = exponent(n);
    let grid = geo.grid.clone();
    let nodes = grid.nodes();
    let len = grid.len();
    let v = sol.v.values();
    let tilde = conformal_metric(g_lambda, sol)?;
    let tilde_geo = tilde.geometry()?;
    let identity_residual = (0..len)
        .filter(|&i| nodes[i] >= grid.r0() + BOUNDARY_LAYER && nodes[i] <= grid.r_max() - BOUNDARY_LAYER)
        .map(|i| {
            let rhs = (-p * v[i].ln_1p()).exp() * source.values()[i];
            (tilde_geo.curvature_excess_at(i) - rhs).abs()
        })
        .fold(0.0, f64::max);
    // Conformal law on the closed-form background with the solver's stencil.
    let an = conformal_coefficient(n);
    let chi = CutoffProfile::new(grid.clone(), sol.lambda)?.chi;
    let tail_curvature_error = (1..len - 1)
        .filter(|&i| chi.values()[i] == 0.0)
        .map(|i| {
            let (l, d, u) = laplace_row(&geo, an, i);
            let lap = l * v[i - 1] + d * v[i] + u * v[i + 1];
            let e = geo.curvature_excess_at(i);
            let law = (lap + e * (1.0 + v[i]) + power_gap(n, v[i])) * (-p * v[i].ln_1p()).exp();
            law.abs()
        })
        .fold(0.0, f64::max);
    let (lo, hi) = tail_window(sol.lambda, grid.r_max());
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..len)
        .filter(|&i| nodes[i] >= lo && nodes[i] <= hi && v[i] != 0.0)
        .map(|i| (nodes[i], v[i].abs().ln()))
        .unzip();
    let same_sign = {
        let tail: Vec<f64> = (0..len).filter(|&i| nodes[i] >= lo && nodes[i] <= hi).map(|i| v[i]).collect();
        tail.iter().all(|x| *x > 0.0) || tail.iter().all(|x| *x < 0.0)
    };
    let decay_exponent = (xs.len() >= 2 && same_sign).then(|| -least_squares_slope(&xs, &ys));
    let mut bilinear_distance = 0.0f64;
    for i in 0..len {
        let wm1 = (4.0 / (nf - 2.0) * v[i].ln_1p()).exp_m1();
        let ratio = |lam: f64, orig: f64| (wm1 * (1.0 + lam) + (lam - orig)) / (1.0 + orig);
        bilinear_distance = bilinear_distance
            .max(ratio(geo.p[i], orig.p[i]).abs())
            .max(ratio(geo.q[i], orig.q[i]).abs());
    }
    let original = match g_original {
        Metric::Perturbed(m) => m.clone(),
        Metric::Warped(w) => w.to_perturbed(nf)?,
    };
    let m0 = energy_momentum(&original, mass_radii)?;
    let m1 = energy_momentum(&tilde, mass_radii)?;
    let mass_drift = m0.components.iter().zip(&m1.components).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let quasilocal_mass_shift = quasilocal_mass_shift(sol, &geo, &orig, chi.values())?;
    Ok(DeformationReport {
        identity_residual,
        tail_curvature_error,
        decay_exponent,
        bilinear_distance,
        mass_error_estimate: m0.error_estimate.max(m1.error_estimate),
        mass_original: m0.components,
        mass_deformed: m1.components,
        mass_drift,
        quasilocal_mass_shift,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcgReport {
    /// min over nodes of R + n(n-1)/a.
    pub min_margin: f64,
    pub min_margin_radius: f64,
    /// sup |R + n(n-1)/a| for r ≥ 9ρ.
    pub outer_error: f64,
}

/// Areal-coordinate form of a profile, where the ACG model is written.
fn areal_form(p: &Profile) -> Option<Profile> {
    match p {
        Profile::Hyperbolic => Some(Profile::Acg { a: 1.0 }),
        Profile::SchwarzschildAds { mass } => Some(Profile::SchwarzschildAdsAreal { mass: *mass }),
        Profile::Acg { .. } | Profile::SchwarzschildAdsAreal { .. } | Profile::Euclidean => Some(p.clone()),
        _ => None,
    }
}

/// Interpolate the inner metric to (1/(1+r²/a))dr² + r² g_S over [ρ, 9ρ] and
/// check R ≥ -n(n-1)/a at every node.
pub fn acg_extension(inner: &WarpedMetric, rho: f64, a: f64) -> Result<(WarpedMetric, AcgReport)> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter { name: "a", detail: format!("{a} not in (0, 1)") });
    }
    let grid = inner.grid();
    if !(rho > 0.0) || grid.check_inside(rho).is_err() || grid.check_inside(9.0 * rho).is_err() {
        return Err(Error::InvalidParameter {
            name: "rho",
            detail: format!("grid [{}, {}] must cover [ρ, 9ρ] = [{rho}, {}]", grid.r0(), grid.r_max(), 9.0 * rho),
        });
    }
    let Some(areal) = areal_form(inner.profile()) else {
        return Err(Error::InvalidParameter { name: "inner", detail: "profile has no areal-coordinate form".into() });
    };
    let profile = Profile::AcgBlend { inner: Box::new(areal), rho, a };
    let metric = WarpedMetric::new(inner.n(), grid.clone(), profile)?;
    let geo = metric.geometry()?;
    let nf = inner.n() as f64;
    let mut report = AcgReport { min_margin: f64::INFINITY, min_margin_radius: f64::NAN, outer_error: 0.0 };
    for (i, &r) in grid.nodes().iter().enumerate() {
        let m = geo.scalar_curvature_at(i) + nf * (nf - 1.0) / a;
        if m < report.min_margin {
            report.min_margin = m;
            report.min_margin_radius = r;
        }
        if r >= 9.0 * rho {
            report.outer_error = report.outer_error.max(m.abs());
        }
    }
    Ok((metric, report))
}

/// One run of glue → solve → verify on a uniform grid [r0, λ + tail].
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct PipelineConfig {
    pub n: usize,
    pub profile: Profile,
    pub lambda: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_r0")]
    pub r0: f64,
    /// r_max - λ.
    #[serde(default = "default_tail")]
    pub tail: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Mass radii as offsets from λ.
    #[serde(default = "default_offsets")]
    pub mass_offsets: Vec<f64>,
}

fn default_tau() -> f64 {
    0.05
}
fn default_r0() -> f64 {
    1.0
}
fn default_tail() -> f64 {
    14.0
}
fn default_step() -> f64 {
    0.005
}
fn default_offsets() -> Vec<f64> {
    vec![3.0, 4.5, 6.0, 7.5]
}

impl PipelineConfig {
    pub fn new(n: usize, profile: Profile, lambda: f64) -> Self {
        PipelineConfig {
            n,
            profile,
            lambda,
            tau: default_tau(),
            r0: default_r0(),
            tail: default_tail(),
            step: default_step(),
            mass_offsets: default_offsets(),
        }
    }

    pub fn with_step(&self, step: f64) -> Self {
        PipelineConfig { step, ..self.clone() }
    }

    fn grid(&self) -> Result<Arc<crate::grid::RadialGrid>> {
        if !(self.step > 0.0) {
            return Err(Error::InvalidParameter { name: "step", detail: format!("{} must be positive", self.step) });
        }
        let r_max = self.lambda + self.tail;
        let count = ((r_max - self.r0) / self.step).round() as usize + 1;
        crate::grid::RadialGrid::new(self.r0, r_max, count, crate::grid::Spacing::UniformR).map(Arc::new)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub original: Metric,
    pub glued: Metric,
    pub source: GridField,
    pub solution: ConformalSolution,
    pub report: DeformationReport,
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun> {
    let grid = cfg.grid()?;
    let original: Metric = WarpedMetric::new(cfg.n, grid, cfg.profile.clone())?.into();
    let glued = glue_metric(&original, cfg.lambda)?;
    let source = gluing_source(&original, cfg.lambda)?;
    let solution = solve_conformal(&glued, &source, cfg.tau, cfg.lambda)?;
    let radii: Vec<f64> = cfg.mass_offsets.iter().map(|d| cfg.lambda + d).collect();
    let radii = radii
        .iter()
        .map(|&r| original.grid().nearest_index(r).map(|i| original.grid().nodes()[i]))
        .collect::<Result<Vec<_>>>()?;
    let report = verify_deformation(&solution, &glued, &source, &original, &radii)?;
    Ok(PipelineRun { original, glued, source, solution, report })
}

/// Deformed mass extrapolated to zero step from runs at h and h/2, which
/// removes the O(h²) discretization error that otherwise dominates the drift.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtrapolatedDrift {
    pub steps: [f64; 2],
    pub mass_original: Vec<f64>,
    pub mass_deformed: Vec<f64>,
    pub drift: f64,
    /// Change of the extrapolated drift from the fine-grid drift.
    pub correction: f64,
}

pub fn run_pipeline_extrapolated(cfg: &PipelineConfig) -> Result<(PipelineRun, ExtrapolatedDrift)> {
    let coarse = run_pipeline(cfg)?;
    let fine = run_pipeline(&cfg.with_step(cfg.step / 2.0))?;
    let (a, b) = (&coarse.report.mass_deformed, &fine.report.mass_deformed);
    let deformed: Vec<f64> = a.iter().zip(b).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
    let original = fine.report.mass_original.clone();
    let drift = original.iter().zip(&deformed).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let correction = (drift - fine.report.mass_drift).abs();
    let out = ExtrapolatedDrift {
        steps: [cfg.step, cfg.step / 2.0],
        mass_original: original,
        mass_deformed: deformed,
        drift,
        correction,
    };
    Ok((fine, out))
}
