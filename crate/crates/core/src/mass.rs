//! Mass functional of asymptotically hyperbolic metrics, ADM energy-momentum
//! of asymptotically flat data, and the Lorentz algebra on R^{1,n}.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Metric, PerturbedMetric};
use crate::grid::{sphere_area, SphereQuadrature};
use crate::initial_data::InitialData;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyMomentumVector {
    pub components: Vec<f64>,
    /// Last extrapolation correction plus a step-doubling estimate of the
    /// finite-difference error.
    pub error_estimate: f64,
}

impl EnergyMomentumVector {
    pub fn new(components: Vec<f64>) -> Self {
        EnergyMomentumVector { components, error_estimate: 0.0 }
    }

    pub fn minkowski_norm(&self) -> f64 {
        let c = &self.components;
        c[0] * c[0] - c[1..].iter().map(|x| x * x).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalLabel {
    FutureTimelike,
    FutureNull,
    PastTimelike,
    PastNull,
    Spacelike,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CausalClass {
    pub label: CausalLabel,
    pub minkowski_norm: f64,
}

impl CausalClass {
    pub fn is_future_causal_or_zero(&self) -> bool {
        matches!(self.label, CausalLabel::FutureTimelike | CausalLabel::FutureNull | CausalLabel::Zero)
    }
}

/// A static potential with its g_H-gradient split into the radial frame
/// component and the tangential part (a vector in R^n tangent to the sphere).
#[derive(Debug, Clone, PartialEq)]
pub struct StaticPotential {
    pub value: f64,
    pub radial: f64,
    pub tangential: Vec<f64>,
}

/// V_(0) = cosh r, V_(i) = x^i sinh r (β = i in 1..=n) at r·direction.
pub fn static_potential(beta: usize, direction: &[f64], r: f64) -> Result<StaticPotential> {
    let n = direction.len();
    if beta > n {
        return Err(Error::IndexOutOfRange { index: beta, max: n });
    }
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter { name: "direction", detail: format!("|x| = {norm}, need 1") });
    }
    if beta == 0 {
        return Ok(StaticPotential { value: r.cosh(), radial: r.sinh(), tangential: vec![0.0; n] });
    }
    let xi = direction[beta - 1];
    // sinh r times the round gradient of x^i, scaled by 1/sinh r for the frame.
    let tangential = (0..n)
        .map(|k| if k == beta - 1 { 1.0 } else { 0.0 } - xi * direction[k])
        .collect();
    Ok(StaticPotential { value: xi * r.sinh(), radial: xi * r.cosh(), tangential })
}

/// (n-1) [V coth r (p - q) - V q' + q ∂_r V] per unit sphere area, for the
/// radial profile part of V (cosh r or sinh r).
fn flux_density(n: usize, r: f64, p: f64, q: f64, dq: f64, v: f64, dv: f64) -> f64 {
    (n as f64 - 1.0) * (v / r.tanh() * (p - q) - v * dq + q * dv)
}

/// ∫_{S_r} (V(div h - d tr h) + tr h dV - h(∇V, ·))(ν) dA for V = V_(β) at the node r.
pub fn mass_integrand_at_radius(metric: &PerturbedMetric, beta: usize, r: f64) -> Result<f64> {
    flux(metric, beta, r, 1)
}

/// The flux with q' taken on every `stride`-th node.
fn flux(metric: &PerturbedMetric, beta: usize, r: f64, stride: usize) -> Result<f64> {
    let n = metric.n();
    if beta > n {
        return Err(Error::IndexOutOfRange { index: beta, max: n });
    }
    let grid = metric.grid();
    let i = grid.node_index(r)?;
    let area = r.sinh().powi(n as i32 - 1);
    let (v, dv) = if beta == 0 { (r.cosh(), r.sinh()) } else { (r.sinh(), r.cosh()) };
    let (p, q) = (metric.p(), metric.q());
    let density = |j: usize| {
        let dq = grid.d1_wide_stride_at(i, stride, |k| q.at(k, j));
        flux_density(n, r, p.at(i, j), q.at(i, j), dq, v, dv)
    };
    let total = match metric.angles() {
        None if beta == 0 => sphere_area(n - 1) * density(0),
        None => 0.0,
        // Axisymmetric about axis 1: x^i integrates to zero for i ≥ 2.
        Some(_) if beta >= 2 => 0.0,
        Some(quad) => quad
            .thetas()
            .iter()
            .zip(quad.weights())
            .enumerate()
            .map(|(j, (th, w))| w * if beta == 1 { th.cos() } else { 1.0 } * density(j))
            .sum(),
    };
    Ok(total * area)
}

/// Limit at x = 0 of samples y(x), by Neville extrapolation through the
/// samples nearest zero. Returns the limit and the successive corrections
/// (last entry = correction from adding the final sample).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> (f64, Vec<f64>) {
    let m = xs.len();
    // Order so that the sample closest to x = 0 comes first.
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| xs[a].abs().partial_cmp(&xs[b].abs()).unwrap());
    let x: Vec<f64> = idx.iter().map(|&k| xs[k]).collect();
    let mut t: Vec<f64> = idx.iter().map(|&k| ys[k]).collect();
    let mut estimates = vec![t[0]];
    // t[j] after stage s holds the interpolant through points j..=j+s.
    for s in 1..m {
        for j in 0..m - s {
            t[j] = (x[j + s] * t[j] - x[j] * t[j + 1]) / (x[j + s] - x[j]);
        }
        estimates.push(t[0]);
    }
    let corrections = estimates.windows(2).map(|w| w[1] - w[0]).collect();
    (estimates[m - 1], corrections)
}

fn limit_with_check(xs: &[f64], ys: &[f64], label: &str) -> Result<(f64, f64)> {
    let (v, corr) = extrapolate_to_zero(xs, ys);
    let scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let floor = 1e-11 * scale + 1e-13;
    let last = corr.last().map_or(0.0, |c| c.abs());
    if !v.is_finite() {
        return Err(Error::NonConvergent { detail: format!("{label}: non-finite limit") });
    }
    if corr.len() >= 2 {
        let prev = corr[corr.len() - 2].abs();
        if last > floor && last > 2.0 * prev {
            return Err(Error::NonConvergent {
                detail: format!("{label}: corrections grow ({prev:e} -> {last:e})"),
            });
        }
    }
    Ok((v, last))
}

/// Decay rate κ of the flux remainder, extrapolation in x = e^{-κr}.
pub const DEFAULT_FLUX_RATE: f64 = 2.0;

/// (m₀, …, m_n) from flux values at `radii`, extrapolated to infinity.
pub fn energy_momentum(metric: &PerturbedMetric, radii: &[f64]) -> Result<EnergyMomentumVector> {
    energy_momentum_with_rate(metric, radii, DEFAULT_FLUX_RATE)
}

pub fn energy_momentum_with_rate(metric: &PerturbedMetric, radii: &[f64], rate: f64) -> Result<EnergyMomentumVector> {
    if radii.len() < 3 {
        return Err(Error::InsufficientRadii { need: 3, got: radii.len() });
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter { name: "radii", detail: "must be strictly increasing".into() });
    }
    if metric.grid().len() < 9 {
        return Err(Error::TooCoarse { count: metric.grid().len(), min: 9 });
    }
    let xs: Vec<f64> = radii.iter().map(|r| (-rate * r).exp()).collect();
    let mut components = Vec::with_capacity(metric.n() + 1);
    let mut err = 0.0f64;
    for beta in 0..=metric.n() {
        let ys = radii
            .iter()
            .map(|&r| mass_integrand_at_radius(metric, beta, r))
            .collect::<Result<Vec<_>>>()?;
        let (v, e) = limit_with_check(&xs, &ys, &format!("m_{beta}"))?;
        // Step doubling: the fourth-order derivative error at h is about
        // 1/15 of the change when the stencil spacing doubles.
        let coarse = radii.iter().map(|&r| flux(metric, beta, r, 2)).collect::<Result<Vec<_>>>()?;
        let (v2, _) = extrapolate_to_zero(&xs, &coarse);
        components.push(v);
        err = err.max(e + (v - v2).abs() / 15.0);
    }
    Ok(EnergyMomentumVector { components, error_estimate: err })
}

/// ADM energy and momentum of asymptotically flat data on a warped metric
/// whose coordinate r is Euclidean at infinity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmEnergyMomentum {
    pub energy: f64,
    pub momentum: Vec<f64>,
    pub error_estimate: f64,
}

/// E = (1/(2(n-1)|S|)) ∮ (∂_j g_ij - ∂_i g_jj) ν^i and P_i = (1/((n-1)|S|)) ∮ π_ij ν^j,
/// both extrapolated in r^{-(n-2)}.
pub fn adm_energy_momentum(data: &InitialData, radii: &[f64]) -> Result<AdmEnergyMomentum> {
    let Metric::Warped(w) = data.metric() else {
        return Err(Error::Unsupported { detail: "ADM flux needs a closed-form asymptotically flat metric".into() });
    };
    if radii.len() < 3 {
        return Err(Error::InsufficientRadii { need: 3, got: radii.len() });
    }
    let n = w.n();
    let nf = n as f64;
    let mut xs = Vec::with_capacity(radii.len());
    let mut es = Vec::with_capacity(radii.len());
    let mut ps = Vec::with_capacity(radii.len());
    let quad = SphereQuadrature::new(n, 8)?;
    for &r in radii {
        let i = data.grid().node_index(r)?;
        let j = w.profile().eval(n, r);
        // g_ij = ψ δ_ij + χ x̂_i x̂_j with ψ = B/r², χ = A - ψ.
        let psi = j.b.value() / (r * r);
        let dpsi = j.b.d1() / (r * r) - 2.0 * j.b.value() / (r * r * r);
        let chi = j.a.value() - psi;
        es.push(0.5 * r.powi(n as i32 - 1) * (chi / r - dpsi));
        let pi_rr = data.k_rr()[i] - data.trace_k(i);
        let flux = pi_rr * j.a.value() * r.powi(n as i32 - 1) / ((nf - 1.0) * sphere_area(n - 1));
        ps.push((0..n).map(|axis| flux * quad.moment1(axis)).collect::<Vec<_>>());
        xs.push(r.powf(-(nf - 2.0)));
    }
    let (energy, e_err) = limit_with_check(&xs, &es, "E")?;
    let mut momentum = Vec::with_capacity(n);
    let mut err = e_err;
    for axis in 0..n {
        let col: Vec<f64> = ps.iter().map(|p| p[axis]).collect();
        let (v, e) = limit_with_check(&xs, &col, "P")?;
        momentum.push(v);
        err = err.max(e);
    }
    Ok(AdmEnergyMomentum { energy, momentum, error_estimate: err })
}

/// Default relative width of the null band in [`causal_class`].
pub const DEFAULT_CAUSAL_TOL: f64 = 1e-6;

/// Classify v. Components all within `tol` give zero; |m₀² - |m⃗|²| within
/// tol·(m₀² + |m⃗|²) counts as null.
pub fn causal_class(v: &EnergyMomentumVector, tol: f64) -> CausalClass {
    let c = &v.components;
    let norm = v.minkowski_norm();
    let label = if c.iter().all(|x| x.abs() <= tol) {
        CausalLabel::Zero
    } else {
        let scale: f64 = c.iter().map(|x| x * x).sum();
        let future = c[0] > 0.0;
        if norm.abs() <= tol * scale {
            if future { CausalLabel::FutureNull } else { CausalLabel::PastNull }
        } else if norm < 0.0 {
            CausalLabel::Spacelike
        } else if future {
            CausalLabel::FutureTimelike
        } else {
            CausalLabel::PastTimelike
        }
    };
    CausalClass { label, minkowski_norm: norm }
}

/// A spatial rotation followed by a boost along axis 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorentzTransform {
    /// Orthogonal n×n matrix, row-major.
    pub rotation: Vec<Vec<f64>>,
    pub rapidity: f64,
}

impl LorentzTransform {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let spatial: Vec<f64> = self
            .rotation
            .iter()
            .map(|row| row.iter().zip(&v[1..]).map(|(a, b)| a * b).sum())
            .collect();
        let (ch, sh) = (self.rapidity.cosh(), self.rapidity.sinh());
        let mut out = Vec::with_capacity(v.len());
        out.push(ch * v[0] - sh * spatial[0]);
        out.push(-sh * v[0] + ch * spatial[0]);
        out.extend_from_slice(&spatial[1..]);
        out
    }
}

/// Rotation R with R x = |x| e₁, det R = 1 (Householder reflection composed
/// with a sign flip of the last axis).
fn align_rotation(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let identity = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    if norm == 0.0 {
        return (0..n).map(|i| (0..n).map(|j| identity(i, j)).collect()).collect();
    }
    // Reflect along u = x + sign(x₁)|x| e₁, then map -sign(x₁)|x| e₁ to |x| e₁.
    let s = if x[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut u = x.to_vec();
    u[0] += s * norm;
    let uu: f64 = u.iter().map(|a| a * a).sum();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| identity(i, j) - 2.0 * u[i] * u[j] / uu).collect())
        .collect();
    // The reflection sends x to -s|x| e₁; flip row 0 (and the last row, for det +1).
    let flip_first = -s;
    m[0].iter_mut().for_each(|a| *a *= flip_first);
    let det_sign = -flip_first; // reflection has det -1
    if det_sign < 0.0 && n > 1 {
        m[n - 1].iter_mut().for_each(|a| *a = -*a);
    }
    m
}

/// Bring v to (m₀, |m⃗|, 0, …) by a rotation; past-timelike v is further
/// boosted to (-√(m₀² - |m⃗|²), 0, …).
pub fn lorentz_normal_form(v: &EnergyMomentumVector) -> Result<(EnergyMomentumVector, LorentzTransform)> {
    let c = &v.components;
    if c.iter().all(|x| *x == 0.0) {
        return Err(Error::ZeroVector);
    }
    let n = c.len() - 1;
    let rotation = align_rotation(&c[1..]);
    let spatial = c[1..].iter().fold(0.0f64, |acc, x| acc.hypot(*x));
    let mut out = vec![0.0; n + 1];
    out[0] = c[0];
    out[1] = spatial;
    let mut rapidity = 0.0;
    if c[0] < 0.0 && spatial < -c[0] {
        rapidity = (spatial / c[0]).atanh();
        out[0] = -((-c[0] - spatial) * (-c[0] + spatial)).sqrt();
        out[1] = 0.0;
    }
    Ok((
        EnergyMomentumVector { components: out, error_estimate: v.error_estimate },
        LorentzTransform { rotation, rapidity },
    ))
}

/// (2/sin γ)(m₀ - cos γ · m₁, 0, …, 0) in R^{1,n}.
pub fn boost_mass(m0: f64, m1: f64, gamma: f64, n: usize) -> Result<EnergyMomentumVector> {
    let s = gamma.sin();
    if !(gamma > 0.0 && gamma < std::f64::consts::PI) || s.abs() < 1e-300 {
        return Err(Error::DegenerateAngle { gamma });
    }
    let mut c = vec![0.0; n + 1];
    // sin(π/2 - γ) is exactly 0 at γ = π/2, unlike cos γ.
    let cos = (std::f64::consts::FRAC_PI_2 - gamma).sin();
    c[0] = 2.0 / s * (m0 - cos * m1);
    Ok(EnergyMomentumVector::new(c))
}
