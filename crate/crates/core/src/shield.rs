//! Shielding: region distances, largeness certificates, the Riccati shield
//! function h, the boundary mean-curvature threshold and the inextendibility
//! depth.
//!
//! Regions are radial super-level sets U_i = {r > r_Ui} with r_U0 < r_U1 < r_U2,
//! so U₂ is the outermost piece of the end and the core lies at small r.
//! Margins for initial data use 2(μ - |J|), which reduces to R + n(n-1) on
//! time-symmetric data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{radial_distance, Metric};
use crate::grid::{GridField, Rank};
use crate::initial_data::{energy_current, null_expansions, trace_deform, InitialData};
use crate::mass::{causal_class, energy_momentum, CausalClass, DEFAULT_CAUSAL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShieldRegions {
    pub r_u0: f64,
    pub r_u1: f64,
    pub r_u2: f64,
}

impl ShieldRegions {
    /// Equal radii are accepted and produce a zero distance downstream.
    pub fn new(r_u0: f64, r_u1: f64, r_u2: f64) -> Result<Self> {
        let s = ShieldRegions { r_u0, r_u1, r_u2 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.r_u0, self.r_u1, self.r_u2].iter().all(|r| r.is_finite() && *r > 0.0)
            && self.r_u0 <= self.r_u1
            && self.r_u1 <= self.r_u2;
        if ok {
            Ok(())
        } else {
            Err(Error::RegionNesting { r_u0: self.r_u0, r_u1: self.r_u1, r_u2: self.r_u2 })
        }
    }

    /// U̅₁ ∖ U₂.
    fn in_annulus(&self, r: f64) -> bool {
        r >= self.r_u1 && r <= self.r_u2
    }

    /// U₀ ∖ U̅₂.
    fn in_collar(&self, r: f64) -> bool {
        r > self.r_u0 && r < self.r_u2
    }
}

/// (D₀, D₁) = (dist(∂U₀, U₁), dist(U₂, ∂U₁)).
pub fn region_distances(metric: &Metric, regions: &ShieldRegions) -> Result<(f64, f64)> {
    regions.validate()?;
    Ok((
        radial_distance(metric, regions.r_u0, regions.r_u1)?,
        radial_distance(metric, regions.r_u1, regions.r_u2)?,
    ))
}

/// 4/(D₀D₁), infinite when either distance vanishes.
pub fn largeness_threshold(d0: f64, d1: f64) -> f64 {
    if d0 > 0.0 && d1 > 0.0 {
        4.0 / (d0 * d1)
    } else {
        f64::INFINITY
    }
}

fn positive_distances(d0: f64, d1: f64) -> Result<()> {
    if !(d0 > 0.0) {
        return Err(Error::ZeroDistance { which: "D0" });
    }
    if !(d1 > 0.0) {
        return Err(Error::ZeroDistance { which: "D1" });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub enum LargenessMode<'a> {
    /// Margin R + n(n-1); needs n ≥ 4.
    Hyperbolic(&'a Metric),
    /// Margin 2(μ - |J|) and tr k ≤ 0 on U₀ ∖ U̅₂; needs n ≥ 3.
    InitialData(&'a InitialData),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargenessCertificate {
    pub d0: f64,
    pub d1: f64,
    pub threshold: f64,
    pub min_margin: f64,
    pub min_margin_radius: f64,
    /// Initial-data mode only.
    pub max_trace_k: Option<f64>,
    pub pass: bool,
}

pub fn largeness_certificate(mode: LargenessMode<'_>, regions: &ShieldRegions) -> Result<LargenessCertificate> {
    let (metric, margin, trace): (&Metric, Vec<f64>, Option<Vec<f64>>) = match mode {
        LargenessMode::Hyperbolic(m) => {
            if m.n() < 4 {
                return Err(Error::Dimension { n: m.n(), min: 4 });
            }
            (m, crate::geometry::curvature_excess(m)?.values().to_vec(), None)
        }
        LargenessMode::InitialData(d) => {
            if d.n() < 3 {
                return Err(Error::Dimension { n: d.n(), min: 3 });
            }
            let cur = energy_current(d)?;
            let margin = cur.dec_margin.values().iter().map(|m| 2.0 * m).collect();
            (d.metric(), margin, Some((0..d.grid().len()).map(|i| d.trace_k(i)).collect()))
        }
    };
    let (d0, d1) = region_distances(metric, regions)?;
    positive_distances(d0, d1)?;
    let threshold = largeness_threshold(d0, d1);
    let nodes = metric.grid().nodes();
    let (mut min_margin, mut min_margin_radius) = (f64::INFINITY, f64::NAN);
    for (i, &r) in nodes.iter().enumerate() {
        if regions.in_annulus(r) && margin[i] < min_margin {
            min_margin = margin[i];
            min_margin_radius = r;
        }
    }
    if min_margin_radius.is_nan() {
        return Err(Error::InvalidParameter { name: "regions", detail: "no grid node in U1 minus U2".into() });
    }
    let max_trace_k = trace.map(|t| {
        (0..nodes.len()).filter(|&i| regions.in_collar(nodes[i])).map(|i| t[i]).fold(f64::NEG_INFINITY, f64::max)
    });
    let pass = min_margin > threshold && max_trace_k.map_or(true, |t| t <= 0.0);
    Ok(LargenessCertificate { d0, d1, threshold, min_margin, min_margin_radius, max_trace_k, pass })
}

/// n / (2(n-1)), the quadratic coefficient of the shield Riccati equation.
fn riccati_k(n: usize) -> f64 {
    n as f64 / (2.0 * (n as f64 - 1.0))
}

/// h(t) = √(c/k) tan(√(kc) t) solving h' = k h² + c, h(0) = 0.
pub fn riccati_closed_form(n: usize, c: f64, t: f64) -> f64 {
    let k = riccati_k(n);
    (c / k).sqrt() * ((k * c).sqrt() * t).tan()
}

/// Blow-up distance (π/2)/√(kc) of the closed form.
pub fn riccati_blowup(n: usize, c: f64) -> f64 {
    if c > 0.0 {
        std::f64::consts::FRAC_PI_2 / (riccati_k(n) * c).sqrt()
    } else {
        f64::INFINITY
    }
}

/// RK4 for h' = k h² + c·[t ≤ switch], h(0) = 0, sampled at increasing
/// `ts`. Samples past the first crossing of `cap` are +∞. Also returns the
/// crossing distance, if any.
pub fn integrate_riccati(n: usize, c: f64, switch: f64, ts: &[f64], cap: f64) -> (Vec<f64>, Option<f64>) {
    let k = riccati_k(n);
    let mut out = Vec::with_capacity(ts.len());
    let (mut t, mut h) = (0.0f64, 0.0f64);
    let mut crossed: Option<f64> = None;
    for &target in ts {
        while crossed.is_none() && t < target {
            // Steps never straddle the switch, so each uses one branch.
            let on = t < switch;
            let end = if on { target.min(switch) } else { target };
            let cc = if on { c } else { 0.0 };
            let rhs = |h: f64| k * h * h + cc;
            let dt = (end - t).min(1e-3).min(0.02 / (k * h + (k * c).sqrt()).max(1e-12));
            let k1 = rhs(h);
            let k2 = rhs(h + 0.5 * dt * k1);
            let k3 = rhs(h + 0.5 * dt * k2);
            let k4 = rhs(h + dt * k3);
            h += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += dt;
            if !(h.is_finite() && h <= cap) {
                crossed = Some(t);
            }
        }
        out.push(if crossed.is_some() { f64::INFINITY } else { h });
    }
    (out, crossed)
}

const DEFAULT_CAP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct ShieldFunction {
    pub h: GridField,
    /// dh/dr from the Riccati right-hand side; +∞ where h is.
    pub dh: Vec<f64>,
    pub gamma: f64,
    /// Curvature budget c = 2(1-γ)/(D₀D₁).
    pub c: f64,
    pub d0: f64,
    pub d1: f64,
    /// Closed-form blow-up distance with c held throughout.
    pub t_star: f64,
    /// Distance from ∂U₂ at which h crosses the cap.
    pub blowup_distance: f64,
    pub blowup_radius: f64,
    pub cap: f64,
    pub regions: ShieldRegions,
}

/// Distances from r0 to each node.
fn cumulative_distance(metric: &Metric) -> Result<Vec<f64>> {
    let nodes = metric.grid().nodes();
    let mut s = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    s.push(0.0);
    for w in nodes.windows(2) {
        acc += radial_distance(metric, w[0], w[1])?;
        s.push(acc);
    }
    Ok(s)
}

/// Radius at cumulative distance `target`, linear between nodes.
fn radius_at_distance(nodes: &[f64], s: &[f64], target: f64) -> Option<f64> {
    if target < s[0] || target > *s.last()? {
        return None;
    }
    let j = s.partition_point(|x| *x < target).max(1);
    let f = (target - s[j - 1]) / (s[j] - s[j - 1]);
    Some(nodes[j - 1] + f * (nodes[j] - nodes[j - 1]))
}

/// Riccati shield h' = k h² + c on U̅₁ ∖ U₂ and h' = k h² beyond U₁, with
/// t the distance from ∂U₂ toward the core and h = 0 on U₂.
pub fn build_shield(regions: &ShieldRegions, metric: &Metric, gamma: f64, cap: Option<f64>) -> Result<ShieldFunction> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter { name: "gamma", detail: format!("{gamma} not in (0, 1)") });
    }
    let cap = cap.unwrap_or(DEFAULT_CAP);
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(Error::InvalidParameter { name: "cap", detail: format!("{cap} must be positive") });
    }
    let n = metric.n();
    let (d0, d1) = region_distances(metric, regions)?;
    positive_distances(d0, d1)?;
    let c = 2.0 * (1.0 - gamma) / (d0 * d1);
    let t_star = riccati_blowup(n, c);
    if t_star > d0 + d1 {
        return Err(Error::ShieldDoesNotFit { blowup: t_star, depth: d0 + d1 });
    }
    let grid = metric.grid().clone();
    let nodes = grid.nodes();
    let s = cumulative_distance(metric)?;
    let s_u2 = radial_distance(metric, grid.r0(), regions.r_u2)?;
    // Nodes inside r ≤ r_U2, walked toward the core.
    let inner: Vec<usize> = (0..nodes.len()).rev().filter(|&i| nodes[i] <= regions.r_u2).collect();
    let ts: Vec<f64> =
        inner.iter().map(|&i| if nodes[i] >= regions.r_u2 { 0.0 } else { (s_u2 - s[i]).max(0.0) }).collect();
    let (hs, crossed) = integrate_riccati(n, c, d1, &ts, cap);
    let Some(t_cross) = crossed.filter(|t| *t <= s_u2) else {
        let last = hs.last().copied().unwrap_or(0.0);
        let remaining = if last > 0.0 { 1.0 / (riccati_k(n) * last) } else { f64::INFINITY };
        return Err(Error::ShieldDoesNotFit { blowup: s_u2 + remaining, depth: s_u2 });
    };
    let geo = metric.geometry()?;
    let k = riccati_k(n);
    let mut h = vec![0.0; nodes.len()];
    let mut dh = vec![0.0; nodes.len()];
    for ((&i, &t), &hv) in inner.iter().zip(&ts).zip(&hs) {
        h[i] = hv;
        dh[i] = if hv.is_finite() {
            -geo.a[i].sqrt() * (k * hv * hv + if t <= d1 { c } else { 0.0 })
        } else {
            f64::INFINITY
        };
    }
    let blowup_radius = radius_at_distance(nodes, &s, s_u2 - t_cross).unwrap_or(grid.r0());
    Ok(ShieldFunction {
        h: GridField::new(grid, h, Rank::Scalar)?,
        dh,
        gamma,
        c,
        d0,
        d1,
        t_star,
        blowup_distance: t_cross,
        blowup_radius,
        cap,
        regions: *regions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShieldChecks {
    /// (n/(n-1))h² - 2h tr k - 2|∇h| above -4/(D₀D₁) and -2(μ - |J|) on U̅₁ ∖ U₂.
    pub a: bool,
    /// (n/(n-1))h² - 2|∇h| ≥ 0 on {h < ∞} ∖ U₁.
    pub b: bool,
    /// μ̂ - |Ĵ| ≥ 0 wherever h is finite.
    pub c: bool,
    /// θ⁺ < 0 for the deformed data next to the blow-up.
    pub d: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShieldReport {
    pub checks: ShieldChecks,
    /// Smallest slack in (a).
    pub slack_a: f64,
    /// Smallest value in (b), relative to (n/(n-1))h².
    pub slack_b: f64,
    pub min_deformed_margin: f64,
    pub theta_plus: f64,
    pub theta_radius: f64,
    /// tr k ≤ 0 on U₀ ∖ U̅₂.
    pub trace_nonpositive: bool,
    pub pass: bool,
}

/// Relative rounding allowance for the equality branch in (b) and for (c).
const CHECK_ROUNDOFF: f64 = 1e-12;

pub fn verify_shield(shield: &ShieldFunction, data: &InitialData) -> Result<ShieldReport> {
    let n = data.n();
    if n < 3 {
        return Err(Error::Dimension { n, min: 3 });
    }
    let grid = data.grid();
    if grid.nodes() != shield.h.grid().nodes() {
        return Err(Error::InvalidParameter { name: "h", detail: "shield and data use different grids".into() });
    }
    let nf = n as f64;
    let regions = &shield.regions;
    let nodes = grid.nodes();
    let geo = data.metric().geometry()?;
    let cur = energy_current(data)?;
    let h = shield.h.values();
    let threshold = largeness_threshold(shield.d0, shield.d1);
    let (mut slack_a, mut slack_b) = (f64::INFINITY, f64::INFINITY);
    let mut trace_nonpositive = true;
    for (i, &r) in nodes.iter().enumerate() {
        if regions.in_collar(r) && data.trace_k(i) > 0.0 {
            trace_nonpositive = false;
        }
        if !h[i].is_finite() {
            continue;
        }
        let grad = (shield.dh[i] / geo.a[i].sqrt()).abs();
        let quad = nf / (nf - 1.0) * h[i] * h[i];
        if regions.in_annulus(r) {
            let q = quad - 2.0 * h[i] * data.trace_k(i) - 2.0 * grad;
            let floor = threshold.min(2.0 * cur.dec_margin.values()[i]);
            slack_a = slack_a.min(q + floor);
        } else if r < regions.r_u1 {
            slack_b = slack_b.min((quad - 2.0 * grad) / quad.max(1.0));
        }
    }
    let lo = h.iter().position(|v| v.is_finite()).unwrap_or(h.len());
    if lo + 5 > h.len() {
        return Err(Error::InvalidParameter { name: "h", detail: "too few nodes with finite h".into() });
    }
    let sub = data.restrict(lo, h.len())?;
    let deformed = trace_deform(&sub, &h[lo..], Some(&shield.dh[lo..]))?;
    let min_deformed_margin = deformed.formula.min_dec_margin();
    let theta_radius = nodes[lo];
    let (theta_plus, _) = null_expansions(&deformed.data, theta_radius)?;
    let checks = ShieldChecks {
        a: slack_a > 0.0,
        b: slack_b >= -CHECK_ROUNDOFF,
        c: min_deformed_margin >= -CHECK_ROUNDOFF,
        d: theta_plus < 0.0,
    };
    let pass = checks.a && checks.b && checks.c && checks.d;
    Ok(ShieldReport {
        checks,
        slack_a,
        slack_b,
        min_deformed_margin,
        theta_plus,
        theta_radius,
        trace_nonpositive,
        pass,
    })
}

/// n - 1 + 2κD₁/(4 - κD₀D₁) for 0 < κ < 4/(D₀D₁).
pub fn boundary_margin(d0: f64, d1: f64, kappa: f64, n: usize) -> Result<f64> {
    positive_distances(d0, d1)?;
    let limit = 4.0 / (d0 * d1);
    if !(kappa > 0.0 && kappa < limit) {
        return Err(Error::KappaOutOfRange { kappa, limit });
    }
    Ok(n as f64 - 1.0 + 2.0 * kappa * d1 / (4.0 - kappa * d0 * d1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inextendibility {
    /// Depth from the outer grid edge to ∂U₀; +∞ when no shield fits.
    pub depth: f64,
    pub regions: Option<ShieldRegions>,
    pub d0: f64,
    pub d1: f64,
    pub class: CausalClass,
}

/// Smallest D₀ ≥ `lower` with t*(γ = 1/2) ≤ D₀ + D₁, where
/// t* = β √(D₀D₁), β = (π/2)√(2(n-1)/n).
fn minimal_d0(n: usize, d1: f64, lower: f64) -> f64 {
    let nf = n as f64;
    let beta = std::f64::consts::FRAC_PI_2 * (2.0 * (nf - 1.0) / nf).sqrt();
    if beta <= 2.0 {
        return lower;
    }
    let disc = (beta * beta - 4.0).sqrt();
    let (lo, hi) = (d1 * ((beta - disc) / 2.0).powi(2), d1 * ((beta + disc) / 2.0).powi(2));
    if lower <= lo || lower >= hi {
        lower
    } else {
        hi
    }
}

/// Minimal collar depth, measured from the outer grid edge, that holds a
/// γ = 1/2 shield certified by `margin`. Applies only when the energy-momentum
/// vector is neither future causal nor zero.
pub fn inextendibility_radius(metric: &Metric, margin: &GridField, radii: &[f64]) -> Result<Inextendibility> {
    let grid = metric.grid();
    if margin.values().len() != grid.len() {
        return Err(Error::InvalidParameter { name: "margin", detail: "length differs from grid".into() });
    }
    let perturbed = match metric {
        Metric::Perturbed(p) => p.clone(),
        Metric::Warped(w) => w.to_perturbed(metric.n() as f64)?,
    };
    let m = energy_momentum(&perturbed, radii)?;
    let class = causal_class(&m, DEFAULT_CAUSAL_TOL);
    if class.is_future_causal_or_zero() {
        return Err(Error::NotApplicable { detail: format!("energy-momentum vector is {:?}", class.label) });
    }
    let nodes = grid.nodes();
    let s = cumulative_distance(metric)?;
    let total = *s.last().unwrap_or(&0.0);
    let mv = margin.values();
    let mut best = Inextendibility { depth: f64::INFINITY, regions: None, d0: f64::NAN, d1: f64::NAN, class };
    for j2 in (0..nodes.len()).rev() {
        let outer = total - s[j2];
        if outer >= best.depth {
            break;
        }
        let mut running = f64::INFINITY;
        for j1 in (0..j2).rev() {
            running = running.min(mv[j1]).min(mv[j1 + 1]);
            if !(running > 0.0) {
                break;
            }
            let d1 = s[j2] - s[j1];
            if outer + d1 >= best.depth {
                break;
            }
            // Strict largeness: the threshold must sit below the margin.
            let d0 = minimal_d0(metric.n(), d1, 4.0 / (running * d1) * (1.0 + 1e-12));
            let depth = outer + d1 + d0;
            if d0 > s[j1] || depth >= best.depth {
                continue;
            }
            let r_u0 = radius_at_distance(nodes, &s, s[j1] - d0).unwrap_or(nodes[0]);
            best.depth = depth;
            best.d0 = d0;
            best.d1 = d1;
            best.regions = Some(ShieldRegions { r_u0, r_u1: nodes[j1], r_u2: nodes[j2] });
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Profile, WarpedMetric};
    use crate::grid::{RadialGrid, Spacing};
    use std::sync::Arc;

    fn grid(r0: f64, r1: f64, count: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(r0, r1, count, Spacing::UniformR).unwrap())
    }

    fn hyperbolic(n: usize, g: Arc<RadialGrid>) -> Metric {
        WarpedMetric::hyperbolic(n, g).unwrap().into()
    }

    /// (g_H, -g/√a): doubled DEC margin n(n-1)(1-a)/a everywhere.
    fn margin_data(n: usize, g: Arc<RadialGrid>, margin: f64) -> InitialData {
        let nf = n as f64;
        let s = (1.0 + margin / (nf * (nf - 1.0))).sqrt();
        let len = g.len();
        InitialData::pure_trace(hyperbolic(n, g), vec![-s; len]).unwrap()
    }

    #[test]
    fn distances() {
        let g = grid(0.5, 6.0, 1101);
        let r = ShieldRegions::new(1.0, 3.0, 5.0).unwrap();
        let (d0, d1) = region_distances(&hyperbolic(4, g.clone()), &r).unwrap();
        assert!((d0 - 2.0).abs() < 1e-12 && (d1 - 2.0).abs() < 1e-12);
        let acg: Metric = WarpedMetric::new(4, g, Profile::Acg { a: 1.0 }).unwrap().into();
        let (d0, d1) = region_distances(&acg, &ShieldRegions::new(1.0, 2.0, 3.0).unwrap()).unwrap();
        assert!((d0 - (2f64.asinh() - 1f64.asinh())).abs() < 1e-12);
        assert!((d1 - (3f64.asinh() - 2f64.asinh())).abs() < 1e-12);
        assert!(matches!(ShieldRegions::new(3.0, 1.0, 5.0), Err(Error::RegionNesting { .. })));
        assert_eq!(largeness_threshold(0.0, 2.0), f64::INFINITY);
    }

    #[test]
    fn certificates() {
        let g = grid(0.5, 6.0, 1101);
        let r = ShieldRegions::new(1.0, 3.0, 5.0).unwrap();
        let c = largeness_certificate(LargenessMode::Hyperbolic(&hyperbolic(4, g.clone())), &r).unwrap();
        assert!(!c.pass && c.min_margin.abs() < 1e-12);
        let data = margin_data(4, g.clone(), 1.5);
        let c = largeness_certificate(LargenessMode::InitialData(&data), &r).unwrap();
        assert!((c.threshold - 1.0).abs() < 1e-12);
        assert!((c.min_margin - 1.5).abs() < 1e-9, "{}", c.min_margin);
        assert!(c.pass);
        let flat = ShieldRegions::new(3.0, 3.0, 5.0).unwrap();
        assert!(matches!(
            largeness_certificate(LargenessMode::InitialData(&data), &flat),
            Err(Error::ZeroDistance { .. })
        ));
        let three = hyperbolic(3, g);
        assert!(matches!(
            largeness_certificate(LargenessMode::Hyperbolic(&three), &r),
            Err(Error::Dimension { n: 3, min: 4 })
        ));
    }

    #[test]
    fn riccati_matches_tan() {
        for (n, c) in [(4usize, 0.25), (3, 1.0), (6, 0.1)] {
            let ts_star = riccati_blowup(n, c);
            let ts: Vec<f64> = (0..=900).map(|i| 0.9 * ts_star * i as f64 / 900.0).collect();
            let (h, crossed) = integrate_riccati(n, c, f64::INFINITY, &ts, 1e6);
            assert!(crossed.is_none());
            let err = ts.iter().zip(&h).map(|(t, h)| (h - riccati_closed_form(n, c, *t)).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "n={n}: {err}");
        }
    }

    #[test]
    fn piecewise_branch_matches_closed_form() {
        let (n, c, sw) = (4usize, 0.25, 2.0);
        let k = riccati_k(n);
        let h1 = riccati_closed_form(n, c, sw);
        let ts: Vec<f64> = (0..=300).map(|i| 4.0 * i as f64 / 300.0).collect();
        let (h, _) = integrate_riccati(n, c, sw, &ts, 1e6);
        for (t, hv) in ts.iter().zip(&h) {
            let exact = if *t <= sw { riccati_closed_form(n, c, *t) } else { h1 / (1.0 - k * h1 * (t - sw)) };
            assert!((hv - exact).abs() < 1e-8 * exact.max(1.0), "t={t}: {hv} vs {exact}");
        }
    }

    #[test]
    fn example_shield_fits_and_verifies() {
        let g = grid(0.1, 7.0, 1381);
        let metric = hyperbolic(4, g.clone());
        let r = ShieldRegions::new(1.0, 3.0, 5.0).unwrap();
        let s = build_shield(&r, &metric, 0.5, None).unwrap();
        assert!((s.c - 0.25).abs() < 1e-12);
        assert!((s.t_star - std::f64::consts::FRAC_PI_2 * 6f64.sqrt()).abs() < 1e-9);
        assert!((s.t_star - 3.848).abs() < 1e-3);
        let h = s.h.values();
        for (i, &x) in g.nodes().iter().enumerate() {
            if x >= 5.0 {
                assert_eq!(h[i], 0.0);
            }
        }
        assert!(h.windows(2).all(|w| w[0] >= w[1]));
        let rep = verify_shield(&s, &margin_data(4, g, 1.5)).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.trace_nonpositive);
    }

    #[test]
    fn no_budget_does_not_fit() {
        let g = grid(0.1, 7.0, 691);
        let r = ShieldRegions::new(1.0, 3.0, 5.0).unwrap();
        let err = build_shield(&r, &hyperbolic(4, g), 0.999, None).unwrap_err();
        assert!(matches!(err, Error::ShieldDoesNotFit { .. }));
        let (lo, hi) = (riccati_blowup(4, 0.5), riccati_blowup(4, 0.4));
        assert!(lo < hi);
    }

    #[test]
    fn degenerate_shield_reduces_to_the_margin() {
        let g = grid(0.5, 6.0, 551);
        let metric = hyperbolic(4, g.clone());
        let r = ShieldRegions::new(1.0, 3.0, 5.0).unwrap();
        let mut s = build_shield(&r, &metric, 0.5, None).unwrap();
        s.h = GridField::new(g.clone(), vec![0.0; g.len()], Rank::Scalar).unwrap();
        s.dh = vec![0.0; g.len()];
        for (m, expect) in [(0.5, true), (-0.5, false)] {
            let nf = 4.0f64;
            let a_s = (1.0 + m / (nf * (nf - 1.0))).sqrt();
            let data = InitialData::pure_trace(metric.clone(), vec![-a_s; g.len()]).unwrap();
            assert_eq!(verify_shield(&s, &data).unwrap().checks.a, expect);
        }
    }

    #[test]
    fn positive_trace_is_flagged() {
        let g = grid(0.1, 7.0, 1381);
        let metric = hyperbolic(4, g.clone());
        let r = ShieldRegions::new(1.0, 3.0, 5.0).unwrap();
        let s = build_shield(&r, &metric, 0.5, None).unwrap();
        let data = InitialData::pure_trace(metric, vec![1.0625f64.sqrt(); g.len()]).unwrap();
        assert!(!verify_shield(&s, &data).unwrap().trace_nonpositive);
    }

    #[test]
    fn boundary_threshold() {
        assert!((boundary_margin(2.0, 2.0, 0.5, 4).unwrap() - 4.0).abs() < 1e-15);
        assert!((boundary_margin(2.0, 2.0, 1e-10, 4).unwrap() - 3.0).abs() < 1e-9);
        assert!(matches!(boundary_margin(2.0, 2.0, 1.0, 4), Err(Error::KappaOutOfRange { .. })));
    }

    #[test]
    fn inextendibility_depth_for_constant_margin() {
        let g = grid(2.0, 12.0, 2001);
        let past: Metric = WarpedMetric::new(4, g.clone(), Profile::Wang { mu0: -0.2 }).unwrap().into();
        let radii = [6.0, 8.0, 10.0, 12.0];
        let kappa = 4.0;
        let margin = GridField::new(g.clone(), vec![kappa; g.len()], Rank::Scalar).unwrap();
        let res = inextendibility_radius(&past, &margin, &radii).unwrap();
        assert!((res.depth - 4.0 / kappa.sqrt()).abs() < 1e-3, "{}", res.depth);
        let zero = GridField::new(g.clone(), vec![0.0; g.len()], Rank::Scalar).unwrap();
        assert_eq!(inextendibility_radius(&past, &zero, &radii).unwrap().depth, f64::INFINITY);
        let future: Metric = WarpedMetric::new(4, g, Profile::Wang { mu0: 0.2 }).unwrap().into();
        assert!(matches!(inextendibility_radius(&future, &margin, &radii), Err(Error::NotApplicable { .. })));
    }
}
