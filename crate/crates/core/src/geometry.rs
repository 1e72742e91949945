//! Radially symmetric metrics g = A(r) dr² + B(r) g_{S^{n-1}} and their curvature.
//!
//! Two representations share one sampled geometry ([`RadialGeometry`]):
//! [`WarpedMetric`] carries a closed-form [`Profile`] whose derivatives are
//! exact (jet arithmetic), while [`PerturbedMetric`] stores orthonormal-frame
//! components of h = g - g_H on the grid and differentiates by finite
//! differences.

use std::sync::Arc;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, Rank, RadialGrid, Spacing, SphereQuadrature};
use crate::jet::Jet;

/// a_n = 4(n-1)/(n-2), the conformal Laplacian coefficient.
pub fn conformal_coefficient(n: usize) -> f64 {
    4.0 * (n as f64 - 1.0) / (n as f64 - 2.0)
}

/// Quintic smoothstep 6t⁵ - 15t⁴ + 10t³ clamped to [0, 1]; C² across both ends.
pub fn smoothstep(t: Jet) -> Jet {
    let x = t.value();
    if x <= 0.0 {
        Jet::constant(0.0)
    } else if x >= 1.0 {
        Jet::constant(1.0)
    } else {
        t.poly(&[0.0, 0.0, 0.0, 10.0, -15.0, 6.0])
    }
}

/// Cutoff χ_λ: 1 for r ≤ λ, 0 for r ≥ λ + 1, nonincreasing between.
pub fn cutoff(lambda: f64, r: Jet) -> Jet {
    1.0 - smoothstep(r - lambda)
}

/// Closed-form radial profiles. Coordinates: presets with B = sinh² r use
/// the geodesic coordinate of the hyperbolic background, presets with
/// B = r² the areal coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Profile {
    /// dr² + sinh² r g_S.
    Hyperbolic,
    /// dr² + r² g_S.
    Euclidean,
    /// dr²/(1 + r²/a) + r² g_S, scalar curvature -n(n-1)/a.
    Acg { a: f64 },
    /// Schwarzschild-AdS with ρ = sinh r: A = cosh² r / V(ρ), V = 1 + ρ² - 2M ρ^{2-n}.
    SchwarzschildAds { mass: f64 },
    /// Schwarzschild-AdS in the areal coordinate: dr²/V(r) + r² g_S.
    SchwarzschildAdsAreal { mass: f64 },
    /// Riemannian Schwarzschild, isotropic: φ (dr² + r² g_S), φ = (1 + m/(2 r^{n-2}))^{4/(n-2)}.
    Schwarzschild { mass: f64 },
    /// Wang form with constant mass aspect: dr² + sinh² r (1 + μ₀ e^{-nr}) g_S.
    Wang { mu0: f64 },
    /// Spacelike graph t = f(r) in Minkowski space following the hyperboloid
    /// t = √(a + r²) and bending to a constant-time slice:
    /// f' = r/√(a + r²) · (1 - S((r - r_bend)/width)). Metric (1 - f'²)dr² + r² g_S.
    HyperboloidToFlat { a: f64, r_bend: f64, width: f64 },
    /// g_λ = χ_λ g_inner + (1 - χ_λ) g_H.
    Glued { inner: Box<Profile>, lambda: f64 },
    /// Blend of an areal-gauge inner metric into the ACG model on [ρ, 9ρ]:
    /// 1/A = (1-s)/A_in + s(1 + r²/a), B = (1-s)B_in + s r², s = S(ln(r/ρ)/ln 9).
    AcgBlend { inner: Box<Profile>, rho: f64, a: f64 },
}

/// The (A, B) jets at r.
pub struct ProfileJets {
    pub a: Jet,
    pub b: Jet,
}

impl Profile {
    pub fn eval(&self, n: usize, r: f64) -> ProfileJets {
        self.eval_jet(n, Jet::var(r))
    }

    fn eval_jet(&self, n: usize, x: Jet) -> ProfileJets {
        let nf = n as f64;
        match self {
            Profile::Hyperbolic => ProfileJets { a: Jet::constant(1.0), b: x.sinh().powi(2) },
            Profile::Euclidean => ProfileJets { a: Jet::constant(1.0), b: x * x },
            Profile::Acg { a } => ProfileJets { a: (1.0 + x * x * (1.0 / a)).recip(), b: x * x },
            Profile::SchwarzschildAds { mass } => {
                let rho = x.sinh();
                let v = 1.0 + rho * rho - rho.powi(2 - n as i32) * (2.0 * mass);
                ProfileJets { a: x.cosh().powi(2) / v, b: rho * rho }
            }
            Profile::SchwarzschildAdsAreal { mass } => {
                let v = 1.0 + x * x - x.powi(2 - n as i32) * (2.0 * mass);
                ProfileJets { a: v.recip(), b: x * x }
            }
            Profile::Schwarzschild { mass } => {
                let phi = (1.0 + x.powi(2 - n as i32) * (0.5 * mass)).powf(4.0 / (nf - 2.0));
                ProfileJets { a: phi, b: phi * x * x }
            }
            Profile::Wang { mu0 } => {
                let s = x.sinh();
                ProfileJets { a: Jet::constant(1.0), b: s * s * (1.0 + (x * -nf).exp() * *mu0) }
            }
            Profile::HyperboloidToFlat { a, r_bend, width } => {
                let w = graph_slope(*a, *r_bend, *width, x);
                ProfileJets { a: 1.0 - w * w, b: x * x }
            }
            Profile::Glued { inner, lambda } => {
                let chi = cutoff(*lambda, x);
                let g = inner.eval_jet(n, x);
                ProfileJets {
                    a: chi * g.a + (1.0 - chi),
                    b: chi * g.b + (1.0 - chi) * x.sinh().powi(2),
                }
            }
            Profile::AcgBlend { inner, rho, a } => {
                let s = smoothstep((x * (1.0 / rho)).ln() * (1.0 / 9f64.ln()));
                let g = inner.eval_jet(n, x);
                let inv = (1.0 - s) * g.a.recip() + s * (1.0 + x * x * (1.0 / a));
                ProfileJets { a: inv.recip(), b: (1.0 - s) * g.b + s * x * x }
            }
        }
    }

    /// Frame components (p, q) of h = g - g_H, p = A - 1 and q = B/sinh² r - 1,
    /// evaluated without cancellation where the preset allows it.
    pub fn perturbation(&self, n: usize, r: f64) -> (f64, f64) {
        let (p, q) = self.perturbation_jets(n, Jet::var(r));
        (p.value(), q.value())
    }

    pub fn perturbation_jets(&self, n: usize, x: Jet) -> (Jet, Jet) {
        let nf = n as f64;
        let zero = Jet::constant(0.0);
        match self {
            Profile::Hyperbolic => (zero, zero),
            Profile::SchwarzschildAds { mass } => {
                let rho = x.sinh();
                let m = rho.powi(2 - n as i32) * (2.0 * mass);
                (m / (1.0 + rho * rho - m), zero)
            }
            Profile::Wang { mu0 } => (zero, (x * -nf).exp() * *mu0),
            Profile::Glued { inner, lambda } => {
                let chi = cutoff(*lambda, x);
                if chi.value() == 0.0 {
                    return (zero, zero);
                }
                let (p, q) = inner.perturbation_jets(n, x);
                (chi * p, chi * q)
            }
            other => {
                let j = other.eval_jet(n, x);
                (j.a - 1.0, j.b / x.sinh().powi(2) - 1.0)
            }
        }
    }
}

/// Slope f'(r) of the hyperboloid-to-flat graph.
pub fn graph_slope(a: f64, r_bend: f64, width: f64, x: Jet) -> Jet {
    let base = x / (x * x + a).sqrt();
    base * (1.0 - smoothstep((x - r_bend) * (1.0 / width)))
}

/// Samples of A, B and their radial derivatives at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGeometry {
    pub n: usize,
    pub grid: Arc<RadialGrid>,
    pub a: Vec<f64>,
    pub da: Vec<f64>,
    pub b: Vec<f64>,
    pub db: Vec<f64>,
    pub ddb: Vec<f64>,
    /// h = g - g_H in the frame: p = A - 1, q = B/sinh² r - 1, with derivatives.
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub ddq: Vec<f64>,
}

impl RadialGeometry {
    fn with_capacity(n: usize, grid: Arc<RadialGrid>) -> Self {
        let len = grid.len();
        let v = || Vec::with_capacity(len);
        RadialGeometry {
            n,
            grid,
            a: v(),
            da: v(),
            b: v(),
            db: v(),
            ddb: v(),
            p: v(),
            dp: v(),
            q: v(),
            dq: v(),
            ddq: v(),
        }
    }

    /// R + n(n-1) written as a combination of terms each proportional to
    /// p, q or their derivatives, so small deviations from g_H keep full
    /// relative precision.
    pub fn curvature_excess_at(&self, i: usize) -> f64 {
        let nf = self.n as f64;
        let r = self.grid.nodes()[i];
        let (s, kappa) = (r.sinh(), 1.0 / r.tanh());
        let a = self.a[i];
        let one_q = self.b[i] / (s * s);
        let (p, dp, q) = (self.p[i], self.dp[i], self.q[i]);
        let b1 = self.dq[i] / one_q;
        let b2 = self.ddq[i] / one_q;
        let t1 = -2.0 * (nf - 1.0)
            * ((-p + kappa * b1 + 0.5 * b2 - 0.25 * b1 * b1) / a - (2.0 * kappa + b1) * dp / (4.0 * a * a));
        let t2 = (nf - 1.0) * (nf - 2.0)
            * (-q / (s * s * one_q) + (kappa * kappa * p - kappa * b1 - 0.25 * b1 * b1) / a);
        t1 + t2
    }

    /// Scalar curvature of A dr² + B g_S from the warped-product formula.
    pub fn scalar_curvature_at(&self, i: usize) -> f64 {
        warped_scalar_curvature(self.n, self.a[i], self.da[i], self.b[i], self.db[i], self.ddb[i])
    }

    /// Mean curvature of the sphere through node `i`, normal toward larger r.
    pub fn mean_curvature_at(&self, i: usize) -> f64 {
        (self.n as f64 - 1.0) * self.db[i] / (2.0 * self.b[i] * self.a[i].sqrt())
    }

    /// Coefficients (c2, c1) with Δf = c2 f'' + c1 f' for radial f.
    pub fn laplacian_coefficients(&self, i: usize) -> (f64, f64) {
        let (a, da, b, db) = (self.a[i], self.da[i], self.b[i], self.db[i]);
        let nf = self.n as f64;
        (1.0 / a, -da / (2.0 * a * a) + (nf - 1.0) * db / (2.0 * a * b))
    }

    /// Δ_g of sampled radial data (finite differences, one-sided at the ends).
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| {
                let (c2, c1) = self.laplacian_coefficients(i);
                c2 * self.grid.d2_at(i, |k| f[k]) + c1 * self.grid.d1_at(i, |k| f[k])
            })
            .collect()
    }
}

/// R of A dr² + B g_{S^{n-1}} in terms of A, A', B, B', B''.
pub fn warped_scalar_curvature(n: usize, a: f64, da: f64, b: f64, db: f64, ddb: f64) -> f64 {
    let nf = n as f64;
    // φ = √B, arclength s with ds = √A dr.
    let phi_ss_over_phi = (ddb / (2.0 * b) - db * db / (4.0 * b * b)) / a - db * da / (4.0 * a * a * b);
    let one_minus_phis2_over_phi2 = 1.0 / b - db * db / (4.0 * a * b * b);
    -2.0 * (nf - 1.0) * phi_ss_over_phi + (nf - 1.0) * (nf - 2.0) * one_minus_phis2_over_phi2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r0: f64,
    pub r_max: f64,
    pub count: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::UniformR
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<RadialGrid>> {
        RadialGrid::new(self.r0, self.r_max, self.count, self.spacing).map(Arc::new)
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Dimension { n, min: 3 });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpedMetric {
    n: usize,
    grid: Arc<RadialGrid>,
    profile: Profile,
}

impl WarpedMetric {
    pub fn new(n: usize, grid: Arc<RadialGrid>, profile: Profile) -> Result<Self> {
        check_dimension(n)?;
        let m = WarpedMetric { n, grid, profile };
        m.geometry()?;
        Ok(m)
    }

    pub fn hyperbolic(n: usize, grid: Arc<RadialGrid>) -> Result<Self> {
        Self::new(n, grid, Profile::Hyperbolic)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn with_grid(&self, grid: Arc<RadialGrid>) -> Result<Self> {
        Self::new(self.n, grid, self.profile.clone())
    }

    /// Exact samples of (A, A', B, B', B'') and of the perturbation; fails
    /// if A or B is not positive.
    pub fn geometry(&self) -> Result<RadialGeometry> {
        let mut g = RadialGeometry::with_capacity(self.n, self.grid.clone());
        for &r in self.grid.nodes() {
            let j = self.profile.eval(self.n, r);
            check_positive(r, j.a.value(), j.b.value())?;
            g.a.push(j.a.value());
            g.da.push(j.a.d1());
            g.b.push(j.b.value());
            g.db.push(j.b.d1());
            g.ddb.push(j.b.d2());
            let (p, q) = self.profile.perturbation_jets(self.n, Jet::var(r));
            g.p.push(p.value());
            g.dp.push(p.d1());
            g.q.push(q.value());
            g.dq.push(q.d1());
            g.ddq.push(q.d2());
        }
        Ok(g)
    }

    /// Lapse √A at an arbitrary radius.
    pub fn lapse(&self, r: f64) -> f64 {
        self.profile.eval(self.n, r).a.value().sqrt()
    }

    pub fn a_field(&self) -> GridField {
        GridField::from_fn(self.grid.clone(), Rank::Scalar, |r| self.profile.eval(self.n, r).a.value())
    }

    pub fn b_field(&self) -> GridField {
        GridField::from_fn(self.grid.clone(), Rank::Scalar, |r| self.profile.eval(self.n, r).b.value())
    }

    /// The same metric as a tabulated perturbation of g_H.
    pub fn to_perturbed(&self, delta: f64) -> Result<PerturbedMetric> {
        let grid = self.grid.clone();
        let (p, q): (Vec<f64>, Vec<f64>) =
            grid.nodes().iter().map(|&r| self.profile.perturbation(self.n, r)).unzip();
        PerturbedMetric::radial(self.n, grid, p, q, delta)
    }
}

fn check_positive(r: f64, a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::DegenerateMetric { r, detail: format!("A = {a}, B = {b}") });
    }
    Ok(())
}

/// g = g_H + h with h = p e_r⊗e_r + q (g_H - e_r⊗e_r) in the g_H orthonormal
/// frame. Columns are polar nodes of `angles` when axisymmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedMetric {
    n: usize,
    delta: f64,
    p: GridField,
    q: GridField,
    angles: Option<SphereQuadrature>,
}

impl PerturbedMetric {
    pub fn radial(n: usize, grid: Arc<RadialGrid>, p: Vec<f64>, q: Vec<f64>, delta: f64) -> Result<Self> {
        let p = GridField::new(grid.clone(), p, Rank::Sym2Tensor)?;
        let q = GridField::new(grid, q, Rank::Sym2Tensor)?;
        Self::from_fields(n, p, q, None, delta)
    }

    pub fn from_fields(
        n: usize,
        p: GridField,
        q: GridField,
        angles: Option<SphereQuadrature>,
        delta: f64,
    ) -> Result<Self> {
        check_dimension(n)?;
        let nt = angles.as_ref().map_or(1, |a| a.len());
        if p.n_theta() != nt || q.n_theta() != nt || p.values().len() != q.values().len() {
            return Err(Error::InvalidParameter { name: "h", detail: "component shapes disagree".into() });
        }
        if let Some(a) = &angles {
            if a.ambient_dim() != n {
                return Err(Error::InvalidParameter { name: "angles", detail: "quadrature dimension != n".into() });
            }
        }
        let grid = p.grid().clone();
        for i in 0..grid.len() {
            for j in 0..nt {
                let (pv, qv) = (p.at(i, j), q.at(i, j));
                if !(pv > -1.0 && qv > -1.0) {
                    return Err(Error::DegenerateMetric {
                        r: grid.nodes()[i],
                        detail: format!("frame eigenvalues 1+{pv}, 1+{qv} not positive"),
                    });
                }
            }
        }
        Ok(PerturbedMetric { n, delta, p, q, angles })
    }

    pub fn hyperbolic(n: usize, grid: Arc<RadialGrid>, delta: f64) -> Result<Self> {
        let len = grid.len();
        Self::radial(n, grid, vec![0.0; len], vec![0.0; len], delta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.p.grid()
    }

    pub fn p(&self) -> &GridField {
        &self.p
    }

    pub fn q(&self) -> &GridField {
        &self.q
    }

    pub fn angles(&self) -> Option<&SphereQuadrature> {
        self.angles.as_ref()
    }

    pub fn is_radial(&self) -> bool {
        self.angles.is_none()
    }

    /// Geometry with A = 1 + p, B = sinh² r (1 + q); p and q are
    /// differentiated by finite differences, the sinh² factor exactly.
    pub fn geometry(&self) -> Result<RadialGeometry> {
        if !self.is_radial() {
            return Err(Error::Unsupported {
                detail: "curvature of angle-dependent perturbations".into(),
            });
        }
        let grid = self.grid().clone();
        let (p, q) = (self.p.values(), self.q.values());
        let mut g = RadialGeometry::with_capacity(self.n, grid.clone());
        for (i, &r) in grid.nodes().iter().enumerate() {
            let (s, c) = (r.sinh(), r.cosh());
            let dp = grid.d1_at(i, |k| p[k]);
            let (dq, ddq) = (grid.d1_at(i, |k| q[k]), grid.d2_at(i, |k| q[k]));
            g.a.push(1.0 + p[i]);
            g.da.push(dp);
            g.b.push(s * s * (1.0 + q[i]));
            g.db.push(2.0 * s * c * (1.0 + q[i]) + s * s * dq);
            g.ddb.push(2.0 * (c * c + s * s) * (1.0 + q[i]) + 4.0 * s * c * dq + s * s * ddq);
            g.p.push(p[i]);
            g.dp.push(dp);
            g.q.push(q[i]);
            g.dq.push(dq);
            g.ddq.push(ddq);
        }
        Ok(g)
    }

    /// Smallest frame eigenvalue of g over the grid.
    pub fn min_eigenvalue(&self) -> f64 {
        self.p.values().iter().chain(self.q.values()).fold(f64::INFINITY, |m, v| m.min(1.0 + v))
    }
}

/// Wang-form metric dr² + sinh² r (g_S + m e^{-nr} + O(e^{-(n+1)r})) with an
/// axisymmetric mass aspect tensor m = f(x¹) g_S, f a polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassAspectMetric {
    pub n: usize,
    /// f(x¹) = Σ coeffs[i] (x¹)^i.
    pub coeffs: Vec<f64>,
    /// Exponent of the remainder term, at least n + 1.
    #[serde(default)]
    pub remainder_exponent: Option<f64>,
    /// Coefficient of the remainder term (isotropic on the sphere).
    #[serde(default)]
    pub remainder: f64,
}

impl MassAspectMetric {
    pub fn new(n: usize, coeffs: Vec<f64>) -> Self {
        MassAspectMetric { n, coeffs, remainder_exponent: None, remainder: 0.0 }
    }

    /// f(x¹), the profile with m = f g_S.
    pub fn aspect(&self, x1: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x1 + c)
    }

    /// tr_{S^{n-1}} m at x¹.
    pub fn mass_aspect_function(&self, x1: f64) -> f64 {
        (self.n as f64 - 1.0) * self.aspect(x1)
    }

    pub fn to_perturbed(&self, grid: Arc<RadialGrid>, angles: SphereQuadrature) -> Result<PerturbedMetric> {
        let nf = self.n as f64;
        let k = self.remainder_exponent.unwrap_or(nf + 1.0);
        if k < nf + 1.0 {
            return Err(Error::InvalidParameter { name: "remainder_exponent", detail: format!("{k} < n + 1") });
        }
        let nt = angles.len();
        let mut q = Vec::with_capacity(grid.len() * nt);
        for &r in grid.nodes() {
            for th in angles.thetas() {
                q.push(self.aspect(th.cos()) * (-nf * r).exp() + self.remainder * (-k * r).exp());
            }
        }
        let p = GridField::with_angles(grid.clone(), vec![0.0; q.len()], nt, Rank::Sym2Tensor)?;
        let q = GridField::with_angles(grid, q, nt, Rank::Sym2Tensor)?;
        PerturbedMetric::from_fields(self.n, p, q, Some(angles), nf)
    }
}

/// Either metric representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Warped(WarpedMetric),
    Perturbed(PerturbedMetric),
}

impl Metric {
    pub fn n(&self) -> usize {
        match self {
            Metric::Warped(m) => m.n(),
            Metric::Perturbed(m) => m.n(),
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        match self {
            Metric::Warped(m) => m.grid(),
            Metric::Perturbed(m) => m.grid(),
        }
    }

    pub fn geometry(&self) -> Result<RadialGeometry> {
        match self {
            Metric::Warped(m) => m.geometry(),
            Metric::Perturbed(m) => m.geometry(),
        }
    }
}

impl From<WarpedMetric> for Metric {
    fn from(m: WarpedMetric) -> Self {
        Metric::Warped(m)
    }
}

impl From<PerturbedMetric> for Metric {
    fn from(m: PerturbedMetric) -> Self {
        Metric::Perturbed(m)
    }
}

/// R_g at every node: closed form for warped metrics, finite differences
/// for perturbed ones.
pub fn scalar_curvature(metric: &Metric) -> Result<GridField> {
    let g = metric.geometry()?;
    let values = (0..g.grid.len()).map(|i| g.scalar_curvature_at(i)).collect();
    GridField::new(g.grid.clone(), values, Rank::Scalar)
}

/// R_g + n(n-1) at every node, accurate for small deviations from g_H.
pub fn curvature_excess(metric: &Metric) -> Result<GridField> {
    let g = metric.geometry()?;
    let values = (0..g.grid.len()).map(|i| g.curvature_excess_at(i)).collect();
    GridField::new(g.grid.clone(), values, Rank::Scalar)
}

/// Mean curvature of the coordinate sphere {r} (r a node), normal toward
/// increasing r, with the round sphere in R³ having H > 0.
pub fn sphere_mean_curvature(metric: &Metric, r: f64) -> Result<f64> {
    let i = metric.grid().node_index(r)?;
    match metric {
        Metric::Warped(w) => {
            let j = w.profile().eval(w.n(), r);
            check_positive(r, j.a.value(), j.b.value())?;
            Ok((w.n() as f64 - 1.0) * j.b.d1() / (2.0 * j.b.value() * j.a.value().sqrt()))
        }
        Metric::Perturbed(_) => Ok(metric.geometry()?.mean_curvature_at(i)),
    }
}

/// R of u^{4/(n-2)} g by the conformal law
/// u^{-(n+2)/(n-2)} (-a_n Δ_g u + R_g u), Laplacian by finite differences.
pub fn conformal_scalar_curvature(metric: &Metric, u: &GridField) -> Result<GridField> {
    let v = u.map(|x| x - 1.0);
    if let Some((i, &val)) = u.values().iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(Error::NonpositiveConformalFactor { r: u.grid().nodes()[i], value: val });
    }
    conformal_scalar_curvature_from_deviation(metric, &v)
}

/// As [`conformal_scalar_curvature`] for u = 1 + v, keeping full relative
/// precision in small deviations v.
pub fn conformal_scalar_curvature_from_deviation(metric: &Metric, v: &GridField) -> Result<GridField> {
    let g = metric.geometry()?;
    if v.values().len() != g.grid.len() {
        return Err(Error::InvalidParameter { name: "u", detail: "length differs from grid".into() });
    }
    let nf = g.n as f64;
    let an = conformal_coefficient(g.n);
    let lap = g.laplacian(v.values());
    let mut out = Vec::with_capacity(g.grid.len());
    for (i, (&dv, &lv)) in v.values().iter().zip(&lap).enumerate() {
        let u = 1.0 + dv;
        if !(u > 0.0) {
            return Err(Error::NonpositiveConformalFactor { r: g.grid.nodes()[i], value: u });
        }
        let r = g.scalar_curvature_at(i);
        out.push((-an * lv + r * u) * u.powf(-(nf + 2.0) / (nf - 2.0)));
    }
    GridField::new(g.grid.clone(), out, Rank::Scalar)
}

/// H of a hypersurface after g → u^{4/(n-2)} g:
/// u^{-2/(n-2)} (H + (2(n-1)/(n-2)) ∂_ν u / u).
pub fn conformal_mean_curvature(h: f64, u: f64, du_dnu: f64, n: usize) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::NonpositiveConformalFactor { r: f64::NAN, value: u });
    }
    let nf = n as f64;
    Ok(u.powf(-2.0 / (nf - 2.0)) * (h + 2.0 * (nf - 1.0) / (nf - 2.0) * du_dnu / u))
}

/// ∫_{r_a}^{r_b} √A dr: Gauss-Legendre on the closed form for warped metrics,
/// composite Simpson on the samples for perturbed ones.
pub fn radial_distance(metric: &Metric, r_a: f64, r_b: f64) -> Result<f64> {
    let grid = metric.grid();
    grid.check_inside(r_a)?;
    grid.check_inside(r_b)?;
    if r_b < r_a {
        return Ok(-radial_distance(metric, r_b, r_a)?);
    }
    if r_a == r_b {
        return Ok(0.0);
    }
    match metric {
        Metric::Warped(w) => {
            let rule = GaussLegendre::new(24).expect("degree >= 2");
            let pieces = ((r_b - r_a) / 0.25).ceil().max(1.0) as usize;
            let step = (r_b - r_a) / pieces as f64;
            Ok((0..pieces)
                .map(|k| {
                    let a = r_a + k as f64 * step;
                    rule.integrate(a, a + step, |r| w.lapse(r))
                })
                .sum())
        }
        Metric::Perturbed(p) => {
            if !p.is_radial() {
                return Err(Error::Unsupported { detail: "distance for angle-dependent h".into() });
            }
            let lapse: Vec<f64> = p.p().values().iter().map(|v| (1.0 + v).sqrt()).collect();
            grid.integrate_between(&lapse, r_a, r_b)
        }
    }
}

/// Serializable description of a metric, tagged by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSpec {
    Warped { n: usize, grid: GridSpec, profile: Profile },
    Perturbed { n: usize, delta: f64, p: serde_json::Value, q: serde_json::Value },
    MassAspect { grid: GridSpec, polar_nodes: usize, metric: MassAspectMetric },
}

impl MetricSpec {
    pub fn build(&self) -> Result<Metric> {
        match self {
            MetricSpec::Warped { n, grid, profile } => {
                Ok(WarpedMetric::new(*n, grid.build()?, profile.clone())?.into())
            }
            MetricSpec::Perturbed { n, delta, p, q } => {
                let p = GridField::from_json(p)?;
                let q = GridField::from_json(q)?;
                if p.grid().nodes() != q.grid().nodes() {
                    return Err(Error::Parse("p and q use different grids".into()));
                }
                let q = GridField::new(p.grid().clone(), q.values().to_vec(), Rank::Sym2Tensor)?;
                Ok(PerturbedMetric::from_fields(*n, p, q, None, *delta)?.into())
            }
            MetricSpec::MassAspect { grid, polar_nodes, metric } => {
                let q = SphereQuadrature::new(metric.n, *polar_nodes)?;
                Ok(metric.to_perturbed(grid.build()?, q)?.into())
            }
        }
    }
}

impl PerturbedMetric {
    pub fn to_spec(&self) -> Result<MetricSpec> {
        if !self.is_radial() {
            return Err(Error::Unsupported { detail: "serializing angle-dependent h".into() });
        }
        Ok(MetricSpec::Perturbed {
            n: self.n,
            delta: self.delta,
            p: self.p.to_json(),
            q: self.q.to_json(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(r0: f64, r1: f64, n: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(r0, r1, n, Spacing::UniformR).unwrap())
    }

    fn warped(n: usize, p: Profile, g: Arc<RadialGrid>) -> Metric {
        WarpedMetric::new(n, g, p).unwrap().into()
    }

    #[test]
    fn model_curvatures() {
        let g = grid(0.5, 6.0, 56);
        for n in [3, 4, 5] {
            let nf = n as f64;
            let r = scalar_curvature(&warped(n, Profile::Hyperbolic, g.clone())).unwrap();
            assert!(r.values().iter().all(|v| (v + nf * (nf - 1.0)).abs() < 1e-8));
            let r = scalar_curvature(&warped(n, Profile::Euclidean, g.clone())).unwrap();
            assert!(r.values().iter().all(|v| v.abs() < 1e-10));
            for a in [0.5, 0.9] {
                let r = scalar_curvature(&warped(n, Profile::Acg { a }, g.clone())).unwrap();
                assert!(r.values().iter().all(|v| (v + nf * (nf - 1.0) / a).abs() < 1e-8));
            }
            let r = scalar_curvature(&warped(n, Profile::SchwarzschildAdsAreal { mass: 0.1 }, grid(1.0, 6.0, 30))).unwrap();
            assert!(r.values().iter().all(|v| (v + nf * (nf - 1.0)).abs() < 1e-8), "{:?}", r.values());
            let r = scalar_curvature(&warped(n, Profile::SchwarzschildAds { mass: 0.1 }, grid(1.0, 6.0, 30))).unwrap();
            assert!(r.values().iter().all(|v| (v + nf * (nf - 1.0)).abs() < 1e-8));
            let r = scalar_curvature(&warped(n, Profile::Schwarzschild { mass: 1.0 }, grid(1.0, 6.0, 30))).unwrap();
            assert!(r.values().iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn excess_matches_curvature() {
        let g = grid(0.5, 6.0, 56);
        for n in [3, 4, 5] {
            let nf = n as f64;
            for p in [
                Profile::Acg { a: 0.7 },
                Profile::Wang { mu0: 0.4 },
                Profile::Glued { inner: Box::new(Profile::Acg { a: 0.7 }), lambda: 2.0 },
            ] {
                let m = warped(n, p, g.clone());
                let r = scalar_curvature(&m).unwrap();
                let e = curvature_excess(&m).unwrap();
                for (r, e) in r.values().iter().zip(e.values()) {
                    assert!((r + nf * (nf - 1.0) - e).abs() < 1e-9 * (1.0 + r.abs()));
                }
            }
            // Schwarzschild-AdS is Einstein: the excess vanishes to relative precision of p.
            let m = warped(n, Profile::SchwarzschildAds { mass: 0.3 }, grid(1.0, 30.0, 30));
            let geo = m.geometry().unwrap();
            for i in 0..geo.grid.len() {
                assert!(geo.curvature_excess_at(i).abs() < 1e-13 * geo.p[i].abs().max(1e-300) * 1e3);
            }
        }
    }

    #[test]
    fn mean_curvature_examples() {
        let g = grid(0.5, 6.0, 12);
        let h = sphere_mean_curvature(&warped(4, Profile::Hyperbolic, g.clone()), 1.0).unwrap();
        assert!((h - 3.0 / 1f64.tanh()).abs() < 1e-12);
        let h = sphere_mean_curvature(&warped(3, Profile::Euclidean, g.clone()), 2.0).unwrap();
        assert!((h - 1.0).abs() < 1e-12);
        let a: f64 = 0.9;
        let h = sphere_mean_curvature(&warped(4, Profile::Acg { a }, g.clone()), 3.0).unwrap();
        assert!((h - 3.0 * (1.0 + 9.0 / a).sqrt() / 3.0).abs() < 1e-12);
        assert!(sphere_mean_curvature(&warped(4, Profile::Hyperbolic, g), 1.1).is_err());
    }

    #[test]
    fn conformal_constant_factor() {
        let g = grid(0.5, 4.0, 36);
        let m = warped(4, Profile::Hyperbolic, g.clone());
        let r = conformal_scalar_curvature(&m, &GridField::from_fn(g.clone(), Rank::Scalar, |_| 1.0)).unwrap();
        assert!(r.values().iter().all(|v| (v + 12.0).abs() < 1e-12));
        let c: f64 = 1.3;
        let r = conformal_scalar_curvature(&m, &GridField::from_fn(g.clone(), Rank::Scalar, |_| c)).unwrap();
        assert!(r.values().iter().all(|v| (v + 12.0 * c.powf(-2.0)).abs() < 1e-12));
        let bad = GridField::from_fn(g, Rank::Scalar, |r| 2.0 - r);
        assert!(matches!(conformal_scalar_curvature(&m, &bad), Err(Error::NonpositiveConformalFactor { .. })));
    }

    #[test]
    fn conformal_mean_curvature_examples() {
        assert_eq!(conformal_mean_curvature(3.0, 1.0, 0.0, 4).unwrap(), 3.0);
        let eps = 1e-3;
        assert!((conformal_mean_curvature(3.0, 1.0, eps, 4).unwrap() - (3.0 + 3.0 * eps)).abs() < 1e-15);
        assert!(conformal_mean_curvature(3.0, 0.0, 0.0, 4).is_err());
    }

    #[test]
    fn distances() {
        let g = grid(0.5, 4.0, 36);
        let d = radial_distance(&warped(4, Profile::Hyperbolic, g.clone()), 1.0, 3.0).unwrap();
        assert!((d - 2.0).abs() < 1e-14);
        let d = radial_distance(&warped(4, Profile::Acg { a: 1.0 }, g.clone()), 1.0, 2.0).unwrap();
        assert!((d - (2f64.asinh() - 1f64.asinh())).abs() < 1e-13);
        assert_eq!(radial_distance(&warped(4, Profile::Hyperbolic, g.clone()), 1.5, 1.5).unwrap(), 0.0);
        assert!(matches!(
            radial_distance(&warped(4, Profile::Hyperbolic, g), 1.0, 5.0),
            Err(Error::OutOfGrid { .. })
        ));
    }

    #[test]
    fn perturbed_path_tracks_closed_form() {
        let mut errs = vec![];
        for count in [161, 321, 641] {
            let g = grid(1.0, 5.0, count);
            let w = WarpedMetric::new(4, g, Profile::SchwarzschildAds { mass: 0.5 }).unwrap();
            let exact = scalar_curvature(&w.clone().into()).unwrap();
            let fd = scalar_curvature(&w.to_perturbed(4.0).unwrap().into()).unwrap();
            let e = exact.values().iter().zip(fd.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            errs.push(e);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8, "{errs:?}");
        }
        let g = grid(1.0, 5.0, 41);
        let r = scalar_curvature(&PerturbedMetric::hyperbolic(4, g, 4.0).unwrap().into()).unwrap();
        assert!(r.values().iter().all(|v| (v + 12.0).abs() < 1e-12));
    }

    #[test]
    fn degenerate_metrics_rejected() {
        let g = grid(0.2, 2.0, 20);
        assert!(matches!(
            WarpedMetric::new(4, g.clone(), Profile::SchwarzschildAdsAreal { mass: 1.0 }),
            Err(Error::DegenerateMetric { .. })
        ));
        let len = g.len();
        assert!(PerturbedMetric::radial(4, g, vec![-1.5; len], vec![0.0; len], 4.0).is_err());
    }
}
