//! Initial data sets (g, k) with radially symmetric, frame-diagonal k.
//!
//! k = k_rr e_r⊗e_r + k_T (g - e_r⊗e_r) in the g-orthonormal frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{graph_slope, GridSpec, Metric, MetricSpec, PerturbedMetric, Profile, RadialGeometry, WarpedMetric};
use crate::grid::{GridField, RadialGrid, Rank};
use crate::jet::Jet;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    metric: Metric,
    k_rr: Vec<f64>,
    k_t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCurrent {
    pub mu: GridField,
    /// Radial frame component of J (the only nonzero one).
    pub j: GridField,
    pub dec_margin: GridField,
}

impl EnergyCurrent {
    fn new(grid: &Arc<RadialGrid>, mu: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        let margin = mu.iter().zip(&j).map(|(m, j)| m - j.abs()).collect();
        Ok(EnergyCurrent {
            mu: GridField::new(grid.clone(), mu, Rank::Scalar)?,
            j: GridField::new(grid.clone(), j, Rank::Covector)?,
            dec_margin: GridField::new(grid.clone(), margin, Rank::Scalar)?,
        })
    }

    pub fn min_dec_margin(&self) -> f64 {
        self.dec_margin.values().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl InitialData {
    pub fn new(metric: Metric, k_rr: Vec<f64>, k_t: Vec<f64>) -> Result<Self> {
        let len = metric.grid().len();
        if k_rr.len() != len || k_t.len() != len {
            return Err(Error::InvalidParameter { name: "k", detail: "length differs from grid".into() });
        }
        if k_rr.iter().chain(&k_t).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter { name: "k", detail: "non-finite component".into() });
        }
        Ok(InitialData { metric, k_rr, k_t })
    }

    /// k = c(r) g.
    pub fn pure_trace(metric: Metric, c: Vec<f64>) -> Result<Self> {
        Self::new(metric, c.clone(), c)
    }

    pub fn time_symmetric(metric: Metric) -> Result<Self> {
        let len = metric.grid().len();
        Self::new(metric, vec![0.0; len], vec![0.0; len])
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn n(&self) -> usize {
        self.metric.n()
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.metric.grid()
    }

    pub fn k_rr(&self) -> &[f64] {
        &self.k_rr
    }

    pub fn k_t(&self) -> &[f64] {
        &self.k_t
    }

    pub fn trace_k(&self, i: usize) -> f64 {
        self.k_rr[i] + (self.n() as f64 - 1.0) * self.k_t[i]
    }

    pub fn norm2_k(&self, i: usize) -> f64 {
        self.k_rr[i].powi(2) + (self.n() as f64 - 1.0) * self.k_t[i].powi(2)
    }

    /// The same data restricted to nodes `lo..hi`.
    pub fn restrict(&self, lo: usize, hi: usize) -> Result<Self> {
        let nodes = self.grid().nodes()[lo..hi].to_vec();
        let grid = Arc::new(RadialGrid::from_nodes(nodes, self.grid().spacing())?);
        let metric: Metric = match &self.metric {
            Metric::Warped(w) => w.with_grid(grid)?.into(),
            Metric::Perturbed(p) => {
                if !p.is_radial() {
                    return Err(Error::Unsupported { detail: "restricting angle-dependent h".into() });
                }
                let (pv, qv) = (p.p().values()[lo..hi].to_vec(), p.q().values()[lo..hi].to_vec());
                PerturbedMetric::radial(p.n(), grid, pv, qv, p.delta())?.into()
            }
        };
        Self::new(metric, self.k_rr[lo..hi].to_vec(), self.k_t[lo..hi].to_vec())
    }
}

fn current_from(geo: &RadialGeometry, k_rr: &[f64], k_t: &[f64]) -> Result<EnergyCurrent> {
    let nf = geo.n as f64;
    let grid = &geo.grid;
    let len = grid.len();
    let tr: Vec<f64> = (0..len).map(|i| k_rr[i] + (nf - 1.0) * k_t[i]).collect();
    let pi_rr: Vec<f64> = (0..len).map(|i| k_rr[i] - tr[i]).collect();
    let mut mu = Vec::with_capacity(len);
    let mut j = Vec::with_capacity(len);
    for i in 0..len {
        let norm2 = k_rr[i].powi(2) + (nf - 1.0) * k_t[i].powi(2);
        mu.push(0.5 * (geo.scalar_curvature_at(i) + tr[i] * tr[i] - norm2));
        let pi_t = k_t[i] - tr[i];
        let e_r = grid.d1_at(i, |k| pi_rr[k]) / geo.a[i].sqrt();
        j.push(e_r + geo.mean_curvature_at(i) * (pi_rr[i] - pi_t));
    }
    EnergyCurrent::new(grid, mu, j)
}

/// μ = ½(R + (tr k)² - |k|²) and J = div(k - (tr k) g).
pub fn energy_current(data: &InitialData) -> Result<EnergyCurrent> {
    current_from(&data.metric.geometry()?, &data.k_rr, &data.k_t)
}

/// (θ₊, θ₋) = H ± tr_S k on the sphere through the node r.
pub fn null_expansions(data: &InitialData, r: f64) -> Result<(f64, f64)> {
    let i = data.grid().node_index(r)?;
    let h = crate::geometry::sphere_mean_curvature(&data.metric, r)?;
    let tr_s = (data.n() as f64 - 1.0) * data.k_t[i];
    Ok((h + tr_s, h - tr_s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceDeformation {
    /// (g, k - h/(n-1) g).
    pub data: InitialData,
    /// μ̂ = μ + n h²/(2(n-1)) - h tr k, Ĵ = J + dh.
    pub formula: EnergyCurrent,
    /// Recomputed from the deformed data.
    pub direct: EnergyCurrent,
}

impl TraceDeformation {
    /// Largest pointwise disagreement between the two μ̂ and Ĵ evaluations.
    pub fn discrepancy(&self) -> f64 {
        let d = |a: &GridField, b: &GridField| {
            a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        d(&self.formula.mu, &self.direct.mu).max(d(&self.formula.j, &self.direct.j))
    }
}

/// k̂ = k - (h/(n-1)) g. `dh` is the radial derivative of h; finite
/// differences are used when it is absent.
pub fn trace_deform(data: &InitialData, h: &[f64], dh: Option<&[f64]>) -> Result<TraceDeformation> {
    let grid = data.grid().clone();
    let len = grid.len();
    if h.len() != len || dh.is_some_and(|d| d.len() != len) {
        return Err(Error::InvalidParameter { name: "h", detail: "length differs from grid".into() });
    }
    if let Some(v) = h.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidParameter { name: "h", detail: format!("must be finite and nonnegative, found {v}") });
    }
    let nf = data.n() as f64;
    let geo = data.metric.geometry()?;
    let base = current_from(&geo, &data.k_rr, &data.k_t)?;
    let mut mu = Vec::with_capacity(len);
    let mut j = Vec::with_capacity(len);
    for i in 0..len {
        let tr = data.trace_k(i);
        mu.push(base.mu.values()[i] + nf * h[i] * h[i] / (2.0 * (nf - 1.0)) - h[i] * tr);
        let slope = dh.map_or_else(|| grid.d1_at(i, |k| h[k]), |d| d[i]);
        j.push(base.j.values()[i] + slope / geo.a[i].sqrt());
    }
    let formula = EnergyCurrent::new(&grid, mu, j)?;
    let shift = |k: &[f64]| k.iter().zip(h).map(|(k, h)| k - h / (nf - 1.0)).collect::<Vec<_>>();
    let deformed = InitialData::new(data.metric.clone(), shift(&data.k_rr), shift(&data.k_t))?;
    let direct = current_from(&geo, &deformed.k_rr, &deformed.k_t)?;
    Ok(TraceDeformation { data: deformed, formula, direct })
}

/// The hyperboloid t = √(a + r²) in Minkowski space: the ACG metric with k = -g/√a.
pub fn hyperboloid_slice(n: usize, a: f64, grid: Arc<RadialGrid>) -> Result<InitialData> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::InvalidParameter { name: "a", detail: format!("{a} not in (0, 1]") });
    }
    let len = grid.len();
    let metric = WarpedMetric::new(n, grid, Profile::Acg { a })?;
    InitialData::pure_trace(metric.into(), vec![-1.0 / a.sqrt(); len])
}

/// Minkowski graph t = f(r) following the hyperboloid √(a + r²)
/// and bending to a constant-time slice beyond r_bend + width.
pub fn graph_slice(n: usize, a: f64, r_bend: f64, width: f64, grid: Arc<RadialGrid>) -> Result<InitialData> {
    if !(a > 0.0 && width > 0.0) {
        return Err(Error::InvalidParameter { name: "a", detail: "a and width must be positive".into() });
    }
    let mut k_rr = Vec::with_capacity(grid.len());
    let mut k_t = Vec::with_capacity(grid.len());
    for &r in grid.nodes() {
        let w = graph_slope(a, r_bend, width, Jet::var(r));
        let (w0, w1) = (w.value(), w.d1());
        let gamma = (1.0 - w0 * w0).sqrt();
        k_rr.push(-w1 / gamma.powi(3));
        k_t.push(-w0 / (r * gamma));
    }
    let metric = WarpedMetric::new(n, grid, Profile::HyperboloidToFlat { a, r_bend, width })?;
    InitialData::new(metric.into(), k_rr, k_t)
}

/// How k is given in an input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "k_kind", rename_all = "snake_case")]
pub enum KSpec {
    /// k = c(r) g with c sampled at the grid nodes.
    Trace { k_profile: Vec<f64> },
    /// k = c g, c constant.
    TraceConstant { c: f64 },
    /// Frame-diagonal k.
    Diagonal { k_rr: Vec<f64>, k_t: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "data", rename_all = "snake_case")]
pub enum InitialDataSpec {
    Explicit { metric: MetricSpec, #[serde(flatten)] k: KSpec },
    Hyperboloid { n: usize, a: f64, grid: GridSpec },
    GraphSlice { n: usize, a: f64, r_bend: f64, width: f64, grid: GridSpec },
}

impl InitialDataSpec {
    pub fn build(&self) -> Result<InitialData> {
        match self {
            InitialDataSpec::Explicit { metric, k } => {
                let metric = metric.build()?;
                let len = metric.grid().len();
                match k {
                    KSpec::Trace { k_profile } => InitialData::pure_trace(metric, k_profile.clone()),
                    KSpec::TraceConstant { c } => InitialData::pure_trace(metric, vec![*c; len]),
                    KSpec::Diagonal { k_rr, k_t } => InitialData::new(metric, k_rr.clone(), k_t.clone()),
                }
            }
            InitialDataSpec::Hyperboloid { n, a, grid } => hyperboloid_slice(*n, *a, grid.build()?),
            InitialDataSpec::GraphSlice { n, a, r_bend, width, grid } => {
                graph_slice(*n, *a, *r_bend, *width, grid.build()?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Spacing;

    fn grid(r0: f64, r1: f64, count: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(r0, r1, count, Spacing::UniformR).unwrap())
    }

    fn hyperbolic(n: usize, c: f64, g: Arc<RadialGrid>) -> InitialData {
        let len = g.len();
        InitialData::pure_trace(WarpedMetric::hyperbolic(n, g).unwrap().into(), vec![c; len]).unwrap()
    }

    fn sup(f: &GridField) -> f64 {
        f.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn umbilic_vacuum_examples() {
        let e = energy_current(&hyperbolic(4, -1.0, grid(0.5, 5.0, 40))).unwrap();
        assert!(sup(&e.mu) < 1e-12 && sup(&e.j) < 1e-12);
        let flat = InitialData::time_symmetric(
            WarpedMetric::new(3, grid(0.5, 5.0, 40), Profile::Euclidean).unwrap().into(),
        )
        .unwrap();
        let e = energy_current(&flat).unwrap();
        assert!(sup(&e.mu) < 1e-12 && sup(&e.j) < 1e-12);
        for a in [0.5, 0.9, 1.0] {
            let e = energy_current(&hyperboloid_slice(4, a, grid(0.5, 5.0, 40)).unwrap()).unwrap();
            assert!(sup(&e.mu) < 1e-8 && sup(&e.j) < 1e-12, "a = {a}");
        }
        assert!(hyperboloid_slice(4, 1.5, grid(0.5, 5.0, 40)).is_err());
    }

    #[test]
    fn expansions() {
        let d = hyperbolic(4, -1.0, grid(0.5, 5.0, 46));
        let (tp, tm) = null_expansions(&d, 1.0).unwrap();
        let coth = 1.0 / 1f64.tanh();
        assert!((tp - 3.0 * (coth - 1.0)).abs() < 1e-12);
        assert!((tm - 3.0 * (coth + 1.0)).abs() < 1e-12);
        let flat = InitialData::time_symmetric(
            WarpedMetric::new(3, grid(0.5, 5.0, 46), Profile::Euclidean).unwrap().into(),
        )
        .unwrap();
        assert_eq!(null_expansions(&flat, 2.0).unwrap(), (1.0, 1.0));
        assert!(null_expansions(&d, 7.0).is_err());
    }

    #[test]
    fn constant_trace_deformation() {
        let d = hyperbolic(4, -1.0, grid(0.5, 5.0, 40));
        let c = 0.7;
        let t = trace_deform(&d, &vec![c; 40], None).unwrap();
        let want = 2.0 / 3.0 * c * c + 4.0 * c;
        assert!(t.formula.mu.values().iter().all(|m| (m - want).abs() < 1e-12));
        assert!(t.direct.mu.values().iter().all(|m| (m - want).abs() < 1e-12));
        assert!(sup(&t.direct.j) < 1e-12);
        let z = trace_deform(&d, &vec![0.0; 40], None).unwrap();
        assert_eq!(z.data, d);
        assert!(trace_deform(&d, &vec![-1.0; 40], None).is_err());
    }

    #[test]
    fn radial_deformation_current_is_dh() {
        let g = grid(0.5, 3.0, 201);
        let d = hyperboloid_slice(4, 0.5, g.clone()).unwrap();
        let h: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
        let dh: Vec<f64> = g.nodes().iter().map(|r| 2.0 * r).collect();
        let t = trace_deform(&d, &h, Some(&dh)).unwrap();
        for (i, &r) in g.nodes().iter().enumerate().skip(1).take(198) {
            let lapse = (1.0 / (1.0 + r * r / 0.5)).sqrt();
            assert!((t.formula.j.values()[i] - 2.0 * r / lapse).abs() < 1e-4 * (1.0 + r));
        }
        assert!(t.discrepancy() < 1e-3, "{}", t.discrepancy());
    }

    #[test]
    fn graph_slice_is_vacuum() {
        let mut errs = vec![];
        for count in [101, 201, 401] {
            let e = energy_current(&graph_slice(4, 1.0, 1.0, 2.0, grid(0.5, 6.0, count)).unwrap()).unwrap();
            errs.push(sup(&e.mu).max(sup(&e.j)));
        }
        assert!(errs[2] < 5e-3 && errs[0] / errs[2] > 12.0, "{errs:?}");
    }
}
