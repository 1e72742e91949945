//! Radial grids, finite differences, sphere quadrature and discrete weighted norms.

use std::f64::consts::PI;
use std::sync::Arc;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewest nodes a grid may have; the one-sided second-derivative stencil
/// needs four points at each end and refinement studies need room beyond that.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    /// Equispaced in r.
    UniformR,
    /// Equispaced in s = e^{-r}; clusters nodes toward the core.
    UniformS,
}

#[derive(Debug, Clone, PartialEq)]
struct Stencil {
    start: usize,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r0: f64,
    r_max: f64,
    nodes: Vec<f64>,
    spacing: Spacing,
    d1: Vec<Stencil>,
    d2: Vec<Stencil>,
}

/// Finite-difference weights for the derivatives of order `0..=m` at `x0`
/// from samples at `xs` (Fornberg's recursion). Returns `w[k][j]`.
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

impl RadialGrid {
    pub fn new(r0: f64, r_max: f64, count: usize, spacing: Spacing) -> Result<Self> {
        if !(r0 > 0.0 && r_max > r0 && r_max.is_finite()) {
            return Err(Error::InvalidRange { r0, r_max });
        }
        if count < MIN_NODES {
            return Err(Error::TooCoarse { count, min: MIN_NODES });
        }
        let last = (count - 1) as f64;
        let mut nodes: Vec<f64> = match spacing {
            Spacing::UniformR => (0..count)
                .map(|i| r0 + (r_max - r0) * i as f64 / last)
                .collect(),
            Spacing::UniformS => {
                let (s0, s1) = ((-r0).exp(), (-r_max).exp());
                (0..count)
                    .map(|i| -(s0 + (s1 - s0) * i as f64 / last).ln())
                    .collect()
            }
        };
        nodes[0] = r0;
        nodes[count - 1] = r_max;
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidRange { r0, r_max });
        }
        Self::from_nodes(nodes, spacing)
    }

    /// Build from explicit nodes (must be strictly increasing).
    pub fn from_nodes(nodes: Vec<f64>, spacing: Spacing) -> Result<Self> {
        let count = nodes.len();
        if count < MIN_NODES {
            return Err(Error::TooCoarse { count, min: MIN_NODES });
        }
        let (r0, r_max) = (nodes[0], nodes[count - 1]);
        if !(r0 > 0.0) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidRange { r0, r_max });
        }
        let stencil = |i: usize, start: usize, len: usize, order: usize| Stencil {
            start,
            weights: fd_weights(nodes[i], &nodes[start..start + len], order)[order].clone(),
        };
        let mut d1 = Vec::with_capacity(count);
        let mut d2 = Vec::with_capacity(count);
        for i in 0..count {
            if i == 0 {
                d1.push(stencil(i, 0, 3, 1));
                d2.push(stencil(i, 0, 4, 2));
            } else if i == count - 1 {
                d1.push(stencil(i, count - 3, 3, 1));
                d2.push(stencil(i, count - 4, 4, 2));
            } else {
                d1.push(stencil(i, i - 1, 3, 1));
                d2.push(stencil(i, i - 1, 3, 2));
            }
        }
        Ok(RadialGrid { r0, r_max, nodes, spacing, d1, d2 })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    /// Largest node gap.
    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index of the node equal to `r` (within a relative 1e-9 of the local
    /// spacing), or an out-of-grid error.
    pub fn node_index(&self, r: f64) -> Result<usize> {
        let i = self.nearest_index(r)?;
        let h = if i + 1 < self.len() {
            self.nodes[i + 1] - self.nodes[i]
        } else {
            self.nodes[i] - self.nodes[i - 1]
        };
        if (self.nodes[i] - r).abs() <= 1e-9 * h.max(1e-300) {
            Ok(i)
        } else {
            Err(self.out_of_grid(r))
        }
    }

    /// Index of the nearest node to `r` inside [r0, r_max].
    pub fn nearest_index(&self, r: f64) -> Result<usize> {
        let tol = 1e-12 * (1.0 + self.r_max.abs());
        if !(r >= self.r0 - tol && r <= self.r_max + tol) {
            return Err(self.out_of_grid(r));
        }
        let pos = self.nodes.partition_point(|&x| x < r);
        let cands = [pos.saturating_sub(1), pos.min(self.len() - 1)];
        Ok(*cands
            .iter()
            .min_by(|&&a, &&b| {
                (self.nodes[a] - r)
                    .abs()
                    .partial_cmp(&(self.nodes[b] - r).abs())
                    .unwrap()
            })
            .unwrap())
    }

    pub fn check_inside(&self, r: f64) -> Result<()> {
        self.nearest_index(r).map(|_| ())
    }

    pub(crate) fn out_of_grid(&self, r: f64) -> Error {
        Error::OutOfGrid { r, r0: self.r0, r_max: self.r_max }
    }

    /// First derivative at node `i` of column data given by `f(index)`.
    pub(crate) fn d1_at(&self, i: usize, f: impl Fn(usize) -> f64) -> f64 {
        let s = &self.d1[i];
        s.weights.iter().enumerate().map(|(j, w)| w * f(s.start + j)).sum()
    }

    pub(crate) fn d2_at(&self, i: usize, f: impl Fn(usize) -> f64) -> f64 {
        let s = &self.d2[i];
        s.weights.iter().enumerate().map(|(j, w)| w * f(s.start + j)).sum()
    }

    /// Fourth-order first derivative on five nodes `stride` apart (window
    /// shifted at the ends); needs 4·stride < len.
    pub(crate) fn d1_wide_stride_at(&self, i: usize, stride: usize, f: impl Fn(usize) -> f64) -> f64 {
        let start = i.saturating_sub(2 * stride).min(self.len() - 1 - 4 * stride);
        let idx: Vec<usize> = (0..5).map(|j| start + j * stride).collect();
        let xs: Vec<f64> = idx.iter().map(|&k| self.nodes[k]).collect();
        let w = &fd_weights(self.nodes[i], &xs, 1)[1];
        w.iter().zip(&idx).map(|(w, &k)| w * f(k)).sum()
    }

    /// Interior three-point weights (left, centre, right) for the first and
    /// second derivative at node `i`, 0 < i < len-1.
    pub(crate) fn interior_weights(&self, i: usize) -> ([f64; 3], [f64; 3]) {
        let a = &self.d1[i].weights;
        let b = &self.d2[i].weights;
        ([a[0], a[1], a[2]], [b[0], b[1], b[2]])
    }

    /// Sample a function at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// Integral of sampled data between two radii: Simpson's rule on every
    /// (partial) cell, with off-node values from the local quadratic
    /// interpolant. Radii need not be nodes.
    pub fn integrate_between(&self, values: &[f64], ra: f64, rb: f64) -> Result<f64> {
        self.check_inside(ra)?;
        self.check_inside(rb)?;
        if rb < ra {
            return Ok(-self.integrate_between(values, rb, ra)?);
        }
        let x = &self.nodes;
        let mut total = 0.0;
        for k in 0..x.len() - 1 {
            let (a, b) = (x[k].max(ra), x[k + 1].min(rb));
            if b <= a {
                continue;
            }
            let f = |r: f64| quadratic_at(x, values, k, r);
            total += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        }
        Ok(total)
    }
}

fn quadratic_at(x: &[f64], v: &[f64], k: usize, r: f64) -> f64 {
    let s = k.min(x.len() - 3);
    let w = fd_weights(r, &x[s..s + 3], 0);
    (0..3).map(|j| w[0][j] * v[s + j]).sum()
}

/// Surface area of the unit k-sphere in R^{k+1}.
pub fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        k => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

/// Axisymmetric quadrature on S^{n-1}: Gauss-Legendre in the polar angle
/// measured from the x^1 axis, times the exact measure of the orbit S^{n-2}.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    n: usize,
    thetas: Vec<f64>,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Quadrature for the unit sphere S^{n-1} ⊂ R^n with `count` polar nodes.
    pub fn new(n: usize, count: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter { name: "n", detail: format!("sphere needs n >= 2, got {n}") });
        }
        let rule = GaussLegendre::new(count.max(2)).map_err(|e| Error::InvalidParameter {
            name: "count",
            detail: e.to_string(),
        })?;
        let orbit = sphere_area(n - 2);
        let mut pairs: Vec<(f64, f64)> = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| {
                let th = 0.5 * PI * (x + 1.0);
                (th, 0.5 * PI * w * th.sin().powi(n as i32 - 2) * orbit)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let thetas: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let weights = pairs.iter().map(|p| p.1).collect();
        let points = thetas
            .iter()
            .map(|&th| {
                let mut p = vec![0.0; n];
                p[0] = th.cos();
                p[1] = th.sin();
                p
            })
            .collect();
        Ok(SphereQuadrature { n, thetas, points, weights })
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    /// Sphere dimension n-1.
    pub fn dim(&self) -> usize {
        self.n - 1
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// Representative direction of each orbit, (cos θ, sin θ, 0, ..., 0).
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// ∫_{S^{n-1}} f(x^1) dμ for an axisymmetric integrand.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.thetas
            .iter()
            .zip(&self.weights)
            .map(|(th, w)| w * f(th.cos()))
            .sum()
    }

    /// Orbit average of the coordinate x^i (0-based) over the S^{n-2}
    /// through the node with polar angle θ.
    pub fn orbit_mean(&self, i: usize, theta: f64) -> f64 {
        if i == 0 {
            theta.cos()
        } else {
            0.0
        }
    }

    /// ∫ x^i x^j dμ (0-based axes), exact orbit averages times polar quadrature.
    pub fn moment2(&self, i: usize, j: usize) -> f64 {
        let tangential = (self.n - 1) as f64;
        self.thetas
            .iter()
            .zip(&self.weights)
            .map(|(th, w)| {
                let v = match (i, j) {
                    (0, 0) => th.cos().powi(2),
                    (0, _) | (_, 0) => 0.0,
                    (a, b) if a == b => th.sin().powi(2) / tangential,
                    _ => 0.0,
                };
                w * v
            })
            .sum()
    }

    /// ∫ x^i dμ (0-based axis).
    pub fn moment1(&self, i: usize) -> f64 {
        self.thetas
            .iter()
            .zip(&self.weights)
            .map(|(th, w)| w * self.orbit_mean(i, *th))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rank {
    Scalar,
    Covector,
    Sym2Tensor,
}

/// Samples over a radial grid, optionally times the polar nodes of a
/// [`SphereQuadrature`] (`n_theta > 1`). Storage is row-major in r.
/// Covector and tensor samples are orthonormal-frame components.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    n_theta: usize,
    rank: Rank,
}

#[derive(Serialize, Deserialize)]
struct GridFieldJson {
    r0: f64,
    r_max: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    #[serde(default = "one")]
    n_theta: usize,
    #[serde(default = "scalar_rank")]
    rank: Rank,
}

fn one() -> usize {
    1
}

fn scalar_rank() -> Rank {
    Rank::Scalar
}

impl GridField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, rank: Rank) -> Result<Self> {
        let n = grid.len();
        Self::with_angles(grid, values, 1, rank).map_err(|_| Error::InvalidParameter {
            name: "values",
            detail: format!("expected {n} samples"),
        })
    }

    pub fn with_angles(grid: Arc<RadialGrid>, values: Vec<f64>, n_theta: usize, rank: Rank) -> Result<Self> {
        if n_theta == 0 || values.len() != grid.len() * n_theta {
            return Err(Error::InvalidParameter {
                name: "values",
                detail: format!("expected {} samples, got {}", grid.len() * n_theta.max(1), values.len()),
            });
        }
        Ok(GridField { grid, values, n_theta, rank })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, rank: Rank, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.sample(f);
        GridField { grid, values, n_theta: 1, rank }
    }

    pub fn zeros(grid: Arc<RadialGrid>, rank: Rank) -> Self {
        let n = grid.len();
        GridField { grid, values: vec![0.0; n], n_theta: 1, rank }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn at(&self, i_r: usize, j_theta: usize) -> f64 {
        self.values[i_r * self.n_theta + j_theta]
    }

    /// Radial column for polar node `j` (the only column when radial).
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.at(i, j)).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridField { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    pub fn zip_with(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if other.values.len() != self.values.len() {
            return Err(Error::InvalidParameter { name: "field", detail: "shape mismatch".into() });
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridField { values, ..self.clone() })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(GridFieldJson {
            r0: self.grid.r0(),
            r_max: self.grid.r_max(),
            nodes: self.grid.nodes().to_vec(),
            values: self.values.clone(),
            n_theta: self.n_theta,
            rank: self.rank,
        })
        .expect("grid field serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let j: GridFieldJson = serde_json::from_value(v.clone())?;
        let grid = RadialGrid::from_nodes(j.nodes, Spacing::UniformR)?;
        if (grid.r0() - j.r0).abs() > 1e-12 || (grid.r_max() - j.r_max).abs() > 1e-12 {
            return Err(Error::Parse("r0/r_max disagree with nodes".into()));
        }
        Self::with_angles(Arc::new(grid), j.values, j.n_theta, j.rank)
    }
}

/// Radial derivative of order 1 or 2 of every column: centred three-point
/// differences inside, one-sided at the ends; second-order accurate and
/// exact on quadratics.
pub fn differentiate(field: &GridField, order: usize) -> Result<GridField> {
    let g = &field.grid;
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidParameter { name: "order", detail: format!("{order} not in 1..=2") });
    }
    if g.len() < 2 * order + 1 {
        return Err(Error::TooCoarse { count: g.len(), min: 2 * order + 1 });
    }
    let nt = field.n_theta;
    let mut out = vec![0.0; field.values.len()];
    for j in 0..nt {
        for i in 0..g.len() {
            let f = |k: usize| field.values[k * nt + j];
            out[i * nt + j] = if order == 1 { g.d1_at(i, f) } else { g.d2_at(i, f) };
        }
    }
    Ok(GridField { values: out, ..field.clone() })
}

/// Discrete C^k_δ norm: sup over nodes of Σ_{j ≤ k} e^{δ r} |∂_r^j f|.
pub fn weighted_holder_norm(field: &GridField, delta: f64, order: usize) -> Result<f64> {
    if order > 2 {
        return Err(Error::InvalidParameter { name: "order", detail: format!("{order} not in 0..=2") });
    }
    let mut derivs = vec![field.clone()];
    for k in 1..=order {
        derivs.push(differentiate(field, k)?);
    }
    let nodes = field.grid.nodes();
    let nt = field.n_theta;
    let mut sup: f64 = 0.0;
    for (i, &r) in nodes.iter().enumerate() {
        let w = (delta * r).exp();
        for j in 0..nt {
            let s: f64 = derivs.iter().map(|d| d.at(i, j).abs()).sum();
            sup = sup.max(w * s);
        }
    }
    Ok(sup)
}
