//! Property tests for the invariants of each module.

use std::sync::Arc;

use ahmass::deform::{run_pipeline, PipelineConfig};
use ahmass::geometry::{
    conformal_scalar_curvature, scalar_curvature, sphere_mean_curvature, Metric, PerturbedMetric, Profile,
    WarpedMetric,
};
use ahmass::grid::{differentiate, weighted_holder_norm, GridField, Rank, RadialGrid, Spacing};
use ahmass::initial_data::{energy_current, null_expansions, trace_deform, InitialData};
use ahmass::mass::{causal_class, energy_momentum, lorentz_normal_form, EnergyMomentumVector};
use ahmass::shield::{
    boundary_margin, build_shield, largeness_certificate, riccati_blowup, verify_shield, LargenessMode,
    ShieldRegions,
};
use proptest::prelude::*;

fn grid(r0: f64, r1: f64, count: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(r0, r1, count, Spacing::UniformR).unwrap())
}

fn field(g: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> GridField {
    GridField::new(g.clone(), g.nodes().iter().map(|r| f(*r)).collect(), Rank::Scalar).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn differentiate_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, w in 0.1f64..2.0, order in 1usize..=2) {
        let g = grid(1.0, 4.0, 61);
        let f = field(&g, |r| (w * r).sin());
        let h = field(&g, |r| (-w * r).exp());
        let comb = f.zip_with(&h, |x, y| a * x + b * y).unwrap();
        let lhs = differentiate(&comb, order).unwrap();
        let (df, dh) = (differentiate(&f, order).unwrap(), differentiate(&h, order).unwrap());
        for i in 0..g.len() {
            let rhs = a * df.values()[i] + b * dh.values()[i];
            prop_assert!((lhs.values()[i] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn holder_norm_is_a_norm(a in -4.0f64..4.0, s in 0.1f64..2.0, delta in 0.0f64..3.0, k in 0usize..=2) {
        let g = grid(1.0, 5.0, 81);
        let f = field(&g, |r| (s * r).cos() * (-r).exp());
        let h = field(&g, |r| (r - 3.0).tanh() * (-2.0 * r).exp());
        let nf = weighted_holder_norm(&f, delta, k).unwrap();
        let nh = weighted_holder_norm(&h, delta, k).unwrap();
        let scaled = weighted_holder_norm(&f.map(|x| a * x), delta, k).unwrap();
        prop_assert!((scaled - a.abs() * nf).abs() <= 1e-12 * nf.max(1e-300) * 10.0);
        let sum = weighted_holder_norm(&f.zip_with(&h, |x, y| x + y).unwrap(), delta, k).unwrap();
        prop_assert!(sum <= (nf + nh) * (1.0 + 1e-12));
    }

    #[test]
    fn expansions_split_into_h_and_trace(krr in -2.0f64..2.0, kt in -2.0f64..2.0, node in 0usize..41) {
        let g = grid(1.0, 5.0, 41);
        let m: Metric = WarpedMetric::new(4, g.clone(), Profile::SchwarzschildAds { mass: 0.3 }).unwrap().into();
        let r = g.nodes()[node];
        let d = InitialData::new(m.clone(), vec![krr; 41], vec![kt; 41]).unwrap();
        let (tp, tm) = null_expansions(&d, r).unwrap();
        let h = sphere_mean_curvature(&m, r).unwrap();
        let ulp = 4.0 * f64::EPSILON * (h.abs() + 3.0 * kt.abs());
        prop_assert!((tp + tm - 2.0 * h).abs() <= ulp);
        prop_assert!((tp - tm - 6.0 * kt).abs() <= ulp);
    }

    #[test]
    fn shielding_inequality_preserves_dec(s in 1.0f64..1.3, amp in 0.0f64..2.0, center in 2.0f64..4.0) {
        let n = 4usize;
        let g = grid(1.0, 5.0, 201);
        let d = InitialData::pure_trace(WarpedMetric::hyperbolic(n, g.clone()).unwrap().into(), vec![-s; 201]).unwrap();
        let h: Vec<f64> = g.nodes().iter().map(|r| amp * (-(r - center).powi(2)).exp()).collect();
        let dh: Vec<f64> = g.nodes().iter().zip(&h).map(|(r, h)| -2.0 * (r - center) * h).collect();
        let base = energy_current(&d).unwrap();
        let def = trace_deform(&d, &h, Some(&dh)).unwrap();
        let nf = n as f64;
        for i in 0..g.len() {
            let q = nf / (nf - 1.0) * h[i] * h[i] - 2.0 * h[i] * d.trace_k(i) - 2.0 * dh[i].abs();
            if q > -2.0 * base.dec_margin.values()[i] {
                prop_assert!(def.formula.dec_margin.values()[i] > 0.0);
            }
        }
    }

    #[test]
    fn riccati_blowup_grows_with_gamma(g1 in 0.01f64..0.98, dg in 0.001f64..0.01, n in 3usize..8) {
        let c = |g: f64| 2.0 * (1.0 - g) / 4.0;
        prop_assert!(riccati_blowup(n, c(g1)) < riccati_blowup(n, c(g1 + dg)));
    }

    #[test]
    fn boundary_margin_is_increasing(d0 in 0.5f64..4.0, d1 in 0.5f64..4.0, f in 0.01f64..0.98, n in 3usize..8) {
        let limit = 4.0 / (d0 * d1);
        let (k1, k2) = (f * limit, (f + 0.01) * limit);
        let (a, b) = (boundary_margin(d0, d1, k1, n).unwrap(), boundary_margin(d0, d1, k2, n).unwrap());
        prop_assert!(a > n as f64 - 1.0 && b > a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn normal_form_keeps_class_and_norm(
        v in prop::collection::vec(-5.0f64..5.0, 5),
    ) {
        prop_assume!(v.iter().any(|x| *x != 0.0));
        let e = EnergyMomentumVector::new(v);
        let (w, _) = lorentz_normal_form(&e).unwrap();
        let scale: f64 = e.components.iter().map(|x| x * x).sum();
        prop_assert!((w.minkowski_norm() - e.minkowski_norm()).abs() <= 1e-12 * scale.max(1.0));
        prop_assert_eq!(causal_class(&w, 1e-6).label, causal_class(&e, 1e-6).label);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn mass_is_linear_in_the_aspect(mu in 0.05f64..1.0) {
        let g = grid(2.0, 12.0, 2001);
        let radii = [6.0, 8.0, 10.0, 12.0];
        let one = WarpedMetric::new(4, g.clone(), Profile::Wang { mu0: mu }).unwrap().to_perturbed(4.0).unwrap();
        let two = WarpedMetric::new(4, g, Profile::Wang { mu0: 2.0 * mu }).unwrap().to_perturbed(4.0).unwrap();
        let (a, b) = (energy_momentum(&one, &radii).unwrap(), energy_momentum(&two, &radii).unwrap());
        let tol = 2.0 * a.error_estimate + b.error_estimate + 1e-6 * b.components[0].abs();
        prop_assert!((b.components[0] - 2.0 * a.components[0]).abs() <= tol);
    }

    #[test]
    fn accepted_solutions_respect_barriers(mass in 0.05f64..0.5, lambda in 2.0f64..5.0, tau in 0.02f64..0.2) {
        let mut cfg = PipelineConfig::new(4, Profile::SchwarzschildAds { mass }, lambda);
        cfg.tau = tau;
        cfg.step = 0.02;
        if let Ok(run) = run_pipeline(&cfg) {
            prop_assert!(run.solution.v.values().iter().all(|v| v.abs() <= tau));
        }
    }

    #[test]
    fn passing_certificates_give_passing_shields(margin in 1.05f64..6.0, d in 1.5f64..3.0) {
        let n = 4usize;
        let g = grid(0.05, 2.0 * d + 3.0, 1201);
        let nf = n as f64;
        let s = (1.0 + margin / (nf * (nf - 1.0))).sqrt();
        let data = InitialData::pure_trace(WarpedMetric::hyperbolic(n, g.clone()).unwrap().into(), vec![-s; g.len()]).unwrap();
        let regions = ShieldRegions::new(2.0, 2.0 + d, 2.0 + 2.0 * d).unwrap();
        let cert = largeness_certificate(LargenessMode::InitialData(&data), &regions).unwrap();
        if cert.pass {
            if let Ok(shield) = build_shield(&regions, data.metric(), 0.5, None) {
                let rep = verify_shield(&shield, &data).unwrap();
                prop_assert!(rep.checks.a && rep.checks.b && rep.checks.c, "{rep:?}");
            }
        }
    }
}

#[test]
fn hyperbolic_identities() {
    for n in [3usize, 4, 5] {
        let g = grid(0.5, 8.0, 151);
        let m: Metric = WarpedMetric::hyperbolic(n, g.clone()).unwrap().into();
        let nf = n as f64;
        assert!(scalar_curvature(&m).unwrap().values().iter().all(|r| (r + nf * (nf - 1.0)).abs() < 1e-10));
        for &r in g.nodes() {
            let h = sphere_mean_curvature(&m, r).unwrap();
            assert!((h - (nf - 1.0) / r.tanh()).abs() < 1e-12);
        }
    }
}

#[test]
fn conformal_factors_compose() {
    let n = 4usize;
    let nf = n as f64;
    let mut errs = vec![];
    for count in [201usize, 401] {
        let g = grid(1.0, 6.0, count);
        let u1 = |r: f64| 1.0 + 0.1 * (-(r - 3.0).powi(2)).exp();
        let u2 = |r: f64| 1.0 - 0.05 * (-(r - 3.5).powi(2)).exp();
        let w1: Vec<f64> = g.nodes().iter().map(|r| u1(*r).powf(4.0 / (nf - 2.0)) - 1.0).collect();
        let g1: Metric = PerturbedMetric::radial(n, g.clone(), w1.clone(), w1, nf).unwrap().into();
        let base: Metric = WarpedMetric::hyperbolic(n, g.clone()).unwrap().into();
        let twice = conformal_scalar_curvature(&g1, &field(&g, u2)).unwrap();
        let once = conformal_scalar_curvature(&base, &field(&g, |r| u1(r) * u2(r))).unwrap();
        let e = (5..count - 5).map(|i| (twice.values()[i] - once.values()[i]).abs()).fold(0.0, f64::max);
        errs.push(e);
    }
    assert!(errs[1] < 1e-3 && errs[0] / errs[1] > 3.0, "{errs:?}");
}

#[test]
fn axisymmetric_mass_has_no_transverse_components() {
    use ahmass::geometry::MassAspectMetric;
    use ahmass::grid::SphereQuadrature;
    let g = grid(2.0, 12.0, 1001);
    let m = MassAspectMetric::new(4, vec![1.0, 0.5, 0.25]).to_perturbed(g, SphereQuadrature::new(4, 24).unwrap()).unwrap();
    let em = energy_momentum(&m, &[6.0, 8.0, 10.0, 12.0]).unwrap();
    assert!(em.components[2..].iter().all(|c| c.abs() <= em.error_estimate));
}

#[test]
fn extrapolation_is_self_consistent() {
    let g = grid(2.0, 12.0, 2001);
    let m = WarpedMetric::new(4, g, Profile::Wang { mu0: 0.5 }).unwrap().to_perturbed(4.0).unwrap();
    let full = energy_momentum(&m, &[6.0, 8.0, 10.0, 12.0]).unwrap();
    let half = energy_momentum(&m, &[3.0, 4.0, 5.0, 6.0]).unwrap();
    let err = full.error_estimate.max(half.error_estimate);
    assert!((full.components[0] - half.components[0]).abs() < 3.0 * err, "{:?} {:?}", full, half);
}
