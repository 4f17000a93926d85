use std::path::PathBuf;

use fsrk::integrators::PlanSpec;
use fsrk::methods::{lookup, registry};
use fsrk::problems::{
    estimate_extreme_eigenvalues, largest_stable_dt, make_rd_fhn, reference_solution, DtTrialSetup,
    LinearPair, RdFhnConfig, ReferenceOptions,
};
use fsrk::stability::{find_xhat, ButcherTableau, OperatorOrdering, StabilityContext, DEFAULT_SCAN_DEPTH};

fn tableaus() -> [ButcherTableau; 4] {
    [ButcherTableau::forward_euler(), ButcherTableau::heun(), ButcherTableau::rk3(), ButcherTableau::sdirk23()]
}

/// Whether `|R| > 1` throughout `[1.5 x_hat, 1.02 x_hat]`: the boundary at
/// `x_hat` is a transversal crossing with no stable island just beyond it.
fn sharp_boundary(ctx: &StabilityContext, xhat: f64) -> bool {
    (0..=96).all(|i| ctx.eval_real(xhat * (1.02 + 0.005 * i as f64)).is_none_or(|r| r.abs() > 1.0))
}

fn rest_eigenvalues() -> (f64, f64) {
    let fhn = make_rd_fhn(RdFhnConfig::default(), OperatorOrdering::DR).unwrap();
    estimate_extreme_eigenvalues(&fhn, &[vec![0.0; 2 * fhn.nodes()]]).unwrap()
}

fn scaled_stable_dt(ctx: &StabilityContext, lambda_d: f64, lambda_r: f64, bounds: (f64, f64)) -> f64 {
    let (l1, l2) = match ctx.ordering {
        OperatorOrdering::DR => (lambda_d, lambda_r),
        OperatorOrdering::RD => (lambda_r, lambda_d),
    };
    let problem = LinearPair::real(l1, l2);
    let setup = DtTrialSetup::stability_only(4000.0 / lambda_r.abs(), 1e3);
    let dt_bounds = (bounds.0 / lambda_r.abs(), bounds.1 / lambda_r.abs());
    largest_stable_dt(&problem, &ctx.method, &ctx.plan, &setup, dt_bounds, f64::INFINITY).unwrap().dt * lambda_r.abs()
}

#[test]
fn stable_step_on_linear_pair_matches_xhat() {
    let (lambda_d, lambda_r) = rest_eigenvalues();
    let ratio = lambda_d / lambda_r;
    let (mut checked, mut skipped) = (0, 0);
    for m in registry() {
        for ordering in [OperatorOrdering::DR, OperatorOrdering::RD] {
            for d in tableaus() {
                for r in tableaus() {
                    let spec = PlanSpec::new(d.clone(), r, false);
                    let ctx = StabilityContext::from_spec(m.clone(), &spec, ordering, ratio).unwrap();
                    let Some(xhat) = find_xhat(&ctx, DEFAULT_SCAN_DEPTH).unwrap().xhat else { continue };
                    if !sharp_boundary(&ctx, xhat) {
                        skipped += 1;
                        continue;
                    }
                    let scaled = scaled_stable_dt(&ctx, lambda_d, lambda_r, (0.5 * xhat.abs(), 1.5 * xhat.abs()));
                    assert!(
                        scaled >= 0.9 * xhat.abs() && scaled <= 1.1 * xhat.abs(),
                        "{} {ordering} {spec}: dt*|lambda_R| = {scaled}, x_hat = {xhat}",
                        m.name()
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 100 && skipped < checked, "checked {checked}, skipped {skipped}");
}

#[test]
fn tangent_xhat_is_not_the_practical_limit() {
    // |R| grazes 1 at x_hat for the x_hat-optimized method; runs stay bounded
    // until the transversal crossing further left.
    let (lambda_d, lambda_r) = rest_eigenvalues();
    let ctx = StabilityContext::from_spec(lookup("os437dr-minx").unwrap(), &PlanSpec::standard(), OperatorOrdering::DR, lambda_d / lambda_r).unwrap();
    let xhat = find_xhat(&ctx, DEFAULT_SCAN_DEPTH).unwrap().xhat.unwrap();
    assert!(!sharp_boundary(&ctx, xhat));
    assert!(ctx.eval_real(xhat * 1.05).unwrap().abs() < 1.0);
    let scaled = scaled_stable_dt(&ctx, lambda_d, lambda_r, (0.5 * xhat.abs(), 1.5 * xhat.abs()));
    assert!(scaled > 1.1 * xhat.abs() && ctx.eval_real(-scaled).unwrap().abs() <= 1.0, "{scaled} vs {xhat}");
}

#[test]
fn fhn_step_ratio_follows_xhat_ratio() {
    let config = RdFhnConfig::default();
    let base = make_rd_fhn(config.clone(), OperatorOrdering::DR).unwrap();
    let cache = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let reference = reference_solution(&base, Some(&cache), &ReferenceOptions::default()).unwrap();
    let setup = DtTrialSetup {
        t_end: config.t_end,
        sample_times: reference.sample_times.clone(),
        reference: Some(&reference.states),
        variable: (2, 0),
        blowup_limit: 1e3,
    };
    let spec = PlanSpec::standard();
    let mut dts = Vec::new();
    let mut xhats = Vec::new();
    for (name, ordering) in [("ruth", OperatorOrdering::RD), ("os437dr-minx", OperatorOrdering::DR)] {
        let m = lookup(name).unwrap();
        let p = base.with_ordering(ordering);
        dts.push(largest_stable_dt(&p, &m, &spec.for_ordering(ordering), &setup, (1e-3, 0.05), 0.05).unwrap().dt);
        let ctx = StabilityContext::from_spec(m, &spec, ordering, fsrk::stability::BENCHMARK_EIGEN_RATIO).unwrap();
        xhats.push(find_xhat(&ctx, DEFAULT_SCAN_DEPTH).unwrap().xhat.unwrap());
    }
    let dt_ratio = dts[1] / dts[0];
    let x_ratio = xhats[1] / xhats[0];
    assert!((dt_ratio / x_ratio - 1.0).abs() <= 0.25, "dt ratio {dt_ratio}, x_hat ratio {x_ratio}");
}
