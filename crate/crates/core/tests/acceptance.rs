//! Acceptance criteria: one PASS/FAIL line per criterion, each with a pinned
//! tolerance and a runtime limit. Exits non-zero if any criterion fails.

use qns::counterexample::{avoiding_set, certify_not_qns, certify_restricted_qns, default_sequences, CounterexampleDomain, RestrictedGrid};
use qns::fields::Field;
use qns::geometry::{lens_constant, Ball, Point, Similarity};
use qns::num::Decimal;
use qns::qns_engine::{
    ball_constant_from_c, estimate_k, f_admissibility, generalized_test, indicator_density, phi_functional, similarity_constant_from_k,
    Admissibility, PhiKind, ProbeGrid, Restriction, ScaleFunction, SimilarityGrid,
};
use qns::quadrature::{lens_fraction_sampled, mean_over_ball, Method, QuadratureSpec};
use qns::radius_sets::{Family, GapLaw, RadiusSet, Verdict};
use qns::regions::{MarkedSet, Region};
use qns::sampling::stream;
use rand::Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn spec(method: Method, seed: u64, rel: f64) -> QuadratureSpec {
    QuadratureSpec { method, target_rel_error: rel, seed, workers: workers(), ..QuadratureSpec::default() }
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn lens() -> Outcome {
    let exact = lens_constant();
    ensure((exact - 0.3910022).abs() < 1e-7, format!("analytic {exact}"))?;
    let (mc, se) = lens_fraction_sampled(1_000_000, 20_240_601, workers()).map_err(e)?;
    ensure((mc - exact).abs() < 0.002, format!("Monte Carlo {mc}"))?;
    let b1 = Region::closed_ball(Point::xy(0.0, 0.0), 1.0).map_err(e)?;
    let b2 = Region::ball(Point::xy(0.0, 0.0), 2.0).map_err(e)?;
    let grid =
        ProbeGrid { centers_per_axis: 101, radii: 30, r_min: Some(Decimal(1e-3)), r_max: Some(Decimal(1.0)), ..ProbeGrid::default() };
    let r = indicator_density(&b1, &b2, &grid, None, &spec(Method::Analytic, 1, 1e-3)).map_err(e)?;
    let inf = r.density.map_or(f64::NAN, |d| d.0);
    ensure((inf - 0.3910).abs() < 0.01, format!("grid infimum {inf}"))?;
    Ok(format!("analytic {exact:.7}, MC {mc:.5} ± {se:.5} (10^6 samples), grid inf {inf:.5} over {} probes", r.probes))
}

fn default_domain() -> Result<CounterexampleDomain, String> {
    CounterexampleDomain::build(&default_sequences(3, 5).map_err(e)?).map_err(e)
}

fn failure_side() -> Outcome {
    let d = default_domain()?;
    let r = certify_not_qns(&d, &spec(Method::Stratified, 2, 1e-3)).map_err(e)?;
    for row in &r.rows {
        let want = 1.0 / (4.0 * (row.m * row.m) as f64);
        let tol = (3.0 * row.stderr.0).max(1e-12);
        ensure((row.mean.0 - want).abs() <= tol, format!("m = {}: mean {} vs {want} (3·stderr {tol})", row.m, row.mean.0))?;
    }
    let k5 = r.rows[4].implied_k.0;
    ensure(k5 >= 100.0, format!("implied K at m = 5 is {k5}"))?;
    let ks: Vec<String> = r.rows.iter().map(|r| format!("{}", r.implied_k.0)).collect();
    Ok(format!("means within 3·stderr of 1/(4m²); implied K = [{}]", ks.join(", ")))
}

fn pass_side() -> Outcome {
    let d = default_domain()?;
    let a = avoiding_set(&d, Some(GapLaw::counterexample(3))).map_err(e)?;
    let grid = RestrictedGrid { rings: 10, angles: 24, radii_per_piece: 10, ..RestrictedGrid::default() };
    let r = certify_restricted_qns(&d, &a, &grid, &spec(Method::Stratified, 3, 2e-3)).map_err(e)?;
    ensure(r.probes >= 10_000, format!("only {} admissible probes", r.probes))?;
    ensure(r.failures == 0, format!("{} probes exceed K·(1 + 3·rel stderr)", r.failures))?;
    ensure(r.dichotomy_holds, "an admissible probe reached radius b_m".into())?;
    ensure(r.max_ratio.0 >= 2.50, format!("sharpness: max ratio {}", r.max_ratio.0))?;
    Ok(format!("{} probes, 0 failures at K = {:.4}, max ratio {:.4}", r.probes, r.k.0, r.max_ratio.0))
}

fn families() -> Result<Vec<(&'static str, RadiusSet, f64)>, String> {
    let w = (1e-6, 1.0);
    Ok(vec![
        ("geometric", RadiusSet::family(Family::Geometric { c: 1.0, q: 2.0 }, w).map_err(e)?, 0.5),
        ("blocks", RadiusSet::family(Family::Blocks { alpha: 2.0, beta: 0.25 }, w).map_err(e)?, 0.5),
        ("super-geometric", RadiusSet::family(Family::SuperGeometric { p: 2.0 }, (1e-100, 1.0)).map_err(e)?, 1.0),
        ("full interval", RadiusSet::intervals(vec![(0.0, f64::INFINITY)], w).map_err(e)?, 0.0),
    ])
}

fn favorable_suite() -> Outcome {
    let mut notes = Vec::new();
    for (name, set, p0) in families()? {
        let c = set.classify().map_err(e)?;
        let ev = &c.evidence;
        ensure(
            ev.gap_constant_route == c.favorable_all_open
                && ev.eps_net_route == c.favorable_all_open
                && ev.porosity_index_route == c.favorable_all_open,
            format!("{name}: routes disagree {ev:?}"),
        )?;
        let por = set.porosity().map_err(e)?;
        ensure((por.p0_window - p0).abs() <= 0.02, format!("{name}: p0 window {} vs {p0}", por.p0_window))?;
        // i0 = p0/(1 − p0), checked as p0 = i0/(1 + i0) to stay well conditioned near p0 = 1.
        let i0 = por.i0_window;
        let p0_back = if i0.is_finite() { i0 / (1.0 + i0) } else { 1.0 };
        ensure((por.p0_window - p0_back).abs() <= 1e-9, format!("{name}: p0 {} vs i0/(1+i0) {p0_back}", por.p0_window))?;
        notes.push(format!("{name} {:?} p0={}", c.favorable_all_open, por.p0_window));
    }
    Ok(notes.join("; "))
}

fn rescaling() -> Outcome {
    let mut checked = 0;
    for (name, set, _) in families()? {
        let base = set.classify().map_err(e)?;
        for alpha in [0.5, 1.0, 3.0] {
            for beta in [0.5, 1.0, 2.0] {
                let c = set.rescale(alpha, beta).map_err(e)?.classify().map_err(e)?;
                ensure(
                    c.favorable_all_open == base.favorable_all_open && c.favorable_bounded == base.favorable_bounded,
                    format!("{name} (α={alpha}, β={beta}): {:?} vs {:?}", c.favorable_all_open, base.favorable_all_open),
                )?;
                if name == "geometric" {
                    let want = base.gap_constant.0.powf(beta);
                    ensure((c.gap_constant.0 - want).abs() <= 1e-6 * want, format!("C^β: {} vs {want}", c.gap_constant.0))?;
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} rescalings keep verdicts; geometric C → C^β"))
}

fn constant_algebra() -> Outcome {
    let sq = MarkedSet::unit_square().map_err(e)?;
    let c = similarity_constant_from_k(1.0, &sq).map_err(e)?;
    let k = ball_constant_from_c(2.0, &sq).map_err(e)?;
    ensure(c == 2.0 && k == PI, format!("unit square: C = {c}, K = {k}"))?;

    let omega = Region::ball(Point::xy(0.0, 0.0), 2.0).map_err(e)?;
    let b1 = Region::closed_ball(Point::xy(0.0, 0.0), 1.0).map_err(e)?;
    let fields = [
        ("constant", Field::constant(1.0, omega.clone()).map_err(e)?, None),
        ("disk indicator", Field::indicator(b1.clone(), omega.clone()).map_err(e)?, Some(b1.clone())),
    ];
    let sets = [
        ("unit ball", MarkedSet::unit_ball(2).map_err(e)?),
        ("unit square", sq),
        ("two-ball union", MarkedSet::two_ball_union().map_err(e)?),
    ];
    // Both implications hold on the probes of radius ≤ 1 (images inside B(x, 1)),
    // where the ball grid attains the supremum 1/lens for the disk indicator.
    let q = spec(Method::Analytic, 6, 2e-3);
    let ball_grid =
        ProbeGrid { centers_per_axis: 41, radii: 30, r_min: Some(Decimal(1e-3)), r_max: Some(Decimal(1.0)), ..ProbeGrid::default() };
    let mut notes = Vec::new();
    for (fname, u, support) in &fields {
        let restrict = Restriction { centers_in: support.clone(), radii_in: None };
        let kb = estimate_k(u, &ball_grid, &restrict, &q).map_err(e)?;
        let kb_slack = 3.0 * kb.witness.as_ref().map_or(0.0, |w| w.rel_stderr()) + 1e-9;
        for (dname, d) in &sets {
            let k_max = 1.0 / d.outer_radius();
            let sim_grid = SimilarityGrid {
                centers_per_axis: 21,
                scales: 16,
                k_min: Some(Decimal(0.01 * k_max)),
                k_max: Some(Decimal(k_max)),
                rotations: 4,
                reflections: true,
                ..SimilarityGrid::default()
            };
            let g = generalized_test(u, d, None, &sim_grid, support.as_ref(), &q).map_err(e)?;
            let g_slack = 3.0 * g.witness.as_ref().map_or(0.0, |w| w.rel_stderr()) + 1e-9;
            let c_from_k = similarity_constant_from_k(kb.k_hat.0, d).map_err(e)?;
            ensure(
                g.k_hat.0 <= c_from_k * (1.0 + kb_slack + g_slack),
                format!("{fname}/{dname}: K̂_gen {} > C_from_K {c_from_k}", g.k_hat.0),
            )?;
            let k_from_c = ball_constant_from_c(g.k_hat.0.max(1.0), d).map_err(e)?;
            ensure(
                kb.k_hat.0 <= k_from_c * (1.0 + kb_slack + g_slack),
                format!("{fname}/{dname}: K̂_ball {} > K_from_C {k_from_c}", kb.k_hat.0),
            )?;
            notes.push(format!("{fname}/{dname} {:.3}≤{:.3}", g.k_hat.0, c_from_k));
        }
    }
    Ok(format!("unit square C = 2, K = π exactly; {}", notes.join(", ")))
}

fn quadrature_oracle() -> Outcome {
    let omega = Region::ball(Point::xy(0.0, 0.0), 10.0).map_err(e)?;
    // 30 + (x² − y²)/4 stays positive on B(0, 10).
    let u = Field::harmonic(30.0, 4.0, omega.clone()).map_err(e)?;
    let q = spec(Method::Stratified, 7, 1e-3);
    let mut rng = stream(7, "acceptance-balls", 0);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let c = Point::xy(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let r = rng.gen_range(0.1..(9.5 - c.norm()).min(4.0));
        let est = mean_over_ball(&u, &Ball::new(c, r).map_err(e)?, &q).map_err(e)?;
        let want = u.evaluate(&c).map_err(e)?;
        let err = (est.mean - want).abs();
        ensure(err <= (3.0 * est.stderr).max(1e-6), format!("ball {i}: mean {} vs u(x) {want}, stderr {}", est.mean, est.stderr))?;
        worst = worst.max(err / (3.0 * est.stderr).max(1e-6));
    }
    let one = Field::constant(2.5, omega).map_err(e)?;
    for method in [Method::Grid, Method::MonteCarlo, Method::Stratified, Method::Analytic] {
        let est = mean_over_ball(&one, &Ball::new(Point::xy(1.0, 1.0), 3.0).map_err(e)?, &spec(method, 7, 1e-3)).map_err(e)?;
        ensure(est.mean == 2.5 && est.stderr == 0.0, format!("constant field with {method:?}: {est:?}"))?;
    }
    let disk = Field::indicator(Region::ball(Point::xy(0.0, 0.0), 1.0).map_err(e)?, Region::ball(Point::xy(0.0, 0.0), 3.0).map_err(e)?)
        .map_err(e)?;
    let run = || -> Result<String, String> {
        let grid = ProbeGrid { centers_per_axis: 9, radii: 6, ..ProbeGrid::default() };
        let r = estimate_k(&disk, &grid, &Restriction::default(), &spec(Method::MonteCarlo, 99, 1e-2)).map_err(e)?;
        serde_json::to_string(&r).map_err(e)
    };
    ensure(run()? == run()?, "reports differ between identical runs".into())?;
    Ok(format!("100 balls, worst error {worst:.3} of tolerance; constants exact; reruns byte-identical"))
}

fn phi_homogeneity() -> Outcome {
    let sq = MarkedSet::unit_square().map_err(e)?;
    let d = sq.region();
    let id = Similarity::identity(2).map_err(e)?;
    let deficit = phi_functional(PhiKind::IsoperimetricDeficit, d, &id).map_err(e)?;
    let want = (16.0 - 4.0 * PI).sqrt();
    ensure((deficit - want).abs() <= 1e-9, format!("deficit {deficit} vs {want}"))?;
    let mut rng = stream(8, "acceptance-phi", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let h = Similarity::planar(
            10f64.powf(rng.gen_range(-2.0..2.0)),
            rng.gen_range(0.0..2.0 * PI),
            rng.gen(),
            Point::xy(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)),
        )
        .map_err(e)?;
        for kind in [PhiKind::Perimeter, PhiKind::BoundaryH1, PhiKind::IsoperimetricDeficit] {
            let base = phi_functional(kind, d, &id).map_err(e)?;
            let v = phi_functional(kind, d, &h).map_err(e)?;
            let rel = (v - h.scale() * base).abs() / (h.scale() * base);
            worst = worst.max(rel);
        }
    }
    ensure(worst <= 1e-9, format!("homogeneity error {worst:e}"))?;
    Ok(format!("deficit √(16−4π) to {:.1e}; max relative error {worst:.1e} over 300 evaluations", (deficit - want).abs()))
}

fn admissibility() -> Outcome {
    let r = f_admissibility(&ScaleFunction::periodic(), (1e-3, 1e3), &[1.25], f64::INFINITY).map_err(e)?;
    ensure(r.verdict == Admissibility::AdmissibleOnWindow, format!("periodic f: {:?}", r.verdict))?;
    ensure(r.c.0 <= 2.5, format!("periodic f: c = {}", r.c.0))?;
    let level = r.levels.iter().find(|l| (l.t.0 - 1.25).abs() < 1e-12).ok_or("no report for t = 1.25")?;
    ensure(level.eps_star.0.is_finite(), format!("ε* for A_1.25 is {}", level.eps_star.0))?;

    let f1 = ScaleFunction::gap_scaled(GapLaw::unit_ratio(16.0, 12.0, 1.0), 2, 1.0).map_err(e)?;
    let r1 = f_admissibility(&f1, (1e-300, 1.0), &[], f64::INFINITY).map_err(e)?;
    ensure(r1.verdict == Admissibility::NotAdmissible, format!("f1: {:?}", r1.verdict))?;
    ensure(!r1.levels.is_empty() && r1.levels.iter().all(|l| l.gaps_growing), "f1: log-gaps not growing at every level".into())?;
    ensure(r1.levels.iter().all(|l| l.asymptotic != Some(Verdict::Yes)), "f1: a level set was classified favorable".into())?;
    Ok(format!(
        "periodic c = {:.4}, ε*(A_1.25) = {:.4}; f1 not admissible, growing log-gaps at {} levels",
        r.c.0,
        level.eps_star.0,
        r1.levels.len()
    ))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("lens constant", Duration::from_secs(30), lens),
        ("counterexample failure side", Duration::from_secs(120), failure_side),
        ("counterexample pass side", Duration::from_secs(300), pass_side),
        ("favorable-set equivalence", Duration::from_secs(10), favorable_suite),
        ("rescaling invariance", Duration::from_secs(10), rescaling),
        ("constant algebra", Duration::from_secs(180), constant_algebra),
        ("quadrature oracle", Duration::from_secs(60), quadrature_oracle),
        ("phi homogeneity", Duration::from_secs(60), phi_homogeneity),
        ("f-admissibility", Duration::from_secs(30), admissibility),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= *limit => (true, d),
            Ok(d) => (false, format!("{d} (over the {}s limit)", limit.as_secs())),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!("{} [{}] {name}: {detail} ({:.2}s)", if ok { "PASS" } else { "FAIL" }, i + 1, took.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
