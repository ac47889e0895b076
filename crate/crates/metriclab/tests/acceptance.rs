//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use metriclab::{run_experiment_with, Cache, ExperimentConfig, Report, Status};
use metriclab_core::extremal::{carath_exact, ck_interval, kobayashi_exact};
use metriclab_core::surface::{
    analytic_capacity, capacity_degree, greens_function, log_capacity, log_capacity_with, CollocationOptions,
    HarmonicSolution,
};
use metriclab_core::{fan, DomainSpec, KernelSeries, Point, C64};
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn run(json: &str) -> Result<Report, String> {
    let cfg = ExperimentConfig::from_json(json, None).map_err(|e| e.to_string())?;
    run_experiment_with(&cfg, &Cache::disabled()).map_err(|e| e.to_string())
}

fn column(report: &Report, name: &str) -> Vec<f64> {
    report.samples.values(name)
}

fn summary(report: &Report, key: &str) -> f64 {
    report.summary_f64(key).unwrap_or(f64::NAN)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn no_row_errors(report: &Report) -> Result<(), String> {
    match report.samples.error_count() {
        0 => Ok(()),
        k => Err(format!("{k} rows errored in {}", report.experiment)),
    }
}

fn catalog() -> Vec<DomainSpec> {
    vec![
        DomainSpec::disc(),
        DomainSpec::ball(2).unwrap(),
        DomainSpec::ball(3).unwrap(),
        DomainSpec::polydisc(2).unwrap(),
        DomainSpec::ellipsoid(2).unwrap(),
        DomainSpec::ellipsoid(3).unwrap(),
        DomainSpec::reinhardt_quartic(),
        DomainSpec::annulus(0.3).unwrap(),
        DomainSpec::burns_shnider(),
    ]
}

fn ball_curvature() -> Outcome {
    let start = Instant::now();
    let r = run(
        r#"{"experiment":"ball-curvature","spec":"ball:2","degree_cap":14,
            "grid":{"count":25,"max_modulus":0.6},"fan":{"count":16}}"#,
    )?;
    let secs = start.elapsed().as_secs_f64();
    no_row_errors(&r)?;
    let h = column(&r, "hsc");
    let worst = h.iter().map(|x| (x + 2.0 / 3.0).abs()).fold(0.0, f64::max);
    let ok = h.len() == 25 * 16 && worst < 1e-3 && secs < 60.0;
    check(ok, format!("{} samples, max |H + 2/3| = {worst:.3e} (< 1e-3), {secs:.1}s (< 60s)", h.len()))
}

/// Closed-form disc metric `2/(1-|z|²)²`; `∂∂̄ log g = 2/(1-|z|²)²`.
fn disc_closed_form_hsc(z: C64) -> f64 {
    let s = 1.0 - z.norm_sqr();
    let g = 2.0 / (s * s);
    let ddbar_log_g = 2.0 / (s * s);
    -ddbar_log_g / g
}

fn calibration() -> Outcome {
    let disc = DomainSpec::disc();
    let series = KernelSeries::build(&disc, 60).map_err(|e| e.to_string())?;
    let pts: Vec<Point> = disc
        .sample_interior(10, 21)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|p| if p.norm() > 0.6 { p.scaled(0.6 / p.norm()) } else { p })
        .collect();
    let v = fan::structured(1);
    let mut series_dev: f64 = 0.0;
    let mut closed_dev: f64 = 0.0;
    for p in &pts {
        series_dev = series_dev.max((series.hsc_at(p, &v[0]).map_err(|e| e.to_string())? + 1.0).abs());
        closed_dev = closed_dev.max((disc_closed_form_hsc(p[0]) + 1.0).abs());
    }
    check(
        series_dev < 1e-6 && closed_dev == 0.0,
        format!("10 points: series |H + 1| = {series_dev:.3e} (< 1e-6), closed form |H + 1| = {closed_dev:e}"),
    )
}

fn rep_isometry() -> Outcome {
    let ball = run(r#"{"experiment":"rep-isometry","spec":"ball:2","grid":{"count":20,"max_modulus":0.5}}"#)?;
    no_row_errors(&ball)?;
    let disp = summary(&ball, "max_displacement");
    let pot = summary(&ball, "potential_residual");
    let pull = summary(&ball, "pullback_residual");
    let image = ball.summary.get("image_ok").and_then(|v| v.as_bool()) == Some(true);
    let poly = run(r#"{"experiment":"rep-isometry","spec":"polydisc:2","grid":{"count":20,"max_modulus":0.5}}"#)?;
    let poly_pull = summary(&poly, "pullback_residual");
    let control = poly.verdict("negative-control").map(|v| v.status);
    let ok = disp < 1e-6
        && pot < 1e-5
        && pull < 1e-3
        && image
        && poly_pull > 1e-2
        && control == Some(Status::ExpectedFail)
        && poly.passed();
    check(
        ok,
        format!(
            "ball: |T(z)-z| = {disp:.2e}, potential {pot:.2e}, pullback {pull:.2e}, image_ok {image}; \
             polydisc: pullback {poly_pull:.3e} (> 1e-2), verdict {control:?}"
        ),
    )
}

fn dimension_relation() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (spec, n) in [("disc", 1.0), ("ball:2", 2.0)] {
        let r = run(&format!(r#"{{"experiment":"rep-isometry","spec":"{spec}","grid":{{"count":4}}}}"#))?;
        let c2 = summary(&r, "c_squared");
        let implied = 2.0 / c2 - 1.0;
        let want = 2.0 / (n + 1.0);
        ok &= (c2 - want).abs() < 1e-3 && implied.round() == n;
        parts.push(format!("{spec}: c² = {c2:.6} (want {want:.6}), 2/c² - 1 = {implied:.4}"));
    }
    check(ok, parts.join("; "))
}

fn lu_constant() -> Outcome {
    let want = 1.0 / 3f64.sqrt();
    let exact = run(r#"{"experiment":"lu-scan","spec":"ball:2","method":"exact"}"#)?;
    no_row_errors(&exact)?;
    let ve = summary(&exact, "value");
    let opt = run(
        r#"{"experiment":"lu-scan","spec":"ball:2","method":"optimize","grid":{"count":3},"fan":{"count":4}}"#,
    )?;
    no_row_errors(&opt)?;
    let vo = summary(&opt, "value");
    let mut worst: f64 = 0.0;
    let mut scans = Vec::new();
    for spec in catalog() {
        let r = run(&format!(
            r#"{{"experiment":"lu-scan","spec":"{spec}","degree_cap":30,"grid":{{"count":3,"max_modulus":0.6}},"fan":{{"count":4}}}}"#
        ))?;
        no_row_errors(&r)?;
        let v = summary(&r, "value");
        worst = worst.max(v);
        scans.push(format!("{spec} {v:.4}"));
    }
    let ok = (ve - want).abs() < 1e-9 && vo >= want - 1e-2 && worst <= 1.0 + 1e-9;
    check(
        ok,
        format!(
            "exact {ve:.12} (|Δ| = {:.1e}), optimize {vo:.6} (>= {:.6}), catalog max {worst:.6} [{}]",
            (ve - want).abs(),
            want - 1e-2,
            scans.join(", ")
        ),
    )
}

fn chain_annulus() -> Outcome {
    let start = Instant::now();
    let r = run(
        r#"{"experiment":"chain-annulus","spec":"annulus:0.3",
            "grid":{"count":40,"min_modulus":0.35,"max_modulus":0.95}}"#,
    )?;
    let secs = start.elapsed().as_secs_f64();
    no_row_errors(&r)?;
    let m: Vec<Vec<f64>> = ["margin1", "margin2", "margin3"].iter().map(|k| column(&r, k)).collect();
    let low = |v: &Vec<f64>| v.iter().copied().fold(f64::INFINITY, f64::min);
    let (m1, m2, m3) = (low(&m[0]), low(&m[1]), low(&m[2]));
    let hsc = low(&column(&r, "hsc"));
    let ok = m1 >= -1e-6 && m2 >= -1e-6 && m3 >= -1e-6 && m2 > 1e-4 && hsc >= -1.0 - 1e-3 && secs < 120.0;
    check(
        ok,
        format!(
            "min margins [{m1:.3e}, {m2:.3e}, {m3:.3e}] (>= -1e-6), min λ²-c_β² = {m2:.3e} (> 1e-4), \
             min HSC {hsc:.7} (>= -1.001), {secs:.1}s (< 120s)"
        ),
    )
}

fn disc_chain_equality() -> Outcome {
    let r = run(r#"{"experiment":"chain-annulus","spec":"disc","grid":{"count":10,"max_modulus":0.8}}"#)?;
    no_row_errors(&r)?;
    let cols: Vec<Vec<f64>> = ["half_B", "lambda_sq", "cbeta_sq", "cB_sq"].iter().map(|k| column(&r, k)).collect();
    let mut worst: f64 = 0.0;
    for i in 0..cols[0].len() {
        let v = [cols[0][i], cols[1][i], cols[2][i], cols[3][i]];
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.max(hi - lo);
    }
    check(cols[0].len() == 10 && worst < 1e-6, format!("10 points, max spread {worst:.3e} (< 1e-6)"))
}

fn rigidity() -> Outcome {
    let disc = run(r#"{"experiment":"rigidity-gap","spec":"disc","grid":{"count":10}}"#)?;
    no_row_errors(&disc)?;
    let dg = column(&disc, "gap").iter().map(|g| g.abs()).fold(0.0, f64::max);
    let ann = run(r#"{"experiment":"rigidity-gap","spec":"annulus:0.3","grid":{"count":10}}"#)?;
    no_row_errors(&ann)?;
    let gaps = column(&ann, "gap");
    let ag = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        dg < 1e-5 && gaps.len() == 10 && ag > 1e-4,
        format!("disc max |gap| {dg:.3e} (< 1e-5), annulus min gap {ag:.4e} (> 1e-4)"),
    )
}

fn hermitian() -> Outcome {
    let ball = run(r#"{"experiment":"hermitian-fit","spec":"ball:2"}"#)?;
    no_row_errors(&ball)?;
    let poly = run(r#"{"experiment":"hermitian-fit","spec":"polydisc:2","base":[[0,0],[0,0]]}"#)?;
    no_row_errors(&poly)?;
    let (b, p) = (summary(&ball, "residual"), summary(&poly, "residual"));
    check(b < 1e-6 && p > 0.05, format!("ball residual {b:.3e} (< 1e-6), polydisc residual {p:.4} (> 0.05)"))
}

fn bracket_soundness() -> Outcome {
    let specs = catalog();
    let results: Vec<Result<(String, f64, f64, f64), String>> = (0..100u64)
        .into_par_iter()
        .map(|k| {
            let spec = specs[k as usize % specs.len()];
            let n = spec.dim();
            let z = spec.sample_interior(1, 500 + k).map_err(|e| e.to_string())?.remove(0);
            let v = fan::random(n, 1, 900 + k).remove(0);
            let (d, m) = if n == 1 { (12, 160) } else { (5, 160) };
            let iv = ck_interval(&spec, &z, &v, d, m).map_err(|e| format!("{spec}: {e}"))?;
            let exact_dev = if matches!(
                spec.variant(),
                metriclab_core::Variant::Ball { .. } | metriclab_core::Variant::Polydisc { .. }
            ) {
                let c = carath_exact(&spec, &z, &v).map_err(|e| e.to_string())?;
                let k = kobayashi_exact(&spec, &z, &v).map_err(|e| e.to_string())?;
                (iv.lower - c).abs().max((iv.upper - k).abs())
            } else {
                0.0
            };
            Ok((spec.to_string(), iv.lower, iv.upper, exact_dev))
        })
        .collect();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_exact: f64 = 0.0;
    for r in results {
        let (_, lo, hi, dev) = r?;
        worst_excess = worst_excess.max(lo - hi);
        worst_exact = worst_exact.max(dev);
    }
    check(
        worst_excess <= 1e-9 && worst_exact < 1e-6,
        format!("100 pairs: max (lower - upper) = {worst_excess:.3e} (<= 1e-9), ball/polydisc |Δexact| = {worst_exact:.1e}"),
    )
}

fn kahler() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for base in ["[[0,0],[0,0]]", "[[0.3,0.1],[-0.2,0.25]]"] {
        let r = run(&format!(r#"{{"experiment":"hermitian-fit","spec":"ball:2","base":{base}}}"#))?;
        let k = summary(&r, "bergman_kahler_residual");
        ok &= k < 1e-3;
        parts.push(format!("base {base}: {k:.3e}"));
    }
    check(ok, format!("{} (< 1e-3, h = 0.01)", parts.join(", ")))
}

fn invariance() -> Outcome {
    let r = run(r#"{"experiment":"invariance-suite","spec":"ball:2"}"#)?;
    no_row_errors(&r)?;
    let dm = summary(&r, "max_dilation_metric");
    let dh = summary(&r, "max_dilation_hsc");
    let un = summary(&r, "max_unitary_hsc");
    let ho = summary(&r, "max_homogeneity");
    check(
        dm < 1e-8 && dh < 1e-8 && un < 1e-8 && ho < 1e-10,
        format!("dilation g {dm:.2e}, dilation H {dh:.2e}, unitary H {un:.2e} (< 1e-8); homogeneity {ho:.2e} (< 1e-10)"),
    )
}

fn green() -> Outcome {
    let disc = DomainSpec::disc();
    let mut disc_dev: f64 = 0.0;
    for z in disc.sample_interior(20, 31).map_err(|e| e.to_string())? {
        let g = greens_function(&disc, &z, &[C64::new(0.0, 0.0)]).map_err(|e| e.to_string())?;
        disc_dev = disc_dev.max((g - z[0].norm().ln()).abs());
    }
    let r = 0.3;
    let ann = DomainSpec::annulus(r).unwrap();
    let pts = ann.sample_interior(12, 37).map_err(|e| e.to_string())?;
    let mut sym: f64 = 0.0;
    for pair in pts.chunks(2) {
        let g1 = greens_function(&ann, &pair[0], &pair[1]).map_err(|e| e.to_string())?;
        let g2 = greens_function(&ann, &pair[1], &pair[0]).map_err(|e| e.to_string())?;
        sym = sym.max((g1 - g2).abs());
    }
    let mut edge: f64 = 0.0;
    for p in &pts[..4] {
        let sol = HarmonicSolution::solve(&ann, p, &CollocationOptions::default()).map_err(|e| e.to_string())?;
        for k in 0..64 {
            let t = 2.0 * PI * (k as f64 + 0.29) / 64.0;
            for rho in [1.0, r] {
                edge = edge.max(sol.green(C64::from_polar(rho, t)).map_err(|e| e.to_string())?.abs());
            }
        }
    }
    check(
        disc_dev < 1e-10 && sym < 1e-8 && edge < 1e-8,
        format!("disc |G - log|z|| {disc_dev:.2e} (< 1e-10), annulus symmetry {sym:.2e}, boundary {edge:.2e} (< 1e-8)"),
    )
}

fn capacities() -> Outcome {
    let disc = DomainSpec::disc();
    let pts: Vec<Point> = disc
        .sample_interior(10, 41)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|p| if p.norm() > 0.8 { p.scaled(0.8 / p.norm()) } else { p })
        .collect();
    let disc_rows: Vec<Result<(f64, f64, f64), String>> = pts
        .par_iter()
        .map(|a| {
            let want = 1.0 / (1.0 - a[0].norm_sqr());
            let d = capacity_degree(&disc, a);
            let ana = analytic_capacity(&disc, a, d, 16 * d).map_err(|e| e.to_string())?.value;
            let log = log_capacity(&disc, a).map_err(|e| e.to_string())?;
            Ok(((ana - want).abs(), (log - want).abs(), ana - log))
        })
        .collect();
    let (mut dev, mut disc_order) = (0.0f64, f64::NEG_INFINITY);
    for r in disc_rows {
        let (a, l, o) = r?;
        dev = dev.max(a).max(l);
        disc_order = disc_order.max(o);
    }
    let ann = DomainSpec::annulus(0.3).unwrap();
    let apts = ann.sample_interior(10, 43).map_err(|e| e.to_string())?;
    let ann_rows: Vec<Result<(f64, f64), String>> = apts
        .par_iter()
        .map(|a| {
            let (log, sol) = log_capacity_with(&ann, a, &CollocationOptions::default()).map_err(|e| e.to_string())?;
            let doubled = CollocationOptions { truncation: Some(2 * sol.truncation), ..CollocationOptions::default() };
            let refined = log_capacity_with(&ann, a, &doubled).map_err(|e| e.to_string())?.0;
            let d = capacity_degree(&ann, a);
            let ana = analytic_capacity(&ann, a, d, 16 * d).map_err(|e| e.to_string())?.value;
            Ok(((log - refined).abs(), ana - log))
        })
        .collect();
    let (mut stab, mut ann_order) = (0.0f64, f64::NEG_INFINITY);
    for r in ann_rows {
        let (s, o) = r?;
        stab = stab.max(s);
        ann_order = ann_order.max(o);
    }
    check(
        dev < 1e-6 && stab < 1e-6 && ann_order <= 0.0 && disc_order <= 1e-6,
        format!(
            "disc max |c - 1/(1-|a|²)| {dev:.2e} (< 1e-6); annulus N vs 2N {stab:.2e} (< 1e-6); \
             max(c_B - c_β): annulus {ann_order:.2e} (<= 0), disc {disc_order:.2e}"
        ),
    )
}

fn coincidence() -> Outcome {
    let ball = run(r#"{"experiment":"coincidence-scan","spec":"ball:2","base":[[0.9,0],[0,0]]}"#)?;
    no_row_errors(&ball)?;
    let fb = summary(&ball, "fraction_coincident");
    let ell = run(
        r#"{"experiment":"coincidence-scan","spec":"ellipsoid:2","base":[[0,0],[0.85,0]],
            "fan":{"count":8,"tangential":0.05}}"#,
    )?;
    no_row_errors(&ell)?;
    let fe = summary(&ell, "fraction_coincident");
    let delta = summary(&ell, "boundary_distance");
    check(
        (fb - 1.0).abs() <= 1e-9 && fe > 0.0,
        format!("ball (0.9, 0): {fb} (= 1); ellipsoid (0, 0.85), δ = {delta:.3}, tangential fan: {fe:.3} (> 0)"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 15] = [
        ("ball curvature constancy", ball_curvature),
        ("disc curvature calibration", calibration),
        ("representative-coordinate isometry", rep_isometry),
        ("curvature constant and dimension", dimension_relation),
        ("Lu constant", lu_constant),
        ("annulus chain inequality", chain_annulus),
        ("disc chain equality", disc_chain_equality),
        ("rigidity gap", rigidity),
        ("Hermitian fit", hermitian),
        ("bracket soundness", bracket_soundness),
        ("Kähler residual", kahler),
        ("invariance suite", invariance),
        ("Green's solver", green),
        ("capacity oracles", capacities),
        ("coincidence scan", coincidence),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} criterion {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
        if outcome.is_err() {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 15 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of 15 criteria fail: {failed:?}", failed.len());
        ExitCode::FAILURE
    }
}
