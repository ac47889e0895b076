use std::f64::consts::PI;

use metriclab_core::bergman::{KernelSeries, MetricJet};
use metriclab_core::{fan, C64, Direction, DomainSpec, HermitianForm, Point};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Closed-form Bergman metric of the unit ball of ℂⁿ.
fn ball_metric(z: &[C64]) -> Vec<C64> {
    let n = z.len();
    let x: f64 = z.iter().map(|w| w.norm_sqr()).sum();
    let mut g = vec![c(0.0, 0.0); n * n];
    for a in 0..n {
        for b in 0..n {
            let delta = if a == b { 1.0 - x } else { 0.0 };
            g[a * n + b] = (c(delta, 0.0) + z[a].conj() * z[b]) * ((n as f64 + 1.0) / (1.0 - x).powi(2));
        }
    }
    g
}

fn polydisc_metric(z: &[C64]) -> Vec<C64> {
    let n = z.len();
    let mut g = vec![c(0.0, 0.0); n * n];
    for i in 0..n {
        g[i * n + i] = c(2.0 / (1.0 - z[i].norm_sqr()).powi(2), 0.0);
    }
    g
}

fn max_rel(a: &[C64], b: &[C64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm() / scale))
}

#[test]
fn series_coefficients() {
    let disc = KernelSeries::build(&DomainSpec::disc(), 5).unwrap();
    assert_eq!(disc.entries().len(), 6);
    for e in disc.entries() {
        let k = e.alpha[0] as f64;
        assert!((e.coeff - (k + 1.0) / PI).abs() < 1e-13);
    }
    let ann = KernelSeries::build(&DomainSpec::annulus(0.5).unwrap(), 3).unwrap();
    let e = ann.entries().iter().find(|e| e.alpha == vec![-1]).unwrap();
    assert!((e.coeff - 1.0 / (2.0 * PI * 2f64.ln())).abs() < 1e-14);
    let poly = KernelSeries::build(&DomainSpec::polydisc(2).unwrap(), 2).unwrap();
    for e in poly.entries() {
        let (j, k) = (e.alpha[0] as f64, e.alpha[1] as f64);
        assert!((e.coeff - (j + 1.0) * (k + 1.0) / (PI * PI)).abs() < 1e-13);
    }
}

#[test]
fn kernel_at_origin() {
    let o1 = [c(0.0, 0.0)];
    let o2 = [c(0.0, 0.0), c(0.0, 0.0)];
    let disc = KernelSeries::build(&DomainSpec::disc(), 6).unwrap();
    assert!((disc.kernel(&o1, &o1).unwrap() - c(1.0 / PI, 0.0)).norm() < 1e-15);
    let ball = KernelSeries::build(&DomainSpec::ball(2).unwrap(), 6).unwrap();
    assert!((ball.kernel(&o2, &o2).unwrap() - c(2.0 / (PI * PI), 0.0)).norm() < 1e-15);
    let poly = KernelSeries::build(&DomainSpec::polydisc(2).unwrap(), 6).unwrap();
    assert!((poly.kernel(&o2, &o2).unwrap() - c(1.0 / (PI * PI), 0.0)).norm() < 1e-15);
}

#[test]
fn kernel_matches_closed_form_off_diagonal() {
    let ball = KernelSeries::build(&DomainSpec::ball(2).unwrap(), 60).unwrap();
    let z = [c(0.2, 0.1), c(-0.1, 0.3)];
    let t = [c(0.1, -0.2), c(0.25, 0.05)];
    let inner: C64 = z.iter().zip(&t).map(|(a, b)| a * b.conj()).sum();
    let exact = (c(1.0, 0.0) - inner).powi(-3) * (2.0 / (PI * PI));
    assert!((ball.kernel(&z, &t).unwrap() - exact).norm() < 1e-12 * exact.norm());
}

#[test]
fn metric_matches_closed_forms() {
    let ball = KernelSeries::build(&DomainSpec::ball(2).unwrap(), 40).unwrap();
    let poly = KernelSeries::build(&DomainSpec::polydisc(2).unwrap(), 40).unwrap();
    let disc = KernelSeries::build(&DomainSpec::disc(), 40).unwrap();
    for p in DomainSpec::ball(2).unwrap().sample_interior(10, 11).unwrap() {
        if p.norm() > 0.6 {
            continue;
        }
        let g = ball.metric_at(&p).unwrap();
        assert!(max_rel(g.entries(), &ball_metric(&p)) < 1e-6);
        let g = poly.metric_at(&p).unwrap();
        assert!(max_rel(g.entries(), &polydisc_metric(&p)) < 1e-6);
    }
    let g = disc.metric_at(&Point::real(&[0.0])).unwrap();
    assert!((g.get(0, 0).re - 2.0).abs() < 1e-14);
    let ball3 = KernelSeries::build(&DomainSpec::ball(3).unwrap(), 6).unwrap();
    let g = ball3.metric_at(&Point::origin(3)).unwrap();
    assert!(g.distance(&HermitianForm::scaled_identity(3, 4.0)) < 1e-13);
}

#[test]
fn metric_at_default_cap_near_origin() {
    let ball = KernelSeries::build(&DomainSpec::ball(2).unwrap(), 14).unwrap();
    let p = Point::new(vec![c(0.3, 0.2), c(-0.25, 0.1)]);
    let g = ball.metric_at(&p).unwrap();
    assert!(max_rel(g.entries(), &ball_metric(&p)) < 1e-3);
}

#[test]
fn jet_at_origin() {
    let disc = KernelSeries::build(&DomainSpec::disc(), 10).unwrap();
    let jet = disc.metric_jet(&Point::origin(1)).unwrap();
    assert!(jet.dg(0, 0, 0).norm() < 1e-15);
    assert!((jet.ddg(0, 0, 0, 0) - c(4.0, 0.0)).norm() < 1e-13);
    let ball = KernelSeries::build(&DomainSpec::ball(2).unwrap(), 10).unwrap();
    let jet = ball.metric_jet(&Point::origin(2)).unwrap();
    assert!(jet.dg.iter().all(|x| x.norm() < 1e-15));
}

#[test]
fn kaehler_symmetry_against_finite_differences() {
    for spec in ["ball:2", "ellipsoid:2", "reinhardt-quartic", "annulus:0.5", "burns-shnider"] {
        let spec: DomainSpec = spec.parse().unwrap();
        let series = KernelSeries::build(&spec, 14).unwrap();
        let z = spec.sample_interior(1, 3).unwrap().remove(0);
        let jet = series.metric_jet(&z).unwrap();
        let n = spec.dim();
        let h = 1e-5;
        for gam in 0..n {
            let shift = |d: C64| {
                let mut w = z.clone();
                w.0[gam] += d;
                series.metric_at(&w).unwrap()
            };
            let (xp, xm) = (shift(c(h, 0.0)), shift(c(-h, 0.0)));
            let (yp, ym) = (shift(c(0.0, h)), shift(c(0.0, -h)));
            for a in 0..n {
                for b in 0..n {
                    let dx = (xp.get(a, b) - xm.get(a, b)) / (2.0 * h);
                    let dy = (yp.get(a, b) - ym.get(a, b)) / (2.0 * h);
                    let fd = (dx - c(0.0, 1.0) * dy) * 0.5;
                    let an = jet.dg(gam, a, b);
                    assert!((fd - an).norm() < 1e-5 * (1.0 + an.norm()), "{spec}: {fd} vs {an}");
                    assert!((jet.dg(gam, a, b) - jet.dg(a, gam, b)).norm() < 1e-8);
                }
            }
        }
    }
}

fn disc_closed_form_jet(z: C64) -> MetricJet {
    let x = z.norm_sqr();
    let g = 2.0 / (1.0 - x).powi(2);
    MetricJet {
        n: 1,
        g: HermitianForm::new(1, vec![c(g, 0.0)]).unwrap(),
        dg: vec![z.conj() * (4.0 / (1.0 - x).powi(3))],
        ddg: vec![c(4.0 / (1.0 - x).powi(3) + 12.0 * x / (1.0 - x).powi(4), 0.0)],
    }
}

#[test]
fn disc_curvature_calibration() {
    let disc = KernelSeries::build(&DomainSpec::disc(), 80).unwrap();
    let v = Direction::real(&[1.0]).unwrap();
    for p in DomainSpec::disc().sample_interior(10, 2).unwrap() {
        let p = if p.norm() > 0.6 { p.scaled(0.6 / p.norm()) } else { p };
        let h = disc.hsc_at(&p, &v).unwrap();
        assert!((h + 1.0).abs() < 1e-6, "series H = {h}");
        let exact = disc_closed_form_jet(p[0]).hsc(&v).unwrap();
        assert!((exact + 1.0).abs() < 1e-13, "oracle H = {exact}");
    }
}

#[test]
fn curvature_examples() {
    let ball = KernelSeries::build(&DomainSpec::ball(2).unwrap(), 8).unwrap();
    for v in fan::mixed(2, 16, 4) {
        let h = ball.hsc_at(&Point::origin(2), &v).unwrap();
        assert!((h + 2.0 / 3.0).abs() < 1e-12);
    }
    let poly = KernelSeries::build(&DomainSpec::polydisc(2).unwrap(), 8).unwrap();
    let o = Point::origin(2);
    let h_axis = poly.hsc_at(&o, &Direction::real(&[1.0, 0.0]).unwrap()).unwrap();
    let h_diag = poly.hsc_at(&o, &Direction::real(&[1.0, 1.0]).unwrap()).unwrap();
    assert!((h_axis + 1.0).abs() < 1e-12 && (h_diag + 0.5).abs() < 1e-12);
    let scan = poly.curvature_scan(&[o], &fan::structured(2)).unwrap();
    assert!(scan.min <= -1.0 + 1e-12 && scan.max >= -0.5 - 1e-12);
}

#[test]
fn ball_curvature_constant_at_default_cap() {
    let ball = KernelSeries::build(&DomainSpec::ball(2).unwrap(), 14).unwrap();
    let pts: Vec<Point> = DomainSpec::ball(2)
        .unwrap()
        .sample_interior(60, 9)
        .unwrap()
        .into_iter()
        .filter(|p| p.norm() <= 0.5)
        .collect();
    let scan = ball.curvature_scan(&pts, &fan::mixed(2, 16, 1)).unwrap();
    assert!((scan.min + 2.0 / 3.0).abs() < 1e-3 && (scan.max + 2.0 / 3.0).abs() < 1e-3);
}

#[test]
fn representative_coordinates() {
    let ball = KernelSeries::build(&DomainSpec::ball(2).unwrap(), 30).unwrap();
    let map = ball.rep_coords(&Point::origin(2)).unwrap();
    for p in DomainSpec::ball(2).unwrap().sample_interior(20, 5).unwrap() {
        let p = if p.norm() > 0.5 { p.scaled(0.5 / p.norm()) } else { p };
        let w = map.eval(&p).unwrap();
        let d: f64 = w.iter().zip(p.iter()).map(|(a, b)| (a - b).norm()).sum();
        assert!(d < 1e-8, "{d}");
    }
    let scaled = DomainSpec::disc().dilated(0.5).unwrap();
    let series = KernelSeries::build(&scaled, 40).unwrap();
    let map = series.rep_coords(&Point::origin(1)).unwrap();
    let w = map.eval(&[c(0.1, 0.2)]).unwrap();
    assert!((w[0] - c(0.1, 0.2)).norm() < 1e-10);
    let p = Point::new(vec![c(0.2, -0.1), c(0.1, 0.3)]);
    let ell = KernelSeries::build(&"ellipsoid:2".parse().unwrap(), 10).unwrap();
    let w = ell.rep_coords(&p).unwrap().eval(&p).unwrap();
    assert!(w.iter().all(|x| x.norm() < 1e-12));
}

#[test]
fn potential_examples() {
    let disc = KernelSeries::build(&DomainSpec::disc(), 120).unwrap();
    let o = Point::origin(1);
    let v = disc.potential_phi(&o, &Point::real(&[0.5])).unwrap();
    assert!((v + 2.0 * 0.75f64.ln()).abs() < 1e-12);
    let ball = KernelSeries::build(&DomainSpec::ball(2).unwrap(), 120).unwrap();
    let v = ball.potential_phi(&Point::origin(2), &Point::real(&[0.5, 0.0])).unwrap();
    assert!((v + 3.0 * 0.75f64.ln()).abs() < 1e-10);
    let p = Point::real(&[0.1, 0.2]);
    assert_eq!(ball.potential_phi(&p, &p).unwrap(), 0.0);
}

#[test]
fn isometry_examples() {
    let ball = KernelSeries::build(&DomainSpec::ball(2).unwrap(), 40).unwrap();
    let samples: Vec<Point> = DomainSpec::ball(2)
        .unwrap()
        .sample_interior(20, 8)
        .unwrap()
        .into_iter()
        .map(|p| if p.norm() > 0.5 { p.scaled(0.5 / p.norm()) } else { p })
        .collect();
    let r = ball.isometry_residual(&Point::origin(2), &samples).unwrap();
    assert!(r.potential_residual < 1e-6 && r.pullback_residual < 1e-6 && r.image_ok, "{r:?}");
    assert!((r.c_squared - 2.0 / 3.0).abs() < 1e-10 && r.hypothesis_holds);

    let disc = KernelSeries::build(&DomainSpec::disc(), 80).unwrap();
    let s: Vec<Point> = (1..10).map(|k| Point::new(vec![C64::from_polar(0.05 * k as f64, k as f64)])).collect();
    let r = disc.isometry_residual(&Point::origin(1), &s).unwrap();
    assert!(r.potential_residual < 1e-8 && r.pullback_residual < 1e-8, "{r:?}");
    assert!((r.c_squared - 1.0).abs() < 1e-12);

    let poly = KernelSeries::build(&DomainSpec::polydisc(2).unwrap(), 40).unwrap();
    let r = poly.isometry_residual(&Point::origin(2), &[Point::real(&[0.3, 0.0])]).unwrap();
    assert!(r.pullback_residual > 0.01 && !r.hypothesis_holds, "{r:?}");
}

#[test]
fn dilation_and_unitary_covariance() {
    let r = 0.5;
    for spec in [DomainSpec::disc(), DomainSpec::ball(2).unwrap()] {
        let base = KernelSeries::build(&spec, 40).unwrap();
        let small = KernelSeries::build(&spec.dilated(r).unwrap(), 40).unwrap();
        let n = spec.dim();
        for z in spec.sample_interior(5, 4).unwrap() {
            let z = if z.norm() > 0.5 { z.scaled(0.5 / z.norm()) } else { z };
            let g = base.metric_at(&z).unwrap();
            let gs = small.metric_at(&z.scaled(r)).unwrap();
            assert!(gs.distance(&g.scale(1.0 / (r * r))) < 1e-8 * g.max_abs() / (r * r));
            for v in fan::mixed(n, 4, 2) {
                let a = base.hsc_at(&z, &v).unwrap();
                let b = small.hsc_at(&z.scaled(r), &v).unwrap();
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
    let ball = KernelSeries::build(&DomainSpec::ball(2).unwrap(), 30).unwrap();
    let (ct, st) = (0.6, 0.8);
    let u = [c(ct, 0.0), c(0.0, -st), c(0.0, -st), c(ct, 0.0)];
    let apply = |x: &[C64]| vec![u[0] * x[0] + u[1] * x[1], u[2] * x[0] + u[3] * x[1]];
    let z = Point::new(vec![c(0.2, 0.1), c(-0.3, 0.05)]);
    let uz = Point::new(apply(&z));
    for v in fan::mixed(2, 6, 3) {
        let uv = Direction::new(apply(&v)).unwrap();
        let a = ball.hsc_at(&z, &v).unwrap();
        let b = ball.hsc_at(&uz, &uv).unwrap();
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn truncation_monotonicity() {
    let spec = DomainSpec::annulus(0.5).unwrap();
    let z = [c(0.6, 0.3)];
    let mut last = 0.0;
    for d in 2..12 {
        let k = KernelSeries::build(&spec, d).unwrap().kernel(&z, &z).unwrap().re;
        assert!(k >= last);
        last = k;
    }
}
