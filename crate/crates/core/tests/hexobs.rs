use std::collections::BTreeMap;

use num_rational::BigRational;
use sawlab_core::hexobs::*;
use sawlab_core::lattice::{strip_domain, HexDomain, HexVertex, MidEdge};
use sawlab_core::walks::EngineConfig;

fn cfg() -> EngineConfig {
    EngineConfig::default()
}

fn r(s: &str) -> BigRational {
    s.parse().unwrap()
}

fn v(c: i32, r: i32) -> HexVertex {
    HexVertex::new(c, r)
}

fn hexagon() -> (HexDomain, MidEdge) {
    let d = HexDomain::hexagon(1, 0);
    (d, MidEdge::from_vertex(v(1, 0), 4))
}

fn edge_between(a: HexVertex, b: HexVertex) -> MidEdge {
    let (_, d) = a.neighbours().into_iter().find(|(w, _)| *w == b).unwrap();
    MidEdge::from_vertex(a, d)
}

/// Walks around the single hexagon, listed by hand: entering at R(1,0) and
/// going round in either sense, a walk through k cycle vertices either stops
/// on the next cycle edge (winding s(2-k)) or leaves through the outer edge of
/// its last vertex (winding s(4-k), k >= 2).
fn hand_walks() -> Vec<(MidEdge, i32, u32)> {
    let (dom, a) = hexagon();
    let mut out = vec![(a, 0, 0)];
    let plus = [v(1, 0), v(1, 1), v(1, 2), v(2, 2), v(2, 1), v(2, 0)];
    let minus = [v(1, 0), v(2, 0), v(2, 1), v(2, 2), v(1, 2), v(1, 1)];
    for (s, path) in [(1, plus), (-1, minus)] {
        for k in 1..=6usize {
            let e = edge_between(path[k - 1], path[k % 6]);
            out.push((e, s * (2 - k as i32), k as u32));
            if k >= 2 {
                let last = path[k - 1];
                let (_, d) = last
                    .neighbours()
                    .into_iter()
                    .find(|(w, _)| !dom.contains(w))
                    .unwrap();
                out.push((MidEdge::from_vertex(last, d), s * (4 - k as i32), k as u32));
            }
        }
    }
    out
}

#[test]
fn single_hexagon_by_hand() {
    let (dom, a) = hexagon();
    let tally = enumerate_observable(&dom, a, &cfg()).unwrap();
    let mut want: BTreeMap<MidEdge, BTreeMap<(i32, u32), u64>> = BTreeMap::new();
    for (e, w, l) in hand_walks() {
        *want.entry(e).or_default().entry((w, l)).or_insert(0) += 1;
    }
    assert_eq!(tally.by_edge, want);
    assert_eq!(want.len(), 12);
    let zc: f64 = critical_z(53);
    let f = observable(&dom, a, &HexZ::critical(), &critical_sigma(), 53, &cfg()).unwrap();
    assert_eq!(f.len(), 12);
    for (x, val) in &f {
        let (mut re, mut im) = (0.0, 0.0);
        for (e, w, l) in hand_walks() {
            if e == *x {
                let ph = -5.0 / 8.0 * w as f64 * std::f64::consts::PI / 3.0;
                re += ph.cos() * zc.powi(l as i32);
                im += ph.sin() * zc.powi(l as i32);
            }
        }
        assert!((val.re_f64 - re).abs() < 1e-14 && (val.im_f64 - im).abs() < 1e-14, "{x:?}");
    }
    assert_eq!(f[&a].re_f64, 1.0);
}

#[test]
fn vertex_identity_single_hexagon() {
    let (dom, a) = hexagon();
    let rep = vertex_identity_check(&dom, a, &HexZ::critical(), &critical_sigma(), 53, &cfg()).unwrap();
    assert!(rep.max_residual < 1e-12, "{rep:?}");
    assert_eq!(rep.vertices, 6);
}

#[test]
fn vertex_identity_negative_controls() {
    let (dom, a) = hexagon();
    let strip = strip_domain(2, 2);
    for (d, s) in [(&dom, a), (&strip.domain, strip.start)] {
        let off_z = vertex_identity_check(d, s, &HexZ::scaled_critical(r("9/10")), &critical_sigma(), 106, &cfg()).unwrap();
        assert!(off_z.max_residual > 1e-3, "{off_z:?}");
        let off_s = vertex_identity_check(d, s, &HexZ::critical(), &r("1/2"), 106, &cfg()).unwrap();
        assert!(off_s.max_residual > 1e-3, "{off_s:?}");
    }
}

#[test]
fn vertex_identity_strips_and_precision() {
    for (t, l) in [(1, 1), (2, 2), (3, 2)] {
        let strip = strip_domain(t, l);
        let tally = enumerate_observable(&strip.domain, strip.start, &cfg()).unwrap();
        let z = HexZ::critical();
        let lo = vertex_report(&strip.domain, &tally, &z, &critical_sigma(), 53);
        let mid = vertex_report(&strip.domain, &tally, &z, &critical_sigma(), 106);
        let hi = vertex_report(&strip.domain, &tally, &z, &critical_sigma(), 212);
        assert!(lo.max_residual < 1e-12, "{lo:?}");
        assert!(mid.max_residual < 1e-28 && mid.max_residual <= lo.max_residual, "{mid:?}");
        assert!(hi.max_residual < 1e-60 && hi.max_residual <= mid.max_residual, "{hi:?}");
    }
}

#[test]
fn strip_identity_small() {
    for (t, l) in [(1, 1), (2, 1), (2, 2), (2, 3)] {
        for bits in [53, 106] {
            let rep = strip_identity_check(t, l, bits, &cfg()).unwrap();
            assert!(rep.residual < 1e-10, "{rep:?}");
            assert!(rep.windings_ok, "{:?}", rep.windings);
        }
    }
    let rep = strip_identity_check(3, 3, 106, &cfg()).unwrap();
    assert!(rep.residual < 1e-28);
}

#[test]
fn strip_one_by_one_closed_form() {
    // Two walks, to the top and bottom exits of L(0,0); one to each β edge.
    let p = strip_polynomials(1, 1, &cfg()).unwrap();
    let zc: f64 = critical_z(53);
    let s = p.sums(&HexZ::critical(), 53);
    assert_eq!(s.a_f64, 0.0);
    assert!((s.b_f64 - 2.0 * zc * zc).abs() < 1e-15);
    assert!((s.e_f64 - s.b_f64).abs() < 1e-15);
}

#[test]
fn strip_windings_exhaustive() {
    let strip = strip_domain(2, 2);
    let walks = list_mid_edge_walks(&strip.domain, strip.start).unwrap();
    for w in &walks {
        let x = *w.mid_edges.last().unwrap();
        if x == strip.start {
            continue;
        }
        let want = match strip.part_of(&x) {
            Some(sawlab_core::lattice::BoundaryPart::Beta) => vec![0],
            Some(sawlab_core::lattice::BoundaryPart::Eps) => vec![2],
            Some(sawlab_core::lattice::BoundaryPart::EpsBar) => vec![-2],
            Some(sawlab_core::lattice::BoundaryPart::Alpha) => vec![-3, 3],
            None => continue,
        };
        assert!(want.contains(&w.winding()), "{w:?}");
    }
}

#[test]
fn strip_sums_monotone_in_l() {
    for t in 1..=3u32 {
        for z in [HexZ::critical(), HexZ::scaled_critical(r("1/2"))] {
            let sums: Vec<_> = (1..=4)
                .map(|l| strip_sums(t, l, &z, 106, &cfg()).unwrap())
                .collect();
            for w in sums.windows(2) {
                assert!(w[1].a_f64 >= w[0].a_f64 && w[1].b_f64 >= w[0].b_f64, "T={t}");
            }
            for s in &sums {
                assert!(s.b_f64 > 0.0 && s.e_f64 > 0.0);
                assert_eq!(s.a_f64 > 0.0, s.l >= 2);
            }
            if z == HexZ::critical() {
                assert!(sums.windows(2).all(|w| w[1].e_f64 <= w[0].e_f64));
            }
        }
    }
}

#[test]
fn bridge_sum_scaling() {
    for (t, l) in [(1, 3), (2, 2), (3, 2)] {
        let p = strip_polynomials(t, l, &cfg()).unwrap();
        let at = p.sums(&HexZ::critical(), 106).b_f64;
        let half = p.sums(&HexZ::scaled_critical(r("1/2")), 106).b_f64;
        assert!(half <= 0.5f64.powi(t as i32) * at, "T={t}");
    }
}

#[test]
fn recursion_brackets() {
    let rep = strip_recursion_check(&[12, 8, 5], &cfg()).unwrap();
    assert!(rep.nested);
    assert_eq!(rep.steps[0].verdict, RecursionVerdict::Holds, "{:?}", rep.steps[0]);
    assert!(rep.steps.iter().all(|s| s.verdict != RecursionVerdict::Violated));
    let (ca, _) = strip_coefficients::<f64>(53);
    for br in &rep.brackets {
        let last = br.a.len() - 1;
        assert!(ca * br.a[last].lower + br.b[last].lower <= 1.0 + 1e-12);
        assert!(br.a[last].lower <= br.a[last].upper && br.b[last].lower <= br.b[last].upper);
    }
}

#[test]
fn boundary_identity_other_domains() {
    let mut blob = HexDomain::hexagon(1, 0).vertices;
    blob.extend(HexDomain::hexagon(2, 1).vertices);
    blob.extend(HexDomain::hexagon(1, 2).vertices);
    blob.extend(HexDomain::hexagon(3, 0).vertices);
    let blob = HexDomain::new(blob);
    assert!(blob.is_simply_connected());
    let trapezoid = HexDomain::new((0..4).flat_map(|c| (-c..=c + 2).map(move |r| v(c, r))));
    assert!(trapezoid.is_simply_connected());
    for d in [blob, trapezoid, strip_domain(3, 2).domain] {
        for a in d.boundary().into_iter().step_by(3) {
            let rep = boundary_identity_check(&d, a, 106, &cfg()).unwrap();
            assert!(rep.max_residual < 1e-28, "{a:?}: {rep:?}");
            let vert = vertex_identity_check(&d, a, &HexZ::critical(), &critical_sigma(), 106, &cfg()).unwrap();
            assert!(vert.max_residual < 1e-28);
        }
    }
}

#[test]
fn triangle_inequality_and_raw_counts() {
    let strip = strip_domain(2, 2);
    let f = observable(&strip.domain, strip.start, &HexZ::critical(), &critical_sigma(), 106, &cfg()).unwrap();
    for val in f.values() {
        assert!(val.re_f64.hypot(val.im_f64) <= val.unsigned * (1.0 + 1e-15));
    }
    let raw = observable(&strip.domain, strip.start, &HexZ::rational(r("1")), &r("0"), 53, &cfg()).unwrap();
    for val in raw.values() {
        assert_eq!(val.re_f64, val.walks as f64);
        assert_eq!(val.im_f64, 0.0);
    }
}

#[test]
fn phases_factorise_and_windings_add() {
    let strip = strip_domain(2, 2);
    let walks = list_mid_edge_walks(&strip.domain, strip.start).unwrap();
    let sigma = 5.0 / 8.0;
    let lam = (-sigma * std::f64::consts::PI / 3.0).sin_cos();
    for w in &walks {
        let (mut re, mut im) = (1.0f64, 0.0f64);
        for &t in &w.turns {
            let (s, c) = (lam.0 * t as f64, lam.1);
            (re, im) = (re * c - im * s, re * s + im * c);
        }
        let direct = -sigma * w.winding() as f64 * std::f64::consts::PI / 3.0;
        assert!((re - direct.cos()).abs() < 1e-12 && (im - direct.sin()).abs() < 1e-12);
        // Winding agrees with the change of heading, mod 6.
        let heading = |e: &MidEdge, from: HexVertex| e.direction_from(from).unwrap() as i32;
        if let Some(&last) = w.vertices.last() {
            let first = w.vertices[0];
            let start = (heading(&w.mid_edges[0], first) + 3) % 6;
            let end = heading(w.mid_edges.last().unwrap(), last);
            assert_eq!((end - start).rem_euclid(6), w.winding().rem_euclid(6));
            // Additivity over a split at every intermediate vertex.
            for j in 1..w.turns.len() {
                let head: i32 = w.turns[..j].iter().map(|&t| t as i32).sum();
                let tail: i32 = w.turns[j..].iter().map(|&t| t as i32).sum();
                assert_eq!(head + tail, w.winding());
            }
        }
    }
}

#[test]
fn parallel_enumeration_is_deterministic() {
    let strip = strip_domain(3, 3);
    let base = enumerate_observable(&strip.domain, strip.start, &EngineConfig::with_workers(1)).unwrap();
    for workers in [2, 4] {
        let c = EngineConfig {
            workers,
            split_depth: Some(3),
            node_budget: None,
        };
        assert_eq!(enumerate_observable(&strip.domain, strip.start, &c).unwrap().by_edge, base.by_edge);
    }
}
