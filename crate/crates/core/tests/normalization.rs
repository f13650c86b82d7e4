mod common;

use std::f64::consts::PI;

use densecell::analytic::{pdf_distance, pdf_distance_los};
use densecell::{Branch, Preset, Scenario};

/// Breakpoints of the serving-distance densities on `[0, r_max]`.
pub fn pdf_breaks(sc: &Scenario, lambda: f64) -> Vec<f64> {
    let r_max = (60.0 / (PI * lambda)).sqrt() + sc.splits().last().copied().unwrap_or(0.0);
    let mut pts = vec![0.0, r_max];
    for &d in sc.splits() {
        pts.push(d);
        for from in Branch::BOTH {
            if let Ok(x) = sc.path_loss().equal_loss_radius(d, from) {
                pts.push(x);
            }
        }
    }
    pts.retain(|&x| x.is_finite() && (0.0..=r_max).contains(&x));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

pub fn total_mass(sc: &Scenario, lambda: f64) -> f64 {
    let pts = pdf_breaks(sc, lambda);
    common::gl_pieces(|r| if r > 0.0 { pdf_distance(sc, lambda, r).unwrap().total() } else { 0.0 }, &pts, 200)
}

#[test]
fn every_preset_integrates_to_one() {
    for preset in Preset::ALL {
        let sc = preset.scenario();
        for &lambda in &[1.0, 10.0, 100.0, 1000.0] {
            let m = total_mass(&sc, lambda);
            assert!((m - 1.0).abs() <= 1e-4, "{preset} λ={lambda}: {m}");
        }
    }
}

#[test]
fn los_share_grows_with_density() {
    let sc = Preset::Case1.scenario();
    let share = |lambda: f64| {
        let pts = pdf_breaks(&sc, lambda);
        common::gl_pieces(|r| if r > 0.0 { pdf_distance_los(&sc, lambda, r).unwrap() } else { 0.0 }, &pts, 200)
    };
    let (a, b, c) = (share(1.0), share(10.0), share(1000.0));
    assert!(a < b && b < c, "{a} {b} {c}");
    assert!(c > 0.95);
}

#[test]
fn single_slope_has_no_los_mass() {
    let sc = Preset::SingleSlope.scenario();
    for &r in &[1e-3, 0.1, 0.3, 2.0] {
        assert_eq!(pdf_distance_los(&sc, 50.0, r).unwrap(), 0.0);
    }
    // Nearest-neighbour law 2πλr e^{-πλr²}
    let r = 0.05;
    let want = 2.0 * PI * 50.0 * r * (-PI * 50.0 * r * r).exp();
    let got = pdf_distance(&sc, 50.0, r).unwrap().total();
    assert!((got - want).abs() < 1e-12 * want);
}
