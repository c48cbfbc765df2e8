mod common;

use std::f64::consts::PI;

use eyring_core::eyring_kramers::{general_spectrum, interaction_model, predict, prefactor};
use eyring_core::graded::{graded_spectrum, resolvent_gap_check, GradedMatrix};
use eyring_core::linalg::Matrix;
use eyring_core::operator::{gallery, GalleryParams};
use eyring_core::LogScaled;
use num_complex::Complex64;

// x⁴/4 − x²/2 plus a tilt whose derivative (x³ − x)² vanishes to second
// order at −1, 0, 1, so f″ stays 2, −1, 2 while the wells become unequal.
const TILTED: &str = "x1^4/4 - x1^2/2 + 0.1*(x1^7/7 - 2*x1^5/5 + x1^3/3)";

fn shallow(lab: &eyring_core::landscape::Labeling) -> usize {
    (0..lab.minima.len()).find(|&m| m != lab.bottom()).unwrap()
}

#[test]
fn witten_prefactor_is_sqrt2_over_pi() {
    let spec = common::witten(TILTED, -1.6, 1.6);
    let ls = common::landscape(&spec, 1601, 40).unwrap();
    let m = shallow(&ls.labeling);
    assert!((ls.labeling.minima[m].x[0] - 1.0).abs() < 1e-8);
    let z = prefactor(&ls.labeling, &ls.analysis, m).unwrap();
    assert!((z - 2f64.sqrt() / PI).abs() < 1e-6, "z = {z}");
    let s = ls.labeling.records[m].depth;
    assert!((s - (0.25 - 0.1 * (1.0 / 7.0 - 0.4 + 1.0 / 3.0))).abs() < 1e-9);
}

#[test]
fn kfp_prefactor_uses_mu() {
    let p = GalleryParams {
        dim: Some(1),
        potential: Some(format!("2*({TILTED})")),
        gamma: Some(3.0),
        lo: Some(vec![-1.6, -4.0]),
        hi: Some(vec![1.6, 4.0]),
        ..Default::default()
    };
    let spec = gallery("kfp", &p).unwrap();
    let ls = common::landscape(&spec, 161, 60).unwrap();
    assert_eq!(ls.labeling.minima.len(), 2);
    let m = shallow(&ls.labeling);
    // det H(m) = 1, det H(s) = −1/2, |μ| = (√17 − 3)/2
    let mu = (17f64.sqrt() - 3.0) / 2.0;
    let want = mu / (2.0 * PI) / 0.5f64.sqrt();
    let z = prefactor(&ls.labeling, &ls.analysis, m).unwrap();
    assert!((z - want).abs() < 1e-6, "z = {z}, want {want}");
}

const TRIPLE: &str = "0.3*x1^2 - exp(-(x1 + 1.5)^2/0.15) - 1.3*exp(-x1^2/0.15) - 0.8*exp(-(x1 - 1.5)^2/0.15)";

#[test]
fn interaction_model_on_triple_well() {
    let spec = common::witten(TRIPLE, -3.0, 3.0);
    let ls = common::landscape(&spec, 1201, 80).unwrap();
    let model = interaction_model(&ls.labeling, &ls.analysis).unwrap();
    assert_eq!(model.m0.rows(), 2);
    assert!(model.factor_residual() <= 1e-14 * model.m0.norm_fro());
    for i in 0..2 {
        let z = prefactor(&ls.labeling, &ls.analysis, i).unwrap();
        assert!((model.m0[(i, i)] - z).abs() <= 1e-12 * z);
    }
    for h in [0.05, 0.1] {
        let general = general_spectrum(&model, h).unwrap();
        let mut direct: Vec<LogScaled> = predict(&ls.labeling, &ls.analysis, &[h])
            .unwrap()
            .into_iter()
            .map(|r| r.value)
            .collect();
        direct.sort_by(|a, b| a.cmp_value(b));
        assert_eq!(general.len(), direct.len());
        for (g, d) in general.iter().zip(&direct) {
            if d.is_zero() {
                assert!(g.value.is_zero());
            } else {
                assert!((g.value.log_mag - d.log_mag).abs() < 1e-12);
            }
        }
    }
}

fn sym2_eigs(a: f64, b: f64, d: f64) -> (f64, f64) {
    let m = (a + d) / 2.0;
    let r = (((a - d) / 2.0).powi(2) + b * b).sqrt();
    // small root from the product to avoid cancellation
    let big = m + r;
    ((a * d - b * b) / big, big)
}

#[test]
fn graded_two_by_two_against_closed_form() {
    let tau = 1e-3;
    let core = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]]);
    let g = GradedMatrix::new(vec![1, 1], vec![LogScaled::from_f64(tau)], core).unwrap();
    let (small, big) = sym2_eigs(2.0, tau, tau * tau);
    assert!((big - 2.0000005).abs() < 1e-9 && (small - 5.0e-7).abs() < 1e-12);
    let lv = graded_spectrum(&g).unwrap();
    let pred_big = lv[0].scaled_eigenvalues()[0].to_f64().unwrap();
    let pred_small = lv[1].scaled_eigenvalues()[0].to_f64().unwrap();
    assert!((pred_big - big).abs() / big <= tau * tau);
    assert!((pred_small - small).abs() / small <= 2.0 * tau * tau);
}

#[test]
fn resolvent_between_clusters() {
    let tau = 1e-3;
    let core = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]]);
    let g = GradedMatrix::new(vec![1, 1], vec![LogScaled::from_f64(tau)], core).unwrap();
    // geometric midpoint of the two clusters, on and off the real axis
    let z = [Complex64::new(1e-3, 0.0), Complex64::new(1e-3, 1e-3), Complex64::new(0.0, 1e-9)];
    let rep = resolvent_gap_check(&g, &z).unwrap();
    assert_eq!(rep.samples.len(), 3);
    // symmetric, hence normal: the product is exactly one
    for s in &rep.samples {
        assert!((s.product - 1.0).abs() < 1e-6, "{s:?}");
    }
    assert!(rep.cluster_separations.iter().all(|&c| c > 0.99));
}
