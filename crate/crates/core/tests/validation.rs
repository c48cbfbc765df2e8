mod common;

use eyring_core::eyring_kramers::predict;
use eyring_core::grid::Grid;
use eyring_core::linalg::eigenvalues;
use eyring_core::operator::{gallery, GalleryParams};
use eyring_core::validate::{
    default_f_cut, discretize, semigroup_check, small_eigs, small_eigs_matrix, validate_spectrum,
    DiscretizeOptions, EigenMethod, PotentialRule, SemigroupOptions,
};

const WELL: &str = "x1^4/4 - x1^2/2 + x1/10";

fn continuum_residual(n: usize, h: f64) -> f64 {
    let spec = common::witten(WELL, -2.5, 2.5);
    let grid = Grid::uniform(spec.domain.clone(), n).unwrap();
    let opt = DiscretizeOptions {
        rule: PotentialRule::Continuum,
        ..Default::default()
    };
    discretize(&spec, &grid, h, &opt).unwrap().gibbs_residual()
}

#[test]
fn continuum_rule_residual_is_second_order() {
    let coarse = continuum_residual(1001, 0.1);
    let fine = continuum_residual(2001, 0.1);
    assert!(fine <= 1e-4, "residual {fine:e}");
    let ratio = coarse / fine;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn gibbs_rule_kernel_and_gap() {
    let spec = common::witten(WELL, -2.5, 2.5);
    let grid = Grid::uniform(spec.domain.clone(), 2001).unwrap();
    let mut gaps = Vec::new();
    for h in [0.05, 0.1, 0.15, 0.2] {
        let op = discretize(&spec, &grid, h, &DiscretizeOptions::default()).unwrap();
        let e = small_eigs(&op, 2).unwrap();
        assert_eq!(e.method, EigenMethod::Tridiagonal);
        assert!(e.values[0].norm() <= 1e-10, "λ₁ = {}", e.values[0]);
        let gap = e.gap.unwrap();
        assert!(e.values[1].re > 0.0 && e.values[1].im == 0.0);
        // n₀ = 2 eigenvalues well below the gap
        assert!(e.values[1].re < 0.1 * gap.re, "h = {h}");
        gaps.push(gap.re / h);
    }
    let (lo, hi) = gaps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &g| (a.min(g), b.max(g)));
    assert!(hi / lo < 1.3, "gap/h = {gaps:?}");
}

#[test]
fn semigroup_rate_matches_spectrum() {
    let spec = common::witten(WELL, -2.5, 2.5);
    let ls = common::landscape(&spec, 1001, 40).unwrap();
    let h = 0.2;
    let grid = Grid::uniform(spec.domain.clone(), 801).unwrap();
    let opt = DiscretizeOptions {
        f_cut: Some(default_f_cut(&ls.labeling, h)),
        ..Default::default()
    };
    let op = discretize(&spec, &grid, h, &opt).unwrap();
    let u0 = op.sample(|x| if x[0] < 0.0 { 1.0 } else { 0.0 });
    let rep = semigroup_check(&op, &u0, &[], &SemigroupOptions::default()).unwrap();
    let fit = &rep.relaxation;
    assert!(fit.predicted_rate.is_none());
    assert!(fit.relative_error < 0.05, "{fit:?}");
    let d = &rep.distances;
    assert!(d.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
}

#[test]
fn nonsymmetric_shift_invert_against_dense() {
    let spec = gallery("nonreversible", &GalleryParams::default()).unwrap();
    let grid = Grid::uniform(spec.domain.clone(), 31).unwrap();
    let op = discretize(&spec, &grid, 0.5, &DiscretizeOptions::default()).unwrap();
    assert!(!op.symmetric && op.len() > 600);
    let got = small_eigs_matrix(&op.matrix, 3, false, 0.005).unwrap();
    assert_eq!(got.method, EigenMethod::ShiftInvert);
    assert!(got.converged);
    let mut all = eigenvalues(&op.matrix.to_dense()).unwrap();
    all.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let scale = all.last().unwrap().norm();
    for (g, w) in got.values.iter().zip(&all) {
        assert!((g - w).norm() <= 1e-9 * scale, "{g} vs {w}");
    }
}

#[test]
fn nonreversible_eyring_kramers_ratio() {
    let spec = gallery("nonreversible", &GalleryParams::default()).unwrap();
    let ls = common::landscape(&spec, 101, 40).unwrap();
    let h = 0.2;
    let preds = predict(&ls.labeling, &ls.analysis, &[h]).unwrap();
    let n = ((spec.domain.width(0) / 0.04).ceil() as usize) + 1;
    let grid = Grid::uniform(spec.domain.clone(), n).unwrap();
    let rep = validate_spectrum(&spec, &ls.labeling, &preds, &grid, h, PotentialRule::GibbsConsistent).unwrap();
    assert_eq!(rep.method, EigenMethod::ShiftInvert);
    for row in &rep.rows {
        assert!((0.75..=1.25).contains(&row.ratio), "{row:?}");
    }
}
