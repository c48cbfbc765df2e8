mod common;

use eyring_core::landscape::{check_gener, merge_tree, MinimumKind};

#[test]
fn tilted_double_well_merge_level() {
    let spec = common::witten("x1^4/4 - x1^2/2 + x1/10", -2.0, 2.0);
    let ls = common::landscape(&spec, 2001, 60).unwrap();
    let lab = &ls.labeling;
    assert_eq!(lab.saddles.len(), 1);
    let s = &lab.saddles[0];
    assert!(s.x[0].abs() < 0.2);
    // flood fill on a 10× finer grid
    let o = common::flood_oracle(&spec.f, &spec.domain, 20001);
    let level = o.depth.iter().zip(&o.min_values).find(|(d, _)| d.is_finite()).map(|(d, v)| d + v).unwrap();
    assert!((level - s.value).abs() < 1e-4);
    // deeper well is the bottom; S from refined values
    let m2 = &lab.minima[0];
    assert!(m2.x[0] > 0.0 && lab.minima[1].x[0] < 0.0);
    assert_eq!(lab.records[1].kind, MinimumKind::Bottom);
    assert!((lab.records[0].depth - (s.value - m2.value)).abs() < 1e-14);
    assert!(check_gener(lab, &ls.criticals).pass);
}

const TRIPLE: &str = "0.3*x1^2 - exp(-(x1 + 1.5)^2/0.15) - 1.3*exp(-x1^2/0.15) - 0.8*exp(-(x1 - 1.5)^2/0.15)";

#[test]
fn triple_well_two_saddles_ordered() {
    let spec = common::witten(TRIPLE, -3.0, 3.0);
    let ls = common::landscape(&spec, 1201, 80).unwrap();
    let lab = &ls.labeling;
    assert_eq!(lab.minima.len(), 3);
    assert_eq!(lab.saddles.len(), 2);
    assert!(lab.levels.windows(2).all(|w| w[0] > w[1]));
    let depths: Vec<f64> = lab.records.iter().map(|r| r.depth).collect();
    assert!(depths.windows(2).all(|w| w[0] <= w[1]));
    assert!(depths[2].is_infinite());
}

#[test]
fn equal_saddles_give_singleton_classes() {
    // symmetric outer wells around a deeper centre
    let spec = common::witten(
        "0.3*x1^2 - exp(-(x1 + 1.5)^2/0.15) - 1.3*exp(-x1^2/0.15) - exp(-(x1 - 1.5)^2/0.15)",
        -3.0,
        3.0,
    );
    let ls = common::landscape(&spec, 1201, 80).unwrap();
    let lab = &ls.labeling;
    assert_eq!(lab.saddles.len(), 2);
    assert_eq!(lab.levels.len(), 1, "both saddles sit at one level");
    assert!((lab.records[0].depth - lab.records[1].depth).abs() <= lab.tie_tol);
    let mut classes = lab.classes.clone();
    classes.iter_mut().for_each(|c| c.sort());
    classes.sort();
    assert_eq!(classes, vec![vec![0], vec![1], vec![2]]);
    assert!(lab.records.iter().all(|r| r.kind != MinimumKind::TypeII));
}

#[test]
fn merge_tree_two_dimensional_double_well() {
    let spec = eyring_core::operator::gallery("witten", &eyring_core::operator::GalleryParams {
        dim: Some(2),
        ..Default::default()
    })
    .unwrap();
    let m = merge_tree(&spec.f, &spec.domain, &[101]).unwrap();
    assert_eq!(m.minima.len(), 2);
    assert_eq!(m.events.len(), 1);
    let s = &m.saddles[m.events[0].saddle];
    assert_eq!(s.index, 1);
    assert!(s.x.iter().all(|v| v.abs() < 0.2));
}
