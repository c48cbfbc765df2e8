#![allow(dead_code)]

use eyring_core::eyring_kramers::{analyze_labeling, LandscapeAnalysis};
use eyring_core::fields::{Domain, SmoothMap};
use eyring_core::landscape::{find_critical_points, label, merge_tree, CriticalPoint, Labeling};
use eyring_core::operator::OperatorSpec;
use eyring_core::Result;
use rand::Rng;

pub struct Landscape {
    pub criticals: Vec<CriticalPoint>,
    pub labeling: Labeling,
    pub analysis: LandscapeAnalysis,
}

/// Critical points, merge tree, labeling and per-point analysis.
pub fn landscape(spec: &OperatorSpec, grid_n: usize, seeds: usize) -> Result<Landscape> {
    let criticals = find_critical_points(&spec.f, &spec.domain, seeds)?;
    let merge = merge_tree(&spec.f, &spec.domain, &[grid_n])?;
    let labeling = label(&merge, &criticals)?;
    let analysis = analyze_labeling(spec, &labeling)?;
    Ok(Landscape {
        criticals,
        labeling,
        analysis,
    })
}

pub fn witten(f: &str, lo: f64, hi: f64) -> OperatorSpec {
    OperatorSpec::from_expressions("witten", Domain::new(vec![lo], vec![hi]).unwrap(), f, &["1"], &["0"]).unwrap()
}

/// 0.3|x|² minus a few random Gaussians.
pub fn gaussian_landscape(rng: &mut impl Rng, d: usize) -> String {
    let vars: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    let mut s = vars.iter().map(|v| format!("0.3*{v}^2")).collect::<Vec<_>>().join(" + ");
    let k = rng.gen_range(3..=5);
    for _ in 0..k {
        let a: f64 = rng.gen_range(0.3..1.0);
        let w: f64 = rng.gen_range(0.3..0.6);
        let r2 = vars
            .iter()
            .map(|v| format!("({v} - {:.4})^2", rng.gen_range(-2.0..2.0)))
            .collect::<Vec<_>>()
            .join(" + ");
        s.push_str(&format!(" - {a:.4}*exp(-({r2})/{:.4})", 2.0 * w * w));
    }
    s
}

/// Sublevel persistence by brute force: vertices in increasing order, union-find
/// with the 8-neighbourhood in 2D, elder rule at every merge. Spurious grid
/// minima on slopes show a gradient far above ‖H‖Δx and are dropped by callers.
pub struct FloodOracle {
    pub minima: Vec<Vec<f64>>,
    pub min_values: Vec<f64>,
    /// centred-difference gradient norm at each grid minimum
    pub min_gradient: Vec<f64>,
    /// S(m); infinite for the survivor
    pub depth: Vec<f64>,
    /// where the component of m merged into an older one
    pub death: Vec<Option<Vec<f64>>>,
    /// largest second difference, a bound for grid errors in critical values
    pub value_tol: f64,
    pub spacing: f64,
}

fn find(p: &mut [usize], mut i: usize) -> usize {
    while p[i] != i {
        p[i] = p[p[i]];
        i = p[i];
    }
    i
}

pub fn flood_oracle(f: &SmoothMap, domain: &Domain, n: usize) -> FloodOracle {
    let d = domain.dim();
    assert!(d == 1 || d == 2);
    let h: Vec<f64> = (0..d).map(|a| domain.width(a) / (n - 1) as f64).collect();
    let total = n.pow(d as u32);
    let point = |g: usize| -> Vec<f64> {
        if d == 1 {
            vec![domain.lo[0] + g as f64 * h[0]]
        } else {
            vec![domain.lo[0] + (g / n) as f64 * h[0], domain.lo[1] + (g % n) as f64 * h[1]]
        }
    };
    let vals: Vec<f64> = (0..total).map(|g| f.eval_scalar_raw(&point(g))).collect();
    let nbrs = |g: usize| -> Vec<usize> {
        let mut out = Vec::new();
        if d == 1 {
            if g > 0 {
                out.push(g - 1);
            }
            if g + 1 < n {
                out.push(g + 1);
            }
        } else {
            let (i, j) = ((g / n) as isize, (g % n) as isize);
            for di in -1..=1isize {
                for dj in -1..=1isize {
                    let (a, b) = (i + di, j + dj);
                    if (di, dj) != (0, 0) && a >= 0 && b >= 0 && (a as usize) < n && (b as usize) < n {
                        out.push(a as usize * n + b as usize);
                    }
                }
            }
        }
        out
    };
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let mut parent: Vec<usize> = (0..total).collect();
    let low: Vec<usize> = (0..total).collect();
    let mut seen = vec![false; total];
    let mut out = FloodOracle {
        minima: vec![],
        min_values: vec![],
        min_gradient: vec![],
        depth: vec![],
        death: vec![],
        value_tol: 0.0,
        spacing: h.iter().cloned().fold(0.0, f64::max),
    };
    let mut id_of = std::collections::HashMap::new();
    for &v in &order {
        seen[v] = true;
        let roots: Vec<usize> = {
            let mut r: Vec<usize> = nbrs(v).into_iter().filter(|&u| seen[u]).map(|u| find(&mut parent, u)).collect();
            r.sort();
            r.dedup();
            r
        };
        if roots.is_empty() {
            id_of.insert(v, out.minima.len());
            out.minima.push(point(v));
            out.min_values.push(vals[v]);
            out.depth.push(f64::INFINITY);
            out.death.push(None);
            continue;
        }
        let mut rs = roots.clone();
        rs.sort_by(|&a, &b| vals[low[a]].total_cmp(&vals[low[b]]));
        let keep = rs[0];
        for &r in &rs[1..] {
            let m = id_of[&low[r]];
            out.depth[m] = vals[v] - vals[low[r]];
            out.death[m] = Some(point(v));
            parent[r] = keep;
        }
        parent[v] = keep;
    }
    let at = |i: isize, j: isize| -> Option<f64> {
        let ok = |k: isize| k >= 0 && (k as usize) < n;
        if d == 1 {
            ok(i).then(|| vals[i as usize])
        } else {
            (ok(i) && ok(j)).then(|| vals[i as usize * n + j as usize])
        }
    };
    for g in 0..total {
        let (i, j) = if d == 1 { (g as isize, 0) } else { ((g / n) as isize, (g % n) as isize) };
        let c = vals[g];
        let mut diffs = vec![(at(i - 1, j), at(i + 1, j))];
        if d == 2 {
            diffs.push((at(i, j - 1), at(i, j + 1)));
        }
        for (a, b) in diffs {
            if let (Some(a), Some(b)) = (a, b) {
                out.value_tol = out.value_tol.max((a - 2.0 * c + b).abs());
            }
        }
        if d == 2 {
            if let (Some(a), Some(b), Some(e)) = (at(i + 1, j + 1), at(i + 1, j), at(i, j + 1)) {
                out.value_tol = out.value_tol.max((a - b - e + c).abs());
            }
        }
    }
    for m in &out.minima {
        let g: f64 = (0..d)
            .map(|a| {
                let mut p = m.clone();
                let mut q = m.clone();
                p[a] += h[a];
                q[a] -= h[a];
                let v = (f.eval_scalar_raw(&p) - f.eval_scalar_raw(&q)) / (2.0 * h[a]);
                v * v
            })
            .sum::<f64>()
            .sqrt();
        out.min_gradient.push(g);
    }
    out
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
