//! Critical points of f, the sublevel merge structure, and the labeling of
//! minima by separating saddles.

mod label;
mod merge;

pub use label::{
    check_gener, label, ComponentId, GenerReport, Labeling, MinimumKind, MinimumRecord,
    SaddleRef, SublevelComponent,
};
pub use merge::{merge_tree, merge_tree_with, MergeEvent, MergeStructure};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{Domain, SmoothMap};
use crate::linalg::{symmetric_eigen, Lu, Matrix};

/// Tolerances shared by the landscape routines.
#[derive(Clone, Debug)]
pub struct LandscapeTolerances {
    /// ‖∇f‖ accepted as zero
    pub newton_tol: f64,
    /// smallest |Hessian eigenvalue| accepted as nonsingular
    pub degeneracy_tol: f64,
    pub max_newton_iter: usize,
}

impl Default for LandscapeTolerances {
    fn default() -> Self {
        LandscapeTolerances {
            newton_tol: 1e-10,
            degeneracy_tol: 1e-8,
            max_newton_iter: 100,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPoint {
    pub x: Vec<f64>,
    pub value: f64,
    /// number of negative Hessian eigenvalues
    pub index: usize,
    #[serde(skip)]
    pub hessian: Matrix,
    pub hessian_eigenvalues: Vec<f64>,
}

impl CriticalPoint {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// |det H|^{1/2}
    pub fn det_sqrt(&self) -> f64 {
        self.hessian_eigenvalues.iter().map(|l| l.abs()).product::<f64>().sqrt()
    }
}

/// Build a classified critical point at `x`.
pub fn classify(f: &SmoothMap, x: Vec<f64>, tol: &LandscapeTolerances) -> Result<CriticalPoint> {
    let value = f.value(&x)?;
    let hessian = f.hessian(&x)?;
    let eig = symmetric_eigen(&hessian)?;
    let min_abs = eig.values.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    if min_abs <= tol.degeneracy_tol {
        return Err(Error::Assumption(format!(
            "degenerate critical point at {x:?} (smallest |Hessian eigenvalue| {min_abs:.3e})"
        )));
    }
    let index = eig.values.iter().filter(|&&l| l < 0.0).count();
    Ok(CriticalPoint {
        x,
        value,
        index,
        hessian,
        hessian_eigenvalues: eig.values,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton on ∇f = 0 with ‖∇f‖ as merit function. `None` when it stalls
/// or wanders more than half a box width outside `domain`.
pub fn newton_refine(
    f: &SmoothMap,
    x0: &[f64],
    domain: &Domain,
    tol: &LandscapeTolerances,
) -> Option<Vec<f64>> {
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut g = f.gradient(&x).ok()?;
    let mut gn = norm(&g);
    for _ in 0..tol.max_newton_iter {
        let h = f.hessian(&x).ok()?;
        let lu = Lu::new(&h).ok()?;
        let step: Vec<f64> = if lu.is_singular() {
            h.matvec(&g).iter().map(|v| -v).collect()
        } else {
            lu.solve(&g).ok()?.iter().map(|v| -v).collect()
        };
        // keep iterating past the gradient test until the step is negligible,
        // so slow (degenerate) convergence shows up in the Hessian
        if gn <= tol.newton_tol && norm(&step) <= 1e-12 * (1.0 + norm(&x)) {
            return Some(x);
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + alpha * s).collect();
            if let Ok(gnew) = f.gradient(&xn) {
                let nn = norm(&gnew);
                if nn < (1.0 - 1e-4 * alpha) * gn || nn <= tol.newton_tol {
                    x = xn;
                    g = gnew;
                    gn = nn;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return (gn <= 1e3 * tol.newton_tol).then_some(x);
        }
        for a in 0..d {
            let w = domain.width(a);
            if x[a] < domain.lo[a] - 0.5 * w || x[a] > domain.hi[a] + 0.5 * w {
                return None;
            }
        }
    }
    (gn <= tol.newton_tol).then_some(x)
}

/// Critical points of `f` inside `domain`, from Newton runs seeded on a regular
/// grid of cell centres. Sorted by (index, value, location).
pub fn find_critical_points(
    f: &SmoothMap,
    domain: &Domain,
    seeds_per_axis: usize,
) -> Result<Vec<CriticalPoint>> {
    find_critical_points_with(f, domain, seeds_per_axis, &LandscapeTolerances::default())
}

pub fn find_critical_points_with(
    f: &SmoothMap,
    domain: &Domain,
    seeds_per_axis: usize,
    tol: &LandscapeTolerances,
) -> Result<Vec<CriticalPoint>> {
    let d = domain.dim();
    if f.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: f.dim(),
        });
    }
    if d > 6 {
        return Err(Error::Unsupported("critical point search supports d ≤ 6".into()));
    }
    let k = seeds_per_axis.max(1);
    let total = k.checked_pow(d as u32).unwrap_or(usize::MAX);
    if total > 2_000_000 {
        return Err(Error::InvalidInput(format!("{total} seeds requested")));
    }
    let dedup = 1e-6 * domain.diameter();
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut seed = vec![0.0; d];
    for code in 0..total {
        let mut c = code;
        for a in 0..d {
            let i = c % k;
            c /= k;
            seed[a] = domain.lo[a] + (i as f64 + 0.5) * domain.width(a) / k as f64;
        }
        let Some(x) = newton_refine(f, &seed, domain, tol) else {
            continue;
        };
        if !domain.contains(&x) {
            continue;
        }
        if found.iter().any(|y| dist(y, &x) <= dedup) {
            continue;
        }
        found.push(x);
    }
    if found.is_empty() {
        return Err(Error::Numerical("no critical points found".into()));
    }
    let mut out = found
        .into_iter()
        .map(|x| classify(f, x, tol))
        .collect::<Result<Vec<_>>>()?;
    sort_criticals(&mut out);
    Ok(out)
}

pub(crate) fn sort_criticals(v: &mut [CriticalPoint]) {
    v.sort_by(|a, b| {
        a.index
            .cmp(&b.index)
            .then(a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal))
            .then(lex_cmp(&a.x, &b.x))
    });
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Follow the descending gradient flow from `x0` with steps no longer than
/// `max_step`, then polish with Newton once the Hessian is positive definite.
pub(crate) fn descend(
    f: &SmoothMap,
    x0: &[f64],
    max_step: f64,
    domain: &Domain,
    tol: &LandscapeTolerances,
) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut fx = f.value(&x)?;
    for _ in 0..200_000 {
        let g = f.gradient(&x)?;
        let gn = norm(&g);
        if gn <= tol.newton_tol {
            return Ok(x);
        }
        let h = f.hessian(&x)?;
        let eig = symmetric_eigen(&h)?;
        let lmin = eig.values.first().copied().unwrap_or(0.0);
        let lmax = eig.values.last().copied().unwrap_or(0.0);
        if lmin > 0.0 {
            let lu = Lu::new(&h)?;
            if let Ok(s) = lu.solve(&g) {
                if norm(&s) <= max_step {
                    let xn: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a - b).collect();
                    if let Some(xr) = newton_refine(f, &xn, domain, tol) {
                        let fr = f.value(&xr)?;
                        let hr = f.hessian(&xr)?;
                        let pd = symmetric_eigen(&hr)?.values.first().copied().unwrap_or(0.0) > 0.0;
                        if pd && fr <= fx + 1e-12 * (1.0 + fx.abs()) && dist(&xr, &x) <= 2.0 * max_step {
                            return Ok(xr);
                        }
                    }
                }
            }
        }
        let mut alpha = (max_step / gn).min(if lmax > 0.0 { 1.0 / lmax } else { f64::INFINITY });
        let mut moved = false;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
            let fnew = f.value(&xn)?;
            if fnew <= fx - 1e-4 * alpha * gn * gn {
                x = xn;
                fx = fnew;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            return Ok(x);
        }
        if !domain.contains(&x) {
            return Err(Error::Numerical("descent left the domain".into()));
        }
    }
    Err(Error::Numerical("descent did not reach a minimum".into()))
}
