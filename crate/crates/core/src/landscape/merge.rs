use serde::Serialize;

use super::{classify, dist, newton_refine, CriticalPoint, LandscapeTolerances};
use crate::error::{Error, Result};
use crate::fields::{Domain, SmoothMap};
use crate::grid::Grid;

/// Two sublevel components meeting at a grid vertex.
#[derive(Clone, Debug, Serialize)]
pub struct MergeEvent {
    /// grid value at the merge vertex
    pub level: f64,
    pub vertex: usize,
    pub location: Vec<f64>,
    /// indices into `MergeStructure::minima` of the lowest points of the two components
    pub components: [usize; 2],
    /// index into `MergeStructure::saddles` of the refined saddle
    pub saddle: usize,
}

#[derive(Clone, Debug)]
pub struct MergeStructure {
    pub f: SmoothMap,
    pub grid: Grid,
    pub values: Vec<f64>,
    /// refined minima, one per grid component birth (interior births only)
    pub minima: Vec<CriticalPoint>,
    /// refined saddles, one per merge event
    pub saddles: Vec<CriticalPoint>,
    pub events: Vec<MergeEvent>,
    /// births on the box boundary (f decreasing out of the box)
    pub boundary_births: Vec<Vec<f64>>,
    /// smallest grid value on the box boundary
    pub boundary_min: f64,
    /// values closer than this count as equal
    pub tie_tol: f64,
    pub tolerances: LandscapeTolerances,
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns the new root.
    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        big
    }
}

/// Grid union-find over increasing values of f with the full 3^d − 1 stencil.
/// Every merge of two components is refined by Newton to an index-1 critical
/// point; component births are refined to minima.
pub fn merge_tree(f: &SmoothMap, domain: &Domain, grid_resolution: &[usize]) -> Result<MergeStructure> {
    merge_tree_with(f, domain, grid_resolution, &LandscapeTolerances::default())
}

pub fn merge_tree_with(
    f: &SmoothMap,
    domain: &Domain,
    grid_resolution: &[usize],
    tol: &LandscapeTolerances,
) -> Result<MergeStructure> {
    let d = domain.dim();
    if !(1..=3).contains(&d) {
        return Err(Error::Unsupported(format!("grid labeling supports d ∈ {{1,2,3}}, got {d}")));
    }
    if f.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: f.dim(),
        });
    }
    let res: Vec<usize> = if grid_resolution.len() == 1 {
        vec![grid_resolution[0]; d]
    } else {
        grid_resolution.to_vec()
    };
    let grid = Grid::new(domain.clone(), res)?;
    let values = grid.sample(|x| f.eval_scalar_raw(x));
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("f on the grid".into()));
    }
    let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tie_tol = 1e-9 * (vmax - vmin).max(f64::MIN_POSITIVE);

    let n = grid.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));

    let stencil = grid.stencil();
    let mut uf = UnionFind::new(n);
    let mut active = vec![false; n];
    // lowest vertex of each root
    let mut low = vec![usize::MAX; n];
    let mut births: Vec<usize> = Vec::new();
    let mut birth_of_vertex = std::collections::HashMap::new();
    let mut raw_events: Vec<(usize, usize, usize)> = Vec::new();
    let mut mi = vec![0usize; d];
    let mut boundary_min = f64::INFINITY;

    for &v in &order {
        grid.unflatten(v, &mut mi);
        if grid.on_boundary(&mi) {
            boundary_min = boundary_min.min(values[v]);
        }
        active[v] = true;
        let mut roots: Vec<usize> = Vec::new();
        for off in &stencil {
            if let Some(u) = grid.neighbor(&mi, off) {
                if active[u] {
                    let r = uf.find(u);
                    if !roots.contains(&r) {
                        roots.push(r);
                    }
                }
            }
        }
        if roots.is_empty() {
            low[v] = v;
            birth_of_vertex.insert(v, births.len());
            births.push(v);
            continue;
        }
        roots.sort_by(|&a, &b| {
            values[low[a]].partial_cmp(&values[low[b]]).unwrap().then(low[a].cmp(&low[b]))
        });
        let mut cur = roots[0];
        let cur_low = low[cur];
        let r = uf.union(cur, v);
        low[r] = cur_low;
        cur = r;
        for &other in &roots[1..] {
            raw_events.push((v, low[cur], low[other]));
            let keep = if values[low[cur]] <= values[low[other]] { low[cur] } else { low[other] };
            let r = uf.union(cur, other);
            low[r] = keep;
            cur = r;
        }
    }

    // refine births
    let mut minima: Vec<CriticalPoint> = Vec::new();
    let mut birth_min: Vec<Option<usize>> = vec![None; births.len()];
    let mut boundary_births = Vec::new();
    for (b, &v) in births.iter().enumerate() {
        grid.unflatten(v, &mut mi);
        let x0 = grid.point(v);
        if grid.on_boundary(&mi) {
            boundary_births.push(x0);
            continue;
        }
        let x = newton_refine(f, &x0, domain, tol).ok_or_else(|| {
            Error::Numerical(format!("grid too coarse: minimum refinement diverged near {x0:?}"))
        })?;
        let cp = classify(f, x, tol)?;
        if cp.index != 0 {
            return Err(Error::Numerical(format!(
                "grid too coarse: local grid minimum near {x0:?} refines to an index-{} point",
                cp.index
            )));
        }
        if minima.iter().any(|m| dist(&m.x, &cp.x) <= 1e-6 * domain.diameter()) {
            return Err(Error::Numerical(format!(
                "grid too coarse: two grid minima refine to the same point {:?}",
                cp.x
            )));
        }
        birth_min[b] = Some(minima.len());
        minima.push(cp);
    }

    // refine events
    let mut saddles: Vec<CriticalPoint> = Vec::new();
    let mut events = Vec::new();
    for &(v, la, lb) in &raw_events {
        let x0 = grid.point(v);
        let (Some(ca), Some(cb)) = (
            birth_min[birth_of_vertex[&la]],
            birth_min[birth_of_vertex[&lb]],
        ) else {
            // merges with a boundary-born component are reported by the confinement check
            continue;
        };
        let x = newton_refine(f, &x0, domain, tol).ok_or_else(|| {
            Error::Numerical(format!("grid too coarse: saddle refinement diverged near {x0:?}"))
        })?;
        let cp = classify(f, x, tol)?;
        if cp.index != 1 {
            return Err(Error::Numerical(format!(
                "grid too coarse: merge near {x0:?} refines to an index-{} point",
                cp.index
            )));
        }
        if saddles.iter().any(|s| dist(&s.x, &cp.x) <= 1e-6 * domain.diameter()) {
            return Err(Error::Numerical(format!(
                "grid too coarse: saddle {:?} consumed by two merge events",
                cp.x
            )));
        }
        events.push(MergeEvent {
            level: values[v],
            vertex: v,
            location: x0,
            components: [ca, cb],
            saddle: saddles.len(),
        });
        saddles.push(cp);
    }

    // critical points must sit more than 3 cells apart
    let h: Vec<f64> = (0..d).map(|a| grid.spacing(a)).collect();
    let pts: Vec<&CriticalPoint> = minima.iter().chain(saddles.iter()).collect();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let cells = (0..d)
                .map(|a| (pts[i].x[a] - pts[j].x[a]).abs() / h[a])
                .fold(0.0, f64::max);
            if cells <= 3.0 {
                return Err(Error::Numerical(format!(
                    "grid too coarse: critical points {:?} and {:?} are {cells:.2} cells apart",
                    pts[i].x, pts[j].x
                )));
            }
        }
    }

    Ok(MergeStructure {
        f: f.clone(),
        grid,
        values,
        minima,
        saddles,
        events,
        boundary_births,
        boundary_min,
        tie_tol,
        tolerances: tol.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilted_double_well_single_merge() {
        let f = SmoothMap::scalar(1, "x1^4/4 - x1^2/2 + x1/10").unwrap();
        let m = merge_tree(&f, &Domain::cube(1, 2.0), &[401]).unwrap();
        assert_eq!(m.minima.len(), 2);
        assert_eq!(m.events.len(), 1);
        let s = &m.saddles[0];
        assert!((m.events[0].level - s.value).abs() < 1e-4);
        assert!(s.x[0].abs() < 0.2);
    }

    #[test]
    fn coarse_grid_is_detected() {
        let f = SmoothMap::scalar(1, "x1^4/4 - x1^2/2 + x1/10").unwrap();
        assert!(merge_tree(&f, &Domain::cube(1, 2.0), &[9]).is_err());
    }

    #[test]
    fn two_dimensional_merge() {
        let f = SmoothMap::scalar(2, "(x1^2 - 1)^2/4 + x2^2/2 + x1/20").unwrap();
        let m = merge_tree(&f, &Domain::cube(2, 2.0), &[81]).unwrap();
        assert_eq!(m.minima.len(), 2);
        assert_eq!(m.saddles.len(), 1);
        assert!(m.saddles[0].x.iter().all(|v| v.abs() < 0.1));
    }
}
