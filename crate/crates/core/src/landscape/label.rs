use serde::Serialize;

use super::{descend, dist, lex_cmp, CriticalPoint, MergeStructure};
use crate::error::{Error, Result};
use crate::fields::Domain;
use crate::linalg::symmetric_eigen;

pub type ComponentId = usize;

/// A connected component of {f < level}, identified by the minima it holds.
#[derive(Clone, Debug, Serialize)]
pub struct SublevelComponent {
    pub id: ComponentId,
    /// `f64::INFINITY` for the whole space
    pub level: f64,
    /// indices into `Labeling::minima`, ascending
    pub minima: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SaddleRef {
    /// the saddle at infinity attached to the global minimum
    Fictive,
    /// index into `Labeling::saddles`
    Saddle(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MinimumKind {
    /// the global minimum
    Bottom,
    TypeI,
    TypeII,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimumRecord {
    /// E(m)
    pub component: ComponentId,
    /// j(m)
    pub saddles: Vec<SaddleRef>,
    /// σ(m), infinite for the global minimum
    pub sigma: f64,
    /// S(m) = σ(m) − f(m)
    pub depth: f64,
    /// E₋(m)
    pub previous: Option<ComponentId>,
    /// m̂(m)
    pub hat_minimum: Option<usize>,
    /// Ê(m)
    pub hat_component: Option<ComponentId>,
    pub kind: MinimumKind,
    /// index into `Labeling::classes`
    pub class: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Labeling {
    pub domain: Domain,
    /// minima ordered by increasing S, global minimum last
    pub minima: Vec<CriticalPoint>,
    pub records: Vec<MinimumRecord>,
    /// separating saddles, ordered by decreasing value then location
    pub saddles: Vec<CriticalPoint>,
    /// the minima reached by descending from each separating saddle
    pub saddle_branches: Vec<[usize; 2]>,
    /// σ₂ > σ₃ > …
    pub levels: Vec<f64>,
    pub components: Vec<SublevelComponent>,
    pub classes: Vec<Vec<usize>>,
    /// some component held several minima at equal depth
    pub degenerate: bool,
    pub tie_tol: f64,
    pub boundary_min: f64,
}

impl Labeling {
    pub fn bottom(&self) -> usize {
        self.minima.len() - 1
    }

    pub fn component(&self, id: ComponentId) -> &SublevelComponent {
        &self.components[id]
    }

    /// Separating saddles in j(m), without the fictive one.
    pub fn saddles_of(&self, m: usize) -> Vec<usize> {
        self.records[m]
            .saddles
            .iter()
            .filter_map(|s| match s {
                SaddleRef::Saddle(i) => Some(*i),
                SaddleRef::Fictive => None,
            })
            .collect()
    }

    /// Minima whose j-set contains saddle `s`.
    pub fn minima_at_saddle(&self, s: usize) -> Vec<usize> {
        (0..self.minima.len())
            .filter(|&m| self.records[m].saddles.contains(&SaddleRef::Saddle(s)))
            .collect()
    }
}

/// Outcome of the genericity check.
#[derive(Clone, Debug, Serialize)]
pub struct GenerReport {
    pub pass: bool,
    /// minima that are not the unique minimum of f on E(m)
    pub non_unique: Vec<usize>,
    /// pairs of minima with intersecting j-sets
    pub overlapping: Vec<(usize, usize)>,
    /// minima of type II
    pub type_two: Vec<usize>,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn push_unique(list: &mut Vec<CriticalPoint>, p: &CriticalPoint, tol: f64) -> usize {
    if let Some(i) = list.iter().position(|q| dist(&q.x, &p.x) <= tol) {
        return i;
    }
    list.push(p.clone());
    list.len() - 1
}

/// Run the recursive labeling of minima on the grid merge structure,
/// completed with the critical points in `criticals`.
pub fn label(merge: &MergeStructure, criticals: &[CriticalPoint]) -> Result<Labeling> {
    let f = &merge.f;
    let domain = &merge.grid.domain;
    let diam = domain.diameter();
    let same = 1e-6 * diam;
    let tol = merge.tie_tol;

    // minima: every critical minimum must have been seen by the grid
    let mut minima: Vec<CriticalPoint> = merge.minima.clone();
    for c in criticals.iter().filter(|c| c.index == 0 && domain.contains(&c.x)) {
        if !minima.iter().any(|m| dist(&m.x, &c.x) <= same) {
            return Err(Error::Numerical(format!(
                "grid too coarse: minimum {:?} has no grid basin",
                c.x
            )));
        }
    }
    if minima.is_empty() {
        return Err(Error::Numerical("no minimum inside the box".into()));
    }
    let mut saddle_pool: Vec<CriticalPoint> = Vec::new();
    let mut event_saddles = Vec::new();
    for s in &merge.saddles {
        event_saddles.push(push_unique(&mut saddle_pool, s, same));
    }
    for c in criticals.iter().filter(|c| c.index == 1 && domain.contains(&c.x)) {
        push_unique(&mut saddle_pool, c, same);
    }

    // confinement on the box
    if !merge.boundary_births.is_empty() {
        return Err(Error::Assumption(format!(
            "not confining on the box: f decreases toward the boundary near {:?}",
            merge.boundary_births[0]
        )));
    }
    let top = saddle_pool
        .iter()
        .map(|s| s.value)
        .chain(minima.iter().map(|m| m.value))
        .fold(f64::NEG_INFINITY, f64::max);
    if merge.boundary_min <= top + tol {
        return Err(Error::Assumption(format!(
            "not confining on the box: boundary minimum {:.6} does not exceed the critical value {:.6}",
            merge.boundary_min, top
        )));
    }

    // descend both branches of every index-1 point
    let step = 0.5 * merge.grid.max_spacing();
    let delta = 1e-3 * diam.min(merge.grid.max_spacing() * 10.0);
    let nearest_min = |x: &[f64]| -> Result<usize> {
        let (i, d) = minima
            .iter()
            .enumerate()
            .map(|(i, m)| (i, dist(&m.x, x)))
            .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if d <= 1e-4 * diam {
            Ok(i)
        } else {
            Err(Error::Numerical(format!(
                "grid too coarse: descent ended at {x:?}, away from every known minimum"
            )))
        }
    };
    let mut branches: Vec<[usize; 2]> = Vec::new();
    for s in &saddle_pool {
        let eig = symmetric_eigen(&s.hessian)?;
        let v = eig.vectors.col(0);
        let mut br = [0usize; 2];
        for (k, sign) in [1.0, -1.0].iter().enumerate() {
            let x0: Vec<f64> = s.x.iter().zip(&v).map(|(a, b)| a + sign * delta * b).collect();
            let x = descend(f, &x0, step, domain, &merge.tolerances)?;
            br[k] = nearest_min(&x)?;
        }
        br.sort();
        branches.push(br);
    }

    let n_min = minima.len();
    // components of {f < level} as union-find classes over minima
    let classes_below = |level: f64| -> Dsu {
        let mut dsu = Dsu::new(n_min);
        for (s, br) in saddle_pool.iter().zip(&branches) {
            if s.value < level - tol {
                dsu.union(br[0], br[1]);
            }
        }
        dsu
    };

    let separating: Vec<bool> = saddle_pool
        .iter()
        .zip(&branches)
        .map(|(s, br)| {
            let mut dsu = classes_below(s.value);
            br[0] != br[1] && dsu.find(br[0]) != dsu.find(br[1])
        })
        .collect();
    for &e in &event_saddles {
        if !separating[e] {
            return Err(Error::Numerical(format!(
                "grid too coarse: merge saddle {:?} does not separate",
                saddle_pool[e].x
            )));
        }
    }
    {
        let mut all = classes_below(f64::INFINITY);
        let r = all.find(0);
        if (1..n_min).any(|m| all.find(m) != r) {
            return Err(Error::Numerical(
                "minima are not all connected through index-1 points; a saddle was missed".into(),
            ));
        }
    }

    let mut sep_idx: Vec<usize> = (0..saddle_pool.len()).filter(|&i| separating[i]).collect();
    sep_idx.sort_by(|&a, &b| {
        saddle_pool[b]
            .value
            .partial_cmp(&saddle_pool[a].value)
            .unwrap()
            .then(lex_cmp(&saddle_pool[a].x, &saddle_pool[b].x))
    });
    let saddles: Vec<CriticalPoint> = sep_idx.iter().map(|&i| saddle_pool[i].clone()).collect();
    let sbranch: Vec<[usize; 2]> = sep_idx.iter().map(|&i| branches[i]).collect();

    // level groups, descending
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, s) in saddles.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (saddles[g[0]].value - s.value).abs() <= tol => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    let levels: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().map(|&k| saddles[k].value).sum::<f64>() / g.len() as f64)
        .collect();

    let mut components: Vec<SublevelComponent> = Vec::new();
    let register = |level: f64, members: Vec<usize>, comps: &mut Vec<SublevelComponent>| -> ComponentId {
        if let Some(c) = comps.iter().find(|c| c.level == level && c.minima == members) {
            return c.id;
        }
        let id = comps.len();
        comps.push(SublevelComponent {
            id,
            level,
            minima: members,
        });
        id
    };
    let members_of = |dsu: &mut Dsu, m: usize| -> Vec<usize> {
        let r = dsu.find(m);
        (0..n_min).filter(|&k| dsu.find(k) == r).collect()
    };

    let mut degenerate = false;
    let argmin = |set: &[usize], degenerate: &mut bool| -> usize {
        let mut best = set[0];
        for &k in &set[1..] {
            let (a, b) = (minima[k].value, minima[best].value);
            if a < b - tol {
                best = k;
            } else if (a - b).abs() <= tol && lex_cmp(&minima[k].x, &minima[best].x).is_lt() {
                best = k;
            }
        }
        if set.iter().filter(|&&k| (minima[k].value - minima[best].value).abs() <= tol).count() > 1 {
            *degenerate = true;
        }
        best
    };

    let whole: Vec<usize> = (0..n_min).collect();
    let whole_id = register(f64::INFINITY, whole.clone(), &mut components);
    let bottom = argmin(&whole, &mut degenerate);

    struct Raw {
        component: ComponentId,
        saddles: Vec<SaddleRef>,
        sigma: f64,
        previous: Option<ComponentId>,
        hat_minimum: Option<usize>,
        hat_component: Option<ComponentId>,
        kind: MinimumKind,
        level: Option<usize>,
    }
    let mut raw: Vec<Option<Raw>> = (0..n_min).map(|_| None).collect();
    raw[bottom] = Some(Raw {
        component: whole_id,
        saddles: vec![SaddleRef::Fictive],
        sigma: f64::INFINITY,
        previous: None,
        hat_minimum: None,
        hat_component: None,
        kind: MinimumKind::Bottom,
        level: None,
    });

    let mut prev_dsu = Dsu::new(n_min);
    for m in 1..n_min {
        prev_dsu.union(0, m);
    }
    for (gi, group) in groups.iter().enumerate() {
        let sigma = levels[gi];
        let mut dsu = classes_below(saddles[group[0]].value);
        let labeled: Vec<bool> = raw.iter().map(|r| r.is_some()).collect();
        let mut seen_roots = Vec::new();
        for m in 0..n_min {
            let r = dsu.find(m);
            if seen_roots.contains(&r) {
                continue;
            }
            seen_roots.push(r);
            let class = members_of(&mut dsu, m);
            if class.iter().any(|&k| labeled[k]) {
                continue;
            }
            let mm = argmin(&class, &mut degenerate);
            let comp = register(sigma, class.clone(), &mut components);
            let js: Vec<SaddleRef> = group
                .iter()
                .filter(|&&k| sbranch[k].iter().any(|b| class.contains(b)))
                .map(|&k| SaddleRef::Saddle(k))
                .collect();
            let prev_members = members_of(&mut prev_dsu, mm);
            let previous = if gi == 0 {
                whole_id
            } else {
                register(levels[gi - 1], prev_members.clone(), &mut components)
            };
            let hats: Vec<usize> = prev_members.iter().copied().filter(|&k| labeled[k]).collect();
            if hats.len() != 1 {
                return Err(Error::Numerical(format!(
                    "labeling inconsistency: {} labeled minima in E₋",
                    hats.len()
                )));
            }
            let hat = hats[0];
            let hat_members = members_of(&mut dsu, hat);
            let hat_comp = register(sigma, hat_members, &mut components);
            let kind = if minima[hat].value < minima[mm].value - tol {
                MinimumKind::TypeI
            } else {
                MinimumKind::TypeII
            };
            raw[mm] = Some(Raw {
                component: comp,
                saddles: js,
                sigma,
                previous: Some(previous),
                hat_minimum: Some(hat),
                hat_component: Some(hat_comp),
                kind,
                level: Some(gi),
            });
        }
        prev_dsu = dsu;
    }
    let raw: Vec<Raw> = raw
        .into_iter()
        .enumerate()
        .map(|(m, r)| {
            r.ok_or_else(|| Error::Numerical(format!("minimum {:?} was never labeled", minima[m].x)))
        })
        .collect::<Result<_>>()?;

    // classes per level
    let mut cls = Dsu::new(n_min);
    for (gi, group) in groups.iter().enumerate() {
        let at: Vec<usize> = (0..n_min).filter(|&m| raw[m].level == Some(gi)).collect();
        let mut omega: Vec<ComponentId> = Vec::new();
        for &m in &at {
            omega.push(raw[m].component);
            if raw[m].kind == MinimumKind::TypeII {
                omega.push(raw[m].hat_component.unwrap());
            }
        }
        omega.sort();
        omega.dedup();
        let mut cd = Dsu::new(components.len());
        for &k in group {
            let [a, b] = sbranch[k];
            let ca = omega.iter().copied().find(|&c| components[c].minima.contains(&a));
            let cb = omega.iter().copied().find(|&c| components[c].minima.contains(&b));
            if let (Some(ca), Some(cb)) = (ca, cb) {
                cd.union(ca, cb);
            }
        }
        for i in 0..at.len() {
            for j in i + 1..at.len() {
                if cd.find(raw[at[i]].component) == cd.find(raw[at[j]].component) {
                    cls.union(at[i], at[j]);
                }
            }
        }
    }

    // final order: S ascending, global minimum last
    let depth = |m: usize| raw[m].sigma - minima[m].value;
    let mut order: Vec<usize> = (0..n_min).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (depth(a), depth(b));
        da.partial_cmp(&db)
            .unwrap_or_else(|| da.is_infinite().cmp(&db.is_infinite()))
            .then(minima[a].value.partial_cmp(&minima[b].value).unwrap())
            .then(lex_cmp(&minima[a].x, &minima[b].x))
    });
    let mut pos = vec![0; n_min];
    for (p, &m) in order.iter().enumerate() {
        pos[m] = p;
    }
    for c in components.iter_mut() {
        c.minima = c.minima.iter().map(|&m| pos[m]).collect();
        c.minima.sort();
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut class_of = vec![usize::MAX; n_min];
    for &m in &order {
        let r = cls.find(m);
        if class_of[r] == usize::MAX {
            class_of[r] = classes.len();
            classes.push(Vec::new());
        }
        classes[class_of[r]].push(pos[m]);
    }
    let records: Vec<MinimumRecord> = order
        .iter()
        .map(|&m| {
            let r = &raw[m];
            MinimumRecord {
                component: r.component,
                saddles: r.saddles.clone(),
                sigma: r.sigma,
                depth: depth(m),
                previous: r.previous,
                hat_minimum: r.hat_minimum.map(|k| pos[k]),
                hat_component: r.hat_component,
                kind: r.kind,
                class: class_of[cls.find(m)],
            }
        })
        .collect();
    let sbranch: Vec<[usize; 2]> = sbranch
        .iter()
        .map(|b| {
            let mut v = [pos[b[0]], pos[b[1]]];
            v.sort();
            v
        })
        .collect();
    minima = order.iter().map(|&m| minima[m].clone()).collect();

    Ok(Labeling {
        domain: domain.clone(),
        minima,
        records,
        saddles,
        saddle_branches: sbranch,
        levels,
        components,
        classes,
        degenerate,
        tie_tol: tol,
        boundary_min: merge.boundary_min,
    })
}

/// Genericity check: uniqueness of each minimum on its component, disjoint
/// j-sets, and absence of type-II minima.
pub fn check_gener(labeling: &Labeling, criticals: &[CriticalPoint]) -> GenerReport {
    let tol = labeling.tie_tol;
    let n = labeling.minima.len();
    let mut non_unique = Vec::new();
    for m in 0..n {
        let comp = labeling.component(labeling.records[m].component);
        let fm = labeling.minima[m].value;
        let mut others = comp
            .minima
            .iter()
            .filter(|&&k| k != m)
            .map(|&k| labeling.minima[k].value);
        // minima reported only in `criticals` also count on the whole space
        let extra = labeling.records[m].kind == MinimumKind::Bottom
            && criticals.iter().any(|c| {
                c.index == 0
                    && labeling.domain.contains(&c.x)
                    && !labeling.minima.iter().any(|q| dist(&q.x, &c.x) <= 1e-6 * labeling.domain.diameter())
                    && c.value <= fm + tol
            });
        if others.any(|v| v <= fm + tol) || extra {
            non_unique.push(m);
        }
    }
    let mut overlapping = Vec::new();
    for a in 0..n {
        let ja = labeling.saddles_of(a);
        for b in a + 1..n {
            if labeling.saddles_of(b).iter().any(|s| ja.contains(s)) {
                overlapping.push((a, b));
            }
        }
    }
    let type_two: Vec<usize> =
        (0..n).filter(|&m| labeling.records[m].kind == MinimumKind::TypeII).collect();
    GenerReport {
        pass: non_unique.is_empty() && overlapping.is_empty(),
        non_unique,
        overlapping,
        type_two,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{find_critical_points, merge_tree};
    use super::*;
    use crate::fields::SmoothMap;

    fn run(src: &str, d: usize, half: f64, n: usize) -> Labeling {
        let f = SmoothMap::scalar(d, src).unwrap();
        let dom = Domain::cube(d, half);
        let m = merge_tree(&f, &dom, &[n]).unwrap();
        let c = find_critical_points(&f, &dom, 12).unwrap();
        label(&m, &c).unwrap()
    }

    #[test]
    fn tilted_double_well() {
        let l = run("x1^4/4 - x1^2/2 + x1/10", 1, 2.0, 401);
        assert_eq!(l.minima.len(), 2);
        assert_eq!(l.saddles.len(), 1);
        assert!(l.minima[1].x[0] < 0.0);
        let r = &l.records[0];
        assert_eq!(r.saddles, vec![SaddleRef::Saddle(0)]);
        assert!((r.depth - (l.saddles[0].value - l.minima[0].value)).abs() < 1e-14);
        assert_eq!(r.kind, MinimumKind::TypeI);
        assert_eq!(r.hat_minimum, Some(1));
        assert_eq!(l.records[1].saddles, vec![SaddleRef::Fictive]);
        assert!(l.records[1].depth.is_infinite());
        assert!(check_gener(&l, &[]).pass);
    }

    #[test]
    fn symmetric_double_well_fails_gener() {
        let l = run("x1^4/4 - x1^2/2", 1, 2.0, 401);
        assert!(l.degenerate);
        let g = check_gener(&l, &[]);
        assert!(!g.pass);
        assert_eq!(g.type_two, vec![0]);
    }

    #[test]
    fn not_confining_is_reported() {
        let f = SmoothMap::scalar(1, "x1^4/4 - x1^2/2 + x1/10").unwrap();
        let dom = Domain::cube(1, 1.2);
        let m = merge_tree(&f, &dom, &[301]).unwrap();
        assert!(matches!(label(&m, &[]), Err(Error::Assumption(_))));
    }
}
