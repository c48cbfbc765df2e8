//! Finite-difference discretization of P, extraction of the exponentially small
//! eigenvalues and comparison with the asymptotic predictions.

mod eigs;
mod semigroup;
mod sparse;
mod susy;

pub use eigs::{small_eigs, small_eigs_matrix, EigenMethod, SmallEigs};
pub use semigroup::{plateau_depths, semigroup_check, PlateauWindow, RelaxationFit, SemigroupOptions, SemigroupReport};
pub use sparse::{BandLu, Csr};
pub use susy::{susy_convergence, susy_residual, susy_residual_field, SusyConvergence};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eyring_kramers::AsymptoticEigenvalue;
use crate::grid::Grid;
use crate::landscape::Labeling;
use crate::logscaled::LogScaled;
use crate::operator::OperatorSpec;

/// How the zeroth-order coefficient is discretized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialRule {
    /// sample c⁰ + h c¹ at the nodes
    Continuum,
    /// pick the diagonal so that the grid Gibbs vector is annihilated row by row
    GibbsConsistent,
}

impl std::str::FromStr for PotentialRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuum" => Ok(PotentialRule::Continuum),
            "gibbs" | "gibbs_consistent" => Ok(PotentialRule::GibbsConsistent),
            _ => Err(Error::InvalidInput(format!("unknown potential rule '{s}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiscretizeOptions {
    pub rule: PotentialRule,
    /// nodes with f ≥ f_cut are Dirichlet; `None` keeps every interior node
    pub f_cut: Option<f64>,
    /// largest Hessian eigenvalue at the minima, for the resolution check
    pub kappa_max: Option<f64>,
    /// required grid points across the well width 2√(h/κ)
    pub min_points_per_well: f64,
}

impl Default for DiscretizeOptions {
    fn default() -> Self {
        DiscretizeOptions {
            rule: PotentialRule::GibbsConsistent,
            f_cut: None,
            kappa_max: None,
            min_points_per_well: 8.0,
        }
    }
}

/// P restricted to the active grid nodes, Dirichlet outside.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub grid: Grid,
    pub h: f64,
    pub matrix: Csr,
    /// grid index of each unknown
    pub active: Vec<usize>,
    /// f at every grid node
    pub f_values: Vec<f64>,
    pub f_min: f64,
    pub f_cut: f64,
    pub rule: PotentialRule,
    pub symmetric: bool,
    /// points across the narrowest well, when κ was given
    pub resolution: Option<f64>,
}

impl DiscreteOperator {
    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// e^{−(f − f_min)/h} on the active nodes, unit Euclidean norm.
    pub fn gibbs_vector(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .active
            .iter()
            .map(|&g| (-(self.f_values[g] - self.f_min) / self.h).exp())
            .collect();
        let n = crate::linalg::norm2(&v);
        v.iter_mut().for_each(|x| *x /= n);
        v
    }

    /// Sample a function on the active nodes.
    pub fn sample(&self, u: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.active.iter().map(|&g| u(&self.grid.point(g))).collect()
    }

    /// ‖P̂ψ‖ for the normalized grid Gibbs vector.
    pub fn gibbs_residual(&self) -> f64 {
        crate::linalg::norm2(&self.matrix.matvec(&self.gibbs_vector()))
    }
}

/// Assemble the finite-difference operator on the interior nodes of `grid`.
///
/// Second order part in flux form with A at half points on the diagonal and a
/// centred mixed stencil off it; first order part in skew form, so b alone
/// gives an antisymmetric matrix.
pub fn discretize(spec: &OperatorSpec, grid: &Grid, h: f64, opt: &DiscretizeOptions) -> Result<DiscreteOperator> {
    let d = spec.dim();
    if grid.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: grid.dim(),
        });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidInput("h must be positive".into()));
    }
    if grid.n.iter().any(|&k| k < 3) {
        return Err(Error::InvalidInput("grid needs an interior".into()));
    }
    if spec.perturbation.is_some() {
        return Err(Error::Unsupported(
            "the h-dependent perturbation is only checked through its residual, not discretized".into(),
        ));
    }
    let resolution = match opt.kappa_max {
        Some(k) if k > 0.0 => {
            let r = 2.0 * (h / k).sqrt() / grid.max_spacing();
            if r < opt.min_points_per_well {
                return Err(Error::Assumption(format!(
                    "grid too coarse for h = {h}: {r:.1} points across a well, need {}",
                    opt.min_points_per_well
                )));
            }
            Some(r)
        }
        _ => None,
    };
    let f_values = grid.sample(|x| spec.f.eval_scalar_raw(x));
    if f_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("f on the grid".into()));
    }
    let f_cut = opt.f_cut.unwrap_or(f64::INFINITY);
    let mut mi = vec![0; d];
    let mut index = vec![usize::MAX; grid.len()];
    let mut active = Vec::new();
    for g in 0..grid.len() {
        grid.unflatten(g, &mut mi);
        if !grid.on_boundary(&mi) && f_values[g] < f_cut {
            index[g] = active.len();
            active.push(g);
        }
    }
    if active.is_empty() {
        return Err(Error::InvalidInput("no active grid nodes below the cut".into()));
    }
    let f_min = active.iter().map(|&g| f_values[g]).fold(f64::INFINITY, f64::min);
    let strides = grid.strides();
    let dx: Vec<f64> = (0..d).map(|a| grid.spacing(a)).collect();
    let h2 = h * h;

    let mut rows = Vec::with_capacity(active.len());
    let mut x = vec![0.0; d];
    for &g in &active {
        grid.unflatten(g, &mut mi);
        for a in 0..d {
            x[a] = grid.coord(a, mi[a]);
        }
        // full stencil, with grid indices; the potential is added afterwards
        let mut st: Vec<(usize, f64)> = Vec::with_capacity(1 + 2 * d * d);
        let mut diag = 0.0;
        let bx = spec.b0.eval_raw(&x);
        let ax = spec.a0.eval_raw(&x);
        for a in 0..d {
            let mut y = x.clone();
            y[a] = x[a] + 0.5 * dx[a];
            let ap = spec.a0.eval_raw(&y)[a * d + a];
            y[a] = x[a] - 0.5 * dx[a];
            let am = spec.a0.eval_raw(&y)[a * d + a];
            let w = h2 / (dx[a] * dx[a]);
            diag += w * (ap + am);
            y[a] = x[a] + dx[a];
            let bp = spec.b0.eval_raw(&y)[a];
            let ap_full = spec.a0.eval_raw(&y);
            y[a] = x[a] - dx[a];
            let bm = spec.b0.eval_raw(&y)[a];
            let am_full = spec.a0.eval_raw(&y);
            let c = h / (4.0 * dx[a]);
            st.push((g + strides[a], -w * ap + c * (bx[a] + bp)));
            st.push((g - strides[a], -w * am - c * (bx[a] + bm)));
            for cax in 0..d {
                if cax == a {
                    continue;
                }
                let (p, m) = (ap_full[a * d + cax], am_full[a * d + cax]);
                if p == 0.0 && m == 0.0 && ax[a * d + cax] == 0.0 {
                    continue;
                }
                let k = h2 / (4.0 * dx[a] * dx[cax]);
                let (sa, sc) = (strides[a], strides[cax]);
                st.push((g + sa + sc, -k * p));
                st.push((g + sa - sc, k * p));
                st.push((g - sa + sc, k * m));
                st.push((g - sa - sc, -k * m));
            }
        }
        let pot = match opt.rule {
            PotentialRule::Continuum => spec.potential(&x, h)?,
            PotentialRule::GibbsConsistent => {
                let fi = f_values[g];
                let s: f64 = st.iter().map(|&(j, v)| v * (-(f_values[j] - fi) / h).exp()).sum();
                -(diag + s)
            }
        };
        let mut row: Vec<(usize, f64)> = st
            .into_iter()
            .filter(|&(j, _)| index[j] != usize::MAX)
            .map(|(j, v)| (index[j], v))
            .collect();
        row.push((index[g], diag + pot));
        rows.push(row);
    }
    let matrix = Csr::from_rows(rows);
    if matrix.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("assembled operator".into()));
    }
    let symmetric = matrix.asymmetry() <= 1e-12 * matrix.max_abs();
    Ok(DiscreteOperator {
        grid: grid.clone(),
        h,
        matrix,
        active,
        f_values,
        f_min,
        f_cut,
        rule: opt.rule,
        symmetric,
        resolution,
    })
}

/// Default cut level: the highest separating saddle plus 5h|ln h|.
pub fn default_f_cut(labeling: &Labeling, h: f64) -> f64 {
    let top = labeling
        .saddles
        .iter()
        .map(|s| s.value)
        .chain(labeling.minima.iter().map(|m| m.value))
        .fold(f64::NEG_INFINITY, f64::max);
    top + 5.0 * h * h.ln().abs()
}

/// Largest Hessian eigenvalue over the labeled minima.
pub fn kappa_max(labeling: &Labeling) -> f64 {
    labeling
        .minima
        .iter()
        .flat_map(|m| m.hessian_eigenvalues.iter().copied())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    pub minimum: usize,
    pub depth: f64,
    pub h: f64,
    pub predicted: LogScaled,
    pub computed: Complex64,
    /// Re λ_computed / λ_predicted
    pub ratio: f64,
    pub log_ratio: f64,
}

/// Pair computed and predicted small eigenvalues by increasing size; the
/// kernel and the global minimum are left out.
pub fn compare(predictions: &[AsymptoticEigenvalue], eigs: &SmallEigs) -> Result<Vec<ComparisonRow>> {
    let mut pred: Vec<&AsymptoticEigenvalue> = predictions.iter().filter(|p| !p.value.is_zero()).collect();
    pred.sort_by(|a, b| a.value.cmp_value(&b.value).then(a.minimum.cmp(&b.minimum)));
    if eigs.values.is_empty() {
        return Err(Error::Numerical("no computed eigenvalues".into()));
    }
    let computed = &eigs.values[1..];
    if computed.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions but {} computed nonzero small eigenvalues",
            pred.len(),
            computed.len()
        )));
    }
    Ok(pred
        .iter()
        .zip(computed)
        .map(|(p, &c)| {
            let log_ratio = c.re.abs().ln() - p.value.log_mag;
            ComparisonRow {
                minimum: p.minimum,
                depth: p.depth,
                h: p.h,
                predicted: p.value,
                computed: c,
                ratio: c.re.signum() * log_ratio.exp(),
                log_ratio,
            }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub h: f64,
    pub unknowns: usize,
    pub method: EigenMethod,
    pub kernel: Complex64,
    pub gap: Option<Complex64>,
    pub gibbs_residual: f64,
    pub resolution: Option<f64>,
    pub f_cut: f64,
    pub rows: Vec<ComparisonRow>,
}

/// Discretize at `h`, compute the n₀ smallest eigenvalues and compare them
/// with `predictions` (rows for other h are ignored).
pub fn validate_spectrum(
    spec: &OperatorSpec,
    labeling: &Labeling,
    predictions: &[AsymptoticEigenvalue],
    grid: &Grid,
    h: f64,
    rule: PotentialRule,
) -> Result<ValidationReport> {
    let opt = DiscretizeOptions {
        rule,
        f_cut: Some(default_f_cut(labeling, h)),
        kappa_max: Some(kappa_max(labeling)),
        ..Default::default()
    };
    let op = discretize(spec, grid, h, &opt)?;
    let eigs = small_eigs(&op, labeling.minima.len())?;
    let mine: Vec<AsymptoticEigenvalue> = predictions
        .iter()
        .filter(|p| (p.h - h).abs() <= 1e-12 * h)
        .cloned()
        .collect();
    let rows = compare(&mine, &eigs)?;
    Ok(ValidationReport {
        h,
        unknowns: op.len(),
        method: eigs.method,
        kernel: eigs.values[0],
        gap: eigs.gap,
        gibbs_residual: op.gibbs_residual(),
        resolution: op.resolution,
        f_cut: op.f_cut,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Domain;

    fn harmonic(d: usize) -> OperatorSpec {
        let dom = Domain::cube(d, 3.0);
        let f = (1..=d).map(|i| format!("x{i}^2/2")).collect::<Vec<_>>().join(" + ");
        let a: Vec<String> = (0..d * d).map(|k| if k % (d + 1) == 0 { "1".into() } else { "0".into() }).collect();
        let a: Vec<&str> = a.iter().map(|s| s.as_str()).collect();
        let b = vec!["0"; d];
        OperatorSpec::from_expressions("harmonic", dom, &f, &a, &b).unwrap()
    }

    #[test]
    fn harmonic_oscillator_levels() {
        // spectrum of −h²Δ + |x|² − h d is 2h·ℕ in each coordinate
        let spec = harmonic(1);
        let grid = Grid::uniform(spec.domain.clone(), 601).unwrap();
        let h = 0.2;
        for rule in [PotentialRule::Continuum, PotentialRule::GibbsConsistent] {
            let op = discretize(&spec, &grid, h, &DiscretizeOptions { rule, ..Default::default() }).unwrap();
            assert!(op.symmetric);
            let e = small_eigs(&op, 3).unwrap();
            for (k, v) in e.values.iter().enumerate() {
                assert!((v.re - 2.0 * h * k as f64).abs() < 2e-3, "{rule:?} {k} {v}");
            }
        }
    }

    #[test]
    fn gibbs_rule_annihilates_ground_state() {
        let spec = harmonic(2);
        let grid = Grid::uniform(spec.domain.clone(), 41).unwrap();
        let op = discretize(&spec, &grid, 0.15, &DiscretizeOptions::default()).unwrap();
        assert!(op.gibbs_residual() < 1e-8);
    }

    #[test]
    fn drift_part_is_antisymmetric() {
        let dom = Domain::cube(2, 2.0);
        let spec = OperatorSpec::from_expressions(
            "rot",
            dom,
            "(x1^2 + x2^2)/2",
            &["0", "0", "0", "0"],
            &["x2*(1 + x1^2)", "-x1"],
        )
        .unwrap();
        let grid = Grid::uniform(spec.domain.clone(), 9).unwrap();
        let op = discretize(
            &spec,
            &grid,
            0.3,
            &DiscretizeOptions {
                rule: PotentialRule::Continuum,
                ..Default::default()
            },
        )
        .unwrap();
        let m = &op.matrix;
        let t = m.transpose();
        for i in 0..m.n {
            for (j, v) in m.row(i) {
                if i != j {
                    assert!((v + t.get(i, j)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let spec = harmonic(1);
        let grid = Grid::uniform(spec.domain.clone(), 21).unwrap();
        let opt = DiscretizeOptions {
            kappa_max: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(discretize(&spec, &grid, 0.01, &opt), Err(Error::Assumption(_))));
    }
}
