//! Leading-order Eyring–Kramers asymptotics: prefactors, per-minimum
//! predictions, the interaction matrix M₀ = LᵗL and the class-wise graded
//! spectrum for landscapes with ties.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graded::{graded_spectrum, GradedMatrix};
use crate::landscape::{check_gener, Labeling, MinimumKind};
use crate::linalg::Matrix;
pub use crate::logscaled::LogScaled;
use crate::operator::{analyze_critical_with, AnalysisOptions, CriticalAnalysis, OperatorSpec};

/// Per-point analyses aligned with a labeling.
#[derive(Clone, Debug, Serialize)]
pub struct LandscapeAnalysis {
    pub minima: Vec<CriticalAnalysis>,
    pub saddles: Vec<CriticalAnalysis>,
}

pub fn analyze_labeling(spec: &OperatorSpec, labeling: &Labeling) -> Result<LandscapeAnalysis> {
    analyze_labeling_with(spec, labeling, &AnalysisOptions::default())
}

pub fn analyze_labeling_with(
    spec: &OperatorSpec,
    labeling: &Labeling,
    opt: &AnalysisOptions,
) -> Result<LandscapeAnalysis> {
    Ok(LandscapeAnalysis {
        minima: labeling
            .minima
            .iter()
            .map(|m| analyze_critical_with(spec, m, opt))
            .collect::<Result<_>>()?,
        saddles: labeling
            .saddles
            .iter()
            .map(|s| analyze_critical_with(spec, s, opt))
            .collect::<Result<_>>()?,
    })
}

fn saddle_mu(analyses: &LandscapeAnalysis, s: usize) -> Result<f64> {
    analyses
        .saddles
        .get(s)
        .and_then(|a| a.mu)
        .map(f64::abs)
        .ok_or_else(|| Error::InvalidInput(format!("no μ for saddle {s}")))
}

fn require_generic(labeling: &Labeling) -> Result<()> {
    let g = check_gener(labeling, &[]);
    if !g.non_unique.is_empty() || !g.type_two.is_empty() {
        return Err(Error::Unsupported(
            "some minimum is not the unique minimum of its component; the prefactor for this case is not available"
                .into(),
        ));
    }
    if !g.overlapping.is_empty() {
        return Err(Error::Unsupported(
            "minima share separating saddles; use the class-wise spectrum instead".into(),
        ));
    }
    Ok(())
}

/// z(m) = √det H(m)/(2π) · Σ_{s∈j(m)} |μ(s)|/|det H(s)|^{1/2}
pub fn prefactor(labeling: &Labeling, analyses: &LandscapeAnalysis, m: usize) -> Result<f64> {
    require_generic(labeling)?;
    prefactor_unchecked(labeling, analyses, m)
}

fn prefactor_unchecked(labeling: &Labeling, analyses: &LandscapeAnalysis, m: usize) -> Result<f64> {
    if m >= labeling.minima.len() {
        return Err(Error::InvalidInput(format!("no minimum {m}")));
    }
    if m == labeling.bottom() {
        return Err(Error::InvalidInput("the global minimum has no prefactor".into()));
    }
    let dm = labeling.minima[m].det_sqrt();
    let mut sum = 0.0;
    for s in labeling.saddles_of(m) {
        let ds = labeling.saddles[s].det_sqrt();
        if !(ds > 0.0) {
            return Err(Error::Assumption(format!("degenerate Hessian at saddle {s}")));
        }
        sum += saddle_mu(analyses, s)? / ds;
    }
    Ok(dm / (2.0 * std::f64::consts::PI) * sum)
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticEigenvalue {
    pub minimum: usize,
    /// S(m), infinite for the global minimum
    pub depth: f64,
    /// z(m), zero for the global minimum
    pub prefactor: f64,
    pub h: f64,
    /// z·h·e^{−2S/h}
    pub value: LogScaled,
}

/// λ(m, h) = z(m)·h·e^{−2S(m)/h} at leading order, one row per minimum and h.
pub fn predict(labeling: &Labeling, analyses: &LandscapeAnalysis, h_list: &[f64]) -> Result<Vec<AsymptoticEigenvalue>> {
    require_generic(labeling)?;
    if h_list.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidInput("h must be positive".into()));
    }
    let mut out = Vec::new();
    for m in 0..labeling.minima.len() {
        let bottom = m == labeling.bottom();
        let z = if bottom { 0.0 } else { prefactor_unchecked(labeling, analyses, m)? };
        let s = labeling.records[m].depth;
        for &h in h_list {
            let value = if bottom {
                LogScaled::ZERO
            } else {
                LogScaled::from_f64(z * h).mul(LogScaled::exp(-2.0 * s / h))
            };
            out.push(AsymptoticEigenvalue {
                minimum: m,
                depth: s,
                prefactor: z,
                h,
                value,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct InteractionModel {
    /// non-global minima, in labeling order (S nondecreasing)
    pub minima: Vec<usize>,
    pub depths: Vec<f64>,
    #[serde(skip)]
    pub m0: Matrix,
    /// rows ↔ separating saddles, columns ↔ `minima`
    #[serde(skip)]
    pub l: Matrix,
    /// classes without the global minimum, as column indices
    pub classes: Vec<Vec<usize>>,
    pub tie_tol: f64,
}

impl InteractionModel {
    /// ‖LᵗL − M₀‖_max
    pub fn factor_residual(&self) -> f64 {
        self.l.transpose().matmul(&self.l).max_abs_diff(&self.m0)
    }
}

/// Build M₀ and its factor L from the saddle data.
pub fn interaction_model(labeling: &Labeling, analyses: &LandscapeAnalysis) -> Result<InteractionModel> {
    let g = check_gener(labeling, &[]);
    if !g.type_two.is_empty() {
        return Err(Error::Unsupported(format!(
            "type-II minima {:?} present; only type-I landscapes are supported",
            g.type_two
        )));
    }
    let n = labeling.minima.len() - 1;
    let two_pi = 2.0 * std::f64::consts::PI;
    let d: Vec<f64> = labeling.minima.iter().map(|m| m.det_sqrt()).collect();
    let mut m0 = Matrix::zeros(n, n);
    let mut l = Matrix::zeros(labeling.saddles.len(), n);
    for s in 0..labeling.saddles.len() {
        let mu = saddle_mu(analyses, s)?;
        let ds = labeling.saddles[s].det_sqrt();
        let g = labeling.minima_at_saddle(s);
        if g.is_empty() || g.len() > 2 {
            return Err(Error::Numerical(format!(
                "saddle {s} bounds {} labeled components",
                g.len()
            )));
        }
        for &m in &g {
            m0[(m, m)] += mu / two_pi * d[m] / ds;
        }
        if g.len() == 2 {
            let (a, b) = (g[0].min(g[1]), g[0].max(g[1]));
            let off = mu / two_pi * (d[a] * d[b]).sqrt() / ds;
            m0[(a, b)] -= off;
            m0[(b, a)] -= off;
            l[(s, a)] = (mu * d[a] / (two_pi * ds)).sqrt();
            l[(s, b)] = -(mu * d[b] / (two_pi * ds)).sqrt();
        } else {
            let m = g[0];
            l[(s, m)] = (mu * d[m] / (two_pi * ds)).sqrt();
        }
    }
    let bottom = labeling.bottom();
    let classes = labeling
        .classes
        .iter()
        .filter(|c| !c.contains(&bottom))
        .cloned()
        .collect();
    Ok(InteractionModel {
        minima: (0..n).collect(),
        depths: (0..n).map(|m| labeling.records[m].depth).collect(),
        m0,
        l,
        classes,
        tie_tol: labeling.tie_tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEntry {
    /// index into `InteractionModel::classes`; `None` for the kernel
    pub class: Option<usize>,
    /// the S-level of the block that produced this value
    pub depth: f64,
    pub value: LogScaled,
}

/// Class-wise spectrum h·e^{−2S₁/h}·σ(graded(M₀,α)) plus the exact 0.
pub fn general_spectrum(model: &InteractionModel, h: f64) -> Result<Vec<SpectrumEntry>> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput("h must be positive".into()));
    }
    let mut out = vec![SpectrumEntry {
        class: None,
        depth: f64::INFINITY,
        value: LogScaled::ZERO,
    }];
    for (ci, class) in model.classes.iter().enumerate() {
        let mut members = class.clone();
        members.sort_by(|&a, &b| model.depths[a].partial_cmp(&model.depths[b]).unwrap().then(a.cmp(&b)));
        let mut levels: Vec<f64> = Vec::new();
        let mut dims: Vec<usize> = Vec::new();
        for &m in &members {
            let s = model.depths[m];
            match levels.last() {
                Some(&l) if (s - l).abs() <= model.tie_tol => *dims.last_mut().unwrap() += 1,
                _ => {
                    levels.push(s);
                    dims.push(1);
                }
            }
        }
        let tau: Vec<LogScaled> = levels.windows(2).map(|w| LogScaled::exp(-(w[1] - w[0]) / h)).collect();
        let core = model.m0.select(&members, &members);
        let g = GradedMatrix::new(dims, tau, core)?;
        let base = LogScaled::exp(-2.0 * levels[0] / h).scale(h);
        for lv in graded_spectrum(&g)? {
            for v in lv.scaled_eigenvalues() {
                out.push(SpectrumEntry {
                    class: Some(ci),
                    depth: levels[lv.level - 1],
                    value: v.mul(base),
                });
            }
        }
    }
    out.sort_by(|a, b| a.value.cmp_value(&b.value));
    Ok(out)
}

/// η(s) oriented toward the component E(m), judged by the branch minimum inside it.
pub fn oriented_eta(labeling: &Labeling, analyses: &LandscapeAnalysis, m: usize, s: usize) -> Option<Vec<f64>> {
    let eta = analyses.saddles.get(s)?.eta.clone()?;
    let comp = labeling.component(labeling.records[m].component);
    let target = labeling.saddle_branches[s].iter().find(|b| comp.minima.contains(b))?;
    let x = &labeling.saddles[s].x;
    let dir: f64 = labeling.minima[*target]
        .x
        .iter()
        .zip(x)
        .zip(&eta)
        .map(|((a, b), e)| (a - b) * e)
        .sum();
    Some(if dir >= 0.0 { eta } else { eta.iter().map(|v| -v).collect() })
}

/// True when the labeling has no type-II minimum, as the class-wise path requires.
pub fn type_one_only(labeling: &Labeling) -> bool {
    labeling.records.iter().all(|r| r.kind != MinimumKind::TypeII)
}
