use std::path::{Path, PathBuf};

use eyring_core::fields::{Domain, SmoothMap};
use eyring_core::landscape::LandscapeTolerances;
use eyring_core::operator::{gallery, AnalysisOptions, GalleryParams, OperatorSpec};
use eyring_core::validate::PotentialRule;
use eyring_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Either a gallery entry or raw expressions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gallery: Option<String>,
    #[serde(default, skip_serializing_if = "is_default_params")]
    pub params: GalleryParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    /// A⁰ entries, row-major
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<Vec<String>>,
    /// checked against ⟨A⁰∇f,∇f⟩ by `verify`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<String>,
}

fn is_default_params(p: &GalleryParams) -> bool {
    *p == GalleryParams::default()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub newton_tol: f64,
    pub degeneracy_tol: f64,
    pub realness_tol: f64,
    pub axis_tol: f64,
    pub eikonal_tol: f64,
    /// validate: accepted |ratio − 1|
    pub ratio_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let l = LandscapeTolerances::default();
        let a = AnalysisOptions::default();
        Tolerances {
            newton_tol: l.newton_tol,
            degeneracy_tol: l.degeneracy_tol,
            realness_tol: a.realness_tol,
            axis_tol: a.axis_tol,
            eikonal_tol: 1e-8,
            ratio_tol: 0.15,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradedConfig {
    pub dims: Vec<usize>,
    pub tau: Vec<f64>,
    pub core: Vec<Vec<f64>>,
    /// resolvent sample points as [re, im]
    #[serde(default)]
    pub z: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// defaults to the first entry of `h`
    pub h: Option<f64>,
    /// u₀ as an expression; default: indicator of the nodes nearest to the shallowest minimum
    pub initial: Option<String>,
    /// sample times for the distance curve; default 80 log-spaced points
    /// from h to ten times the last plateau start
    pub times: Vec<f64>,
    pub plateau_tol: Option<f64>,
    pub delta: Option<f64>,
    pub rate_tol: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypoConfig {
    pub flow_time: f64,
    pub threshold: f64,
    pub exclusion: f64,
    pub samples: usize,
}

impl Default for HypoConfig {
    fn default() -> Self {
        HypoConfig {
            flow_time: 5.0,
            threshold: 100.0,
            exclusion: 0.25,
            samples: 64,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorConfig>,
    /// overrides the gallery box
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainConfig>,
    /// grid points per axis for validate/simulate; one entry means all axes
    #[serde(default = "default_grid")]
    pub grid: Vec<usize>,
    /// grid for the merge tree; defaults to `grid`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape_grid: Option<Vec<usize>>,
    /// Newton seeds per axis
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_h")]
    pub h: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_rule")]
    pub potential_rule: PotentialRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// verify: subset of eikonal, critical, kalman, hypo; empty means all
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<String>,
    #[serde(default)]
    pub hypo: HypoConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graded: Option<GradedConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
}

fn default_grid() -> Vec<usize> {
    vec![2001]
}
fn default_seeds() -> usize {
    40
}
fn default_h() -> Vec<f64> {
    vec![0.05, 0.07, 0.1]
}
fn default_rule() -> PotentialRule {
    PotentialRule::GibbsConsistent
}

pub const VERIFY_REPORTS: [&str; 4] = ["eikonal", "critical", "kalman", "hypo"];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }

    /// Ready-to-run config for a gallery entry.
    pub fn for_gallery(name: &str) -> Result<Self> {
        // build once so unknown names fail here
        let spec = gallery(name, &GalleryParams::default())?;
        let (grid, landscape_grid) = match spec.dim() {
            1 => (vec![2001], None),
            2 => (vec![121], Some(vec![201])),
            _ => (vec![41], None),
        };
        Ok(RunConfig {
            operator: Some(OperatorConfig {
                gallery: Some(name.into()),
                params: GalleryParams::default(),
                f: None,
                a0: None,
                b0: None,
                c0: None,
            }),
            domain: Some(DomainConfig {
                lo: spec.domain.lo.clone(),
                hi: spec.domain.hi.clone(),
            }),
            grid,
            landscape_grid,
            seeds: default_seeds(),
            h: if spec.dim() == 1 { default_h() } else { vec![0.1, 0.12, 0.15] },
            tolerances: Tolerances::default(),
            potential_rule: default_rule(),
            out: None,
            reports: Vec::new(),
            hypo: HypoConfig::default(),
            graded: None,
            simulate: None,
        })
    }

    /// Check the invariants that do not need the operator.
    pub fn check(&self) -> Result<()> {
        if self.h.is_empty() || self.h.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidInput(format!("h values must be positive, got {:?}", self.h)));
        }
        if self.grid.is_empty() || self.grid.iter().any(|&n| n < 3) {
            return Err(Error::InvalidInput("grid needs at least 3 points per axis".into()));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidInput("seeds must be positive".into()));
        }
        for r in &self.reports {
            if !VERIFY_REPORTS.contains(&r.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "unknown report '{r}' (expected one of {})",
                    VERIFY_REPORTS.join(", ")
                )));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("newton_tol", t.newton_tol),
            ("degeneracy_tol", t.degeneracy_tol),
            ("realness_tol", t.realness_tol),
            ("axis_tol", t.axis_tol),
            ("eikonal_tol", t.eikonal_tol),
            ("ratio_tol", t.ratio_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn scale_tolerances(&mut self, s: f64) -> Result<()> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(format!("tol-scale must be positive, got {s}")));
        }
        let t = &mut self.tolerances;
        t.newton_tol *= s;
        t.degeneracy_tol *= s;
        t.realness_tol *= s;
        t.axis_tol *= s;
        t.eikonal_tol *= s;
        Ok(())
    }

    pub fn landscape_tolerances(&self) -> LandscapeTolerances {
        LandscapeTolerances {
            newton_tol: self.tolerances.newton_tol,
            degeneracy_tol: self.tolerances.degeneracy_tol,
            ..Default::default()
        }
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            realness_tol: self.tolerances.realness_tol,
            axis_tol: self.tolerances.axis_tol,
        }
    }

    pub fn landscape_grid(&self) -> Vec<usize> {
        self.landscape_grid.clone().unwrap_or_else(|| self.grid.clone())
    }

    pub fn build_operator(&self) -> Result<OperatorSpec> {
        let op = self
            .operator
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("config has no operator section".into()))?;
        let mut spec = match (&op.gallery, &op.f) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInput("give either operator.gallery or operator.f, not both".into()))
            }
            (Some(name), None) => {
                let mut p = op.params.clone();
                if let Some(d) = &self.domain {
                    p.lo = Some(d.lo.clone());
                    p.hi = Some(d.hi.clone());
                }
                gallery(name, &p)?
            }
            (None, Some(f)) => {
                let d = self
                    .domain
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("raw operators need a domain".into()))?;
                let domain = Domain::new(d.lo.clone(), d.hi.clone())?;
                let n = domain.dim();
                let a0: Vec<String> = op.a0.clone().unwrap_or_else(|| {
                    (0..n * n).map(|k| if k % (n + 1) == 0 { "1".into() } else { "0".into() }).collect()
                });
                let b0: Vec<String> = op.b0.clone().unwrap_or_else(|| vec!["0".into(); n]);
                let a0: Vec<&str> = a0.iter().map(|s| s.as_str()).collect();
                let b0: Vec<&str> = b0.iter().map(|s| s.as_str()).collect();
                OperatorSpec::from_expressions("custom", domain, f, &a0, &b0)?
            }
            (None, None) => return Err(Error::InvalidInput("operator needs gallery or f".into())),
        };
        if let Some(c0) = &op.c0 {
            let d = spec.dim();
            spec = spec.with_c0(SmoothMap::scalar(d, c0)?)?;
        }
        Ok(spec)
    }
}

/// Parse "0.05,0.07,0.1".
pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| Error::InvalidInput(format!("bad {what} entry '{t}'")))
        })
        .collect()
}
