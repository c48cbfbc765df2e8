use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::SmoothMap;
use crate::grid::Grid;
use crate::operator::{OperatorSpec, SusyPerturbation};

/// Relative discrete L² norm of P_per ψ on the interior nodes, ψ = e^{−(f − f_min)/h},
/// for a given field `b` (evaluated at nodes), with
/// P_per u = Σⱼ bⱼ h∂ⱼu + h∂ⱼ(bⱼu) in centred differences.
pub fn susy_residual_field(f: &SmoothMap, b: impl Fn(&[f64]) -> Vec<f64>, grid: &Grid, h: f64) -> Result<f64> {
    let d = grid.dim();
    if f.dim() != d {
        return Err(Error::Dimension { expected: d, got: f.dim() });
    }
    let fv = grid.sample(|x| f.eval_scalar_raw(x));
    let fmin = fv.iter().copied().fold(f64::INFINITY, f64::min);
    let psi: Vec<f64> = fv.iter().map(|v| (-(v - fmin) / h).exp()).collect();
    let bv: Vec<Vec<f64>> = (0..grid.len()).map(|g| b(&grid.point(g))).collect();
    let strides = grid.strides();
    let mut mi = vec![0; d];
    let (mut num, mut den) = (0.0, 0.0);
    for g in 0..grid.len() {
        grid.unflatten(g, &mut mi);
        if grid.on_boundary(&mi) {
            continue;
        }
        let mut r = 0.0;
        for a in 0..d {
            let (p, m) = (g + strides[a], g - strides[a]);
            let c = h / (2.0 * grid.spacing(a));
            r += bv[g][a] * c * (psi[p] - psi[m]) + c * (bv[p][a] * psi[p] - bv[m][a] * psi[m]);
        }
        num += r * r;
        den += psi[g] * psi[g];
    }
    if !num.is_finite() {
        return Err(Error::NonFinite("perturbation residual".into()));
    }
    Ok((num / den).sqrt())
}

/// Residual of the perturbation on the grid Gibbs vector.
pub fn susy_residual(f: &SmoothMap, pert: &SusyPerturbation, grid: &Grid, h: f64) -> Result<f64> {
    if grid.dim() != 2 {
        return Err(Error::InvalidInput("the perturbation is two-dimensional".into()));
    }
    susy_residual_field(f, |x| pert.field(f, x, h), grid, h)
}

#[derive(Clone, Debug, Serialize)]
pub struct SusyConvergence {
    pub h: f64,
    pub points: Vec<usize>,
    pub spacing: Vec<f64>,
    pub residuals: Vec<f64>,
    /// r(Δx)/r(Δx/2)
    pub ratios: Vec<f64>,
}

/// Residuals on `levels` successive halvings starting from `n` points per axis.
pub fn susy_convergence(spec: &OperatorSpec, n: usize, levels: usize, h: f64) -> Result<SusyConvergence> {
    let pert = spec
        .perturbation
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("operator '{}' has no perturbation", spec.name)))?;
    pert.check_levels(&spec.f)?;
    let mut out = SusyConvergence {
        h,
        points: Vec::new(),
        spacing: Vec::new(),
        residuals: Vec::new(),
        ratios: Vec::new(),
    };
    let mut k = n;
    for _ in 0..levels.max(2) {
        let grid = Grid::uniform(spec.domain.clone(), k)?;
        out.residuals.push(susy_residual(&spec.f, pert, &grid, h)?);
        out.spacing.push(grid.max_spacing());
        out.points.push(k);
        k = 2 * k - 1;
    }
    out.ratios = out.residuals.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{gallery, GalleryParams};

    #[test]
    fn zero_field_has_zero_residual() {
        let spec = gallery("susy_breaking", &GalleryParams::default()).unwrap();
        let grid = Grid::uniform(spec.domain.clone(), 51).unwrap();
        let r = susy_residual_field(&spec.f, |_| vec![0.0, 0.0], &grid, 0.1).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn second_order_convergence() {
        let spec = gallery("susy_breaking", &GalleryParams::default()).unwrap();
        let c = susy_convergence(&spec, 201, 3, 0.1).unwrap();
        let last = *c.ratios.last().unwrap();
        assert!((3.5..=4.5).contains(&last), "{c:?}");
    }
}
