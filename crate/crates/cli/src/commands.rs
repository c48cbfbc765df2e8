use eyring_core::eyring_kramers::{analyze_labeling_with, predict, LandscapeAnalysis};
use eyring_core::fields::SmoothMap;
use eyring_core::graded::{graded_spectrum, resolvent_gap_check, GradedMatrix};
use eyring_core::grid::Grid;
use eyring_core::landscape::{
    check_gener, find_critical_points_with, label, merge_tree_with, CriticalPoint, GenerReport, Labeling, SaddleRef,
};
use eyring_core::linalg::Matrix;
use eyring_core::operator::{
    analyze_critical_with, check_hypo, verify_critical_structure_with, verify_eikonal, OperatorSpec,
};
use eyring_core::validate::{
    default_f_cut, discretize, kappa_max, plateau_depths, semigroup_check, validate_spectrum, DiscretizeOptions,
    SemigroupOptions, ValidationReport,
};
use eyring_core::{Error, LogScaled, Result};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::{log_columns, num, point, sci, OutDir, LOG_HEADER};

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: OutDir,
    pub tol_scale: f64,
}

fn grid_for(spec: &OperatorSpec, n: &[usize]) -> Result<Grid> {
    let d = spec.dim();
    match n.len() {
        1 => Grid::uniform(spec.domain.clone(), n[0]),
        k if k == d => Grid::new(spec.domain.clone(), n.to_vec()),
        k => Err(Error::InvalidInput(format!("grid has {k} entries for a {d}-dimensional box"))),
    }
}

struct Landscape {
    spec: OperatorSpec,
    criticals: Vec<CriticalPoint>,
    labeling: Labeling,
    gener: GenerReport,
}

fn build_landscape(cfg: &RunConfig) -> Result<Landscape> {
    let spec = cfg.build_operator()?;
    let tol = cfg.landscape_tolerances();
    let criticals = find_critical_points_with(&spec.f, &spec.domain, cfg.seeds, &tol)?;
    let merge = merge_tree_with(&spec.f, &spec.domain, &cfg.landscape_grid(), &tol)?;
    let labeling = label(&merge, &criticals)?;
    let gener = check_gener(&labeling, &criticals);
    Ok(Landscape {
        spec,
        criticals,
        labeling,
        gener,
    })
}

fn analyze(cfg: &RunConfig, ls: &Landscape) -> Result<LandscapeAnalysis> {
    analyze_labeling_with(&ls.spec, &ls.labeling, &cfg.analysis_options())
}

fn coord_header(prefix: &str, d: usize) -> Vec<String> {
    let mut h = vec![prefix.to_string()];
    h.extend((1..=d).map(|i| format!("x{i}")));
    h
}

fn coords(x: &[f64]) -> Vec<String> {
    x.iter().map(|v| num(*v)).collect()
}

fn saddle_list(refs: &[SaddleRef]) -> String {
    refs.iter()
        .map(|s| match s {
            SaddleRef::Fictive => "inf".to_string(),
            SaddleRef::Saddle(i) => i.to_string(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Serialize)]
struct LandscapeJson<'a> {
    criticals: &'a [CriticalPoint],
    labeling: &'a Labeling,
    gener: &'a GenerReport,
}

pub fn landscape(ctx: &Ctx) -> Result<String> {
    let ls = build_landscape(&ctx.cfg)?;
    let lab = &ls.labeling;
    let d = ls.spec.dim();

    let mut h = coord_header("id", d);
    h.extend(["index", "f"].map(String::from));
    let rows: Vec<Vec<String>> = ls
        .criticals
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut r = vec![i.to_string()];
            r.extend(coords(&c.x));
            r.extend([c.index.to_string(), num(c.value)]);
            r
        })
        .collect();
    let h: Vec<&str> = h.iter().map(|s| s.as_str()).collect();
    ctx.out.csv("criticals.csv", &h, &rows)?;

    let mut h = coord_header("m_id", d);
    h.extend(["f", "sigma", "S", "kind", "class", "saddles"].map(String::from));
    let rows: Vec<Vec<String>> = lab
        .minima
        .iter()
        .zip(&lab.records)
        .enumerate()
        .map(|(i, (m, r))| {
            let mut row = vec![i.to_string()];
            row.extend(coords(&m.x));
            row.extend([
                num(m.value),
                num(r.sigma),
                num(r.depth),
                format!("{:?}", r.kind),
                r.class.to_string(),
                saddle_list(&r.saddles),
            ]);
            row
        })
        .collect();
    let h: Vec<&str> = h.iter().map(|s| s.as_str()).collect();
    ctx.out.csv("minima.csv", &h, &rows)?;

    let mut h = coord_header("s_id", d);
    h.extend(["f", "branch_a", "branch_b"].map(String::from));
    let rows: Vec<Vec<String>> = lab
        .saddles
        .iter()
        .zip(&lab.saddle_branches)
        .enumerate()
        .map(|(i, (s, b))| {
            let mut row = vec![i.to_string()];
            row.extend(coords(&s.x));
            row.extend([num(s.value), b[0].to_string(), b[1].to_string()]);
            row
        })
        .collect();
    let h: Vec<&str> = h.iter().map(|s| s.as_str()).collect();
    ctx.out.csv("saddles.csv", &h, &rows)?;

    ctx.out.json(
        "landscape.json",
        &LandscapeJson {
            criticals: &ls.criticals,
            labeling: lab,
            gener: &ls.gener,
        },
    )?;

    let mut s = format!(
        "{} critical points, {} minima, {} separating saddles\n",
        ls.criticals.len(),
        lab.minima.len(),
        lab.saddles.len()
    );
    for (i, (m, r)) in lab.minima.iter().zip(&lab.records).enumerate() {
        s.push_str(&format!(
            "  m{i} at {} f = {:.6} S = {} {:?} class {}\n",
            point(&m.x),
            m.value,
            if r.depth.is_finite() { format!("{:.6}", r.depth) } else { "inf".into() },
            r.kind,
            r.class
        ));
    }
    s.push_str(&format!(
        "genericity: {}\n",
        if ls.gener.pass { "ok" } else { "fails (see landscape.json)" }
    ));
    if lab.degenerate {
        s.push_str("warning: minima of equal depth share a component\n");
    }
    Ok(s)
}

#[derive(Serialize)]
struct CriticalCheck {
    id: usize,
    x: Vec<f64>,
    index: usize,
    structure: Option<eyring_core::operator::CriticalStructureReport>,
    counts: Option<(usize, usize, usize)>,
    mu: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct VerifyJson {
    eikonal: Option<eyring_core::operator::EikonalReport>,
    criticals: Vec<CriticalCheck>,
    hypo: Option<eyring_core::operator::HypoReport>,
    pass: bool,
}

pub fn verify(ctx: &Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let want = |r: &str| cfg.reports.is_empty() || cfg.reports.iter().any(|x| x == r);
    let spec = cfg.build_operator()?;
    let tol = cfg.landscape_tolerances();
    let criticals = find_critical_points_with(&spec.f, &spec.domain, cfg.seeds, &tol)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, at: String, value: f64, pass: bool, rows: &mut Vec<Vec<String>>| {
        rows.push(vec![name.to_string(), at.clone(), num(value), pass.to_string()]);
        if !pass {
            failures.push(format!("{name} at {at}"));
        }
    };

    let eikonal = if want("eikonal") {
        let r = verify_eikonal(&spec, 256, cfg.tolerances.eikonal_tol)?;
        check("eikonal_c0", "samples".into(), r.max_c0_residual, r.max_c0_residual <= r.tol, &mut rows);
        check(
            "eikonal_transport",
            "samples".into(),
            r.max_transport_residual,
            r.max_transport_residual <= r.tol,
            &mut rows,
        );
        check("eikonal_div_b", "samples".into(), r.max_div_residual, r.max_div_residual <= r.tol, &mut rows);
        check("c0_nonnegative", "samples".into(), r.min_c0, r.min_c0 >= -r.tol, &mut rows);
        Some(r)
    } else {
        None
    };

    let mut crit = Vec::new();
    if want("critical") || want("kalman") {
        for (i, c) in criticals.iter().enumerate() {
            let at = format!("c{i} {}", point(&c.x));
            let st = verify_critical_structure_with(&spec, c, ctx.tol_scale)?;
            if want("critical") {
                check("vanishing", at.clone(), st.b_norm.max(st.c0.abs()), st.vanishing_ok, &mut rows);
                check("antisymmetry", at.clone(), st.antisymmetry_residual, st.antisymmetry_ok, &mut rows);
                let hmin = c.hessian_eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
                check("hessian_invertible", at.clone(), hmin, st.hessian_invertible, &mut rows);
            }
            if want("kalman") {
                check("kalman_rank", at.clone(), st.kalman_rank as f64, st.kalman_ok, &mut rows);
            }
            let mut cc = CriticalCheck {
                id: i,
                x: c.x.clone(),
                index: c.index,
                structure: Some(st),
                counts: None,
                mu: None,
                error: None,
            };
            if want("critical") {
                match analyze_critical_with(&spec, c, &cfg.analysis_options()) {
                    Ok(a) => {
                        check("lambda_halfplanes", at.clone(), a.counts.0 as f64, true, &mut rows);
                        cc.counts = Some(a.counts);
                        cc.mu = a.mu;
                    }
                    Err(e) if e.kind() == eyring_core::ErrorKind::Assumption => {
                        check("lambda_halfplanes", at.clone(), f64::NAN, false, &mut rows);
                        cc.error = Some(e.to_string());
                    }
                    Err(e) => return Err(e),
                }
            }
            crit.push(cc);
        }
    }

    let hypo = if want("hypo") {
        let centres: Vec<Vec<f64>> = criticals.iter().map(|c| c.x.clone()).collect();
        let h = &cfg.hypo;
        let r = check_hypo(&spec, &spec.domain, h.flow_time, h.threshold, &centres, h.exclusion, h.samples)?;
        check("hypo_heuristic", "samples".into(), r.min_measure, r.pass, &mut rows);
        Some(r)
    } else {
        None
    };

    let pass = failures.is_empty();
    ctx.out.csv("verify.csv", &["check", "location", "value", "pass"], &rows)?;
    ctx.out.json(
        "verify.json",
        &VerifyJson {
            eikonal,
            criticals: crit,
            hypo,
            pass,
        },
    )?;
    let summary = format!(
        "{} checks on {} critical points: {}\n",
        rows.len(),
        criticals.len(),
        if pass { "all passed".to_string() } else { format!("{} failed", failures.len()) }
    );
    if pass {
        Ok(summary)
    } else {
        ctx.out.text("summary.txt", &summary)?;
        Err(Error::Assumption(format!("verification failed: {}", failures.join("; "))))
    }
}

pub fn predict_cmd(ctx: &Ctx) -> Result<String> {
    let ls = build_landscape(&ctx.cfg)?;
    let an = analyze(&ctx.cfg, &ls)?;
    let preds = predict(&ls.labeling, &an, &ctx.cfg.h)?;
    let mut header = vec!["m_id", "S", "z", "h"];
    header.extend(LOG_HEADER);
    let mut rows = Vec::new();
    let mut s = String::new();
    for p in preds.iter().filter(|p| p.minimum != ls.labeling.bottom()) {
        let mut r = vec![p.minimum.to_string(), num(p.depth), num(p.prefactor), num(p.h)];
        r.extend(log_columns(&p.value));
        rows.push(r);
        s.push_str(&format!(
            "  m{} S = {:.6} z = {:.6} h = {}: λ = {}\n",
            p.minimum,
            p.depth,
            p.prefactor,
            p.h,
            sci(&p.value)
        ));
    }
    ctx.out.csv("predict.csv", &header, &rows)?;
    ctx.out.json("predict.json", &preds)?;
    Ok(format!(
        "{} minima (m{} is the global minimum, λ = 0)\n{s}",
        ls.labeling.minima.len(),
        ls.labeling.bottom()
    ))
}

pub fn graded(ctx: &Ctx) -> Result<String> {
    let g = ctx
        .cfg
        .graded
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("config has no graded section".into()))?;
    let core = Matrix::from_rows(&g.core);
    let tau: Vec<LogScaled> = g.tau.iter().map(|&t| LogScaled::from_f64(t)).collect();
    let gm = GradedMatrix::new(g.dims.clone(), tau, core)?;
    let levels = graded_spectrum(&gm)?;
    let mut header = vec!["level", "k", "core_eigenvalue", "condition"];
    header.extend(LOG_HEADER);
    let mut rows = Vec::new();
    let mut s = String::new();
    for lv in &levels {
        for (k, (e, v)) in lv.eigenvalues.iter().zip(lv.scaled_eigenvalues()).enumerate() {
            let mut r = vec![lv.level.to_string(), k.to_string(), num(*e), num(lv.condition)];
            r.extend(log_columns(&v));
            rows.push(r);
            s.push_str(&format!("  level {} #{k}: {}\n", lv.level, sci(&v)));
        }
    }
    ctx.out.csv("graded.csv", &header, &rows)?;
    if !g.z.is_empty() {
        let z: Vec<Complex64> = g.z.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        let rep = resolvent_gap_check(&gm, &z)?;
        let rows: Vec<Vec<String>> = rep
            .samples
            .iter()
            .map(|r| vec![num(r.z.re), num(r.z.im), num(r.resolvent_norm), num(r.distance), num(r.product)])
            .collect();
        ctx.out.csv("resolvent.csv", &["z_re", "z_im", "resolvent_norm", "distance", "product"], &rows)?;
        s.push_str(&format!("resolvent constant {:.4}\n", rep.constant));
    }
    Ok(format!("{} levels, {} eigenvalues\n{s}", levels.len(), rows.len()))
}

pub fn validate(ctx: &Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let ls = build_landscape(cfg)?;
    let an = analyze(cfg, &ls)?;
    let preds = predict(&ls.labeling, &an, &cfg.h)?;
    let grid = grid_for(&ls.spec, &cfg.grid)?;
    // one thread per h; results are collected in input order
    let reports: Vec<Result<ValidationReport>> = std::thread::scope(|sc| {
        let handles: Vec<_> = cfg
            .h
            .iter()
            .map(|&h| {
                let (spec, lab, preds, grid) = (&ls.spec, &ls.labeling, &preds, &grid);
                sc.spawn(move || validate_spectrum(spec, lab, preds, grid, h, cfg.potential_rule))
            })
            .collect();
        handles
            .into_iter()
            .map(|j| j.join().unwrap_or_else(|_| Err(Error::Numerical("validation thread panicked".into()))))
            .collect()
    });
    let reports: Vec<ValidationReport> = reports.into_iter().collect::<Result<_>>()?;
    let header = [
        "h",
        "m_id",
        "S",
        "predicted_log10",
        "computed_re",
        "computed_im",
        "ratio",
        "log_ratio",
        "unknowns",
        "method",
        "pass",
    ];
    let mut rows = Vec::new();
    let mut spectrum = Vec::new();
    let mut s = String::new();
    let mut all_pass = true;
    for rep in &reports {
        spectrum.push(vec![
            num(rep.h),
            num(rep.kernel.re),
            num(rep.kernel.im),
            rep.gap.map_or("nan".into(), |g| num(g.re)),
            rep.gap.map_or("nan".into(), |g| num(g.im)),
            num(rep.gibbs_residual),
            rep.unknowns.to_string(),
        ]);
        for r in &rep.rows {
            let pass = (r.ratio - 1.0).abs() <= cfg.tolerances.ratio_tol;
            all_pass &= pass;
            rows.push(vec![
                num(rep.h),
                r.minimum.to_string(),
                num(r.depth),
                num(r.predicted.log10_abs()),
                num(r.computed.re),
                num(r.computed.im),
                num(r.ratio),
                num(r.log_ratio),
                rep.unknowns.to_string(),
                format!("{:?}", rep.method).to_lowercase(),
                pass.to_string(),
            ]);
            s.push_str(&format!(
                "  h = {} m{}: computed {:.6e} predicted {} ratio {:.4}\n",
                rep.h,
                r.minimum,
                r.computed.re,
                sci(&r.predicted),
                r.ratio
            ));
        }
    }
    ctx.out.csv("validate.csv", &header, &rows)?;
    ctx.out.csv(
        "spectrum.csv",
        &["h", "kernel_re", "kernel_im", "gap_re", "gap_im", "gibbs_residual", "unknowns"],
        &spectrum,
    )?;
    ctx.out.json("validate.json", &reports)?;
    Ok(format!(
        "{} comparisons, ratio within ±{}: {}\n{s}",
        rows.len(),
        cfg.tolerances.ratio_tol,
        if all_pass { "all" } else { "not all" }
    ))
}

pub fn simulate(ctx: &Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let sim = cfg.simulate.clone().unwrap_or_default();
    let ls = build_landscape(cfg)?;
    let lab = &ls.labeling;
    let h = sim.h.unwrap_or(cfg.h[0]);
    if !(h > 0.0) {
        return Err(Error::InvalidInput("simulate.h must be positive".into()));
    }
    let grid = grid_for(&ls.spec, &cfg.grid)?;
    let opt = DiscretizeOptions {
        rule: cfg.potential_rule,
        f_cut: Some(default_f_cut(lab, h)),
        kappa_max: Some(kappa_max(lab)),
        ..Default::default()
    };
    let op = discretize(&ls.spec, &grid, h, &opt)?;
    let u0 = match &sim.initial {
        Some(src) => {
            let u = SmoothMap::scalar(ls.spec.dim(), src)?;
            op.sample(|x| u.eval_scalar_raw(x))
        }
        None => {
            // nodes nearer to the shallowest minimum than to any other
            let target = &lab.minima[0].x;
            op.sample(|x| {
                let d0 = dist2(x, target);
                if lab.minima.iter().all(|m| dist2(x, &m.x) >= d0) {
                    1.0
                } else {
                    0.0
                }
            })
        }
    };
    let mut predicted_rate = None;
    if lab.minima.len() > 1 {
        if let Ok(an) = analyze(cfg, &ls) {
            if let Ok(p) = predict(lab, &an, &[h]) {
                predicted_rate = p
                    .iter()
                    .filter(|r| !r.value.is_zero())
                    .map(|r| r.value)
                    .min_by(|a, b| a.cmp_value(b))
                    .and_then(|v| v.to_f64())
                    .map(|v| v / h);
            }
        }
    }
    let defaults = SemigroupOptions::default();
    let sopt = SemigroupOptions {
        depths: plateau_depths(lab),
        predicted_rate,
        plateau_tol: sim.plateau_tol.unwrap_or(defaults.plateau_tol),
        delta: sim.delta.unwrap_or(defaults.delta),
        rate_tol: sim.rate_tol.unwrap_or(defaults.rate_tol),
        ..defaults
    };
    let times = if sim.times.is_empty() {
        let s_max = sopt.depths.iter().cloned().fold(0.0, f64::max);
        let t_end = 10.0 * h.ln().powi(2) * (2.0 * s_max / h).exp();
        let (a, b) = (h.ln(), t_end.max(100.0 * h).ln());
        (0..80).map(|i| (a + (b - a) * i as f64 / 79.0).exp()).collect()
    } else {
        sim.times.clone()
    };
    let rep = semigroup_check(&op, &u0, &times, &sopt)?;
    let curve: Vec<Vec<String>> = rep.times.iter().zip(&rep.distances).map(|(t, d)| vec![num(*t), num(*d)]).collect();
    ctx.out.csv("simulate.csv", &["t", "distance"], &curve)?;
    let wins: Vec<Vec<String>> = rep
        .windows
        .iter()
        .map(|w| {
            vec![
                w.k.to_string(),
                num(w.t_start),
                num(w.t_end),
                w.rank.to_string(),
                num(w.max_error),
                w.empty.to_string(),
                w.pass.to_string(),
            ]
        })
        .collect();
    ctx.out.csv("windows.csv", &["k", "t_start", "t_end", "rank", "max_error", "empty", "pass"], &wins)?;
    ctx.out.json("simulate.json", &rep)?;
    let f = &rep.relaxation;
    let mut s = format!("h = {h}, {} unknowns\n", op.len());
    for w in &rep.windows {
        s.push_str(&format!(
            "  window {} [{:.3e}, {:.3e}] rank {} error {:.2e} {}\n",
            w.k,
            w.t_start,
            w.t_end,
            w.rank,
            w.max_error,
            if w.empty { "empty" } else if w.pass { "ok" } else { "FAIL" }
        ));
    }
    s.push_str(&format!(
        "  fitted rate {:.4e}, numeric {:.4e}, relative error {:.3} {}\n",
        f.fitted_rate,
        f.numeric_rate,
        f.relative_error,
        if f.pass { "ok" } else { "FAIL" }
    ));
    Ok(s)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Write the ready config `cfg` for gallery entry `name`.
pub fn gallery(ctx: &Ctx, name: &str) -> Result<String> {
    let file = format!("{name}.json");
    ctx.out.json(&file, &ctx.cfg)?;
    Ok(format!("wrote {}\n", ctx.out.path(&file).display()))
}
