//! Acceptance checks, one PASS/FAIL line per criterion.

mod common;

use std::time::Instant;

use eyring_core::eyring_kramers::predict;
use eyring_core::graded::{graded_spectrum, schur_iteration_identity, GradedMatrix};
use eyring_core::grid::Grid;
use eyring_core::landscape::{classify, find_critical_points, LandscapeTolerances};
use eyring_core::linalg::{eigenvalues, jacobi_eigen, monomial_basis, transport_operator, Matrix};
use eyring_core::operator::{
    analyze_critical, gallery, verify_critical_structure, GalleryParams, OperatorSpec,
};
use eyring_core::validate::{
    default_f_cut, discretize, kappa_max, plateau_depths, semigroup_check, susy_convergence,
    validate_spectrum, DiscretizeOptions, PotentialRule, SemigroupOptions,
};
use eyring_core::LogScaled;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut m = g.matmul(&g.transpose()).scaled(1.0 / n as f64);
    for i in 0..n {
        m[(i, i)] += 0.5;
    }
    m
}

fn two_well() -> Outcome {
    let spec = common::witten("x1^4/4 - x1^2/2 + x1/10", -2.5, 2.5);
    let ls = match common::landscape(&spec, 2001, 60) {
        Ok(l) => l,
        Err(e) => return ok(false, format!("landscape failed: {e}")),
    };
    let hs = [0.1, 0.07, 0.05];
    let preds = match predict(&ls.labeling, &ls.analysis, &hs) {
        Ok(p) => p,
        Err(e) => return ok(false, format!("prediction failed: {e}")),
    };
    let grid = Grid::uniform(spec.domain.clone(), 2001).unwrap();
    let mut logs = Vec::new();
    let mut parts = vec![format!(
        "S = {:.6}, z = {:.6}",
        ls.labeling.records[0].depth,
        preds.iter().find(|p| p.minimum == 0).map_or(f64::NAN, |p| p.prefactor)
    )];
    let mut pass = true;
    for &h in &hs {
        let t = Instant::now();
        match validate_spectrum(&spec, &ls.labeling, &preds, &grid, h, PotentialRule::GibbsConsistent) {
            Ok(rep) if rep.rows.len() == 1 => {
                let r = &rep.rows[0];
                let secs = t.elapsed().as_secs_f64();
                pass &= (0.85..=1.15).contains(&r.ratio) && secs <= 60.0;
                logs.push(r.log_ratio.abs());
                parts.push(format!("h={h}: ratio {:.4} ({secs:.1}s)", r.ratio));
            }
            Ok(rep) => {
                pass = false;
                parts.push(format!("h={h}: {} rows", rep.rows.len()));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("h={h}: {e}"));
            }
        }
    }
    let monotone = logs.len() == hs.len() && logs.windows(2).all(|w| w[1] < w[0]);
    parts.push(format!("|log ratio| decreasing in 1/h: {monotone}"));
    ok(pass && monotone, parts.join("; "))
}

fn kfp_saddle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let gamma: f64 = rng.gen_range(0.5..5.0);
        let l1: f64 = rng.gen_range(-5.0..-0.1);
        let p = GalleryParams {
            potential: Some(format!("{l1:.17}*x1^2/2")),
            gamma: Some(gamma),
            ..Default::default()
        };
        let spec = gallery("kfp", &p).unwrap();
        let cp = classify(&spec.f, vec![0.0, 0.0], &LandscapeTolerances::default()).unwrap();
        let mu = match analyze_critical(&spec, &cp).map(|a| a.mu) {
            Ok(Some(mu)) => mu,
            _ => return ok(false, format!("no saddle eigenvalue for γ={gamma}, λ1={l1}")),
        };
        let exact = 0.5 * (gamma - (gamma * gamma - 4.0 * l1).sqrt());
        worst = worst.max((mu - exact).abs());
    }
    ok(worst <= 1e-10, format!("100 pairs, max abs error {worst:.2e}"))
}

fn graded_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_ratio: f64 = 0.0;
    let mut mult_ok = true;
    for _ in 0..200 {
        let p = rng.gen_range(1..=4);
        let dims: Vec<usize> = (0..p).map(|_| rng.gen_range(1..=3)).collect();
        let n: usize = dims.iter().sum();
        let tau: Vec<f64> = (1..p).map(|_| 10f64.powf(rng.gen_range(-6.0..-3.0))).collect();
        let core = random_spd(&mut rng, n);
        let g = GradedMatrix::new(dims.clone(), tau.iter().map(|&x| LogScaled::from_f64(x)).collect(), core).unwrap();
        let mut pred: Vec<(f64, usize)> = graded_spectrum(&g)
            .unwrap()
            .iter()
            .flat_map(|l| {
                let j = l.level;
                l.scaled_eigenvalues().into_iter().map(move |v| (v.to_f64().unwrap(), j))
            })
            .collect();
        pred.sort_by(|a, b| a.0.total_cmp(&b.0));
        let oracle = jacobi_eigen(&g.assemble().unwrap()).unwrap().values;
        let tmax = tau.iter().cloned().fold(0.0, f64::max);
        let bound = 100.0 * tmax * tmax;
        let mut counts = vec![0usize; p];
        for (o, (v, _)) in oracle.iter().zip(&pred) {
            let rel = (o - v).abs() / v.abs();
            if bound > 0.0 {
                worst_ratio = worst_ratio.max(rel / bound);
            } else if rel > 1e-12 {
                worst_ratio = f64::INFINITY;
            }
            // cluster of the nearest prediction in log scale
            let j = pred
                .iter()
                .min_by(|a, b| (a.0.ln() - o.ln()).abs().total_cmp(&(b.0.ln() - o.ln()).abs()))
                .unwrap()
                .1;
            counts[j - 1] += 1;
        }
        mult_ok &= counts == dims;
    }
    let secs = t.elapsed().as_secs_f64();
    ok(
        worst_ratio <= 1.0 && mult_ok && secs <= 10.0,
        format!(
            "200 cores, max rel error / (100 τ²) = {worst_ratio:.3}, multiplicities match: {mult_ok}, {secs:.2}s"
        ),
    )
}

fn labeling_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut parts = Vec::new();
    let mut pass = true;
    for (d, want, grid_n, seeds) in [(1usize, 50usize, 801usize, 80usize), (2, 20, 121, 24)] {
        let (mut done, mut rejected, mut mismatched) = (0, 0, 0);
        while done < want && rejected < 3 * want {
            let src = common::gaussian_landscape(&mut rng, d);
            let spec = OperatorSpec::from_expressions(
                "gauss",
                eyring_core::fields::Domain::cube(d, 3.0),
                &src,
                &if d == 1 { vec!["1"] } else { vec!["1", "0", "0", "1"] },
                &vec!["0"; d],
            )
            .unwrap();
            let ls = match common::landscape(&spec, grid_n, seeds) {
                Ok(l) => l,
                Err(_) => {
                    rejected += 1;
                    continue;
                }
            };
            done += 1;
            let oracle = common::flood_oracle(&spec.f, &spec.domain, 4 * (grid_n - 1) + 1);
            if let Err(msg) = compare_labeling(&ls.labeling, &oracle) {
                mismatched += 1;
                if mismatched <= 2 {
                    parts.push(format!("{d}D mismatch: {msg} [{src}]"));
                }
            }
        }
        pass &= done == want && mismatched == 0;
        parts.push(format!("{d}D: {done} compared, {mismatched} mismatched, {rejected} rejected as non-generic"));
    }
    ok(pass, parts.join("; "))
}

fn compare_labeling(lab: &eyring_core::landscape::Labeling, o: &common::FloodOracle) -> Result<(), String> {
    let keep: Vec<usize> = (0..o.minima.len())
        .filter(|&i| o.min_gradient[i] <= 2.0 * o.value_tol / o.spacing)
        .collect();
    if keep.len() != lab.minima.len() {
        return Err(format!("{} oracle minima, {} labeled", keep.len(), lab.minima.len()));
    }
    let loc_tol = 3.0 * o.spacing * 2f64.sqrt();
    let mut image = Vec::new();
    for m in 0..lab.minima.len() {
        let oi = *keep
            .iter()
            .min_by(|&&a, &&b| {
                common::dist(&o.minima[a], &lab.minima[m].x).total_cmp(&common::dist(&o.minima[b], &lab.minima[m].x))
            })
            .unwrap();
        if common::dist(&o.minima[oi], &lab.minima[m].x) > loc_tol {
            return Err(format!("minimum {m} has no oracle partner"));
        }
        let s = lab.records[m].depth;
        if s.is_finite() != o.depth[oi].is_finite() || (s.is_finite() && (s - o.depth[oi]).abs() > 4.0 * o.value_tol) {
            return Err(format!("S({m}) = {s} vs oracle {}", o.depth[oi]));
        }
        let js = lab.saddles_of(m);
        match &o.death[oi] {
            None if js.is_empty() => {}
            Some(p) if js.len() == 1 && common::dist(p, &lab.saddles[js[0]].x) <= loc_tol => {}
            _ => return Err(format!("j({m}) differs")),
        }
        image.push(oi);
    }
    // classes: minima sharing a death location
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for m in 0..lab.minima.len() {
        let dm = &o.death[image[m]];
        match classes.iter_mut().find(|c| {
            let e = &o.death[image[c[0]]];
            matches!((dm, e), (Some(a), Some(b)) if common::dist(a, b) <= loc_tol)
        }) {
            Some(c) => c.push(m),
            None => classes.push(vec![m]),
        }
    }
    let mut a: Vec<Vec<usize>> = lab.classes.iter().map(|c| {
        let mut c = c.clone();
        c.sort();
        c
    }).collect();
    a.sort();
    classes.sort();
    if a != classes {
        return Err(format!("classes {a:?} vs oracle {classes:?}"));
    }
    Ok(())
}

fn gallery_instance(name: &str, rng: &mut ChaCha8Rng) -> OperatorSpec {
    let a: f64 = rng.gen_range(0.6..1.4);
    let t: f64 = rng.gen_range(-0.15..0.15);
    let quartic = format!("(x1^2 - {a:.6})^2/4 + {t:.6}*x1");
    let p = match name {
        "witten" => {
            let d = rng.gen_range(1..=2);
            let f = if d == 1 {
                quartic
            } else {
                format!("{quartic} + {:.6}*x2^2/2", rng.gen_range(0.5..2.0))
            };
            GalleryParams { dim: Some(d), f: Some(f), ..Default::default() }
        }
        "nonreversible" => GalleryParams {
            f: Some(format!("{quartic} + {:.6}*x2^2/2", rng.gen_range(0.5..2.0))),
            strength: Some(rng.gen_range(0.2..3.0)),
            ..Default::default()
        },
        "kfp" => GalleryParams {
            potential: Some(quartic),
            gamma: Some(rng.gen_range(0.5..5.0)),
            ..Default::default()
        },
        _ => GalleryParams {
            f: Some(format!("(x1^2 + x2^2 - 1)^2 + {:.6}*x1", rng.gen_range(0.2..0.33))),
            ..Default::default()
        },
    };
    gallery(name, &p).unwrap()
}

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let mut points = 0;
    let mut worst_eta: f64 = 0.0;
    for name in ["witten", "nonreversible", "kfp", "susy_breaking"] {
        for inst in 0..20 {
            let spec = gallery_instance(name, &mut rng);
            let crit = match find_critical_points(&spec.f, &spec.domain, 16) {
                Ok(c) => c,
                Err(e) => {
                    failures.push(format!("{name}#{inst}: {e}"));
                    continue;
                }
            };
            for cp in &crit {
                points += 1;
                let an = match analyze_critical(&spec, cp) {
                    Ok(a) => a,
                    Err(e) => {
                        failures.push(format!("{name}#{inst} at {:?}: {e}", cp.x));
                        continue;
                    }
                };
                let mut bad = Vec::new();
                if an.counts.0 != cp.index || an.counts.1 != 0 {
                    bad.push(format!("counts {:?} vs index {}", an.counts, cp.index));
                }
                if !verify_critical_structure(&spec, cp).map(|r| r.antisymmetry_ok).unwrap_or(false) {
                    bad.push("BᵗH + HB too large".into());
                }
                let mu0 = an.harmonic_value(&vec![0; cp.dim()]);
                match cp.index {
                    0 if mu0.norm() > 1e-9 => bad.push(format!("μ⁰ = {mu0} at a minimum")),
                    1 => {
                        if !(mu0.re > 1e-8) {
                            bad.push(format!("μ⁰ = {mu0} at a saddle"));
                        }
                        match an.eta_identity_residual() {
                            Some(r) if r <= 1e-8 => worst_eta = worst_eta.max(r),
                            r => bad.push(format!("η identity residual {r:?}")),
                        }
                    }
                    _ => {}
                }
                if !bad.is_empty() {
                    failures.push(format!("{name}#{inst} at {:?}: {}", cp.x, bad.join(", ")));
                }
            }
        }
    }
    let n_fail = failures.len();
    failures.truncate(3);
    ok(
        n_fail == 0,
        format!(
            "4 gallery entries x 20 instances, {points} critical points, max η residual {worst_eta:.1e}, {n_fail} failures {}",
            failures.join(" | ")
        ),
    )
}

fn transport() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=4);
        let a: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..3.0)).collect();
        let l = transport_operator(&Matrix::diag(&a), m).unwrap();
        let mut got: Vec<f64> = eigenvalues(&l).unwrap().iter().map(|z| z.re).collect();
        let mut want: Vec<f64> = monomial_basis(d, m)
            .iter()
            .map(|g| g.iter().zip(&a).map(|(&k, v)| k as f64 * v).sum())
            .collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        worst = worst.max(got.iter().zip(&want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    let mut min_re = f64::INFINITY;
    for _ in 0..100 {
        let d = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=4);
        let r = Matrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        let lo = eigenvalues(&r).unwrap().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let mut a = r.clone();
        for i in 0..d {
            a[(i, i)] += rng.gen_range(0.05..0.5) - lo;
        }
        let l = transport_operator(&a, m).unwrap();
        min_re = min_re.min(eigenvalues(&l).unwrap().iter().map(|z| z.re).fold(f64::INFINITY, f64::min));
    }
    ok(
        worst <= 1e-8 && min_re > 0.0,
        format!("diagonal cases max error {worst:.1e}; random stable A: min Re σ(L_A) = {min_re:.3e}"),
    )
}

fn schur_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (d1, d2, d3) = (rng.gen_range(1..=4), rng.gen_range(1..=4), rng.gen_range(1..=4));
        let m = random_spd(&mut rng, d1 + d2 + d3);
        let r = schur_iteration_identity(&m, d1, d2, d3).unwrap();
        worst = worst.max(r / m.norm_fro());
    }
    ok(worst <= 1e-12, format!("100 instances, max residual / ‖M‖ = {worst:.2e}"))
}

fn plateaus() -> Outcome {
    let spec = common::witten("x1^4 - 2*x1^2 + 0.4*x1", -2.5, 2.5);
    let h = 0.1;
    let ls = match common::landscape(&spec, 1001, 60) {
        Ok(l) => l,
        Err(e) => return ok(false, format!("landscape failed: {e}")),
    };
    let lab = &ls.labeling;
    let preds = predict(lab, &ls.analysis, &[h]).unwrap();
    let grid = Grid::uniform(spec.domain.clone(), 1001).unwrap();
    let opt = DiscretizeOptions {
        f_cut: Some(default_f_cut(lab, h)),
        kappa_max: Some(kappa_max(lab)),
        ..Default::default()
    };
    let op = discretize(&spec, &grid, h, &opt).unwrap();
    // indicator of the shallow basin
    let (shallow, saddle) = (lab.minima[0].x[0], lab.saddles[0].x[0]);
    let u0 = op.sample(|x| if (x[0] - saddle) * (shallow - saddle) > 0.0 { 1.0 } else { 0.0 });
    let rate = preds.iter().find(|p| p.minimum == 0).unwrap().value.to_f64().unwrap() / h;
    let sopt = SemigroupOptions {
        depths: plateau_depths(lab),
        predicted_rate: Some(rate),
        ..Default::default()
    };
    match semigroup_check(&op, &u0, &[], &sopt) {
        Ok(rep) => {
            let w: Vec<String> = rep
                .windows
                .iter()
                .map(|w| format!("k={} [{:.3e}, {:.3e}] err {:.2e}", w.k, w.t_start, w.t_end, w.max_error))
                .collect();
            ok(
                rep.pass,
                format!(
                    "{}; fitted rate {:.4e} vs λ₂/h {:.4e} (rel {:.3})",
                    w.join(", "),
                    rep.relaxation.fitted_rate,
                    rate,
                    rep.relaxation.relative_error
                ),
            )
        }
        Err(e) => ok(false, format!("semigroup failed: {e}")),
    }
}

fn susy() -> Outcome {
    let spec = gallery("susy_breaking", &GalleryParams::default()).unwrap();
    match susy_convergence(&spec, 201, 3, 0.1) {
        Ok(c) => {
            let last = *c.ratios.last().unwrap();
            ok(
                (3.5..=4.5).contains(&last),
                format!("residuals {:.3e} at N = {:?}, ratios {:.3?}", c.residuals.last().unwrap(), c.points, c.ratios),
            )
        }
        Err(e) => ok(false, format!("{e}")),
    }
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 9] = [
        ("Eyring-Kramers two-well ratios", two_well),
        ("KFP saddle eigenvalue", kfp_saddle),
        ("graded solver vs dense oracle", graded_oracle),
        ("labeling vs flood-fill oracle", labeling_oracle),
        ("gallery invariant suite", invariants),
        ("transport operator spectra", transport),
        ("Schur iteration identity", schur_identity),
        ("metastable plateaus", plateaus),
        ("perturbation residual order", susy),
    ];
    let mut failed = 0;
    for (i, (name, run)) in checks.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {}: {} ({}; {:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            name,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
