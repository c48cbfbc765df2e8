use serde::Serialize;

use super::OperatorSpec;
use crate::error::Result;
use crate::fields::Domain;
use crate::sampling::halton;

/// Sampled test of the averaged positivity of c⁰ along the b⁰ flow.
/// A failure refutes the condition; a pass certifies nothing beyond the samples.
#[derive(Clone, Debug, Serialize)]
pub struct HypoReport {
    pub heuristic: bool,
    pub samples: usize,
    /// points skipped because the flow left the box
    pub skipped: usize,
    /// smallest measured time fraction meas{t : c⁰ ≥ 1/C}
    pub min_measure: f64,
    /// points with measure below 1/C
    pub flagged: Vec<Vec<f64>>,
    pub pass: bool,
}

fn rk4_step(spec: &OperatorSpec, x: &[f64], dt: f64) -> Vec<f64> {
    let b = |y: &[f64]| spec.b0.eval_raw(y);
    let k1 = b(x);
    let y: Vec<f64> = x.iter().zip(&k1).map(|(a, k)| a + 0.5 * dt * k).collect();
    let k2 = b(&y);
    let y: Vec<f64> = x.iter().zip(&k2).map(|(a, k)| a + 0.5 * dt * k).collect();
    let k3 = b(&y);
    let y: Vec<f64> = x.iter().zip(&k3).map(|(a, k)| a + dt * k).collect();
    let k4 = b(&y);
    (0..x.len())
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// For quasi-random points of `domain` farther than `exclusion` from every
/// point in `centers`, integrate ẋ = b⁰(x) over [−T, T] and measure the time
/// spent where c⁰ ≥ 1/C.
pub fn check_hypo(
    spec: &OperatorSpec,
    domain: &Domain,
    flow_time: f64,
    threshold: f64,
    centers: &[Vec<f64>],
    exclusion: f64,
    samples: usize,
) -> Result<HypoReport> {
    let steps = 200usize;
    let dt = flow_time / steps as f64;
    let level = 1.0 / threshold;
    let mut rep = HypoReport {
        heuristic: true,
        samples: 0,
        skipped: 0,
        min_measure: f64::INFINITY,
        flagged: Vec::new(),
        pass: true,
    };
    'points: for x in halton(domain, samples) {
        if centers.iter().any(|c| crate::landscape::dist(c, &x) < exclusion) {
            continue;
        }
        rep.samples += 1;
        let mut count = if spec.c0(&x)? >= level { 1 } else { 0 };
        for dir in [1.0, -1.0] {
            let mut y = x.clone();
            for _ in 0..steps {
                y = rk4_step(spec, &y, dir * dt);
                if !domain.contains(&y) || y.iter().any(|v| !v.is_finite()) {
                    rep.skipped += 1;
                    rep.samples -= 1;
                    continue 'points;
                }
                if spec.c0(&y)? >= level {
                    count += 1;
                }
            }
        }
        let measure = 2.0 * flow_time * count as f64 / (2 * steps + 1) as f64;
        rep.min_measure = rep.min_measure.min(measure);
        if measure < level {
            rep.flagged.push(x);
        }
    }
    rep.pass = rep.flagged.is_empty();
    Ok(rep)
}
