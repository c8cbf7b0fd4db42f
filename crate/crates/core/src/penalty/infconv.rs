use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AdmissibleFunction, ModeratedPenalty};
use crate::{Error, Result};

const RANDOM_STARTS: usize = 7;
const START_SEED: u64 = 0x1f_c0_4e;
const MAX_ITERS: usize = 20_000;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn project_to_ball(y: &mut [f64], radius: f64) {
    let r = norm(y);
    if r > radius {
        y.iter_mut().for_each(|v| *v *= radius / r);
    }
}

/// Pattern search with a finite-difference gradient direction, a fixed set of
/// coordinate directions and a few seeded random directions per sweep.
fn local_descent(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64) {
    let m = start.len();
    let mut y = start.to_vec();
    project_to_ball(&mut y, radius);
    let mut fy = f(&y);
    let mut step = 0.25 * (1.0 + norm(&y)).min(radius.max(1e-3));
    let mut trial = vec![0.0; m];
    let mut grad = vec![0.0; m];
    for _ in 0..MAX_ITERS {
        if step <= 1e-13 * (1.0 + norm(&y)) {
            break;
        }
        let mut directions: Vec<Vec<f64>> = Vec::with_capacity(3 * m + 1);
        for k in 0..m {
            let h = 1e-7 * (1.0 + y[k].abs());
            trial.copy_from_slice(&y);
            trial[k] = y[k] + h;
            let fp = f(&trial);
            trial[k] = y[k] - h;
            let fm = f(&trial);
            grad[k] = (fp - fm) / (2.0 * h);
        }
        let gn = norm(&grad);
        if gn > 0.0 && gn.is_finite() {
            directions.push(grad.iter().map(|g| -g / gn).collect());
        }
        for k in 0..m {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; m];
                e[k] = sign;
                directions.push(e);
            }
        }
        for _ in 0..m.max(2) {
            let mut d: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dn = norm(&d);
            if dn > 0.0 {
                d.iter_mut().for_each(|v| *v /= dn);
                directions.push(d);
            }
        }
        let mut improved = false;
        for d in &directions {
            trial.iter_mut().zip(&y).zip(d).for_each(|((t, yv), dv)| *t = yv + step * dv);
            project_to_ball(&mut trial, radius);
            let ft = f(&trial);
            if ft < fy {
                y.copy_from_slice(&trial);
                fy = ft;
                improved = true;
                break;
            }
        }
        if improved {
            step *= 2.0;
        } else {
            step *= 0.5;
        }
    }
    (y, fy)
}

/// `ψ^n(x) = inf_{y ∈ U} ψ(y) + n θ(|x − y|)` at `x` given in subspace coordinates.
///
/// Minimizers lie in the ball `{φ(|y|) ≤ ψ(x) + 1}` (φ the reference of ψ), so
/// the search is confined to it. Starts: `x`, `0` and seven seeded random
/// points of that ball.
pub fn inf_convolution(
    psi: &ModeratedPenalty,
    theta: &AdmissibleFunction,
    n: usize,
    x: &[f64],
) -> Result<f64> {
    if x.len() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: x.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidInput("inf-convolution index must be >= 1".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("inf-convolution argument".into()));
    }
    let at_x = psi.eval(x);
    if at_x == 0.0 {
        return Ok(0.0);
    }
    let weight = n as f64;
    let objective = |y: &[f64]| {
        let gap: f64 = y
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        psi.eval(y) + weight * theta.eval(gap)
    };
    let reference = psi.reference();
    let mut radius = 1.0;
    while reference.eval(radius) - 1.0 <= at_x && radius < 1e12 {
        radius *= 2.0;
    }
    let radius = radius.max(norm(x));

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut starts = vec![x.to_vec(), vec![0.0; x.len()]];
    for _ in 0..RANDOM_STARTS {
        let mut d: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dn = norm(&d).max(1e-300);
        let scale = radius * rng.gen_range(0.0..1.0) / dn;
        d.iter_mut().for_each(|v| *v *= scale);
        starts.push(d);
    }
    let best = starts
        .iter()
        .map(|s| local_descent(&objective, s, radius, &mut rng).1)
        .fold(at_x, f64::min);
    Ok(best.max(0.0))
}
