use super::AdmissibleFunction;
use crate::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;
const MAX_DOUBLINGS: usize = 8;

/// Maximizes the concave map `r ↦ s r − θ(r)` on `[0, hi]` by golden-section search.
fn golden_max(g: impl Fn(f64) -> f64, hi: f64) -> (f64, f64) {
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..256 {
        if b - a <= 1e-15 * (1.0 + hi) {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
    }
    let r = 0.5 * (a + b);
    // The endpoints are candidates too: the maximizer may sit at r = 0.
    [(0.0, g(0.0)), (r, g(r)), (hi, g(hi))]
        .into_iter()
        .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// `θ*(s) = sup_{r ≥ 0} (s r − θ(r))`.
///
/// The search interval `[0, r_max]` is doubled (at most eight times) while the
/// maximizer sits on its right end.
pub fn fenchel_conjugate(theta: &AdmissibleFunction, s: f64, r_max: f64) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidInput(format!("conjugate argument must be >= 0 (got {s})")));
    }
    if !(r_max > 0.0) {
        return Err(Error::InvalidInput(format!("r_max must be positive (got {r_max})")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let g = |r: f64| s * r - theta.eval(r);
    let mut hi = r_max;
    for _ in 0..=MAX_DOUBLINGS {
        let (r, value) = golden_max(g, hi);
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("conjugate objective at r = {r}")));
        }
        if r < hi * (1.0 - 1e-9) {
            return Ok(value.max(0.0));
        }
        hi *= 2.0;
    }
    Err(Error::UnboundedConjugate { s, r_max: hi / 2.0 })
}

/// `|θ(r) + θ*(θ′(r)) − r θ′(r)|`, the Fenchel–Young equality defect at `r`.
pub fn young_residual(theta: &AdmissibleFunction, r: f64, r_max: f64) -> Result<f64> {
    let slope = theta.deriv(r);
    let conj = fenchel_conjugate(theta, slope, r_max)?;
    Ok((theta.eval(r) + conj - r * slope).abs())
}
