//! Deterministic quantization of initial measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// How the per-coordinate quantizers of a product measure are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Hammersley ranks: point `j` takes quantile index `j` in coordinate 0
    /// and, in coordinate `c ≥ 1`, the rank of the base-`p_c` radical inverse
    /// of `j` among `0..N` (`p_c` the `c`-th prime). Every marginal is exactly
    /// the midpoint quantizer; for `N = 2^m` this is the bit-reversal net.
    #[default]
    Hammersley,
    /// Rank-one lattice: point `j` takes quantile index `j·g^c mod N` in
    /// coordinate `c`, `g` from [`lattice_generator`]. Every marginal is
    /// exactly the midpoint quantizer.
    Lattice,
    /// Tensor grid of per-coordinate midpoint quantizers with `n_c` points in
    /// coordinate `c`, `Π n_c = N`, see [`grid_shape`].
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialMeasureSpec {
    /// Uniform on `Π_c [lower_c, upper_c]`.
    ProductUniformBox {
        lower: Vec<f64>,
        upper: Vec<f64>,
        #[serde(default)]
        coupling: Coupling,
    },
    /// Independent normal coordinates truncated to `mean ± radius·std`.
    GaussianTruncated {
        mean: Vec<f64>,
        std: Vec<f64>,
        radius: f64,
        #[serde(default)]
        coupling: Coupling,
    },
    /// Uniform measure on the listed points.
    Explicit {
        points: Vec<Vec<f64>>,
        #[serde(default)]
        seed: u64,
    },
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn radical_inverse(mut j: usize, base: usize) -> f64 {
    let (mut value, mut scale) = (0.0, 1.0 / base as f64);
    while j > 0 {
        value += (j % base) as f64 * scale;
        j /= base;
        scale /= base as f64;
    }
    value
}

fn nth_prime(c: usize) -> usize {
    (2..).filter(|&q: &usize| (2..q).take_while(|k| k * k <= q).all(|k| q % k != 0)).nth(c).unwrap()
}

/// Quantile indices of the Hammersley coupling for coordinate `c`.
pub fn hammersley_ranks(n: usize, c: usize) -> Vec<usize> {
    if c == 0 {
        return (0..n).collect();
    }
    let base = nth_prime(c - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| radical_inverse(a, base).total_cmp(&radical_inverse(b, base)));
    let mut rank = vec![0; n];
    for (r, &j) in order.iter().enumerate() {
        rank[j] = r;
    }
    rank
}

/// Axis sizes of the tensor grid for `n` points in `d` coordinates: prime
/// factors of `n`, largest first, each multiplied onto the currently smallest
/// axis (lowest index on ties).
pub fn grid_shape(n: usize, d: usize) -> Vec<usize> {
    let mut primes = Vec::new();
    let (mut rest, mut p) = (n, 2);
    while rest > 1 {
        if p * p > rest {
            primes.push(rest);
            break;
        }
        while rest % p == 0 {
            primes.push(p);
            rest /= p;
        }
        p += 1;
    }
    let mut shape = vec![1; d];
    for &q in primes.iter().rev() {
        let c = (0..d).min_by_key(|&c| shape[c]).unwrap();
        shape[c] *= q;
    }
    shape
}

/// Smallest generator coprime to `n` whose rank-1 lattice `{(j, j·g mod n)}`
/// maximizes the minimum toroidal separation between points.
pub fn lattice_generator(n: usize) -> usize {
    if n <= 2 {
        return 1;
    }
    let separation = |g: usize| {
        (1..n)
            .map(|j| {
                let a = j.min(n - j);
                let b = (j * g) % n;
                let b = b.min(n - b);
                a * a + b * b
            })
            .min()
            .unwrap()
    };
    (1..n)
        .filter(|&g| gcd(g, n) == 1)
        .max_by_key(|&g| (separation(g), std::cmp::Reverse(g)))
        .unwrap()
}

impl InitialMeasureSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::ProductUniformBox { lower, .. } => lower.len(),
            Self::GaussianTruncated { mean, .. } => mean.len(),
            Self::Explicit { points, .. } => points.first().map_or(0, Vec::len),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Self::ProductUniformBox { lower, upper, .. } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::InvalidInput("box bounds must be non-empty and of equal length".into()));
                }
                if !finite(lower) || !finite(upper) || lower.iter().zip(upper).any(|(a, b)| a > b) {
                    return Err(Error::InvalidInput("box bounds must be finite with lower ≤ upper".into()));
                }
            }
            Self::GaussianTruncated { mean, std, radius, .. } => {
                if mean.is_empty() || mean.len() != std.len() {
                    return Err(Error::InvalidInput("mean and std must be non-empty and of equal length".into()));
                }
                if !finite(mean) || std.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                    return Err(Error::InvalidInput("std entries must be finite and > 0".into()));
                }
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidInput("truncation radius must be finite and > 0".into()));
                }
            }
            Self::Explicit { points, .. } => {
                let d = self.dim();
                if points.is_empty() || d == 0 || points.iter().any(|p| p.len() != d || !finite(p)) {
                    return Err(Error::InvalidInput("explicit points must be non-empty, finite rows of equal length".into()));
                }
            }
        }
        Ok(())
    }

    /// Quantile function of coordinate `c`.
    fn marginal_quantile(&self, c: usize, q: f64) -> f64 {
        match self {
            Self::ProductUniformBox { lower, upper, .. } => lower[c] + q * (upper[c] - lower[c]),
            Self::GaussianTruncated { mean, std, radius, .. } => {
                let z = Normal::new(0.0, 1.0).expect("standard normal");
                let lo = z.cdf(-radius);
                let hi = z.cdf(*radius);
                mean[c] + std[c] * z.inverse_cdf(lo + q * (hi - lo))
            }
            Self::Explicit { .. } => unreachable!("explicit measures have no marginal quantiles"),
        }
    }

    fn coupling(&self) -> Coupling {
        match self {
            Self::ProductUniformBox { coupling, .. } | Self::GaussianTruncated { coupling, .. } => *coupling,
            Self::Explicit { .. } => Coupling::Lattice,
        }
    }
}

/// `N × d` points approximating `μ₀`: midpoint quantiles `(j − ½)/N` per
/// coordinate for product measures, identity or seeded resampling for explicit
/// lists.
pub fn quantize(spec: &InitialMeasureSpec, n: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("N must be ≥ 1".into()));
    }
    let d = spec.dim();
    if let InitialMeasureSpec::Explicit { points, seed } = spec {
        if n == points.len() {
            return Ok(points.concat());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
        return Ok((0..n)
            .flat_map(|_| points[rng.gen_range(0..points.len())].clone())
            .collect());
    }
    let mut out = vec![0.0; n * d];
    match spec.coupling() {
        Coupling::Hammersley => {
            for c in 0..d {
                for (j, idx) in hammersley_ranks(n, c).into_iter().enumerate() {
                    out[j * d + c] = spec.marginal_quantile(c, (idx as f64 + 0.5) / n as f64);
                }
            }
        }
        Coupling::Lattice => {
            let g = lattice_generator(n);
            let mut z = vec![1usize; d];
            for c in 1..d {
                z[c] = z[c - 1] * g % n;
            }
            for j in 0..n {
                for c in 0..d {
                    let idx = j * z[c] % n;
                    out[j * d + c] = spec.marginal_quantile(c, (idx as f64 + 0.5) / n as f64);
                }
            }
        }
        Coupling::Grid => {
            let shape = grid_shape(n, d);
            for j in 0..n {
                let mut rest = j;
                for c in 0..d {
                    let idx = rest % shape[c];
                    rest /= shape[c];
                    out[j * d + c] = spec.marginal_quantile(c, (idx as f64 + 0.5) / shape[c] as f64);
                }
            }
        }
    }
    Ok(out)
}
