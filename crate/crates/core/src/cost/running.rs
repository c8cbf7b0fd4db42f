use crate::transport::DiscreteMeasure;

/// Running cost `L(x, μ) ≥ 0` evaluated against a cohort.
pub trait RunningCost: Send + Sync {
    fn name(&self) -> &str;

    fn eval(&self, x: &[f64], cohort: &DiscreteMeasure) -> f64;

    /// `(1/N) Σ_i L(x_i, μ[x⃗])` for a flat `N × d` state.
    fn population_mean(&self, states: &[f64], d: usize) -> f64 {
        let n = states.len() / d;
        let cohort = DiscreteMeasure::uniform(d, states.to_vec()).expect("finite states");
        (0..n)
            .map(|i| self.eval(&states[i * d..(i + 1) * d], &cohort))
            .sum::<f64>()
            / n as f64
    }

    /// Gradient of [`Self::population_mean`] with respect to every state
    /// coordinate, central differences unless overridden.
    fn population_gradient(&self, states: &[f64], d: usize, out: &mut [f64]) {
        let mut x = states.to_vec();
        for k in 0..x.len() {
            let h = 1e-6 * (1.0 + states[k].abs());
            x[k] = states[k] + h;
            let plus = self.population_mean(&x, d);
            x[k] = states[k] - h;
            let minus = self.population_mean(&x, d);
            x[k] = states[k];
            out[k] = (plus - minus) / (2.0 * h);
        }
    }
}

/// `L ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroCost;

impl RunningCost for ZeroCost {
    fn name(&self) -> &str {
        "zero"
    }

    fn eval(&self, _x: &[f64], _cohort: &DiscreteMeasure) -> f64 {
        0.0
    }

    fn population_mean(&self, _states: &[f64], _d: usize) -> f64 {
        0.0
    }

    fn population_gradient(&self, _states: &[f64], _d: usize, out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Squared deviation of a coordinate block from its cohort mean:
/// `|x_B − mean_B(μ)|²`.
#[derive(Debug, Clone)]
pub struct VarianceCost {
    name: String,
    start: usize,
    len: usize,
}

impl VarianceCost {
    /// `|x − mean(μ)|²` over all `d` coordinates.
    pub fn first_order(d: usize) -> Self {
        Self {
            name: "variance".into(),
            start: 0,
            len: d,
        }
    }

    /// `|p − mean_p(μ)|²` for states `(q, p) ∈ ℝ^{2m}`.
    pub fn second_order(m: usize) -> Self {
        Self {
            name: "velocity_variance".into(),
            start: m,
            len: m,
        }
    }

    fn block_mean(&self, states: &[f64], d: usize) -> Vec<f64> {
        let n = states.len() / d;
        let mut mean = vec![0.0; self.len];
        for i in 0..n {
            for (c, m) in mean.iter_mut().enumerate() {
                *m += states[i * d + self.start + c];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        mean
    }
}

impl RunningCost for VarianceCost {
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, x: &[f64], cohort: &DiscreteMeasure) -> f64 {
        let mean = cohort.mean();
        (self.start..self.start + self.len)
            .map(|c| (x[c] - mean[c]).powi(2))
            .sum()
    }

    fn population_mean(&self, states: &[f64], d: usize) -> f64 {
        let n = states.len() / d;
        let mean = self.block_mean(states, d);
        (0..n)
            .map(|i| {
                (0..self.len)
                    .map(|c| (states[i * d + self.start + c] - mean[c]).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / n as f64
    }

    fn population_gradient(&self, states: &[f64], d: usize, out: &mut [f64]) {
        // The mean's own variation contributes Σ_i (x_i − x̄) = 0.
        let n = states.len() / d;
        let mean = self.block_mean(states, d);
        out.fill(0.0);
        for i in 0..n {
            for c in 0..self.len {
                let k = i * d + self.start + c;
                out[k] = 2.0 * (states[k] - mean[c]) / n as f64;
            }
        }
    }
}

/// `|x − a|²` towards a fixed target `a`.
#[derive(Debug, Clone)]
pub struct TrackingCost {
    pub target: Vec<f64>,
}

impl RunningCost for TrackingCost {
    fn name(&self) -> &str {
        "tracking"
    }

    fn eval(&self, x: &[f64], _cohort: &DiscreteMeasure) -> f64 {
        x.iter().zip(&self.target).map(|(a, b)| (a - b).powi(2)).sum()
    }

    fn population_mean(&self, states: &[f64], d: usize) -> f64 {
        let n = states.len() / d;
        states
            .chunks(d)
            .map(|x| x.iter().zip(&self.target).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .sum::<f64>()
            / n as f64
    }

    fn population_gradient(&self, states: &[f64], d: usize, out: &mut [f64]) {
        let n = (states.len() / d) as f64;
        for (k, (o, s)) in out.iter_mut().zip(states).enumerate() {
            *o = 2.0 * (s - self.target[k % d]) / n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_examples() {
        let v = VarianceCost::first_order(1);
        let cohort = DiscreteMeasure::uniform(1, vec![0.0, 2.0]).unwrap();
        assert_eq!(v.eval(&[0.0], &cohort), 1.0);
        let same = DiscreteMeasure::uniform(2, vec![1.0, 2.0, 1.0, 2.0]).unwrap();
        assert_eq!(VarianceCost::first_order(2).eval(&[1.0, 2.0], &same), 0.0);
        let aligned = DiscreteMeasure::uniform(2, vec![0.0, 1.0, 5.0, 1.0, -3.0, 1.0]).unwrap();
        assert_eq!(VarianceCost::second_order(1).eval(&[9.0, 1.0], &aligned), 0.0);
    }

    #[test]
    fn analytic_gradients_match_generic_differences() {
        struct Generic<'a>(&'a dyn RunningCost);
        impl RunningCost for Generic<'_> {
            fn name(&self) -> &str {
                "generic"
            }
            fn eval(&self, x: &[f64], cohort: &DiscreteMeasure) -> f64 {
                self.0.eval(x, cohort)
            }
        }
        let states = vec![0.3, -1.0, 2.0, 0.5, -0.7, 1.1, 0.0, 0.4];
        let costs: Vec<Box<dyn RunningCost>> = vec![
            Box::new(VarianceCost::first_order(2)),
            Box::new(VarianceCost::second_order(1)),
            Box::new(TrackingCost { target: vec![1.0, -0.5] }),
        ];
        for c in &costs {
            let g = Generic(c.as_ref());
            assert!((g.population_mean(&states, 2) - c.population_mean(&states, 2)).abs() < 1e-14);
            let (mut a, mut b) = (vec![0.0; 8], vec![0.0; 8]);
            c.population_gradient(&states, 2, &mut a);
            g.population_gradient(&states, 2, &mut b);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-8, "{}: {x} vs {y}", c.name());
            }
        }
    }
}
