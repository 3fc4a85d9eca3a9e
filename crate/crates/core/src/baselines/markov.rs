//! Finite-support Markov renewables and the forecasters used by MPC.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::{Error, Result};

const ROW_TOL: f64 = 1e-12;

/// Transition law `P(g_{t+1} = j | g_t = i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transitions {
    Stationary(Vec<Vec<f64>>),
    /// One matrix per step `t -> t+1`.
    PerInterval(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovRenewable {
    /// Renewable levels in increasing order, kWh.
    pub support: Vec<f64>,
    pub transitions: Transitions,
    /// Distribution of `g_0` over the support.
    pub initial: Vec<f64>,
}

fn check_distribution(p: &[f64], n: usize, what: &str) -> Result<()> {
    if p.len() != n {
        return Err(Error::domain(format!(
            "{what} has {} entries, support has {n}",
            p.len()
        )));
    }
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::domain(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > ROW_TOL {
        return Err(Error::domain(format!("{what} sums to {s}")));
    }
    Ok(())
}

impl MarkovRenewable {
    pub fn new(support: Vec<f64>, transitions: Transitions, initial: Vec<f64>) -> Result<Self> {
        let m = MarkovRenewable {
            support,
            transitions,
            initial,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.support.len();
        if n == 0 {
            return Err(Error::domain("renewable support is empty"));
        }
        if self.support.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::domain("renewable levels must be >= 0"));
        }
        if self.support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("renewable support must be strictly increasing"));
        }
        check_distribution(&self.initial, n, "initial distribution")?;
        let mats: Vec<&Vec<Vec<f64>>> = match &self.transitions {
            Transitions::Stationary(p) => vec![p],
            Transitions::PerInterval(v) => v.iter().collect(),
        };
        for (t, p) in mats.iter().enumerate() {
            if p.len() != n {
                return Err(Error::domain(format!("transition matrix {t} has {} rows", p.len())));
            }
            for (i, row) in p.iter().enumerate() {
                check_distribution(row, n, &format!("transition {t} row {i}"))?;
            }
        }
        Ok(())
    }

    /// Deterministic chain that reproduces `path` exactly.
    pub fn point_mass(path: &[f64]) -> Result<Self> {
        if path.is_empty() {
            return Err(Error::domain("path is empty"));
        }
        let mut support = path.to_vec();
        support.sort_by(f64::total_cmp);
        support.dedup();
        let n = support.len();
        let index = |g: f64| support.iter().position(|&s| s == g).expect("level in support");
        let unit = |j: usize| {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            row
        };
        let transitions = path.windows(2).map(|w| vec![unit(index(w[1])); n]).collect::<Vec<_>>();
        let transitions = if transitions.is_empty() {
            Transitions::Stationary((0..n).map(unit).collect())
        } else {
            Transitions::PerInterval(transitions)
        };
        Self::new(support.clone(), transitions, unit(index(path[0])))
    }

    /// Quantizes independent per-interval censored normals `max(0, N(mean_t,
    /// std_t^2))` onto `levels` evenly spaced points from 0 to the largest
    /// `mean + 3 std`. Each interval's mass is assigned to the nearest level.
    pub fn quantize_profile(mean: &[f64], std: &[f64], levels: usize) -> Result<Self> {
        if mean.is_empty() || mean.len() != std.len() {
            return Err(Error::domain("profile mean and std must be non-empty and equal length"));
        }
        if levels < 2 {
            return Err(Error::domain("need at least two support levels"));
        }
        let top = mean
            .iter()
            .zip(std)
            .map(|(m, s)| m + 3.0 * s)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let support: Vec<f64> = (0..levels).map(|i| top * i as f64 / (levels - 1) as f64).collect();
        let law = |m: f64, s: f64| -> Result<Vec<f64>> {
            if !(s >= 0.0 && m.is_finite()) {
                return Err(Error::domain(format!("invalid profile point mean {m} std {s}")));
            }
            let cdf = |x: f64| -> f64 {
                if s == 0.0 {
                    if x >= m {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    Normal::new(m, s).expect("valid normal").cdf(x)
                }
            };
            let mut p = Vec::with_capacity(levels);
            let mut prev = 0.0;
            for i in 0..levels {
                let edge = if i + 1 == levels {
                    f64::INFINITY
                } else {
                    0.5 * (support[i] + support[i + 1])
                };
                let c = if edge.is_infinite() { 1.0 } else { cdf(edge) };
                p.push((c - prev).max(0.0));
                prev = c;
            }
            let total: f64 = p.iter().sum();
            Ok(p.into_iter().map(|x| x / total).collect())
        };
        let initial = law(mean[0], std[0])?;
        let transitions = (1..mean.len())
            .map(|t| law(mean[t], std[t]).map(|row| vec![row; levels]))
            .collect::<Result<Vec<_>>>()?;
        let transitions = if transitions.is_empty() {
            Transitions::Stationary(vec![initial.clone(); levels])
        } else {
            Transitions::PerInterval(transitions)
        };
        Self::new(support, transitions, initial)
    }

    pub fn levels(&self) -> usize {
        self.support.len()
    }

    /// Transition matrix for the step `t -> t+1`.
    pub fn matrix(&self, t: usize) -> &[Vec<f64>] {
        match &self.transitions {
            Transitions::Stationary(p) => p,
            Transitions::PerInterval(v) => &v[t.min(v.len() - 1)],
        }
    }

    /// Index of the support level closest to `g`.
    pub fn nearest(&self, g: f64) -> usize {
        let mut best = 0;
        for (i, s) in self.support.iter().enumerate() {
            if (s - g).abs() < (self.support[best] - g).abs() {
                best = i;
            }
        }
        best
    }

    /// `E[g_{t+k} | g_t = support[i]]` for `k = 1..=steps`.
    pub fn conditional_means(&self, t: usize, i: usize, steps: usize) -> Vec<f64> {
        let n = self.levels();
        let mut p = vec![0.0; n];
        p[i] = 1.0;
        let mut out = Vec::with_capacity(steps);
        for k in 0..steps {
            let m = self.matrix(t + k);
            let mut next = vec![0.0; n];
            for (a, &pa) in p.iter().enumerate() {
                if pa > 0.0 {
                    for (b, &q) in m[a].iter().enumerate() {
                        next[b] += pa * q;
                    }
                }
            }
            p = next;
            out.push(p.iter().zip(&self.support).map(|(a, b)| a * b).sum());
        }
        out
    }

    /// Walks the chain for `horizon` intervals.
    pub fn sample<R: Rng>(&self, horizon: usize, rng: &mut R) -> Vec<f64> {
        let draw = |p: &[f64], rng: &mut R| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (j, &q) in p.iter().enumerate() {
                acc += q;
                if u < acc {
                    return j;
                }
            }
            p.iter().rposition(|&q| q > 0.0).unwrap_or(0)
        };
        let mut out = Vec::with_capacity(horizon);
        if horizon == 0 {
            return out;
        }
        let mut i = draw(&self.initial, rng);
        out.push(self.support[i]);
        for t in 1..horizon {
            i = draw(&self.matrix(t - 1)[i], rng);
            out.push(self.support[i]);
        }
        out
    }
}

/// Point forecasts of future renewable output.
pub trait Forecaster: Sync {
    /// Forecasts for intervals `t+1..=t+steps` given the realised `g_t`.
    fn forecast(&self, t: usize, g_now: f64, steps: usize) -> Vec<f64>;
}

impl Forecaster for MarkovRenewable {
    fn forecast(&self, t: usize, g_now: f64, steps: usize) -> Vec<f64> {
        self.conditional_means(t, self.nearest(g_now), steps)
    }
}

/// Mean of independent censored normals `max(0, N(mean_t, std_t^2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileForecast {
    means: Vec<f64>,
}

impl ProfileForecast {
    pub fn new(mean: &[f64], std: &[f64]) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::domain("profile mean and std lengths differ"));
        }
        let unit = Normal::new(0.0, 1.0).expect("standard normal");
        let means = mean
            .iter()
            .zip(std)
            .map(|(&m, &s)| {
                if s < 0.0 {
                    Err(Error::domain(format!("std must be >= 0, got {s}")))
                } else if s == 0.0 {
                    Ok(m.max(0.0))
                } else {
                    let k = m / s;
                    Ok(m * unit.cdf(k) + s * unit.pdf(k))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProfileForecast { means })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }
}

impl Forecaster for ProfileForecast {
    fn forecast(&self, t: usize, _g_now: f64, steps: usize) -> Vec<f64> {
        (t + 1..=t + steps)
            .map(|u| self.means.get(u).copied().unwrap_or(0.0))
            .collect()
    }
}

/// Oracle forecaster that knows the realised path.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactForecast(pub Vec<f64>);

impl Forecaster for ExactForecast {
    fn forecast(&self, t: usize, _g_now: f64, steps: usize) -> Vec<f64> {
        (t + 1..=t + steps)
            .map(|u| self.0.get(u).copied().unwrap_or(0.0))
            .collect()
    }
}
