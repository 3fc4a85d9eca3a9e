//! Renewable output models and seeded path sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::baselines::markov::{Forecaster, MarkovRenewable, ProfileForecast};
use crate::exec::{map_range, Execution};
use crate::{Error, Result};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RenewableModel {
    /// Independent `max(0, N(mean_t * mean_scale, (std_t * std_scale)^2))`.
    Profile {
        mean: Vec<f64>,
        std: Vec<f64>,
        #[serde(default = "one")]
        mean_scale: f64,
        #[serde(default = "one")]
        std_scale: f64,
    },
    /// Daily half-sine mean between `sunrise` and `sunset` (interval of day),
    /// zero otherwise, with `std = std_ratio * mean`.
    Bell {
        peak: f64,
        day_length: usize,
        sunrise: usize,
        sunset: usize,
        std_ratio: f64,
        #[serde(default = "one")]
        mean_scale: f64,
        #[serde(default = "one")]
        std_scale: f64,
    },
    Markov(MarkovRenewable),
}

/// Half-sine daily profile.
pub fn bell_profile(peak: f64, day_length: usize, sunrise: usize, sunset: usize, horizon: usize) -> Vec<f64> {
    (0..horizon)
        .map(|t| {
            let h = (t % day_length.max(1)) as f64;
            let (a, b) = (sunrise as f64, sunset as f64);
            if h > a && h < b {
                peak * (std::f64::consts::PI * (h - a) / (b - a)).sin()
            } else {
                0.0
            }
        })
        .collect()
}

impl RenewableModel {
    pub fn validate(&self) -> Result<()> {
        let scales = |m: f64, s: f64| {
            if !(m >= 0.0 && s >= 0.0 && m.is_finite() && s.is_finite()) {
                Err(Error::domain("mean_scale and std_scale must be >= 0"))
            } else {
                Ok(())
            }
        };
        match self {
            RenewableModel::Profile {
                mean,
                std,
                mean_scale,
                std_scale,
            } => {
                scales(*mean_scale, *std_scale)?;
                if mean.len() != std.len() || mean.is_empty() {
                    return Err(Error::domain("profile mean and std must be non-empty and equal length"));
                }
                if let Some(s) = std.iter().find(|s| !(**s >= 0.0)) {
                    return Err(Error::domain(format!("std must be >= 0, got {s}")));
                }
                if mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::domain("profile mean must be finite"));
                }
                Ok(())
            }
            RenewableModel::Bell {
                peak,
                day_length,
                sunrise,
                sunset,
                std_ratio,
                mean_scale,
                std_scale,
            } => {
                scales(*mean_scale, *std_scale)?;
                if !(*peak >= 0.0 && *std_ratio >= 0.0) {
                    return Err(Error::domain("bell peak and std_ratio must be >= 0"));
                }
                if *day_length == 0 || sunrise >= sunset || *sunset > *day_length {
                    return Err(Error::domain("bell profile needs sunrise < sunset <= day_length"));
                }
                Ok(())
            }
            RenewableModel::Markov(m) => m.validate(),
        }
    }

    /// Scaled per-interval mean and std, for the normal kinds.
    pub fn moments(&self, horizon: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            RenewableModel::Profile {
                mean,
                std,
                mean_scale,
                std_scale,
            } => {
                let at = |v: &Vec<f64>, t: usize| v[t.min(v.len() - 1)];
                Some((
                    (0..horizon).map(|t| at(mean, t) * mean_scale).collect(),
                    (0..horizon).map(|t| at(std, t) * std_scale).collect(),
                ))
            }
            RenewableModel::Bell {
                peak,
                day_length,
                sunrise,
                sunset,
                std_ratio,
                mean_scale,
                std_scale,
            } => {
                let mean = bell_profile(*peak, *day_length, *sunrise, *sunset, horizon);
                let std = mean.iter().map(|m| m * std_ratio * std_scale).collect();
                Some((mean.iter().map(|m| m * mean_scale).collect(), std))
            }
            RenewableModel::Markov(_) => None,
        }
    }

    /// Chain used by the DP oracle. Normal kinds are quantized onto
    /// `levels` points.
    pub fn to_markov(&self, horizon: usize, levels: usize) -> Result<MarkovRenewable> {
        match self {
            RenewableModel::Markov(m) => Ok(m.clone()),
            _ => {
                let (mean, std) = self.moments(horizon).expect("normal kind");
                MarkovRenewable::quantize_profile(&mean, &std, levels)
            }
        }
    }

    /// Conditional-mean forecaster for MPC.
    pub fn forecaster(&self, horizon: usize) -> Result<Box<dyn Forecaster>> {
        Ok(match self {
            RenewableModel::Markov(m) => Box::new(m.clone()),
            _ => {
                let (mean, std) = self.moments(horizon).expect("normal kind");
                Box::new(ProfileForecast::new(&mean, &std)?)
            }
        })
    }
}

/// RNG for path `index`: one ChaCha stream per path, so paths do not
/// depend on how they are scheduled.
pub fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn sample_paths(
    model: &RenewableModel,
    horizon: usize,
    n_paths: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    if horizon == 0 || n_paths == 0 {
        return Err(Error::domain("horizon and path count must be >= 1"));
    }
    model.validate()?;
    let moments = model.moments(horizon);
    Ok(map_range(exec, n_paths, |i| {
        let mut rng = path_rng(seed, i);
        match (model, &moments) {
            (RenewableModel::Markov(m), _) => m.sample(horizon, &mut rng),
            (_, Some((mean, std))) => mean
                .iter()
                .zip(std)
                .map(|(m, s)| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (m + s * z).max(0.0)
                })
                .collect(),
            _ => unreachable!("normal kinds always have moments"),
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(std: f64, mean_scale: f64) -> RenewableModel {
        RenewableModel::Profile {
            mean: vec![0.0, 1.0, 2.0, 1.0],
            std: vec![std; 4],
            mean_scale,
            std_scale: 1.0,
        }
    }

    #[test]
    fn zero_std_reproduces_mean() {
        let p = sample_paths(&profile(0.0, 1.0), 4, 3, 9, Execution::Parallel).unwrap();
        for path in p {
            assert_eq!(path, vec![0.0, 1.0, 2.0, 1.0]);
        }
    }

    #[test]
    fn seeded_and_mode_independent() {
        let m = profile(0.5, 1.0);
        let a = sample_paths(&m, 4, 20, 42, Execution::Sequential).unwrap();
        let b = sample_paths(&m, 4, 20, 42, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_paths(&m, 4, 20, 43, Execution::Sequential).unwrap());
        assert!(a.iter().flatten().all(|g| *g >= 0.0));
        // a prefix of the path set does not depend on the path count
        assert_eq!(a[..5], sample_paths(&m, 4, 5, 42, Execution::Sequential).unwrap()[..]);
    }

    #[test]
    fn zero_mean_scale_with_no_noise_is_dark() {
        let m = RenewableModel::Profile {
            mean: vec![3.0; 4],
            std: vec![0.0; 4],
            mean_scale: 0.0,
            std_scale: 1.0,
        };
        let p = sample_paths(&m, 4, 2, 1, Execution::Sequential).unwrap();
        assert!(p.iter().flatten().all(|g| *g == 0.0));
    }

    #[test]
    fn rejects_negative_std() {
        assert!(sample_paths(&profile(-0.1, 1.0), 4, 1, 1, Execution::Sequential).is_err());
        assert!(sample_paths(&profile(0.1, 1.0), 0, 1, 1, Execution::Sequential).is_err());
    }

    #[test]
    fn bell_shape() {
        let b = bell_profile(4.0, 24, 6, 18, 48);
        assert_eq!(b[0], 0.0);
        assert_eq!(b[6], 0.0);
        assert!((b[12] - 4.0).abs() < 1e-12);
        assert_eq!(b[12], b[36]);
        assert!(b.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn markov_kind_walks_chain() {
        let chain = MarkovRenewable::point_mass(&[1.0, 2.0, 0.0]).unwrap();
        let p = sample_paths(&RenewableModel::Markov(chain), 3, 2, 0, Execution::Parallel).unwrap();
        assert_eq!(p, vec![vec![1.0, 2.0, 0.0]; 2]);
    }
}
