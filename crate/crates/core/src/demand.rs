//! Flexible demand: device utilities, inverse marginal utilities and the
//! water-filling allocator.
//!
//! For a price `p` a device consumes `f_k(p) = clamp(L_k^{-1}(p), 0, cap_k)`
//! and the fleet consumes `f(p) = sum_k f_k(p)`. Allocating a fixed total
//! among devices is the inverse problem: find a shadow price `lambda` with
//! `f(lambda) = total` and give each device `f_k(lambda)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Feasibility slack for consumption bounds, in kWh.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Absolute tolerance on the allocated total, in kWh.
pub const WATER_FILL_TOL: f64 = 1e-10;
pub const WATER_FILL_MAX_ITER: usize = 200;

/// A concave, non-decreasing, differentiable utility of consumption.
pub trait ConcaveUtility {
    /// Utility of consuming `d` kWh.
    fn value(&self, d: f64) -> f64;
    /// Marginal utility at `d`.
    fn marginal(&self, d: f64) -> f64;
    /// Inverse of the marginal utility, before clamping to `[0, cap]`.
    fn inverse_marginal(&self, price: f64) -> f64;
    /// A price at or below which the device consumes at least `d`.
    fn saturation_price(&self, d: f64) -> f64;
}

/// `U(d) = alpha*d - beta*d^2/2` up to `alpha/beta`, flat afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticUtility {
    pub alpha: f64,
    pub beta: f64,
}

impl QuadraticUtility {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::domain(format!("alpha must be > 0, got {alpha}")));
        }
        // beta = 0 would make the marginal utility constant and not invertible
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::domain(format!("beta must be > 0, got {beta}")));
        }
        Ok(QuadraticUtility { alpha, beta })
    }

    /// Consumption beyond which utility is flat.
    pub fn satiation(&self) -> f64 {
        self.alpha / self.beta
    }
}

impl ConcaveUtility for QuadraticUtility {
    fn value(&self, d: f64) -> f64 {
        let d = d.min(self.satiation());
        self.alpha * d - 0.5 * self.beta * d * d
    }

    fn marginal(&self, d: f64) -> f64 {
        (self.alpha - self.beta * d).max(0.0)
    }

    fn inverse_marginal(&self, price: f64) -> f64 {
        (self.alpha - price) / self.beta
    }

    fn saturation_price(&self, d: f64) -> f64 {
        self.alpha - self.beta * d
    }
}

/// The built-in utility models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Utility {
    Quadratic(QuadraticUtility),
}

impl Utility {
    /// `(alpha, beta)` when the model is quadratic.
    pub fn quadratic(&self) -> Option<QuadraticUtility> {
        match self {
            Utility::Quadratic(q) => Some(*q),
        }
    }
}

impl From<QuadraticUtility> for Utility {
    fn from(q: QuadraticUtility) -> Self {
        Utility::Quadratic(q)
    }
}

impl ConcaveUtility for Utility {
    fn value(&self, d: f64) -> f64 {
        match self {
            Utility::Quadratic(q) => q.value(d),
        }
    }
    fn marginal(&self, d: f64) -> f64 {
        match self {
            Utility::Quadratic(q) => q.marginal(d),
        }
    }
    fn inverse_marginal(&self, price: f64) -> f64 {
        match self {
            Utility::Quadratic(q) => q.inverse_marginal(price),
        }
    }
    fn saturation_price(&self, d: f64) -> f64 {
        match self {
            Utility::Quadratic(q) => q.saturation_price(d),
        }
    }
}

/// A controllable load with a consumption cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub utility: Utility,
    pub cap: f64,
}

impl Device {
    pub fn new(utility: Utility, cap: f64) -> Result<Self> {
        if !(cap.is_finite() && cap >= 0.0) {
            return Err(Error::domain(format!("device cap must be >= 0, got {cap}")));
        }
        Ok(Device { utility, cap })
    }

    pub fn quadratic(alpha: f64, beta: f64, cap: f64) -> Result<Self> {
        Device::new(QuadraticUtility::new(alpha, beta)?.into(), cap)
    }

    /// `f_k(price) = max(0, min(L^{-1}(price), cap))`.
    pub fn inverse_marginal(&self, price: f64) -> f64 {
        self.utility.inverse_marginal(price).min(self.cap).max(0.0)
    }

    pub fn utility_value(&self, d: f64) -> f64 {
        self.utility.value(d)
    }
}

/// Result of [`DeviceFleet::water_fill`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub d: Vec<f64>,
    /// Shadow price equalising marginal utilities of the unsaturated devices.
    pub lambda: f64,
}

/// The devices active in one interval.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceFleet {
    devices: Vec<Device>,
}

impl DeviceFleet {
    pub fn new(devices: Vec<Device>) -> Self {
        DeviceFleet { devices }
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn total_cap(&self) -> f64 {
        self.devices.iter().map(|d| d.cap).sum()
    }

    pub fn caps(&self) -> Vec<f64> {
        self.devices.iter().map(|d| d.cap).collect()
    }

    /// `f(price)`, the aggregate inverse marginal utility.
    pub fn aggregate_inverse_marginal(&self, price: f64) -> f64 {
        self.devices.iter().map(|d| d.inverse_marginal(price)).sum()
    }

    /// Per-device `f_k(price)`.
    pub fn inverse_marginals(&self, price: f64) -> Vec<f64> {
        self.devices.iter().map(|d| d.inverse_marginal(price)).collect()
    }

    /// Additive utility of a consumption bundle.
    pub fn utility_value(&self, d: &[f64]) -> Result<f64> {
        self.check_feasible(d)?;
        Ok(self.devices.iter().zip(d).map(|(dev, &x)| dev.utility_value(x)).sum())
    }

    pub fn check_feasible(&self, d: &[f64]) -> Result<()> {
        if d.len() != self.devices.len() {
            return Err(Error::domain(format!(
                "consumption vector has {} entries for {} devices",
                d.len(),
                self.devices.len()
            )));
        }
        for (k, (dev, &x)) in self.devices.iter().zip(d).enumerate() {
            if !x.is_finite() || x < -FEASIBILITY_TOL || x > dev.cap + FEASIBILITY_TOL {
                return Err(Error::domain(format!(
                    "device {k}: consumption {x} outside [0, {}]",
                    dev.cap
                )));
            }
        }
        Ok(())
    }

    /// Splits `total` kWh among the devices so that marginal utilities are
    /// equal, i.e. `d_k = f_k(f^{-1}(total))`.
    ///
    /// The shadow price is located by bisection. When `f` is flat at `total`
    /// every price on the flat stretch gives the same allocation and the
    /// midpoint is reported.
    pub fn water_fill(&self, total: f64) -> Result<Allocation> {
        let cap = self.total_cap();
        if !total.is_finite() || total < -FEASIBILITY_TOL || total > cap + FEASIBILITY_TOL {
            return Err(Error::domain(format!("water-fill total {total} outside [0, {cap}]")));
        }
        // bracket: f(lo) = cap, f(hi) = 0
        let hi = self
            .devices
            .iter()
            .map(|d| d.utility.saturation_price(0.0))
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = self
            .devices
            .iter()
            .map(|d| d.utility.saturation_price(d.cap))
            .fold(f64::INFINITY, f64::min);
        if total <= 0.0 || self.devices.is_empty() {
            return Ok(Allocation {
                d: vec![0.0; self.devices.len()],
                lambda: if hi.is_finite() { hi } else { 0.0 },
            });
        }
        if total >= cap {
            return Ok(Allocation {
                d: self.caps(),
                lambda: lo,
            });
        }

        // left end of {lambda : f(lambda) <= total}
        let left = bisect(lo, hi, |p| self.aggregate_inverse_marginal(p) > total);
        // right end of {lambda : f(lambda) >= total}
        let right = bisect(lo, hi, |p| self.aggregate_inverse_marginal(p) >= total);
        let lambda = 0.5 * (left + right);
        let mut d = self.inverse_marginals(lambda);
        self.absorb_residual(&mut d, total);
        Ok(Allocation { d, lambda })
    }

    /// Moves the (tiny) bisection residual onto devices with slack so that
    /// the allocation sums to `total`.
    fn absorb_residual(&self, d: &mut [f64], total: f64) {
        let mut residual = total - d.iter().sum::<f64>();
        if residual.abs() > 1e3 * WATER_FILL_TOL {
            // bisection did not converge to tolerance; leave the raw allocation
            return;
        }
        for (x, dev) in d.iter_mut().zip(&self.devices) {
            if residual == 0.0 {
                break;
            }
            let room = if residual > 0.0 { dev.cap - *x } else { -*x };
            let step = if residual > 0.0 {
                residual.min(room)
            } else {
                residual.max(room)
            };
            *x += step;
            residual -= step;
        }
    }
}

/// Bisection on a predicate that is true on the left of a single switch
/// point. Returns the first point (to machine resolution) where it is false.
fn bisect(mut l: f64, mut r: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..WATER_FILL_MAX_ITER {
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            break;
        }
        if pred(m) {
            l = m;
        } else {
            r = m;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_devices() -> DeviceFleet {
        DeviceFleet::new(vec![
            Device::quadratic(2.0, 1.0, 2.0).unwrap(),
            Device::quadratic(1.0, 1.0, 1.0).unwrap(),
        ])
    }

    /// Solves L(d) = price for a single device by bisection on d, then clamps.
    fn inverse_by_root_finding(dev: &Device, price: f64) -> f64 {
        let (mut l, mut r) = (0.0, dev.cap);
        if dev.utility.saturation_price(0.0) <= price {
            return 0.0;
        }
        if dev.utility.saturation_price(dev.cap) >= price {
            return dev.cap;
        }
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            if dev.utility.saturation_price(m) > price {
                l = m;
            } else {
                r = m;
            }
        }
        0.5 * (l + r)
    }

    /// Bisection on the total directly, independent of `water_fill`.
    fn allocation_oracle(fleet: &DeviceFleet, total: f64) -> Vec<f64> {
        let (mut l, mut r) = (-100.0, 100.0);
        for _ in 0..300 {
            let m = 0.5 * (l + r);
            let s: f64 = fleet.devices().iter().map(|d| inverse_by_root_finding(d, m)).sum();
            if s > total {
                l = m;
            } else {
                r = m;
            }
        }
        fleet
            .devices()
            .iter()
            .map(|d| inverse_by_root_finding(d, 0.5 * (l + r)))
            .collect()
    }

    #[test]
    fn inverse_marginal_examples() {
        let a = Device::quadratic(2.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(a.inverse_marginal(0.4), 1.6, epsilon = 1e-15);
        assert_relative_eq!(inverse_by_root_finding(&a, 0.4), 1.6, epsilon = 1e-12);
        assert_eq!(Device::quadratic(1.0, 0.5, 10.0).unwrap().inverse_marginal(1.0), 0.0);
        assert_eq!(Device::quadratic(2.0, 1.0, 1.0).unwrap().inverse_marginal(0.4), 1.0);
    }

    #[test]
    fn aggregate_examples() {
        let f = two_devices();
        assert_relative_eq!(f.aggregate_inverse_marginal(0.75), 1.5, epsilon = 1e-15);
        assert_eq!(f.aggregate_inverse_marginal(2.0), 0.0);
        assert_eq!(f.aggregate_inverse_marginal(5.0), 0.0);
        assert_eq!(f.aggregate_inverse_marginal(-3.0), 3.0);
    }

    #[test]
    fn water_fill_examples() {
        let f = two_devices();
        let a = f.water_fill(1.5).unwrap();
        assert_relative_eq!(a.lambda, 0.75, epsilon = 1e-10);
        assert_relative_eq!(a.d[0], 1.25, epsilon = 1e-10);
        assert_relative_eq!(a.d[1], 0.25, epsilon = 1e-10);
        let oracle = allocation_oracle(&f, 1.5);
        for (x, y) in a.d.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-10);
        }
        assert_eq!(f.water_fill(0.0).unwrap().d, vec![0.0, 0.0]);
        assert_eq!(f.water_fill(3.0).unwrap().d, vec![2.0, 1.0]);
        assert!(f.water_fill(3.1).is_err());
        assert!(f.water_fill(-0.1).is_err());
    }

    #[test]
    fn water_fill_plateau_returns_midpoint() {
        // device 0 saturates at cap 1 for lambda <= 1; device 1 starts at
        // lambda < 0.5. f = 1 on lambda in [0.5, 1].
        let f = DeviceFleet::new(vec![
            Device::quadratic(2.0, 1.0, 1.0).unwrap(),
            Device::quadratic(0.5, 1.0, 1.0).unwrap(),
        ]);
        let a = f.water_fill(1.0).unwrap();
        assert_relative_eq!(a.lambda, 0.75, epsilon = 1e-9);
        assert_relative_eq!(a.d[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(a.d[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn utility_value_examples() {
        let one = DeviceFleet::new(vec![Device::quadratic(2.0, 1.0, 3.0).unwrap()]);
        assert_relative_eq!(one.utility_value(&[1.6]).unwrap(), 1.92, epsilon = 1e-12);
        assert_eq!(one.utility_value(&[0.0]).unwrap(), 0.0);
        assert_relative_eq!(one.utility_value(&[2.5]).unwrap(), 2.0, epsilon = 1e-15);
        assert!(one.utility_value(&[3.5]).is_err());
        assert!(one.utility_value(&[1.0, 1.0]).is_err());
        // numeric integration of the marginal as an independent check
        let n = 100_000;
        let h = 1.6 / n as f64;
        let integral: f64 = (0..n)
            .map(|i| one.devices()[0].utility.marginal((i as f64 + 0.5) * h) * h)
            .sum();
        assert_relative_eq!(integral, 1.92, epsilon = 1e-8);
    }

    #[test]
    fn rejects_linear_utility() {
        assert!(QuadraticUtility::new(1.0, 0.0).is_err());
        assert!(QuadraticUtility::new(0.0, 1.0).is_err());
        assert!(Device::quadratic(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn empty_fleet() {
        let f = DeviceFleet::default();
        assert_eq!(f.aggregate_inverse_marginal(0.1), 0.0);
        assert!(f.water_fill(0.0).unwrap().d.is_empty());
        assert_eq!(f.utility_value(&[]).unwrap(), 0.0);
    }

    #[test]
    fn water_fill_beats_fine_grid_for_two_devices() {
        let f = DeviceFleet::new(vec![
            Device::quadratic(1.3, 0.7, 1.5).unwrap(),
            Device::quadratic(0.9, 1.9, 0.8).unwrap(),
        ]);
        for total in [0.2, 0.7, 1.1, 1.9, 2.2] {
            let u = f.utility_value(&f.water_fill(total).unwrap().d).unwrap();
            let n = 20_000;
            let mut best = f64::NEG_INFINITY;
            for i in 0..=n {
                let d0 = total * i as f64 / n as f64;
                let d1 = total - d0;
                if d0 <= 1.5 && d1 <= 0.8 {
                    best = best.max(f.utility_value(&[d0, d1]).unwrap());
                }
            }
            assert!(u >= best - 1e-12, "total {total}: {u} < {best}");
        }
    }

    fn fleet_strategy() -> impl Strategy<Value = DeviceFleet> {
        prop::collection::vec((0.2..3.0f64, 0.2..3.0f64, 0.1..3.0f64), 1..=4).prop_map(|v| {
            DeviceFleet::new(
                v.into_iter()
                    .map(|(a, b, c)| Device::quadratic(a, b, c).unwrap())
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn inverse_marginal_is_monotone(fleet in fleet_strategy(), p1 in -2.0..4.0f64, p2 in -2.0..4.0f64) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            for dev in fleet.devices() {
                let (a, b) = (dev.inverse_marginal(lo), dev.inverse_marginal(hi));
                prop_assert!(a >= b);
                prop_assert!((0.0..=dev.cap).contains(&a));
            }
            let f = fleet.aggregate_inverse_marginal(lo);
            prop_assert!(f >= fleet.aggregate_inverse_marginal(hi));
            prop_assert!(f <= fleet.total_cap() + 1e-12);
        }

        #[test]
        fn water_fill_round_trip(fleet in fleet_strategy(), p in 0.0..3.0f64) {
            let total = fleet.aggregate_inverse_marginal(p);
            let a = fleet.water_fill(total).unwrap();
            let direct = fleet.inverse_marginals(p);
            prop_assert!((a.d.iter().sum::<f64>() - total).abs() <= WATER_FILL_TOL);
            for (x, y) in a.d.iter().zip(&direct) {
                prop_assert!((x - y).abs() < 1e-8, "{:?} vs {:?}", a.d, direct);
            }
        }

        #[test]
        fn water_fill_beats_random_allocations(fleet in fleet_strategy(), frac in 0.0..1.0f64, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let total = frac * fleet.total_cap();
            let best = fleet.utility_value(&fleet.water_fill(total).unwrap().d).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let caps = fleet.caps();
            for _ in 0..10_000 {
                // random point of the capped simplex: random weights, then
                // push overflow onto devices with room
                let w: Vec<f64> = caps.iter().map(|_| rng.gen::<f64>()).collect();
                let s: f64 = w.iter().sum();
                let mut d: Vec<f64> = w.iter().zip(&caps).map(|(x, c)| (total * x / s).min(*c)).collect();
                let mut rest = total - d.iter().sum::<f64>();
                for (x, c) in d.iter_mut().zip(&caps) {
                    let add = rest.min(c - *x);
                    *x += add;
                    rest -= add;
                }
                let u = fleet.utility_value(&d).unwrap();
                prop_assert!(best >= u - 1e-9);
            }
        }

        #[test]
        fn utility_is_concave(a in 0.2..3.0f64, b in 0.2..3.0f64, d1 in 0.0..5.0f64, d2 in 0.0..5.0f64, th in 0.0..1.0f64) {
            let u = QuadraticUtility::new(a, b).unwrap();
            let m = th * d1 + (1.0 - th) * d2;
            prop_assert!(u.value(m) >= th * u.value(d1) + (1.0 - th) * u.value(d2) - 1e-9);
        }
    }
}
