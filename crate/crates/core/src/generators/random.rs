use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Instance, ServerId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialPlacement {
    Cheapest,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomParams {
    pub n: usize,
    pub m: usize,
    pub rate_min: f64,
    pub rate_max: f64,
    pub lambda: f64,
    /// Request times are drawn uniformly from `(0, horizon)`.
    pub horizon: f64,
    pub initial: InitialPlacement,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self {
            n: 4,
            m: 12,
            rate_min: 1.0,
            rate_max: 6.0,
            lambda: 1.0,
            horizon: 10.0,
            initial: InitialPlacement::Cheapest,
        }
    }
}

/// Seeded instance with ascending uniform rates and distinct uniform times.
///
/// # Panics
/// If `n == 0`, the rate range is empty or nonpositive, or `lambda` or
/// `horizon` is not positive.
pub fn gen_random(seed: u64, params: &RandomParams) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw(&mut rng, params)
}

fn draw(rng: &mut ChaCha8Rng, p: &RandomParams) -> Instance {
    assert!(p.n >= 1, "at least one server");
    assert!(0.0 < p.rate_min && p.rate_min <= p.rate_max, "rate range");
    assert!(p.horizon > 0.0, "positive horizon");
    let mut rates: Vec<f64> = (0..p.n).map(|_| rng.random_range(p.rate_min..=p.rate_max)).collect();
    rates.sort_by(f64::total_cmp);
    let mut times: Vec<f64> = Vec::with_capacity(p.m);
    while times.len() < p.m {
        let t = rng.random::<f64>() * p.horizon;
        if t > 0.0 {
            times.push(t);
        }
        if times.len() == p.m {
            times.sort_by(f64::total_cmp);
            times.dedup();
        }
    }
    let initial = match p.initial {
        InitialPlacement::Cheapest => ServerId::CHEAPEST,
        InitialPlacement::Random => ServerId(rng.random_range(0..p.n)),
    };
    let requests: Vec<(f64, ServerId)> = times
        .into_iter()
        .map(|t| (t, ServerId(rng.random_range(0..p.n))))
        .collect();
    Instance::new(rates, p.lambda, initial, requests).expect("generated instance is valid")
}

/// The small-instance family used by the property suites: `n` in `1..=4`,
/// `m` in `0..=12`, rates in `[1, 6]`, `lambda` in `[0.5, 4]`, and a time
/// span comparable to the copy windows.
pub fn small_random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    let m = rng.random_range(0..=12);
    let lambda = rng.random_range(0.5..=4.0);
    let horizon = lambda * rng.random_range(0.5..=3.0) * (m.max(1) as f64);
    let params = RandomParams {
        n,
        m,
        rate_min: 1.0,
        rate_max: 6.0,
        lambda,
        horizon,
        initial: InitialPlacement::Cheapest,
    };
    draw(&mut rng, &params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let p = RandomParams::default();
        assert_eq!(gen_random(11, &p), gen_random(11, &p));
        assert_ne!(gen_random(11, &p), gen_random(12, &p));
        assert_eq!(small_random_instance(3), small_random_instance(3));
    }

    #[test]
    fn single_server_puts_everything_at_s1() {
        let p = RandomParams {
            n: 1,
            m: 30,
            ..RandomParams::default()
        };
        let inst = gen_random(5, &p);
        assert_eq!(inst.m(), 30);
        assert!(inst.real_requests().iter().all(|r| r.server == ServerId(0)));
    }
}
