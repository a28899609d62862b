//! Seeded random vectors for the slot-1 candidates of the recursive solver.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::norms::{lp_norm, Exponent};

/// Constants of the small-ball inequalities behind the candidate counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KNConstants {
    pub delta0: f64,
    pub c0: f64,
    /// Lower bound on the exact `δ₁`, which depends on `p`.
    pub delta1: f64,
    pub c1: f64,
    pub c2: f64,
    pub n_bar: usize,
}

pub const KN: KNConstants = KNConstants {
    delta0: 1.0 / 48.0,
    c0: 1.0 / 72.0,
    delta1: 3.0 / 6400.0,
    c1: 1.0 / 144.0,
    c2: 1.0 / 40.0,
    n_bar: 41,
};

/// Uniform signs in `{−1, 1}ⁿ`.
pub fn sample_rademacher(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// Draw from density `p·exp(−|t|^p)/(2Γ(1/p))` in each coordinate, plus
/// the draw rescaled to unit `‖·‖_p`.
///
/// `ξᵢ = εᵢ·Gᵢ^{1/p}` with `εᵢ` a random sign and `Gᵢ ~ Gamma(1/p, 1)`.
pub fn sample_pgauss(n: usize, p: f64, rng: &mut impl Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::domain(format!("p-Gaussian needs finite p > 0, got {p}")));
    }
    let gamma = Gamma::new(1.0 / p, 1.0).map_err(|e| Error::domain(e.to_string()))?;
    loop {
        let xi: Vec<f64> = (0..n)
            .map(|_| {
                let g: f64 = gamma.sample(rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * g.powf(1.0 / p)
            })
            .collect();
        let norm = lp_norm(&xi, p);
        // all-zero draws have probability zero but can underflow
        if norm > 0.0 {
            let normalized = xi.iter().map(|v| v / norm).collect();
            return Ok((xi, normalized));
        }
    }
}

/// Unit-norm slot-1 candidate: signs for `p = ∞`, a normalized p-Gaussian
/// otherwise.
pub fn sample_candidate(n: usize, p: Exponent, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if p.is_infinite() {
        Ok(sample_rademacher(n, rng))
    } else {
        sample_pgauss(n, p.value(), rng).map(|(_, x)| x)
    }
}

/// The number of candidates `M` before rounding up and capping:
/// `(ln 2)·n^{δ₀}/c₀` for `p = ∞`, `(ln 2)·n^{c₂}/c₁` otherwise, doubled
/// when `amplified`.
pub fn raw_sample_count(n: usize, p: Exponent, amplified: bool) -> f64 {
    let factor = if amplified { 2.0 } else { 1.0 } * std::f64::consts::LN_2;
    let n = n as f64;
    if p.is_infinite() {
        factor * n.powf(KN.delta0) / KN.c0
    } else {
        factor * n.powf(KN.c2) / KN.c1
    }
}

/// `⌈M⌉` capped at `max_samples`.
pub fn sample_count(n: usize, p: Exponent, amplified: bool, max_samples: usize) -> usize {
    (raw_sample_count(n, p, amplified).ceil() as usize).min(max_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inf() -> Exponent {
        Exponent::infinity()
    }

    fn p4() -> Exponent {
        Exponent::finite(4.0).unwrap()
    }

    #[test]
    fn counts() {
        // 2·ln2·144·16^{1/40} = 213.96…
        assert!((raw_sample_count(16, p4(), true) - 213.96).abs() < 0.01);
        assert_eq!(sample_count(16, p4(), true, 10_000), 214);
        assert_eq!(sample_count(1, inf(), false, 10_000), 50);
        assert_eq!(sample_count(1, inf(), true, 10_000), 100);
        assert_eq!(sample_count(1, p4(), false, 10_000), 100);
        assert_eq!(sample_count(1, p4(), true, 10_000), 200);
        assert_eq!(sample_count(16, p4(), true, 100), 100);
        for p in [inf(), p4()] {
            let mut last = 0.0;
            for n in 1..200 {
                let m = raw_sample_count(n, p, true);
                assert!(m >= last);
                last = m;
            }
        }
    }

    #[test]
    fn rademacher_is_seeded() {
        let a = sample_rademacher(7, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_rademacher(7, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert!(a.iter().all(|v| *v == 1.0 || *v == -1.0));
        assert_eq!(sample_rademacher(1, &mut ChaCha8Rng::seed_from_u64(0)).len(), 1);
    }

    #[test]
    fn rademacher_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 100_000;
        let mut sums = [0.0; 3];
        for _ in 0..draws {
            for (s, v) in sums.iter_mut().zip(sample_rademacher(3, &mut rng)) {
                *s += v;
            }
        }
        for s in sums {
            assert!((s / draws as f64).abs() <= 0.02);
        }
    }

    #[test]
    fn pgauss_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for p in [2.5, 3.0, 4.0] {
            let draws = 100_000;
            let mut moment = Vec::with_capacity(draws);
            let mut first = Vec::with_capacity(draws);
            for _ in 0..draws {
                let (xi, normalized) = sample_pgauss(1, p, &mut rng).unwrap();
                assert!((lp_norm(&normalized, p) - 1.0).abs() <= 1e-12);
                moment.push(xi[0].abs().powf(p));
                first.push(xi[0]);
            }
            for (values, target) in [(moment, 1.0 / p), (first, 0.0)] {
                let mean = values.iter().sum::<f64>() / draws as f64;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
                let se = (var / draws as f64).sqrt();
                assert!((mean - target).abs() <= 3.0 * se, "p={p}: {mean} vs {target} (se {se})");
            }
        }
    }

    #[test]
    fn pgauss_normalized_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (xi, unit) = sample_pgauss(6, 3.0, &mut rng).unwrap();
        let norm = lp_norm(&xi, 3.0);
        for (a, b) in xi.iter().zip(&unit) {
            assert!((a / norm - b).abs() < 1e-15);
        }
        assert!(sample_pgauss(3, f64::INFINITY, &mut rng).is_err());
    }

    #[test]
    fn success_probability_sanity() {
        // w = e₁: the event wᵀζ ≥ √(δ log n / n)·‖w‖ only involves ζ₁
        let n = 50;
        let draws = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let log_ratio = (n as f64).ln() / n as f64;
        let check = |hits: usize, floor: f64| {
            let frac = hits as f64 / draws as f64;
            let se = (floor * (1.0 - floor) / draws as f64).sqrt();
            assert!(frac >= floor - 3.0 * se, "{frac} < {floor}");
        };
        let threshold = (KN.delta0 * log_ratio).sqrt();
        let hits = (0..draws)
            .filter(|_| sample_rademacher(n, &mut rng)[0] >= threshold)
            .count();
        check(hits, KN.c0 / (n as f64).powf(KN.delta0));
        let threshold = (KN.delta1 * log_ratio).sqrt();
        let hits = (0..draws)
            .filter(|_| sample_pgauss(n, 4.0, &mut rng).unwrap().1[0] >= threshold)
            .count();
        check(hits, KN.c1 / (n as f64).powf(KN.c2));
    }
}
