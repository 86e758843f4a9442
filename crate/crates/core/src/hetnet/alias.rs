//! Constant-time discrete sampling with Vose's alias method.

use num_traits::Num;
use rand::Rng;

use crate::error::{Error, Result};

/// Exponent applied to sense frequencies in the negative-sampling noise
/// distribution.
pub const NOISE_EXPONENT: f64 = 0.75;

/// Builds the `(prob, alias)` slot arrays for non-negative `weights` with
/// a positive sum.
///
/// Generic so the construction can be checked in exact rational
/// arithmetic: outcome `i` has mass `(prob[i] + Σ_{alias[j]=i} (1 - prob[j])) / n`.
pub fn alias_slots<T>(weights: &[T]) -> (Vec<T>, Vec<usize>)
where
    T: Num + PartialOrd + Clone,
{
    let n = weights.len();
    let n_t = (0..n).fold(T::zero(), |acc, _| acc + T::one());
    let total = weights.iter().cloned().fold(T::zero(), |acc, w| acc + w);
    let mut scaled: Vec<T> = weights
        .iter()
        .map(|w| w.clone() * n_t.clone() / total.clone())
        .collect();
    let mut prob = vec![T::one(); n];
    let mut alias: Vec<usize> = (0..n).collect();

    let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).rev().partition(|&i| scaled[i] < T::one());
    while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
        small.pop();
        large.pop();
        prob[s] = scaled[s].clone();
        alias[s] = l;
        scaled[l] = scaled[l].clone() + scaled[s].clone() - T::one();
        if scaled[l] < T::one() {
            small.push(l);
        } else {
            large.push(l);
        }
    }
    // Leftovers are exactly 1 in exact arithmetic; in floating point they
    // absorb rounding error, so they keep prob 1 and alias themselves.
    (prob, alias)
}

/// O(1) sampler over `0..n` with arbitrary non-negative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights".into()));
        }
        if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {bad} is negative or not finite")));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }
        if weights.len() > u32::MAX as usize {
            return Err(Error::InvalidWeights("too many outcomes".into()));
        }
        let (prob, alias) = alias_slots(weights);
        Ok(Self {
            prob,
            alias: alias.into_iter().map(|a| a as u32).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn prob(&self) -> &[f64] {
        &self.prob
    }

    pub fn alias(&self) -> &[u32] {
        &self.alias
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let slot = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[slot] {
            slot
        } else {
            self.alias[slot] as usize
        }
    }

    /// The distribution the table actually samples from.
    pub fn outcome_probabilities(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut mass = self.prob.clone();
        for (slot, &a) in self.alias.iter().enumerate() {
            mass[a as usize] += 1.0 - self.prob[slot];
        }
        mass.iter().map(|m| m / n).collect()
    }
}

/// Noise table over sense rows with mass proportional to `count^0.75`.
pub fn build_noise_table(counts: &[u64]) -> Result<AliasTable> {
    if counts.is_empty() {
        return Err(Error::InvalidWeights("empty sense set".into()));
    }
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(NOISE_EXPONENT)).collect();
    AliasTable::new(&weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exact_mass(prob: &[Ratio<i64>], alias: &[usize]) -> Vec<Ratio<i64>> {
        let n = Ratio::from_integer(prob.len() as i64);
        let mut mass = prob.to_vec();
        for (slot, &a) in alias.iter().enumerate() {
            mass[a] += Ratio::from_integer(1) - prob[slot];
        }
        mass.into_iter().map(|m| m / n).collect()
    }

    #[test]
    fn three_to_one() {
        let t = AliasTable::new(&[3.0, 1.0]).unwrap();
        let p = t.outcome_probabilities();
        assert!((p[0] - 0.75).abs() < 1e-15 && (p[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_slot_always_zero() {
        let t = AliasTable::new(&[1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..1000).all(|_| t.sample(&mut rng) == 0));
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(AliasTable::new(&[]).is_err());
        assert!(AliasTable::new(&[0.0, 0.0]).is_err());
        assert!(AliasTable::new(&[1.0, -1.0]).is_err());
        assert!(AliasTable::new(&[f64::NAN]).is_err());
        assert!(build_noise_table(&[]).is_err());
    }

    #[test]
    fn zero_weights_never_sampled() {
        let t = AliasTable::new(&[0.0, 2.0, 0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let i = t.sample(&mut rng);
            assert!(i == 1 || i == 3);
        }
    }

    #[test]
    fn noise_exact_power() {
        let t = build_noise_table(&[16, 1]).unwrap();
        let p = t.outcome_probabilities();
        assert!((p[0] - 8.0 / 9.0).abs() < 1e-12);
        let t = build_noise_table(&[7, 7, 7, 7]).unwrap();
        assert!(t.outcome_probabilities().iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let t = AliasTable::new(&[1.0, 5.0, 2.0]).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| t.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }

    #[test]
    fn two_equal_weights_binomial() {
        let t = AliasTable::new(&[1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let n = 1_000_000;
        let zeros = (0..n).filter(|_| t.sample(&mut rng) == 0).count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((zeros - n as f64 / 2.0).abs() < 3.0 * sigma, "zeros = {zeros}");
    }

    proptest! {
        #[test]
        fn rational_construction_is_exact(weights in prop::collection::vec(0i64..50, 1..12)) {
            prop_assume!(weights.iter().any(|&w| w > 0));
            let ratios: Vec<Ratio<i64>> = weights.iter().map(|&w| Ratio::from_integer(w)).collect();
            let (prob, alias) = alias_slots(&ratios);
            let total: i64 = weights.iter().sum();
            let mass = exact_mass(&prob, &alias);
            for (m, &w) in mass.iter().zip(&weights) {
                prop_assert_eq!(*m, Ratio::new(w, total));
            }
            for p in &prob {
                prop_assert!(*p >= Ratio::from_integer(0) && *p <= Ratio::from_integer(1));
            }
        }

        #[test]
        fn float_construction_matches_weights(weights in prop::collection::vec(0.0f64..100.0, 1..64)) {
            prop_assume!(weights.iter().sum::<f64>() > 1e-6);
            let t = AliasTable::new(&weights).unwrap();
            let total: f64 = weights.iter().sum();
            for (p, w) in t.outcome_probabilities().iter().zip(&weights) {
                prop_assert!((p - w / total).abs() < 1e-12);
            }
        }
    }
}
