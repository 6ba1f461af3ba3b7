//! Stateless, hierarchically derived randomness.
//!
//! A [`SeedId`] is a master seed plus a path of indices. The path is hashed
//! into a 256-bit ChaCha key, so any stream can be rebuilt from its indices
//! alone and never depends on the order in which other streams were used.
//!
//! Path layout used throughout the crate:
//!
//! * `[0, r]`            observed sample of replication `r` (index 0 is never
//!   handed out by [`seed_for_simulation`], so simulated samples can not
//!   collide with the observed one)
//! * `[1, h + j*H]`      `h`-th simulated sample of seed block `j`
//! * `[2, r]`            design of replication `r`
//! * further top-level indices are free for callers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gamma, Poisson, StandardNormal};

use crate::error::{Error, Result};

/// Top-level path index of observed samples.
pub const OBSERVED: u64 = 0;
/// Top-level path index of simulated samples.
pub const SIMULATED: u64 = 1;
/// Top-level path index of per-replication designs.
pub const DESIGN: u64 = 2;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identifier of one deterministic random stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeedId {
    pub base: u64,
    pub path: Vec<u64>,
}

impl SeedId {
    pub fn new(base: u64) -> Self {
        SeedId { base, path: Vec::new() }
    }

    /// Child seed with `indices` appended to the path.
    pub fn derive(&self, indices: &[u64]) -> SeedId {
        let mut path = Vec::with_capacity(self.path.len() + indices.len());
        path.extend_from_slice(&self.path);
        path.extend_from_slice(indices);
        SeedId { base: self.base, path }
    }

    /// 64-bit digest of `(base, path)`.
    pub fn key(&self) -> u64 {
        let mut h = mix64(self.base.wrapping_add(GOLDEN));
        for (depth, &idx) in self.path.iter().enumerate() {
            let salt = mix64((depth as u64 + 1).wrapping_mul(GOLDEN) ^ idx);
            h = mix64(h ^ salt).wrapping_add(GOLDEN);
        }
        h
    }

    pub fn stream(&self) -> RandomStream {
        RandomStream::new(self)
    }
}

/// Free-function form of [`SeedId::derive`].
pub fn derive_seed(base: &SeedId, indices: &[u64]) -> SeedId {
    base.derive(indices)
}

/// Seed of the `h`-th simulated sample in seed block `j` (1-based `h`).
///
/// The returned id depends only on `(base, j, h, count)`, so every IB
/// iteration that asks for sample `h` gets the very same stream.
pub fn seed_for_simulation(base: &SeedId, j: u64, h: u64, count: u64) -> Result<SeedId> {
    if h < 1 || h > count {
        return Err(Error::SeedIndex { h, count });
    }
    Ok(base.derive(&[SIMULATED, h + j * count]))
}

/// Seed of the observed sample of replication `r`.
pub fn seed_for_observation(base: &SeedId, r: u64) -> SeedId {
    base.derive(&[OBSERVED, r])
}

/// Seed of the design of replication `r`.
pub fn seed_for_design(base: &SeedId, r: u64) -> SeedId {
    base.derive(&[DESIGN, r])
}

/// Distribution kinds supported by [`draw_block`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Uniform,
    Normal { mean: f64, sd: f64 },
    Gamma { shape: f64, scale: f64 },
    Poisson { mean: f64 },
    Bernoulli { p: f64 },
}

/// Single-owner generator state seeded from a [`SeedId`].
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: &SeedId) -> Self {
        let key = seed.key();
        let mut bytes = [0u8; 32];
        for (k, chunk) in bytes.chunks_exact_mut(8).enumerate() {
            let word = mix64(key ^ (k as u64 + 1).wrapping_mul(GOLDEN));
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        RandomStream { rng: ChaCha8Rng::from_seed(bytes) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random()
    }

    /// Uniform variate in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> Result<f64> {
        if !(sd >= 0.0) || !sd.is_finite() || !mean.is_finite() {
            return Err(Error::Domain(format!("normal(mean={mean}, sd={sd})")));
        }
        Ok(mean + sd * self.standard_normal())
    }

    /// Gamma variate; valid for every `shape > 0` (small shapes use the
    /// `U^(1/shape)` boost on top of Marsaglia–Tsang rejection).
    pub fn gamma(&mut self, shape: f64, scale: f64) -> Result<f64> {
        if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!("gamma(shape={shape}, scale={scale})")));
        }
        let g = Gamma::new(shape, scale).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(g.sample(&mut self.rng))
    }

    pub fn poisson(&mut self, mean: f64) -> Result<f64> {
        if !(mean >= 0.0) || !mean.is_finite() {
            return Err(Error::Domain(format!("poisson(mean={mean})")));
        }
        if mean == 0.0 {
            return Ok(0.0);
        }
        let d = Poisson::new(mean).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(d.sample(&mut self.rng))
    }

    pub fn bernoulli(&mut self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("bernoulli(p={p})")));
        }
        Ok(if self.uniform() < p { 1.0 } else { 0.0 })
    }

    pub fn draw(&mut self, kind: Distribution) -> Result<f64> {
        match kind {
            Distribution::Uniform => Ok(self.uniform()),
            Distribution::Normal { mean, sd } => self.normal(mean, sd),
            Distribution::Gamma { shape, scale } => self.gamma(shape, scale),
            Distribution::Poisson { mean } => self.poisson(mean),
            Distribution::Bernoulli { p } => self.bernoulli(p),
        }
    }
}

/// Draws `count` variates of `kind` from `stream`.
///
/// Parameters are validated before any variate is consumed.
pub fn draw_block(stream: &mut RandomStream, kind: Distribution, count: usize) -> Result<Vec<f64>> {
    // validate once up front so an invalid call leaves the stream untouched
    let mut probe = stream.clone();
    probe.draw(kind)?;
    (0..count).map(|_| stream.draw(kind)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_is_pure() {
        let s = SeedId::new(42);
        assert_eq!(derive_seed(&s, &[3]), derive_seed(&s, &[3]));
    }

    #[test]
    fn neighbouring_paths_differ() {
        let s = SeedId::new(42);
        let a = s.derive(&[3]).stream().uniform();
        let b = s.derive(&[4]).stream().uniform();
        assert_ne!(a, b);
    }

    #[test]
    fn path_concatenation() {
        let s = SeedId::new(7);
        assert_eq!(s.derive(&[1]).derive(&[2]), s.derive(&[1, 2]));
        assert_eq!(s.derive(&[1]).derive(&[2]).key(), s.derive(&[1, 2]).key());
    }

    #[test]
    fn empty_and_zero_paths_are_distinct() {
        let s = SeedId::new(7);
        assert_ne!(s.key(), s.derive(&[0]).key());
        assert_ne!(s.derive(&[0, 1]).key(), s.derive(&[1, 0]).key());
    }

    #[test]
    fn simulation_index_formula() {
        let s = SeedId::new(1);
        assert_eq!(seed_for_simulation(&s, 0, 1, 500).unwrap().path, vec![1, 1]);
        assert_eq!(seed_for_simulation(&s, 1, 1, 500).unwrap().path, vec![1, 501]);
        assert_eq!(seed_for_simulation(&s, 0, 1, 500).unwrap(), seed_for_simulation(&s, 0, 1, 500).unwrap());
    }

    #[test]
    fn simulation_index_bounds() {
        let s = SeedId::new(1);
        assert!(matches!(seed_for_simulation(&s, 0, 0, 5), Err(Error::SeedIndex { .. })));
        assert!(matches!(seed_for_simulation(&s, 0, 6, 5), Err(Error::SeedIndex { .. })));
        assert!(seed_for_simulation(&s, 3, 5, 5).is_ok());
    }

    #[test]
    fn degenerate_bernoulli() {
        let mut st = SeedId::new(9).stream();
        let zeros = draw_block(&mut st, Distribution::Bernoulli { p: 0.0 }, 10).unwrap();
        assert!(zeros.iter().all(|&v| v == 0.0));
        let ones = draw_block(&mut st, Distribution::Bernoulli { p: 1.0 }, 10).unwrap();
        assert!(ones.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn normal_mean_ci() {
        let mut st = SeedId::new(2024).derive(&[5]).stream();
        let n = 100_000;
        let v = draw_block(&mut st, Distribution::Normal { mean: 0.0, sd: 1.0 }, n).unwrap();
        let mean = v.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut st = SeedId::new(3).stream();
        let before = st.clone().next_u64();
        for kind in [
            Distribution::Gamma { shape: 0.0, scale: 1.0 },
            Distribution::Gamma { shape: 1.0, scale: -1.0 },
            Distribution::Poisson { mean: -1.0 },
            Distribution::Bernoulli { p: 1.5 },
            Distribution::Normal { mean: 0.0, sd: -1.0 },
        ] {
            assert!(matches!(draw_block(&mut st, kind, 3), Err(Error::Domain(_))));
        }
        assert_eq!(st.next_u64(), before);
    }

    #[test]
    fn gamma_small_shape_moments() {
        // shape < 1 exercises the boosted branch; mean = shape*scale, var = shape*scale^2
        let mut st = SeedId::new(11).stream();
        let (shape, scale) = (0.4, 2.5);
        let n = 100_000;
        let v = draw_block(&mut st, Distribution::Gamma { shape, scale }, n).unwrap();
        assert!(v.iter().all(|&x| x >= 0.0));
        let mean = v.iter().sum::<f64>() / n as f64;
        let se = (shape * scale * scale / n as f64).sqrt();
        assert!((mean - shape * scale).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn poisson_zero_mean() {
        let mut st = SeedId::new(11).stream();
        let v = draw_block(&mut st, Distribution::Poisson { mean: 0.0 }, 5).unwrap();
        assert_eq!(v, vec![0.0; 5]);
    }

    #[test]
    fn golden_first_outputs() {
        // Pinned outputs of the generator; any change here breaks replay of
        // previously published studies.
        let mut st = SeedId::new(20190101).derive(&[1, 1]).stream();
        let got: Vec<u64> = (0..3).map(|_| st.next_u64()).collect();
        assert_eq!(got, GOLDEN_U64);
        let key = SeedId::new(20190101).derive(&[1, 1]).key();
        assert_eq!(key, GOLDEN_KEY);
    }

    const GOLDEN_KEY: u64 = 8831726014755038896;
    const GOLDEN_U64: [u64; 3] = [3090253276146291953, 10132077442030851538, 4313694367544377028];
}
