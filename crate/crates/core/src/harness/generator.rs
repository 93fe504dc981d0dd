//! Seeded random instances.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, which produces
//! the same stream on every platform, so a seed and a config pin the instance
//! bit for bit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Instance;
use crate::error::{Error, Result};
use crate::measure::{FiniteMeasureSpace, MeasurableFunction, Partition, C64};
use crate::spectral::measure::PointMap;
use crate::wce::WceInstance;

pub const MIN_POINTS: usize = 2;
pub const MAX_POINTS: usize = 64;

/// Probability that a generic point value is exactly zero.
const ZERO_PROBABILITY: f64 = 0.15;

/// Nonzero blocks keep `E(|u|²)` and `E(|w|²)` above this fraction of the
/// largest possible modulus squared, so that every genuine eigenvalue of
/// `T*T` stays far above the eigensolver noise floor.
const BLOCK_FLOOR_FRACTION: f64 = 1.0 / 1600.0;

const MAX_RESAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialModes {
    /// `u` constant on every block, so `E M_u` is normal.
    pub measurable_u: bool,
    /// `w` rescaled so that `E(|w|²) E(|u|²)` is the indicator of a random
    /// nonempty union of blocks.
    pub partial_isometry: bool,
    /// `u` vanishes on a random set of blocks, making `S` a strict subset.
    pub zero_blocks: bool,
    /// `u` is a nonzero constant.
    pub constant_u: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n: usize,
    pub block_count: usize,
    pub weight_range: (f64, f64),
    pub magnitude_range: (f64, f64),
    pub modes: SpecialModes,
    /// Also draw a random point map.
    pub with_phi: bool,
}

impl GeneratorConfig {
    pub fn new(seed: u64, n: usize, block_count: usize) -> Self {
        Self {
            seed,
            n,
            block_count,
            weight_range: (0.1, 10.0),
            magnitude_range: (0.0, 4.0),
            modes: SpecialModes::default(),
            with_phi: true,
        }
    }

    pub fn with_modes(mut self, modes: SpecialModes) -> Self {
        self.modes = modes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::ConfigInvalid(msg));
        if !(MIN_POINTS..=MAX_POINTS).contains(&self.n) {
            return invalid(format!("n = {} is outside {MIN_POINTS}..={MAX_POINTS}", self.n));
        }
        if self.block_count == 0 || self.block_count > self.n {
            return invalid(format!("block count {} is outside 1..={}", self.block_count, self.n));
        }
        let (wlo, whi) = self.weight_range;
        if !(wlo.is_finite() && whi.is_finite() && wlo > 0.0 && wlo <= whi) {
            return invalid(format!(
                "weight range [{wlo}, {whi}] must be a nonempty positive interval"
            ));
        }
        let (mlo, mhi) = self.magnitude_range;
        if !(mlo.is_finite() && mhi.is_finite() && mlo >= 0.0 && mlo <= mhi && mhi > 0.0) {
            return invalid(format!(
                "magnitude range [{mlo}, {mhi}] must be a nonempty interval in [0, inf) with a positive end"
            ));
        }
        Ok(())
    }
}

struct Draw<'a> {
    rng: &'a mut ChaCha8Rng,
    lo: f64,
    hi: f64,
}

impl Draw<'_> {
    fn modulus(&mut self) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            self.rng.gen_range(self.lo..=self.hi)
        }
    }

    fn phase(&mut self) -> C64 {
        C64::from_polar(1.0, self.rng.gen_range(0.0..std::f64::consts::TAU))
    }

    /// Modulus bounded away from zero, for values that must not vanish.
    fn nonzero(&mut self) -> C64 {
        let lo = self.lo.max(self.hi / 8.0);
        let r = if lo == self.hi {
            lo
        } else {
            self.rng.gen_range(lo..=self.hi)
        };
        self.phase() * r
    }

    fn point(&mut self) -> C64 {
        if self.rng.gen_bool(ZERO_PROBABILITY) {
            C64::new(0.0, 0.0)
        } else {
            let r = self.modulus();
            self.phase() * r
        }
    }
}

fn random_partition(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut blocks: Vec<Vec<usize>> = order[..k].iter().map(|&i| vec![i]).collect();
    for &i in &order[k..] {
        blocks[rng.gen_range(0..k)].push(i);
    }
    for block in blocks.iter_mut() {
        block.sort_unstable();
    }
    blocks.sort_by_key(|block| block[0]);
    blocks
}

fn block_mean_sq(values: &[C64], block: &[usize], weights: &[f64]) -> f64 {
    let mass: f64 = block.iter().map(|&i| weights[i]).sum();
    block.iter().map(|&i| values[i].norm_sqr() * weights[i]).sum::<f64>() / mass
}

/// Generic values, resampled per block until the block mean of `|·|²`
/// clears the floor.
fn generic_values(draw: &mut Draw, blocks: &[Vec<usize>], weights: &[f64], n: usize) -> Vec<C64> {
    let floor = draw.hi * draw.hi * BLOCK_FLOOR_FRACTION;
    let mut values = vec![C64::new(0.0, 0.0); n];
    for block in blocks {
        for attempt in 0..MAX_RESAMPLES {
            for &i in block {
                values[i] = draw.point();
            }
            if block_mean_sq(&values, block, weights) >= floor {
                break;
            }
            if attempt + 1 == MAX_RESAMPLES {
                values[block[0]] = draw.nonzero();
            }
        }
    }
    values
}

fn random_block_subset(rng: &mut ChaCha8Rng, k: usize, min: usize, max: usize) -> Vec<usize> {
    let count = if min >= max { min } else { rng.gen_range(min..=max) };
    let mut picks: Vec<usize> = (0..k).collect();
    picks.shuffle(rng);
    picks.truncate(count);
    picks.sort_unstable();
    picks
}

/// Builds the instance described by `cfg`; the same config always yields the
/// same instance.
pub fn gen_instance(cfg: &GeneratorConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, k) = (cfg.n, cfg.block_count);

    let (wlo, whi) = cfg.weight_range;
    let weights: Vec<f64> = (0..n)
        .map(|_| if wlo == whi { wlo } else { rng.gen_range(wlo..=whi) })
        .collect();
    let blocks = random_partition(&mut rng, n, k);

    let (lo, hi) = cfg.magnitude_range;
    let mut draw = Draw { rng: &mut rng, lo, hi };
    let modes = cfg.modes;

    let mut u = if modes.constant_u {
        vec![draw.nonzero(); n]
    } else if modes.measurable_u {
        let mut block_values: Vec<C64> = Vec::with_capacity(k);
        for b in 0..k {
            let roll: f64 = draw.rng.gen();
            let value = if b > 0 && roll < 0.25 {
                block_values[draw.rng.gen_range(0..b)]
            } else if roll < 0.35 {
                C64::new(0.0, 0.0)
            } else {
                draw.nonzero()
            };
            block_values.push(value);
        }
        let mut values = vec![C64::new(0.0, 0.0); n];
        for (block, value) in blocks.iter().zip(&block_values) {
            for &i in block {
                values[i] = *value;
            }
        }
        values
    } else {
        generic_values(&mut draw, &blocks, &weights, n)
    };
    let mut w = generic_values(&mut draw, &blocks, &weights, n);

    if modes.zero_blocks {
        // a nonempty proper subset when there is more than one block
        let zeroed = random_block_subset(draw.rng, k, 1, k.saturating_sub(1).max(1));
        for &b in &zeroed {
            for &i in &blocks[b] {
                u[i] = C64::new(0.0, 0.0);
            }
        }
        if k > 2 && draw.rng.gen_bool(0.5) {
            let b = draw.rng.gen_range(0..k);
            for &i in &blocks[b] {
                w[i] = C64::new(0.0, 0.0);
            }
        }
    }

    if modes.partial_isometry {
        let live: Vec<usize> = (0..k)
            .filter(|&b| block_mean_sq(&u, &blocks[b], &weights) > 0.0 && block_mean_sq(&w, &blocks[b], &weights) > 0.0)
            .collect();
        let chosen: Vec<usize> = if live.is_empty() {
            Vec::new()
        } else {
            random_block_subset(draw.rng, live.len(), 1, live.len())
                .into_iter()
                .map(|j| live[j])
                .collect()
        };
        for (b, block) in blocks.iter().enumerate() {
            let scale = if chosen.contains(&b) {
                let product = block_mean_sq(&u, block, &weights) * block_mean_sq(&w, block, &weights);
                1.0 / product.sqrt()
            } else {
                0.0
            };
            for &i in block {
                w[i] *= scale;
            }
        }
    }

    let images: Option<Vec<usize>> = cfg.with_phi.then(|| (0..n).map(|_| draw.rng.gen_range(0..n)).collect());

    let space = FiniteMeasureSpace::new(weights)?;
    let partition = Partition::new(space.clone(), blocks)?;
    let u = MeasurableFunction::new(space.clone(), u)?;
    let w = MeasurableFunction::new(space.clone(), w)?;
    let phi = images.map(|images| PointMap::new(space, images)).transpose()?;
    Ok(Instance {
        wce: WceInstance::new(partition, u, w)?,
        phi,
    })
}

/// The config the suite derives from a bare seed: size, block count and mode
/// all follow from the seed, cycling through the special modes.
pub fn suite_config(seed: u64) -> GeneratorConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de_0000_0000);
    let n = rng.gen_range(2..=24);
    let block_count = rng.gen_range(1..=n);
    let modes = match seed % 6 {
        0 => SpecialModes::default(),
        1 => SpecialModes {
            zero_blocks: true,
            ..Default::default()
        },
        2 => SpecialModes {
            constant_u: true,
            ..Default::default()
        },
        3 => SpecialModes {
            measurable_u: true,
            ..Default::default()
        },
        4 => SpecialModes {
            partial_isometry: true,
            ..Default::default()
        },
        _ => SpecialModes {
            measurable_u: true,
            zero_blocks: true,
            ..Default::default()
        },
    };
    GeneratorConfig::new(seed, n, block_count).with_modes(modes)
}
