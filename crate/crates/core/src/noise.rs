//! Counter-addressed Gaussian noise for the truncated cylindrical Wiener
//! process.
//!
//! Every draw is a pure function of `(seed, path_id, mode, step)`. A ChaCha8
//! keystream keyed by the seed is selected per path through its stream id and
//! seeked to a fixed word offset per (step, mode pair), so draws never depend on
//! the truncation level, on how many paths ran before, or on worker scheduling.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest mode count addressable within one time step.
pub const MAX_MODES: usize = 1 << 24;

/// Keystream words reserved per step: two modes share one Box–Muller pair,
/// which consumes four 32-bit words.
const WORDS_PER_STEP: u128 = (MAX_MODES as u128) * 2;

/// Path id reserved for auxiliary draws (e.g. random test directions).
pub const AUX_PATH: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    seed: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sequential reader for one path.
    pub fn path(&self, path_id: u64) -> PathNoise {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path_id);
        PathNoise { rng }
    }

    /// Random-access standard normal at `(path_id, mode, step)`.
    pub fn gaussian(&self, path_id: u64, mode: usize, step: u64) -> f64 {
        let mut p = self.path(path_id);
        p.seek(step, mode / 2);
        let (z0, z1) = p.pair();
        if mode.is_multiple_of(2) {
            z0
        } else {
            z1
        }
    }

    /// A unit vector in `R^n` drawn from the auxiliary stream.
    pub fn random_unit_vector(&self, n: usize, salt: u64) -> Vec<f64> {
        let mut p = self.path(AUX_PATH);
        let mut v = vec![0.0; n];
        p.fill_standard(salt, &mut v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}

/// Per-path keystream reader.
pub struct PathNoise {
    rng: ChaCha8Rng,
}

impl PathNoise {
    fn seek(&mut self, step: u64, pair: usize) {
        debug_assert!(pair < MAX_MODES / 2);
        self.rng
            .set_word_pos(step as u128 * WORDS_PER_STEP + pair as u128 * 4);
    }

    fn pair(&mut self) -> (f64, f64) {
        box_muller(self.rng.next_u64(), self.rng.next_u64())
    }

    /// Standard normals for modes `0..out.len()` at `step`.
    pub fn fill_standard(&mut self, step: u64, out: &mut [f64]) {
        debug_assert!(out.len() <= MAX_MODES);
        self.seek(step, 0);
        let mut chunks = out.chunks_exact_mut(2);
        for c in &mut chunks {
            let (z0, z1) = self.pair();
            c[0] = z0;
            c[1] = z1;
        }
        if let [last] = chunks.into_remainder() {
            *last = self.pair().0;
        }
    }

    /// Brownian increments `√dt · Z` for modes `0..out.len()` at `step`.
    pub fn fill_increments(&mut self, step: u64, dt: f64, out: &mut [f64]) {
        self.fill_standard(step, out);
        let s = dt.sqrt();
        out.iter_mut().for_each(|x| *x *= s);
    }
}

fn box_muller(a: u64, b: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    // u1 in (0, 1] keeps the logarithm finite.
    let u1 = ((a >> 11) + 1) as f64 * SCALE;
    let u2 = (b >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}
