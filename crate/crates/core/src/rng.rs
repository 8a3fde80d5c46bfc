//! Seeded, replayable random streams.
//!
//! Every stochastic operation in the crate takes an explicit [`RngStream`].
//! A stream is identified by `(seed, stream_id)`: the seed keys a ChaCha8
//! generator and the stream id selects one of its 2^64 independent
//! keystreams, so distinct ids never overlap.
//!
//! All derived samplers are implemented here on top of raw `u64` output so
//! their bit patterns do not depend on any external distribution crate:
//!
//! - uniform `f64` in `[0, 1)`: top 53 bits of one `u64`
//! - bounded integers: rejection sampling on the largest multiple of `n`
//! - standard normals: Marsaglia polar method, the spare value is cached
//! - permutations: Fisher-Yates from the last index down

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::numeric::norm;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream keyed by a fresh seed drawn from this one.
    pub fn split(&mut self) -> RngStream {
        let seed = self.next_u64();
        RngStream::new(seed, self.stream_id)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let limit = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < limit {
                return x % n;
            }
        }
    }

    /// One standard normal draw.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// `dim` i.i.d. standard normal draws.
    pub fn sample_gaussian(&mut self, dim: usize) -> Result<Vec<f64>> {
        if dim == 0 {
            return Err(Error::invalid("sample_gaussian: dim must be positive"));
        }
        Ok((0..dim).map(|_| self.gaussian()).collect())
    }

    /// Uniform direction on the unit sphere in `dim` dimensions.
    pub fn sample_unit_sphere(&mut self, dim: usize) -> Result<Vec<f64>> {
        if dim == 0 {
            return Err(Error::invalid("sample_unit_sphere: dim must be positive"));
        }
        loop {
            let mut v = self.sample_gaussian(dim)?;
            let len = norm(&v);
            if len > 0.0 && len.is_finite() {
                v.iter_mut().for_each(|c| *c /= len);
                return Ok(v);
            }
        }
    }

    /// Uniformly random permutation of `0..n`.
    pub fn shuffle_permutation(&mut self, n: usize) -> Result<Vec<usize>> {
        if n == 0 {
            return Err(Error::invalid("shuffle_permutation: n must be positive"));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i as u64 + 1) as usize;
            perm.swap(i, j);
        }
        Ok(perm)
    }
}
