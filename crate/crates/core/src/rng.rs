//! Deterministic random streams.
//!
//! Every replicate gets its own ChaCha stream addressed by
//! `(master seed, replicate index, lane)`. Streams are counter based, so the
//! draws of replicate `r` do not depend on which worker runs it or in which
//! order replicates are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

pub type Stream = ChaCha8Rng;

/// Independent sub-streams available to one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Lane {
    Branching = 0,
    Arrivals = 1,
    Auxiliary = 2,
}

const LANES: u64 = 4;

pub fn replicate_stream(master_seed: u64, replicate: u64) -> Stream {
    lane_stream(master_seed, replicate, Lane::Branching)
}

pub fn lane_stream(master_seed: u64, replicate: u64, lane: Lane) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate.wrapping_mul(LANES).wrapping_add(lane as u64));
    rng
}

/// Exponential variate with the given rate.
#[inline]
pub fn exp_variate<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

/// Uniform variate on `[0, 1)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
