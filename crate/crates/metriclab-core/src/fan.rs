//! Deterministic direction fans.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::Direction;
use crate::C64;

/// Axis-aligned and diagonal unit directions of ℂⁿ, in a fixed order.
pub fn structured(n: usize) -> Vec<Direction> {
    let mut out = Vec::new();
    if n == 1 {
        for k in 0..8 {
            let v = alloc::vec![C64::from_polar(1.0, PI * k as f64 / 4.0)];
            out.push(Direction::new(v).unwrap());
        }
        return out;
    }
    for i in 0..n {
        out.push(Direction::axis(n, i));
    }
    let units = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, -1.0),
    ];
    for u in units {
        for i in 0..n {
            for j in (i + 1)..n {
                let mut v = alloc::vec![C64::new(0.0, 0.0); n];
                v[i] = C64::new(FRAC_1_SQRT_2, 0.0);
                v[j] = u * FRAC_1_SQRT_2;
                out.push(Direction::new(v).unwrap());
            }
        }
    }
    out
}

/// Seeded directions uniform on the unit sphere of ℂⁿ.
pub fn random(n: usize, count: usize, seed: u64) -> Vec<Direction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<C64> = (0..n).map(|_| C64::new(normal(&mut rng), normal(&mut rng))).collect();
            if let Ok(d) = Direction::new(v) {
                break d.normalized();
            }
        })
        .collect()
}

/// `count` directions: up to half structured, the rest seeded random.
pub fn mixed(n: usize, count: usize, seed: u64) -> Vec<Direction> {
    let mut out: Vec<Direction> = structured(n).into_iter().take(count / 2).collect();
    let rest = count - out.len();
    out.extend(random(n, rest, seed));
    out
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}
