//! Random channel generators shared by the integration tests.

use avmac::{Alphabets, Avmac};
use rand::Rng;

/// Kernel with independent uniform weights, rows normalized.
pub fn random_channel(sizes: Alphabets, rng: &mut impl Rng) -> Avmac {
    let rows = sizes.x * sizes.y * sizes.s;
    let table: Vec<Vec<f64>> = (0..rows)
        .map(|_| {
            let w: Vec<f64> = (0..sizes.z).map(|_| rng.gen_range(0.05..1.0)).collect();
            let t: f64 = w.iter().sum();
            w.into_iter().map(|v| v / t).collect()
        })
        .collect();
    Avmac::from_fn(sizes, |x, y, s, z| table[(x * sizes.y + y) * sizes.s + s][z]).unwrap()
}

/// Binary channel `W(z|x,y,s) = T(z | {f(x,y), s})` for a random boolean `f`
/// and a random kernel `T` on unordered pairs; `U(s|x',y') = δ_{f(x',y')}`
/// symmetrizes it.
pub fn symmetric_binary_channel(rng: &mut impl Rng) -> Avmac {
    let f: Vec<usize> = (0..4).map(|_| rng.gen_range(0..2)).collect();
    // unordered pairs {0,0}, {0,1}, {1,1}
    let t: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..=1.0)).collect();
    Avmac::from_fn(Alphabets::new(2, 2, 2, 2), |x, y, s, z| {
        let p = t[f[x * 2 + y] + s];
        if z == 0 {
            p
        } else {
            1.0 - p
        }
    })
    .unwrap()
}
