use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Latin hypercube design in [0, 1)^dims: every 1-D projection has exactly one
/// point per stratum [k/n, (k+1)/n).
pub fn lhs_sample(n: usize, dims: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(n >= 1, "LHS needs at least one point");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![0.0; dims]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for d in 0..dims {
        strata.shuffle(&mut rng);
        for (row, &k) in out.iter_mut().zip(&strata) {
            let x = (k as f64 + rng.gen::<f64>()) / n as f64;
            // guard against rounding up into the next stratum
            row[d] = x.min((k as f64 + 1.0) / n as f64 - f64::EPSILON);
        }
    }
    out
}
