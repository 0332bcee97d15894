//! Latin hypercube designs on the unit cube.

use rand::seq::SliceRandom;
use rand::Rng;

/// One random Latin hypercube sample of `n` points in `[0,1]^d`.
///
/// Every margin has exactly one point in each stratum `[k/n, (k+1)/n)`.
pub fn random_lhs<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; d]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..d {
        strata.shuffle(rng);
        for (i, &s) in strata.iter().enumerate() {
            let u: f64 = rng.gen();
            points[i][j] = ((s as f64 + u) / n as f64).min(1.0);
        }
    }
    points
}

/// Smallest pairwise Euclidean distance of a point set (infinity for fewer than two points).
pub fn min_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.min(squared_distance(&points[i], &points[j]));
        }
    }
    best.sqrt()
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Best of `tries` random Latin hypercubes by the maximin criterion.
pub fn maximin_lhs<R: Rng + ?Sized>(n: usize, d: usize, tries: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut best = random_lhs(n, d, rng);
    let mut best_score = min_pairwise_distance(&best);
    for _ in 1..tries.max(1) {
        let cand = random_lhs(n, d, rng);
        let score = min_pairwise_distance(&cand);
        if score > best_score {
            best = cand;
            best_score = score;
        }
    }
    best
}

/// Number of random designs the maximin search compares.
pub const MAXIMIN_TRIES: usize = 20;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_point_per_stratum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = maximin_lhs(25, 2, MAXIMIN_TRIES, &mut rng);
        for j in 0..2 {
            let mut seen = [false; 25];
            for p in &pts {
                let k = (p[j] * 25.0).floor() as usize;
                assert!(!seen[k]);
                seen[k] = true;
            }
        }
    }

    #[test]
    fn maximin_not_worse_than_first_draw() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let first = random_lhs(10, 3, &mut a);
        let best = maximin_lhs(10, 3, 20, &mut b);
        assert!(min_pairwise_distance(&best) >= min_pairwise_distance(&first));
    }
}
