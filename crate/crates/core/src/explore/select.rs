//! Exploratory acquisition: a random member of the Pareto front of
//! per-response posterior standard deviations over triangulation candidates.

use rand::Rng;

use super::delaunay::delaunay;
use super::pareto::pareto_front;
use super::tricands::{tricands, CandidateSet, Provenance};
use crate::gp::Dataset;
use crate::lhs::{random_lhs, squared_distance};
use crate::surrogate::Surrogate;

/// Candidates closer than this to an observed input are discarded.
pub const MIN_SEPARATION: f64 = 1e-6;
/// Size multiplier for the space-filling fallback candidate set.
pub const FALLBACK_MULTIPLIER: usize = 100;

fn far_from_data(x: &[f64], data: &Dataset) -> bool {
    data.inputs().iter().all(|xi| squared_distance(xi, x) >= MIN_SEPARATION * MIN_SEPARATION)
}

fn fallback<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CandidateSet {
    let points = random_lhs(FALLBACK_MULTIPLIER * d, d, rng);
    let provenance = vec![Provenance::Interior; points.len()];
    CandidateSet { points, provenance, criteria: Vec::new() }
}

/// Triangulation candidates for the current inputs, or a fresh Latin
/// hypercube when the triangulation is unavailable. Points too close to
/// existing inputs are removed. `rng` is only consumed on fallback.
pub fn exploration_candidates<R: Rng + ?Sized>(data: &Dataset, rng: &mut R) -> CandidateSet {
    let d = data.d();
    let mut set = match delaunay(data.inputs()) {
        Ok(tri) => tricands(&tri),
        Err(_) => CandidateSet::default(),
    };
    keep_separated(&mut set, data);
    if set.is_empty() {
        set = fallback(d, rng);
        keep_separated(&mut set, data);
    }
    set
}

fn keep_separated(set: &mut CandidateSet, data: &Dataset) {
    let keep: Vec<bool> = set.points.iter().map(|p| far_from_data(p, data)).collect();
    let mut k = keep.iter();
    set.points.retain(|_| *k.next().unwrap());
    let mut k = keep.iter();
    set.provenance.retain(|_| *k.next().unwrap());
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub x: Vec<f64>,
    pub candidates: CandidateSet,
    pub front: Vec<usize>,
    pub chosen: usize,
}

/// Uniform draw from the Pareto front of `criteria`.
pub fn pick_from_front<R: Rng + ?Sized>(criteria: &[Vec<f64>], rng: &mut R) -> (Vec<usize>, usize) {
    let front = pareto_front(criteria);
    let chosen = front[rng.gen_range(0..front.len())];
    (front, chosen)
}

pub fn select_exploration<R: Rng + ?Sized>(models: &[Surrogate], data: &Dataset, rng: &mut R) -> Exploration {
    let mut candidates = exploration_candidates(data, rng);
    candidates.criteria = candidates.points.iter().map(|p| models.iter().map(|m| m.predict(p).sd).collect()).collect();
    let (front, chosen) = pick_from_front(&candidates.criteria, rng);
    Exploration { x: candidates.points[chosen].clone(), candidates, front, chosen }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::McmcSettings;
    use crate::surrogate::{fit_all, SurrogateKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = random_lhs(n, d, &mut rng);
        let ys = xs.iter().map(|x| vec![x.iter().sum::<f64>() - 0.8, (3.0 * x[0]).sin() - x[1]]).collect();
        Dataset::new(xs, ys).unwrap()
    }

    #[test]
    fn single_response_picks_the_max_sd() {
        let data = data(8, 2, 1);
        let models = fit_all(SurrogateKind::Gp, &data, McmcSettings::default(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e = select_exploration(&models[..1], &data, &mut rng);
        let best = e.candidates.criteria.iter().map(|c| c[0]).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(e.candidates.criteria[e.chosen][0], best);
    }

    #[test]
    fn chosen_point_is_nondominated_and_separated() {
        for seed in 0..5 {
            let data = data(12, 2, seed);
            let models = fit_all(SurrogateKind::Gp, &data, McmcSettings::default(), seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = select_exploration(&models, &data, &mut rng);
            let c = &e.candidates.criteria;
            assert!(!c.iter().any(|o| super::super::pareto::dominates(o, &c[e.chosen])));
            assert!(far_from_data(&e.x, &data));
            assert!(e.x.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn too_few_points_fall_back_to_lhs() {
        let data = data(2, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = exploration_candidates(&data, &mut rng);
        assert_eq!(c.len(), 200);
        let data4 = data_4d();
        let c = exploration_candidates(&data4, &mut rng);
        assert_eq!(c.len(), 400);
    }

    fn data_4d() -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs = random_lhs(10, 4, &mut rng);
        let ys = xs.iter().map(|x| vec![x[0]]).collect();
        Dataset::new(xs, ys).unwrap()
    }

    #[test]
    fn front_of_one_ignores_rng() {
        let crit = vec![vec![1.0, 1.0], vec![0.5, 0.2], vec![0.9, 0.9]];
        for s in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            assert_eq!(pick_from_front(&crit, &mut rng).1, 0);
        }
    }
}
