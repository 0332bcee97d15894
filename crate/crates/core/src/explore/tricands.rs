//! Triangulation candidates: simplex barycenters plus points pushed out from
//! convex-hull facets towards the cube boundary.

use super::delaunay::Triangulation;

/// Fraction of the room between a hull facet and the cube boundary used for
/// the outward candidate.
pub const HULL_STEP: f64 = 0.5;
/// Facets with less room than this emit no outward candidate.
pub const MIN_ROOM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Interior,
    Hull,
}

#[derive(Debug, Clone, Default)]
pub struct CandidateSet {
    pub points: Vec<Vec<f64>>,
    pub provenance: Vec<Provenance>,
    /// Posterior standard deviation per candidate and response, filled by the caller.
    pub criteria: Vec<Vec<f64>>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Distance from `origin` along unit direction `dir` to the unit-cube boundary.
fn room_to_boundary(origin: &[f64], dir: &[f64]) -> f64 {
    let mut t = f64::INFINITY;
    for (o, u) in origin.iter().zip(dir) {
        if *u > 0.0 {
            t = t.min((1.0 - o) / u);
        } else if *u < 0.0 {
            t = t.min(-o / u);
        }
    }
    t.max(0.0)
}

pub fn tricands(tri: &Triangulation) -> CandidateSet {
    let d = tri.dim();
    let mut out = CandidateSet::default();
    for s in &tri.simplices {
        let k = s.len() as f64;
        let c: Vec<f64> = (0..d).map(|j| s.iter().map(|&v| tri.vertices[v][j]).sum::<f64>() / k).collect();
        out.points.push(c);
        out.provenance.push(Provenance::Interior);
    }
    for f in &tri.hull_facets {
        let k = f.vertices.len() as f64;
        let m: Vec<f64> = (0..d).map(|j| f.vertices.iter().map(|&v| tri.vertices[v][j]).sum::<f64>() / k).collect();
        let room = room_to_boundary(&m, &f.normal);
        if room < MIN_ROOM {
            continue;
        }
        let p: Vec<f64> = m.iter().zip(&f.normal).map(|(a, u)| (a + HULL_STEP * room * u).clamp(0.0, 1.0)).collect();
        out.points.push(p);
        out.provenance.push(Provenance::Hull);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::delaunay::delaunay;

    #[test]
    fn barycenter_of_unit_triangle() {
        let tri = delaunay(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let c = tricands(&tri);
        let interior: Vec<_> = c.points.iter().zip(&c.provenance).filter(|(_, p)| **p == Provenance::Interior).collect();
        assert_eq!(interior.len(), 1);
        assert!((interior[0].0[0] - 1.0 / 3.0).abs() < 1e-9 && (interior[0].0[1] - 1.0 / 3.0).abs() < 1e-9);
        // two legs lie on the cube boundary; only the hypotenuse has room
        assert_eq!(c.len(), 2);
        let hull = &c.points[1];
        // midpoint (0.5, 0.5) pushed halfway to the corner (1, 1)
        assert!((hull[0] - 0.75).abs() < 1e-6 && (hull[1] - 0.75).abs() < 1e-6, "{hull:?}");
    }

    #[test]
    fn candidates_stay_in_cube_and_count_bound() {
        let pts = vec![vec![0.2, 0.3], vec![0.7, 0.1], vec![0.5, 0.8], vec![0.4, 0.4], vec![0.9, 0.6]];
        let tri = delaunay(&pts).unwrap();
        let c = tricands(&tri);
        assert!(c.len() <= tri.simplices.len() + tri.hull_facets.len());
        assert!(c.points.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        // points strictly inside the cube: every facet has room
        assert_eq!(c.len(), tri.simplices.len() + tri.hull_facets.len());
    }
}
