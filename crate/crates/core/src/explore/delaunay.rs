//! Incremental Delaunay triangulation in two and three dimensions.
//!
//! Bowyer-Watson insertion with ghost cells: every convex-hull facet carries
//! a ghost cell joining it to a vertex at infinity, so points outside the
//! current hull are inserted the same way as interior ones. A point conflicts
//! with a finite cell when it lies strictly inside the circumsphere and with
//! a ghost cell when it lies strictly beyond the hull facet. Inputs receive a
//! fixed pseudo-random jitter of order `1e-10` before insertion, which breaks
//! cospherical and coplanar ties deterministically.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const INF: usize = usize::MAX;
/// Magnitude of the tie-breaking perturbation.
pub const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct HullFacet {
    /// `d` vertex indices.
    pub vertices: Vec<usize>,
    /// Outward unit normal.
    pub normal: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Triangulation {
    pub vertices: Vec<Vec<f64>>,
    /// Each simplex is `d + 1` vertex indices.
    pub simplices: Vec<Vec<usize>>,
    pub hull_facets: Vec<HullFacet>,
}

impl Triangulation {
    pub fn dim(&self) -> usize {
        self.vertices.first().map_or(0, |v| v.len())
    }
}

#[derive(Debug, Clone)]
struct Cell {
    verts: Vec<usize>,
    center: Vec<f64>,
    radius2: f64,
}

impl Cell {
    fn is_ghost(&self) -> bool {
        self.verts.contains(&INF)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn jittered(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            p.iter()
                .enumerate()
                .map(|(k, v)| {
                    let h = splitmix((i as u64) << 8 | k as u64);
                    let u = (h >> 11) as f64 / (1u64 << 53) as f64;
                    v + JITTER * (2.0 * u - 1.0)
                })
                .collect()
        })
        .collect()
}

/// Signed volume factor `det[p_1 − p_0, …, p_d − p_0]`.
fn orient(pts: &[&[f64]]) -> f64 {
    let d = pts.len() - 1;
    let m = DMatrix::from_fn(d, d, |r, c| pts[r + 1][c] - pts[0][c]);
    m.determinant()
}

fn circumsphere(pts: &[&[f64]]) -> Option<(Vec<f64>, f64)> {
    let d = pts.len() - 1;
    let p0 = pts[0];
    let a = DMatrix::from_fn(d, d, |r, c| 2.0 * (pts[r + 1][c] - p0[c]));
    let b = DVector::from_fn(d, |r, _| {
        pts[r + 1].iter().map(|v| v * v).sum::<f64>() - p0.iter().map(|v| v * v).sum::<f64>()
    });
    let c = a.lu().solve(&b)?;
    let center: Vec<f64> = c.iter().cloned().collect();
    let r2 = p0.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
    Some((center, r2))
}

struct Builder<'a> {
    pts: &'a [Vec<f64>],
    interior: Vec<f64>,
    cells: Vec<Cell>,
}

impl<'a> Builder<'a> {
    fn make_cell(&self, verts: Vec<usize>) -> Result<Cell> {
        if verts.contains(&INF) {
            return Ok(Cell { verts, center: Vec::new(), radius2: 0.0 });
        }
        let refs: Vec<&[f64]> = verts.iter().map(|&v| self.pts[v].as_slice()).collect();
        let (center, radius2) =
            circumsphere(&refs).ok_or_else(|| Error::Degenerate("flat simplex during insertion".into()))?;
        Ok(Cell { verts, center, radius2 })
    }

    /// Positive when `p` lies on the far side of a ghost's facet from the interior.
    fn beyond_facet(&self, cell: &Cell, p: &[f64]) -> f64 {
        let facet: Vec<&[f64]> = cell.verts.iter().filter(|&&v| v != INF).map(|&v| self.pts[v].as_slice()).collect();
        let mut with_p = facet.clone();
        with_p.push(p);
        let mut with_c = facet;
        with_c.push(&self.interior);
        let sp = orient(&with_p);
        let sc = orient(&with_c);
        -sp * sc.signum()
    }

    fn conflicts(&self, cell: &Cell, p: &[f64]) -> bool {
        if cell.is_ghost() {
            self.beyond_facet(cell, p) > 0.0
        } else {
            let d2: f64 = p.iter().zip(&cell.center).map(|(a, b)| (a - b) * (a - b)).sum();
            d2 < cell.radius2
        }
    }

    fn contains(&self, cell: &Cell, p: &[f64]) -> bool {
        if cell.is_ghost() {
            return self.beyond_facet(cell, p) > 0.0;
        }
        // p is inside when replacing any vertex by p keeps the orientation sign
        let refs: Vec<&[f64]> = cell.verts.iter().map(|&v| self.pts[v].as_slice()).collect();
        let base = orient(&refs);
        (0..refs.len()).all(|i| {
            let mut r = refs.clone();
            r[i] = p;
            orient(&r) * base >= 0.0
        })
    }

    fn insert(&mut self, idx: usize) -> Result<()> {
        let p = self.pts[idx].clone();
        let seed = self
            .cells
            .iter()
            .position(|c| self.contains(c, &p) && self.conflicts(c, &p))
            .or_else(|| self.cells.iter().position(|c| self.conflicts(c, &p)))
            .ok_or_else(|| Error::Degenerate(format!("point {idx} conflicts with no cell")))?;

        let mut by_facet: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
        for (ci, c) in self.cells.iter().enumerate() {
            for f in facets(&c.verts) {
                by_facet.entry(f).or_default().push(ci);
            }
        }

        // Flood the conflict region outward from the seed.
        let mut in_cavity = vec![false; self.cells.len()];
        in_cavity[seed] = true;
        let mut stack = vec![seed];
        while let Some(ci) = stack.pop() {
            for f in facets(&self.cells[ci].verts) {
                for &nb in &by_facet[&f] {
                    if !in_cavity[nb] && self.conflicts(&self.cells[nb], &p) {
                        in_cavity[nb] = true;
                        stack.push(nb);
                    }
                }
            }
        }

        let mut boundary = Vec::new();
        for (ci, c) in self.cells.iter().enumerate() {
            if !in_cavity[ci] {
                continue;
            }
            for f in facets(&c.verts) {
                let shared_inside = by_facet[&f].iter().filter(|&&o| in_cavity[o]).count();
                if shared_inside == 1 {
                    boundary.push(f);
                }
            }
        }

        let mut kept: Vec<Cell> =
            self.cells.drain(..).enumerate().filter(|(i, _)| !in_cavity[*i]).map(|(_, c)| c).collect();
        for mut f in boundary {
            f.push(idx);
            kept.push(self.make_cell(f)?);
        }
        self.cells = kept;
        Ok(())
    }
}

/// Sorted facets of a cell (each omits one vertex).
fn facets(verts: &[usize]) -> Vec<Vec<usize>> {
    (0..verts.len())
        .map(|skip| {
            let mut f: Vec<usize> = verts.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v).collect();
            f.sort_unstable();
            f
        })
        .collect()
}

/// Picks `d + 1` well-spread, affinely independent points to start from.
fn initial_simplex(pts: &[Vec<f64>]) -> Result<Vec<usize>> {
    let d = pts[0].len();
    let mut chosen = vec![0usize];
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let far = (1..pts.len())
        .max_by(|&a, &b| dist2(&pts[a], &pts[0]).total_cmp(&dist2(&pts[b], &pts[0])))
        .unwrap_or(0);
    chosen.push(far);
    let scale = dist2(&pts[far], &pts[0]);
    while chosen.len() < d + 1 {
        // maximize the Gram determinant of the edge vectors from the first vertex
        let origin = &pts[chosen[0]];
        let edge = |i: usize| -> Vec<f64> { pts[i].iter().zip(origin).map(|(a, b)| a - b).collect() };
        let mut edges: Vec<Vec<f64>> = chosen[1..].iter().map(|&i| edge(i)).collect();
        let mut best = (0.0, None);
        for i in 0..pts.len() {
            if chosen.contains(&i) {
                continue;
            }
            edges.push(edge(i));
            let k = edges.len();
            let g = DMatrix::from_fn(k, k, |r, c| edges[r].iter().zip(&edges[c]).map(|(a, b)| a * b).sum::<f64>());
            edges.pop();
            let vol = g.determinant();
            if vol > best.0 {
                best = (vol, Some(i));
            }
        }
        let k = chosen.len() as i32;
        match best.1 {
            Some(i) if best.0 > 1e-16 * scale.powi(k) => chosen.push(i),
            _ => return Err(Error::Degenerate("points do not span the space".into())),
        }
    }
    Ok(chosen)
}

/// Delaunay triangulation of `points` in `d ∈ {2, 3}` dimensions.
pub fn delaunay(points: &[Vec<f64>]) -> Result<Triangulation> {
    let d = points.first().map_or(0, |p| p.len());
    if !(2..=3).contains(&d) {
        return Err(Error::InvalidArgument(format!("triangulation supports d = 2 or 3, got {d}")));
    }
    if points.len() < d + 1 {
        return Err(Error::InsufficientPoints { needed: d + 1, got: points.len() });
    }
    let pts = jittered(points);
    let first = initial_simplex(&pts)?;
    let interior: Vec<f64> = (0..d).map(|k| first.iter().map(|&i| pts[i][k]).sum::<f64>() / (d + 1) as f64).collect();
    let mut b = Builder { pts: &pts, interior, cells: Vec::new() };
    b.cells.push(b.make_cell(first.clone())?);
    for f in facets(&first) {
        let mut g = f;
        g.push(INF);
        b.cells.push(b.make_cell(g)?);
    }
    for i in 0..pts.len() {
        if !first.contains(&i) {
            b.insert(i)?;
        }
    }

    let mut simplices = Vec::new();
    let mut hull_facets = Vec::new();
    for c in &b.cells {
        if c.is_ghost() {
            let mut verts: Vec<usize> = c.verts.iter().cloned().filter(|&v| v != INF).collect();
            verts.sort_unstable();
            let normal = outward_normal(&verts.iter().map(|&v| points[v].as_slice()).collect::<Vec<_>>(), &b.interior);
            hull_facets.push(HullFacet { vertices: verts, normal });
        } else {
            let mut v = c.verts.clone();
            v.sort_unstable();
            simplices.push(v);
        }
    }
    simplices.sort();
    hull_facets.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    Ok(Triangulation { vertices: points.to_vec(), simplices, hull_facets })
}

fn outward_normal(facet: &[&[f64]], interior: &[f64]) -> Vec<f64> {
    let mut n = match facet.len() {
        2 => {
            let e = [facet[1][0] - facet[0][0], facet[1][1] - facet[0][1]];
            vec![e[1], -e[0]]
        }
        3 => {
            let a: Vec<f64> = (0..3).map(|k| facet[1][k] - facet[0][k]).collect();
            let b: Vec<f64> = (0..3).map(|k| facet[2][k] - facet[0][k]).collect();
            vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
        }
        _ => unreachable!("facets have 2 or 3 vertices"),
    };
    let norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
    n.iter_mut().for_each(|v| *v /= norm);
    let toward: f64 = n.iter().zip(interior).zip(facet[0]).map(|((a, c), p)| a * (c - p)).sum();
    if toward > 0.0 {
        n.iter_mut().for_each(|v| *v = -*v);
    }
    n
}

/// Unsigned volume of a simplex given its vertices.
pub fn simplex_volume(pts: &[&[f64]]) -> f64 {
    let d = pts.len() - 1;
    let fact: f64 = (1..=d).map(|v| v as f64).product();
    orient(pts).abs() / fact
}
