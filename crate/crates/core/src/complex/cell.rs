//! Complexes: disjoint saddle connections plus the flat triangles they bound.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use super::geometry::{
    disjoint, enumerate_saddle_connections, ConePoint, GeometryError, Kind, SaddleConnection,
    SlitGeometry, TOL,
};
use crate::surface::SurfaceMode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("edges {0} and {1} intersect")]
    Intersecting(usize, usize),
    #[error("strip interiors need both slit edges and horizontal edges only")]
    BadStrips,
    #[error("operation needs a complex without strip interiors")]
    StripsUnsupported,
    #[error("edge {0} is longer than epsilon")]
    NotEpsilon(usize),
    #[error("the given saddle connection is longer than epsilon")]
    GammaTooLong,
    #[error("the given saddle connection already lies in the complex")]
    GammaInComplex,
    #[error("complex already covers the surface at level {0}")]
    Full(usize),
    #[error("no disjoint saddle connection of length at most {bound}")]
    NoSaddle { bound: f64 },
    #[error("triangle spans {0} strips, above the scan cap")]
    HeightCap(i64),
}

/// Largest number of pairwise disjoint saddle connections: a triangulation.
pub fn max_level(mode: SurfaceMode) -> usize {
    match mode {
        SurfaceMode::Slit => 12,
        SurfaceMode::Torus => 3,
    }
}

const HEIGHT_CAP: i64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Dart {
    pub edge: usize,
    pub forward: bool,
}

impl Dart {
    fn rev(self) -> Dart {
        Dart {
            edge: self.edge,
            forward: !self.forward,
        }
    }
}

/// A boundary walk of the cut surface with the angle at each corner it turns through.
#[derive(Clone, Debug, Serialize)]
pub struct Face {
    pub darts: Vec<Dart>,
    pub corners: Vec<f64>,
}

impl Face {
    pub fn angle_sum(&self) -> f64 {
        self.corners.iter().sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Triangle {
    pub darts: [Dart; 3],
    pub area: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Complex {
    pub t: f64,
    pub edges: Vec<SaddleConnection>,
    pub triangles: Vec<Triangle>,
    /// Sheets whose open strip `0 < y < 1` is part of the interior.
    pub strips: Vec<u8>,
}

impl Complex {
    /// Complex with the given edges on `g_t omega`, closed under the triangle rule.
    pub fn new(
        g: &SlitGeometry,
        t: f64,
        edges: Vec<SaddleConnection>,
    ) -> Result<Self, ComplexError> {
        check_disjoint(g, &edges)?;
        let mut c = Complex {
            t,
            edges,
            triangles: Vec::new(),
            strips: Vec::new(),
        };
        c.triangles = c.fill_triangles(g)?;
        Ok(c)
    }

    /// Complex made of horizontal edges and whole strips.
    pub fn horizontal(
        g: &SlitGeometry,
        t: f64,
        cut: &[Kind],
        strips: &[u8],
    ) -> Result<Self, ComplexError> {
        let mut edges = Vec::new();
        for k in cut {
            let e = match *k {
                Kind::Arc(s) => SaddleConnection::arc(g, s & 1),
                Kind::Slit(s) => SaddleConnection::slit(g, s & 1),
                Kind::Oblique => return Err(ComplexError::BadStrips),
            };
            if !edges.iter().any(|x: &SaddleConnection| x.same_as(&e)) {
                edges.push(e);
            }
        }
        let mut strips: Vec<u8> = strips.iter().map(|s| s & 1).collect();
        strips.sort_unstable();
        strips.dedup();
        let both_slits = [0u8, 1]
            .iter()
            .all(|&b| edges.iter().any(|e| e.kind == Kind::Slit(b)));
        // without both slit cuts the two strips form one region
        if strips.len() == 1 && !both_slits {
            return Err(ComplexError::BadStrips);
        }
        Ok(Complex {
            t,
            edges,
            triangles: Vec::new(),
            strips,
        })
    }

    pub fn level(&self) -> usize {
        self.edges.len()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.length_at(self.t))
            .fold(0.0, f64::max)
    }

    pub fn is_epsilon_complex(&self, eps: f64) -> bool {
        self.max_edge_length() <= eps
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| t.area).sum::<f64>() + self.strips.len() as f64
    }

    pub fn has_interior(&self) -> bool {
        !self.triangles.is_empty() || !self.strips.is_empty()
    }

    /// Number of sides (0, 1 or 2) of each edge that border the interior.
    pub fn interior_sides(&self) -> Vec<u8> {
        let mut sides = vec![0u8; self.edges.len()];
        for tr in &self.triangles {
            for d in tr.darts {
                sides[d.edge] += 1;
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            match e.kind {
                Kind::Arc(s) if self.strips.contains(&s) => sides[i] += 2,
                Kind::Slit(b) => {
                    sides[i] +=
                        self.strips.contains(&b) as u8 + self.strips.contains(&(1 - b)) as u8
                }
                _ => {}
            }
        }
        sides
    }

    /// Total horizontal component of the edges bounding the interior on exactly one side.
    pub fn boundary_horizontal(&self) -> f64 {
        let ex = self.t.exp();
        self.interior_sides()
            .iter()
            .zip(&self.edges)
            .filter(|(s, _)| **s == 1)
            .map(|(_, e)| (ex * e.h).abs())
            .sum()
    }

    fn dart_origin(&self, d: Dart) -> ConePoint {
        let e = &self.edges[d.edge];
        if d.forward {
            e.start
        } else {
            e.end
        }
    }

    /// Holonomy of a dart on `g_t omega` (or on `omega` when `t = 0`).
    fn dart_vec(&self, d: Dart, t: f64) -> (f64, f64) {
        let (h, v) = self.edges[d.edge].hol_at(t);
        if d.forward {
            (h, v)
        } else {
            (-h, -v)
        }
    }

    /// Boundary walks of the complement of the edges, interior on the left.
    pub fn faces(&self, g: &SlitGeometry) -> Vec<Face> {
        let mut at: [Vec<(f64, Dart)>; 2] = [Vec::new(), Vec::new()];
        for i in 0..self.edges.len() {
            for fwd in [true, false] {
                let d = Dart {
                    edge: i,
                    forward: fwd,
                };
                let a = self.edges[i]
                    .dart_angle(g, fwd, self.t)
                    .rem_euclid(4.0 * PI);
                at[self.dart_origin(d) as usize].push((a, d));
            }
        }
        for v in at.iter_mut() {
            v.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        }
        let locate = |d: Dart| {
            let list = &at[self.dart_origin(d) as usize];
            (list, list.iter().position(|x| x.1 == d).unwrap())
        };
        // next dart: clockwise neighbour of the reversed dart at the far end
        let next = |d: Dart| -> (Dart, f64) {
            let r = d.rev();
            let (list, i) = locate(r);
            let j = if i == 0 { list.len() - 1 } else { i - 1 };
            if j == i {
                (r, 4.0 * PI)
            } else {
                (list[j].1, (list[i].0 - list[j].0).rem_euclid(4.0 * PI))
            }
        };
        let mut used = vec![[false; 2]; self.edges.len()];
        let mut faces = Vec::new();
        for i in 0..self.edges.len() {
            for fwd in [true, false] {
                if used[i][fwd as usize] {
                    continue;
                }
                let first = Dart {
                    edge: i,
                    forward: fwd,
                };
                let mut d = first;
                let mut face = Face {
                    darts: Vec::new(),
                    corners: Vec::new(),
                };
                loop {
                    used[d.edge][d.forward as usize] = true;
                    face.darts.push(d);
                    let (n, corner) = next(d);
                    face.corners.push(corner);
                    d = n;
                    if d == first {
                        break;
                    }
                }
                faces.push(face);
            }
        }
        faces
    }

    fn fill_triangles(&self, g: &SlitGeometry) -> Result<Vec<Triangle>, ComplexError> {
        let mut out = Vec::new();
        for f in self.faces(g) {
            if f.darts.len() != 3 || (f.angle_sum() - PI).abs() > 1e-8 {
                continue;
            }
            let w: Vec<(f64, f64)> = f.darts.iter().map(|&d| self.dart_vec(d, self.t)).collect();
            let scale = w.iter().map(|p| p.0.hypot(p.1)).fold(0.0, f64::max);
            let (sx, sy) = w.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
            if sx.hypot(sy) > 1e-9 * scale.max(1.0) {
                continue;
            }
            let area = 0.5 * (w[0].0 * w[1].1 - w[0].1 * w[1].0);
            if area <= 0.0 {
                continue;
            }
            if self.cone_inside(g, &f.darts)? {
                continue;
            }
            out.push(Triangle {
                darts: [f.darts[0], f.darts[1], f.darts[2]],
                area,
            });
        }
        Ok(out)
    }

    /// Whether the developed triangle contains a cone point other than its corners.
    fn cone_inside(&self, g: &SlitGeometry, darts: &[Dart]) -> Result<bool, ComplexError> {
        let w: Vec<(f64, f64)> = darts.iter().map(|&d| self.dart_vec(d, 0.0)).collect();
        let p = [(0.0, 0.0), w[0], (w[0].0 + w[1].0, w[0].1 + w[1].1)];
        let ylo = p.iter().map(|q| q.1).fold(f64::INFINITY, f64::min).round() as i64;
        let yhi = p
            .iter()
            .map(|q| q.1)
            .fold(f64::NEG_INFINITY, f64::max)
            .round() as i64;
        if yhi - ylo > HEIGHT_CAP {
            return Err(ComplexError::HeightCap(yhi - ylo));
        }
        let x_origin = g.x_of(self.dart_origin(darts[0]));
        for j in ylo..=yhi {
            let y = j as f64;
            let mut xs = Vec::with_capacity(3);
            for k in 0..3 {
                let (a, b) = (p[k], p[(k + 1) % 3]);
                if (a.1 - b.1).abs() < 0.5 {
                    if (a.1 - y).abs() < 0.5 {
                        xs.push(a.0);
                        xs.push(b.0);
                    }
                } else if (a.1.min(b.1)..=a.1.max(b.1)).contains(&y) {
                    xs.push(a.0 + (b.0 - a.0) * (y - a.1) / (b.1 - a.1));
                }
            }
            if xs.is_empty() {
                continue;
            }
            let xl = xs.iter().copied().fold(f64::INFINITY, f64::min) + TOL;
            let xr = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - TOL;
            if xr <= xl {
                continue;
            }
            for c in [0.0, g.s] {
                let target = c - x_origin - y * g.alpha;
                let n = (xl - target).ceil();
                if target + n < xr {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

fn check_disjoint(g: &SlitGeometry, edges: &[SaddleConnection]) -> Result<(), ComplexError> {
    for i in 0..edges.len() {
        for j in 0..i {
            if !disjoint(g, &edges[i], &edges[j]) {
                return Err(ComplexError::Intersecting(j, i));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct AreaBound {
    pub level: usize,
    pub max_edge: f64,
    pub bound: f64,
    pub area: f64,
    pub holds: bool,
}

/// `(level * longest edge)^2` against the area actually enclosed.
pub fn area_bound(c: &Complex) -> AreaBound {
    let max_edge = c.max_edge_length();
    let bound = (c.level() as f64 * max_edge).powi(2);
    let area = c.area();
    AreaBound {
        level: c.level(),
        max_edge,
        bound,
        area,
        holds: area <= bound,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowStep {
    pub complex: Complex,
    pub added: SaddleConnection,
    pub bound: f64,
}

/// Add a saddle connection of length at most `6 eps` disjoint from every edge.
///
/// `gamma` is a saddle connection of length at most `eps` outside the complex; the
/// shortest admissible edge is taken.
pub fn grow_complex(
    g: &SlitGeometry,
    c: &Complex,
    gamma: &SaddleConnection,
    eps: f64,
    cap: u128,
) -> Result<GrowStep, ComplexError> {
    if !c.strips.is_empty() {
        return Err(ComplexError::StripsUnsupported);
    }
    if c.level() >= max_level(SurfaceMode::Slit) || c.area() >= g.area() * (1.0 - 1e-9) {
        return Err(ComplexError::Full(c.level()));
    }
    let slack = eps * (1.0 + 1e-12);
    if let Some(i) = c.edges.iter().position(|e| e.length_at(c.t) > slack) {
        return Err(ComplexError::NotEpsilon(i));
    }
    if gamma.length_at(c.t) > slack {
        return Err(ComplexError::GammaTooLong);
    }
    if c.edges.iter().any(|e| e.same_as(gamma)) {
        return Err(ComplexError::GammaInComplex);
    }
    let bound = 6.0 * eps;
    let cands = enumerate_saddle_connections(g, bound, c.t, cap)?;
    for s in cands {
        if c.edges.iter().any(|e| e.same_as(&s)) || !c.edges.iter().all(|e| disjoint(g, e, &s)) {
            continue;
        }
        let mut edges = c.edges.clone();
        edges.push(s.clone());
        let complex = Complex::new(g, c.t, edges)?;
        return Ok(GrowStep {
            complex,
            added: s,
            bound,
        });
    }
    Err(ComplexError::NoSaddle { bound })
}
