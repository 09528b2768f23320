//! Body-fitted, graded triangulations of the perforated disk and of annuli.
//!
//! Boundary nodes sit exactly on the outer circle and on the two particle
//! circles, spaced according to a sizing function that shrinks to `h_neck` at
//! the gap. Interior nodes are quadtree leaf centres. The point set is built in
//! the upper half-plane together with a row of nodes on the symmetry axis
//! `y = 0`; the lower half is its mirror image, so meshes of symmetric
//! problems are exactly symmetric.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};
use thiserror::Error;

use crate::geometry::{DomainSpec, Particle};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("delta = 0: touching particles cannot be meshed; use tied solves at small delta")]
    Touching,
    #[error("h_neck = {h_neck} exceeds delta / 4 = {limit}")]
    NeckTooCoarse { h_neck: f64, limit: f64 },
    #[error("invalid mesh parameter {name} = {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error("mesh quality {quality:.4} is below the floor {floor:.4}")]
    Quality { quality: f64, floor: f64 },
    #[error("mesh file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Which curve a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeTag {
    Interior,
    Outer,
    Particle1,
    Particle2,
}

impl NodeTag {
    pub fn particle(which: Particle) -> Self {
        match which {
            Particle::Lower => NodeTag::Particle1,
            Particle::Upper => NodeTag::Particle2,
        }
    }

    pub fn as_particle(self) -> Option<Particle> {
        match self {
            NodeTag::Particle1 => Some(Particle::Lower),
            NodeTag::Particle2 => Some(Particle::Upper),
            _ => None,
        }
    }

    fn code(self) -> &'static str {
        match self {
            NodeTag::Interior => "interior",
            NodeTag::Outer => "outer",
            NodeTag::Particle1 => "particle1",
            NodeTag::Particle2 => "particle2",
        }
    }

    fn from_code(s: &str) -> Option<Self> {
        Some(match s {
            "interior" => NodeTag::Interior,
            "outer" => NodeTag::Outer,
            "particle1" => NodeTag::Particle1,
            "particle2" => NodeTag::Particle2,
            _ => return None,
        })
    }
}

/// A mesh edge with a triangle on one side only. `nodes` is ordered so the
/// triangle lies to the left, i.e. the domain is to the left when walking
/// from `nodes[0]` to `nodes[1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: NodeTag,
    pub triangle: usize,
}

/// A circle on which boundary nodes were placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
    pub tag: NodeTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise triangles.
    pub triangles: Vec<[usize; 3]>,
    pub tags: Vec<NodeTag>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub circles: Vec<Circle>,
    /// Target edge length at the neck (0 for meshes without a neck).
    pub h_neck: f64,
    pub h_far: f64,
}

/// Size controls for [`build_mesh`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    /// Largest edge length anywhere.
    pub h_far: f64,
    /// Edge length at the gap midpoint, at most `delta / 4`.
    pub h_neck: f64,
    /// Edge length on the particle boundaries away from the neck.
    pub h_particle: f64,
    /// Growth of the edge length per unit distance from a particle.
    pub grading: f64,
    /// Smallest acceptable inradius/circumradius ratio.
    pub quality_floor: f64,
}

impl MeshParams {
    /// Defaults scaled to the particle radius, with `h_neck = fraction * delta`.
    pub fn for_domain(domain: &DomainSpec<f64>, neck_fraction: f64) -> Self {
        let r = domain.pair.radius();
        Self {
            h_far: r / 4.0,
            h_neck: neck_fraction * domain.pair.delta(),
            h_particle: r / 20.0,
            grading: 0.3,
            quality_floor: 0.15,
        }
    }

    /// All lengths divided by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        Self {
            h_far: self.h_far / factor,
            h_neck: self.h_neck / factor,
            h_particle: self.h_particle / factor,
            ..*self
        }
    }
}

struct Sizing {
    radius: f64,
    delta: f64,
    centers: [[f64; 2]; 2],
    params: MeshParams,
}

impl Sizing {
    fn at(&self, p: [f64; 2]) -> f64 {
        let r2 = p[0] * p[0] + p[1] * p[1];
        let neck = self.params.h_neck * (self.delta + r2 / self.radius) / self.delta;
        let dist = self
            .centers
            .iter()
            .map(|c| ((p[0] - c[0]).hypot(p[1] - c[1]) - self.radius).abs())
            .fold(f64::INFINITY, f64::min);
        let near = self.params.h_particle + self.params.grading * dist;
        self.params.h_far.min(neck).min(near)
    }
}

/// Parameters `0 = s_0 < ... < s_n = length` of a curve such that the steps
/// follow the local size `h(s)`. Symmetric sizings give symmetric node sets.
fn graded_parameters(length: f64, h: impl Fn(f64) -> f64) -> Vec<f64> {
    const SAMPLES: usize = 20_000;
    let ds = length / SAMPLES as f64;
    let mut count = Vec::with_capacity(SAMPLES + 1);
    count.push(0.0);
    let mut prev = 1.0 / h(0.0);
    for k in 1..=SAMPLES {
        let cur = 1.0 / h(k as f64 * ds);
        let last = *count.last().unwrap();
        count.push(last + 0.5 * (prev + cur) * ds);
        prev = cur;
    }
    let total = count[SAMPLES];
    // Guard against a count that is integral up to rounding.
    let n = ((total * (1.0 - 1e-12)).ceil() as usize).max(1);
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut j = 0;
    for i in 1..n {
        let target = total * i as f64 / n as f64;
        while count[j + 1] < target {
            j += 1;
        }
        let t = (target - count[j]) / (count[j + 1] - count[j]);
        out.push((j as f64 + t) * ds);
    }
    out.push(length);
    out
}

fn leaf_centres(
    lo: [f64; 2],
    size: f64,
    h: &impl Fn([f64; 2]) -> f64,
    keep: &impl Fn([f64; 2], f64) -> bool,
    out: &mut Vec<[f64; 2]>,
) {
    let c = [lo[0] + 0.5 * size, lo[1] + 0.5 * size];
    let hc = h(c);
    if size <= hc {
        if keep(c, hc) {
            out.push(c);
        }
        return;
    }
    let half = 0.5 * size;
    for (i, j) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        leaf_centres(
            [lo[0] + half * i as f64, lo[1] + half * j as f64],
            half,
            h,
            keep,
            out,
        );
    }
}

/// Nodes, their tags and the triangles of a mesh under construction.
type RawMesh = (Vec<[f64; 2]>, Vec<NodeTag>, Vec<[usize; 3]>);

/// Triangulates a y-symmetric point set given as axis nodes plus upper nodes,
/// with the listed constraint edges, keeping triangles with `keep_face` and
/// mirroring the upper half.
fn mirrored_triangulation(
    axis: &[([f64; 2], NodeTag)],
    upper: &[([f64; 2], NodeTag)],
    constraints_upper: &[[usize; 2]],
    keep_face: impl Fn(&[NodeTag; 3]) -> bool,
) -> Result<RawMesh, MeshError> {
    let na = axis.len();
    let nu = upper.len();
    let mut nodes: Vec<[f64; 2]> = Vec::with_capacity(na + 2 * nu);
    let mut tags = Vec::with_capacity(na + 2 * nu);
    for (p, t) in axis.iter().chain(upper.iter()) {
        nodes.push(*p);
        tags.push(*t);
    }
    let mirror_tag = |t: NodeTag| match t {
        NodeTag::Particle2 => NodeTag::Particle1,
        NodeTag::Particle1 => NodeTag::Particle2,
        other => other,
    };
    for (p, t) in upper {
        nodes.push([p[0], -p[1]]);
        tags.push(mirror_tag(*t));
    }
    let mirror = |i: usize| {
        if i < na {
            i
        } else if i < na + nu {
            i + nu
        } else {
            i - nu
        }
    };
    let mut constraints: Vec<[usize; 2]> = constraints_upper.to_vec();
    for e in constraints_upper {
        let m = [mirror(e[0]), mirror(e[1])];
        if m != *e && m != [e[1], e[0]] {
            constraints.push(m);
        }
    }
    let points: Vec<Point2<f64>> = nodes.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let mut conflict = false;
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::try_bulk_load_cdt(
        points,
        constraints,
        |_| conflict = true,
    )
    .map_err(|e| MeshError::Triangulation(format!("{e:?}")))?;
    if conflict {
        return Err(MeshError::Triangulation(
            "overlapping constraint edges".into(),
        ));
    }
    if cdt.num_vertices() != nodes.len() {
        return Err(MeshError::Triangulation("duplicate nodes".into()));
    }
    let mut upper_tris = Vec::new();
    for face in cdt.inner_faces() {
        let v = face.vertices().map(|v| v.fix().index());
        if v.iter().any(|&i| nodes[i][1] < 0.0) || v.iter().all(|&i| nodes[i][1] == 0.0) {
            continue;
        }
        if keep_face(&v.map(|i| tags[i])) {
            upper_tris.push(v);
        }
    }
    upper_tris.sort_unstable();
    let mut triangles = upper_tris.clone();
    for t in &upper_tris {
        // Reflection reverses orientation.
        triangles.push([mirror(t[0]), mirror(t[2]), mirror(t[1])]);
    }
    Ok((nodes, tags, triangles))
}

/// Graded body-fitted mesh of the disk of radius `R_out` minus the two
/// particles.
pub fn build_mesh(domain: &DomainSpec<f64>, params: &MeshParams) -> Result<Mesh, MeshError> {
    let pair = domain.pair;
    let delta = pair.delta();
    let radius = pair.radius();
    let r_out = domain.outer_radius;
    if delta <= 0.0 {
        return Err(MeshError::Touching);
    }
    if params.h_neck > 0.25 * delta * (1.0 + 1e-12) {
        return Err(MeshError::NeckTooCoarse {
            h_neck: params.h_neck,
            limit: 0.25 * delta,
        });
    }
    for (name, value) in [
        ("h_neck", params.h_neck),
        ("h_far", params.h_far),
        ("h_particle", params.h_particle),
        ("grading", params.grading),
    ] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(MeshError::BadParameter { name, value });
        }
    }
    if domain.actual_clearance() <= 0.0 {
        return Err(MeshError::BadParameter {
            name: "outer_radius",
            value: r_out,
        });
    }

    let c2 = pair.center(Particle::Upper);
    let c1 = pair.center(Particle::Lower);
    let sizing = Sizing {
        radius,
        delta,
        centers: [c1, c2],
        params: *params,
    };
    let h = |p: [f64; 2]| sizing.at(p);

    let mut axis: Vec<([f64; 2], NodeTag)> = Vec::new();
    let mut upper: Vec<([f64; 2], NodeTag)> = Vec::new();
    let mut constraints: Vec<[usize; 2]> = Vec::new();

    // Axis row from (-R_out, 0) to (R_out, 0); its end points are outer nodes.
    let xs = graded_parameters(2.0 * r_out, |s| h([s - r_out, 0.0]));
    let n_axis = xs.len();
    for (k, s) in xs.iter().enumerate() {
        let x = if k == 0 {
            -r_out
        } else if k + 1 == n_axis {
            r_out
        } else {
            s - r_out
        };
        let tag = if k == 0 || k + 1 == n_axis {
            NodeTag::Outer
        } else {
            NodeTag::Interior
        };
        axis.push(([x, 0.0], tag));
    }
    for k in 0..n_axis - 1 {
        constraints.push([k, k + 1]);
    }
    let left_end = 0;
    let right_end = n_axis - 1;

    // Outer arc in the upper half, counter-clockwise from (R_out, 0).
    let na = axis.len();
    let thetas = graded_parameters(std::f64::consts::PI * r_out, |s| {
        let a = s / r_out;
        h([r_out * a.cos(), r_out * a.sin()])
    });
    let mut prev = right_end;
    for s in &thetas[1..thetas.len() - 1] {
        let a = s / r_out;
        let idx = na + upper.len();
        upper.push(([r_out * a.cos(), r_out * a.sin()], NodeTag::Outer));
        constraints.push([prev, idx]);
        prev = idx;
    }
    constraints.push([prev, left_end]);

    // Upper particle, symmetric about x = 0, starting at the gap point.
    let arc = graded_parameters(std::f64::consts::PI * radius, |s| {
        let a = s / radius;
        h([c2[0] + radius * a.sin(), c2[1] - radius * a.cos()])
    });
    let n_arc = arc.len();
    let first = na + upper.len();
    let mut ring: Vec<usize> = Vec::with_capacity(2 * n_arc);
    for (k, s) in arc.iter().enumerate() {
        let a = s / radius;
        let pt = if k == 0 {
            [c2[0], c2[1] - radius]
        } else if k + 1 == n_arc {
            [c2[0], c2[1] + radius]
        } else {
            [c2[0] + radius * a.sin(), c2[1] - radius * a.cos()]
        };
        ring.push(na + upper.len());
        upper.push((pt, NodeTag::Particle2));
    }
    for k in (1..n_arc - 1).rev() {
        let p = upper[ring[k] - na].0;
        ring.push(na + upper.len());
        upper.push(([2.0 * c2[0] - p[0], p[1]], NodeTag::Particle2));
    }
    for k in 0..ring.len() {
        constraints.push([ring[k], ring[(k + 1) % ring.len()]]);
    }
    debug_assert_eq!(ring[0], first);

    // Interior nodes: quadtree leaf centres away from every curve.
    let margin = 0.6;
    let keep = |p: [f64; 2], hp: f64| {
        let dist_outer = r_out - p[0].hypot(p[1]);
        let dist_p2 = (p[0] - c2[0]).hypot(p[1] - c2[1]) - radius;
        let dist_p1 = (p[0] - c1[0]).hypot(p[1] - c1[1]) - radius;
        let lim = margin * hp;
        dist_outer > lim && dist_p2 > lim && dist_p1 > lim && p[1] > lim
    };
    let mut interior = Vec::new();
    leaf_centres([-r_out, 0.0], r_out, &h, &keep, &mut interior);
    leaf_centres([0.0, 0.0], r_out, &h, &keep, &mut interior);
    upper.extend(interior.into_iter().map(|p| (p, NodeTag::Interior)));

    let keep_face = |t: &[NodeTag; 3]| {
        !(t.iter().all(|&x| x == NodeTag::Particle2) || t.iter().all(|&x| x == NodeTag::Particle1))
    };
    let (nodes, tags, triangles) = mirrored_triangulation(&axis, &upper, &constraints, keep_face)?;

    let circles = vec![
        Circle {
            center: [0.0, 0.0],
            radius: r_out,
            tag: NodeTag::Outer,
        },
        Circle {
            center: c1,
            radius,
            tag: NodeTag::Particle1,
        },
        Circle {
            center: c2,
            radius,
            tag: NodeTag::Particle2,
        },
    ];
    let mesh = Mesh::assemble(nodes, triangles, tags, circles, params.h_neck, params.h_far);
    let q = mesh.min_quality();
    if q < params.quality_floor {
        return Err(MeshError::Quality {
            quality: q,
            floor: params.quality_floor,
        });
    }
    Ok(mesh)
}

/// Structured mesh of the annulus `r_inner <= |x| <= r_outer` with target
/// edge length `h`. The inner circle is tagged as particle 1.
pub fn annulus_mesh(r_inner: f64, r_outer: f64, h: f64) -> Result<Mesh, MeshError> {
    if !(r_inner > 0.0 && r_outer > r_inner) {
        return Err(MeshError::BadParameter {
            name: "r_inner",
            value: r_inner,
        });
    }
    if !(h > 0.0) {
        return Err(MeshError::BadParameter {
            name: "h",
            value: h,
        });
    }
    let n_r = ((r_outer - r_inner) / h).ceil() as usize;
    let r_mid = 0.5 * (r_inner + r_outer);
    let n_t = ((2.0 * std::f64::consts::PI * r_mid / h).ceil() as usize).max(8);
    let mut nodes = Vec::with_capacity((n_r + 1) * n_t);
    let mut tags = Vec::with_capacity((n_r + 1) * n_t);
    for i in 0..=n_r {
        let r = if i == n_r {
            r_outer
        } else {
            r_inner + (r_outer - r_inner) * i as f64 / n_r as f64
        };
        for j in 0..n_t {
            let a = 2.0 * std::f64::consts::PI * j as f64 / n_t as f64;
            nodes.push([r * a.cos(), r * a.sin()]);
            tags.push(if i == 0 {
                NodeTag::Particle1
            } else if i == n_r {
                NodeTag::Outer
            } else {
                NodeTag::Interior
            });
        }
    }
    let id = |i: usize, j: usize| i * n_t + (j % n_t);
    let mut triangles = Vec::with_capacity(2 * n_r * n_t);
    for i in 0..n_r {
        for j in 0..n_t {
            let (a, b, c, d) = (id(i, j), id(i, j + 1), id(i + 1, j + 1), id(i + 1, j));
            // Alternate the diagonal to avoid a preferred direction.
            if (i + j) % 2 == 0 {
                triangles.push([a, c, b]);
                triangles.push([a, d, c]);
            } else {
                triangles.push([a, d, b]);
                triangles.push([b, d, c]);
            }
        }
    }
    let circles = vec![
        Circle {
            center: [0.0, 0.0],
            radius: r_outer,
            tag: NodeTag::Outer,
        },
        Circle {
            center: [0.0, 0.0],
            radius: r_inner,
            tag: NodeTag::Particle1,
        },
    ];
    Ok(Mesh::assemble(nodes, triangles, tags, circles, 0.0, h))
}

/// Uniform mesh of the unit square with `n` cells per side; all boundary
/// nodes are tagged outer.
pub fn unit_square(n: usize) -> Mesh {
    let n = n.max(1);
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    let mut tags = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
            let edge = i == 0 || j == 0 || i == n || j == n;
            tags.push(if edge {
                NodeTag::Outer
            } else {
                NodeTag::Interior
            });
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::assemble(nodes, triangles, tags, Vec::new(), 0.0, 1.0 / n as f64)
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Summary of the checks performed by [`Mesh::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeshReport {
    pub nodes: usize,
    pub triangles: usize,
    pub area: f64,
    pub min_quality: f64,
    /// Largest distance of a tagged boundary node from its circle.
    pub max_boundary_error: f64,
    /// Smallest triangle area (negative means inverted).
    pub min_area: f64,
}

impl Mesh {
    /// Builds a mesh from raw parts, recomputing the boundary edges.
    pub fn assemble(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        tags: Vec<NodeTag>,
        circles: Vec<Circle>,
        h_neck: f64,
        h_far: f64,
    ) -> Self {
        // Edge key -> (multiplicity, oriented nodes, first triangle).
        let mut count: HashMap<(usize, usize), (usize, [usize; 2], usize)> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                count
                    .entry((a.min(b), a.max(b)))
                    .and_modify(|e| e.0 += 1)
                    .or_insert((1, [a, b], t));
            }
        }
        let mut boundary_edges: Vec<BoundaryEdge> = count
            .into_iter()
            .filter(|(_, (n, _, _))| *n == 1)
            .map(|(_, (_, nodes, triangle))| {
                let ta = tags[nodes[0]];
                let tb = tags[nodes[1]];
                let tag = if ta == tb { ta } else { NodeTag::Interior };
                BoundaryEdge {
                    nodes,
                    tag,
                    triangle,
                }
            })
            .collect();
        boundary_edges.sort_unstable_by_key(|e| (e.triangle, e.nodes));
        Self {
            nodes,
            triangles,
            tags,
            boundary_edges,
            circles,
            h_neck,
            h_far,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 2]; 3] {
        self.triangles[t].map(|i| self.nodes[i])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Gradients of the three barycentric basis functions of triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> ([[f64; 2]; 3], f64) {
        let [a, b, c] = self.triangle_points(t);
        let area = signed_area(a, b, c);
        let inv = 0.5 / area;
        (
            [
                [(b[1] - c[1]) * inv, (c[0] - b[0]) * inv],
                [(c[1] - a[1]) * inv, (a[0] - c[0]) * inv],
                [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv],
            ],
            area,
        )
    }

    /// Inradius over circumradius of triangle `t` (1/2 for equilateral).
    pub fn quality(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        let la = (b[0] - c[0]).hypot(b[1] - c[1]);
        let lb = (a[0] - c[0]).hypot(a[1] - c[1]);
        let lc = (a[0] - b[0]).hypot(a[1] - b[1]);
        let area = signed_area(a, b, c);
        if area <= 0.0 {
            return 0.0;
        }
        let s = 0.5 * (la + lb + lc);
        let inradius = area / s;
        let circumradius = la * lb * lc / (4.0 * area);
        inradius / circumradius
    }

    pub fn min_quality(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.quality(t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Number of triangles crossed by the vertical line `x = x0` between the
    /// heights `y_lo` and `y_hi`.
    pub fn layers_across(&self, x0: f64, y_lo: f64, y_hi: f64) -> usize {
        (0..self.triangles.len())
            .filter(|&t| {
                let p = self.triangle_points(t);
                let xmin = p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min);
                let xmax = p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max);
                let c = self.centroid(t);
                xmin < x0 && x0 < xmax && c[1] > y_lo && c[1] < y_hi
            })
            .count()
    }

    /// Element layers across the gap on the symmetry line of a two-particle
    /// mesh.
    pub fn gap_layers(&self, delta: f64) -> usize {
        let x0 = 1e-7 * delta;
        self.layers_across(x0, -0.5 * delta, 0.5 * delta)
    }

    pub fn validate(&self) -> MeshReport {
        let mut max_err: f64 = 0.0;
        for (p, tag) in self.nodes.iter().zip(&self.tags) {
            if let Some(c) = self.circles.iter().find(|c| c.tag == *tag) {
                let d = ((p[0] - c.center[0]).hypot(p[1] - c.center[1]) - c.radius).abs();
                max_err = max_err.max(d);
            }
        }
        MeshReport {
            nodes: self.nodes.len(),
            triangles: self.triangles.len(),
            area: self.total_area(),
            min_quality: self.min_quality(),
            max_boundary_error: max_err,
            min_area: (0..self.triangles.len())
                .map(|t| self.triangle_area(t))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Writes the plain-text mesh format described in the README.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "pblowup-mesh 1")?;
        writeln!(w, "nodes {}", self.nodes.len())?;
        for (p, t) in self.nodes.iter().zip(&self.tags) {
            writeln!(w, "{:e} {:e} {}", p[0], p[1], t.code())?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    /// Reads the format written by [`Mesh::write_text`]. Circle metadata is
    /// not stored, so boundary-error checks are unavailable on the result.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self, MeshError> {
        let bad = |m: &str| MeshError::Format(m.to_string());
        let mut lines = r.lines();
        let mut next = || -> Result<String, MeshError> {
            lines
                .next()
                .ok_or_else(|| bad("unexpected end of file"))?
                .map_err(MeshError::Io)
        };
        if next()?.trim() != "pblowup-mesh 1" {
            return Err(bad("missing header"));
        }
        let count = |line: String, key: &str| -> Result<usize, MeshError> {
            let mut it = line.split_whitespace();
            if it.next() != Some(key) {
                return Err(bad(&format!("expected '{key}'")));
            }
            it.next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad count"))
        };
        let n = count(next()?, "nodes")?;
        let mut nodes = Vec::with_capacity(n);
        let mut tags = Vec::with_capacity(n);
        for _ in 0..n {
            let line = next()?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(bad("bad node line"));
            }
            let x: f64 = f[0].parse().map_err(|_| bad("bad coordinate"))?;
            let y: f64 = f[1].parse().map_err(|_| bad("bad coordinate"))?;
            nodes.push([x, y]);
            tags.push(NodeTag::from_code(f[2]).ok_or_else(|| bad("bad tag"))?);
        }
        let m = count(next()?, "triangles")?;
        let mut triangles = Vec::with_capacity(m);
        for _ in 0..m {
            let line = next()?;
            let v: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| bad("bad index")))
                .collect::<Result<_, _>>()?;
            if v.len() != 3 || v.iter().any(|&i| i >= n) {
                return Err(bad("bad triangle line"));
            }
            triangles.push([v[0], v[1], v[2]]);
        }
        Ok(Self::assemble(nodes, triangles, tags, Vec::new(), 0.0, 0.0))
    }
}
