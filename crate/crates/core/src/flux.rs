//! Boundary fluxes `int |grad u|^(p-2) n . grad u ds`, the load `R_delta`
//! and its limit `R_0`, the linear-case functional `Q_delta[U]`, and the
//! barrier sandwich check on the neck arc.
//!
//! Fluxes are computed in weighted-residual form: for a curve with node set
//! `S` and `chi = sum_{i in S} phi_i`,
//! `flux = sum_T |T| |grad u|^(p-2) grad u . grad chi`. By Green's formula this
//! equals the boundary integral for the exact solution, and for the discrete
//! one it is exactly consistent with the equations the solver satisfies:
//! the flux of a floating particle is the residual of its merged unknown and
//! the fluxes of all curves add up to the residual of the interior equations.
//! The one-sided edge quadrature is kept as a diagnostic.
//!
//! Orientation: [`boundary_flux`] uses the normal pointing out of the
//! perforated domain, i.e. into the particles. `R_delta`, `R_0` and the
//! coefficients `a_ij` are quoted with the normal pointing out of the
//! particle, so that `U = y` with particle 2 on top gives `R_delta > 0`.

use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DomainSpec, GeometryError, NeckSpec, Particle};
use crate::mesh::{build_mesh, Mesh, MeshError, MeshParams, NodeTag};
use crate::radial::{barrier_flux_bound, FluxBound, RadialError};
use crate::solver::{
    flux_vector, grad_max, solve_tied, AuxProblem, DiscreteSolution, ProblemKind, Region,
    SolverConfig, SolverError,
};

#[derive(Debug, Error)]
pub enum FluxError {
    #[error("the mesh has no nodes on curve {0}")]
    UntaggedCurve(String),
    #[error("expected a {expected} solution, got {found}")]
    Kind {
        expected: &'static str,
        found: &'static str,
    },
    #[error("solutions live on different meshes")]
    MeshMismatch,
    #[error("R0 extrapolation needs at least 3 strictly decreasing gaps")]
    Ladder,
    #[error("R0 extrapolation is unreliable (residual {residual:e}); ladder {ladder:?}")]
    Unreliable {
        residual: f64,
        ladder: Vec<(f64, f64)>,
    },
    #[error("T2 < T1 on the barrier check; swap the particle labels")]
    Orientation,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A boundary curve, or a piece of one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "curve", rename_all = "kebab-case")]
pub enum Curve {
    Outer,
    Particle {
        which: Particle,
    },
    /// Facing arc of `which` with `|x| <= w`.
    NeckArc {
        which: Particle,
        w: f64,
    },
    /// The rest of the particle boundary.
    AwayFromNeck {
        which: Particle,
        w: f64,
    },
}

impl Curve {
    pub fn label(&self) -> String {
        match self {
            Curve::Outer => "outer".into(),
            Curve::Particle { which } => format!("particle{}", which.label()),
            Curve::NeckArc { which, .. } => format!("neck-arc{}", which.label()),
            Curve::AwayFromNeck { which, .. } => format!("away{}", which.label()),
        }
    }

    fn tag(&self) -> NodeTag {
        match *self {
            Curve::Outer => NodeTag::Outer,
            Curve::Particle { which }
            | Curve::NeckArc { which, .. }
            | Curve::AwayFromNeck { which, .. } => NodeTag::particle(which),
        }
    }

    /// Node membership. Neck pieces take the facing half of the particle.
    fn contains(&self, mesh: &Mesh, i: usize) -> bool {
        if mesh.tags[i] != self.tag() {
            return false;
        }
        let [x, y] = mesh.nodes[i];
        let facing = |which: Particle| match which {
            Particle::Lower => y > mesh_center_y(mesh, which),
            Particle::Upper => y < mesh_center_y(mesh, which),
        };
        match *self {
            Curve::Outer | Curve::Particle { .. } => true,
            Curve::NeckArc { which, w } => x.abs() <= w && facing(which),
            Curve::AwayFromNeck { which, w } => !(x.abs() <= w && facing(which)),
        }
    }
}

fn mesh_center_y(mesh: &Mesh, which: Particle) -> f64 {
    let tag = NodeTag::particle(which);
    mesh.circles
        .iter()
        .find(|c| c.tag == tag)
        .map(|c| c.center[1])
        .unwrap_or(0.0)
}

/// `sum_T |T| |grad u|^(p-2) grad u . grad phi_i` for every node `i`.
pub fn nodal_fluxes(sol: &DiscreteSolution) -> Vec<f64> {
    let mesh = &sol.mesh;
    let mut out = vec![0.0; mesh.num_nodes()];
    for t in 0..mesh.triangles.len() {
        let (grads, area) = mesh.basis_gradients(t);
        let g = sol.element_gradient(t);
        let f = flux_vector(g, sol.p, sol.epsilon);
        for (k, &i) in mesh.triangles[t].iter().enumerate() {
            out[i] += area * (f[0] * grads[k][0] + f[1] * grads[k][1]);
        }
    }
    out
}

fn curve_nodes(mesh: &Mesh, curve: &Curve) -> Result<Vec<usize>, FluxError> {
    let nodes: Vec<usize> = (0..mesh.num_nodes())
        .filter(|&i| curve.contains(mesh, i))
        .collect();
    if nodes.is_empty() {
        return Err(FluxError::UntaggedCurve(curve.label()));
    }
    Ok(nodes)
}

/// Flux through `curve` with the normal pointing out of the domain.
pub fn boundary_flux(sol: &DiscreteSolution, curve: &Curve) -> Result<f64, FluxError> {
    let nodes = curve_nodes(&sol.mesh, curve)?;
    let nodal = nodal_fluxes(sol);
    Ok(nodes.iter().map(|&i| nodal[i]).sum())
}

/// Flux through `curve` by one-sided quadrature: each boundary edge uses the
/// gradient of its only adjacent element. Edges count when both end nodes
/// belong to the curve.
pub fn edge_flux(sol: &DiscreteSolution, curve: &Curve) -> Result<f64, FluxError> {
    let mesh = &sol.mesh;
    let mut total = 0.0;
    let mut found = false;
    for e in &mesh.boundary_edges {
        if !(curve.contains(mesh, e.nodes[0]) && curve.contains(mesh, e.nodes[1])) {
            continue;
        }
        found = true;
        let a = mesh.nodes[e.nodes[0]];
        let b = mesh.nodes[e.nodes[1]];
        // Domain on the left, so the outward normal is the right-hand one.
        let n = [b[1] - a[1], a[0] - b[0]];
        let f = flux_vector(sol.element_gradient(e.triangle), sol.p, sol.epsilon);
        total += f[0] * n[0] + f[1] * n[1];
    }
    if !found {
        return Err(FluxError::UntaggedCurve(curve.label()));
    }
    Ok(total)
}

/// All boundary fluxes of one solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub kind: String,
    /// `(curve label, weighted-residual flux, edge-quadrature flux)`, normal
    /// out of the domain.
    pub curves: Vec<(String, f64, f64)>,
    /// Flux leaving particle 2 into the medium (`None` without particle 2).
    pub r_delta: Option<f64>,
    /// Sum of the outer and particle fluxes.
    pub global_defect: f64,
    /// Per-kind constraint defect: the larger particle flux for floating
    /// solves, the combined particle flux for tied solves, 0 otherwise.
    pub constraint_defect: f64,
    /// Largest total absolute nodal flux over the curves.
    pub scale: f64,
    pub boundary_edges: usize,
}

impl FluxReport {
    pub fn relative_global_defect(&self) -> f64 {
        relative(self.global_defect, self.scale)
    }

    pub fn relative_constraint_defect(&self) -> f64 {
        relative(self.constraint_defect, self.scale)
    }

    /// One CSV row per curve.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "curve,flux,edge_flux")?;
        for (c, v, e) in &self.curves {
            writeln!(w, "{c},{v:e},{e:e}")?;
        }
        Ok(())
    }
}

fn relative(value: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        value.abs() / scale
    } else {
        value.abs()
    }
}

/// Fluxes through the outer boundary, both particles and the neck pieces of
/// particle 2.
pub fn flux_report(sol: &DiscreteSolution, neck: &NeckSpec<f64>) -> FluxReport {
    let mesh = &sol.mesh;
    let nodal = nodal_fluxes(sol);
    let w = neck.half_width();
    let mut curves = vec![Curve::Outer];
    for which in Particle::BOTH {
        if mesh.tags.contains(&NodeTag::particle(which)) {
            curves.push(Curve::Particle { which });
        }
    }
    let has2 = mesh.tags.contains(&NodeTag::Particle2);
    if has2 {
        curves.push(Curve::NeckArc {
            which: Particle::Upper,
            w,
        });
        curves.push(Curve::AwayFromNeck {
            which: Particle::Upper,
            w,
        });
    }
    let mut rows = Vec::new();
    let mut scale: f64 = 0.0;
    let mut sums = std::collections::HashMap::new();
    for c in &curves {
        let nodes: Vec<usize> = (0..mesh.num_nodes())
            .filter(|&i| c.contains(mesh, i))
            .collect();
        let v: f64 = nodes.iter().map(|&i| nodal[i]).sum();
        let abs: f64 = nodes.iter().map(|&i| nodal[i].abs()).sum();
        scale = scale.max(abs);
        let e = edge_flux(sol, c).unwrap_or(f64::NAN);
        sums.insert(c.label(), v);
        rows.push((c.label(), v, e));
    }
    let get = |k: &str| sums.get(k).copied().unwrap_or(0.0);
    let p1 = get("particle1");
    let p2 = get("particle2");
    let global_defect = get("outer") + p1 + p2;
    let constraint_defect = match sol.kind {
        ProblemKind::Floating => {
            if p1.abs() >= p2.abs() {
                p1
            } else {
                p2
            }
        }
        ProblemKind::Tied => p1 + p2,
        _ => 0.0,
    };
    FluxReport {
        kind: sol.kind.name().to_string(),
        curves: rows,
        r_delta: has2.then_some(-p2),
        global_defect,
        constraint_defect,
        scale,
        boundary_edges: mesh.boundary_edges.len(),
    }
}

/// Which part of particle 2's boundary [`r_delta`] integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Full,
    AwayFromNeck,
}

/// Flux leaving particle 2 for a tied solution.
pub fn r_delta(
    sol: &DiscreteSolution,
    neck: &NeckSpec<f64>,
    split: Split,
) -> Result<f64, FluxError> {
    if sol.kind != ProblemKind::Tied {
        return Err(FluxError::Kind {
            expected: "tied",
            found: sol.kind.name(),
        });
    }
    let curve = match split {
        Split::Full => Curve::Particle {
            which: Particle::Upper,
        },
        Split::AwayFromNeck => Curve::AwayFromNeck {
            which: Particle::Upper,
            w: neck.half_width(),
        },
    };
    Ok(-boundary_flux(sol, &curve)?)
}

/// How `R_delta` is continued to `delta = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum R0Model {
    /// `R_delta = R_0 + c delta`.
    Linear,
    /// `R_delta = R_0 + c1 delta + c2 delta^2`.
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R0Estimate {
    /// `(delta, R_delta)` in decreasing `delta`.
    pub ladder: Vec<(f64, f64)>,
    pub r0: f64,
    pub model: R0Model,
    /// Fit coefficients after `R_0`.
    pub coefficients: Vec<f64>,
    /// Deviation of the smallest-gap point from a fit that excludes it,
    /// relative to `|R_0|`.
    pub residual: f64,
}

/// Least-squares fit of `values` against powers `delta^k`, `k = 0..=degree`.
fn poly_fit(ladder: &[(f64, f64)], degree: usize) -> Vec<f64> {
    let n = degree + 1;
    let mut ata = vec![vec![0.0; n]; n];
    let mut atb = vec![0.0; n];
    for &(d, v) in ladder {
        let pw: Vec<f64> = (0..n).map(|k| d.powi(k as i32)).collect();
        for i in 0..n {
            atb[i] += pw[i] * v;
            for j in 0..n {
                ata[i][j] += pw[i] * pw[j];
            }
        }
    }
    // Gaussian elimination with partial pivoting on the small normal system.
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&a, &b| ata[a][c].abs().total_cmp(&ata[b][c].abs()))
            .unwrap();
        ata.swap(c, piv);
        atb.swap(c, piv);
        for r in c + 1..n {
            let f = ata[r][c] / ata[c][c];
            for k in c..n {
                ata[r][k] -= f * ata[c][k];
            }
            atb[r] -= f * atb[c];
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| ata[c][k] * x[k]).sum();
        x[c] = (atb[c] - s) / ata[c][c];
    }
    x
}

/// Extrapolates a ladder of `(delta, R_delta)` to `delta = 0`.
pub fn extrapolate_r0(
    ladder: &[(f64, f64)],
    model: R0Model,
    max_residual: f64,
) -> Result<R0Estimate, FluxError> {
    let degree = match model {
        R0Model::Linear => 1,
        R0Model::Quadratic => 2,
    };
    if ladder.len() < 3.max(degree + 2) || ladder.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(FluxError::Ladder);
    }
    let fit = poly_fit(ladder, degree);
    let r0 = fit[0];
    let head = &ladder[..ladder.len() - 1];
    let partial = poly_fit(head, degree.min(head.len() - 1));
    let (d_last, v_last) = *ladder.last().unwrap();
    let predicted: f64 = partial
        .iter()
        .enumerate()
        .map(|(k, c)| c * d_last.powi(k as i32))
        .sum();
    let residual = if r0 == 0.0 && v_last == predicted {
        0.0
    } else {
        (v_last - predicted).abs() / r0.abs().max(f64::MIN_POSITIVE)
    };
    if !(residual <= max_residual) {
        return Err(FluxError::Unreliable {
            residual,
            ladder: ladder.to_vec(),
        });
    }
    Ok(R0Estimate {
        ladder: ladder.to_vec(),
        r0,
        model,
        coefficients: fit[1..].to_vec(),
        residual,
    })
}

/// Tied solves over `ladder` and extrapolation of `R_delta` to `delta = 0`.
pub fn estimate_r0(
    domain: &DomainSpec<f64>,
    mesh_for: impl Fn(&DomainSpec<f64>) -> MeshParams + Sync,
    config: &SolverConfig,
    ladder: &[f64],
    model: R0Model,
    max_residual: f64,
) -> Result<R0Estimate, FluxError> {
    use rayon::prelude::*;
    if ladder.len() < 3 || ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(FluxError::Ladder);
    }
    let points: Result<Vec<(f64, f64)>, FluxError> = ladder
        .par_iter()
        .map(|&delta| {
            let d = domain.with_delta(delta)?;
            let mesh = Arc::new(build_mesh(&d, &mesh_for(&d))?);
            let sol = solve_tied(mesh, &d, config)?;
            let neck = d.pair.default_neck();
            Ok((delta, r_delta(&sol, &neck, Split::Full)?))
        })
        .collect();
    extrapolate_r0(&points?, model, max_residual)
}

/// The linear-case functional and its identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QReport {
    /// `a[i][j]`: flux of `v_(j+1)` out of particle `i+1`.
    pub a: [[f64; 3]; 2],
    /// `b[j]`: flux of `v_(j+1)` through the outer boundary (outward).
    pub b: [f64; 3],
    pub q: f64,
    /// `R_delta` of the tied solution.
    pub r_delta: f64,
    /// `|Q + (b_1 + b_2) R_delta|`.
    pub identity_defect: f64,
    /// `|a_12 - a_21|`.
    pub reciprocity_defect: f64,
    /// `-(b_1 + b_2)`, positive by the maximum principle.
    pub outer_capacity: f64,
}

impl QReport {
    pub fn relative_identity_defect(&self) -> f64 {
        relative(self.identity_defect, self.q)
    }
}

/// `Q_delta[U]` from the three auxiliaries and a tied `p = 2` solution on the
/// same mesh.
pub fn q_functional(
    v1: &DiscreteSolution,
    v2: &DiscreteSolution,
    v3: &DiscreteSolution,
    tied: &DiscreteSolution,
) -> Result<QReport, FluxError> {
    for (sol, which) in [
        (v1, AuxProblem::V1),
        (v2, AuxProblem::V2),
        (v3, AuxProblem::V3),
    ] {
        if sol.kind != (ProblemKind::LinearAux { which }) {
            return Err(FluxError::Kind {
                expected: "linear-aux",
                found: sol.kind.name(),
            });
        }
    }
    if tied.kind != ProblemKind::Tied {
        return Err(FluxError::Kind {
            expected: "tied",
            found: tied.kind.name(),
        });
    }
    for other in [v2, v3, tied] {
        if !Arc::ptr_eq(&v1.mesh, &other.mesh) && *v1.mesh != *other.mesh {
            return Err(FluxError::MeshMismatch);
        }
    }
    let sols = [v1, v2, v3];
    let mut a = [[0.0; 3]; 2];
    let mut b = [0.0; 3];
    for (j, s) in sols.iter().enumerate() {
        for (i, which) in Particle::BOTH.into_iter().enumerate() {
            a[i][j] = -boundary_flux(s, &Curve::Particle { which })?;
        }
        b[j] = boundary_flux(s, &Curve::Outer)?;
    }
    let q = a[0][2] * b[1] - a[1][2] * b[0];
    let r = -boundary_flux(
        tied,
        &Curve::Particle {
            which: Particle::Upper,
        },
    )?;
    Ok(QReport {
        a,
        b,
        q,
        r_delta: r,
        identity_defect: (q + (b[0] + b[1]) * r).abs(),
        reciprocity_defect: (a[0][1] - a[1][0]).abs(),
        outer_capacity: -(b[0] + b[1]),
    })
}

/// One node of the neck arc of particle 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSample {
    pub x: f64,
    /// `n . grad u` with `n` pointing into particle 2, averaged over the two
    /// boundary elements at the node.
    pub measured: f64,
    /// Half the difference of the two one-sided values.
    pub local_slack: f64,
    pub bound: FluxBound<f64>,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub samples: Vec<BarrierSample>,
    pub fraction_inside: f64,
    /// Additive constant used in the bounds.
    pub slack: f64,
    pub first_order: f64,
}

/// Compares the discrete normal field on the neck arc of particle 2 with the
/// barrier bounds. `slack = None` takes the constant from the largest
/// gradient away from the neck.
pub fn barrier_check(
    sol: &DiscreteSolution,
    domain: &DomainSpec<f64>,
    neck: &NeckSpec<f64>,
    slack: Option<f64>,
    first_order: f64,
) -> Result<BarrierReport, FluxError> {
    let (Some(t1), Some(t2)) = (sol.t1, sol.t2) else {
        return Err(FluxError::UntaggedCurve("particle".into()));
    };
    if t2 < t1 {
        return Err(FluxError::Orientation);
    }
    let mesh = &sol.mesh;
    let c_slack = slack.unwrap_or_else(|| grad_max(sol, Region::Away, neck).value);
    let curve = Curve::NeckArc {
        which: Particle::Upper,
        w: neck.half_width(),
    };
    let center = domain.pair.center(Particle::Upper);
    let mut per_node: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for e in &mesh.boundary_edges {
        if e.tag != NodeTag::Particle2 {
            continue;
        }
        let g = sol.element_gradient(e.triangle);
        for &i in &e.nodes {
            if curve.contains(mesh, i) {
                let p = mesh.nodes[i];
                let n = [center[0] - p[0], center[1] - p[1]];
                let len = n[0].hypot(n[1]);
                per_node
                    .entry(i)
                    .or_default()
                    .push((g[0] * n[0] + g[1] * n[1]) / len);
            }
        }
    }
    let mut samples = Vec::with_capacity(per_node.len());
    for (i, vals) in per_node {
        let x = mesh.nodes[i][0];
        let measured = vals.iter().sum::<f64>() / vals.len() as f64;
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let local_slack = 0.5 * (hi - lo);
        let bound = barrier_flux_bound(x, t1, t2, &domain.pair, sol.p, 2, c_slack, first_order)?;
        let inside = bound.lower - local_slack <= measured && measured <= bound.upper + local_slack;
        samples.push(BarrierSample {
            x,
            measured,
            local_slack,
            bound,
            inside,
        });
    }
    samples.sort_by(|a, b| a.x.total_cmp(&b.x));
    let fraction_inside = if samples.is_empty() {
        0.0
    } else {
        samples.iter().filter(|s| s.inside).count() as f64 / samples.len() as f64
    };
    Ok(BarrierReport {
        samples,
        fraction_inside,
        slack: c_slack,
        first_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryDatum;
    use crate::mesh::annulus_mesh;
    use crate::solver::solve;
    use approx::assert_relative_eq;

    #[test]
    fn annulus_fluxes_match_radial_profile() {
        let (r1, r2) = (0.5, 1.0);
        let mesh = Arc::new(annulus_mesh(r1, r2, 0.02).unwrap());
        for p in [2.0, 3.0] {
            let sol = solve(
                mesh.clone(),
                &BoundaryDatum::Constant { value: 1.0 },
                ProblemKind::Prescribed { t1: 0.0, t2: 0.0 },
                1.0,
                &SolverConfig::with_p(p),
            )
            .unwrap();
            let prof = crate::radial::fit_two_point(r1, 0.0, r2, 1.0, p, 2).unwrap();
            let q =
                |r: f64| 2.0 * std::f64::consts::PI * r * prof.gradient(r).unwrap().powf(p - 1.0);
            let inner = boundary_flux(
                &sol,
                &Curve::Particle {
                    which: Particle::Lower,
                },
            )
            .unwrap();
            let outer = boundary_flux(&sol, &Curve::Outer).unwrap();
            // Out of the annulus: inward at the inner circle, outward at the outer one.
            assert_relative_eq!(outer, q(r2), max_relative = 2e-3);
            assert_relative_eq!(inner, -q(r1), max_relative = 2e-3);
            assert_relative_eq!(inner + outer, 0.0, epsilon = 1e-8 * outer);
            let e = edge_flux(&sol, &Curve::Outer).unwrap();
            assert_relative_eq!(e, q(r2), max_relative = 2e-2);
        }
    }

    #[test]
    fn constant_solution_has_no_flux() {
        let mesh = Arc::new(annulus_mesh(0.5, 1.0, 0.1).unwrap());
        let sol = solve(
            mesh,
            &BoundaryDatum::Constant { value: 2.0 },
            ProblemKind::Prescribed { t1: 2.0, t2: 2.0 },
            1.0,
            &SolverConfig::with_p(3.0),
        )
        .unwrap();
        assert_eq!(boundary_flux(&sol, &Curve::Outer).unwrap(), 0.0);
        assert!(matches!(
            boundary_flux(
                &sol,
                &Curve::Particle {
                    which: Particle::Upper
                }
            ),
            Err(FluxError::UntaggedCurve(_))
        ));
    }

    #[test]
    fn r0_fit_recovers_linear_ladder() {
        let ladder: Vec<(f64, f64)> = [0.08, 0.04, 0.02, 0.01]
            .iter()
            .map(|&d| (d, 2.0 - 3.0 * d))
            .collect();
        let est = extrapolate_r0(&ladder, R0Model::Linear, 1e-8).unwrap();
        assert_relative_eq!(est.r0, 2.0, epsilon = 1e-12);
        assert!(est.residual < 1e-12);
        let zero: Vec<(f64, f64)> = ladder.iter().map(|&(d, _)| (d, 0.0)).collect();
        assert_eq!(
            extrapolate_r0(&zero, R0Model::Linear, 1e-8).unwrap().r0,
            0.0
        );
        let bad = vec![(0.01, 1.0), (0.02, 1.0), (0.04, 1.0)];
        assert!(matches!(
            extrapolate_r0(&bad, R0Model::Linear, 1.0),
            Err(FluxError::Ladder)
        ));
    }
}
