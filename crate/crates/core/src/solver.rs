//! Piecewise-linear minimisation of the regularised p-Dirichlet energy
//! `sum_T |T| (eps^2 + |grad u|^2)^(p/2)` on a [`Mesh`].
//!
//! Particle constraints are imposed by merging degrees of freedom: a floating
//! particle contributes one unknown shared by all of its boundary nodes, a
//! tied pair shares a single unknown, and prescribed particles are fixed. The
//! zero-flux conditions are then the natural optimality conditions of the
//! merged unknowns. The nonlinear problem is solved by damped Newton with an
//! Armijo line search on the energy, continued in `p` from the linear case.

use std::io::{self, Write};
use std::sync::Arc;

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{Pair, SparseColMat, SymbolicSparseColMat};
use faer::{Col, Par, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundaryDatum, DomainSpec, NeckSpec};
use crate::mesh::{Mesh, NodeTag};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("Newton did not converge at p = {p} after {iterations} iterations (residual {residual:e}, target {target:e})")]
    NotConverged {
        p: f64,
        iterations: usize,
        residual: f64,
        target: f64,
        trace: Vec<NewtonStep>,
    },
    #[error("line search failed at p = {p}, iteration {iteration}")]
    LineSearch {
        p: f64,
        iteration: usize,
        trace: Vec<NewtonStep>,
    },
    #[error("linear solve failed: {0}")]
    Linear(String),
    #[error("the mesh has no {0} boundary")]
    MissingBoundary(&'static str),
}

/// Settings of the Newton solver and of the continuation in `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub p: f64,
    /// Gradient regularisation; `None` selects `1e-8 (max U - min U) / R`.
    pub epsilon: Option<f64>,
    /// Converged when the largest nodal residual is below `tol` times the
    /// largest nodal sum of absolute element contributions.
    pub tol: f64,
    /// Same test for the intermediate continuation stages.
    pub stage_tol: f64,
    /// Newton iterations allowed per continuation stage.
    pub max_iter: usize,
    /// Sufficient-decrease constant of the Armijo rule.
    pub armijo: f64,
    /// Step reduction factor of the backtracking line search.
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Increment of `p` between continuation stages.
    pub p_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            epsilon: None,
            tol: 1e-10,
            stage_tol: 1e-6,
            max_iter: 60,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 50,
            p_step: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn with_p(p: f64) -> Self {
        Self {
            p,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::Config(m.to_string()));
        if !(self.p >= 2.0) || !self.p.is_finite() {
            return bad("p must be a finite number >= 2");
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0) {
                return bad("epsilon must be non-negative");
            }
        }
        if !(self.tol > 0.0) || !(self.stage_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return bad("armijo constant must lie in (0, 1/2)");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack factor must lie in (0, 1)");
        }
        if !(self.p_step > 0.0) {
            return bad("p_step must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        Ok(())
    }

    /// Exponents visited by the continuation, ending exactly at `p`.
    pub fn p_ladder(&self) -> Vec<f64> {
        let mut out = vec![2.0];
        let mut q = 2.0;
        while q + self.p_step < self.p - 1e-12 {
            q += self.p_step;
            out.push(q);
        }
        if self.p > 2.0 {
            out.push(self.p);
        }
        out
    }
}

/// The three harmonic auxiliaries of the linear case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuxProblem {
    /// 1 on particle 1, 0 on particle 2 and on the outer boundary.
    V1,
    /// 0 on particle 1, 1 on particle 2, 0 on the outer boundary.
    V2,
    /// 0 on both particles, `U` on the outer boundary.
    V3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Each particle carries its own free constant.
    Floating,
    /// Particle values fixed to `t1`, `t2`.
    Prescribed {
        t1: f64,
        t2: f64,
    },
    /// Both particles share one free constant.
    Tied,
    LinearAux {
        which: AuxProblem,
    },
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Floating => "floating",
            ProblemKind::Prescribed { .. } => "prescribed",
            ProblemKind::Tied => "tied",
            ProblemKind::LinearAux { .. } => "linear-aux",
        }
    }
}

/// One Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    pub p: f64,
    pub iteration: usize,
    pub energy: f64,
    /// Largest nodal residual before the step.
    pub residual: f64,
    /// Residual scale used by the convergence test.
    pub scale: f64,
    /// Accepted line-search step length (0 for the converged check).
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
    pub kind: ProblemKind,
    pub p: f64,
    pub epsilon: f64,
    /// Value on particle 1, when the mesh has one.
    pub t1: Option<f64>,
    /// Value on particle 2, when the mesh has one.
    pub t2: Option<f64>,
    /// Regularised energy at the solution.
    pub energy: f64,
    pub trace: Vec<NewtonStep>,
    pub iterations: usize,
    /// Final largest nodal residual over the free unknowns.
    pub residual: f64,
    pub residual_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Free(usize),
    Fixed(f64),
}

struct DofMap {
    slots: Vec<Slot>,
    n_free: usize,
}

impl DofMap {
    fn new(mesh: &Mesh, datum: &BoundaryDatum<f64>, kind: ProblemKind) -> Self {
        let mut slots = vec![Slot::Fixed(0.0); mesh.num_nodes()];
        let mut n_free = 0;
        for (i, tag) in mesh.tags.iter().enumerate() {
            slots[i] = match tag {
                NodeTag::Interior => {
                    n_free += 1;
                    Slot::Free(n_free - 1)
                }
                NodeTag::Outer => Slot::Fixed(match kind {
                    ProblemKind::LinearAux {
                        which: AuxProblem::V1 | AuxProblem::V2,
                    } => 0.0,
                    _ => datum.eval(mesh.nodes[i]),
                }),
                _ => Slot::Fixed(0.0),
            };
        }
        let has = |t: NodeTag| mesh.tags.contains(&t);
        let particle_slot = |t: NodeTag, n_free: &mut usize| -> Option<Slot> {
            if !has(t) {
                return None;
            }
            let one = t == NodeTag::Particle1;
            Some(match kind {
                ProblemKind::Floating => {
                    *n_free += 1;
                    Slot::Free(*n_free - 1)
                }
                ProblemKind::Tied => unreachable!(),
                ProblemKind::Prescribed { t1, t2 } => Slot::Fixed(if one { t1 } else { t2 }),
                ProblemKind::LinearAux { which } => Slot::Fixed(match (which, one) {
                    (AuxProblem::V1, true) | (AuxProblem::V2, false) => 1.0,
                    _ => 0.0,
                }),
            })
        };
        let (s1, s2) = if kind == ProblemKind::Tied {
            let any = has(NodeTag::Particle1) || has(NodeTag::Particle2);
            if any {
                n_free += 1;
                (Some(Slot::Free(n_free - 1)), Some(Slot::Free(n_free - 1)))
            } else {
                (None, None)
            }
        } else {
            let a = particle_slot(NodeTag::Particle1, &mut n_free);
            let b = particle_slot(NodeTag::Particle2, &mut n_free);
            (a, b)
        };
        for (i, tag) in mesh.tags.iter().enumerate() {
            match tag {
                NodeTag::Particle1 => slots[i] = s1.unwrap(),
                NodeTag::Particle2 => slots[i] = s2.unwrap(),
                _ => {}
            }
        }
        Self { slots, n_free }
    }

    fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.slots
            .iter()
            .map(|s| match *s {
                Slot::Free(k) => x[k],
                Slot::Fixed(v) => v,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Element {
    nodes: [usize; 3],
    grads: [[f64; 2]; 3],
    area: f64,
}

fn elements(mesh: &Mesh) -> Vec<Element> {
    (0..mesh.triangles.len())
        .map(|t| {
            let (grads, area) = mesh.basis_gradients(t);
            Element {
                nodes: mesh.triangles[t],
                grads,
                area,
            }
        })
        .collect()
}

/// Gradient of the linear interpolant. The basis gradients sum to zero, so
/// differences to the first vertex are used: constant fields then have an
/// exactly zero gradient.
#[inline]
fn p1_gradient(values: [f64; 3], grads: &[[f64; 2]; 3]) -> [f64; 2] {
    let d1 = values[1] - values[0];
    let d2 = values[2] - values[0];
    [
        d1 * grads[1][0] + d2 * grads[2][0],
        d1 * grads[1][1] + d2 * grads[2][1],
    ]
}

#[inline]
fn element_gradient(e: &Element, u: &[f64]) -> [f64; 2] {
    p1_gradient(std::array::from_fn(|k| u[e.nodes[k]]), &e.grads)
}

/// Coefficients `(s^(p/2-1), (p-2) s^(p/2-2))` of the flux and its
/// derivative at `s = eps^2 + |g|^2`.
#[inline]
fn coefficients(s: f64, p: f64) -> (f64, f64) {
    if s == 0.0 {
        return (if p == 2.0 { 1.0 } else { 0.0 }, 0.0);
    }
    let a = s.powf(0.5 * p - 1.0);
    (a, (p - 2.0) * a / s)
}

/// Regularised energy `sum_T |T| (eps^2 + |grad u|^2)^(p/2)` of nodal values.
pub fn energy(mesh: &Mesh, values: &[f64], p: f64, epsilon: f64) -> f64 {
    elements(mesh)
        .iter()
        .map(|e| element_energy(e, values, p, epsilon))
        .sum()
}

#[inline]
fn element_energy(e: &Element, u: &[f64], p: f64, eps: f64) -> f64 {
    let g = element_gradient(e, u);
    let s = eps * eps + g[0] * g[0] + g[1] * g[1];
    e.area * s.powf(0.5 * p)
}

/// Element flux density `|grad u|^(p-2) grad u` with the solver's
/// regularisation, the vector whose normal component is the boundary flux.
pub fn flux_vector(g: [f64; 2], p: f64, epsilon: f64) -> [f64; 2] {
    let s = epsilon * epsilon + g[0] * g[0] + g[1] * g[1];
    let (a, _) = coefficients(s, p);
    [a * g[0], a * g[1]]
}

/// Sparse Hessian with a pattern fixed once per problem.
struct Pattern {
    symbolic: SymbolicSparseColMat<usize>,
    argsort: faer::sparse::Argsort<usize>,
    /// Element-local (k, l) pairs that map to free unknowns, in value order.
    entries: Vec<(u32, u8, u8)>,
    llt: Option<SymbolicLlt<usize>>,
}

impl Pattern {
    fn new(elems: &[Element], dofs: &DofMap) -> Result<Self, SolverError> {
        let mut pairs = Vec::new();
        let mut entries = Vec::new();
        for (t, e) in elems.iter().enumerate() {
            for k in 0..3 {
                let Slot::Free(i) = dofs.slots[e.nodes[k]] else {
                    continue;
                };
                for l in 0..3 {
                    let Slot::Free(j) = dofs.slots[e.nodes[l]] else {
                        continue;
                    };
                    if i >= j {
                        pairs.push(Pair::new(i, j));
                        entries.push((t as u32, k as u8, l as u8));
                    }
                }
            }
        }
        let n = dofs.n_free;
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &pairs)
            .map_err(|e| SolverError::Linear(format!("{e:?}")))?;
        Ok(Self {
            symbolic,
            argsort,
            entries,
            llt: None,
        })
    }
}

struct Assembly {
    residual: Vec<f64>,
    /// Per-unknown sum of absolute element contributions.
    magnitude: Vec<f64>,
    hessian: Option<Vec<f64>>,
}

fn assemble(
    elems: &[Element],
    dofs: &DofMap,
    pattern: &Pattern,
    u: &[f64],
    p: f64,
    eps: f64,
    with_hessian: bool,
) -> Assembly {
    // Element work in parallel, accumulation in element order so the result
    // does not depend on the thread count.
    let local: Vec<([f64; 3], [[f64; 3]; 3])> = elems
        .par_iter()
        .map(|e| {
            let g = element_gradient(e, u);
            let s = eps * eps + g[0] * g[0] + g[1] * g[1];
            let (a, b) = coefficients(s, p);
            let w = e.area * p;
            let gd: [f64; 3] = std::array::from_fn(|k| g[0] * e.grads[k][0] + g[1] * e.grads[k][1]);
            let r = std::array::from_fn(|k| w * a * gd[k]);
            let mut h = [[0.0; 3]; 3];
            if with_hessian {
                for k in 0..3 {
                    for l in 0..3 {
                        let dd = e.grads[k][0] * e.grads[l][0] + e.grads[k][1] * e.grads[l][1];
                        h[k][l] = w * (a * dd + b * gd[k] * gd[l]);
                    }
                }
            }
            (r, h)
        })
        .collect();
    let mut residual = vec![0.0; dofs.n_free];
    let mut magnitude = vec![0.0; dofs.n_free];
    for (e, (r, _)) in elems.iter().zip(&local) {
        for k in 0..3 {
            if let Slot::Free(i) = dofs.slots[e.nodes[k]] {
                residual[i] += r[k];
                magnitude[i] += r[k].abs();
            }
        }
    }
    let hessian = with_hessian.then(|| {
        pattern
            .entries
            .iter()
            .map(|&(t, k, l)| local[t as usize].1[k as usize][l as usize])
            .collect()
    });
    Assembly {
        residual,
        magnitude,
        hessian,
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `H d = -r`, shifting the diagonal if the factorisation fails.
fn newton_direction(
    pattern: &mut Pattern,
    values: Vec<f64>,
    residual: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let n = residual.len();
    let rhs = Col::<f64>::from_fn(n, |i| -residual[i]);
    if pattern.llt.is_none() {
        pattern.llt = Some(
            SymbolicLlt::try_new(pattern.symbolic.as_ref(), Side::Lower)
                .map_err(|e| SolverError::Linear(format!("{e:?}")))?,
        );
    }
    let symbolic = pattern.llt.clone().unwrap();
    let mut shift = 0.0;
    let diag_scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for _ in 0..8 {
        let vals: Vec<f64> = if shift == 0.0 {
            values.clone()
        } else {
            let mut v = values.clone();
            add_diagonal(pattern, &mut v, shift);
            v
        };
        let mat = SparseColMat::new_from_argsort(pattern.symbolic.clone(), &pattern.argsort, &vals)
            .map_err(|e| SolverError::Linear(format!("{e:?}")))?;
        if let Ok(llt) = Llt::try_new_with_symbolic(symbolic.clone(), mat.as_ref(), Side::Lower) {
            let d = llt.solve(&rhs);
            let out: Vec<f64> = (0..n).map(|i| d[i]).collect();
            if out.iter().all(|x| x.is_finite()) {
                return Ok(out);
            }
        }
        shift = if shift == 0.0 {
            1e-12 * diag_scale.max(f64::MIN_POSITIVE)
        } else {
            shift * 100.0
        };
    }
    Err(SolverError::Linear("Hessian factorisation failed".into()))
}

/// Adds `shift` to every element-diagonal slot. Diagonal entries of `H`
/// receive it once per adjacent element, which keeps the shift positive.
fn add_diagonal(pattern: &Pattern, values: &mut [f64], shift: f64) {
    for (slot, &(_, k, l)) in pattern.entries.iter().enumerate() {
        if k == l {
            values[slot] += shift;
        }
    }
}

/// Solves the problem of the given kind on `mesh`.
pub fn solve(
    mesh: Arc<Mesh>,
    datum: &BoundaryDatum<f64>,
    kind: ProblemKind,
    length_scale: f64,
    config: &SolverConfig,
) -> Result<DiscreteSolution, SolverError> {
    config.validate()?;
    faer::set_global_parallelism(Par::Seq);
    let mut cfg = *config;
    if let ProblemKind::LinearAux { .. } = kind {
        cfg.p = 2.0;
    }
    if !mesh.tags.contains(&NodeTag::Outer) {
        return Err(SolverError::MissingBoundary("outer"));
    }
    let dofs = DofMap::new(&mesh, datum, kind);
    let elems = elements(&mesh);
    let epsilon = cfg.epsilon.unwrap_or_else(|| {
        let (lo, hi) = fixed_range(&dofs);
        1e-8 * (hi - lo) / length_scale
    });

    let mut x = initial_guess(&dofs);
    let mut trace = Vec::new();
    let mut pattern = Pattern::new(&elems, &dofs)?;
    let ladder = cfg.p_ladder();
    let mut last_residual = 0.0;
    let mut last_scale = 0.0;
    let mut iterations = 0;
    for (stage, &p) in ladder.iter().enumerate() {
        let tol = if stage + 1 == ladder.len() {
            cfg.tol
        } else {
            cfg.stage_tol
        };
        let mut converged = false;
        for it in 0..=cfg.max_iter {
            let u = dofs.expand(&x);
            let asm = assemble(&elems, &dofs, &pattern, &u, p, epsilon, true);
            let res = inf_norm(&asm.residual);
            let scale = inf_norm(&asm.magnitude);
            let e0: f64 = elems
                .iter()
                .map(|e| element_energy(e, &u, p, epsilon))
                .sum();
            last_residual = res;
            last_scale = scale;
            if res <= tol * scale || dofs.n_free == 0 {
                trace.push(NewtonStep {
                    p,
                    iteration: it,
                    energy: e0,
                    residual: res,
                    scale,
                    step: 0.0,
                });
                converged = true;
                break;
            }
            if it == cfg.max_iter {
                break;
            }
            let d = newton_direction(&mut pattern, asm.hessian.unwrap(), &asm.residual)?;
            // A correction at the roundoff level of the iterate cannot be
            // improved on, whatever the relative residual says.
            let u_max = inf_norm(&u).max(f64::MIN_POSITIVE);
            if inf_norm(&d) <= 64.0 * f64::EPSILON * u_max {
                trace.push(NewtonStep {
                    p,
                    iteration: it,
                    energy: e0,
                    residual: res,
                    scale,
                    step: 0.0,
                });
                converged = true;
                break;
            }
            let slope: f64 = asm.residual.iter().zip(&d).map(|(r, d)| r * d).sum();
            let mut alpha = 1.0;
            let mut accepted = false;
            let slack = 8.0 * f64::EPSILON * e0.abs();
            // Once the predicted decrease is buried in the roundoff of the
            // energy sum, the energy cannot rank trial points and the residual
            // norm takes over as the merit for the full step.
            let flat = -slope <= 1e-9 * e0.abs();
            for _ in 0..=cfg.max_backtracks {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                let ut = dofs.expand(&trial);
                let e1: f64 = elems
                    .iter()
                    .map(|e| element_energy(e, &ut, p, epsilon))
                    .sum();
                let residual_drop = flat && alpha == 1.0 && {
                    let trial_asm = assemble(&elems, &dofs, &pattern, &ut, p, epsilon, false);
                    inf_norm(&trial_asm.residual) < res
                };
                if residual_drop || e1 <= e0 + cfg.armijo * alpha * slope.min(0.0) + slack {
                    x = trial;
                    accepted = true;
                    break;
                }
                alpha *= cfg.backtrack;
            }
            trace.push(NewtonStep {
                p,
                iteration: it,
                energy: e0,
                residual: res,
                scale,
                step: if accepted { alpha } else { 0.0 },
            });
            iterations += 1;
            if !accepted {
                return Err(SolverError::LineSearch {
                    p,
                    iteration: it,
                    trace,
                });
            }
        }
        if !converged {
            return Err(SolverError::NotConverged {
                p,
                iterations: cfg.max_iter,
                residual: last_residual,
                target: tol * last_scale,
                trace,
            });
        }
    }

    let values = dofs.expand(&x);
    let value_of = |tag: NodeTag| mesh.tags.iter().position(|t| *t == tag).map(|i| values[i]);
    let t1 = value_of(NodeTag::Particle1);
    let t2 = value_of(NodeTag::Particle2);
    let energy = elems
        .iter()
        .map(|e| element_energy(e, &values, cfg.p, epsilon))
        .sum();
    Ok(DiscreteSolution {
        mesh,
        values,
        kind,
        p: cfg.p,
        epsilon,
        t1,
        t2,
        energy,
        trace,
        iterations,
        residual: last_residual,
        residual_scale: last_scale,
    })
}

fn fixed_range(dofs: &DofMap) -> (f64, f64) {
    dofs.slots
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| match *s {
            Slot::Fixed(v) => (lo.min(v), hi.max(v)),
            Slot::Free(_) => (lo, hi),
        })
}

/// Free unknowns start at the mean of the fixed values.
fn initial_guess(dofs: &DofMap) -> Vec<f64> {
    let (sum, n) = dofs
        .slots
        .iter()
        .fold((0.0, 0usize), |(s, n), slot| match *slot {
            Slot::Fixed(v) => (s + v, n + 1),
            Slot::Free(_) => (s, n),
        });
    let mean = if n > 0 { sum / n as f64 } else { 0.0 };
    vec![mean; dofs.n_free]
}

/// Floating-potential problem: each particle takes the constant for which
/// its net flux vanishes.
pub fn solve_floating(
    mesh: Arc<Mesh>,
    domain: &DomainSpec<f64>,
    config: &SolverConfig,
) -> Result<DiscreteSolution, SolverError> {
    solve(
        mesh,
        &domain.datum,
        ProblemKind::Floating,
        domain.pair.radius(),
        config,
    )
}

/// Both particles held at the given potentials.
pub fn solve_prescribed(
    mesh: Arc<Mesh>,
    domain: &DomainSpec<f64>,
    t1: f64,
    t2: f64,
    config: &SolverConfig,
) -> Result<DiscreteSolution, SolverError> {
    solve(
        mesh,
        &domain.datum,
        ProblemKind::Prescribed { t1, t2 },
        domain.pair.radius(),
        config,
    )
}

/// One shared free constant on both particles.
pub fn solve_tied(
    mesh: Arc<Mesh>,
    domain: &DomainSpec<f64>,
    config: &SolverConfig,
) -> Result<DiscreteSolution, SolverError> {
    solve(
        mesh,
        &domain.datum,
        ProblemKind::Tied,
        domain.pair.radius(),
        config,
    )
}

/// Harmonic auxiliary `v1`, `v2` or `v3` (always solved with `p = 2`).
pub fn solve_linear_aux(
    mesh: Arc<Mesh>,
    domain: &DomainSpec<f64>,
    which: AuxProblem,
    config: &SolverConfig,
) -> Result<DiscreteSolution, SolverError> {
    solve(
        mesh,
        &domain.datum,
        ProblemKind::LinearAux { which },
        domain.pair.radius(),
        config,
    )
}

/// Where [`grad_max`] looks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    All,
    /// Elements whose centroid lies in the neck.
    Neck,
    /// Elements whose centroid lies outside the neck.
    Away,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradMax {
    pub value: f64,
    /// Centroid of the attaining element.
    pub location: [f64; 2],
    pub triangle: usize,
}

impl DiscreteSolution {
    pub fn element_gradient(&self, t: usize) -> [f64; 2] {
        let (grads, _) = self.mesh.basis_gradients(t);
        let tri = self.mesh.triangles[t];
        p1_gradient(std::array::from_fn(|k| self.values[tri[k]]), &grads)
    }

    pub fn gap(&self) -> Option<f64> {
        Some(self.t2? - self.t1?)
    }

    /// Energy `sum |T| |grad u|^p` without regularisation.
    pub fn plain_energy(&self) -> f64 {
        energy(&self.mesh, &self.values, self.p, 0.0)
    }

    /// Largest nodal residual of the discrete equations at the free unknowns
    /// relative to its scale.
    pub fn relative_residual(&self) -> f64 {
        if self.residual_scale > 0.0 {
            self.residual / self.residual_scale
        } else {
            0.0
        }
    }

    /// Writes the mesh followed by a header line and the nodal values.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        self.mesh.write_text(&mut w)?;
        let fmt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:e}"));
        writeln!(
            w,
            "solution {} p {:e} epsilon {:e} T1 {} T2 {} energy {:e}",
            self.kind.name(),
            self.p,
            self.epsilon,
            fmt(self.t1),
            fmt(self.t2),
            self.energy
        )?;
        writeln!(w, "values {}", self.values.len())?;
        for v in &self.values {
            writeln!(w, "{v:e}")?;
        }
        Ok(())
    }
}

/// Largest element gradient magnitude in `region` of the neck `neck`.
pub fn grad_max(solution: &DiscreteSolution, region: Region, neck: &NeckSpec<f64>) -> GradMax {
    let mesh = &solution.mesh;
    let mut best = GradMax {
        value: 0.0,
        location: [f64::NAN, f64::NAN],
        triangle: usize::MAX,
    };
    for t in 0..mesh.triangles.len() {
        let c = mesh.centroid(t);
        let inside = neck.contains(c);
        let take = match region {
            Region::All => true,
            Region::Neck => inside,
            Region::Away => !inside,
        };
        if !take {
            continue;
        }
        let g = solution.element_gradient(t);
        let m = g[0].hypot(g[1]);
        if m > best.value || best.triangle == usize::MAX {
            best = GradMax {
                value: m,
                location: c,
                triangle: t,
            };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{annulus_mesh, unit_square};
    use approx::assert_relative_eq;

    fn linear(mesh: &Mesh, a: f64, b: f64) -> Vec<f64> {
        mesh.nodes.iter().map(|p| a * p[0] + b * p[1]).collect()
    }

    #[test]
    fn energy_of_linear_functions() {
        let m = unit_square(5);
        assert_eq!(energy(&m, &vec![3.0; m.num_nodes()], 3.0, 0.0), 0.0);
        let u = linear(&m, 0.3, -1.2);
        let s: f64 = 0.09 + 1.44;
        assert_relative_eq!(energy(&m, &u, 2.0, 0.0), s, max_relative = 1e-12);
        assert_relative_eq!(energy(&m, &u, 4.0, 0.0), s * s, max_relative = 1e-12);
    }

    #[test]
    fn energy_is_convex_along_a_segment() {
        let m = unit_square(4);
        let u: Vec<f64> = m
            .nodes
            .iter()
            .map(|p| (3.0 * p[0]).sin() + p[1] * p[1])
            .collect();
        let v: Vec<f64> = m.nodes.iter().map(|p| p[0] * p[1]).collect();
        let e = |t: f64| {
            let w: Vec<f64> = u
                .iter()
                .zip(&v)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect();
            energy(&m, &w, 3.5, 1e-8)
        };
        for k in 1..10 {
            let t = k as f64 / 10.0;
            assert!(e(t) <= (1.0 - t) * e(0.0) + t * e(1.0) + 1e-12);
        }
    }

    #[test]
    fn linear_data_is_reproduced_for_any_p() {
        // On a square with linear boundary data the minimiser is linear.
        let m = Arc::new(unit_square(6));
        let datum = BoundaryDatum::Quadratic {
            xx: 0.0,
            xy: 0.0,
            yy: 0.0,
            linear: 1.0,
        };
        for p in [2.0, 3.0, 4.5] {
            let sol = solve(
                m.clone(),
                &datum,
                ProblemKind::Floating,
                1.0,
                &SolverConfig::with_p(p),
            )
            .unwrap();
            for (u, q) in sol.values.iter().zip(&m.nodes) {
                assert!((u - q[1]).abs() < 1e-9, "p = {p}");
            }
        }
    }

    #[test]
    fn continuation_ladder() {
        assert_eq!(SolverConfig::with_p(2.0).p_ladder(), vec![2.0]);
        assert_eq!(SolverConfig::with_p(3.0).p_ladder(), vec![2.0, 2.5, 3.0]);
        assert_eq!(SolverConfig::with_p(2.7).p_ladder(), vec![2.0, 2.5, 2.7]);
    }

    #[test]
    fn annulus_prescribed_values() {
        let m = Arc::new(annulus_mesh(0.5, 1.0, 0.1).unwrap());
        let datum = BoundaryDatum::Constant { value: 1.0 };
        let sol = solve(
            m.clone(),
            &datum,
            ProblemKind::Prescribed { t1: 0.0, t2: 0.0 },
            1.0,
            &SolverConfig::with_p(3.0),
        )
        .unwrap();
        assert_eq!(sol.t1, Some(0.0));
        assert_eq!(sol.t2, None);
        assert!(sol
            .values
            .iter()
            .all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        let energies: Vec<f64> = sol
            .trace
            .iter()
            .filter(|s| s.p == 3.0)
            .map(|s| s.energy)
            .collect();
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-14));
        }
    }
}
