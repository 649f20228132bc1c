//! Linear optimization over oracle-described polytopes: membership and
//! separation for the projected defender polytope, a column-generation
//! master/pricing loop for the compact program, an ellipsoid reference
//! backend, and Caratheodory-style convex decomposition.

pub mod ellipsoid;
pub mod simplex;

use std::collections::HashMap;

use thiserror::Error;

use crate::compact::{
    attacker_vertex, AttackerVertex, CompactDefenderPoint, CompactError, CompactWeights,
    DefenderVertex, SupportSet,
};
use crate::model::{AttackerSpace, ModelError, SubsetMask};
use crate::oracles::{dop_linear, DefenderOracleSpec, OptSense, OracleError};
use simplex::{lp_solve_dense, Cmp, LinearProgram, LpError, LpStatus, Sense};

#[derive(Debug, Error)]
pub enum LpEngineError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Compact(#[from] CompactError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("iteration cap {cap} exceeded in {context} (best violation {violation:.3e})")]
    IterationCap { context: &'static str, cap: usize, violation: f64 },
    #[error("point lies outside the defender polytope (margin {0:.3e}); decompose requires membership")]
    PointOutside(f64),
    #[error("restricted master unexpectedly {0:?}")]
    MasterFailed(LpStatus),
}

/// Which solver drives the compact linear program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    ColGen,
    Ellipsoid,
}

/// Tolerances and iteration budget shared by the LP layers.
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub feas_tol: f64,
    pub opt_tol: f64,
    /// When unset, column generation gets 500 iterations and the ellipsoid
    /// gets `10 * (2|S| + 1)^2`.
    pub max_iters: Option<usize>,
    pub backend: Backend,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol: 1e-7,
            opt_tol: 1e-6,
            max_iters: None,
            backend: Backend::ColGen,
        }
    }
}

impl SolverConfig {
    pub fn colgen_iters(&self) -> usize {
        self.max_iters.unwrap_or(500).max(1)
    }

    pub fn ellipsoid_iters(&self, support_len: usize) -> usize {
        let d = 2 * support_len + 1;
        self.max_iters.unwrap_or(10 * d * d).max(1)
    }
}

/// What kind of constraint produced a separating hyperplane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutKind {
    AttackerInequality,
    Membership,
}

/// A separating hyperplane with the guarantee
/// `coeffs . query > offset >= coeffs . x` for every feasible `x`.
#[derive(Clone, Debug)]
pub struct Hyperplane {
    pub coeffs: Vec<f64>,
    pub offset: f64,
    pub kind: CutKind,
}

impl Hyperplane {
    /// Scales coefficients and offset to unit max-norm.
    fn normalized(mut self) -> Self {
        let scale = self
            .coeffs
            .iter()
            .fold(0.0f64, |acc, c| acc.max(c.abs()));
        if scale > 0.0 {
            for c in &mut self.coeffs {
                *c /= scale;
            }
            self.offset /= scale;
        }
        self
    }
}

/// Outcome of a separation query.
#[derive(Clone, Debug)]
pub struct SeparationResult {
    pub inside: bool,
    pub hyperplane: Option<Hyperplane>,
}

impl SeparationResult {
    fn inside() -> Self {
        SeparationResult { inside: true, hyperplane: None }
    }

    fn cut(h: Hyperplane) -> Self {
        SeparationResult { inside: false, hyperplane: Some(h.normalized()) }
    }
}

/// Vertices of the defender polytope discovered so far, deduplicated by the
/// pure strategy they project from.
#[derive(Clone, Debug, Default)]
pub struct VertexPool {
    vertices: Vec<DefenderVertex>,
    by_strategy: HashMap<SubsetMask, usize>,
}

impl VertexPool {
    pub fn new() -> Self {
        VertexPool::default()
    }

    /// Inserts a vertex; returns true when it was new.
    pub fn add(&mut self, vertex: DefenderVertex) -> bool {
        let key = vertex
            .source
            .expect("pool vertices are oracle answers and carry their strategy");
        if self.by_strategy.contains_key(&key) {
            return false;
        }
        self.by_strategy.insert(key, self.vertices.len());
        self.vertices.push(vertex);
        true
    }

    pub fn vertices(&self) -> &[DefenderVertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Result of a membership query, carrying the decomposition when inside.
#[derive(Clone, Debug)]
pub struct MembershipOutcome {
    pub inside: bool,
    pub hyperplane: Option<Hyperplane>,
    /// Convex weights and vertices reconstructing the point when inside.
    pub decomposition: Option<(Vec<f64>, Vec<DefenderVertex>)>,
    pub residual: f64,
    pub iterations: usize,
}

impl MembershipOutcome {
    pub fn separation(&self) -> SeparationResult {
        SeparationResult { inside: self.inside, hyperplane: self.hyperplane.clone() }
    }
}

/// The payoff-magnitude constant that collapses the compact program's
/// feasible region onto the defender polytope:
/// `|S| * (max |benefit weight| + max |loss weight|) + 2`.
pub fn u0_bound(weights: &CompactWeights, support: &SupportSet) -> f64 {
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    support.len() as f64
        * (max_abs(&weights.attacker.benefit) + max_abs(&weights.attacker.loss))
        + 2.0
}

// ---------------------------------------------------------------------------
// Membership
// ---------------------------------------------------------------------------

/// Fast cuts that do not need the oracle: box bounds and the singleton
/// complementarity equalities that every vertex satisfies.
fn quick_cuts(point: &[f64], support: &SupportSet, tol: f64) -> Option<Hyperplane> {
    let s = support.len();
    for (k, &x) in point.iter().enumerate() {
        if x < -tol {
            let mut coeffs = vec![0.0; 2 * s];
            coeffs[k] = -1.0;
            return Some(Hyperplane { coeffs, offset: 0.0, kind: CutKind::Membership });
        }
        if x > 1.0 + tol {
            let mut coeffs = vec![0.0; 2 * s];
            coeffs[k] = 1.0;
            return Some(Hyperplane { coeffs, offset: 1.0, kind: CutKind::Membership });
        }
    }
    for i in 0..support.n() {
        let pos = support.singleton_position(i);
        let sum = point[pos] + point[s + pos];
        if sum > 1.0 + tol {
            let mut coeffs = vec![0.0; 2 * s];
            coeffs[pos] = 1.0;
            coeffs[s + pos] = 1.0;
            return Some(Hyperplane { coeffs, offset: 1.0, kind: CutKind::Membership });
        }
        if sum < 1.0 - tol {
            let mut coeffs = vec![0.0; 2 * s];
            coeffs[pos] = -1.0;
            coeffs[s + pos] = -1.0;
            return Some(Hyperplane { coeffs, offset: -1.0, kind: CutKind::Membership });
        }
    }
    None
}

/// Decides whether `point` (stacked `(q1, q2)`) lies in the convex hull of
/// the defender vertices, generating hull vertices on demand through the
/// oracle. When the point is outside, the final pricing direction is the
/// separating hyperplane; when inside, the supporting weights come back as a
/// convex decomposition.
pub fn membership(
    point: &[f64],
    spec: &DefenderOracleSpec,
    support: &SupportSet,
    cfg: &SolverConfig,
    pool: &mut VertexPool,
) -> Result<MembershipOutcome, LpEngineError> {
    let dim = 2 * support.len();
    if point.len() != dim {
        return Err(CompactError::DimensionMismatch { expected: dim, got: point.len() }.into());
    }
    if let Some(cut) = quick_cuts(point, support, cfg.feas_tol) {
        return Ok(MembershipOutcome {
            inside: false,
            hyperplane: Some(cut.normalized()),
            decomposition: None,
            residual: f64::INFINITY,
            iterations: 0,
        });
    }
    if pool.is_empty() {
        // Seed with the vertex extremal in the point's own direction.
        let ans = dop_linear(spec, point, support, OptSense::Max)?;
        pool.add(ans.vertex.expect("dop_linear fills the vertex"));
    }

    let max_iters = cfg.colgen_iters();
    let mut best_violation = f64::INFINITY;
    for iteration in 0..max_iters {
        let (residual, lambda, direction) = residual_program(point, pool)?;
        if residual <= cfg.feas_tol {
            let mut weights = Vec::new();
            let mut vertices = Vec::new();
            for (j, &l) in lambda.iter().enumerate() {
                if l > 1e-12 {
                    weights.push(l);
                    vertices.push(pool.vertices()[j].clone());
                }
            }
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
            return Ok(MembershipOutcome {
                inside: true,
                hyperplane: None,
                decomposition: Some((weights, vertices)),
                residual,
                iterations: iteration,
            });
        }
        best_violation = best_violation.min(residual);
        // The dual direction separates the point from the current hull; ask
        // the oracle whether any vertex refutes it.
        let answer = dop_linear(spec, &direction, support, OptSense::Max)?;
        let point_side: f64 = direction.iter().zip(point).map(|(c, x)| c * x).sum();
        let vertex_side = answer.objective_value;
        if point_side - vertex_side > cfg.feas_tol {
            return Ok(MembershipOutcome {
                inside: false,
                hyperplane: Some(
                    Hyperplane {
                        coeffs: direction,
                        offset: vertex_side,
                        kind: CutKind::Membership,
                    }
                    .normalized(),
                ),
                decomposition: None,
                residual,
                iterations: iteration,
            });
        }
        let vertex = answer.vertex.expect("dop_linear fills the vertex");
        if !pool.add(vertex) {
            // The best vertex is already known yet the residual stays
            // positive: margins sit inside the tolerance band. Treat the
            // point as outside with the current direction.
            return Ok(MembershipOutcome {
                inside: false,
                hyperplane: Some(
                    Hyperplane {
                        coeffs: direction,
                        offset: vertex_side,
                        kind: CutKind::Membership,
                    }
                    .normalized(),
                ),
                decomposition: None,
                residual,
                iterations: iteration,
            });
        }
    }
    Err(LpEngineError::IterationCap {
        context: "membership",
        cap: max_iters,
        violation: best_violation,
    })
}

/// Solves `min t` over convex weights of the pool within max-norm `t` of the
/// point. Returns the optimum, the weights, and the dual direction.
fn residual_program(
    point: &[f64],
    pool: &VertexPool,
) -> Result<(f64, Vec<f64>, Vec<f64>), LpEngineError> {
    let d = point.len();
    let k = pool.len();
    // Variables: lambda_0..lambda_{k-1}, t.
    let mut objective = vec![0.0; k + 1];
    objective[k] = 1.0;
    let mut lp = LinearProgram::new(Sense::Min, objective);
    let stacked: Vec<Vec<f64>> = pool.vertices().iter().map(|v| v.stacked()).collect();
    for coord in 0..d {
        // sum_j lambda_j v_j[coord] - t <= x[coord]
        let mut row = Vec::with_capacity(k + 1);
        for s in &stacked {
            row.push(s[coord]);
        }
        row.push(-1.0);
        lp.push_row(row, Cmp::Le, point[coord]);
        // -sum_j lambda_j v_j[coord] - t <= -x[coord]
        let mut row = Vec::with_capacity(k + 1);
        for s in &stacked {
            row.push(-s[coord]);
        }
        row.push(-1.0);
        lp.push_row(row, Cmp::Le, -point[coord]);
    }
    let mut row = vec![1.0; k];
    row.push(0.0);
    lp.push_row(row, Cmp::Eq, 1.0);

    let sol = lp_solve_dense(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(LpEngineError::MasterFailed(sol.status));
    }
    let residual = sol.value;
    let lambda = sol.x[..k].to_vec();
    // Direction from the row duals: alpha on the upper rows, beta on the
    // lower rows (both nonpositive for a Min/<= program); c = alpha - beta.
    let mut direction = vec![0.0; d];
    for coord in 0..d {
        let alpha = sol.duals[2 * coord];
        let beta = sol.duals[2 * coord + 1];
        direction[coord] = alpha - beta;
    }
    // The duality argument guarantees c.x - max_j c.v_j >= t; double-check
    // orientation numerically and flip if a degenerate basis inverted it.
    let point_side: f64 = direction.iter().zip(point).map(|(c, x)| c * x).sum();
    let hull_side = stacked
        .iter()
        .map(|s| direction.iter().zip(s).map(|(c, x)| c * x).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    if point_side < hull_side {
        for c in &mut direction {
            *c = -*c;
        }
    }
    Ok((residual, lambda, direction))
}

// ---------------------------------------------------------------------------
// Caratheodory reduction and convex decomposition
// ---------------------------------------------------------------------------

/// Thins a convex combination of arbitrary points to at most `dim + 1` with
/// the same barycenter, by repeatedly cancelling an affine dependence. The
/// payload vector travels with the points.
pub fn caratheodory_reduce_with<T>(
    points: &mut Vec<Vec<f64>>,
    weights: &mut Vec<f64>,
    payload: &mut Vec<T>,
) {
    let dim = match points.first() {
        Some(p) => p.len(),
        None => return,
    };
    while points.len() > dim + 1 {
        let mu = match affine_dependence(points) {
            Some(mu) => mu,
            None => break, // numerically independent; nothing to cancel
        };
        // Step toward the boundary of the simplex along the dependence.
        let mut alpha = f64::INFINITY;
        let mut drop_idx = usize::MAX;
        for (j, &m) in mu.iter().enumerate() {
            if m > 1e-12 {
                let step = weights[j] / m;
                if step < alpha {
                    alpha = step;
                    drop_idx = j;
                }
            }
        }
        if drop_idx == usize::MAX {
            break;
        }
        for (j, &m) in mu.iter().enumerate() {
            weights[j] -= alpha * m;
        }
        weights[drop_idx] = 0.0;
        let mut j = 0;
        while j < weights.len() {
            if weights[j] <= 1e-13 {
                weights.swap_remove(j);
                points.swap_remove(j);
                payload.swap_remove(j);
            } else {
                j += 1;
            }
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
}

/// Caratheodory reduction specialized to defender vertices.
pub fn caratheodory_reduce(
    vertices: &mut Vec<DefenderVertex>,
    weights: &mut Vec<f64>,
) -> Result<(), LpEngineError> {
    let mut points: Vec<Vec<f64>> = vertices.iter().map(|v| v.stacked()).collect();
    caratheodory_reduce_with(&mut points, weights, vertices);
    Ok(())
}

/// Finds `mu` with `sum mu_j [v_j; 1] = 0`, `mu != 0`, flipping signs so at
/// least one entry is positive. Returns None when the homogenized family is
/// numerically independent.
fn affine_dependence(points: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = points.len();
    let d = points[0].len() + 1;
    // Matrix rows: d (homogenized coordinates), columns: k points.
    let mut a = vec![vec![0.0f64; k]; d];
    for (j, p) in points.iter().enumerate() {
        for (i, &x) in p.iter().enumerate() {
            a[i][j] = x;
        }
        a[d - 1][j] = 1.0;
    }
    // Row-reduce with partial pivoting, tracking pivot columns.
    let mut pivot_of_row: Vec<usize> = Vec::new();
    let mut r = 0usize;
    for col in 0..k {
        let mut best = r;
        for i in r..d {
            if a[i][col].abs() > a[best][col].abs() {
                best = i;
            }
        }
        if r >= d || a[best][col].abs() < 1e-10 {
            continue;
        }
        a.swap(r, best);
        let pivot = a[r][col];
        for j in 0..k {
            a[r][j] /= pivot;
        }
        for i in 0..d {
            if i != r {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..k {
                        a[i][j] -= f * a[r][j];
                    }
                }
            }
        }
        pivot_of_row.push(col);
        r += 1;
        if r == d {
            break;
        }
    }
    let pivot_cols: std::collections::HashSet<usize> = pivot_of_row.iter().copied().collect();
    let free_col = (0..k).find(|c| !pivot_cols.contains(c))?;
    let mut mu = vec![0.0; k];
    mu[free_col] = 1.0;
    for (row, &pc) in pivot_of_row.iter().enumerate() {
        mu[pc] = -a[row][free_col];
    }
    if mu.iter().all(|&m| m <= 0.0) {
        for m in &mut mu {
            *m = -*m;
        }
    }
    Some(mu)
}

/// Expresses a point of the defender polytope as a convex combination of at
/// most `2|S| + 1` vertices. Errors when the point is outside.
pub fn convex_decompose(
    point: &[f64],
    spec: &DefenderOracleSpec,
    support: &SupportSet,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, Vec<DefenderVertex>), LpEngineError> {
    let mut pool = VertexPool::new();
    let outcome = membership(point, spec, support, cfg, &mut pool)?;
    if !outcome.inside {
        return Err(LpEngineError::PointOutside(outcome.residual));
    }
    let (mut weights, mut vertices) = outcome.decomposition.expect("inside implies decomposition");
    caratheodory_reduce(&mut vertices, &mut weights)?;
    Ok((weights, vertices))
}

// ---------------------------------------------------------------------------
// Separation for the compact program
// ---------------------------------------------------------------------------

/// Separation oracle for the compact program over `(q1, q2, u)`: first the
/// closed-form attacker-vertex inequalities, then membership of `(q1, q2)`.
/// Hyperplanes live in the `2|S| + 1`-dimensional lifted space; membership
/// cuts carry a zero `u` coefficient.
#[allow(clippy::too_many_arguments)]
pub fn separation_compact_lp(
    qpoint: &CompactDefenderPoint,
    u: f64,
    weights: &CompactWeights,
    attacker_vertices: &[AttackerVertex],
    spec: &DefenderOracleSpec,
    support: &SupportSet,
    cfg: &SolverConfig,
    pool: &mut VertexPool,
) -> Result<SeparationResult, LpEngineError> {
    let s = support.len();
    for av in attacker_vertices {
        let mut val = 0.0;
        for k in 0..s {
            val += av.coords[k]
                * (weights.attacker.benefit[k] * qpoint.q1[k]
                    + weights.attacker.loss[k] * qpoint.q2[k]);
        }
        if val > u + cfg.feas_tol {
            let mut coeffs = Vec::with_capacity(2 * s + 1);
            for k in 0..s {
                coeffs.push(weights.attacker.benefit[k] * av.coords[k]);
            }
            for k in 0..s {
                coeffs.push(weights.attacker.loss[k] * av.coords[k]);
            }
            coeffs.push(-1.0);
            return Ok(SeparationResult::cut(Hyperplane {
                coeffs,
                offset: 0.0,
                kind: CutKind::AttackerInequality,
            }));
        }
    }
    let stacked = qpoint.stacked();
    let outcome = membership(&stacked, spec, support, cfg, pool)?;
    if outcome.inside {
        return Ok(SeparationResult::inside());
    }
    let h = outcome.hyperplane.expect("outside implies hyperplane");
    let mut coeffs = h.coeffs;
    coeffs.push(0.0);
    Ok(SeparationResult::cut(Hyperplane { coeffs, offset: h.offset, kind: h.kind }))
}

// ---------------------------------------------------------------------------
// Compact linear program
// ---------------------------------------------------------------------------

/// State of the restricted master at the end of a solve: the generated
/// defender vertices, their convex weights, and the attacker-side duals
/// aligned with the attacker enumeration order.
#[derive(Clone, Debug)]
pub struct RestrictedMaster {
    pub generated_vertices: Vec<DefenderVertex>,
    pub lambda: Vec<f64>,
    pub duals: Vec<f64>,
    pub iterations: usize,
}

/// A solved compact program.
#[derive(Clone, Debug)]
pub struct CompactSolution {
    pub point: CompactDefenderPoint,
    pub value: f64,
    pub master: RestrictedMaster,
}

/// Minimizes the attacker's guaranteed payoff over the defender polytope,
/// with one inequality per attacker vertex. Dispatches on the configured
/// backend.
pub fn solve_compact_lp(
    weights: &CompactWeights,
    spec: &DefenderOracleSpec,
    support: &SupportSet,
    space: &AttackerSpace,
    cfg: &SolverConfig,
) -> Result<CompactSolution, LpEngineError> {
    match cfg.backend {
        Backend::ColGen => solve_compact_colgen(weights, spec, support, space, cfg),
        Backend::Ellipsoid => {
            ellipsoid::solve_compact_ellipsoid(weights, spec, support, space, cfg)
        }
    }
}

pub(crate) fn enumerate_attacker_vertices(
    support: &SupportSet,
    space: &AttackerSpace,
) -> Result<Vec<AttackerVertex>, LpEngineError> {
    let masks = space.enumerate()?;
    let mut out = Vec::with_capacity(masks.len());
    for a in masks {
        out.push(attacker_vertex(a, support, space.budget)?);
    }
    Ok(out)
}

/// Attacker's expected payoff against one defender vertex, per attacker row.
pub(crate) fn column_payoffs(
    attacker_vertices: &[AttackerVertex],
    vertex: &DefenderVertex,
    weights: &CompactWeights,
) -> Vec<f64> {
    let s = vertex.v1.len();
    attacker_vertices
        .iter()
        .map(|av| {
            let mut val = 0.0;
            for k in 0..s {
                val += av.coords[k]
                    * (weights.attacker.benefit[k] * vertex.v1[k]
                        + weights.attacker.loss[k] * vertex.v2[k]);
            }
            val
        })
        .collect()
}

/// Solves the restricted master `min u` over convex weights of the given
/// columns, one `<=`-row per attacker vertex. Returns `(u, lambda, duals)`.
pub(crate) fn solve_master(
    payoffs: &[Vec<f64>],
    rows: usize,
) -> Result<(f64, Vec<f64>, Vec<f64>), LpEngineError> {
    let k = payoffs.len();
    let mut objective = vec![0.0; k + 1];
    objective[k] = 1.0;
    let mut lp = LinearProgram::new(Sense::Min, objective);
    lp.mark_free(k);
    for row in 0..rows {
        let mut coeffs: Vec<f64> = payoffs.iter().map(|col| col[row]).collect();
        coeffs.push(-1.0);
        lp.push_row(coeffs, Cmp::Le, 0.0);
    }
    let mut simplex_row = vec![1.0; k];
    simplex_row.push(0.0);
    lp.push_row(simplex_row, Cmp::Eq, 1.0);
    let sol = lp_solve_dense(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(LpEngineError::MasterFailed(sol.status));
    }
    let u = sol.value;
    let lambda = sol.x[..k].to_vec();
    // <=-row duals are nonpositive for a Min program; the attacker mix is
    // their negation, normalized against floating drift.
    let mut p: Vec<f64> = sol.duals[..rows].iter().map(|y| (-y).max(0.0)).collect();
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        for v in &mut p {
            *v /= total;
        }
    }
    Ok((u, lambda, p))
}

/// Pricing direction for the defender oracle given the attacker mix `p`:
/// the projected mix weighted by the diagonal common utilities.
pub(crate) fn pricing_direction(
    attacker_vertices: &[AttackerVertex],
    p: &[f64],
    weights: &CompactWeights,
    support: &SupportSet,
) -> Vec<f64> {
    let s = support.len();
    let mut pbar = vec![0.0; s];
    for (av, &prob) in attacker_vertices.iter().zip(p) {
        if prob > 0.0 {
            for k in 0..s {
                pbar[k] += prob * av.coords[k];
            }
        }
    }
    let mut w = Vec::with_capacity(2 * s);
    for k in 0..s {
        w.push(weights.attacker.benefit[k] * pbar[k]);
    }
    for k in 0..s {
        w.push(weights.attacker.loss[k] * pbar[k]);
    }
    // Degenerate all-zero directions stall pricing; nudge them with a tiny
    // deterministic lexicographic ramp.
    if w.iter().all(|x| x.abs() < 1e-14) {
        for (i, x) in w.iter_mut().enumerate() {
            *x += (i + 1) as f64 * 1e-12;
        }
    }
    w
}

fn solve_compact_colgen(
    weights: &CompactWeights,
    spec: &DefenderOracleSpec,
    support: &SupportSet,
    space: &AttackerSpace,
    cfg: &SolverConfig,
) -> Result<CompactSolution, LpEngineError> {
    let attacker_vertices = enumerate_attacker_vertices(support, space)?;
    let rows = attacker_vertices.len();

    let seed = dop_linear(spec, &vec![0.0; 2 * support.len()], support, OptSense::Min)?;
    let mut columns: Vec<DefenderVertex> = vec![seed.vertex.expect("vertex filled")];
    let mut known: HashMap<SubsetMask, usize> = HashMap::new();
    known.insert(columns[0].source.unwrap(), 0);
    let mut payoffs: Vec<Vec<f64>> =
        vec![column_payoffs(&attacker_vertices, &columns[0], weights)];

    let max_iters = cfg.colgen_iters();
    let mut last_gap = f64::INFINITY;
    for iteration in 1..=max_iters {
        let (u, lambda, p) = solve_master(&payoffs, rows)?;
        let direction = pricing_direction(&attacker_vertices, &p, weights, support);
        let answer = dop_linear(spec, &direction, support, OptSense::Min)?;
        let gap = u - answer.objective_value;
        last_gap = gap;
        let strategy = answer.strategy;
        if gap <= cfg.opt_tol || known.contains_key(&strategy) {
            let point = combine(&columns, &lambda, support.len());
            return Ok(CompactSolution {
                point,
                value: u,
                master: RestrictedMaster {
                    generated_vertices: columns,
                    lambda,
                    duals: p,
                    iterations: iteration,
                },
            });
        }
        let vertex = answer.vertex.expect("vertex filled");
        payoffs.push(column_payoffs(&attacker_vertices, &vertex, weights));
        known.insert(strategy, columns.len());
        columns.push(vertex);
    }
    Err(LpEngineError::IterationCap {
        context: "compact column generation",
        cap: max_iters,
        violation: last_gap,
    })
}

pub(crate) fn combine(
    columns: &[DefenderVertex],
    lambda: &[f64],
    s: usize,
) -> CompactDefenderPoint {
    let mut q1 = vec![0.0; s];
    let mut q2 = vec![0.0; s];
    for (v, &l) in columns.iter().zip(lambda) {
        if l > 0.0 {
            for k in 0..s {
                q1[k] += l * v.v1[k];
                q2[k] += l * v.v2[k];
            }
        }
    }
    CompactDefenderPoint { q1, q2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compact::{build_weights, defender_vertex};
    use crate::model::{
        support_set, zero_sum_complete, SetFunction, SubsetMask, Utility,
    };

    fn m(indices: &[usize]) -> SubsetMask {
        SubsetMask::from_indices(indices, 64).unwrap()
    }

    /// Two-target zero-sum game with unit benefits, budget 1, one guard.
    fn tiny_game() -> (
        crate::model::UtilityProfile,
        crate::model::AttackerSpace,
        SupportSet,
        CompactWeights,
        DefenderOracleSpec,
    ) {
        let space = crate::model::AttackerSpace::new(2, 1).unwrap();
        let b = SetFunction::from_entries([(m(&[0]), 1.0), (m(&[1]), 1.0)]).unwrap();
        let profile =
            zero_sum_complete(Utility::Sparse(b), Utility::zero_sparse(), &space).unwrap();
        let common = profile.common_profile(&space).unwrap();
        let support = support_set(&common, 2);
        let weights = build_weights(&common, &support);
        let spec = DefenderOracleSpec::UniformMatroid { k: 1 };
        (profile, space, support, weights, spec)
    }

    #[test]
    fn membership_accepts_vertices_and_midpoints() {
        let (_, _, support, _, spec) = tiny_game();
        let cfg = SolverConfig::default();
        let mut pool = VertexPool::new();
        for bits in 0u64..4 {
            let d = SubsetMask::from_bits_unchecked(bits & 0b11);
            let d = if d.card() <= 1 { d } else { continue };
            let v = defender_vertex(d, &support);
            let outcome =
                membership(&v.stacked(), &spec, &support, &cfg, &mut pool).unwrap();
            assert!(outcome.inside, "vertex of {d} must be inside");
        }
        // Midpoint of two vertices.
        let a = defender_vertex(m(&[0]), &support).stacked();
        let b = defender_vertex(m(&[1]), &support).stacked();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * x + 0.5 * y).collect();
        let outcome = membership(&mid, &spec, &support, &cfg, &mut pool).unwrap();
        assert!(outcome.inside);
        let (w, vs) = outcome.decomposition.unwrap();
        let mut recon = vec![0.0; mid.len()];
        for (wt, v) in w.iter().zip(&vs) {
            for (r, x) in recon.iter_mut().zip(v.stacked()) {
                *r += wt * x;
            }
        }
        for (r, x) in recon.iter().zip(&mid) {
            assert!((r - x).abs() < 1e-7);
        }
    }

    #[test]
    fn membership_rejects_complementarity_violation() {
        let (_, _, support, _, spec) = tiny_game();
        let cfg = SolverConfig::default();
        let mut pool = VertexPool::new();
        // q1 + q2 = 1.5 on singleton 0.
        let mut point = defender_vertex(m(&[0]), &support).stacked();
        point[support.singleton_position(0)] += 0.5;
        let outcome = membership(&point, &spec, &support, &cfg, &mut pool).unwrap();
        assert!(!outcome.inside);
        let h = outcome.hyperplane.unwrap();
        // Every feasible vertex satisfies the opposite side.
        for d in crate::oracles::enumerate_system_for(&spec, 2).unwrap() {
            let v = defender_vertex(d, &support).stacked();
            let lhs: f64 = h.coeffs.iter().zip(&v).map(|(c, x)| c * x).sum();
            assert!(lhs <= h.offset + 1e-7);
        }
        let query_side: f64 = h.coeffs.iter().zip(&point).map(|(c, x)| c * x).sum();
        assert!(query_side > h.offset);
    }

    #[test]
    fn membership_rejects_infeasible_coverage() {
        // Point claiming both targets fully covered with only one guard.
        let (_, _, support, _, spec) = tiny_game();
        let cfg = SolverConfig::default();
        let mut pool = VertexPool::new();
        let v = defender_vertex(m(&[0]), &support);
        let w = defender_vertex(m(&[1]), &support);
        // Component-wise max: q2 = 1 on both singletons, q1 = 0: outside H_d.
        let mut point = vec![0.0; 4];
        let s = support.len();
        for k in 0..s {
            point[k] = v.v1[k].min(w.v1[k]);
            point[s + k] = v.v2[k].max(w.v2[k]);
        }
        let outcome = membership(&point, &spec, &support, &cfg, &mut pool).unwrap();
        assert!(!outcome.inside);
    }

    #[test]
    fn convex_decompose_recovers_mixtures() {
        let (_, _, support, _, spec) = tiny_game();
        let cfg = SolverConfig::default();
        let a = defender_vertex(m(&[0]), &support).stacked();
        let b = defender_vertex(m(&[1]), &support).stacked();
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.3 * x + 0.7 * y).collect();
        let (weights, vertices) = convex_decompose(&mix, &spec, &support, &cfg).unwrap();
        assert!(weights.len() <= 2 * support.len() + 1);
        let mut recon = vec![0.0; mix.len()];
        for (wt, v) in weights.iter().zip(&vertices) {
            for (r, x) in recon.iter_mut().zip(v.stacked()) {
                *r += wt * x;
            }
        }
        for (r, x) in recon.iter().zip(&mix) {
            assert!((r - x).abs() < 1e-7);
        }
        let total: f64 = weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);

        // A pure vertex decomposes to itself.
        let (weights, vertices) = convex_decompose(&a, &spec, &support, &cfg).unwrap();
        assert_eq!(vertices.len(), 1);
        assert!((weights[0] - 1.0).abs() < 1e-9);
        assert_eq!(vertices[0].source, Some(m(&[0])));
    }

    #[test]
    fn convex_decompose_rejects_outside_points() {
        let (_, _, support, _, spec) = tiny_game();
        let cfg = SolverConfig::default();
        let point = vec![2.0; 4];
        assert!(matches!(
            convex_decompose(&point, &spec, &support, &cfg),
            Err(LpEngineError::PointOutside(_))
        ));
    }

    #[test]
    fn caratheodory_respects_bound() {
        let (_, _, support, _, _) = tiny_game();
        // Uniform mixture of all four defender strategies of size <= 1 plus
        // duplicates through different weights.
        let strategies = [SubsetMask::EMPTY, m(&[0]), m(&[1])];
        let mut vertices: Vec<DefenderVertex> = Vec::new();
        let mut weights = Vec::new();
        for (i, &d) in strategies.iter().enumerate() {
            vertices.push(defender_vertex(d, &support));
            weights.push((i + 1) as f64);
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let before = {
            let mut acc = vec![0.0; 2 * support.len()];
            for (w, v) in weights.iter().zip(&vertices) {
                for (a, x) in acc.iter_mut().zip(v.stacked()) {
                    *a += w * x;
                }
            }
            acc
        };
        caratheodory_reduce(&mut vertices, &mut weights).unwrap();
        assert!(vertices.len() <= 2 * support.len() + 1);
        let mut after = vec![0.0; 2 * support.len()];
        for (w, v) in weights.iter().zip(&vertices) {
            for (a, x) in after.iter_mut().zip(v.stacked()) {
                *a += w * x;
            }
        }
        for (b, a) in before.iter().zip(&after) {
            assert!((b - a).abs() < 1e-9);
        }
    }

    #[test]
    fn compact_lp_symmetric_two_targets() {
        let (_, space, support, weights, spec) = tiny_game();
        let cfg = SolverConfig::default();
        let sol = solve_compact_lp(&weights, &spec, &support, &space, &cfg).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-6, "value = {}", sol.value);
        // Defender must split coverage evenly.
        for i in 0..2 {
            let pos = support.singleton_position(i);
            assert!((sol.point.q2[pos] - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn compact_lp_full_coverage_kills_value() {
        // Defender can cover both targets: the attacker gets nothing.
        let space = crate::model::AttackerSpace::new(2, 1).unwrap();
        let b = SetFunction::from_entries([(m(&[0]), 1.0), (m(&[1]), 2.0)]).unwrap();
        let profile =
            zero_sum_complete(Utility::Sparse(b), Utility::zero_sparse(), &space).unwrap();
        let common = profile.common_profile(&space).unwrap();
        let support = support_set(&common, 2);
        let weights = build_weights(&common, &support);
        let spec = DefenderOracleSpec::UniformMatroid { k: 2 };
        let cfg = SolverConfig::default();
        let sol = solve_compact_lp(&weights, &spec, &support, &space, &cfg).unwrap();
        assert!(sol.value.abs() < 1e-6);
    }

    #[test]
    fn compact_lp_empty_attack_only() {
        let space = crate::model::AttackerSpace::new(2, 0).unwrap();
        let b = SetFunction::from_entries([(m(&[0]), 1.0), (m(&[1]), 2.0)]).unwrap();
        // budget 0: only the empty attack exists; validation is trivially
        // satisfied and the value must be 0.
        let profile = crate::model::UtilityProfile {
            benefit_attacker: Utility::Sparse(b.clone()),
            loss_attacker: Utility::zero_sparse(),
            benefit_defender: Utility::zero_sparse(),
            loss_defender: Utility::Sparse(b.negated()),
            zero_sum: true,
        };
        let common = profile.common_profile(&space).unwrap();
        let support = support_set(&common, 2);
        let weights = build_weights(&common, &support);
        let spec = DefenderOracleSpec::UniformMatroid { k: 1 };
        let cfg = SolverConfig::default();
        let sol = solve_compact_lp(&weights, &spec, &support, &space, &cfg).unwrap();
        assert!(sol.value.abs() < 1e-9);
    }

    #[test]
    fn u0_bound_formula() {
        let support = SupportSet::from_members(vec![m(&[0]), m(&[1]), m(&[2])], 3);
        let weights = CompactWeights {
            attacker: crate::compact::PlayerWeights {
                benefit: vec![2.0, -1.0, 0.5],
                loss: vec![0.0, -1.0, 0.25],
            },
            defender: crate::compact::PlayerWeights {
                benefit: vec![0.0; 3],
                loss: vec![0.0; 3],
            },
        };
        assert_eq!(u0_bound(&weights, &support), 3.0 * (2.0 + 1.0) + 2.0);

        let zero = CompactWeights {
            attacker: crate::compact::PlayerWeights { benefit: vec![0.0; 3], loss: vec![0.0; 3] },
            defender: crate::compact::PlayerWeights { benefit: vec![0.0; 3], loss: vec![0.0; 3] },
        };
        assert_eq!(u0_bound(&zero, &support), 2.0);
    }

    #[test]
    fn separation_below_u0_never_cuts_attacker_rows() {
        let (_, space, support, weights, spec) = tiny_game();
        let cfg = SolverConfig::default();
        let attacker_vertices = enumerate_attacker_vertices(&support, &space).unwrap();
        let u0 = u0_bound(&weights, &support);
        let mut pool = VertexPool::new();
        // Query points inside and outside the polytope; with u = u0 - 1 the
        // attacker inequalities can never fire.
        let candidates: Vec<Vec<f64>> = vec![
            defender_vertex(m(&[0]), &support).stacked(),
            vec![0.9, 0.9, 0.4, 0.4],
            vec![0.2, 0.8, 0.8, 0.2],
        ];
        for point in candidates {
            let q = CompactDefenderPoint::from_stacked(&point);
            let sep = separation_compact_lp(
                &q,
                u0 - 1.0,
                &weights,
                &attacker_vertices,
                &spec,
                &support,
                &cfg,
                &mut pool,
            )
            .unwrap();
            if let Some(h) = sep.hyperplane {
                assert_eq!(h.kind, CutKind::Membership);
            }
        }
    }

    #[test]
    fn separation_reports_attacker_violation() {
        let (_, space, support, weights, spec) = tiny_game();
        let cfg = SolverConfig::default();
        let attacker_vertices = enumerate_attacker_vertices(&support, &space).unwrap();
        let mut pool = VertexPool::new();
        // A feasible defender point but u far below the attainable payoff.
        let v = defender_vertex(m(&[0]), &support);
        let q = CompactDefenderPoint { q1: v.v1.clone(), q2: v.v2.clone() };
        let sep = separation_compact_lp(
            &q,
            -10.0,
            &weights,
            &attacker_vertices,
            &spec,
            &support,
            &cfg,
            &mut pool,
        )
        .unwrap();
        let h = sep.hyperplane.expect("must separate");
        assert_eq!(h.kind, CutKind::AttackerInequality);
        // u coefficient is the last one and must be negative.
        assert!(h.coeffs.last().unwrap() < &0.0);
    }
}
