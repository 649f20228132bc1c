//! Equilibrium solvers: zero-sum Nash through the compact program, strong
//! Stackelberg through the compact multiple-program scan, and non-zero-sum
//! additive Nash through the saddle-point transform. Every path ends in
//! convex decomposition plus vertex mapping, so the defender walks away with
//! an executable mixed strategy.

use thiserror::Error;

use crate::compact::{
    coverage_marginals, vertex_to_strategy, AttackerVertex, CompactError, CompactWeights,
    DefenderVertex, SupportSet,
};
use crate::lpengine::simplex::{lp_solve_dense, Cmp, LinearProgram, LpError, LpStatus, Sense};
use crate::lpengine::{
    caratheodory_reduce, caratheodory_reduce_with, solve_compact_lp, Backend, LpEngineError,
    SolverConfig,
};
use crate::model::{is_additive, support_set, GameInstance, ModelError, Player, SubsetMask};
use crate::oracles::{
    oracle_solve, DefenderOracleSpec, OptSense, OracleError, PseudoBooleanObjective,
};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("game is not zero-sum; use the sse solver or the additive ne solver")]
    NotZeroSum,
    #[error("utilities are not additive over the attacker space; non-additive non-zero-sum Nash is out of scope")]
    NotAdditive,
    #[error("saddle transform undefined: benefit equals loss at target {0}")]
    DegenerateTransform(usize),
    #[error("every best-response program was infeasible; this cannot happen on a nonempty attacker space")]
    NoFeasibleProgram,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Compact(#[from] CompactError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Engine(#[from] LpEngineError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("restricted master unexpectedly {0:?}")]
    MasterFailed(LpStatus),
}

/// Solution concept of a computed equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Concept {
    Ne,
    Sse,
}

/// The attacker side of a result: an explicit mixed strategy, or per-target
/// attack marginals for the additive path.
#[derive(Clone, Debug)]
pub enum AttackerStrategy {
    Mixed(Vec<(SubsetMask, f64)>),
    Marginals(Vec<f64>),
}

/// Solver health report attached to every result.
#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub backend: &'static str,
    pub iterations: usize,
    /// Reconstruction or equilibrium residual, whichever the path measures.
    pub residual: f64,
    /// Best-response programs skipped as infeasible (Stackelberg scan).
    pub skipped_lps: usize,
    pub notes: Vec<String>,
}

/// An equilibrium with both strategies, values, and coverage marginals.
#[derive(Clone, Debug)]
pub struct EquilibriumResult {
    pub concept: Concept,
    pub defender_mixed: Vec<(SubsetMask, f64)>,
    pub attacker: AttackerStrategy,
    pub defender_value: f64,
    pub attacker_value: f64,
    pub coverage: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Per-target linear scaling that turns the additive non-zero-sum game into
/// a solvable minimax problem.
#[derive(Clone, Debug)]
pub struct SaddleTransform {
    pub scale: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub enum TransformDirection {
    Forward,
    Inverse,
}

/// Coordinate-wise application of the saddle transform.
pub fn apply_h(a: &[f64], transform: &SaddleTransform, direction: TransformDirection) -> Vec<f64> {
    a.iter()
        .zip(&transform.scale)
        .map(|(x, s)| match direction {
            TransformDirection::Forward => x * s,
            TransformDirection::Inverse => x / s,
        })
        .collect()
}

/// One player's expected payoff when the attacker plays the projected point
/// `pbar` and the defender the vertex `v`.
fn vertex_payoff(
    pbar: &[f64],
    v: &DefenderVertex,
    weights: &CompactWeights,
    player: Player,
) -> f64 {
    let w = weights.player(player);
    let (uncovered, covered) = match player {
        Player::Attacker => (&w.benefit, &w.loss),
        Player::Defender => (&w.loss, &w.benefit),
    };
    let mut total = 0.0;
    for k in 0..pbar.len() {
        total += pbar[k] * (uncovered[k] * v.v1[k] + covered[k] * v.v2[k]);
    }
    total
}

/// Oracle direction whose inner product with `(v1, v2)` equals
/// `vertex_payoff(pbar, ., player)`.
fn payoff_direction(pbar: &[f64], weights: &CompactWeights, player: Player) -> Vec<f64> {
    crate::compact::payoff_direction(pbar, weights, player)
}

fn prune_distribution(mut dist: Vec<(SubsetMask, f64)>) -> Vec<(SubsetMask, f64)> {
    dist.retain(|&(_, p)| p > 1e-12);
    let total: f64 = dist.iter().map(|&(_, p)| p).sum();
    if total > 0.0 {
        for entry in &mut dist {
            entry.1 /= total;
        }
    }
    dist.sort_by_key(|&(m, _)| m.canonical_key());
    // Merge duplicates produced by vertex mapping.
    let mut merged: Vec<(SubsetMask, f64)> = Vec::with_capacity(dist.len());
    for (m, p) in dist {
        match merged.last_mut() {
            Some(last) if last.0 == m => last.1 += p,
            _ => merged.push((m, p)),
        }
    }
    merged
}

/// Decomposition residual `max_k |sum_j w_j v_j - point|`.
fn reconstruction_residual(
    weights: &[f64],
    vertices: &[DefenderVertex],
    point: &[f64],
) -> f64 {
    let mut recon = vec![0.0; point.len()];
    for (w, v) in weights.iter().zip(vertices) {
        for (r, x) in recon.iter_mut().zip(v.stacked()) {
            *r += w * x;
        }
    }
    recon
        .iter()
        .zip(point)
        .fold(0.0f64, |acc, (r, x)| acc.max((r - x).abs()))
}

fn map_vertices_to_strategies(
    weights: &[f64],
    vertices: &[DefenderVertex],
    n: usize,
    support: &SupportSet,
) -> Result<Vec<(SubsetMask, f64)>, SolveError> {
    let mut out = Vec::with_capacity(vertices.len());
    for (w, v) in weights.iter().zip(vertices) {
        let d = vertex_to_strategy(v, n, support)?;
        out.push((d, *w));
    }
    Ok(prune_distribution(out))
}

// ---------------------------------------------------------------------------
// Zero-sum Nash
// ---------------------------------------------------------------------------

/// Zero-sum pipeline: transform utilities, build the support set and the
/// diagonal weights, solve the compact program, decompose the optimum into
/// vertices, and map each vertex back to a pure strategy. The attacker's
/// mixed strategy falls out of the master's final duals.
pub fn solve_zero_sum(
    game: &GameInstance,
    cfg: &SolverConfig,
) -> Result<EquilibriumResult, SolveError> {
    if !game.utilities.zero_sum {
        return Err(SolveError::NotZeroSum);
    }
    let n = game.n();
    let common = game.utilities.common_profile(&game.space)?;
    let support = support_set(&common, n);
    let weights = crate::compact::build_weights(&common, &support);
    let solution = solve_compact_lp(&weights, &game.defender, &support, &game.space, cfg)?;

    let mut vertices = Vec::new();
    let mut lambda = Vec::new();
    for (j, &l) in solution.master.lambda.iter().enumerate() {
        if l > 1e-12 {
            lambda.push(l);
            vertices.push(solution.master.generated_vertices[j].clone());
        }
    }
    let total: f64 = lambda.iter().sum();
    for l in &mut lambda {
        *l /= total;
    }
    caratheodory_reduce(&mut vertices, &mut lambda)?;
    let residual = reconstruction_residual(&lambda, &vertices, &solution.point.stacked());
    let defender_mixed = map_vertices_to_strategies(&lambda, &vertices, n, &support)?;

    let attacker_masks = game.space.enumerate()?;
    let attacker_mixed = prune_distribution(
        attacker_masks
            .iter()
            .copied()
            .zip(solution.master.duals.iter().copied())
            .collect(),
    );

    let coverage = coverage_marginals(&defender_mixed, n);
    Ok(EquilibriumResult {
        concept: Concept::Ne,
        attacker: AttackerStrategy::Mixed(attacker_mixed),
        defender_value: -solution.value,
        attacker_value: solution.value,
        coverage,
        defender_mixed,
        diagnostics: Diagnostics {
            backend: match cfg.backend {
                Backend::ColGen => "colgen",
                Backend::Ellipsoid => "ellipsoid",
            },
            iterations: solution.master.iterations,
            residual,
            skipped_lps: 0,
            notes: Vec::new(),
        },
    })
}

// ---------------------------------------------------------------------------
// Strong Stackelberg
// ---------------------------------------------------------------------------

struct BestResponseProgram {
    objective: f64,
    attacker_value: f64,
    lambda: Vec<f64>,
    vertices: Vec<DefenderVertex>,
    iterations: usize,
}

/// Strong Stackelberg equilibrium by the compact multiple-program scan: for
/// every attacker pure strategy, maximize the defender's payoff subject to
/// that strategy being an attacker best response, then keep the best
/// feasible program. The scan maximizes the defender's objective, so ties
/// already break in the defender's favor.
pub fn solve_sse(
    game: &GameInstance,
    cfg: &SolverConfig,
) -> Result<EquilibriumResult, SolveError> {
    let n = game.n();
    let common = game.utilities.common_profile(&game.space)?;
    let support = support_set(&common, n);
    let weights = crate::compact::build_weights(&common, &support);
    let attacker_masks = game.space.enumerate()?;
    let attacker_vertices: Vec<AttackerVertex> = attacker_masks
        .iter()
        .map(|&a| crate::compact::attacker_vertex(a, &support, game.space.budget))
        .collect::<Result<_, _>>()?;

    let mut best: Option<(usize, BestResponseProgram)> = None;
    let mut skipped = 0usize;
    let mut total_iterations = 0usize;
    for aidx in 0..attacker_masks.len() {
        match best_response_program(
            aidx,
            &attacker_vertices,
            &weights,
            &game.defender,
            &support,
            cfg,
        )? {
            Some(program) => {
                total_iterations += program.iterations;
                let better = match &best {
                    Some((_, incumbent)) => program.objective > incumbent.objective + 1e-12,
                    None => true,
                };
                if better {
                    best = Some((aidx, program));
                }
            }
            None => skipped += 1,
        }
    }
    let (aidx, mut program) = best.ok_or(SolveError::NoFeasibleProgram)?;
    caratheodory_reduce(&mut program.vertices, &mut program.lambda)?;
    let defender_mixed =
        map_vertices_to_strategies(&program.lambda, &program.vertices, n, &support)?;
    let coverage = coverage_marginals(&defender_mixed, n);
    Ok(EquilibriumResult {
        concept: Concept::Sse,
        attacker: AttackerStrategy::Mixed(vec![(attacker_masks[aidx], 1.0)]),
        defender_value: program.objective,
        attacker_value: program.attacker_value,
        coverage,
        defender_mixed,
        diagnostics: Diagnostics {
            backend: "colgen",
            iterations: total_iterations,
            residual: 0.0,
            skipped_lps: skipped,
            notes: Vec::new(),
        },
    })
}

/// Column generation for one attacker strategy's program: first minimize the
/// total violation of the best-response rows, then optimize the defender's
/// payoff with the violation pinned at that minimum. Pricing folds the
/// defender objective and the dual-weighted rows into one oracle direction.
fn best_response_program(
    aidx: usize,
    attacker_vertices: &[AttackerVertex],
    weights: &CompactWeights,
    spec: &DefenderOracleSpec,
    support: &SupportSet,
    cfg: &SolverConfig,
) -> Result<Option<BestResponseProgram>, SolveError> {
    let s = support.len();
    let rows: Vec<usize> = (0..attacker_vertices.len()).filter(|&i| i != aidx).collect();
    let target = &attacker_vertices[aidx];

    let mut columns: Vec<DefenderVertex> = Vec::new();
    let mut known: std::collections::HashSet<SubsetMask> = std::collections::HashSet::new();
    let mut att_pay: Vec<Vec<f64>> = Vec::new();
    let mut def_obj: Vec<f64> = Vec::new();

    macro_rules! add_column {
        ($v:expr) => {{
            let v: DefenderVertex = $v;
            let key = v.source.expect("oracle vertices carry strategies");
            if known.contains(&key) {
                false
            } else {
                known.insert(key);
                att_pay.push(
                    attacker_vertices
                        .iter()
                        .map(|av| vertex_payoff(&av.coords, &v, weights, Player::Attacker))
                        .collect(),
                );
                def_obj.push(vertex_payoff(&target.coords, &v, weights, Player::Defender));
                columns.push(v);
                true
            }
        }};
    }

    // Seed with the defender's favorite vertex against the target attack.
    let seed_dir = payoff_direction(&target.coords, weights, Player::Defender);
    let seed = crate::oracles::dop_linear(spec, &seed_dir, support, OptSense::Max)?;
    add_column!(seed.vertex.expect("vertex filled"));

    let max_iters = cfg.colgen_iters();
    let mut iterations = 0usize;

    // Signed projected mix of the dual-weighted rows: mass on the target
    // minus the deviations, which turns row duals into one oracle direction.
    let signed_mix = |row_duals: &[f64]| -> Vec<f64> {
        let mut pbar = vec![0.0; s];
        let mut mass = 0.0;
        for (ridx, &row) in rows.iter().enumerate() {
            let y = row_duals[ridx];
            if y > 0.0 {
                mass += y;
                for k in 0..s {
                    pbar[k] -= y * attacker_vertices[row].coords[k];
                }
            }
        }
        for k in 0..s {
            pbar[k] += mass * target.coords[k];
        }
        pbar
    };

    // Phase one: drive the total best-response violation to its minimum.
    let min_violation;
    loop {
        iterations += 1;
        if iterations > max_iters {
            return Err(LpEngineError::IterationCap {
                context: "sse feasibility",
                cap: max_iters,
                violation: f64::NAN,
            }
            .into());
        }
        let (violation, _lambda, duals) = feasibility_master(&att_pay, aidx, &rows)?;
        let pbar = signed_mix(&duals);
        let gamma = duals[rows.len()];
        let mut dir = payoff_direction(&pbar, weights, Player::Attacker);
        if dir.iter().all(|x| x.abs() < 1e-14) {
            for (i, x) in dir.iter_mut().enumerate() {
                *x += (i + 1) as f64 * 1e-12;
            }
        }
        let ans = crate::oracles::dop_linear(spec, &dir, support, OptSense::Max)?;
        if ans.objective_value <= -gamma + cfg.opt_tol
            || !add_column!(ans.vertex.expect("vertex filled"))
        {
            min_violation = violation;
            break;
        }
    }
    if min_violation > cfg.feas_tol {
        return Ok(None);
    }

    // Phase two: optimize the defender objective with the violation pinned.
    loop {
        iterations += 1;
        if iterations > max_iters {
            return Err(LpEngineError::IterationCap {
                context: "sse optimization",
                cap: max_iters,
                violation: f64::NAN,
            }
            .into());
        }
        let (objective, lambda, duals) =
            objective_master(&att_pay, &def_obj, aidx, &rows, min_violation)?;
        let pbar = signed_mix(&duals);
        let gamma = duals[rows.len() + 1];
        let mut dir = payoff_direction(&target.coords, weights, Player::Defender);
        let att_dir = payoff_direction(&pbar, weights, Player::Attacker);
        for (d, a) in dir.iter_mut().zip(att_dir) {
            *d += a;
        }
        let ans = crate::oracles::dop_linear(spec, &dir, support, OptSense::Max)?;
        let improving = ans.objective_value > -gamma + cfg.opt_tol;
        if !improving || !add_column!(ans.vertex.expect("vertex filled")) {
            let attacker_value: f64 = lambda
                .iter()
                .zip(&att_pay)
                .map(|(l, col)| l * col[aidx])
                .sum();
            let mut lambda_kept = Vec::new();
            let mut vertices = Vec::new();
            for (j, &l) in lambda.iter().enumerate() {
                if l > 1e-12 {
                    lambda_kept.push(l);
                    vertices.push(columns[j].clone());
                }
            }
            let total: f64 = lambda_kept.iter().sum();
            for l in &mut lambda_kept {
                *l /= total;
            }
            return Ok(Some(BestResponseProgram {
                objective,
                attacker_value,
                lambda: lambda_kept,
                vertices,
                iterations,
            }));
        }
    }
}

/// Master for the feasibility phase: minimize total violation of the
/// best-response rows over convex weights. Returns the optimum, the
/// weights, and the duals (rows first, simplex row last).
fn feasibility_master(
    att_pay: &[Vec<f64>],
    aidx: usize,
    rows: &[usize],
) -> Result<(f64, Vec<f64>, Vec<f64>), SolveError> {
    let k = att_pay.len();
    let r = rows.len();
    // Variables: the convex weights, then one violation slack per row.
    let mut objective = vec![0.0; k + r];
    for slot in objective.iter_mut().skip(k) {
        *slot = 1.0;
    }
    let mut lp = LinearProgram::new(Sense::Min, objective);
    for (ridx, &row) in rows.iter().enumerate() {
        let mut coeffs = vec![0.0; k + r];
        for j in 0..k {
            coeffs[j] = att_pay[j][aidx] - att_pay[j][row];
        }
        coeffs[k + ridx] = 1.0;
        lp.push_row(coeffs, Cmp::Ge, 0.0);
    }
    let mut simplex_row = vec![0.0; k + r];
    for slot in simplex_row.iter_mut().take(k) {
        *slot = 1.0;
    }
    lp.push_row(simplex_row, Cmp::Eq, 1.0);
    let sol = lp_solve_dense(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(SolveError::MasterFailed(sol.status));
    }
    Ok((sol.value, sol.x[..k].to_vec(), sol.duals))
}

/// Master for the optimization phase: maximize the defender objective while
/// keeping the total violation at its phase-one minimum. Dual layout:
/// best-response rows, then the violation budget row, then the simplex row.
/// Duals are flipped to the Min convention so pricing sees `y >= 0` rows.
fn objective_master(
    att_pay: &[Vec<f64>],
    def_obj: &[f64],
    aidx: usize,
    rows: &[usize],
    violation_budget: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>), SolveError> {
    let k = att_pay.len();
    let r = rows.len();
    let mut objective = vec![0.0; k + r];
    objective[..k].copy_from_slice(def_obj);
    let mut lp = LinearProgram::new(Sense::Max, objective);
    for (ridx, &row) in rows.iter().enumerate() {
        let mut coeffs = vec![0.0; k + r];
        for j in 0..k {
            coeffs[j] = att_pay[j][aidx] - att_pay[j][row];
        }
        coeffs[k + ridx] = 1.0;
        lp.push_row(coeffs, Cmp::Ge, 0.0);
    }
    let mut budget_row = vec![0.0; k + r];
    for slot in budget_row.iter_mut().skip(k) {
        *slot = 1.0;
    }
    lp.push_row(budget_row, Cmp::Le, violation_budget + 1e-9);
    let mut simplex_row = vec![0.0; k + r];
    for slot in simplex_row.iter_mut().take(k) {
        *slot = 1.0;
    }
    lp.push_row(simplex_row, Cmp::Eq, 1.0);
    let sol = lp_solve_dense(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(SolveError::MasterFailed(sol.status));
    }
    let mut duals = sol.duals;
    for y in duals.iter_mut() {
        *y = -*y;
    }
    Ok((sol.value, sol.x[..k].to_vec(), duals))
}

// ---------------------------------------------------------------------------
// Additive non-zero-sum Nash
// ---------------------------------------------------------------------------

struct SingletonValues {
    b_a: Vec<f64>,
    l_a: Vec<f64>,
    b_d: Vec<f64>,
    l_d: Vec<f64>,
}

fn singleton_values(game: &GameInstance) -> SingletonValues {
    let n = game.n();
    let u = &game.utilities;
    let get = |f: &crate::model::Utility, i: usize| f.value(SubsetMask::singleton(i));
    SingletonValues {
        b_a: (0..n).map(|i| get(&u.benefit_attacker, i)).collect(),
        l_a: (0..n).map(|i| get(&u.loss_attacker, i)).collect(),
        b_d: (0..n).map(|i| get(&u.benefit_defender, i)).collect(),
        l_d: (0..n).map(|i| get(&u.loss_defender, i)).collect(),
    }
}

fn saddle_transform(vals: &SingletonValues) -> Result<SaddleTransform, SolveError> {
    let mut scale = Vec::with_capacity(vals.b_a.len());
    for i in 0..vals.b_a.len() {
        let da = vals.b_a[i] - vals.l_a[i];
        let dd = vals.b_d[i] - vals.l_d[i];
        if da.abs() < 1e-12 || dd.abs() < 1e-12 {
            return Err(SolveError::DegenerateTransform(i));
        }
        scale.push(dd / da);
    }
    Ok(SaddleTransform { scale })
}

/// Linear defender oracle over the set system with per-target coefficients.
fn linear_dop(
    spec: &DefenderOracleSpec,
    coeffs: &[f64],
    sense: OptSense,
) -> Result<(SubsetMask, f64), SolveError> {
    let terms = coeffs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(i, &c)| (SubsetMask::singleton(i), c))
        .collect();
    let objective = PseudoBooleanObjective { terms, n: coeffs.len() };
    Ok(oracle_solve(spec, &objective, sense)?)
}

/// Greedy maximizer over the attacker's marginal polytope: up to `budget`
/// coordinates with positive value, largest first, index ties ascending.
fn greedy_attack(values: &[f64], budget: usize) -> (SubsetMask, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    let mut mask = 0u64;
    let mut total = 0.0;
    for &i in order.iter().take(budget) {
        if values[i] > 0.0 {
            mask |= 1 << i;
            total += values[i];
        }
    }
    (SubsetMask::from_bits_unchecked(mask), total)
}

/// A solved scaled box game at one budget price: the defender's coverage
/// point with its column decomposition, the game value, and the generated
/// rows with duals.
struct BoxSaddle {
    value: f64,
    coverage: Vec<f64>,
    column_masks: Vec<SubsetMask>,
    column_weights: Vec<f64>,
    iterations: usize,
}

/// Zero-sum auxiliary game at budget price `theta`: the attacker picks any
/// subset of targets (box strategies, corners suffice) with per-target
/// payoff `scale_i * (psi_i(t) - theta)`, the defender mixes over the set
/// system. Scaling keeps the attacker's bang-bang structure identical to the
/// untransformed game while making the defender's minimization coincide
/// with its true incentives.
fn scaled_box_saddle(
    game: &GameInstance,
    vals: &SingletonValues,
    scale: &[f64],
    theta: f64,
    cfg: &SolverConfig,
) -> Result<BoxSaddle, SolveError> {
    let n = game.n();
    let psi_pure = |i: usize, covered: bool| -> f64 {
        if covered {
            vals.l_a[i]
        } else {
            vals.b_a[i]
        }
    };
    let row_payoff = |row: SubsetMask, t: &[f64]| -> f64 {
        row.indices()
            .map(|i| scale[i] * (t[i] * vals.l_a[i] + (1.0 - t[i]) * vals.b_a[i] - theta))
            .sum()
    };

    let indicator = |d: SubsetMask| -> Vec<f64> {
        (0..n).map(|i| if d.contains(i) { 1.0 } else { 0.0 }).collect()
    };
    let mut columns: Vec<SubsetMask> = Vec::new();
    let mut col_marginals: Vec<Vec<f64>> = Vec::new();
    let mut known_cols: std::collections::HashSet<SubsetMask> = std::collections::HashSet::new();
    let mut rows: Vec<SubsetMask> = Vec::new();
    let mut known_rows: std::collections::HashSet<SubsetMask> = std::collections::HashSet::new();

    let (seed_col, _) = linear_dop(&game.defender, &vec![0.0; n], OptSense::Min)?;
    known_cols.insert(seed_col);
    col_marginals.push(indicator(seed_col));
    columns.push(seed_col);
    // Seed row: positive-payoff targets against the seed column.
    let mut seed_row = 0u64;
    for i in 0..n {
        if scale[i] * (psi_pure(i, seed_col.contains(i)) - theta) > 0.0 {
            seed_row |= 1 << i;
        }
    }
    let seed_row = SubsetMask::from_bits_unchecked(seed_row);
    known_rows.insert(seed_row);
    rows.push(seed_row);

    // Converge much tighter than the user-facing tolerance: the face
    // programs below hang constraints off the saddle value.
    let tight = cfg.opt_tol.min(1e-9);
    let max_iters = cfg.colgen_iters().max(2 << game.n());
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        if iterations > max_iters {
            return Err(LpEngineError::IterationCap {
                context: "additive box saddle",
                cap: max_iters,
                violation: f64::NAN,
            }
            .into());
        }
        let k = columns.len();
        let mut objective = vec![0.0; k + 1];
        objective[k] = 1.0;
        let mut lp = LinearProgram::new(Sense::Min, objective);
        lp.mark_free(k);
        for &row in &rows {
            let mut coeffs: Vec<f64> =
                col_marginals.iter().map(|t| row_payoff(row, t)).collect();
            coeffs.push(-1.0);
            lp.push_row(coeffs, Cmp::Le, 0.0);
        }
        let mut simplex_row = vec![1.0; k];
        simplex_row.push(0.0);
        lp.push_row(simplex_row, Cmp::Eq, 1.0);
        let sol = lp_solve_dense(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(SolveError::MasterFailed(sol.status));
        }
        let u = sol.value;
        let lambda = &sol.x[..k];
        let mut t = vec![0.0; n];
        for (l, marg) in lambda.iter().zip(&col_marginals) {
            if *l > 0.0 {
                for i in 0..n {
                    t[i] += l * marg[i];
                }
            }
        }

        // Attacker separation: the positive-payoff subset is the best row.
        let mut best_row = 0u64;
        let mut best_value = 0.0;
        for i in 0..n {
            let w = scale[i] * (t[i] * vals.l_a[i] + (1.0 - t[i]) * vals.b_a[i] - theta);
            if w > 0.0 {
                best_row |= 1 << i;
                best_value += w;
            }
        }
        let best_row = SubsetMask::from_bits_unchecked(best_row);
        let row_violated = best_value > u + tight && !known_rows.contains(&best_row);

        // Defender pricing against the dual attack mix. The theta shift only
        // moves the constant, not the oracle direction.
        let duals: Vec<f64> =
            sol.duals[..rows.len()].iter().map(|y| (-y).max(0.0)).collect();
        let mut abar = vec![0.0; n];
        for (y, &row) in duals.iter().zip(&rows) {
            if *y > 0.0 {
                for i in row.indices() {
                    abar[i] += *y * scale[i];
                }
            }
        }
        let mut coeffs: Vec<f64> =
            (0..n).map(|i| abar[i] * (vals.l_a[i] - vals.b_a[i])).collect();
        if coeffs.iter().all(|c| c.abs() < 1e-14) {
            for (i, c) in coeffs.iter_mut().enumerate() {
                *c += (i + 1) as f64 * 1e-12;
            }
        }
        let constant: f64 = (0..n).map(|i| abar[i] * (vals.b_a[i] - theta)).sum();
        let (best_col, col_obj) = linear_dop(&game.defender, &coeffs, OptSense::Min)?;
        let best_col_value = col_obj + constant;
        let col_improving = best_col_value < u - tight && !known_cols.contains(&best_col);

        if !row_violated && !col_improving {
            let mut column_masks = Vec::new();
            let mut column_weights = Vec::new();
            for (j, &l) in lambda.iter().enumerate() {
                if l > 1e-12 {
                    column_masks.push(columns[j]);
                    column_weights.push(l);
                }
            }
            let total: f64 = column_weights.iter().sum();
            for w in &mut column_weights {
                *w /= total;
            }
            return Ok(BoxSaddle {
                value: u,
                coverage: t,
                column_masks,
                column_weights,
                iterations,
            });
        }
        if row_violated {
            known_rows.insert(best_row);
            rows.push(best_row);
        }
        if col_improving {
            known_cols.insert(best_col);
            col_marginals.push(indicator(best_col));
            columns.push(best_col);
        }
    }
}

/// Linear program over the attacker-optimal face of the scaled box game at
/// `theta`: among marginals in the box guaranteeing the saddle value
/// against every defender strategy (rows generated through the oracle),
/// find the one whose total mass is closest to the attacker budget.
/// Returns the marginals and their total mass.
fn face_mass_program(
    game: &GameInstance,
    vals: &SingletonValues,
    scale: &[f64],
    theta: f64,
    value: f64,
    target_mass: f64,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, f64), SolveError> {
    let n = game.n();
    let slack = 10.0 * cfg.opt_tol.min(1e-9) + 1e-9;
    // Row coefficients for a pure defender strategy d:
    // w_i(d) = scale_i * (psi_i(d) - theta).
    let row_coeffs = |d: SubsetMask| -> Vec<f64> {
        let mut coeffs: Vec<f64> = (0..n)
            .map(|i| {
                let psi = if d.contains(i) { vals.l_a[i] } else { vals.b_a[i] };
                scale[i] * (psi - theta)
            })
            .collect();
        coeffs.push(0.0); // deviation variable takes no part in face rows
        coeffs
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut known: std::collections::HashSet<SubsetMask> = std::collections::HashSet::new();
    let (seed, _) = linear_dop(&game.defender, &vec![0.0; n], OptSense::Min)?;
    known.insert(seed);
    rows.push(row_coeffs(seed));

    let max_iters = cfg.colgen_iters().max(2 << game.n());
    for _ in 0..max_iters {
        // Variables: a_0..a_{n-1}, deviation d; minimize |sum a - target|.
        let mut objective = vec![0.0; n + 1];
        objective[n] = 1.0;
        let mut lp = LinearProgram::new(Sense::Min, objective);
        for coeffs in &rows {
            lp.push_row(coeffs.clone(), Cmp::Ge, value - slack);
        }
        for i in 0..n {
            let mut bound = vec![0.0; n + 1];
            bound[i] = 1.0;
            lp.push_row(bound, Cmp::Le, 1.0);
        }
        let mut mass_hi = vec![1.0; n];
        mass_hi.push(-1.0);
        lp.push_row(mass_hi, Cmp::Le, target_mass);
        let mut mass_lo = vec![1.0; n];
        mass_lo.push(1.0);
        lp.push_row(mass_lo, Cmp::Ge, target_mass);
        let sol = lp_solve_dense(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(SolveError::MasterFailed(sol.status));
        }
        let a: Vec<f64> = sol.x[..n].iter().map(|&x| x.clamp(0.0, 1.0)).collect();
        // Separation: the defender's best counter must not push the value
        // below the saddle value.
        let coeffs: Vec<f64> = (0..n)
            .map(|i| a[i] * scale[i] * (vals.l_a[i] - vals.b_a[i]))
            .collect();
        let constant: f64 = (0..n)
            .map(|i| a[i] * scale[i] * (vals.b_a[i] - theta))
            .sum();
        let (worst, obj) = linear_dop(&game.defender, &coeffs, OptSense::Min)?;
        if obj + constant >= value - slack - cfg.feas_tol || known.contains(&worst) {
            let mass = a.iter().sum();
            return Ok((a, mass));
        }
        known.insert(worst);
        rows.push(row_coeffs(worst));
    }
    Err(LpEngineError::IterationCap {
        context: "additive face program",
        cap: max_iters,
        violation: f64::NAN,
    }
    .into())
}

/// Additive non-zero-sum Nash. The budget constraint is dualized at a price
/// `theta`, leaving a zero-sum box game whose scaled payoffs align both
/// players' true incentives: signs decide the attacker's bang-bang structure
/// (scaling preserves them) and the scaled defender objective is exactly the
/// defender's own payoff gradient. Complementarity pins `theta` by bisection
/// on the attack mass of the attacker-optimal face. The returned pair is
/// re-verified against both equilibrium inequality families.
pub fn solve_ne_additive(
    game: &GameInstance,
    cfg: &SolverConfig,
) -> Result<EquilibriumResult, SolveError> {
    if !is_additive(&game.utilities, &game.space) {
        return Err(SolveError::NotAdditive);
    }
    let n = game.n();
    let budget = game.space.budget as f64;
    let vals = singleton_values(game);
    let transform = saddle_transform(&vals)?;
    let scale = &transform.scale;

    let mut iterations = 0usize;

    // theta = 0: if some attacker-optimal point stays within budget, the
    // budget constraint is slack and the box saddle is already the answer.
    let saddle0 = scaled_box_saddle(game, &vals, scale, 0.0, cfg)?;
    iterations += saddle0.iterations;
    let (a0, mass0) =
        face_mass_program(game, &vals, scale, 0.0, saddle0.value, budget, cfg)?;
    let (saddle, attack) = if mass0 <= budget + 1e-9 {
        (saddle0, a0)
    } else {
        // Bisect the budget price until the optimal face reaches down to
        // the budget; at the crossing the face is convex and contains a
        // point with mass exactly c.
        let theta_hi_seed = (0..n).map(|i| vals.b_a[i]).fold(0.0f64, f64::max).max(0.0) + 1.0;
        let mut lo = 0.0f64;
        let mut hi = theta_hi_seed;
        let mut best: Option<(f64, BoxSaddle, Vec<f64>)> = None;
        for _ in 0..90 {
            if hi - lo < 1e-13 * theta_hi_seed.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let saddle_mid = scaled_box_saddle(game, &vals, scale, mid, cfg)?;
            iterations += saddle_mid.iterations;
            let (a_mid, mass_mid) =
                face_mass_program(game, &vals, scale, mid, saddle_mid.value, budget, cfg)?;
            if (mass_mid - budget).abs() <= 1e-9 {
                best = Some(((mass_mid - budget).abs(), saddle_mid, a_mid));
                break;
            }
            let better = match &best {
                Some((dev, _, _)) => (mass_mid - budget).abs() < *dev,
                None => true,
            };
            if better {
                best = Some(((mass_mid - budget).abs(), saddle_mid, a_mid));
            }
            if mass_mid > budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (deviation, saddle, pinned) = best.ok_or(SolveError::NoFeasibleProgram)?;
        if deviation > 1e-7 {
            return Err(SolveError::NoFeasibleProgram);
        }
        (saddle, pinned)
    };
    let t_star = saddle.coverage.clone();

    // Thin the defender decomposition in marginal space: at most n+1 parts.
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut masks: Vec<SubsetMask> = saddle.column_masks.clone();
    let mut kept: Vec<f64> = saddle.column_weights.clone();
    for &mask in &masks {
        points.push((0..n).map(|i| if mask.contains(i) { 1.0 } else { 0.0 }).collect());
    }
    caratheodory_reduce_with(&mut points, &mut kept, &mut masks);
    let defender_mixed =
        prune_distribution(masks.iter().copied().zip(kept.iter().copied()).collect());

    // Re-verify both equilibrium inequality families, untransformed.
    let psi: Vec<f64> = (0..n)
        .map(|i| t_star[i] * vals.l_a[i] + (1.0 - t_star[i]) * vals.b_a[i])
        .collect();
    let attacker_value: f64 = (0..n).map(|i| attack[i] * psi[i]).sum();
    let (_, attacker_best) = greedy_attack(&psi, game.space.budget);
    let violation_attacker = attacker_best - attacker_value;

    let defender_value: f64 = (0..n)
        .map(|i| attack[i] * (t_star[i] * vals.b_d[i] + (1.0 - t_star[i]) * vals.l_d[i]))
        .sum();
    let def_coeffs: Vec<f64> = (0..n)
        .map(|i| attack[i] * (vals.b_d[i] - vals.l_d[i]))
        .collect();
    let (_, def_gain) = linear_dop(&game.defender, &def_coeffs, OptSense::Max)?;
    let def_base: f64 = (0..n).map(|i| attack[i] * vals.l_d[i]).sum();
    let violation_defender = (def_gain + def_base) - defender_value;

    let residual = violation_attacker.max(violation_defender).max(0.0);
    let coverage = coverage_marginals(&defender_mixed, n);
    Ok(EquilibriumResult {
        concept: Concept::Ne,
        attacker: AttackerStrategy::Marginals(attack),
        defender_value,
        attacker_value,
        coverage,
        defender_mixed,
        diagnostics: Diagnostics {
            backend: "colgen",
            iterations,
            residual,
            skipped_lps: 0,
            notes: vec!["attacker strategy reported as per-target marginals".into()],
        },
    })
}

// ---------------------------------------------------------------------------
// Best response
// ---------------------------------------------------------------------------

/// The defender side of a best-response query.
#[derive(Clone, Copy, Debug)]
pub enum DefenderView<'a> {
    Mixed(&'a [(SubsetMask, f64)]),
    Coverage(&'a [f64]),
}

/// The attacker's best pure response and its value. Explicit mixed
/// strategies are answered by enumerating the attacker space; coverage
/// vectors take the greedy rule and require additive utilities.
pub fn attacker_best_response(
    defender: DefenderView<'_>,
    game: &GameInstance,
) -> Result<(SubsetMask, f64), SolveError> {
    match defender {
        DefenderView::Mixed(dist) => {
            let mut best = (SubsetMask::EMPTY, f64::NEG_INFINITY);
            for a in game.space.enumerate()? {
                let mut value = 0.0;
                for &(d, p) in dist {
                    value += p
                        * crate::compact::direct_payoff(a, d, &game.utilities, Player::Attacker);
                }
                if value > best.1 + 1e-12 {
                    best = (a, value);
                }
            }
            Ok(best)
        }
        DefenderView::Coverage(t) => {
            if !is_additive(&game.utilities, &game.space) {
                return Err(SolveError::NotAdditive);
            }
            let vals = singleton_values(game);
            let psi: Vec<f64> = (0..game.n())
                .map(|i| t[i] * vals.l_a[i] + (1.0 - t[i]) * vals.b_a[i])
                .collect();
            Ok(greedy_attack(&psi, game.space.budget))
        }
    }
}
