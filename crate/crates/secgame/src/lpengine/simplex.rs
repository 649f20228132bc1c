//! Dense two-phase primal simplex. Small by design: it only has to handle
//! the restricted masters, the brute-force normal-form programs, and the
//! membership/decomposition programs this crate generates. Every solve is
//! verified against the original rows and retried under Bland's rule before
//! anything is returned, so ill-conditioned bases fail loudly instead of
//! leaking infeasible answers.

use thiserror::Error;

const EPS: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;
const VERIFY_TOL: f64 = 1e-6;
const MAX_PIVOTS: usize = 200_000;
const BLAND_AFTER: usize = 5_000;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("problem too large: {0} variables x {1} rows (cap 10^4 each)")]
    TooLarge(usize, usize),
    #[error("row {0} has {1} coefficients, expected {2}")]
    BadRowLength(usize, usize, usize),
    #[error("simplex exceeded {MAX_PIVOTS} pivots")]
    PivotLimit,
    #[error("simplex returned an unstable solution (row violation {0:.3e} after retry)")]
    Unstable(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// A dense linear program. Variables are nonnegative unless flagged free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub free: Vec<bool>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram { sense, objective, rows: Vec::new(), free: vec![false; n] }
    }

    pub fn push_row(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) {
        self.rows.push(LpRow { coeffs, cmp, rhs });
    }

    pub fn mark_free(&mut self, var: usize) {
        self.free[var] = true;
    }
}

/// Solution with duals. Dual sign convention, per original row:
/// for `Min` problems `<=` rows carry nonpositive duals and `>=` rows
/// nonnegative ones; for `Max` problems the signs flip. Strong duality
/// holds as `value = sum(dual_i * rhs_i)` plus reduced-cost terms for
/// bounded variables (zero here since all bounds are at zero).
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
}

/// Worst violation of the original rows by a candidate point.
fn row_violation(problem: &LinearProgram, x: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for row in &problem.rows {
        let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        let v = match row.cmp {
            Cmp::Le => lhs - row.rhs,
            Cmp::Ge => row.rhs - lhs,
            Cmp::Eq => (lhs - row.rhs).abs(),
        };
        worst = worst.max(v);
    }
    worst
}

/// Solves a dense LP, returning optimum, a primal point, and row duals.
pub fn lp_solve_dense(problem: &LinearProgram) -> Result<LpSolution, LpError> {
    let first = solve_once(problem, false)?;
    if first.status != LpStatus::Optimal {
        return Ok(first);
    }
    let violation = row_violation(problem, &first.x);
    if violation <= VERIFY_TOL {
        return Ok(first);
    }
    // Ill-conditioned pivot path; Bland's rule walks a different one.
    let second = solve_once(problem, true)?;
    if second.status != LpStatus::Optimal {
        return Ok(second);
    }
    let violation = row_violation(problem, &second.x);
    if violation <= VERIFY_TOL {
        return Ok(second);
    }
    Err(LpError::Unstable(violation))
}

fn solve_once(problem: &LinearProgram, force_bland: bool) -> Result<LpSolution, LpError> {
    let n_orig = problem.objective.len();
    let m = problem.rows.len();
    if n_orig > 10_000 || m > 10_000 {
        return Err(LpError::TooLarge(n_orig, m));
    }
    for (i, row) in problem.rows.iter().enumerate() {
        if row.coeffs.len() != n_orig {
            return Err(LpError::BadRowLength(i, row.coeffs.len(), n_orig));
        }
    }

    // Canonicalize to min over nonnegative variables: negate the objective
    // for max problems, split free variables into differences.
    let minimize = problem.sense == Sense::Min;
    let mut var_map: Vec<(usize, Option<usize>)> = Vec::with_capacity(n_orig);
    let mut cost: Vec<f64> = Vec::new();
    for j in 0..n_orig {
        let c = if minimize { problem.objective[j] } else { -problem.objective[j] };
        let pos = cost.len();
        cost.push(c);
        if problem.free.get(j).copied().unwrap_or(false) {
            cost.push(-c);
            var_map.push((pos, Some(pos + 1)));
        } else {
            var_map.push((pos, None));
        }
    }
    let n = cost.len();

    // Rows with nonnegative right-hand sides; remember flips for duals.
    let mut flipped = vec![false; m];
    let mut cmps = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut body = vec![vec![0.0; n]; m];
    for (i, row) in problem.rows.iter().enumerate() {
        let flip = row.rhs < 0.0;
        flipped[i] = flip;
        let sign = if flip { -1.0 } else { 1.0 };
        rhs.push(sign * row.rhs);
        cmps.push(match (row.cmp, flip) {
            (Cmp::Le, false) | (Cmp::Ge, true) => Cmp::Le,
            (Cmp::Ge, false) | (Cmp::Le, true) => Cmp::Ge,
            (Cmp::Eq, _) => Cmp::Eq,
        });
        for (j, &(p, q)) in var_map.iter().enumerate() {
            let a = sign * row.coeffs[j];
            body[i][p] = a;
            if let Some(qn) = q {
                body[i][qn] = -a;
            }
        }
    }

    // Column layout: structurals, then one slack/surplus per inequality,
    // then one artificial per Ge/Eq row.
    let mut slack_col = vec![usize::MAX; m];
    let mut art_col = vec![usize::MAX; m];
    let mut total = n;
    for i in 0..m {
        match cmps[i] {
            Cmp::Le | Cmp::Ge => {
                slack_col[i] = total;
                total += 1;
            }
            Cmp::Eq => {}
        }
    }
    let art_start = total;
    for i in 0..m {
        if cmps[i] != Cmp::Le {
            art_col[i] = total;
            total += 1;
        }
    }

    // Tableau: m rows x (total + 1) columns, last column is the rhs.
    let mut t = vec![vec![0.0; total + 1]; m];
    let mut basis = vec![usize::MAX; m];
    for i in 0..m {
        t[i][..n].copy_from_slice(&body[i]);
        t[i][total] = rhs[i];
        match cmps[i] {
            Cmp::Le => {
                t[i][slack_col[i]] = 1.0;
                basis[i] = slack_col[i];
            }
            Cmp::Ge => {
                t[i][slack_col[i]] = -1.0;
                t[i][art_col[i]] = 1.0;
                basis[i] = art_col[i];
            }
            Cmp::Eq => {
                t[i][art_col[i]] = 1.0;
                basis[i] = art_col[i];
            }
        }
    }

    let mut pivots = 0usize;
    let mut redundant = vec![false; m];

    // Phase 1: minimize the sum of artificials.
    if (0..m).any(|i| art_col[i] != usize::MAX) {
        let mut c1 = vec![0.0; total];
        for i in 0..m {
            if art_col[i] != usize::MAX {
                c1[art_col[i]] = 1.0;
            }
        }
        run_simplex(&mut t, &mut basis, &c1, total, &mut pivots, art_start, force_bland)?;
        let infeas: f64 = (0..m)
            .filter(|&i| basis[i] >= art_start)
            .map(|i| t[i][total])
            .sum();
        if infeas > PHASE1_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                value: f64::NAN,
                x: vec![0.0; n_orig],
                duals: vec![0.0; m],
            });
        }
        // Drive every remaining basic artificial out of the basis so phase
        // two can never regrow one. The pivot is degenerate (the artificial
        // sits at zero), and the largest available element keeps it stable.
        // A row with no real element left is dependent on the others and is
        // dropped; its dual is zero.
        for i in 0..m {
            if basis[i] >= art_start {
                let col = (0..art_start)
                    .filter(|&j| t[i][j].abs() > 1e-9)
                    .max_by(|&a, &b| t[i][a].abs().partial_cmp(&t[i][b].abs()).unwrap());
                if let Some(col) = col {
                    pivot(&mut t, &mut basis, i, col);
                    pivots += 1;
                } else {
                    for j in 0..=total {
                        t[i][j] = 0.0;
                    }
                    redundant[i] = true;
                }
            }
        }
    }

    // Phase 2 with the real costs; artificials are barred from entering.
    let status =
        run_simplex(&mut t, &mut basis, &cost, total, &mut pivots, art_start, force_bland)?;
    if status == LpStatus::Unbounded {
        return Ok(LpSolution {
            status,
            value: if minimize { f64::NEG_INFINITY } else { f64::INFINITY },
            x: vec![0.0; n_orig],
            duals: vec![0.0; m],
        });
    }

    // Refactorize: the tableau only chose the basis. Accumulated pivot
    // drift is discarded by re-solving the basic system from the original
    // column data, once for the primal and once (transposed) for the duals.
    let original_column = |col: usize| -> Vec<f64> {
        let mut out = vec![0.0; m];
        if col < n {
            for i in 0..m {
                out[i] = body[i][col];
            }
        } else {
            for i in 0..m {
                if slack_col[i] == col {
                    out[i] = if cmps[i] == Cmp::Ge { -1.0 } else { 1.0 };
                }
                if art_col[i] == col {
                    out[i] = 1.0;
                }
            }
        }
        out
    };
    let basis_matrix: Vec<Vec<f64>> = basis.iter().map(|&col| original_column(col)).collect();
    let x_basic = solve_square(&basis_matrix, &rhs, true).unwrap_or_else(|| {
        // Singular within tolerance: fall back to the tableau's own values;
        // the caller-side verification decides whether they are usable.
        (0..m).map(|i| t[i][total]).collect()
    });
    let mut z = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            z[basis[i]] = x_basic[i].max(0.0);
        }
    }
    let mut x = vec![0.0; n_orig];
    for (j, &(p, q)) in var_map.iter().enumerate() {
        x[j] = z[p] - q.map_or(0.0, |qn| z[qn]);
    }
    let internal_value: f64 = cost.iter().zip(&z).map(|(c, v)| c * v).sum();

    // Duals solve B' y = c_B over the same fresh factorization, falling back
    // to reduced costs off the tableau when the basis is singular. Redundant
    // rows keep their artificial basic at cost zero, which pins their duals
    // to zero automatically.
    let c_basis: Vec<f64> = basis
        .iter()
        .map(|&col| if col < n { cost[col] } else { 0.0 })
        .collect();
    let y = solve_square(&basis_matrix, &c_basis, false).unwrap_or_else(|| {
        let reduced = |col: usize| -> f64 {
            let mut r = if col < n { cost[col] } else { 0.0 };
            for i in 0..m {
                let cb = if basis[i] < n { cost[basis[i]] } else { 0.0 };
                if cb != 0.0 {
                    r -= cb * t[i][col];
                }
            }
            r
        };
        (0..m)
            .map(|i| {
                let plus_col = match cmps[i] {
                    Cmp::Le => slack_col[i],
                    Cmp::Ge | Cmp::Eq => art_col[i],
                };
                -reduced(plus_col)
            })
            .collect()
    });
    let mut duals = vec![0.0; m];
    for i in 0..m {
        if redundant[i] {
            continue;
        }
        let mut yi = y[i];
        if flipped[i] {
            yi = -yi;
        }
        if !minimize {
            yi = -yi;
        }
        duals[i] = yi;
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        value: if minimize { internal_value } else { -internal_value },
        x,
        duals,
    })
}

/// Dense Gaussian elimination with partial pivoting. Solves `A x = b` when
/// `transpose_rhs` is true (columns of `a` are basis columns, so the system
/// rows run over constraint rows), else `A' x = b`. Returns None on a
/// numerically singular matrix.
fn solve_square(a: &[Vec<f64>], b: &[f64], transpose_rhs: bool) -> Option<Vec<f64>> {
    let m = b.len();
    // a is stored column-major: a[j][i] = entry (row i, basis column j).
    let mut aug = vec![vec![0.0f64; m + 1]; m];
    for i in 0..m {
        for j in 0..m {
            aug[i][j] = if transpose_rhs { a[j][i] } else { a[i][j] };
        }
        aug[i][m] = b[i];
    }
    for col in 0..m {
        let mut best = col;
        for i in (col + 1)..m {
            if aug[i][col].abs() > aug[best][col].abs() {
                best = i;
            }
        }
        if aug[best][col].abs() < 1e-12 {
            return None;
        }
        aug.swap(col, best);
        for i in (col + 1)..m {
            let f = aug[i][col] / aug[col][col];
            if f != 0.0 {
                for j in col..=m {
                    aug[i][j] -= f * aug[col][j];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for col in (0..m).rev() {
        let mut acc = aug[col][m];
        for j in (col + 1)..m {
            acc -= aug[col][j] * x[j];
        }
        x[col] = acc / aug[col][col];
    }
    Some(x)
}

/// Runs pivots until optimal or unbounded. Dantzig rule with a Bland
/// fallback after a fixed number of pivots guards against cycling.
#[allow(clippy::too_many_arguments)]
fn run_simplex(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    total: usize,
    pivots: &mut usize,
    art_start: usize,
    force_bland: bool,
) -> Result<LpStatus, LpError> {
    let m = t.len();
    loop {
        if *pivots > MAX_PIVOTS {
            return Err(LpError::PivotLimit);
        }
        let bland = force_bland || *pivots > BLAND_AFTER;
        // Reduced costs; artificials may never re-enter.
        let mut enter = usize::MAX;
        let mut best = -EPS;
        for j in 0..art_start.min(total) {
            let mut r = if j < cost.len() { cost[j] } else { 0.0 };
            for i in 0..m {
                let cb = if basis[i] < cost.len() { cost[basis[i]] } else { 0.0 };
                if cb != 0.0 {
                    r -= cb * t[i][j];
                }
            }
            if r < -EPS {
                if bland {
                    enter = j;
                    break;
                }
                if r < best {
                    best = r;
                    enter = j;
                }
            }
        }
        if enter == usize::MAX {
            return Ok(LpStatus::Optimal);
        }
        // Ratio test; ties go to the smallest basis index (anti-cycling).
        let rhs_col = total;
        let mut leave = usize::MAX;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > EPS {
                let ratio = t[i][rhs_col] / t[i][enter];
                if ratio < best_ratio - EPS
                    || (ratio < best_ratio + EPS
                        && (leave == usize::MAX || basis[i] < basis[leave]))
                {
                    best_ratio = ratio;
                    leave = i;
                }
            }
        }
        if leave == usize::MAX {
            return Ok(LpStatus::Unbounded);
        }
        pivot(t, basis, leave, enter);
        *pivots += 1;
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let cols = t[row].len();
    let p = t[row][col];
    for j in 0..cols {
        t[row][j] /= p;
    }
    t[row][col] = 1.0;
    for i in 0..t.len() {
        if i != row {
            let factor = t[i][col];
            if factor != 0.0 {
                for j in 0..cols {
                    t[i][j] -= factor * t[row][j];
                }
                t[i][col] = 0.0;
            }
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_maximum() {
        // max x s.t. x <= 3 -> 3.
        let mut lp = LinearProgram::new(Sense::Max, vec![1.0]);
        lp.push_row(vec![1.0], Cmp::Le, 3.0);
        let sol = lp_solve_dense(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 3.0).abs() < 1e-9);
        assert!((sol.x[0] - 3.0).abs() < 1e-9);
        // Max sense: <= row dual is nonnegative and prices the bound.
        assert!((sol.duals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_minimax() {
        // min u s.t. u >= 1 - t, u >= t, 0 <= t <= 1 -> u = 0.5 at t = 0.5.
        let mut lp = LinearProgram::new(Sense::Min, vec![1.0, 0.0]);
        lp.push_row(vec![1.0, 1.0], Cmp::Ge, 1.0); // u + t >= 1
        lp.push_row(vec![1.0, -1.0], Cmp::Ge, 0.0); // u - t >= 0
        lp.push_row(vec![0.0, 1.0], Cmp::Le, 1.0);
        lp.mark_free(0);
        let sol = lp_solve_dense(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 0.5).abs() < 1e-9);
        assert!((sol.x[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LinearProgram::new(Sense::Min, vec![1.0]);
        lp.push_row(vec![1.0], Cmp::Le, 0.0);
        lp.push_row(vec![1.0], Cmp::Ge, 1.0);
        let sol = lp_solve_dense(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(Sense::Max, vec![1.0]);
        lp.push_row(vec![-1.0], Cmp::Le, 1.0);
        let sol = lp_solve_dense(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_constraints_and_duals() {
        // min 2a + 3b s.t. a + b = 1 -> a = 1, value 2, dual on Eq row = 2.
        let mut lp = LinearProgram::new(Sense::Min, vec![2.0, 3.0]);
        lp.push_row(vec![1.0, 1.0], Cmp::Eq, 1.0);
        let sol = lp_solve_dense(&lp).unwrap();
        assert!((sol.value - 2.0).abs() < 1e-9);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!((sol.duals[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn strong_duality_on_matrix_game() {
        // Matching-pennies-like matrix [[1,0],[0,1]]: value 0.5 both ways.
        // Row player LP: max v s.t. M^T p >= v, sum p = 1.
        let m = [[1.0, 0.0], [0.0, 1.0]];
        let mut lp = LinearProgram::new(Sense::Max, vec![1.0, 0.0, 0.0]);
        for col in 0..2 {
            // v - sum_i p_i M[i][col] <= 0
            lp.push_row(vec![1.0, -m[0][col], -m[1][col]], Cmp::Le, 0.0);
        }
        lp.push_row(vec![0.0, 1.0, 1.0], Cmp::Eq, 1.0);
        lp.mark_free(0);
        let sol = lp_solve_dense(&lp).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-9);
        assert!((sol.x[1] - 0.5).abs() < 1e-9);
        assert!((sol.x[2] - 0.5).abs() < 1e-9);
        // The <=-row duals recover the column player's mixed strategy.
        assert!((sol.duals[0] - 0.5).abs() < 1e-9);
        assert!((sol.duals[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_rows_are_flipped_consistently() {
        // min x s.t. -x <= -2  (i.e. x >= 2)
        let mut lp = LinearProgram::new(Sense::Min, vec![1.0]);
        lp.push_row(vec![-1.0], Cmp::Le, -2.0);
        let sol = lp_solve_dense(&lp).unwrap();
        assert!((sol.value - 2.0).abs() < 1e-9);
        // Dual: y * (-2) should equal the optimum, so y = -1 on this <= row.
        assert!((sol.duals[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn duality_value_identity_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let n = rng.gen_range(2..6);
            let m = rng.gen_range(2..6);
            let mut lp = LinearProgram::new(
                Sense::Min,
                (0..n).map(|_| rng.gen_range(0.2..2.0)).collect(),
            );
            for _ in 0..m {
                let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect();
                lp.push_row(coeffs, Cmp::Ge, rng.gen_range(0.1..1.5));
            }
            let sol = lp_solve_dense(&lp).unwrap();
            if sol.status != LpStatus::Optimal {
                continue;
            }
            let dual_value: f64 = sol
                .duals
                .iter()
                .zip(&lp.rows)
                .map(|(y, row)| y * row.rhs)
                .sum();
            assert!(
                (dual_value - sol.value).abs() < 1e-6,
                "trial {trial}: primal {} dual {dual_value}",
                sol.value
            );
            for (y, row) in sol.duals.iter().zip(&lp.rows) {
                assert!(matches!(row.cmp, Cmp::Ge));
                assert!(*y > -1e-9, "Ge dual must be nonnegative, got {y}");
            }
        }
    }

    #[test]
    fn solutions_satisfy_rows_on_degenerate_batches() {
        // Near-dependent rows with an equality: the solver must never return
        // a point violating the original system.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let k = rng.gen_range(3..9);
            let rows = rng.gen_range(3..10);
            let mut lp = LinearProgram::new(Sense::Min, {
                let mut c = vec![0.0; k + 1];
                c[k] = 1.0;
                c
            });
            lp.mark_free(k);
            let base: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for _ in 0..rows {
                // Rows differ from a shared base by small perturbations.
                let mut coeffs: Vec<f64> = base
                    .iter()
                    .map(|b| b + rng.gen_range(-1e-4..1e-4))
                    .collect();
                coeffs.push(-1.0);
                lp.push_row(coeffs, Cmp::Le, 0.0);
            }
            let mut simplex_row = vec![1.0; k];
            simplex_row.push(0.0);
            lp.push_row(simplex_row, Cmp::Eq, 1.0);
            let sol = lp_solve_dense(&lp).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal);
            assert!(
                row_violation(&lp, &sol.x) <= VERIFY_TOL,
                "violation {}",
                row_violation(&lp, &sol.x)
            );
        }
    }
}
