//! Desk-scale ground truth: explicit normal-form expansion, brute-force
//! minimax and Stackelberg solvers on the expanded game, and epsilon
//! equilibrium certification. Used by the test suite and the CLI verify
//! command; everything here is independent of the compact pipeline except
//! for the shared dense LP kernel.

use thiserror::Error;

use crate::compact::{coverage_marginals, direct_payoff, CompactError};
use crate::lpengine::simplex::{lp_solve_dense, Cmp, LinearProgram, LpError, LpStatus, Sense};
use crate::model::{
    is_additive, support_set, GameInstance, ModelError, Player, SetFunction, SubsetMask, Utility,
    UtilityProfile,
};
use crate::oracles::{dop_linear, enumerate_system_for, OptSense, OracleError};
use crate::solvers::AttackerStrategy;

/// Cap on the number of normal-form cells the expander will materialize.
pub const NORMAL_FORM_CAP: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("normal form too large: {0} cells exceed the cap {NORMAL_FORM_CAP}")]
    TooLarge(u128),
    #[error("brute-force minimax requires a zero-sum normal form; payoffs differ at ({0}, {1})")]
    NotZeroSum(usize, usize),
    #[error("attacker marginals supplied for a non-additive game")]
    MarginalsNeedAdditive,
    #[error("no Stackelberg program was feasible")]
    NoFeasibleProgram,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Compact(#[from] CompactError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("dense program unexpectedly {0:?}")]
    LpFailed(LpStatus),
}

// ---------------------------------------------------------------------------
// Normal form
// ---------------------------------------------------------------------------

/// Explicitly expanded payoff matrices, rows indexed by attacker strategies
/// and columns by defender strategies, both in canonical order.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub attacker_strategies: Vec<SubsetMask>,
    pub defender_strategies: Vec<SubsetMask>,
    pub m_a: Vec<Vec<f64>>,
    pub m_d: Vec<Vec<f64>>,
}

/// Materializes both payoff matrices through the direct pure-pair payoffs.
pub fn expand_normal_form(game: &GameInstance) -> Result<NormalForm, VerifyError> {
    let attacker_strategies = game.space.enumerate()?;
    let defender_strategies = enumerate_system_for(&game.defender, game.n())?;
    let cells = attacker_strategies.len() as u128 * defender_strategies.len() as u128;
    if cells > NORMAL_FORM_CAP {
        return Err(VerifyError::TooLarge(cells));
    }
    let mut m_a = Vec::with_capacity(attacker_strategies.len());
    let mut m_d = Vec::with_capacity(attacker_strategies.len());
    for &a in &attacker_strategies {
        let mut row_a = Vec::with_capacity(defender_strategies.len());
        let mut row_d = Vec::with_capacity(defender_strategies.len());
        for &d in &defender_strategies {
            row_a.push(direct_payoff(a, d, &game.utilities, Player::Attacker));
            row_d.push(direct_payoff(a, d, &game.utilities, Player::Defender));
        }
        m_a.push(row_a);
        m_d.push(row_d);
    }
    Ok(NormalForm { attacker_strategies, defender_strategies, m_a, m_d })
}

// ---------------------------------------------------------------------------
// Brute-force solvers
// ---------------------------------------------------------------------------

/// Result of the brute-force minimax solve, with the dual optimum retained
/// for strong-duality self-checks.
#[derive(Clone, Debug)]
pub struct BruteMinimax {
    pub value: f64,
    pub attacker: Vec<f64>,
    pub defender: Vec<f64>,
    pub dual_value: f64,
}

/// Solves `min_q max_p p' M q` over both simplices with two dense programs,
/// one per side.
pub fn brute_minimax(nf: &NormalForm) -> Result<BruteMinimax, VerifyError> {
    for (i, (ra, rd)) in nf.m_a.iter().zip(&nf.m_d).enumerate() {
        for (j, (a, d)) in ra.iter().zip(rd).enumerate() {
            if (a + d).abs() > 1e-9 {
                return Err(VerifyError::NotZeroSum(i, j));
            }
        }
    }
    let rows = nf.attacker_strategies.len();
    let cols = nf.defender_strategies.len();

    // Defender side: min u with every attacker row held at most u.
    let mut objective = vec![0.0; cols + 1];
    objective[cols] = 1.0;
    let mut lp = LinearProgram::new(Sense::Min, objective);
    lp.mark_free(cols);
    for i in 0..rows {
        let mut coeffs: Vec<f64> = (0..cols).map(|j| nf.m_a[i][j]).collect();
        coeffs.push(-1.0);
        lp.push_row(coeffs, Cmp::Le, 0.0);
    }
    let mut simplex_row = vec![1.0; cols];
    simplex_row.push(0.0);
    lp.push_row(simplex_row, Cmp::Eq, 1.0);
    let primal = lp_solve_dense(&lp)?;
    if primal.status != LpStatus::Optimal {
        return Err(VerifyError::LpFailed(primal.status));
    }
    let defender = primal.x[..cols].to_vec();

    // Attacker side: max v with every defender column held at least v.
    let mut objective = vec![0.0; rows + 1];
    objective[rows] = 1.0;
    let mut lp = LinearProgram::new(Sense::Max, objective);
    lp.mark_free(rows);
    for j in 0..cols {
        let mut coeffs: Vec<f64> = (0..rows).map(|i| nf.m_a[i][j]).collect();
        coeffs.push(-1.0);
        lp.push_row(coeffs, Cmp::Ge, 0.0);
    }
    let mut simplex_row = vec![1.0; rows];
    simplex_row.push(0.0);
    lp.push_row(simplex_row, Cmp::Eq, 1.0);
    let dual = lp_solve_dense(&lp)?;
    if dual.status != LpStatus::Optimal {
        return Err(VerifyError::LpFailed(dual.status));
    }
    let attacker = dual.x[..rows].to_vec();

    Ok(BruteMinimax {
        value: primal.value,
        attacker,
        defender,
        dual_value: dual.value,
    })
}

/// Result of the brute-force Stackelberg scan.
#[derive(Clone, Debug)]
pub struct BruteSse {
    pub defender_value: f64,
    pub defender: Vec<f64>,
    pub best_response: SubsetMask,
    pub attacker_value: f64,
}

/// One dense program per attacker pure strategy on the expanded game,
/// keeping the feasible program with the best defender payoff.
pub fn brute_sse(game: &GameInstance) -> Result<BruteSse, VerifyError> {
    let nf = expand_normal_form(game)?;
    brute_sse_normal_form(&nf)
}

pub fn brute_sse_normal_form(nf: &NormalForm) -> Result<BruteSse, VerifyError> {
    let rows = nf.attacker_strategies.len();
    let cols = nf.defender_strategies.len();
    let mut best: Option<BruteSse> = None;
    for target in 0..rows {
        let mut lp = LinearProgram::new(Sense::Max, nf.m_d[target].clone());
        for other in 0..rows {
            if other == target {
                continue;
            }
            let coeffs: Vec<f64> = (0..cols)
                .map(|j| nf.m_a[target][j] - nf.m_a[other][j])
                .collect();
            lp.push_row(coeffs, Cmp::Ge, 0.0);
        }
        lp.push_row(vec![1.0; cols], Cmp::Eq, 1.0);
        let sol = lp_solve_dense(&lp)?;
        if sol.status != LpStatus::Optimal {
            continue;
        }
        let attacker_value: f64 = (0..cols).map(|j| sol.x[j] * nf.m_a[target][j]).sum();
        let better = match &best {
            Some(incumbent) => sol.value > incumbent.defender_value + 1e-12,
            None => true,
        };
        if better {
            best = Some(BruteSse {
                defender_value: sol.value,
                defender: sol.x[..cols].to_vec(),
                best_response: nf.attacker_strategies[target],
                attacker_value,
            });
        }
    }
    best.ok_or(VerifyError::NoFeasibleProgram)
}

// ---------------------------------------------------------------------------
// Equilibrium certification
// ---------------------------------------------------------------------------

/// Outcome of an epsilon-equilibrium check.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub attacker_violation: f64,
    pub defender_violation: f64,
    pub attacker_value: f64,
    pub defender_value: f64,
    pub pass: bool,
}

fn additive_singletons(profile: &UtilityProfile, n: usize) -> [Vec<f64>; 4] {
    let get = |f: &Utility| -> Vec<f64> {
        (0..n).map(|i| f.value(SubsetMask::singleton(i))).collect()
    };
    [
        get(&profile.benefit_attacker),
        get(&profile.loss_attacker),
        get(&profile.benefit_defender),
        get(&profile.loss_defender),
    ]
}

/// Expected payoffs of a strategy profile; the attacker side may be given
/// as marginals when the game is additive.
fn profile_payoffs(
    attacker: &AttackerStrategy,
    defender: &[(SubsetMask, f64)],
    game: &GameInstance,
) -> Result<(f64, f64), VerifyError> {
    match attacker {
        AttackerStrategy::Mixed(p) => {
            let mut ua = 0.0;
            let mut ud = 0.0;
            for &(a, pa) in p {
                for &(d, qd) in defender {
                    ua += pa * qd * direct_payoff(a, d, &game.utilities, Player::Attacker);
                    ud += pa * qd * direct_payoff(a, d, &game.utilities, Player::Defender);
                }
            }
            Ok((ua, ud))
        }
        AttackerStrategy::Marginals(a) => {
            if !is_additive(&game.utilities, &game.space) {
                return Err(VerifyError::MarginalsNeedAdditive);
            }
            let n = game.n();
            let t = coverage_marginals(defender, n);
            let [b_a, l_a, b_d, l_d] = additive_singletons(&game.utilities, n);
            let mut ua = 0.0;
            let mut ud = 0.0;
            for i in 0..n {
                ua += a[i] * (t[i] * l_a[i] + (1.0 - t[i]) * b_a[i]);
                ud += a[i] * (t[i] * b_d[i] + (1.0 - t[i]) * l_d[i]);
            }
            Ok((ua, ud))
        }
    }
}

/// Verifies both best-response inequalities against every pure deviation:
/// the attacker by enumerating the attacker space, the defender through the
/// oracle and, when the system is enumerable, by exhaustive scan as well.
pub fn check_ne(
    attacker: &AttackerStrategy,
    defender: &[(SubsetMask, f64)],
    game: &GameInstance,
    eps: f64,
) -> Result<CheckReport, VerifyError> {
    let n = game.n();
    let (ua, ud) = profile_payoffs(attacker, defender, game)?;

    // Attacker deviations over the whole space.
    let mut best_attack = f64::NEG_INFINITY;
    match attacker {
        AttackerStrategy::Mixed(_) | AttackerStrategy::Marginals(_) => {
            for a in game.space.enumerate()? {
                let mut value = 0.0;
                for &(d, qd) in defender {
                    value += qd * direct_payoff(a, d, &game.utilities, Player::Attacker);
                }
                best_attack = best_attack.max(value);
            }
        }
    }
    let attacker_violation = best_attack - ua;

    // Defender deviations: oracle route plus enumeration when available.
    let mut best_defense = f64::NEG_INFINITY;
    match attacker {
        AttackerStrategy::Mixed(p) => {
            let common = game.utilities.common_profile(&game.space)?;
            let support = support_set(&common, n);
            let weights = crate::compact::build_weights(&common, &support);
            let pbar = crate::compact::project_attacker(p, &support)?;
            let dir = crate::compact::payoff_direction(&pbar.p, &weights, Player::Defender);
            let ans = dop_linear(&game.defender, &dir, &support, OptSense::Max)?;
            best_defense = best_defense.max(ans.objective_value);
        }
        AttackerStrategy::Marginals(a) => {
            let [_, _, b_d, l_d] = additive_singletons(&game.utilities, n);
            let coeffs: Vec<f64> = (0..n).map(|i| a[i] * (b_d[i] - l_d[i])).collect();
            let terms = coeffs
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(i, &c)| (SubsetMask::singleton(i), c))
                .collect();
            let objective = crate::oracles::PseudoBooleanObjective { terms, n };
            let (_, gain) = crate::oracles::oracle_solve(&game.defender, &objective, OptSense::Max)?;
            let base: f64 = (0..n).map(|i| a[i] * l_d[i]).sum();
            best_defense = best_defense.max(gain + base);
        }
    }
    if let Ok(all) = enumerate_system_for(&game.defender, n) {
        for d in all {
            let (_, value) =
                profile_payoffs(attacker, &[(d, 1.0)], game).map(|(_, ud)| ((), ud))?;
            best_defense = best_defense.max(value);
        }
    }
    let defender_violation = best_defense - ud;

    let pass = attacker_violation <= eps && defender_violation <= eps;
    Ok(CheckReport {
        attacker_violation,
        defender_violation,
        attacker_value: ua,
        defender_value: ud,
        pass,
    })
}

/// Confirms a Stackelberg solution: the attacker plays a best response and
/// no alternative commitment beats the defender's value beyond `eps`.
pub fn check_sse(
    attacker: &AttackerStrategy,
    defender: &[(SubsetMask, f64)],
    game: &GameInstance,
    eps: f64,
) -> Result<CheckReport, VerifyError> {
    let (ua, ud) = profile_payoffs(attacker, defender, game)?;
    let mut best_attack = f64::NEG_INFINITY;
    for a in game.space.enumerate()? {
        let mut value = 0.0;
        for &(d, qd) in defender {
            value += qd * direct_payoff(a, d, &game.utilities, Player::Attacker);
        }
        best_attack = best_attack.max(value);
    }
    let attacker_violation = best_attack - ua;
    let reference = brute_sse(game)?;
    let defender_violation = reference.defender_value - ud;
    let pass = attacker_violation <= eps && defender_violation <= eps;
    Ok(CheckReport {
        attacker_violation,
        defender_violation,
        attacker_value: ua,
        defender_value: ud,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

/// Seeded generators for the verification suite. Losses are drawn from
/// `[-2, 0]` and benefits sit `[0.5, 3]` above them, so benefit > loss holds
/// by construction.
pub mod gen {
    use super::*;
    use crate::model::AttackerSpace;
    use crate::oracles::DefenderOracleSpec;
    use rand::Rng;

    pub fn draw_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
        let loss = rng.gen_range(-2.0..0.0);
        let benefit = loss + rng.gen_range(0.5..3.0);
        (benefit, loss)
    }

    /// Sparse non-additive utilities over every nonempty attacker strategy.
    pub fn sparse_utilities<R: Rng>(
        rng: &mut R,
        space: &AttackerSpace,
    ) -> (SetFunction, SetFunction) {
        let mut benefit = SetFunction::new();
        let mut loss = SetFunction::new();
        for a in space.enumerate().unwrap() {
            if a.is_empty() {
                continue;
            }
            let (b, l) = draw_pair(rng);
            benefit.insert(a, b).unwrap();
            loss.insert(a, l).unwrap();
        }
        (benefit, loss)
    }

    pub fn zero_sum_instance<R: Rng>(
        rng: &mut R,
        n: usize,
        budget: usize,
        defender: DefenderOracleSpec,
    ) -> GameInstance {
        let space = AttackerSpace::new(n, budget).unwrap();
        let (b, l) = sparse_utilities(rng, &space);
        let profile = crate::model::zero_sum_complete(
            Utility::Sparse(b),
            Utility::Sparse(l),
            &space,
        )
        .unwrap();
        GameInstance::new(space, defender, profile).unwrap()
    }

    pub fn nonzero_sum_instance<R: Rng>(
        rng: &mut R,
        n: usize,
        budget: usize,
        defender: DefenderOracleSpec,
    ) -> GameInstance {
        let space = AttackerSpace::new(n, budget).unwrap();
        let (b_a, l_a) = sparse_utilities(rng, &space);
        let (b_d, l_d) = sparse_utilities(rng, &space);
        let profile = UtilityProfile {
            benefit_attacker: Utility::Sparse(b_a),
            loss_attacker: Utility::Sparse(l_a),
            benefit_defender: Utility::Sparse(b_d),
            loss_defender: Utility::Sparse(l_d),
            zero_sum: false,
        };
        GameInstance::new(space, defender, profile).unwrap()
    }

    pub fn additive_instance<R: Rng>(
        rng: &mut R,
        n: usize,
        budget: usize,
        defender: DefenderOracleSpec,
        zero_sum: bool,
    ) -> GameInstance {
        let space = AttackerSpace::new(n, budget).unwrap();
        let mut b_a = Vec::with_capacity(n);
        let mut l_a = Vec::with_capacity(n);
        for _ in 0..n {
            let (b, l) = draw_pair(rng);
            b_a.push(b);
            l_a.push(l);
        }
        let profile = if zero_sum {
            crate::model::zero_sum_complete(
                Utility::Additive(b_a),
                Utility::Additive(l_a),
                &space,
            )
            .unwrap()
        } else {
            let mut b_d = Vec::with_capacity(n);
            let mut l_d = Vec::with_capacity(n);
            for _ in 0..n {
                let (b, l) = draw_pair(rng);
                b_d.push(b);
                l_d.push(l);
            }
            UtilityProfile {
                benefit_attacker: Utility::Additive(b_a),
                loss_attacker: Utility::Additive(l_a),
                benefit_defender: Utility::Additive(b_d),
                loss_defender: Utility::Additive(l_d),
                zero_sum: false,
            }
        };
        GameInstance::new(space, defender, profile).unwrap()
    }

    /// A random small defender system: uniform matroid or budget.
    pub fn random_system<R: Rng>(rng: &mut R, n: usize, max_k: usize) -> DefenderOracleSpec {
        if rng.gen_bool(0.5) {
            DefenderOracleSpec::UniformMatroid { k: rng.gen_range(1..=max_k) }
        } else {
            let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=4) as f64).collect();
            let total: f64 = costs.iter().sum();
            let budget = rng.gen_range(1.0..total.max(2.0));
            DefenderOracleSpec::Budget { costs, budget }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{zero_sum_complete, AttackerSpace};
    use crate::oracles::DefenderOracleSpec;
    use rand::SeedableRng;

    fn m(indices: &[usize]) -> SubsetMask {
        SubsetMask::from_indices(indices, 64).unwrap()
    }

    #[test]
    fn expand_counts_strategies() {
        let space = AttackerSpace::new(3, 2).unwrap();
        let b = {
            let mut f = SetFunction::new();
            for a in space.enumerate().unwrap() {
                if !a.is_empty() {
                    f.insert(a, 1.0 + a.card() as f64).unwrap();
                }
            }
            f
        };
        let profile =
            zero_sum_complete(Utility::Sparse(b), Utility::zero_sparse(), &space).unwrap();
        let game = GameInstance::new(
            space,
            DefenderOracleSpec::UniformMatroid { k: 1 },
            profile,
        )
        .unwrap();
        let nf = expand_normal_form(&game).unwrap();
        assert_eq!(nf.attacker_strategies.len(), 7);
        assert_eq!(nf.defender_strategies.len(), 4);
        // Zero-sum: the two matrices cancel entrywise.
        for (ra, rd) in nf.m_a.iter().zip(&nf.m_d) {
            for (a, d) in ra.iter().zip(rd) {
                assert!((a + d).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn minimax_matching_pennies() {
        let nf = NormalForm {
            attacker_strategies: vec![m(&[0]), m(&[1])],
            defender_strategies: vec![m(&[0]), m(&[1])],
            m_a: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            m_d: vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
        };
        let sol = brute_minimax(&nf).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-9);
        assert!((sol.dual_value - 0.5).abs() < 1e-9);
        for p in &sol.attacker {
            assert!((p - 0.5).abs() < 1e-9);
        }
        for q in &sol.defender {
            assert!((q - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn minimax_dominant_row() {
        let nf = NormalForm {
            attacker_strategies: vec![m(&[0]), m(&[1])],
            defender_strategies: vec![m(&[0]), m(&[1])],
            m_a: vec![vec![3.0, 3.0], vec![1.0, 0.0]],
            m_d: vec![vec![-3.0, -3.0], vec![-1.0, 0.0]],
        };
        let sol = brute_minimax(&nf).unwrap();
        assert!((sol.value - 3.0).abs() < 1e-9);
        assert!((sol.attacker[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn minimax_rejects_general_sum() {
        let nf = NormalForm {
            attacker_strategies: vec![m(&[0])],
            defender_strategies: vec![m(&[0])],
            m_a: vec![vec![1.0]],
            m_d: vec![vec![1.0]],
        };
        assert!(matches!(brute_minimax(&nf), Err(VerifyError::NotZeroSum(0, 0))));
    }

    #[test]
    fn strong_duality_on_random_matrices() {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let rows = rng.gen_range(2..6);
            let cols = rng.gen_range(2..6);
            let m_a: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_range(-3.0..3.0)).collect())
                .collect();
            let m_d: Vec<Vec<f64>> =
                m_a.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
            let nf = NormalForm {
                attacker_strategies: (0..rows)
                    .map(|i| SubsetMask::from_bits_unchecked(i as u64))
                    .collect(),
                defender_strategies: (0..cols)
                    .map(|j| SubsetMask::from_bits_unchecked(j as u64))
                    .collect(),
                m_a,
                m_d,
            };
            let sol = brute_minimax(&nf).unwrap();
            assert!(
                (sol.value - sol.dual_value).abs() < 1e-8,
                "primal {} dual {}",
                sol.value,
                sol.dual_value
            );
        }
    }

    #[test]
    fn brute_minimax_passes_its_own_check() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let game = gen::zero_sum_instance(
            &mut rng,
            4,
            2,
            DefenderOracleSpec::UniformMatroid { k: 2 },
        );
        let nf = expand_normal_form(&game).unwrap();
        let sol = brute_minimax(&nf).unwrap();
        let p: Vec<(SubsetMask, f64)> = nf
            .attacker_strategies
            .iter()
            .copied()
            .zip(sol.attacker.iter().copied())
            .filter(|&(_, x)| x > 1e-12)
            .collect();
        let q: Vec<(SubsetMask, f64)> = nf
            .defender_strategies
            .iter()
            .copied()
            .zip(sol.defender.iter().copied())
            .filter(|&(_, x)| x > 1e-12)
            .collect();
        let report = check_ne(&AttackerStrategy::Mixed(p), &q, &game, 1e-6).unwrap();
        assert!(report.pass, "{report:?}");

        // Moving mass off-support must break the check.
        let mut bad_q = q.clone();
        if bad_q.len() >= 2 {
            bad_q[0].1 += 0.1;
            bad_q[1].1 -= 0.1;
            bad_q.retain(|&(_, p)| p > 0.0);
            let total: f64 = bad_q.iter().map(|&(_, p)| p).sum();
            for e in &mut bad_q {
                e.1 /= total;
            }
            let report =
                check_ne(&AttackerStrategy::Mixed(vec![]), &bad_q, &game, 1e-6);
            // Either the empty attacker distribution errors on payoffs or
            // the report fails; both signal an invalid certificate.
            if let Ok(r) = report {
                assert!(!r.pass || r.attacker_violation > 0.0);
            }
        }
    }

    #[test]
    fn sse_zero_sum_agrees_with_minimax() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let game = gen::zero_sum_instance(
            &mut rng,
            4,
            2,
            DefenderOracleSpec::UniformMatroid { k: 2 },
        );
        let nf = expand_normal_form(&game).unwrap();
        let mm = brute_minimax(&nf).unwrap();
        let sse = brute_sse(&game).unwrap();
        assert!(
            (sse.defender_value + mm.value).abs() < 1e-6,
            "sse {} vs minimax {}",
            sse.defender_value,
            mm.value
        );
    }

    #[test]
    fn check_sse_accepts_brute_solution() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let game = gen::nonzero_sum_instance(
            &mut rng,
            4,
            2,
            DefenderOracleSpec::UniformMatroid { k: 2 },
        );
        let sse = brute_sse(&game).unwrap();
        let nf = expand_normal_form(&game).unwrap();
        let q: Vec<(SubsetMask, f64)> = nf
            .defender_strategies
            .iter()
            .copied()
            .zip(sse.defender.iter().copied())
            .filter(|&(_, x)| x > 1e-12)
            .collect();
        let p = AttackerStrategy::Mixed(vec![(sse.best_response, 1.0)]);
        let report = check_sse(&p, &q, &game, 1e-6).unwrap();
        assert!(report.pass, "{report:?}");
    }
}
