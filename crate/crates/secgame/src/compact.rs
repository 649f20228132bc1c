//! Compact representation: support-set indexing, diagonal common-utility
//! weights, binary vertices of the projected polytopes, vertex-mapping
//! algorithms, and payoff evaluation through the decomposition identity.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{
    CommonUtilityProfile, Player, SubsetMask, UtilityProfile,
};

#[derive(Debug, Error)]
pub enum CompactError {
    #[error("attacker strategy {0} exceeds the budget {1}")]
    BudgetExceeded(SubsetMask, usize),
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("subset {0} is not a member of the support set")]
    NotInSupport(SubsetMask),
    #[error("not a probability distribution: {0}")]
    BadDistribution(String),
    #[error("vertex coordinate for singleton {{{0}}} is {1}, not binary within 1e-9")]
    NonBinaryCoordinate(usize, f64),
    #[error("vertex violates singleton complementarity at target {0}: v1+v2 = {1}")]
    ComplementarityViolated(usize, f64),
}

// ---------------------------------------------------------------------------
// Support set
// ---------------------------------------------------------------------------

/// Ordered collection of the subsets indexing the compact coordinates,
/// together with the position map (the index function restricted to it).
#[derive(Clone, Debug)]
pub struct SupportSet {
    members: Vec<SubsetMask>,
    index: HashMap<SubsetMask, usize>,
    singleton_pos: Vec<usize>,
    n: usize,
}

impl SupportSet {
    /// Wraps a canonically ordered member list. Callers normally obtain one
    /// via `model::support_set`, which guarantees the singleton augmentation.
    pub fn from_members(members: Vec<SubsetMask>, n: usize) -> Self {
        let index: HashMap<SubsetMask, usize> =
            members.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let singleton_pos = (0..n)
            .map(|i| index[&SubsetMask::singleton(i)])
            .collect();
        SupportSet { members, index, singleton_pos, n }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[SubsetMask] {
        &self.members
    }

    /// Position of `mask` in the support order.
    pub fn position(&self, mask: SubsetMask) -> Option<usize> {
        self.index.get(&mask).copied()
    }

    /// Position of the singleton `{i}`; always present.
    pub fn singleton_position(&self, i: usize) -> usize {
        self.singleton_pos[i]
    }
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

/// Benefit/loss common-utility vectors for one player, aligned with a
/// support set's order.
#[derive(Clone, Debug)]
pub struct PlayerWeights {
    pub benefit: Vec<f64>,
    pub loss: Vec<f64>,
}

/// Both players' diagonal weight vectors over one support set.
#[derive(Clone, Debug)]
pub struct CompactWeights {
    pub attacker: PlayerWeights,
    pub defender: PlayerWeights,
}

impl CompactWeights {
    pub fn player(&self, player: Player) -> &PlayerWeights {
        match player {
            Player::Attacker => &self.attacker,
            Player::Defender => &self.defender,
        }
    }

    pub fn len(&self) -> usize {
        self.attacker.benefit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attacker.benefit.is_empty()
    }
}

/// Aligns the common utilities with the support set's order, one dense
/// vector per (player, benefit/loss) pair.
pub fn build_weights(common: &CommonUtilityProfile, support: &SupportSet) -> CompactWeights {
    let pick = |f: &crate::model::SetFunction| -> Vec<f64> {
        support.members().iter().map(|&m| f.value(m)).collect()
    };
    CompactWeights {
        attacker: PlayerWeights {
            benefit: pick(&common.benefit_attacker),
            loss: pick(&common.loss_attacker),
        },
        defender: PlayerWeights {
            benefit: pick(&common.benefit_defender),
            loss: pick(&common.loss_defender),
        },
    }
}

// ---------------------------------------------------------------------------
// Vertices and points
// ---------------------------------------------------------------------------

/// Projected image of an attacker pure strategy: the subset-indicator row.
#[derive(Clone, Debug)]
pub struct AttackerVertex {
    pub coords: Vec<f64>,
    pub source: SubsetMask,
}

/// Projected image of a defender pure strategy: the two indicator columns.
#[derive(Clone, Debug, PartialEq)]
pub struct DefenderVertex {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub source: Option<SubsetMask>,
}

impl DefenderVertex {
    /// Concatenated `(v1, v2)` coordinates.
    pub fn stacked(&self) -> Vec<f64> {
        let mut out = self.v1.clone();
        out.extend_from_slice(&self.v2);
        out
    }
}

/// A real point `(q1, q2)` in the projected defender polytope.
#[derive(Clone, Debug)]
pub struct CompactDefenderPoint {
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
}

impl CompactDefenderPoint {
    pub fn from_stacked(z: &[f64]) -> Self {
        let half = z.len() / 2;
        CompactDefenderPoint { q1: z[..half].to_vec(), q2: z[half..].to_vec() }
    }

    pub fn stacked(&self) -> Vec<f64> {
        let mut out = self.q1.clone();
        out.extend_from_slice(&self.q2);
        out
    }
}

/// A real point in the projected attacker polytope.
#[derive(Clone, Debug)]
pub struct CompactAttackerPoint {
    pub p: Vec<f64>,
}

/// Indicator row of `A` over the support set: 1 exactly on the subsets of `A`.
pub fn attacker_vertex(
    a: SubsetMask,
    support: &SupportSet,
    budget: usize,
) -> Result<AttackerVertex, CompactError> {
    if a.card() > budget {
        return Err(CompactError::BudgetExceeded(a, budget));
    }
    let coords = support
        .members()
        .iter()
        .map(|&v| if v.is_subset_of(a) { 1.0 } else { 0.0 })
        .collect();
    Ok(AttackerVertex { coords, source: a })
}

/// Maps a defender pure strategy to its projected vertex: `v1` indicates
/// subsets of the complement, `v2` subsets of the strategy itself.
pub fn defender_vertex(d: SubsetMask, support: &SupportSet) -> DefenderVertex {
    let dc = d.complement(support.n());
    let v1 = support
        .members()
        .iter()
        .map(|&v| if v.is_subset_of(dc) { 1.0 } else { 0.0 })
        .collect();
    let v2 = support
        .members()
        .iter()
        .map(|&v| if v.is_subset_of(d) { 1.0 } else { 0.0 })
        .collect();
    DefenderVertex { v1, v2, source: Some(d) }
}

/// Recovers the pure strategy from a vertex by reading the singleton
/// coordinates of `v1`: the strategy is the complement of the set where
/// `v1` is nonzero. The `v2` side is validated through the complementarity
/// relation but never consulted.
pub fn vertex_to_strategy(
    vertex: &DefenderVertex,
    n: usize,
    support: &SupportSet,
) -> Result<SubsetMask, CompactError> {
    let mut t_bits = 0u64;
    for i in 0..n {
        let pos = support.singleton_position(i);
        let x1 = vertex.v1[pos];
        let x2 = vertex.v2[pos];
        if (x1 - x1.round()).abs() > 1e-9 || !(x1.round() == 0.0 || x1.round() == 1.0) {
            return Err(CompactError::NonBinaryCoordinate(i, x1));
        }
        if (x1 + x2 - 1.0).abs() > 1e-9 {
            return Err(CompactError::ComplementarityViolated(i, x1 + x2));
        }
        if x1.round() == 1.0 {
            t_bits |= 1 << i;
        }
    }
    Ok(SubsetMask::from_bits_unchecked(t_bits).complement(n))
}

fn validate_distribution(probs: &[(SubsetMask, f64)]) -> Result<(), CompactError> {
    let mut total = 0.0;
    for &(mask, p) in probs {
        if p < -1e-9 {
            return Err(CompactError::BadDistribution(format!(
                "negative probability {p} at {mask}"
            )));
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(CompactError::BadDistribution(format!(
            "probabilities sum to {total}"
        )));
    }
    Ok(())
}

/// Projects an attacker mixed strategy: coordinate at `V` is the probability
/// that the attacked set contains `V`.
pub fn project_attacker(
    distribution: &[(SubsetMask, f64)],
    support: &SupportSet,
) -> Result<CompactAttackerPoint, CompactError> {
    validate_distribution(distribution)?;
    let mut p = vec![0.0; support.len()];
    for (idx, &v) in support.members().iter().enumerate() {
        for &(a, prob) in distribution {
            if v.is_subset_of(a) {
                p[idx] += prob;
            }
        }
    }
    Ok(CompactAttackerPoint { p })
}

/// Projects a defender mixed strategy onto `(q1, q2)`.
pub fn project_defender(
    distribution: &[(SubsetMask, f64)],
    support: &SupportSet,
) -> Result<CompactDefenderPoint, CompactError> {
    validate_distribution(distribution)?;
    let n = support.n();
    let mut q1 = vec![0.0; support.len()];
    let mut q2 = vec![0.0; support.len()];
    for (idx, &v) in support.members().iter().enumerate() {
        for &(d, prob) in distribution {
            if v.is_subset_of(d.complement(n)) {
                q1[idx] += prob;
            }
            if v.is_subset_of(d) {
                q2[idx] += prob;
            }
        }
    }
    Ok(CompactDefenderPoint { q1, q2 })
}

/// The compact bilinear payoff. The `q1` block indicates subsets of the
/// uncovered side and `q2` subsets of the covered side, so the attacker's
/// benefit weights pair with `q1` while the defender's pair with `q2`:
/// attackers profit from uncovered targets, defenders from covered ones.
pub fn compact_payoff(
    pbar: &CompactAttackerPoint,
    qpt: &CompactDefenderPoint,
    weights: &CompactWeights,
    player: Player,
) -> Result<f64, CompactError> {
    let expected = weights.len();
    for got in [pbar.p.len(), qpt.q1.len(), qpt.q2.len()] {
        if got != expected {
            return Err(CompactError::DimensionMismatch { expected, got });
        }
    }
    let w = weights.player(player);
    let (uncovered, covered) = match player {
        Player::Attacker => (&w.benefit, &w.loss),
        Player::Defender => (&w.loss, &w.benefit),
    };
    let mut total = 0.0;
    for k in 0..expected {
        total += pbar.p[k] * (uncovered[k] * qpt.q1[k] + covered[k] * qpt.q2[k]);
    }
    Ok(total)
}

/// Weight vector `(w1, w2)` such that `w . (v1, v2)` over a defender vertex
/// equals the given player's expected payoff against the projected attacker
/// point `pbar`.
pub fn payoff_direction(
    pbar: &[f64],
    weights: &CompactWeights,
    player: Player,
) -> Vec<f64> {
    let s = weights.len();
    let w = weights.player(player);
    let (uncovered, covered) = match player {
        Player::Attacker => (&w.benefit, &w.loss),
        Player::Defender => (&w.loss, &w.benefit),
    };
    let mut out = Vec::with_capacity(2 * s);
    for k in 0..s {
        out.push(uncovered[k] * pbar[k]);
    }
    for k in 0..s {
        out.push(covered[k] * pbar[k]);
    }
    out
}

/// The original set-difference/intersection payoff for a pure pair.
pub fn direct_payoff(
    a: SubsetMask,
    d: SubsetMask,
    profile: &UtilityProfile,
    player: Player,
) -> f64 {
    match player {
        Player::Attacker => {
            profile.benefit_attacker.value(a.difference(d))
                + profile.loss_attacker.value(a.intersect(d))
        }
        Player::Defender => {
            profile.benefit_defender.value(a.intersect(d))
                + profile.loss_defender.value(a.difference(d))
        }
    }
}

/// Per-target probability of being defended under a mixed strategy.
pub fn coverage_marginals(distribution: &[(SubsetMask, f64)], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n];
    for &(d, prob) in distribution {
        for i in d.indices() {
            t[i] += prob;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{support_set, SetFunction, Utility};

    fn m(indices: &[usize]) -> SubsetMask {
        SubsetMask::from_indices(indices, 64).unwrap()
    }

    fn pair_support() -> SupportSet {
        // S = [{0},{1},{2},{0,1}] over n = 3.
        SupportSet::from_members(vec![m(&[0]), m(&[1]), m(&[2]), m(&[0, 1])], 3)
    }

    #[test]
    fn build_weights_places_entries() {
        let common = crate::model::CommonUtilityProfile {
            benefit_attacker: SetFunction::from_entries([(m(&[0, 1]), 2.0)]).unwrap(),
            loss_attacker: SetFunction::new(),
            benefit_defender: SetFunction::new(),
            loss_defender: SetFunction::new(),
        };
        let s = support_set(&common, 3);
        let w = build_weights(&common, &s);
        assert_eq!(w.attacker.benefit, vec![0.0, 0.0, 0.0, 2.0]);
        assert!(w.attacker.loss.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn attacker_vertex_examples() {
        let s = pair_support();
        let v = attacker_vertex(m(&[0, 1]), &s, 2).unwrap();
        assert_eq!(v.coords, vec![1.0, 1.0, 0.0, 1.0]);
        let v = attacker_vertex(SubsetMask::EMPTY, &s, 2).unwrap();
        assert_eq!(v.coords, vec![0.0; 4]);
        let v = attacker_vertex(m(&[2]), &s, 2).unwrap();
        assert_eq!(v.coords, vec![0.0, 0.0, 1.0, 0.0]);
        assert!(attacker_vertex(m(&[0, 1, 2]), &s, 2).is_err());
    }

    #[test]
    fn defender_vertex_examples() {
        let s = pair_support();
        let v = defender_vertex(m(&[1]), &s);
        assert_eq!(v.v1, vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(v.v2, vec![0.0, 1.0, 0.0, 0.0]);

        let full = defender_vertex(m(&[0, 1, 2]), &s);
        assert!(full.v1.iter().all(|&x| x == 0.0));
        assert!(full.v2.iter().all(|&x| x == 1.0));

        let empty = defender_vertex(SubsetMask::EMPTY, &s);
        assert!(empty.v1.iter().all(|&x| x == 1.0));
        assert!(empty.v2.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn vertex_round_trip() {
        let s = pair_support();
        for bits in 0u64..8 {
            let d = SubsetMask::from_bits_unchecked(bits);
            let v = defender_vertex(d, &s);
            assert_eq!(vertex_to_strategy(&v, 3, &s).unwrap(), d);
            // Singleton complementarity.
            for i in 0..3 {
                let pos = s.singleton_position(i);
                assert_eq!(v.v1[pos] + v.v2[pos], 1.0);
            }
        }
    }

    #[test]
    fn vertex_to_strategy_rejects_fractional() {
        let s = pair_support();
        let mut v = defender_vertex(m(&[1]), &s);
        v.v1[0] = 0.4;
        assert!(matches!(
            vertex_to_strategy(&v, 3, &s),
            Err(CompactError::NonBinaryCoordinate(0, _))
        ));
    }

    #[test]
    fn projections_match_point_masses() {
        let s = pair_support();
        let a = m(&[0, 1]);
        let pt = project_attacker(&[(a, 1.0)], &s).unwrap();
        assert_eq!(pt.p, attacker_vertex(a, &s, 2).unwrap().coords);

        let d = m(&[1]);
        let q = project_defender(&[(d, 1.0)], &s).unwrap();
        let v = defender_vertex(d, &s);
        assert_eq!(q.q1, v.v1);
        assert_eq!(q.q2, v.v2);
    }

    #[test]
    fn projection_uniform_attacker() {
        let s = pair_support();
        let pt = project_attacker(&[(m(&[0]), 0.5), (m(&[1]), 0.5)], &s).unwrap();
        assert_eq!(pt.p, vec![0.5, 0.5, 0.0, 0.0]);

        let third = 1.0 / 3.0;
        let pt = project_attacker(
            &[(m(&[0]), third), (m(&[1]), third), (m(&[2]), third)],
            &s,
        )
        .unwrap();
        for i in 0..3 {
            assert!((pt.p[s.singleton_position(i)] - third).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_complementarity_invariant() {
        let s = pair_support();
        let dist = [(m(&[0]), 0.25), (m(&[1, 2]), 0.35), (SubsetMask::EMPTY, 0.4)];
        let q = project_defender(&dist, &s).unwrap();
        for i in 0..3 {
            let pos = s.singleton_position(i);
            assert!((q.q1[pos] + q.q2[pos] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_rejects_bad_distribution() {
        let s = pair_support();
        assert!(project_attacker(&[(m(&[0]), 0.7)], &s).is_err());
        assert!(project_defender(&[(m(&[0]), 1.5), (m(&[1]), -0.5)], &s).is_err());
    }

    #[test]
    fn compact_payoff_matches_direct_on_pure_pairs() {
        // Non-additive instance over 3 targets, budget 2.
        let b = SetFunction::from_entries([
            (m(&[0]), 2.0),
            (m(&[1]), 1.0),
            (m(&[2]), 1.5),
            (m(&[0, 1]), 4.0),
            (m(&[1, 2]), 2.0),
        ])
        .unwrap();
        let l = SetFunction::from_entries([
            (m(&[0]), -1.0),
            (m(&[1]), -0.25),
            (m(&[0, 2]), -0.5),
        ])
        .unwrap();
        let space = crate::model::AttackerSpace::new(3, 2).unwrap();
        let profile = crate::model::zero_sum_complete(
            Utility::Sparse(b),
            Utility::Sparse(l),
            &space,
        )
        .unwrap();
        let common = profile.common_profile(&space).unwrap();
        let s = support_set(&common, 3);
        let w = build_weights(&common, &s);
        for &a in &space.enumerate().unwrap() {
            let pa = project_attacker(&[(a, 1.0)], &s).unwrap();
            for bits in 0u64..8 {
                let d = SubsetMask::from_bits_unchecked(bits);
                let qd = project_defender(&[(d, 1.0)], &s).unwrap();
                for player in [Player::Attacker, Player::Defender] {
                    let compact = compact_payoff(&pa, &qd, &w, player).unwrap();
                    let direct = direct_payoff(a, d, &profile, player);
                    assert!(
                        (compact - direct).abs() < 1e-9,
                        "A={a} D={d} {player:?}: {compact} vs {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn direct_payoff_pure_cases() {
        let b = SetFunction::from_entries([
            (m(&[0]), 3.0),
            (m(&[1]), 2.0),
            (m(&[0, 1]), 6.0),
        ])
        .unwrap();
        let l = SetFunction::from_entries([
            (m(&[0]), -1.0),
            (m(&[1]), -0.5),
            (m(&[0, 1]), -1.0),
        ])
        .unwrap();
        let space = crate::model::AttackerSpace::new(2, 2).unwrap();
        let profile = crate::model::zero_sum_complete(
            Utility::Sparse(b),
            Utility::Sparse(l),
            &space,
        )
        .unwrap();
        // Attacker hits {0,1}, defender covers {1}: benefit on {0}, loss on {1}.
        let got = direct_payoff(m(&[0, 1]), m(&[1]), &profile, Player::Attacker);
        assert_eq!(got, 3.0 + (-0.5));
        // Full interception.
        let got = direct_payoff(m(&[0]), m(&[0]), &profile, Player::Attacker);
        assert_eq!(got, -1.0);
        // No overlap: defender suffers the loss side only.
        let got = direct_payoff(m(&[0]), m(&[1]), &profile, Player::Defender);
        assert_eq!(got, -3.0);
    }

    #[test]
    fn coverage_marginal_examples() {
        assert_eq!(coverage_marginals(&[(m(&[0, 2]), 1.0)], 3), vec![1.0, 0.0, 1.0]);
        assert_eq!(
            coverage_marginals(&[(m(&[0]), 0.5), (m(&[1]), 0.5)], 3),
            vec![0.5, 0.5, 0.0]
        );
        assert_eq!(coverage_marginals(&[(SubsetMask::EMPTY, 1.0)], 2), vec![0.0, 0.0]);
    }
}
