//! Defender oracle: linear optimization over the vertices of the projected
//! defender polytope, reformulated as pseudo-Boolean optimization over the
//! defender's set system, with specialized backends per system shape.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::compact::{defender_vertex, DefenderVertex, SupportSet};
use crate::model::{SubsetMask, ENUMERATION_CAP};

/// Cost scale used by the knapsack dynamic program; real costs are rounded
/// to this resolution, so it is approximate for non-integer costs.
pub const BUDGET_COST_SCALE: f64 = 1e3;

/// Largest scaled budget the knapsack table will allocate.
pub const BUDGET_TABLE_CAP: usize = 1 << 26;

/// Largest single component a separable system may declare.
pub const SEPARABLE_COMPONENT_CAP: usize = 25;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("explicit strategy list must not be empty")]
    EmptyExplicitList,
    #[error("budget costs must be nonnegative; cost[{0}] = {1}")]
    NegativeCost(usize, f64),
    #[error("budget costs vector has length {0}, expected {1}")]
    BadCostLength(usize, usize),
    #[error("separable components must be pairwise disjoint; components {0} and {1} overlap")]
    OverlappingComponents(usize, usize),
    #[error("separable component {0} spans {1} targets, above the cap of {SEPARABLE_COMPONENT_CAP}")]
    ComponentTooLarge(usize, usize),
    #[error("strategy {0} has bits outside the {1}-target universe")]
    StrategyOutOfRange(SubsetMask, usize),
    #[error("set system too large to enumerate (more than {0} strategies)")]
    SystemTooLarge(usize),
    #[error("objective has non-singleton terms and requires enumerable set system")]
    RequiresEnumerableSystem,
    #[error("scaled budget {0} overflows the dynamic-programming table cap {BUDGET_TABLE_CAP}")]
    BudgetScaleOverflow(u64),
    #[error("weight vector has length {0}, expected {1}")]
    BadWeightLength(usize, usize),
}

/// Optimization direction for oracle queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptSense {
    Max,
    Min,
}

// ---------------------------------------------------------------------------
// Set systems
// ---------------------------------------------------------------------------

/// Description of the defender's feasible pure strategies.
#[derive(Clone, Debug)]
pub enum DefenderOracleSpec {
    /// Any subset of at most `k` targets.
    UniformMatroid { k: usize },
    /// A literal list of feasible strategies.
    Explicit { sets: Vec<SubsetMask> },
    /// One resource per entry; each resource covers at most one target drawn
    /// from its coverable set, distinct resources cover distinct targets, and
    /// resources may idle. Feasible strategies are the matchable target sets.
    Bipartite { resources: Vec<SubsetMask> },
    /// Costs per target with a total budget.
    Budget { costs: Vec<f64>, budget: f64 },
    /// Any subset of the union of pairwise disjoint components.
    Separable { components: Vec<SubsetMask> },
}

impl DefenderOracleSpec {
    pub fn validate(&self, n: usize) -> Result<(), OracleError> {
        match self {
            DefenderOracleSpec::UniformMatroid { .. } => Ok(()),
            DefenderOracleSpec::Explicit { sets } => {
                if sets.is_empty() {
                    return Err(OracleError::EmptyExplicitList);
                }
                for &s in sets {
                    if n < 64 && s.bits() >> n != 0 {
                        return Err(OracleError::StrategyOutOfRange(s, n));
                    }
                }
                Ok(())
            }
            DefenderOracleSpec::Bipartite { resources } => {
                for &r in resources {
                    if n < 64 && r.bits() >> n != 0 {
                        return Err(OracleError::StrategyOutOfRange(r, n));
                    }
                }
                Ok(())
            }
            DefenderOracleSpec::Budget { costs, budget: _ } => {
                if costs.len() != n {
                    return Err(OracleError::BadCostLength(costs.len(), n));
                }
                for (i, &c) in costs.iter().enumerate() {
                    if c < 0.0 {
                        return Err(OracleError::NegativeCost(i, c));
                    }
                }
                Ok(())
            }
            DefenderOracleSpec::Separable { components } => {
                for (i, &a) in components.iter().enumerate() {
                    if n < 64 && a.bits() >> n != 0 {
                        return Err(OracleError::StrategyOutOfRange(a, n));
                    }
                    if a.card() > SEPARABLE_COMPONENT_CAP {
                        return Err(OracleError::ComponentTooLarge(i, a.card()));
                    }
                    for (j, &b) in components.iter().enumerate().skip(i + 1) {
                        if !a.intersect(b).is_empty() {
                            return Err(OracleError::OverlappingComponents(i, j));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Whether `d` is a feasible pure strategy.
    pub fn is_feasible(&self, d: SubsetMask, n: usize) -> bool {
        if n < 64 && d.bits() >> n != 0 {
            return false;
        }
        match self {
            DefenderOracleSpec::UniformMatroid { k } => d.card() <= *k,
            DefenderOracleSpec::Explicit { sets } => sets.contains(&d),
            DefenderOracleSpec::Bipartite { resources } => matchable(resources, d),
            DefenderOracleSpec::Budget { costs, budget } => {
                d.indices().map(|i| costs[i]).sum::<f64>() <= *budget + 1e-12
            }
            DefenderOracleSpec::Separable { components } => {
                let union = components
                    .iter()
                    .fold(SubsetMask::EMPTY, |acc, &c| acc.union(c));
                d.is_subset_of(union)
            }
        }
    }
}

/// Checks whether every target of `d` can be matched to a distinct resource.
fn matchable(resources: &[SubsetMask], d: SubsetMask) -> bool {
    let targets: Vec<usize> = d.indices().collect();
    if targets.len() > resources.len() {
        return false;
    }
    let mut owner = vec![usize::MAX; resources.len()];
    for &t in &targets {
        let mut seen = vec![false; resources.len()];
        if !augment(resources, t, &mut owner, &mut seen) {
            return false;
        }
    }
    true
}

/// Kuhn-style augmenting path: try to give target `t` some resource.
fn augment(
    resources: &[SubsetMask],
    t: usize,
    owner: &mut [usize],
    seen: &mut [bool],
) -> bool {
    for (r, &coverable) in resources.iter().enumerate() {
        if coverable.contains(t) && !seen[r] {
            seen[r] = true;
            if owner[r] == usize::MAX || {
                let prev = owner[r];
                augment(resources, prev, owner, seen)
            } {
                owner[r] = t;
                return true;
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Pseudo-Boolean objectives
// ---------------------------------------------------------------------------

/// A multilinear objective over binary target indicators:
/// `constant + sum over nonempty masks V of coeff(V) * prod over i in V of x_i`.
#[derive(Clone, Debug, Default)]
pub struct PseudoBooleanObjective {
    pub terms: HashMap<SubsetMask, f64>,
    pub n: usize,
}

impl PseudoBooleanObjective {
    pub fn constant(&self) -> f64 {
        self.terms.get(&SubsetMask::EMPTY).copied().unwrap_or(0.0)
    }

    pub fn evaluate(&self, x: SubsetMask) -> f64 {
        self.terms
            .iter()
            .map(|(&v, &w)| if v.is_subset_of(x) { w } else { 0.0 })
            .sum()
    }

    /// Per-target linear coefficients when no term spans two or more targets.
    pub fn linear_coefficients(&self) -> Option<Vec<f64>> {
        let mut coeffs = vec![0.0; self.n];
        for (&v, &w) in &self.terms {
            match v.card() {
                0 => {}
                1 => coeffs[v.indices().next().unwrap()] += w,
                _ => return None,
            }
        }
        Some(coeffs)
    }
}

/// Expands the two-block vertex objective
/// `sum_V w1[V] * prod_{i in V} (1 - x_i) + w2[V] * prod_{i in V} x_i`
/// into a single multilinear form by inclusion-exclusion.
pub fn to_pseudo_boolean(
    w1: &[f64],
    w2: &[f64],
    support: &SupportSet,
) -> Result<PseudoBooleanObjective, OracleError> {
    if w1.len() != support.len() {
        return Err(OracleError::BadWeightLength(w1.len(), support.len()));
    }
    if w2.len() != support.len() {
        return Err(OracleError::BadWeightLength(w2.len(), support.len()));
    }
    let mut terms: HashMap<SubsetMask, f64> = HashMap::new();
    for (idx, &v) in support.members().iter().enumerate() {
        if w2[idx] != 0.0 {
            *terms.entry(v).or_insert(0.0) += w2[idx];
        }
        if w1[idx] != 0.0 {
            for t in v.subsets() {
                let sign = if t.card() % 2 == 0 { 1.0 } else { -1.0 };
                *terms.entry(t).or_insert(0.0) += sign * w1[idx];
            }
        }
    }
    terms.retain(|_, w| *w != 0.0);
    Ok(PseudoBooleanObjective { terms, n: support.n() })
}

// ---------------------------------------------------------------------------
// Solving
// ---------------------------------------------------------------------------

/// A solved oracle query: the optimal strategy, its objective value, and,
/// when the query came through `dop_linear`, its projected vertex.
#[derive(Clone, Debug)]
pub struct OracleAnswer {
    pub strategy: SubsetMask,
    pub objective_value: f64,
    pub vertex: Option<DefenderVertex>,
}

/// Tracks the running optimum with the deterministic tie rule: strictly
/// better value wins, equal value prefers the smaller bit pattern.
struct Best {
    mask: SubsetMask,
    value: f64,
    any: bool,
}

impl Best {
    fn new() -> Self {
        Best { mask: SubsetMask::EMPTY, value: f64::NEG_INFINITY, any: false }
    }

    fn offer(&mut self, mask: SubsetMask, value: f64) {
        if !self.any
            || value > self.value
            || (value == self.value && mask.bits() < self.mask.bits())
        {
            self.mask = mask;
            self.value = value;
            self.any = true;
        }
    }
}

/// Optimizes a pseudo-Boolean objective over the set system. Singleton-only
/// objectives route to the specialized backend for the system; everything
/// else falls back to enumeration.
pub fn oracle_solve(
    spec: &DefenderOracleSpec,
    objective: &PseudoBooleanObjective,
    sense: OptSense,
) -> Result<(SubsetMask, f64), OracleError> {
    match sense {
        OptSense::Max => oracle_solve_max(spec, objective),
        OptSense::Min => {
            let negated = PseudoBooleanObjective {
                terms: objective.terms.iter().map(|(&m, &w)| (m, -w)).collect(),
                n: objective.n,
            };
            let (mask, value) = oracle_solve_max(spec, &negated)?;
            Ok((mask, -value))
        }
    }
}

fn oracle_solve_max(
    spec: &DefenderOracleSpec,
    objective: &PseudoBooleanObjective,
) -> Result<(SubsetMask, f64), OracleError> {
    let constant = objective.constant();
    if let Some(linear) = objective.linear_coefficients() {
        match spec {
            DefenderOracleSpec::UniformMatroid { k } => {
                return Ok(matroid_greedy(&linear, *k, constant));
            }
            DefenderOracleSpec::Budget { costs, budget } => {
                return knapsack_dp(&linear, costs, *budget, constant);
            }
            DefenderOracleSpec::Bipartite { resources } => {
                return Ok(bipartite_greedy(&linear, resources, constant));
            }
            DefenderOracleSpec::Separable { components } => {
                return separable_solve(components, objective);
            }
            DefenderOracleSpec::Explicit { .. } => {}
        }
    } else if let DefenderOracleSpec::Separable { components } = spec {
        // Non-singleton terms that still respect component boundaries can be
        // split; anything crossing a component falls through to enumeration.
        let union = components
            .iter()
            .fold(SubsetMask::EMPTY, |acc, &c| acc.union(c));
        let splittable = objective.terms.keys().all(|&v| {
            v.is_empty()
                || components.iter().any(|&c| v.intersect(union).is_subset_of(c))
        });
        if splittable {
            return separable_solve(components, objective);
        }
    }
    let universe = objective.n.max(universe_size(spec));
    let mut best = Best::new();
    for d in enumerate_system_for(spec, universe)? {
        best.offer(d, objective.evaluate(d));
    }
    if !best.any {
        return Err(OracleError::EmptyExplicitList);
    }
    Ok((best.mask, best.value))
}

/// Take up to `k` positive-weight targets, largest first; index order breaks
/// weight ties so the returned mask is the smallest optimum.
fn matroid_greedy(weights: &[f64], k: usize, constant: f64) -> (SubsetMask, f64) {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b))
    });
    let mut mask = 0u64;
    let mut value = constant;
    for &i in order.iter().take(k) {
        if weights[i] > 0.0 {
            mask |= 1 << i;
            value += weights[i];
        }
    }
    (SubsetMask::from_bits_unchecked(mask), value)
}

/// 0/1 knapsack over scaled integer costs. Exact for costs that are already
/// multiples of the scale resolution; approximate otherwise.
fn knapsack_dp(
    weights: &[f64],
    costs: &[f64],
    budget: f64,
    constant: f64,
) -> Result<(SubsetMask, f64), OracleError> {
    let n = weights.len();
    if budget < 0.0 {
        return Ok((SubsetMask::EMPTY, constant));
    }
    let cap_raw = (budget * BUDGET_COST_SCALE + 1e-6).floor();
    if cap_raw >= BUDGET_TABLE_CAP as f64 {
        return Err(OracleError::BudgetScaleOverflow(cap_raw as u64));
    }
    let cap = cap_raw as usize;
    let scaled: Vec<usize> = costs
        .iter()
        .map(|&c| (c * BUDGET_COST_SCALE).round() as usize)
        .collect();
    // Only positive weights are worth buying.
    let ordered: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    // tables[t][c] = max value using the first t items within capacity c.
    // Items are processed in ascending index order, so the backward
    // reconstruction decides the highest index first and can prefer
    // excluding it, which yields the smallest optimal bit pattern.
    let mut tables: Vec<Vec<f64>> = Vec::with_capacity(ordered.len() + 1);
    tables.push(vec![0.0; cap + 1]);
    for &i in &ordered {
        let prev = tables.last().unwrap();
        let mut next = prev.clone();
        let (w, c) = (weights[i], scaled[i]);
        for cap_now in c..=cap {
            let take = prev[cap_now - c] + w;
            if take > next[cap_now] {
                next[cap_now] = take;
            }
        }
        tables.push(next);
    }
    // Walk back: leave an item out whenever that keeps the optimum.
    let mut mask = 0u64;
    let mut cap_now = cap;
    for (stage, &i) in ordered.iter().enumerate().rev() {
        let with_item = tables[stage + 1][cap_now];
        let without_item = tables[stage][cap_now];
        if (with_item - without_item).abs() <= 1e-12 {
            continue;
        }
        mask |= 1 << i;
        cap_now -= scaled[i];
    }
    let total = tables.last().unwrap()[cap];
    Ok((SubsetMask::from_bits_unchecked(mask), total + constant))
}

/// Greedy over the transversal matroid of matchable target sets: targets by
/// descending weight, kept when the partial set still admits a matching.
fn bipartite_greedy(
    weights: &[f64],
    resources: &[SubsetMask],
    constant: f64,
) -> (SubsetMask, f64) {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b))
    });
    let mut chosen = SubsetMask::EMPTY;
    let mut value = constant;
    for &t in &order {
        if weights[t] <= 0.0 {
            break;
        }
        let candidate = chosen.union(SubsetMask::singleton(t));
        if matchable(resources, candidate) {
            chosen = candidate;
            value += weights[t];
        }
    }
    (chosen, value)
}

/// Splits the objective across disjoint components and enumerates each.
fn separable_solve(
    components: &[SubsetMask],
    objective: &PseudoBooleanObjective,
) -> Result<(SubsetMask, f64), OracleError> {
    let mut total_mask = SubsetMask::EMPTY;
    let mut total_value = objective.constant();
    for &component in components {
        let indices: Vec<usize> = component.indices().collect();
        let mut best = Best::new();
        for choice in 0u64..(1u64 << indices.len()) {
            let mut mask = 0u64;
            for (b, &i) in indices.iter().enumerate() {
                if choice >> b & 1 == 1 {
                    mask |= 1 << i;
                }
            }
            let mask = SubsetMask::from_bits_unchecked(mask);
            let value: f64 = objective
                .terms
                .iter()
                .filter(|(&v, _)| !v.is_empty() && v.is_subset_of(component))
                .map(|(&v, &w)| if v.is_subset_of(mask) { w } else { 0.0 })
                .sum();
            best.offer(mask, value);
        }
        total_mask = total_mask.union(best.mask);
        total_value += best.value;
    }
    Ok((total_mask, total_value))
}

/// Full defender oracle: optimizes `w . (v1, v2)` over the projected
/// vertices, returning strategy, value, and vertex.
pub fn dop_linear(
    spec: &DefenderOracleSpec,
    w: &[f64],
    support: &SupportSet,
    sense: OptSense,
) -> Result<OracleAnswer, OracleError> {
    if w.len() != 2 * support.len() {
        return Err(OracleError::BadWeightLength(w.len(), 2 * support.len()));
    }
    let (w1, w2) = w.split_at(support.len());
    let objective = to_pseudo_boolean(w1, w2, support)?;
    let (strategy, objective_value) = oracle_solve(spec, &objective, sense)?;
    let vertex = defender_vertex(strategy, support);
    Ok(OracleAnswer { strategy, objective_value, vertex: Some(vertex) })
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// Lists every feasible strategy exactly once, canonically ordered. Errors
/// when the system exceeds the enumeration cap.
pub fn enumerate_system(
    spec: &DefenderOracleSpec,
) -> Result<Vec<SubsetMask>, OracleError> {
    enumerate_system_for(spec, universe_size(spec))
}

fn universe_size(spec: &DefenderOracleSpec) -> usize {
    match spec {
        DefenderOracleSpec::UniformMatroid { .. } => 0, // needs explicit n
        DefenderOracleSpec::Explicit { sets } => sets
            .iter()
            .map(|s| 64 - s.bits().leading_zeros() as usize)
            .max()
            .unwrap_or(0),
        DefenderOracleSpec::Bipartite { resources } => resources
            .iter()
            .map(|s| 64 - s.bits().leading_zeros() as usize)
            .max()
            .unwrap_or(0),
        DefenderOracleSpec::Budget { costs, .. } => costs.len(),
        DefenderOracleSpec::Separable { components } => components
            .iter()
            .map(|s| 64 - s.bits().leading_zeros() as usize)
            .max()
            .unwrap_or(0),
    }
}

/// Enumeration with the universe size given explicitly; the uniform matroid
/// needs it since its description does not mention targets.
pub fn enumerate_system_for(
    spec: &DefenderOracleSpec,
    n: usize,
) -> Result<Vec<SubsetMask>, OracleError> {
    let mut out: Vec<SubsetMask> = match spec {
        DefenderOracleSpec::UniformMatroid { k } => {
            let space = crate::model::AttackerSpace::new(n, (*k).min(n))
                .map_err(|_| OracleError::SystemTooLarge(ENUMERATION_CAP))?;
            space
                .enumerate()
                .map_err(|_| OracleError::SystemTooLarge(ENUMERATION_CAP))?
        }
        DefenderOracleSpec::Explicit { sets } => {
            let mut dedup: Vec<SubsetMask> =
                sets.iter().copied().collect::<HashSet<_>>().into_iter().collect();
            dedup.sort_by_key(|m| m.canonical_key());
            dedup
        }
        DefenderOracleSpec::Bipartite { resources } => {
            let mut found: HashSet<SubsetMask> = HashSet::new();
            let mut stack = vec![(0usize, SubsetMask::EMPTY)];
            while let Some((r, covered)) = stack.pop() {
                if r == resources.len() {
                    found.insert(covered);
                    if found.len() > ENUMERATION_CAP {
                        return Err(OracleError::SystemTooLarge(ENUMERATION_CAP));
                    }
                    continue;
                }
                stack.push((r + 1, covered)); // resource idles
                for t in resources[r].indices() {
                    if !covered.contains(t) {
                        stack.push((r + 1, covered.union(SubsetMask::singleton(t))));
                    }
                }
            }
            let mut all: Vec<SubsetMask> = found.into_iter().collect();
            all.sort_by_key(|m| m.canonical_key());
            all
        }
        DefenderOracleSpec::Budget { costs, budget } => {
            let mut found: Vec<SubsetMask> = Vec::new();
            // Depth-first over targets with remaining-budget pruning.
            let mut stack = vec![(0usize, SubsetMask::EMPTY, 0.0f64)];
            while let Some((i, chosen, spent)) = stack.pop() {
                if i == costs.len() {
                    found.push(chosen);
                    if found.len() > ENUMERATION_CAP {
                        return Err(OracleError::SystemTooLarge(ENUMERATION_CAP));
                    }
                    continue;
                }
                stack.push((i + 1, chosen, spent));
                let with = spent + costs[i];
                if with <= *budget + 1e-12 {
                    stack.push((i + 1, chosen.union(SubsetMask::singleton(i)), with));
                }
            }
            found.sort_by_key(|m| m.canonical_key());
            found
        }
        DefenderOracleSpec::Separable { components } => {
            let total_bits: usize = components.iter().map(|c| c.card()).sum();
            if total_bits >= 21 {
                return Err(OracleError::SystemTooLarge(ENUMERATION_CAP));
            }
            let all_indices: Vec<usize> = {
                let union = components
                    .iter()
                    .fold(SubsetMask::EMPTY, |acc, &c| acc.union(c));
                union.indices().collect()
            };
            let mut out = Vec::with_capacity(1 << all_indices.len());
            for choice in 0u64..(1u64 << all_indices.len()) {
                let mut mask = 0u64;
                for (b, &i) in all_indices.iter().enumerate() {
                    if choice >> b & 1 == 1 {
                        mask |= 1 << i;
                    }
                }
                out.push(SubsetMask::from_bits_unchecked(mask));
            }
            out.sort_by_key(|m| m.canonical_key());
            out
        }
    };
    if out.len() > ENUMERATION_CAP {
        return Err(OracleError::SystemTooLarge(ENUMERATION_CAP));
    }
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compact::SupportSet;

    fn m(indices: &[usize]) -> SubsetMask {
        SubsetMask::from_indices(indices, 64).unwrap()
    }

    fn singleton_support(n: usize) -> SupportSet {
        SupportSet::from_members((0..n).map(SubsetMask::singleton).collect(), n)
    }

    fn singleton_objective(weights: &[f64]) -> PseudoBooleanObjective {
        let terms = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(i, &w)| (SubsetMask::singleton(i), w))
            .collect();
        PseudoBooleanObjective { terms, n: weights.len() }
    }

    #[test]
    fn pseudo_boolean_one_variable() {
        let s = singleton_support(1);
        let obj = to_pseudo_boolean(&[2.0], &[5.0], &s).unwrap();
        assert_eq!(obj.constant(), 2.0);
        assert_eq!(obj.terms.get(&m(&[0])).copied().unwrap_or(0.0), 3.0);
    }

    #[test]
    fn pseudo_boolean_pair_expansion() {
        // S = [{0},{1},{0,1}], w1 = (1,2,3), w2 = (4,5,6):
        // expands to 6 + 0*x0 + 0*x1 + 9*x0*x1.
        let s = SupportSet::from_members(vec![m(&[0]), m(&[1]), m(&[0, 1])], 2);
        let obj = to_pseudo_boolean(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &s).unwrap();
        assert_eq!(obj.constant(), 6.0);
        assert_eq!(obj.terms.get(&m(&[0])).copied().unwrap_or(0.0), 0.0);
        assert_eq!(obj.terms.get(&m(&[1])).copied().unwrap_or(0.0), 0.0);
        assert_eq!(obj.terms.get(&m(&[0, 1])).copied().unwrap_or(0.0), 9.0);
    }

    #[test]
    fn pseudo_boolean_zero_weights() {
        let s = SupportSet::from_members(vec![m(&[0]), m(&[1]), m(&[0, 1])], 2);
        let obj = to_pseudo_boolean(&[0.0; 3], &[0.0; 3], &s).unwrap();
        assert!(obj.terms.is_empty());
    }

    #[test]
    fn pseudo_boolean_identity_on_all_binary_points() {
        // The expanded form must agree with the two-block form everywhere.
        let s = SupportSet::from_members(
            vec![m(&[0]), m(&[1]), m(&[2]), m(&[0, 2]), m(&[1, 2])],
            3,
        );
        let w1 = [0.3, -1.2, 2.0, 0.7, -0.4];
        let w2 = [-0.8, 0.5, 1.1, -1.3, 0.9];
        let obj = to_pseudo_boolean(&w1, &w2, &s).unwrap();
        for bits in 0u64..8 {
            let x = SubsetMask::from_bits_unchecked(bits);
            let xc = x.complement(3);
            let mut direct = 0.0;
            for (idx, &v) in s.members().iter().enumerate() {
                if v.is_subset_of(xc) {
                    direct += w1[idx];
                }
                if v.is_subset_of(x) {
                    direct += w2[idx];
                }
            }
            assert!((obj.evaluate(x) - direct).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn matroid_top_k() {
        let spec = DefenderOracleSpec::UniformMatroid { k: 2 };
        let obj = singleton_objective(&[5.0, 1.0, 3.0]);
        let (mask, value) = oracle_solve(&spec, &obj, OptSense::Max).unwrap();
        assert_eq!(mask, m(&[0, 2]));
        assert_eq!(value, 8.0);
    }

    #[test]
    fn matroid_skips_nonpositive() {
        let spec = DefenderOracleSpec::UniformMatroid { k: 3 };
        let obj = singleton_objective(&[5.0, -1.0, 0.0]);
        let (mask, value) = oracle_solve(&spec, &obj, OptSense::Max).unwrap();
        assert_eq!(mask, m(&[0]));
        assert_eq!(value, 5.0);
    }

    #[test]
    fn budget_exhaustive_example() {
        let spec = DefenderOracleSpec::Budget { costs: vec![2.0, 3.0, 4.0], budget: 5.0 };
        let obj = singleton_objective(&[3.0, 4.0, 5.0]);
        let (mask, value) = oracle_solve(&spec, &obj, OptSense::Max).unwrap();
        assert_eq!(mask, m(&[0, 1]));
        assert_eq!(value, 7.0);
    }

    #[test]
    fn bipartite_matching_example() {
        let spec = DefenderOracleSpec::Bipartite {
            resources: vec![m(&[0, 1]), m(&[1, 2])],
        };
        let obj = singleton_objective(&[1.0, 5.0, 2.0]);
        let (mask, value) = oracle_solve(&spec, &obj, OptSense::Max).unwrap();
        assert_eq!(mask, m(&[1, 2]));
        assert_eq!(value, 7.0);
    }

    #[test]
    fn separable_splits_components() {
        let spec = DefenderOracleSpec::Separable {
            components: vec![m(&[0, 1]), m(&[2, 3])],
        };
        let mut obj = singleton_objective(&[2.0, -1.0, 3.0, 0.5]);
        obj.n = 4;
        let (mask, value) = oracle_solve(&spec, &obj, OptSense::Max).unwrap();
        assert_eq!(mask, m(&[0, 2, 3]));
        assert_eq!(value, 5.5);
    }

    #[test]
    fn min_sense_negates() {
        let spec = DefenderOracleSpec::UniformMatroid { k: 1 };
        let obj = singleton_objective(&[5.0, -2.0]);
        let (mask, value) = oracle_solve(&spec, &obj, OptSense::Min).unwrap();
        assert_eq!(mask, m(&[1]));
        assert_eq!(value, -2.0);
    }

    #[test]
    fn enumerate_examples() {
        let spec = DefenderOracleSpec::UniformMatroid { k: 1 };
        let all = enumerate_system_for(&spec, 3).unwrap();
        assert_eq!(all, vec![SubsetMask::EMPTY, m(&[0]), m(&[1]), m(&[2])]);

        let spec = DefenderOracleSpec::Explicit {
            sets: vec![m(&[1]), m(&[0]), m(&[1])],
        };
        let all = enumerate_system(&spec).unwrap();
        assert_eq!(all, vec![m(&[0]), m(&[1])]);

        let spec = DefenderOracleSpec::Budget { costs: vec![1.0, 1.0], budget: 1.0 };
        let all = enumerate_system(&spec).unwrap();
        assert_eq!(all, vec![SubsetMask::EMPTY, m(&[0]), m(&[1])]);
    }

    #[test]
    fn enumerate_bipartite_respects_matching() {
        let spec = DefenderOracleSpec::Bipartite { resources: vec![m(&[0, 1]), m(&[0])] };
        let all = enumerate_system(&spec).unwrap();
        // {0,1} is matchable (r0 -> 1, r1 -> 0); {1} via r0; {0} via either.
        assert_eq!(all, vec![SubsetMask::EMPTY, m(&[0]), m(&[1]), m(&[0, 1])]);
    }

    #[test]
    fn dop_linear_zero_weights_gives_constant() {
        let s = singleton_support(3);
        let spec = DefenderOracleSpec::UniformMatroid { k: 2 };
        let ans = dop_linear(&spec, &[0.0; 6], &s, OptSense::Min).unwrap();
        assert_eq!(ans.objective_value, 0.0);
    }

    #[test]
    fn dop_linear_cardinality_objective() {
        // w2 = 1 on singleton coordinates counts covered targets.
        let s = singleton_support(4);
        let spec = DefenderOracleSpec::UniformMatroid { k: 2 };
        let mut w = vec![0.0; 8];
        for i in 0..4 {
            w[4 + s.singleton_position(i)] = 1.0;
        }
        let ans = dop_linear(&spec, &w, &s, OptSense::Max).unwrap();
        assert_eq!(ans.objective_value, 2.0);
        assert_eq!(ans.strategy.card(), 2);
    }

    #[test]
    fn dop_linear_matches_explicit_brute_force() {
        let s = SupportSet::from_members(
            vec![m(&[0]), m(&[1]), m(&[2]), m(&[1, 2])],
            3,
        );
        let spec = DefenderOracleSpec::Explicit { sets: vec![m(&[0]), m(&[1, 2])] };
        let w: Vec<f64> = vec![0.7, -0.3, 1.9, -2.5, 0.2, 1.4, -0.6, 3.1];
        let ans = dop_linear(&spec, &w, &s, OptSense::Max).unwrap();
        let mut best = f64::NEG_INFINITY;
        for d in [m(&[0]), m(&[1, 2])] {
            let v = defender_vertex(d, &s);
            let stacked = v.stacked();
            let val: f64 = w.iter().zip(&stacked).map(|(a, b)| a * b).sum();
            best = best.max(val);
        }
        assert!((ans.objective_value - best).abs() < 1e-9);
    }

    #[test]
    fn oracle_matches_enumeration_on_random_weights() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 6;
        let s = singleton_support(n);
        let specs: Vec<DefenderOracleSpec> = vec![
            DefenderOracleSpec::UniformMatroid { k: 3 },
            DefenderOracleSpec::Budget {
                costs: vec![1.0, 2.0, 1.5, 3.0, 2.5, 1.0],
                budget: 5.0,
            },
            DefenderOracleSpec::Bipartite {
                resources: vec![m(&[0, 1]), m(&[2, 3]), m(&[3, 4, 5])],
            },
            DefenderOracleSpec::Separable { components: vec![m(&[0, 1, 2]), m(&[3, 4])] },
            DefenderOracleSpec::Explicit {
                sets: vec![m(&[0]), m(&[1, 2]), m(&[3, 4, 5]), SubsetMask::EMPTY],
            },
        ];
        for spec in &specs {
            let all = enumerate_system_for(spec, n).unwrap();
            for _ in 0..60 {
                let w: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let ans = dop_linear(spec, &w, &s, OptSense::Max).unwrap();
                let mut best = f64::NEG_INFINITY;
                for &d in &all {
                    let v = defender_vertex(d, &s);
                    let val: f64 =
                        w.iter().zip(v.stacked().iter()).map(|(a, b)| a * b).sum();
                    best = best.max(val);
                }
                assert!(
                    (ans.objective_value - best).abs() < 1e-9,
                    "{spec:?}: oracle {} vs brute {best}",
                    ans.objective_value
                );
            }
        }
    }

    #[test]
    fn knapsack_matches_enumeration_integer_costs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..40 {
            let n = rng.gen_range(3..10);
            let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(1..20) as f64).collect();
            let budget = rng.gen_range(5..40) as f64;
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..5.0)).collect();
            let spec = DefenderOracleSpec::Budget { costs: costs.clone(), budget };
            let obj = singleton_objective(&weights);
            let (_, got) = oracle_solve(&spec, &obj, OptSense::Max).unwrap();
            let mut best = f64::NEG_INFINITY;
            for d in enumerate_system(&spec).unwrap() {
                best = best.max(obj.evaluate(d));
            }
            assert!((got - best).abs() < 1e-9);
        }
    }

    #[test]
    fn validation_rejects_bad_specs() {
        assert!(DefenderOracleSpec::Explicit { sets: vec![] }.validate(3).is_err());
        assert!(DefenderOracleSpec::Budget { costs: vec![1.0, -0.5], budget: 2.0 }
            .validate(2)
            .is_err());
        assert!(DefenderOracleSpec::Separable {
            components: vec![m(&[0, 1]), m(&[1, 2])]
        }
        .validate(3)
        .is_err());
    }
}
