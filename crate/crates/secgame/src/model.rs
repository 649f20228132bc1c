//! Game model: targets, pure-strategy spaces, set-valued utilities and their
//! transforms, and the network-value utility generator.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::compact::SupportSet;
use crate::oracles::DefenderOracleSpec;

/// Hard upper bound on the number of targets so a subset fits in one word.
pub const MAX_TARGETS: usize = 64;

/// Cap on enumeration work done while validating or expanding strategy spaces.
pub const ENUMERATION_CAP: usize = 1 << 20;

/// Tolerance below which a transformed (common) utility counts as zero.
pub const COMMON_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("target count {0} exceeds the supported maximum of {MAX_TARGETS}")]
    TooManyTargets(usize),
    #[error("subset {mask:#x} has bits at or above target count {n}")]
    MaskOutOfRange { mask: u64, n: usize },
    #[error("node index {0} out of range for {1} nodes")]
    NodeOutOfRange(usize, usize),
    #[error("self-loop on node {0}; the graph must be simple")]
    SelfLoop(usize),
    #[error("the empty set must have utility 0, got {0}")]
    NonzeroEmptySet(f64),
    #[error("domain is not downward-closed: {missing} (subset of {parent}) is absent")]
    DomainNotClosed { parent: SubsetMask, missing: SubsetMask },
    #[error("benefit must exceed loss on every attacker strategy; violated at {0} (benefit {1}, loss {2})")]
    BenefitNotAboveLoss(SubsetMask, f64, f64),
    #[error("utility entry {0} has more than attacker_budget = {1} targets and cannot affect play")]
    EntryBeyondBudget(SubsetMask, usize),
    #[error("additive utility vector has length {0}, expected {1}")]
    BadVectorLength(usize, usize),
    #[error("attacker budget {0} exceeds target count {1}")]
    BudgetExceedsTargets(usize, usize),
    #[error("strategy space too large to enumerate ({0} exceeds cap {ENUMERATION_CAP})")]
    SpaceTooLarge(u128),
    #[error("cannot decide additivity: combined singleton support spans {0} targets (limit 20)")]
    AdditivityUndecidable(usize),
}

// ---------------------------------------------------------------------------
// SubsetMask
// ---------------------------------------------------------------------------

/// A subset of targets `0..n-1` packed as a bitmask. The universal currency
/// for pure strategies on both sides.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SubsetMask(u64);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    /// Wraps raw bits, checking that only bits below `n` are set.
    pub fn new(bits: u64, n: usize) -> Result<Self, ModelError> {
        if n > MAX_TARGETS {
            return Err(ModelError::TooManyTargets(n));
        }
        if n < MAX_TARGETS && bits >> n != 0 {
            return Err(ModelError::MaskOutOfRange { mask: bits, n });
        }
        Ok(SubsetMask(bits))
    }

    /// Builds a mask from target indices, validating against `n`.
    pub fn from_indices(indices: &[usize], n: usize) -> Result<Self, ModelError> {
        let mut bits = 0u64;
        for &i in indices {
            if i >= n {
                return Err(ModelError::NodeOutOfRange(i, n));
            }
            bits |= 1 << i;
        }
        SubsetMask::new(bits, n)
    }

    pub fn from_bits_unchecked(bits: u64) -> Self {
        SubsetMask(bits)
    }

    pub fn singleton(i: usize) -> Self {
        SubsetMask(1 << i)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn card(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn is_subset_of(self, other: SubsetMask) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 | other.0)
    }

    pub fn intersect(self, other: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 & other.0)
    }

    pub fn difference(self, other: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 & !other.0)
    }

    /// Complement within the universe `[n]`.
    pub fn complement(self, n: usize) -> SubsetMask {
        let full = if n == MAX_TARGETS { u64::MAX } else { (1u64 << n) - 1 };
        SubsetMask(full & !self.0)
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn to_indices(self) -> Vec<usize> {
        self.indices().collect()
    }

    /// Enumerates every subset of this mask, the empty set included.
    pub fn subsets(self) -> impl Iterator<Item = SubsetMask> {
        let mask = self.0;
        let mut sub = 0u64;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = SubsetMask(sub);
            if sub == mask {
                done = true;
            } else {
                sub = (sub.wrapping_sub(mask)) & mask;
            }
            Some(out)
        })
    }

    /// Canonical sort key: cardinality first, then ascending bit pattern.
    pub fn canonical_key(self) -> (usize, u64) {
        (self.card(), self.0)
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Which side of the game a payoff belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Player {
    Attacker,
    Defender,
}

// ---------------------------------------------------------------------------
// SetFunction
// ---------------------------------------------------------------------------

/// A sparse set function `2^[n] -> R`. Absent subsets evaluate to 0 and the
/// empty set is pinned to 0.
#[derive(Clone, Debug, Default)]
pub struct SetFunction {
    entries: HashMap<SubsetMask, f64>,
}

impl SetFunction {
    pub fn new() -> Self {
        SetFunction { entries: HashMap::new() }
    }

    pub fn from_entries<I: IntoIterator<Item = (SubsetMask, f64)>>(
        entries: I,
    ) -> Result<Self, ModelError> {
        let mut f = SetFunction::new();
        for (mask, value) in entries {
            f.insert(mask, value)?;
        }
        Ok(f)
    }

    /// Adds `value` to the entry for `mask`. Rejects nonzero values on the
    /// empty set; exact zeros are dropped.
    pub fn insert(&mut self, mask: SubsetMask, value: f64) -> Result<(), ModelError> {
        if mask.is_empty() {
            if value != 0.0 {
                return Err(ModelError::NonzeroEmptySet(value));
            }
            return Ok(());
        }
        let slot = self.entries.entry(mask).or_insert(0.0);
        *slot += value;
        if *slot == 0.0 {
            self.entries.remove(&mask);
        }
        Ok(())
    }

    pub fn value(&self, mask: SubsetMask) -> f64 {
        if mask.is_empty() {
            return 0.0;
        }
        self.entries.get(&mask).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = (SubsetMask, f64)> + '_ {
        self.entries.iter().map(|(&m, &v)| (m, v))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted in canonical subset order, for deterministic output.
    pub fn sorted_entries(&self) -> Vec<(SubsetMask, f64)> {
        let mut v: Vec<_> = self.support().collect();
        v.sort_by_key(|(m, _)| m.canonical_key());
        v
    }

    pub fn negated(&self) -> SetFunction {
        SetFunction {
            entries: self.entries.iter().map(|(&m, &v)| (m, -v)).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// Inverts `f` on a downward-closed `domain`:
/// `g(U) = sum over V subset of U of (-1)^{|U\V|} f(V)`.
///
/// The sum runs over the stored entries of `f`, so cost is
/// `O(|domain| * support(f))`.
pub fn mobius_transform(
    f: &SetFunction,
    domain: &[SubsetMask],
) -> Result<SetFunction, ModelError> {
    let have: HashSet<SubsetMask> = domain.iter().copied().collect();
    for &u in domain {
        for v in u.subsets() {
            if !have.contains(&v) && !v.is_empty() {
                return Err(ModelError::DomainNotClosed { parent: u, missing: v });
            }
        }
    }
    let mut g = SetFunction::new();
    for &u in domain {
        if u.is_empty() {
            continue;
        }
        let mut acc = 0.0;
        for (v, fv) in f.support() {
            if v.is_subset_of(u) {
                let sign = if (u.card() - v.card()) % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * fv;
            }
        }
        if acc != 0.0 {
            g.insert(u, acc)?;
        }
    }
    Ok(g)
}

/// Recovers the original function from its transform:
/// `sum over V subset of U of g(V)`.
pub fn zeta_transform(g: &SetFunction, u: SubsetMask) -> f64 {
    g.support()
        .filter(|(v, _)| v.is_subset_of(u))
        .map(|(_, gv)| gv)
        .sum()
}

// ---------------------------------------------------------------------------
// Utilities and profiles
// ---------------------------------------------------------------------------

/// A utility function in one of the two on-disk shapes: a per-target vector
/// (additive, expanded on demand) or an explicit sparse subset map.
#[derive(Clone, Debug)]
pub enum Utility {
    Additive(Vec<f64>),
    Sparse(SetFunction),
}

impl Utility {
    pub fn zero_sparse() -> Self {
        Utility::Sparse(SetFunction::new())
    }

    pub fn value(&self, mask: SubsetMask) -> f64 {
        match self {
            Utility::Additive(per_target) => {
                mask.indices().map(|i| per_target[i]).sum()
            }
            Utility::Sparse(f) => f.value(mask),
        }
    }

    pub fn negated(&self) -> Utility {
        match self {
            Utility::Additive(v) => Utility::Additive(v.iter().map(|x| -x).collect()),
            Utility::Sparse(f) => Utility::Sparse(f.negated()),
        }
    }

    /// The Moebius transform over the downward-closed `domain`. Additive
    /// vectors transform to their singleton entries without any arithmetic.
    pub fn common(&self, domain: &[SubsetMask]) -> Result<SetFunction, ModelError> {
        match self {
            Utility::Additive(per_target) => {
                let mut g = SetFunction::new();
                for (i, &v) in per_target.iter().enumerate() {
                    if v != 0.0 {
                        g.insert(SubsetMask::singleton(i), v)?;
                    }
                }
                Ok(g)
            }
            Utility::Sparse(f) => mobius_transform(f, domain),
        }
    }

    /// Largest stored subset size (n for additive vectors with any nonzero).
    pub fn max_entry_card(&self) -> usize {
        match self {
            Utility::Additive(v) => usize::from(v.iter().any(|&x| x != 0.0)),
            Utility::Sparse(f) => f.support().map(|(m, _)| m.card()).max().unwrap_or(0),
        }
    }
}

/// The four utility functions of a game plus the zero-sum marker.
#[derive(Clone, Debug)]
pub struct UtilityProfile {
    pub benefit_attacker: Utility,
    pub loss_attacker: Utility,
    pub benefit_defender: Utility,
    pub loss_defender: Utility,
    pub zero_sum: bool,
}

/// The Moebius transforms of the four utilities, aligned on one domain.
#[derive(Clone, Debug)]
pub struct CommonUtilityProfile {
    pub benefit_attacker: SetFunction,
    pub loss_attacker: SetFunction,
    pub benefit_defender: SetFunction,
    pub loss_defender: SetFunction,
}

impl UtilityProfile {
    pub fn functions(&self) -> [&Utility; 4] {
        [
            &self.benefit_attacker,
            &self.loss_attacker,
            &self.benefit_defender,
            &self.loss_defender,
        ]
    }

    /// Transforms all four utilities over the attacker space's domain.
    pub fn common_profile(
        &self,
        space: &AttackerSpace,
    ) -> Result<CommonUtilityProfile, ModelError> {
        let domain = space.enumerate()?;
        Ok(CommonUtilityProfile {
            benefit_attacker: self.benefit_attacker.common(&domain)?,
            loss_attacker: self.loss_attacker.common(&domain)?,
            benefit_defender: self.benefit_defender.common(&domain)?,
            loss_defender: self.loss_defender.common(&domain)?,
        })
    }

    /// Checks `benefit > loss` on every nonempty attacker strategy, for both
    /// players' utilities.
    pub fn validate_benefit_above_loss(
        &self,
        space: &AttackerSpace,
    ) -> Result<(), ModelError> {
        let all_additive = self
            .functions()
            .iter()
            .all(|u| matches!(u, Utility::Additive(_)));
        if all_additive {
            for i in 0..space.n {
                let s = SubsetMask::singleton(i);
                let (ba, la) = (self.benefit_attacker.value(s), self.loss_attacker.value(s));
                if ba <= la {
                    return Err(ModelError::BenefitNotAboveLoss(s, ba, la));
                }
                let (bd, ld) = (self.benefit_defender.value(s), self.loss_defender.value(s));
                if bd <= ld {
                    return Err(ModelError::BenefitNotAboveLoss(s, bd, ld));
                }
            }
            return Ok(());
        }
        for a in space.enumerate()? {
            if a.is_empty() {
                continue;
            }
            let (ba, la) = (self.benefit_attacker.value(a), self.loss_attacker.value(a));
            if ba <= la {
                return Err(ModelError::BenefitNotAboveLoss(a, ba, la));
            }
            let (bd, ld) = (self.benefit_defender.value(a), self.loss_defender.value(a));
            if bd <= ld {
                return Err(ModelError::BenefitNotAboveLoss(a, bd, ld));
            }
        }
        Ok(())
    }
}

/// Completes a zero-sum profile from the attacker's side: the defender's
/// benefit is the attacker's loss negated and vice versa.
pub fn zero_sum_complete(
    benefit_attacker: Utility,
    loss_attacker: Utility,
    space: &AttackerSpace,
) -> Result<UtilityProfile, ModelError> {
    let profile = UtilityProfile {
        benefit_defender: loss_attacker.negated(),
        loss_defender: benefit_attacker.negated(),
        benefit_attacker,
        loss_attacker,
        zero_sum: true,
    };
    profile.validate_benefit_above_loss(space)?;
    Ok(profile)
}

// ---------------------------------------------------------------------------
// Attacker space and game instance
// ---------------------------------------------------------------------------

/// The attacker's pure-strategy space: every subset of `[n]` with at most
/// `budget` targets.
#[derive(Clone, Copy, Debug)]
pub struct AttackerSpace {
    pub n: usize,
    pub budget: usize,
}

impl AttackerSpace {
    pub fn new(n: usize, budget: usize) -> Result<Self, ModelError> {
        if n > MAX_TARGETS {
            return Err(ModelError::TooManyTargets(n));
        }
        if budget > n {
            return Err(ModelError::BudgetExceedsTargets(budget, n));
        }
        Ok(AttackerSpace { n, budget })
    }

    pub fn contains(&self, a: SubsetMask) -> bool {
        a.card() <= self.budget && a.bits() >> self.n == 0
    }

    /// Number of pure strategies, `sum over i <= budget of C(n, i)`.
    pub fn count(&self) -> u128 {
        let mut total: u128 = 0;
        let mut binom: u128 = 1;
        for i in 0..=self.budget {
            total = total.saturating_add(binom);
            binom = binom.saturating_mul((self.n - i) as u128) / (i as u128 + 1);
        }
        total
    }

    /// All pure strategies in canonical order (cardinality, then ascending
    /// bit pattern). Errors when the space exceeds the enumeration cap.
    pub fn enumerate(&self) -> Result<Vec<SubsetMask>, ModelError> {
        let count = self.count();
        if count > ENUMERATION_CAP as u128 {
            return Err(ModelError::SpaceTooLarge(count));
        }
        let mut out = Vec::with_capacity(count as usize);
        out.push(SubsetMask::EMPTY);
        for card in 1..=self.budget {
            let mut mask = (1u64 << card) - 1;
            let limit = if self.n == MAX_TARGETS { u64::MAX } else { 1u64 << self.n };
            while mask < limit || (self.n == MAX_TARGETS && mask != 0) {
                out.push(SubsetMask(mask));
                // Gosper's hack: next subset of the same cardinality.
                let c = mask & mask.wrapping_neg();
                let r = mask.wrapping_add(c);
                if r == 0 {
                    break;
                }
                mask = (((r ^ mask) >> 2) / c) | r;
                if self.n < MAX_TARGETS && mask >= limit {
                    break;
                }
            }
        }
        Ok(out)
    }
}

/// A full game: attacker space, defender set system, utilities.
#[derive(Clone, Debug)]
pub struct GameInstance {
    pub space: AttackerSpace,
    pub defender: DefenderOracleSpec,
    pub utilities: UtilityProfile,
}

impl GameInstance {
    /// Validates the assembled instance: utility keys must stay within the
    /// attacker budget, benefits must dominate losses, and the defender
    /// system must be well-formed for `n` targets.
    pub fn new(
        space: AttackerSpace,
        defender: DefenderOracleSpec,
        utilities: UtilityProfile,
    ) -> Result<Self, crate::Error> {
        for f in utilities.functions() {
            if let Utility::Sparse(sf) = f {
                for (mask, _) in sf.support() {
                    if mask.bits() >> space.n != 0 && space.n < MAX_TARGETS {
                        return Err(ModelError::MaskOutOfRange { mask: mask.bits(), n: space.n }.into());
                    }
                    if mask.card() > space.budget {
                        return Err(ModelError::EntryBeyondBudget(mask, space.budget).into());
                    }
                }
            } else if let Utility::Additive(v) = f {
                if v.len() != space.n {
                    return Err(ModelError::BadVectorLength(v.len(), space.n).into());
                }
            }
        }
        utilities.validate_benefit_above_loss(&space)?;
        defender.validate(space.n)?;
        Ok(GameInstance { space, defender, utilities })
    }

    pub fn n(&self) -> usize {
        self.space.n
    }
}

// ---------------------------------------------------------------------------
// Support set and additivity
// ---------------------------------------------------------------------------

/// Collects every subset carrying a nonzero common utility, augments with all
/// singletons, and orders canonically. The empty set never appears.
pub fn support_set(common: &CommonUtilityProfile, n: usize) -> SupportSet {
    let mut members: HashSet<SubsetMask> = HashSet::new();
    for f in [
        &common.benefit_attacker,
        &common.loss_attacker,
        &common.benefit_defender,
        &common.loss_defender,
    ] {
        for (mask, value) in f.support() {
            if value.abs() > COMMON_ZERO_TOL && !mask.is_empty() {
                members.insert(mask);
            }
        }
    }
    for i in 0..n {
        members.insert(SubsetMask::singleton(i));
    }
    let mut ordered: Vec<_> = members.into_iter().collect();
    ordered.sort_by_key(|m| m.canonical_key());
    SupportSet::from_members(ordered, n)
}

/// True when every common utility vanishes on all subsets of size >= 2 of
/// the attacker-space domain. The game only ever evaluates utilities on
/// subsets of attacked sets, so this is the operative notion of additivity.
pub fn is_additive(profile: &UtilityProfile, space: &AttackerSpace) -> bool {
    let common = match profile.common_profile(space) {
        Ok(c) => c,
        Err(_) => return false,
    };
    for f in [
        &common.benefit_attacker,
        &common.loss_attacker,
        &common.benefit_defender,
        &common.loss_defender,
    ] {
        for (mask, value) in f.support() {
            if mask.card() >= 2 && value.abs() > COMMON_ZERO_TOL {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Network-value utilities
// ---------------------------------------------------------------------------

/// Simple undirected graph as an adjacency list.
#[derive(Clone, Debug)]
pub struct Graph {
    pub adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, ModelError> {
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for &(u, v) in edges {
            if u >= n {
                return Err(ModelError::NodeOutOfRange(u, n));
            }
            if v >= n {
                return Err(ModelError::NodeOutOfRange(v, n));
            }
            if u == v {
                return Err(ModelError::SelfLoop(u));
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key) {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        Ok(Graph { adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Sum of squared connected-component sizes after removing `removed`.
    pub fn network_value_without(&self, removed: SubsetMask) -> f64 {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut value = 0.0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] || removed.contains(start) {
                continue;
            }
            let mut size = 0u64;
            stack.push(start);
            seen[start] = true;
            while let Some(u) = stack.pop() {
                size += 1;
                for &v in &self.adjacency[u] {
                    if !seen[v] && !removed.contains(v) {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            value += (size * size) as f64;
        }
        value
    }

    pub fn network_value(&self) -> f64 {
        self.network_value_without(SubsetMask::EMPTY)
    }
}

/// Benefit of removing each candidate set: the drop in total network value,
/// with component value `sum of n_i^2`.
pub fn network_value_benefits(
    graph: &Graph,
    candidate_sets: &[SubsetMask],
) -> Result<SetFunction, ModelError> {
    let n = graph.node_count();
    let base = graph.network_value();
    let mut f = SetFunction::new();
    for &u in candidate_sets {
        if let Some(bad) = u.indices().find(|&i| i >= n) {
            return Err(ModelError::NodeOutOfRange(bad, n));
        }
        let benefit = base - graph.network_value_without(u);
        f.insert(u, benefit)?;
    }
    Ok(f)
}
