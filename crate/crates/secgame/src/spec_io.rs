//! On-disk formats: the game-spec document, solution documents emitted by
//! the solve command, graph edge lists, and candidate-set lists. All
//! structured documents are JSON with fixed field names.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compact::CompactError;
use crate::model::{
    zero_sum_complete, AttackerSpace, GameInstance, Graph, ModelError, SetFunction, SubsetMask,
    Utility, UtilityProfile,
};
use crate::oracles::{DefenderOracleSpec, OracleError};
use crate::solvers::{AttackerStrategy, Concept, EquilibriumResult};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("failed to read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("graph line {0}: expected two node indices, got {1:?}")]
    BadEdgeLine(usize, String),
    #[error("candidate-set line {0}: {1:?} is not an index list")]
    BadSetLine(usize, String),
    #[error("zero-sum spec also lists defender utilities that disagree at {0} (expected {1}, got {2})")]
    ZeroSumMismatch(SubsetMask, f64, f64),
    #[error("zero-sum additive spec must omit or match derived defender vectors")]
    ZeroSumVectorMismatch,
    #[error("non-zero-sum spec must provide defender utilities")]
    MissingDefenderUtilities,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Compact(#[from] CompactError),
    #[error(transparent)]
    Game(#[from] Box<crate::Error>),
}

// ---------------------------------------------------------------------------
// Game spec document
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameSpecFile {
    pub n: usize,
    pub attacker_budget: usize,
    #[serde(default)]
    pub zero_sum: bool,
    pub utilities: UtilitiesSpec,
    pub defender_system: DefenderSystemSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum UtilitiesSpec {
    #[serde(rename = "additive")]
    Additive(AdditiveUtilities),
    #[serde(rename = "sparse")]
    Sparse(Vec<SparseEntry>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdditiveUtilities {
    pub benefit_attacker: Vec<f64>,
    pub loss_attacker: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benefit_defender: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_defender: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseEntry {
    pub set: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_d: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum DefenderSystemSpec {
    #[serde(rename = "matroid")]
    Matroid { k: usize },
    #[serde(rename = "explicit")]
    Explicit { sets: Vec<Vec<usize>> },
    #[serde(rename = "bipartite")]
    Bipartite { resources: Vec<Vec<usize>> },
    #[serde(rename = "budget")]
    Budget { costs: Vec<f64>, budget: f64 },
    #[serde(rename = "separable")]
    Separable { components: Vec<Vec<usize>> },
}

impl DefenderSystemSpec {
    pub fn to_oracle_spec(&self, n: usize) -> Result<DefenderOracleSpec, SpecError> {
        let masks = |sets: &[Vec<usize>]| -> Result<Vec<SubsetMask>, SpecError> {
            sets.iter()
                .map(|s| SubsetMask::from_indices(s, n).map_err(SpecError::from))
                .collect()
        };
        let spec = match self {
            DefenderSystemSpec::Matroid { k } => DefenderOracleSpec::UniformMatroid { k: *k },
            DefenderSystemSpec::Explicit { sets } => {
                DefenderOracleSpec::Explicit { sets: masks(sets)? }
            }
            DefenderSystemSpec::Bipartite { resources } => {
                DefenderOracleSpec::Bipartite { resources: masks(resources)? }
            }
            DefenderSystemSpec::Budget { costs, budget } => {
                DefenderOracleSpec::Budget { costs: costs.clone(), budget: *budget }
            }
            DefenderSystemSpec::Separable { components } => {
                DefenderOracleSpec::Separable { components: masks(components)? }
            }
        };
        spec.validate(n)?;
        Ok(spec)
    }
}

fn sparse_functions(
    entries: &[SparseEntry],
    n: usize,
) -> Result<[SetFunction; 4], SpecError> {
    let mut fs = [
        SetFunction::new(),
        SetFunction::new(),
        SetFunction::new(),
        SetFunction::new(),
    ];
    for entry in entries {
        let mask = SubsetMask::from_indices(&entry.set, n)?;
        for (slot, value) in [entry.b_a, entry.l_a, entry.b_d, entry.l_d]
            .into_iter()
            .enumerate()
        {
            if let Some(v) = value {
                fs[slot].insert(mask, v)?;
            }
        }
    }
    Ok(fs)
}

impl GameSpecFile {
    /// Builds and validates the in-memory game.
    pub fn to_game(&self) -> Result<GameInstance, SpecError> {
        let space = AttackerSpace::new(self.n, self.attacker_budget)?;
        let defender = self.defender_system.to_oracle_spec(self.n)?;
        let profile = match &self.utilities {
            UtilitiesSpec::Additive(add) => {
                let check_len = |v: &Vec<f64>| -> Result<(), SpecError> {
                    if v.len() != self.n {
                        return Err(ModelError::BadVectorLength(v.len(), self.n).into());
                    }
                    Ok(())
                };
                check_len(&add.benefit_attacker)?;
                check_len(&add.loss_attacker)?;
                if self.zero_sum {
                    let profile = zero_sum_complete(
                        Utility::Additive(add.benefit_attacker.clone()),
                        Utility::Additive(add.loss_attacker.clone()),
                        &space,
                    )?;
                    // Defender vectors, when present, must match the
                    // derivation exactly.
                    if let Some(bd) = &add.benefit_defender {
                        check_len(bd)?;
                        for (i, &v) in bd.iter().enumerate() {
                            if (v + add.loss_attacker[i]).abs() > 1e-9 {
                                return Err(SpecError::ZeroSumVectorMismatch);
                            }
                        }
                    }
                    if let Some(ld) = &add.loss_defender {
                        check_len(ld)?;
                        for (i, &v) in ld.iter().enumerate() {
                            if (v + add.benefit_attacker[i]).abs() > 1e-9 {
                                return Err(SpecError::ZeroSumVectorMismatch);
                            }
                        }
                    }
                    profile
                } else {
                    let bd = add
                        .benefit_defender
                        .clone()
                        .ok_or(SpecError::MissingDefenderUtilities)?;
                    let ld = add
                        .loss_defender
                        .clone()
                        .ok_or(SpecError::MissingDefenderUtilities)?;
                    check_len(&bd)?;
                    check_len(&ld)?;
                    UtilityProfile {
                        benefit_attacker: Utility::Additive(add.benefit_attacker.clone()),
                        loss_attacker: Utility::Additive(add.loss_attacker.clone()),
                        benefit_defender: Utility::Additive(bd),
                        loss_defender: Utility::Additive(ld),
                        zero_sum: false,
                    }
                }
            }
            UtilitiesSpec::Sparse(entries) => {
                let [b_a, l_a, b_d, l_d] = sparse_functions(entries, self.n)?;
                if self.zero_sum {
                    // Provided defender entries must agree with the derived
                    // zero-sum completion.
                    let profile = zero_sum_complete(
                        Utility::Sparse(b_a),
                        Utility::Sparse(l_a),
                        &space,
                    )?;
                    for (mask, got) in b_d.support() {
                        let expected = profile.benefit_defender.value(mask);
                        if (got - expected).abs() > 1e-9 {
                            return Err(SpecError::ZeroSumMismatch(mask, expected, got));
                        }
                    }
                    for (mask, got) in l_d.support() {
                        let expected = profile.loss_defender.value(mask);
                        if (got - expected).abs() > 1e-9 {
                            return Err(SpecError::ZeroSumMismatch(mask, expected, got));
                        }
                    }
                    profile
                } else {
                    UtilityProfile {
                        benefit_attacker: Utility::Sparse(b_a),
                        loss_attacker: Utility::Sparse(l_a),
                        benefit_defender: Utility::Sparse(b_d),
                        loss_defender: Utility::Sparse(l_d),
                        zero_sum: false,
                    }
                }
            }
        };
        GameInstance::new(space, defender, profile).map_err(|e| SpecError::Game(Box::new(e)))
    }
}

pub fn load_game_str(text: &str) -> Result<GameInstance, SpecError> {
    let file: GameSpecFile = serde_json::from_str(text)?;
    file.to_game()
}

pub fn load_game_path(path: &Path) -> Result<GameInstance, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_game_str(&text)
}

pub fn load_spec_path(path: &Path) -> Result<GameSpecFile, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

// ---------------------------------------------------------------------------
// Solution documents
// ---------------------------------------------------------------------------

/// Rounds to the given number of significant digits, for stable output.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - magnitude);
    (x * factor).round() / factor
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub set: Vec<usize>,
    pub prob: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagnosticsDoc {
    pub backend: String,
    pub iterations: usize,
    pub residual: f64,
    pub skipped_lps: usize,
    pub notes: Vec<String>,
}

/// The document written by the solve command and re-read by verify.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub concept: String,
    pub defender_value: f64,
    pub attacker_value: f64,
    pub defender_mixed: Vec<StrategyEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacker_mixed: Option<Vec<StrategyEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacker_marginals: Option<Vec<f64>>,
    pub coverage: Vec<f64>,
    pub diagnostics: DiagnosticsDoc,
}

const OUTPUT_DIGITS: i32 = 9;
const PROB_FLOOR: f64 = 1e-9;

fn strategy_entries(dist: &[(SubsetMask, f64)]) -> Vec<StrategyEntry> {
    dist.iter()
        .filter(|&&(_, p)| p >= PROB_FLOOR)
        .map(|&(mask, p)| StrategyEntry {
            set: mask.to_indices(),
            prob: round_sig(p, OUTPUT_DIGITS),
        })
        .collect()
}

impl SolutionDoc {
    pub fn from_result(result: &EquilibriumResult) -> Self {
        let (attacker_mixed, attacker_marginals) = match &result.attacker {
            AttackerStrategy::Mixed(dist) => (Some(strategy_entries(dist)), None),
            AttackerStrategy::Marginals(a) => (
                None,
                Some(a.iter().map(|&x| round_sig(x, OUTPUT_DIGITS)).collect()),
            ),
        };
        SolutionDoc {
            concept: match result.concept {
                Concept::Ne => "ne".to_string(),
                Concept::Sse => "sse".to_string(),
            },
            defender_value: round_sig(result.defender_value, OUTPUT_DIGITS),
            attacker_value: round_sig(result.attacker_value, OUTPUT_DIGITS),
            defender_mixed: strategy_entries(&result.defender_mixed),
            attacker_mixed,
            attacker_marginals,
            coverage: result
                .coverage
                .iter()
                .map(|&x| round_sig(x, OUTPUT_DIGITS))
                .collect(),
            diagnostics: DiagnosticsDoc {
                backend: result.diagnostics.backend.to_string(),
                iterations: result.diagnostics.iterations,
                residual: round_sig(result.diagnostics.residual, OUTPUT_DIGITS),
                skipped_lps: result.diagnostics.skipped_lps,
                notes: result.diagnostics.notes.clone(),
            },
        }
    }

    pub fn defender_distribution(&self, n: usize) -> Result<Vec<(SubsetMask, f64)>, SpecError> {
        self.defender_mixed
            .iter()
            .map(|e| Ok((SubsetMask::from_indices(&e.set, n)?, e.prob)))
            .collect()
    }

    pub fn attacker_strategy(&self, n: usize) -> Result<Option<AttackerStrategy>, SpecError> {
        if let Some(mixed) = &self.attacker_mixed {
            let dist = mixed
                .iter()
                .map(|e| Ok((SubsetMask::from_indices(&e.set, n)?, e.prob)))
                .collect::<Result<Vec<_>, SpecError>>()?;
            return Ok(Some(AttackerStrategy::Mixed(dist)));
        }
        if let Some(marginals) = &self.attacker_marginals {
            return Ok(Some(AttackerStrategy::Marginals(marginals.clone())));
        }
        Ok(None)
    }
}

// ---------------------------------------------------------------------------
// Graph and candidate-set text formats
// ---------------------------------------------------------------------------

/// Parses an edge list: one `u v` pair per line, 0-based, `#` comments and
/// blank lines ignored. Node count is one past the largest index unless a
/// larger count is given.
pub fn parse_edge_list(text: &str, n_hint: Option<usize>) -> Result<Graph, SpecError> {
    let mut edges = Vec::new();
    let mut max_node = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Option<usize> { tok?.parse().ok() };
        match (parse(it.next()), parse(it.next()), it.next()) {
            (Some(u), Some(v), None) => {
                max_node = max_node.max(u).max(v);
                edges.push((u, v));
            }
            _ => return Err(SpecError::BadEdgeLine(lineno + 1, line.to_string())),
        }
    }
    let n = n_hint.unwrap_or(0).max(max_node + 1);
    Ok(Graph::from_edges(n, &edges)?)
}

/// Parses candidate sets: one whitespace-separated index list per line.
pub fn parse_candidate_sets(text: &str, n: usize) -> Result<Vec<SubsetMask>, SpecError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let indices: Result<Vec<usize>, _> =
            line.split_whitespace().map(|t| t.parse::<usize>()).collect();
        let indices =
            indices.map_err(|_| SpecError::BadSetLine(lineno + 1, line.to_string()))?;
        out.push(SubsetMask::from_indices(&indices, n)?);
    }
    Ok(out)
}

/// A utilities fragment produced by the network-value generator, mergeable
/// into a game spec by hand or by tooling.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UtilitiesFragment {
    pub sparse: Vec<SparseEntry>,
}

pub fn network_benefits_fragment(f: &SetFunction) -> UtilitiesFragment {
    let sparse = f
        .sorted_entries()
        .into_iter()
        .map(|(mask, value)| SparseEntry {
            set: mask.to_indices(),
            b_a: Some(round_sig(value, OUTPUT_DIGITS)),
            l_a: None,
            b_d: None,
            l_d: None,
        })
        .collect();
    UtilitiesFragment { sparse }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_zero_sum_round_trip() {
        let text = r#"{
            "n": 2,
            "attacker_budget": 1,
            "zero_sum": true,
            "utilities": {"additive": {
                "benefit_attacker": [1.0, 1.0],
                "loss_attacker": [0.0, 0.0]
            }},
            "defender_system": {"type": "matroid", "k": 1}
        }"#;
        let game = load_game_str(text).unwrap();
        assert_eq!(game.n(), 2);
        assert!(game.utilities.zero_sum);
        assert_eq!(
            game.utilities
                .loss_defender
                .value(SubsetMask::singleton(0)),
            -1.0
        );
    }

    #[test]
    fn sparse_spec_with_defender_side() {
        let text = r#"{
            "n": 3,
            "attacker_budget": 2,
            "utilities": {"sparse": [
                {"set": [0], "b_a": 2.0, "l_a": -1.0, "b_d": 1.0, "l_d": -2.0},
                {"set": [1], "b_a": 1.0, "l_a": -0.5, "b_d": 0.5, "l_d": -1.0},
                {"set": [2], "b_a": 1.5, "l_a": -0.5, "b_d": 0.5, "l_d": -1.5},
                {"set": [0,1], "b_a": 3.0, "l_a": -1.0, "b_d": 2.0, "l_d": -3.0},
                {"set": [0,2], "b_a": 3.0, "l_a": -1.0, "b_d": 2.0, "l_d": -3.0},
                {"set": [1,2], "b_a": 2.0, "l_a": -1.0, "b_d": 1.0, "l_d": -2.0}
            ]},
            "defender_system": {"type": "explicit", "sets": [[0], [1, 2]]}
        }"#;
        let game = load_game_str(text).unwrap();
        assert!(!game.utilities.zero_sum);
        let m = SubsetMask::from_indices(&[0, 1], 3).unwrap();
        assert_eq!(game.utilities.benefit_attacker.value(m), 3.0);
    }

    #[test]
    fn rejects_entry_beyond_budget() {
        let text = r#"{
            "n": 3,
            "attacker_budget": 1,
            "zero_sum": true,
            "utilities": {"sparse": [
                {"set": [0], "b_a": 2.0, "l_a": -1.0},
                {"set": [1], "b_a": 2.0, "l_a": -1.0},
                {"set": [2], "b_a": 2.0, "l_a": -1.0},
                {"set": [0,1], "b_a": 3.0}
            ]},
            "defender_system": {"type": "matroid", "k": 1}
        }"#;
        assert!(load_game_str(text).is_err());
    }

    #[test]
    fn zero_sum_mismatch_detected() {
        let text = r#"{
            "n": 1,
            "attacker_budget": 1,
            "zero_sum": true,
            "utilities": {"sparse": [
                {"set": [0], "b_a": 2.0, "l_a": -1.0, "b_d": 5.0}
            ]},
            "defender_system": {"type": "matroid", "k": 1}
        }"#;
        assert!(matches!(
            load_game_str(text),
            Err(SpecError::ZeroSumMismatch(_, _, _))
        ));
    }

    #[test]
    fn edge_list_parsing() {
        let g = parse_edge_list("0 1\n1 2 # comment\n\n# full line\n", None).unwrap();
        assert_eq!(g.node_count(), 3);
        assert!(parse_edge_list("0 1 2\n", None).is_err());
        assert!(parse_edge_list("0 x\n", None).is_err());
    }

    #[test]
    fn candidate_sets_parsing() {
        let sets = parse_candidate_sets("0\n1 2\n", 3).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[1], SubsetMask::from_indices(&[1, 2], 3).unwrap());
        assert!(parse_candidate_sets("5\n", 3).is_err());
    }

    #[test]
    fn significant_digit_rounding() {
        assert_eq!(round_sig(0.123456789123, 9), 0.123456789);
        assert_eq!(round_sig(123456.789123, 9), 123456.789);
        assert_eq!(round_sig(0.0, 9), 0.0);
        assert_eq!(round_sig(-1.0 / 3.0, 9), -0.333333333);
    }
}
