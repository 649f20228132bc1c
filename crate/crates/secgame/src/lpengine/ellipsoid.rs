//! Central-cut ellipsoid method for the compact program. Kept as the
//! oracle-faithful reference backend; column generation is the production
//! path. The terminal iterate is polished by one restricted-master solve
//! over every defender vertex discovered en route.

use crate::compact::{CompactDefenderPoint, CompactWeights, SupportSet};
use crate::model::AttackerSpace;
use crate::oracles::{dop_linear, DefenderOracleSpec, OptSense};

use super::{
    column_payoffs, combine, enumerate_attacker_vertices, separation_compact_lp, solve_master,
    u0_bound, CompactSolution, LpEngineError, RestrictedMaster, SolverConfig, VertexPool,
};

struct Ellipsoid {
    center: Vec<f64>,
    shape: Vec<Vec<f64>>, // positive definite matrix
    dim: usize,
}

impl Ellipsoid {
    fn ball(center: Vec<f64>, radius: f64) -> Self {
        let dim = center.len();
        let mut shape = vec![vec![0.0; dim]; dim];
        for (i, row) in shape.iter_mut().enumerate() {
            row[i] = radius * radius;
        }
        Ellipsoid { center, shape, dim }
    }

    /// Central cut: keep the half-space `g . z <= g . center`. Returns the
    /// cut width `sqrt(g' E g)`, or None when the ellipsoid has collapsed.
    fn cut(&mut self, g: &[f64]) -> Option<f64> {
        let d = self.dim as f64;
        let eg: Vec<f64> = self
            .shape
            .iter()
            .map(|row| row.iter().zip(g).map(|(a, b)| a * b).sum())
            .collect();
        let geg: f64 = g.iter().zip(&eg).map(|(a, b)| a * b).sum();
        if !(geg > 1e-24) {
            return None;
        }
        let width = geg.sqrt();
        for i in 0..self.dim {
            self.center[i] -= eg[i] / ((d + 1.0) * width);
        }
        let scale = d * d / (d * d - 1.0);
        let rank_coeff = 2.0 / (d + 1.0) / geg;
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.shape[i][j] = scale * (self.shape[i][j] - rank_coeff * eg[i] * eg[j]);
            }
        }
        // Symmetrize against drift.
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let avg = 0.5 * (self.shape[i][j] + self.shape[j][i]);
                self.shape[i][j] = avg;
                self.shape[j][i] = avg;
            }
        }
        Some(width)
    }
}

/// Ellipsoid solve of the compact program over `(q1, q2, u)`, in a ball of
/// radius `sqrt(2|S|) + u0`. Feasible centers take an objective cut on `u`,
/// infeasible ones take the separating hyperplane. The answer is the master
/// solve over all vertices the separation oracle generated.
pub fn solve_compact_ellipsoid(
    weights: &CompactWeights,
    spec: &DefenderOracleSpec,
    support: &SupportSet,
    space: &AttackerSpace,
    cfg: &SolverConfig,
) -> Result<CompactSolution, LpEngineError> {
    let s = support.len();
    let dim = 2 * s + 1;
    let attacker_vertices = enumerate_attacker_vertices(support, space)?;
    let u0 = u0_bound(weights, support);
    let radius = (2.0 * s as f64).sqrt() + u0;

    let mut center = vec![0.5; dim];
    center[dim - 1] = 0.0;
    let mut ell = Ellipsoid::ball(center, radius);

    let mut pool = VertexPool::new();
    // Seed so the polishing master is never empty.
    let seed = dop_linear(spec, &vec![0.0; 2 * s], support, OptSense::Min)?;
    pool.add(seed.vertex.expect("vertex filled"));

    let max_iters = cfg.ellipsoid_iters(s);
    let mut best_u = f64::INFINITY;
    let mut iterations = 0usize;
    for _ in 0..max_iters {
        iterations += 1;
        let q = CompactDefenderPoint::from_stacked(&ell.center[..2 * s]);
        let u = ell.center[2 * s];
        let sep = separation_compact_lp(
            &q,
            u,
            weights,
            &attacker_vertices,
            spec,
            support,
            cfg,
            &mut pool,
        )?;
        let g: Vec<f64> = match sep.hyperplane {
            Some(h) => h.coeffs,
            None => {
                best_u = best_u.min(u);
                // Objective cut: look for smaller u.
                let mut g = vec![0.0; dim];
                g[dim - 1] = 1.0;
                g
            }
        };
        match ell.cut(&g) {
            Some(width) if width > cfg.opt_tol * 1e-3 => {}
            _ => break,
        }
    }

    // Polish: one restricted master over everything the oracle produced.
    let columns: Vec<_> = pool.vertices().to_vec();
    let payoffs: Vec<Vec<f64>> = columns
        .iter()
        .map(|v| column_payoffs(&attacker_vertices, v, weights))
        .collect();
    let (value, lambda, duals) = solve_master(&payoffs, attacker_vertices.len())?;
    let point = combine(&columns, &lambda, s);
    Ok(CompactSolution {
        point,
        value,
        master: RestrictedMaster {
            generated_vertices: columns,
            lambda,
            duals,
            iterations,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compact::build_weights;
    use crate::lpengine::Backend;
    use crate::model::{support_set, zero_sum_complete, SetFunction, SubsetMask, Utility};

    fn m(indices: &[usize]) -> SubsetMask {
        SubsetMask::from_indices(indices, 64).unwrap()
    }

    #[test]
    fn ellipsoid_matches_colgen_on_small_games() {
        let space = crate::model::AttackerSpace::new(3, 2).unwrap();
        let b = SetFunction::from_entries([
            (m(&[0]), 2.0),
            (m(&[1]), 1.0),
            (m(&[2]), 1.5),
            (m(&[0, 1]), 3.5),
            (m(&[0, 2]), 4.0),
            (m(&[1, 2]), 2.5),
        ])
        .unwrap();
        let l = SetFunction::from_entries([
            (m(&[0]), -0.5),
            (m(&[1]), -0.25),
            (m(&[2]), -1.0),
            (m(&[0, 1]), -0.75),
            (m(&[0, 2]), -1.5),
            (m(&[1, 2]), -1.25),
        ])
        .unwrap();
        let profile =
            zero_sum_complete(Utility::Sparse(b), Utility::Sparse(l), &space).unwrap();
        let common = profile.common_profile(&space).unwrap();
        let support = support_set(&common, 3);
        let weights = build_weights(&common, &support);
        let spec = DefenderOracleSpec::UniformMatroid { k: 1 };

        let colgen_cfg = SolverConfig::default();
        let colgen = crate::lpengine::solve_compact_lp(
            &weights, &spec, &support, &space, &colgen_cfg,
        )
        .unwrap();

        let ell_cfg = SolverConfig { backend: Backend::Ellipsoid, ..SolverConfig::default() };
        let ell = crate::lpengine::solve_compact_lp(
            &weights, &spec, &support, &space, &ell_cfg,
        )
        .unwrap();

        assert!(
            (colgen.value - ell.value).abs() < 1e-5,
            "colgen {} vs ellipsoid {}",
            colgen.value,
            ell.value
        );
    }
}
