use crate::linalg::RankTolerance;
use crate::model::MatchTolerance;

/// Knobs shared by the zero-computing pipelines.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroOptions {
    /// Threshold for structural rank decisions (nullspaces, `T`, subspaces,
    /// normal rank).
    pub rank_tol: RankTolerance,
    /// Threshold for deciding that the pencil drops rank at a computed
    /// candidate. Looser than `rank_tol` because candidates carry the
    /// rounding error of the method that produced them.
    pub verify_tol: RankTolerance,
    /// Seed for every randomized step (normal-rank sampling, squaring).
    pub seed: u64,
    /// Sample points used to estimate the normal rank.
    pub normal_rank_samples: usize,
    /// Values closer than this are reported as one zero with multiplicity.
    pub cluster: MatchTolerance,
    /// Extension pole; `None` picks `1 + spectral radius of A`.
    pub alpha: Option<f64>,
    /// Independent squarings for nonsquare systems.
    pub rounds: usize,
    /// Matching threshold for intersecting zero sets across squarings.
    pub common: MatchTolerance,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        Self {
            rank_tol: RankTolerance::default(),
            verify_tol: RankTolerance::relative(1e-8).expect("positive"),
            seed: 0,
            normal_rank_samples: 7,
            cluster: MatchTolerance::default(),
            alpha: None,
            rounds: 3,
            common: MatchTolerance::new(1e-4, 0.0),
        }
    }
}
