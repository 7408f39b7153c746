//! Removability of the singularity set: either a clean level of `U_n` or a germ cycle.

use serde::{Deserialize, Serialize};

use super::atlas::{refine_cells, ContinuityAtlas};
use super::germ::{arrangement_vertices, find_witness, Witness};
use super::iterate::{first_clean_level, LevelSummary, RegionSet};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Removability {
    /// `closure(U_m)` misses the singularity set.
    Removable { m: usize },
    /// A germ cycle through the singularity set.
    NonRemovable { witness: Witness },
    /// Neither was found within the limits.
    Inconclusive { levels: usize, budget_exceeded: bool },
}

impl Removability {
    pub fn label(&self) -> String {
        match self {
            Removability::Removable { m } => format!("Removable({m})"),
            Removability::NonRemovable { .. } => "NonRemovable".into(),
            Removability::Inconclusive { .. } => "Inconclusive".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Removability,
    pub levels: Vec<LevelSummary>,
    #[serde(skip)]
    pub regions: Option<RegionSet>,
}

/// Limits for [`removability_certificate`].
#[derive(Clone, Debug)]
pub struct SearchLimits {
    pub max_n: usize,
    pub region_budget: usize,
    pub witness_len: usize,
    pub witness_budget: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_n: 12, region_budget: 20_000, witness_len: 8, witness_budget: 200_000 }
    }
}

/// Searches for a germ cycle first, then iterates `U_n` until a clean level.
pub fn removability_certificate(atlas: &ContinuityAtlas, limits: &SearchLimits) -> Certificate {
    let cells = refine_cells(atlas);
    // largest apexes first: orbits near the top corner of the state space are found before their mirror images
    let mut apexes = arrangement_vertices(atlas, &cells);
    apexes.reverse();
    if let Some(w) = find_witness(atlas, &cells, &apexes, limits.witness_len, limits.witness_budget) {
        return Certificate { verdict: Removability::NonRemovable { witness: w }, levels: Vec::new(), regions: None };
    }
    let (set, levels, within) = first_clean_level(atlas, limits.max_n, limits.region_budget);
    let verdict = match &set {
        Some(s) => Removability::Removable { m: s.n },
        None => Removability::Inconclusive { levels: levels.len(), budget_exceeded: !within },
    };
    Certificate { verdict, levels, regions: set }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::atlas::build_atlas;
    use crate::lattice::{build_lattice, ModelParams};

    fn verdict(ec: &str, eps: &str) -> String {
        let lat = build_lattice(1, 2).unwrap();
        let p = ModelParams::parse(ec, eps).unwrap();
        let atlas = build_atlas(&p, &lat, 64, 100_000).unwrap();
        removability_certificate(&atlas, &SearchLimits::default()).verdict.label()
    }

    #[test]
    fn small_examples() {
        assert_eq!(verdict("1/3", "1/3"), "Removable(1)");
        assert_eq!(verdict("7", "1/2"), "NonRemovable");
        assert_eq!(verdict("7/2", "1/2"), "Removable(8)");
    }
}
