//! Exact polyhedral geometry of the skew product: pieces, iterated regions, coding.

pub mod atlas;
pub mod bifurcation;
pub mod coding;
pub mod germ;
pub mod iterate;
pub mod poly;
pub mod region;
pub mod removability;

pub use atlas::{build_atlas, image_region, refine_cells, singular_faces, Cell, ContinuityAtlas, Piece};
pub use poly::{Constraint, HPolytope};
pub use region::{Region, RegionKey};
pub use iterate::{components, first_clean_level, iterate_regions, LevelSummary, RegionIterator, RegionSet, TaggedRegion};
pub use germ::{find_witness, Witness, WPoint};
pub use removability::{removability_certificate, Certificate, Removability, SearchLimits};
pub use coding::{chain_statistics, markov_coding, ChainStatistics, TransitionMatrix};
pub use bifurcation::{bifurcation_scan, BifurcationPoint, BifurcationScan, Signature};
