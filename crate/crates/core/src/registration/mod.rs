//! Region-pair registration: point-to-point ICP, Chamfer scoring and the
//! exhaustive search over retained region pairs.

mod chamfer;
mod icp;
mod init;
mod matching;

pub use chamfer::{chamfer_distance, chamfer_distance_indexed};
pub use icp::{best_rigid_transform, icp_point_to_point, icp_with_index, IcpOutcome, IcpParams};
pub use init::initial_alignments;
pub use matching::{align_fragments, match_regions, match_regions_with, write_matches_csv, MatchOptions, MatchResult, Matching, Region};
