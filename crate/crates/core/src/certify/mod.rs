//! Certified per-region bounds, recovery of the region shapes, the
//! recurrence induction and end-to-end certificates.

pub mod engine;
pub mod region;
pub mod shapes;
pub mod ssm;
pub mod system;

pub use engine::{Assignment, FuncEntry, PairEngine, WeightPair};
pub use region::{certify_region_bound, recheck_region, RegionBoundCert, RegionVerdict, SlotValues, TilingUse, WorstPiece};
pub use shapes::{reconstruct_regions, Reconstruction, SearchCaps};
pub use ssm::{builtin_regions, certify_ssm, max_mu_at, recheck_ssm, SsmCertificate, SsmVerdict};
pub use system::{check_induction, find_constants, CaseSystem, Class, ClassConstants, ConstantTable, InductionTranscript, Inequality};
