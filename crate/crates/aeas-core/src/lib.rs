//! Core engine for assessing how actionable public exploit artifacts are.
//!
//! The pipeline has three stages: collect and pre-filter candidate
//! repositories and web documents ([`corpus`], [`prefilter`], [`connectors`]),
//! extract a fixed schema of exploit sub-features per artifact ([`analyzer`]),
//! and aggregate those sub-features into high-level features and a final
//! actionability score per vulnerability ([`scoring`]). [`evalkit`] measures
//! how well the resulting rankings and scores agree with ground truth and
//! baseline scoring systems.

pub mod analyzer;
pub mod connectors;
pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod fixtures;
pub mod pipeline;
pub mod prefilter;
pub mod scoring;

pub use analyzer::{
    Conclusion, Evidence, FeatureVector, PopularityInputs, PrivilegeLevel, SubFeature,
    SubFeatureFinding,
};
pub use corpus::{
    ArtifactFile, ExploitArtifact, FileKind, GroundTruthLabel, MaturityObserved, RepoMeta,
    VulnerabilityRecord, WebDocument,
};
pub use error::{Error, FindingError, Result};
pub use fixtures::{bundled_fixture_root, verify_fixtures, FixtureManifest};
pub use evalkit::{AgreementStats, BlandAltman, RankingCase};
pub use pipeline::{BackendChoice, ConfigFile, Overrides, RunConfig};
pub use scoring::{
    AggregatedFeatures, AttackVector, ComplexityLevel, ExploitScore, ImpactClass, MaturityLevel,
    PopularityLevel, Weights,
};
