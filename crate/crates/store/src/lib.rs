//! The two repositories behind the service: a metadata store for users,
//! tutorials, sections and sessions, and a recording-file store holding one
//! immutable directory per section bundle.

mod artifact;
mod bundles;
mod error;
mod memory;
mod metadata;
mod repo;
mod sqlite;

pub use artifact::{content_hash, safe_relative_path, ArtifactRef, BundleId};
pub use bundles::{BundleStore, FaultHook, FsBundleStore, MemoryBundleStore};
pub use error::StoreError;
pub use memory::MemoryMetadata;
pub use metadata::{MetadataStore, Role, SectionRecord, UserRecord};
pub use repo::{AuditReport, MetadataBackend, Repository, StorageConfig};
pub use sqlite::SqliteMetadata;
