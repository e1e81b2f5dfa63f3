use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tutorcast_core::model::{
    parse_coding_bundle, parse_quiz_bundle, render_coding_bundle, render_quiz_bundle, BundleFile, QuizSection, SectionId, SectionKind, SectionRecording, TutorialId,
    BUNDLE_AUDIO,
};

use crate::artifact::{ArtifactRef, BundleId};
use crate::bundles::{BundleStore, FsBundleStore};
use crate::memory::MemoryMetadata;
use crate::metadata::{MetadataStore, SectionRecord};
use crate::sqlite::SqliteMetadata;
use crate::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetadataBackend {
    Sqlite,
    Memory,
}

/// Storage root and backend, normally read from the environment.
#[derive(Debug, Clone)]
pub struct StorageConfig {
    pub data_dir: PathBuf,
    pub metadata: MetadataBackend,
}

impl StorageConfig {
    /// `TUTORCAST_DATA_DIR` (default `./data`) and `TUTORCAST_METADATA`
    /// (`sqlite`, the default, or `memory`).
    pub fn from_env() -> Result<Self, StoreError> {
        let data_dir = std::env::var_os("TUTORCAST_DATA_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"));
        let metadata = match std::env::var("TUTORCAST_METADATA").as_deref() {
            Ok("memory") => MetadataBackend::Memory,
            Ok("sqlite") | Err(_) => MetadataBackend::Sqlite,
            Ok(other) => return Err(StoreError::Backend(format!("unknown TUTORCAST_METADATA backend {other:?}"))),
        };
        Ok(StorageConfig { data_dir, metadata })
    }
}

/// Findings of [`Repository::audit`]; all empty means consistent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Tutorial section refs with no section record.
    pub dangling_refs: Vec<(TutorialId, SectionId)>,
    /// Section records whose bundle directory is missing.
    pub missing_bundles: Vec<SectionId>,
    /// Bundle directories no section record points to.
    pub orphan_bundles: Vec<BundleId>,
    /// Files whose bytes no longer match their recorded hash.
    pub corrupt_files: Vec<(BundleId, String)>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.dangling_refs.is_empty() && self.missing_bundles.is_empty() && self.orphan_bundles.is_empty() && self.corrupt_files.is_empty()
    }
}

/// Both repositories together, with bundle bookkeeping that spans them.
#[derive(Clone)]
pub struct Repository {
    pub meta: Arc<dyn MetadataStore>,
    pub bundles: Arc<dyn BundleStore>,
}

impl std::fmt::Debug for Repository {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Repository").finish_non_exhaustive()
    }
}

impl Repository {
    pub fn new(meta: Arc<dyn MetadataStore>, bundles: Arc<dyn BundleStore>) -> Self {
        Repository { meta, bundles }
    }

    pub fn open(config: &StorageConfig) -> Result<Self, StoreError> {
        std::fs::create_dir_all(&config.data_dir)?;
        let meta: Arc<dyn MetadataStore> = match config.metadata {
            MetadataBackend::Sqlite => Arc::new(SqliteMetadata::open(config.data_dir.join("metadata.sqlite3"))?),
            MetadataBackend::Memory => Arc::new(MemoryMetadata::new()),
        };
        Ok(Repository { meta, bundles: Arc::new(FsBundleStore::open(config.data_dir.join("files"))?) })
    }

    fn store_files(&self, tutorial_id: &TutorialId, section_id: &SectionId, kind: SectionKind, files: &[(&str, &[u8])]) -> Result<SectionRecord, StoreError> {
        let bundle_id = BundleId::generate();
        let artifacts = self.bundles.write_bundle(&bundle_id, files)?;
        let record = SectionRecord { section_id: section_id.clone(), tutorial_id: tutorial_id.clone(), kind, bundle_id, language: None, duration: None, artifacts };
        Ok(record)
    }

    /// Writes the coding bundle plus audio and records the file hashes.
    pub fn store_coding_bundle(&self, tutorial_id: &TutorialId, section: &SectionRecording, audio: &[u8]) -> Result<SectionRecord, StoreError> {
        let rendered = render_coding_bundle(section)?;
        let mut files: Vec<(&str, &[u8])> = rendered.iter().map(|f| (f.path, f.bytes.as_slice())).collect();
        files.push((BUNDLE_AUDIO, audio));
        let mut record = self.store_files(tutorial_id, &section.section_id, SectionKind::Coding, &files)?;
        record.language = Some(section.language.clone());
        record.duration = Some(section.duration);
        self.publish(record)
    }

    pub fn store_quiz_bundle(&self, tutorial_id: &TutorialId, quiz: &QuizSection) -> Result<SectionRecord, StoreError> {
        let rendered = render_quiz_bundle(quiz)?;
        let files: Vec<(&str, &[u8])> = rendered.iter().map(|f| (f.path, f.bytes.as_slice())).collect();
        let record = self.store_files(tutorial_id, &quiz.section_id, SectionKind::Quiz, &files)?;
        self.publish(record)
    }

    fn publish(&self, record: SectionRecord) -> Result<SectionRecord, StoreError> {
        if let Err(err) = self.meta.put_section(&record) {
            let _ = self.bundles.remove_bundle(&record.bundle_id);
            return Err(err);
        }
        Ok(record)
    }

    pub fn section_record(&self, section_id: &SectionId) -> Result<SectionRecord, StoreError> {
        self.meta.section(section_id)?.ok_or_else(|| StoreError::not_found("section", section_id))
    }

    /// Reads one file and checks it against the recorded hash.
    pub fn read_verified(&self, record: &SectionRecord, relative_path: &str) -> Result<Vec<u8>, StoreError> {
        let artifact = record.artifact(relative_path).ok_or_else(|| StoreError::not_found("artifact", format!("{}/{relative_path}", record.bundle_id)))?;
        let bytes = self.bundles.read_file(&record.bundle_id, relative_path)?;
        artifact.verify(&bytes)?;
        Ok(bytes)
    }

    fn read_bundle_files(&self, record: &SectionRecord, skip_audio: bool) -> Result<Vec<BundleFile>, StoreError> {
        record
            .artifacts
            .iter()
            .filter(|a| !(skip_audio && a.relative_path == BUNDLE_AUDIO))
            .map(|a| {
                let bytes = self.read_verified(record, &a.relative_path)?;
                Ok(BundleFile { path: static_name(&a.relative_path), bytes })
            })
            .collect()
    }

    /// Loads a coding section with every non-audio file hash-verified. The
    /// audio reference is returned for streaming.
    pub fn load_coding_bundle(&self, section_id: &SectionId) -> Result<(SectionRecording, ArtifactRef), StoreError> {
        let record = self.section_record(section_id)?;
        let files = self.read_bundle_files(&record, true)?;
        let section = parse_coding_bundle(&files)?;
        let audio = record.artifact(BUNDLE_AUDIO).cloned().ok_or_else(|| StoreError::not_found("artifact", format!("{}/{BUNDLE_AUDIO}", record.bundle_id)))?;
        Ok((section, audio))
    }

    pub fn load_quiz_bundle(&self, section_id: &SectionId) -> Result<QuizSection, StoreError> {
        let record = self.section_record(section_id)?;
        let files = self.read_bundle_files(&record, false)?;
        Ok(parse_quiz_bundle(&files)?)
    }

    /// Drops the section record, then its bundle.
    pub fn remove_section(&self, section_id: &SectionId) -> Result<(), StoreError> {
        let record = self.section_record(section_id)?;
        self.meta.delete_section(section_id)?;
        match self.bundles.remove_bundle(&record.bundle_id) {
            Ok(()) | Err(StoreError::NotFound { .. }) => Ok(()),
            Err(err) => Err(err),
        }
    }

    /// Cross-checks tutorials, section records and bundle directories, and
    /// re-hashes every stored file.
    pub fn audit(&self) -> Result<AuditReport, StoreError> {
        let mut report = AuditReport::default();
        let sections = self.meta.all_sections()?;
        let known: std::collections::BTreeMap<&SectionId, &SectionRecord> = sections.iter().map(|s| (&s.section_id, s)).collect();
        for tutorial in self.meta.all_tutorials()? {
            for sref in &tutorial.sections {
                if !known.contains_key(&sref.id) {
                    report.dangling_refs.push((tutorial.tutorial_id.clone(), sref.id.clone()));
                }
            }
        }
        let on_disk: std::collections::BTreeSet<BundleId> = self.bundles.list_bundles()?.into_iter().collect();
        for record in &sections {
            if !on_disk.contains(&record.bundle_id) {
                report.missing_bundles.push(record.section_id.clone());
                continue;
            }
            for artifact in &record.artifacts {
                match self.bundles.read_file(&record.bundle_id, &artifact.relative_path).map(|b| artifact.verify(&b)) {
                    Ok(Ok(())) => {}
                    _ => report.corrupt_files.push((record.bundle_id.clone(), artifact.relative_path.clone())),
                }
            }
        }
        let referenced: std::collections::BTreeSet<&BundleId> = sections.iter().map(|s| &s.bundle_id).collect();
        report.orphan_bundles = on_disk.into_iter().filter(|b| !referenced.contains(b)).collect();
        Ok(report)
    }
}

fn static_name(path: &str) -> &'static str {
    use tutorcast_core::model::{BUNDLE_ACTIONS, BUNDLE_CODE, BUNDLE_MANIFEST, BUNDLE_NOTES, BUNDLE_QUIZ, BUNDLE_TRANSCRIPT};
    [BUNDLE_MANIFEST, BUNDLE_ACTIONS, BUNDLE_NOTES, BUNDLE_CODE, BUNDLE_QUIZ, BUNDLE_AUDIO, BUNDLE_TRANSCRIPT].into_iter().find(|n| *n == path).unwrap_or("unknown")
}
