use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use crate::artifact::{safe_relative_path, ArtifactRef, BundleId};
use crate::StoreError;

/// Immutable per-bundle file storage.
pub trait BundleStore: Send + Sync {
    /// Writes every file or nothing. The bundle becomes visible only once
    /// all files are on disk.
    fn write_bundle(&self, bundle_id: &BundleId, files: &[(&str, &[u8])]) -> Result<Vec<ArtifactRef>, StoreError>;
    fn read_file(&self, bundle_id: &BundleId, relative_path: &str) -> Result<Vec<u8>, StoreError>;
    fn list_bundles(&self) -> Result<Vec<BundleId>, StoreError>;
    fn remove_bundle(&self, bundle_id: &BundleId) -> Result<(), StoreError>;
}

/// Test hook: makes the next bundle write fail after a number of files,
/// leaving its staging directory behind as a crash would.
#[derive(Debug, Clone, Default)]
pub struct FaultHook(Arc<AtomicUsize>);

impl FaultHook {
    const DISARMED: usize = usize::MAX;

    pub fn new() -> Self {
        FaultHook(Arc::new(AtomicUsize::new(Self::DISARMED)))
    }

    pub fn fail_after(&self, files: usize) {
        self.0.store(files, Ordering::SeqCst);
    }

    pub fn disarm(&self) {
        self.0.store(Self::DISARMED, Ordering::SeqCst);
    }

    fn take(&self) -> Option<usize> {
        match self.0.swap(Self::DISARMED, Ordering::SeqCst) {
            Self::DISARMED => None,
            n => Some(n),
        }
    }
}

/// Local filesystem layout: `<root>/bundles/<id>/<file>`, staged under
/// `<root>/staging` and published with a directory rename.
#[derive(Debug)]
pub struct FsBundleStore {
    root: PathBuf,
    faults: FaultHook,
}

impl FsBundleStore {
    /// Opens (creating if needed) a store under `root`. Leftover staging
    /// directories from interrupted writes are removed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("bundles"))?;
        let staging = root.join("staging");
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        Ok(FsBundleStore { root, faults: FaultHook::new() })
    }

    pub fn fault_hook(&self) -> FaultHook {
        self.faults.clone()
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn bundle_dir(&self, bundle_id: &BundleId) -> Result<PathBuf, StoreError> {
        Ok(self.root.join("bundles").join(safe_relative_path(bundle_id.as_str()).and_then(single_segment)?))
    }

    /// Absolute path of a stored file, for streaming large artifacts.
    pub fn file_path(&self, bundle_id: &BundleId, relative_path: &str) -> Result<PathBuf, StoreError> {
        Ok(self.bundle_dir(bundle_id)?.join(safe_relative_path(relative_path)?))
    }
}

fn single_segment(p: PathBuf) -> Result<PathBuf, StoreError> {
    if p.components().count() == 1 {
        Ok(p)
    } else {
        Err(StoreError::Traversal(p.display().to_string()))
    }
}

fn write_synced(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()
}

impl BundleStore for FsBundleStore {
    fn write_bundle(&self, bundle_id: &BundleId, files: &[(&str, &[u8])]) -> Result<Vec<ArtifactRef>, StoreError> {
        let target = self.bundle_dir(bundle_id)?;
        if target.exists() {
            return Err(StoreError::AlreadyExists { kind: "bundle", id: bundle_id.to_string() });
        }
        let paths = files.iter().map(|(p, _)| safe_relative_path(p)).collect::<Result<Vec<_>, _>>()?;
        let staging = self.root.join("staging").join(format!("{bundle_id}.{}", uuid::Uuid::new_v4().simple()));
        fs::create_dir_all(&staging)?;
        let fail_after = self.faults.take();

        let mut refs = Vec::with_capacity(files.len());
        for (i, ((name, bytes), rel)) in files.iter().zip(&paths).enumerate() {
            if fail_after == Some(i) {
                return Err(StoreError::InjectedFault(i));
            }
            if let Err(err) = write_synced(&staging.join(rel), bytes) {
                let _ = fs::remove_dir_all(&staging);
                return Err(err.into());
            }
            refs.push(ArtifactRef::describe(bundle_id, name, bytes));
        }
        if let Err(err) = fs::rename(&staging, &target) {
            let _ = fs::remove_dir_all(&staging);
            return Err(if target.exists() { StoreError::AlreadyExists { kind: "bundle", id: bundle_id.to_string() } } else { err.into() });
        }
        if let Ok(dir) = File::open(self.root.join("bundles")) {
            let _ = dir.sync_all();
        }
        Ok(refs)
    }

    fn read_file(&self, bundle_id: &BundleId, relative_path: &str) -> Result<Vec<u8>, StoreError> {
        let path = self.file_path(bundle_id, relative_path)?;
        fs::read(&path).map_err(|err| match err.kind() {
            std::io::ErrorKind::NotFound => StoreError::not_found("artifact", format!("{bundle_id}/{relative_path}")),
            _ => err.into(),
        })
    }

    fn list_bundles(&self) -> Result<Vec<BundleId>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(self.root.join("bundles"))? {
            let entry = entry?;
            if entry.file_type()?.is_dir() {
                ids.push(BundleId(entry.file_name().to_string_lossy().into_owned()));
            }
        }
        ids.sort();
        Ok(ids)
    }

    fn remove_bundle(&self, bundle_id: &BundleId) -> Result<(), StoreError> {
        let dir = self.bundle_dir(bundle_id)?;
        // Unpublish first so readers never observe a half-deleted bundle.
        let trash = self.root.join("staging").join(format!("{bundle_id}.deleted.{}", uuid::Uuid::new_v4().simple()));
        match fs::rename(&dir, &trash) {
            Ok(()) => Ok(fs::remove_dir_all(&trash)?),
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => Err(StoreError::not_found("bundle", bundle_id)),
            Err(err) => Err(err.into()),
        }
    }
}

/// Bundles kept in process memory. Same visibility rules as the filesystem
/// store, without durability.
#[derive(Debug, Default)]
pub struct MemoryBundleStore {
    bundles: Mutex<BTreeMap<BundleId, BTreeMap<String, Vec<u8>>>>,
}

impl MemoryBundleStore {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, BTreeMap<BundleId, BTreeMap<String, Vec<u8>>>> {
        self.bundles.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }
}

impl BundleStore for MemoryBundleStore {
    fn write_bundle(&self, bundle_id: &BundleId, files: &[(&str, &[u8])]) -> Result<Vec<ArtifactRef>, StoreError> {
        safe_relative_path(bundle_id.as_str()).and_then(single_segment)?;
        let mut staged = BTreeMap::new();
        let mut refs = Vec::with_capacity(files.len());
        for (name, bytes) in files {
            safe_relative_path(name)?;
            staged.insert((*name).to_owned(), bytes.to_vec());
            refs.push(ArtifactRef::describe(bundle_id, name, bytes));
        }
        let mut bundles = self.lock();
        if bundles.contains_key(bundle_id) {
            return Err(StoreError::AlreadyExists { kind: "bundle", id: bundle_id.to_string() });
        }
        bundles.insert(bundle_id.clone(), staged);
        Ok(refs)
    }

    fn read_file(&self, bundle_id: &BundleId, relative_path: &str) -> Result<Vec<u8>, StoreError> {
        safe_relative_path(relative_path)?;
        self.lock()
            .get(bundle_id)
            .and_then(|files| files.get(relative_path))
            .cloned()
            .ok_or_else(|| StoreError::not_found("artifact", format!("{bundle_id}/{relative_path}")))
    }

    fn list_bundles(&self) -> Result<Vec<BundleId>, StoreError> {
        Ok(self.lock().keys().cloned().collect())
    }

    fn remove_bundle(&self, bundle_id: &BundleId) -> Result<(), StoreError> {
        self.lock().remove(bundle_id).map(|_| ()).ok_or_else(|| StoreError::not_found("bundle", bundle_id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_read_list_remove() {
        let dir = tempfile::tempdir().unwrap();
        let store = FsBundleStore::open(dir.path()).unwrap();
        let id = BundleId("b1".into());
        let refs = store.write_bundle(&id, &[("a.json", b"{}"), ("sub/b.txt", b"hello")]).unwrap();
        assert_eq!(refs.len(), 2);
        assert_eq!(refs[1].byte_size, 5);
        assert_eq!(store.read_file(&id, "sub/b.txt").unwrap(), b"hello");
        assert_eq!(store.list_bundles().unwrap(), vec![id.clone()]);
        assert!(matches!(store.write_bundle(&id, &[("a.json", b"{}")]), Err(StoreError::AlreadyExists { .. })));
        store.remove_bundle(&id).unwrap();
        assert!(store.list_bundles().unwrap().is_empty());
        assert!(matches!(store.read_file(&id, "a.json"), Err(StoreError::NotFound { .. })));
    }

    #[test]
    fn traversal_in_ids_and_paths() {
        let dir = tempfile::tempdir().unwrap();
        let store = FsBundleStore::open(dir.path().join("s")).unwrap();
        assert!(matches!(store.write_bundle(&BundleId("../x".into()), &[("a", b"")]), Err(StoreError::Traversal(_))));
        assert!(matches!(store.write_bundle(&BundleId("a/b".into()), &[("a", b"")]), Err(StoreError::Traversal(_))));
        assert!(matches!(store.write_bundle(&BundleId("ok".into()), &[("../../escape", b"")]), Err(StoreError::Traversal(_))));
        assert!(matches!(store.read_file(&BundleId("ok".into()), "../ok/a"), Err(StoreError::Traversal(_))));
        assert!(!dir.path().join("escape").exists());
        assert!(store.list_bundles().unwrap().is_empty());
    }

    #[test]
    fn crash_mid_write_leaves_nothing_visible() {
        let dir = tempfile::tempdir().unwrap();
        let store = FsBundleStore::open(dir.path()).unwrap();
        store.fault_hook().fail_after(1);
        let id = BundleId("b".into());
        assert!(matches!(store.write_bundle(&id, &[("a", b"1"), ("b", b"2"), ("c", b"3")]), Err(StoreError::InjectedFault(1))));
        assert!(store.list_bundles().unwrap().is_empty());
        assert!(store.read_file(&id, "a").is_err());
        // Restart discards the orphaned staging directory; the id is reusable.
        drop(store);
        let store = FsBundleStore::open(dir.path()).unwrap();
        assert_eq!(fs::read_dir(dir.path().join("staging")).unwrap().count(), 0);
        store.write_bundle(&id, &[("a", b"1")]).unwrap();
    }
}
