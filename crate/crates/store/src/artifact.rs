use std::fmt;
use std::path::{Component, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::StoreError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BundleId(pub String);

impl BundleId {
    pub fn generate() -> Self {
        BundleId(uuid::Uuid::new_v4().simple().to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BundleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One stored file of a bundle, as recorded in the metadata store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub bundle_id: BundleId,
    pub relative_path: String,
    pub byte_size: u64,
    /// Lowercase hex SHA-256 of the file bytes.
    pub content_hash: String,
}

impl ArtifactRef {
    pub fn describe(bundle_id: &BundleId, relative_path: &str, bytes: &[u8]) -> Self {
        ArtifactRef { bundle_id: bundle_id.clone(), relative_path: relative_path.to_owned(), byte_size: bytes.len() as u64, content_hash: content_hash(bytes) }
    }

    pub fn verify(&self, bytes: &[u8]) -> Result<(), StoreError> {
        let integrity = |detail: String| StoreError::Integrity { bundle_id: self.bundle_id.to_string(), file: self.relative_path.clone(), detail };
        if bytes.len() as u64 != self.byte_size {
            return Err(integrity(format!("size {} != recorded {}", bytes.len(), self.byte_size)));
        }
        let actual = content_hash(bytes);
        if actual != self.content_hash {
            return Err(integrity(format!("sha256 {actual} != recorded {}", self.content_hash)));
        }
        Ok(())
    }
}

pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Accepts only plain relative paths made of normal components.
pub fn safe_relative_path(path: &str) -> Result<PathBuf, StoreError> {
    let reject = || StoreError::Traversal(path.to_owned());
    if path.is_empty() || path.contains('\\') || path.contains('\0') {
        return Err(reject());
    }
    let mut out = PathBuf::new();
    for segment in path.split('/') {
        if segment.is_empty() || segment == "." || segment == ".." {
            return Err(reject());
        }
        out.push(segment);
    }
    // Belt and braces: the joined path must still be purely relative.
    if !out.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(reject());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traversal_rejected() {
        for bad in ["", "../x", "a/../../x", "/etc/passwd", "a\\b", "./", "..", "a/./b"] {
            assert!(safe_relative_path(bad).is_err(), "{bad}");
        }
        assert_eq!(safe_relative_path("manifest.json").unwrap(), PathBuf::from("manifest.json"));
        assert_eq!(safe_relative_path("media/audio.mp3").unwrap(), PathBuf::from("media/audio.mp3"));
    }

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(content_hash(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        let r = ArtifactRef::describe(&BundleId("b".into()), "x", b"abc");
        assert!(r.verify(b"abc").is_ok());
        assert!(matches!(r.verify(b"abd"), Err(StoreError::Integrity { .. })));
    }
}
