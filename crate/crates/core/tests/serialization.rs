use std::path::PathBuf;

use proptest::prelude::*;
use tutorcast_core::model::{deserialize_section, render_coding_bundle, render_quiz_bundle, serialize_section, validate_section, BUNDLE_AUDIO};
use tutorcast_core::script::reference_recording;
use tutorcast_core::testkit::{self, GenConfig};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Compares against a checked-in file. Set UPDATE_GOLDEN=1 to rewrite it.
fn golden(name: &str, bytes: &[u8]) {
    let path = fixture(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, bytes).unwrap();
    }
    let expected = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == bytes, "{name} drifted from its golden copy");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_and_canonical(seed in any::<u64>()) {
        let s = testkit::random_section(&mut testkit::rng(seed), "s", &GenConfig { max_events: 800, ..GenConfig::default() });
        prop_assert!(validate_section(&s).is_valid());
        let bytes = serialize_section(&s).unwrap();
        let back = deserialize_section(&bytes).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(serialize_section(&back).unwrap(), bytes);
    }
}

#[test]
fn reference_section_golden() {
    let s = reference_recording("reference");
    let bytes = serialize_section(&s).unwrap();
    golden("reference_section.json", &bytes);
    assert_eq!(deserialize_section(&std::fs::read(fixture("reference_section.json")).unwrap()).unwrap(), s);
}

#[test]
fn reference_bundle_golden() {
    let s = reference_recording("reference");
    for file in render_coding_bundle(&s).unwrap() {
        assert_ne!(file.path, BUNDLE_AUDIO);
        golden(&format!("reference_bundle/{}", file.path), &file.bytes);
    }
}

#[test]
fn quiz_bundle_golden() {
    let quiz = testkit::random_quiz(&mut testkit::rng(11), "quiz");
    for file in render_quiz_bundle(&quiz).unwrap() {
        golden(&format!("quiz_bundle/{}", file.path), &file.bytes);
    }
}

#[test]
fn bytes_stable_within_a_run() {
    let a = serialize_section(&reference_recording("reference")).unwrap();
    let b = serialize_section(&reference_recording("reference")).unwrap();
    assert_eq!(a, b);
}
