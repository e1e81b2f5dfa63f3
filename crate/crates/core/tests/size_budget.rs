use tutorcast_core::model::{render_coding_bundle, BUNDLE_AUDIO};
use tutorcast_core::script::reference_recording;
use tutorcast_core::testkit::{self, GenConfig};

const BUDGET: usize = 100 * 1024;

fn non_audio_bytes(s: &tutorcast_core::model::SectionRecording) -> usize {
    render_coding_bundle(s).unwrap().iter().filter(|f| f.path != BUNDLE_AUDIO).map(|f| f.bytes.len()).sum()
}

#[test]
fn reference_recording_fits() {
    let s = reference_recording("reference");
    assert_eq!(s.duration.0, 60_000);
    let total = non_audio_bytes(&s);
    assert!(total <= BUDGET, "{total} bytes");
}

#[test]
fn dense_minute_fits() {
    // 2000 events spread over one minute, the upper end of a realistic recording.
    let cfg = GenConfig { max_events: 2000, max_gap_ms: 55, ..GenConfig::default() };
    let mut rng = testkit::rng(60);
    for _ in 0..20 {
        let mut s = testkit::random_section(&mut rng, "dense", &cfg);
        if s.duration.0 > 60_000 {
            continue;
        }
        s.duration = tutorcast_core::model::Timestamp(60_000);
        let total = non_audio_bytes(&s);
        assert!(total <= BUDGET, "{} events, {total} bytes", s.events.len());
    }
}
