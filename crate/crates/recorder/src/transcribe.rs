use tutorcast_core::model::{Cue, Timestamp};

/// Turns a section's audio into subtitle cues.
pub trait TranscriptionProvider: Send + Sync {
    fn transcribe(&self, audio: &[u8], duration: Timestamp) -> Vec<Cue>;
}

pub const STUB_CUE_MS: u64 = 10_000;
pub const STUB_CUE_TEXT: &str = "[transcript pending]";

/// Placeholder cues, one per 10 s of audio. Real speech-to-text providers
/// are deployment configuration.
#[derive(Debug, Default, Clone, Copy)]
pub struct StubTranscriber;

impl TranscriptionProvider for StubTranscriber {
    fn transcribe(&self, _audio: &[u8], duration: Timestamp) -> Vec<Cue> {
        (0..duration.0)
            .step_by(STUB_CUE_MS as usize)
            .map(|start| Cue { start: Timestamp(start), end: Timestamp((start + STUB_CUE_MS).min(duration.0)), text: STUB_CUE_TEXT.to_owned() })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_cue_per_ten_seconds() {
        let cues = StubTranscriber.transcribe(b"", Timestamp(25_000));
        let spans: Vec<_> = cues.iter().map(|c| (c.start.0, c.end.0)).collect();
        assert_eq!(spans, [(0, 10_000), (10_000, 20_000), (20_000, 25_000)]);
        assert!(StubTranscriber.transcribe(b"", Timestamp(0)).is_empty());
    }
}
