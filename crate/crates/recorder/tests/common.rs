#![allow(dead_code)]

use std::sync::Arc;

use tutorcast_core::model::{ActionEvent, CodeEdit, Position};
use tutorcast_recorder::Recorder;
use tutorcast_store::{MemoryBundleStore, MemoryMetadata, Repository};

pub fn recorder() -> Recorder {
    Recorder::new(Repository::new(Arc::new(MemoryMetadata::new()), Arc::new(MemoryBundleStore::new())))
}

/// One insert per character on the first line of the code pane.
pub fn typed(text: &str, first_seq: u64, start_col: u32) -> Vec<ActionEvent> {
    text.chars()
        .enumerate()
        .map(|(i, c)| {
            let seq = first_seq + i as u64;
            ActionEvent::new(seq, tutorcast_core::model::Timestamp(seq * 100), CodeEdit::insert("code", Position::new(0, start_col + i as u32), c.to_string()))
        })
        .collect()
}
