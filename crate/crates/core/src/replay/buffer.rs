use serde::{Deserialize, Serialize};

use crate::model::Position;

/// Text of one pane plus the author's cursor.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Buffer {
    pub text: String,
    pub cursor: Position,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum EditFault {
    OutOfBounds,
    Mismatch { found: String },
}

impl Buffer {
    pub fn new(text: impl Into<String>) -> Self {
        Buffer { text: text.into(), cursor: Position::default() }
    }

    /// Byte offset of `pos`, or `None` when the line or column does not exist.
    pub fn byte_offset(&self, pos: Position) -> Option<usize> {
        let bytes = self.text.as_bytes();
        let mut line_start = 0;
        for _ in 0..pos.line {
            let nl = bytes[line_start..].iter().position(|&b| b == b'\n')?;
            line_start += nl + 1;
        }
        let line = &self.text[line_start..];
        let line = &line[..line.find('\n').unwrap_or(line.len())];
        let col = pos.column as usize;
        if col == 0 {
            return Some(line_start);
        }
        let mut chars = line.char_indices();
        match chars.nth(col) {
            Some((b, _)) => Some(line_start + b),
            None if line.chars().count() == col => Some(line_start + line.len()),
            None => None,
        }
    }

    pub(crate) fn insert(&mut self, pos: Position, text: &str) -> Result<(), EditFault> {
        let at = self.byte_offset(pos).ok_or(EditFault::OutOfBounds)?;
        self.text.insert_str(at, text);
        self.cursor = advance(pos, text);
        Ok(())
    }

    pub(crate) fn delete(&mut self, pos: Position, text: &str) -> Result<(), EditFault> {
        let at = self.byte_offset(pos).ok_or(EditFault::OutOfBounds)?;
        if !self.text[at..].starts_with(text) {
            let found: String = self.text[at..].chars().take(text.chars().count()).collect();
            return Err(EditFault::Mismatch { found });
        }
        self.text.replace_range(at..at + text.len(), "");
        self.cursor = pos;
        Ok(())
    }
}

/// Position just past `text` when typed at `pos`.
pub fn advance(pos: Position, text: &str) -> Position {
    match text.rfind('\n') {
        Some(last) => Position {
            line: pos.line + text.matches('\n').count() as u32,
            column: text[last + 1..].chars().count() as u32,
        },
        None => Position { line: pos.line, column: pos.column + text.chars().count() as u32 },
    }
}
