//! Compact positional encoding for action events.
//!
//! Every event is a JSON array `[seq, at, tag, ...fields]`:
//!
//! | tag   | fields                                         |
//! |-------|------------------------------------------------|
//! | `"i"` | pane, line, column, inserted text              |
//! | `"d"` | pane, line, column, deleted text               |
//! | `"h"` | pane, start, end, active                       |
//! | `"s"` | pane, fraction                                 |
//! | `"l"` | list of `[pane, kind, x, y, w, h, visible, maximized]` |
//! | `"x"` | code_snapshot_seq, stdin, stdout, stderr       |
//!
//! A minute of keystroke-level recording stays in the tens of kilobytes
//! with this layout, where a keyed object per event would not.

use std::fmt;

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Action, ActionEvent, CodeEdit, EditKind, ExecutionMarker, Highlight, Pane, PaneId, PaneKind, PanelLayout, Position, Scroll, Timestamp};

#[derive(Serialize, Deserialize)]
struct PaneTuple(PaneId, PaneKind, f64, f64, f64, f64, bool, bool);

impl From<&Pane> for PaneTuple {
    fn from(p: &Pane) -> Self {
        PaneTuple(p.pane_id.clone(), p.kind, p.x, p.y, p.width, p.height, p.visible, p.maximized)
    }
}

impl From<PaneTuple> for Pane {
    fn from(t: PaneTuple) -> Self {
        let PaneTuple(pane_id, kind, x, y, width, height, visible, maximized) = t;
        Pane { pane_id, kind, x, y, width, height, visible, maximized }
    }
}

struct LayoutRef<'a>(&'a PanelLayout);

impl Serialize for LayoutRef<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.panes.iter().map(PaneTuple::from))
    }
}

impl Serialize for ActionEvent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let fields = match &self.action {
            Action::Edit(_) | Action::Highlight(_) => 7,
            Action::Scroll(_) => 5,
            Action::Layout(_) => 4,
            Action::Execution(_) => 7,
        };
        let mut seq = serializer.serialize_seq(Some(fields))?;
        seq.serialize_element(&self.seq)?;
        seq.serialize_element(&self.at.0)?;
        match &self.action {
            Action::Edit(e) => {
                seq.serialize_element(match e.kind {
                    EditKind::Insert => "i",
                    EditKind::Delete => "d",
                })?;
                seq.serialize_element(&e.pane_id)?;
                seq.serialize_element(&e.position.line)?;
                seq.serialize_element(&e.position.column)?;
                seq.serialize_element(&e.text)?;
            }
            Action::Highlight(h) => {
                seq.serialize_element("h")?;
                seq.serialize_element(&h.pane_id)?;
                seq.serialize_element(&h.start)?;
                seq.serialize_element(&h.end)?;
                seq.serialize_element(&h.active)?;
            }
            Action::Scroll(s) => {
                seq.serialize_element("s")?;
                seq.serialize_element(&s.pane_id)?;
                seq.serialize_element(&s.fraction)?;
            }
            Action::Layout(l) => {
                seq.serialize_element("l")?;
                seq.serialize_element(&LayoutRef(l))?;
            }
            Action::Execution(x) => {
                seq.serialize_element("x")?;
                seq.serialize_element(&x.code_snapshot_seq)?;
                seq.serialize_element(&x.stdin)?;
                seq.serialize_element(&x.stdout)?;
                seq.serialize_element(&x.stderr)?;
            }
        }
        seq.end()
    }
}

struct EventVisitor;

fn next<'de, A, T>(seq: &mut A, idx: usize) -> Result<T, A::Error>
where
    A: SeqAccess<'de>,
    T: Deserialize<'de>,
{
    seq.next_element()?.ok_or_else(|| de::Error::invalid_length(idx, &EventVisitor))
}

impl<'de> Visitor<'de> for EventVisitor {
    type Value = ActionEvent;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("an action event array [seq, at, tag, ...]")
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<ActionEvent, A::Error> {
        let event_seq: u64 = next(&mut seq, 0)?;
        let at: u64 = next(&mut seq, 1)?;
        let tag: String = next(&mut seq, 2)?;
        let action = match tag.as_str() {
            "i" | "d" => Action::Edit(CodeEdit {
                kind: if tag == "i" { EditKind::Insert } else { EditKind::Delete },
                pane_id: next(&mut seq, 3)?,
                position: Position { line: next(&mut seq, 4)?, column: next(&mut seq, 5)? },
                text: next(&mut seq, 6)?,
            }),
            "h" => Action::Highlight(Highlight {
                pane_id: next(&mut seq, 3)?,
                start: next(&mut seq, 4)?,
                end: next(&mut seq, 5)?,
                active: next(&mut seq, 6)?,
            }),
            "s" => Action::Scroll(Scroll { pane_id: next(&mut seq, 3)?, fraction: next(&mut seq, 4)? }),
            "l" => {
                let panes: Vec<PaneTuple> = next(&mut seq, 3)?;
                Action::Layout(PanelLayout { panes: panes.into_iter().map(Pane::from).collect() })
            }
            "x" => Action::Execution(ExecutionMarker {
                code_snapshot_seq: next(&mut seq, 3)?,
                stdin: next(&mut seq, 4)?,
                stdout: next(&mut seq, 5)?,
                stderr: next(&mut seq, 6)?,
            }),
            other => return Err(de::Error::unknown_variant(other, &["i", "d", "h", "s", "l", "x"])),
        };
        if seq.next_element::<de::IgnoredAny>()?.is_some() {
            return Err(de::Error::custom(format!("trailing fields in event {event_seq}")));
        }
        Ok(ActionEvent { seq: event_seq, at: Timestamp(at), action })
    }
}

impl<'de> Deserialize<'de> for ActionEvent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_seq(EventVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_encodes_positionally() {
        let ev = ActionEvent::new(0, Timestamp(0), CodeEdit::insert("code", Position::new(0, 0), "print('hi')"));
        let json = serde_json::to_string(&ev).unwrap();
        assert_eq!(json, r#"[0,0,"i","code",0,0,"print('hi')"]"#);
        assert_eq!(serde_json::from_str::<ActionEvent>(&json).unwrap(), ev);
    }

    #[test]
    fn layout_round_trips() {
        let ev = ActionEvent::new(3, Timestamp(1500), PanelLayout::default_layout());
        let json = serde_json::to_string(&ev).unwrap();
        assert!(json.starts_with(r#"[3,1500,"l",[["notes","notes",0.0,0.0,0.5,1.0,true,false]"#), "{json}");
        assert_eq!(serde_json::from_str::<ActionEvent>(&json).unwrap(), ev);
    }

    #[test]
    fn rejects_unknown_tag_and_trailing_fields() {
        assert!(serde_json::from_str::<ActionEvent>(r#"[0,0,"q"]"#).is_err());
        assert!(serde_json::from_str::<ActionEvent>(r#"[0,0,"s","code",0.5,1]"#).is_err());
        assert!(serde_json::from_str::<ActionEvent>(r#"[0,0,"s","code"]"#).is_err());
    }
}
