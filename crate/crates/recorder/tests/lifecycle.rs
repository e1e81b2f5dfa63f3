mod common;

use std::collections::BTreeMap;

use common::{recorder, typed};
use proptest::prelude::*;
use tutorcast_core::model::{Question, QuizSection, SectionId, SectionRef, SessionId, Timestamp, TutorialId, TutorialStatus};
use tutorcast_recorder::{Actor, Recorder, RecorderError};

fn quiz() -> QuizSection {
    QuizSection {
        section_id: SectionId::new("ignored"),
        questions: vec![Question { prompt: "2+2?".into(), choices: vec!["3".into(), "4".into()], correct_index: 1, explanation: "four".into(), points: 2 }],
    }
}

fn with_sections(rec: &Recorder, actor: &Actor, codes: &[&str]) -> (TutorialId, Vec<SectionId>) {
    let t = rec.create_tutorial(actor, "t", "python").unwrap();
    let mut ids = Vec::new();
    for code in codes {
        let s = rec.begin_session(actor, &t.tutorial_id, ids.len(), "", "").unwrap();
        rec.append_events(actor, &s.session_id, &typed(code, 0, 0)).unwrap();
        ids.push(rec.finalize_session(actor, &s.session_id, b"", Timestamp(5000)).unwrap().section_id);
    }
    (t.tutorial_id, ids)
}

fn order(rec: &Recorder, id: &TutorialId) -> Vec<SectionId> {
    rec.tutorial(id).unwrap().sections.into_iter().map(|s| s.id).collect()
}

#[test]
fn resequence_examples() {
    let rec = recorder();
    let alice = Actor::author("alice");
    let (tid, ids) = with_sections(&rec, &alice, &["a", "b", "c"]);
    let [a, b, c] = [ids[0].clone(), ids[1].clone(), ids[2].clone()];

    rec.resequence_sections(&alice, &tid, &[c.clone(), a.clone(), b.clone()]).unwrap();
    assert_eq!(order(&rec, &tid), [c.clone(), a.clone(), b.clone()]);
    let before = rec.tutorial(&tid).unwrap();
    let same = rec.resequence_sections(&alice, &tid, &[c.clone(), a.clone(), b.clone()]).unwrap();
    assert_eq!(same.sections, before.sections);

    for bad in [vec![c.clone(), a.clone()], vec![a.clone(), a.clone(), b.clone()], vec![a.clone(), b.clone(), c.clone(), SectionId::new("x")], vec![]] {
        assert!(matches!(rec.resequence_sections(&alice, &tid, &bad), Err(RecorderError::Input(_))), "{bad:?}");
    }
    assert_eq!(order(&rec, &tid), [c.clone(), a.clone(), b.clone()]);
    assert!(matches!(rec.resequence_sections(&Actor::author("bob"), &tid, &[a, b, c]), Err(RecorderError::Unauthorized(_))));
}

#[test]
fn release_examples() {
    let rec = recorder();
    let alice = Actor::author("alice");
    let (tid, ids) = with_sections(&rec, &alice, &["a", "b"]);
    let released = rec.release_tutorial(&alice, &tid).unwrap();
    assert_eq!(released.status, TutorialStatus::Released);
    assert!(released.released_at.is_some());
    assert_eq!(rec.release_tutorial(&alice, &tid).unwrap(), released);
    assert_eq!(rec.repo().meta.list_released().unwrap(), vec![released]);

    for err in [
        rec.delete_section(&alice, &tid, &ids[0]).unwrap_err(),
        rec.resequence_sections(&alice, &tid, &[ids[1].clone(), ids[0].clone()]).unwrap_err(),
        rec.begin_session(&alice, &tid, 0, "", "").unwrap_err(),
        rec.add_quiz_section(&alice, &tid, None, &quiz()).unwrap_err(),
        rec.redo_section(&alice, &tid, &ids[0], "", "").unwrap_err(),
        rec.delete_tutorial(&alice, &tid).unwrap_err(),
    ] {
        assert!(matches!(err, RecorderError::Lifecycle(_)), "{err}");
    }

    let (empty, ids) = with_sections(&rec, &alice, &["only"]);
    rec.delete_section(&alice, &empty, &ids[0]).unwrap();
    assert!(matches!(rec.release_tutorial(&alice, &empty), Err(RecorderError::Lifecycle(_))));
    assert!(rec.repo().meta.section(&ids[0]).unwrap().is_none());
}

#[test]
fn released_session_cannot_finalize() {
    let rec = recorder();
    let alice = Actor::author("alice");
    let (tid, _) = with_sections(&rec, &alice, &["a"]);
    let s = rec.begin_session(&alice, &tid, 1, "", "").unwrap();
    rec.append_events(&alice, &s.session_id, &typed("z", 0, 0)).unwrap();
    rec.release_tutorial(&alice, &tid).unwrap();
    assert!(matches!(rec.finalize_session(&alice, &s.session_id, b"", Timestamp(1000)), Err(RecorderError::Lifecycle(_))));
    assert_eq!(rec.tutorial(&tid).unwrap().sections.len(), 1);
    assert!(rec.repo().audit().unwrap().is_clean());
}

#[test]
fn quiz_sections_slot_in() {
    let rec = recorder();
    let alice = Actor::author("alice");
    let (tid, ids) = with_sections(&rec, &alice, &["a", "b"]);
    let (t, qid) = rec.add_quiz_section(&alice, &tid, Some(1), &quiz()).unwrap();
    assert_eq!(t.sections.iter().map(|s| s.id.clone()).collect::<Vec<_>>(), [ids[0].clone(), qid.clone(), ids[1].clone()]);
    assert_eq!(rec.repo().load_quiz_bundle(&qid).unwrap().questions, quiz().questions);
    assert!(matches!(rec.add_quiz_section(&alice, &tid, Some(9), &quiz()), Err(RecorderError::Input(_))));
    let mut bad = quiz();
    bad.questions[0].correct_index = 5;
    assert!(matches!(rec.add_quiz_section(&alice, &tid, None, &bad), Err(RecorderError::Input(_))));
}

#[derive(Debug, Clone)]
enum Op {
    Create,
    Begin { tutorial: usize, slot: usize },
    /// Begin, record and finalize in one go.
    Author { tutorial: usize, slot: usize, text: String },
    Record { session: usize, text: String },
    Finalize { session: usize },
    Discard { session: usize },
    Resequence { tutorial: usize, rotate: usize, corrupt: u8 },
    Release { tutorial: usize },
    DeleteSection { tutorial: usize, index: usize },
    Redo { tutorial: usize, index: usize },
    AddQuiz { tutorial: usize, slot: usize },
    DeleteTutorial { tutorial: usize },
}

fn op() -> impl Strategy<Value = Op> {
    let i = 0usize..4;
    prop_oneof![
        1 => Just(Op::Create),
        3 => (i.clone(), 0usize..4).prop_map(|(tutorial, slot)| Op::Begin { tutorial, slot }),
        4 => (i.clone(), 0usize..4, "[a-z]{1,4}").prop_map(|(tutorial, slot, text)| Op::Author { tutorial, slot, text }),
        3 => (i.clone(), "[a-z]{1,4}").prop_map(|(session, text)| Op::Record { session, text }),
        3 => i.clone().prop_map(|session| Op::Finalize { session }),
        1 => i.clone().prop_map(|session| Op::Discard { session }),
        2 => (i.clone(), 0usize..4, 0u8..4).prop_map(|(tutorial, rotate, corrupt)| Op::Resequence { tutorial, rotate, corrupt }),
        3 => i.clone().prop_map(|tutorial| Op::Release { tutorial }),
        1 => (i.clone(), 0usize..4).prop_map(|(tutorial, index)| Op::DeleteSection { tutorial, index }),
        1 => (i.clone(), 0usize..4).prop_map(|(tutorial, index)| Op::Redo { tutorial, index }),
        2 => (i.clone(), 0usize..4).prop_map(|(tutorial, slot)| Op::AddQuiz { tutorial, slot }),
        1 => i.prop_map(|tutorial| Op::DeleteTutorial { tutorial }),
    ]
}

fn pick<T: Clone>(items: &[T], i: usize) -> Option<T> {
    (!items.is_empty()).then(|| items[i % items.len()].clone())
}

struct World {
    rec: Recorder,
    alice: Actor,
    tutorials: Vec<TutorialId>,
    sessions: Vec<SessionId>,
    next_seq: BTreeMap<SessionId, u64>,
    /// Section lists captured at release.
    frozen: BTreeMap<TutorialId, Vec<SectionRef>>,
}

impl World {
    fn step(&mut self, op: &Op) -> Result<(), TestCaseError> {
        let (rec, alice) = (&self.rec, &self.alice);
        match op.clone() {
            Op::Create => self.tutorials.push(rec.create_tutorial(alice, "t", "python").unwrap().tutorial_id),
            Op::Begin { tutorial, slot } => {
                let Some(tid) = pick(&self.tutorials, tutorial) else { return Ok(()) };
                if let Ok(s) = rec.begin_session(alice, &tid, slot, "", "") {
                    self.sessions.push(s.session_id);
                }
            }
            Op::Author { tutorial, slot, text } => {
                let Some(tid) = pick(&self.tutorials, tutorial) else { return Ok(()) };
                if let Ok(s) = rec.begin_session(alice, &tid, slot, "", "") {
                    rec.append_events(alice, &s.session_id, &typed(&text, 0, 0)).unwrap();
                    rec.finalize_session(alice, &s.session_id, b"", Timestamp(1000)).unwrap();
                }
            }
            Op::Record { session, text } => {
                let Some(sid) = pick(&self.sessions, session) else { return Ok(()) };
                let next = self.next_seq.entry(sid.clone()).or_default();
                if rec.append_events(alice, &sid, &typed(&text, *next, *next as u32)).is_ok() {
                    *next += text.len() as u64;
                }
            }
            Op::Finalize { session } => {
                let Some(sid) = pick(&self.sessions, session) else { return Ok(()) };
                let _ = rec.finalize_session(alice, &sid, b"", Timestamp(60_000));
            }
            Op::Discard { session } => {
                let Some(sid) = pick(&self.sessions, session) else { return Ok(()) };
                let _ = rec.discard_session(alice, &sid);
            }
            Op::Resequence { tutorial, rotate, corrupt } => {
                let Some(tid) = pick(&self.tutorials, tutorial) else { return Ok(()) };
                let Ok(t) = rec.tutorial(&tid) else { return Ok(()) };
                let mut ids: Vec<SectionId> = t.sections.iter().map(|s| s.id.clone()).collect();
                if !ids.is_empty() {
                    let k = rotate % ids.len();
                    ids.rotate_left(k);
                }
                let is_perm = match corrupt {
                    1 if !ids.is_empty() => {
                        ids.pop();
                        false
                    }
                    2 if !ids.is_empty() => {
                        ids.push(ids[0].clone());
                        false
                    }
                    3 => {
                        ids.push(SectionId::new("stranger"));
                        false
                    }
                    _ => true,
                };
                let result = rec.resequence_sections(alice, &tid, &ids);
                if !is_perm {
                    prop_assert!(matches!(result, Err(RecorderError::Input(_)) | Err(RecorderError::Lifecycle(_))), "{result:?}");
                    prop_assert_eq!(rec.tutorial(&tid).unwrap().sections, t.sections);
                } else if !t.is_released() {
                    let got: Vec<SectionId> = result.unwrap().sections.into_iter().map(|s| s.id).collect();
                    prop_assert_eq!(got, ids);
                }
            }
            Op::Release { tutorial } => {
                let Some(tid) = pick(&self.tutorials, tutorial) else { return Ok(()) };
                let Ok(before) = rec.tutorial(&tid) else { return Ok(()) };
                match rec.release_tutorial(alice, &tid) {
                    Ok(t) => {
                        prop_assert!(!t.sections.is_empty());
                        self.frozen.entry(tid).or_insert(t.sections);
                    }
                    Err(RecorderError::Lifecycle(_)) => prop_assert!(before.sections.is_empty()),
                    Err(err) => return Err(TestCaseError::fail(err.to_string())),
                }
            }
            Op::DeleteSection { tutorial, index } => {
                let Some(tid) = pick(&self.tutorials, tutorial) else { return Ok(()) };
                let Ok(t) = rec.tutorial(&tid) else { return Ok(()) };
                if let Some(s) = pick(&t.sections, index) {
                    let _ = rec.delete_section(alice, &tid, &s.id);
                }
            }
            Op::Redo { tutorial, index } => {
                let Some(tid) = pick(&self.tutorials, tutorial) else { return Ok(()) };
                let Ok(t) = rec.tutorial(&tid) else { return Ok(()) };
                if let Some(s) = pick(&t.sections, index) {
                    if let Ok(session) = rec.redo_section(alice, &tid, &s.id, "", "") {
                        self.sessions.push(session.session_id);
                    }
                }
            }
            Op::AddQuiz { tutorial, slot } => {
                let Some(tid) = pick(&self.tutorials, tutorial) else { return Ok(()) };
                let _ = rec.add_quiz_section(alice, &tid, Some(slot), &quiz());
            }
            Op::DeleteTutorial { tutorial } => {
                let Some(tid) = pick(&self.tutorials, tutorial) else { return Ok(()) };
                let result = rec.delete_tutorial(alice, &tid);
                if self.frozen.contains_key(&tid) {
                    prop_assert!(result.is_err());
                }
            }
        }
        Ok(())
    }

    fn check(&self) -> Result<(), TestCaseError> {
        for (tid, sections) in &self.frozen {
            let t = self.rec.tutorial(tid).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!(t.is_released());
            prop_assert_eq!(&t.sections, sections, "released tutorial {} changed", tid);
            for s in sections {
                prop_assert!(self.rec.repo().meta.section(&s.id).unwrap().is_some());
            }
        }
        let audit = self.rec.repo().audit().unwrap();
        prop_assert!(audit.dangling_refs.is_empty() && audit.missing_bundles.is_empty() && audit.orphan_bundles.is_empty(), "{audit:?}");
        Ok(())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn released_tutorials_never_change(ops in prop::collection::vec(op(), 10..60)) {
        let mut world = World {
            rec: recorder(),
            alice: Actor::author("alice"),
            tutorials: Vec::new(),
            sessions: Vec::new(),
            next_seq: BTreeMap::new(),
            frozen: BTreeMap::new(),
        };
        world.step(&Op::Create)?;
        for op in &ops {
            world.step(op)?;
            world.check()?;
        }
    }
}
