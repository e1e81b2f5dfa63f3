use std::sync::{Arc, Barrier};

use tutorcast_core::model::{SectionId, SectionKind, SectionRef, Tutorial, TutorialId, TutorialStatus, UserId};
use tutorcast_store::{MemoryMetadata, MetadataStore, Role, SqliteMetadata, StoreError, UserRecord};

fn backends() -> Vec<(&'static str, Arc<dyn MetadataStore>)> {
    vec![("memory", Arc::new(MemoryMetadata::new())), ("sqlite", Arc::new(SqliteMetadata::open_in_memory().unwrap()))]
}

fn tutorial(id: &str, sections: &[&str]) -> Tutorial {
    let mut t = Tutorial::new(TutorialId::new(id), format!("Tutorial {id}"), "python", UserId::new("alice"));
    t.sections = sections.iter().map(|s| SectionRef { id: SectionId::new(*s), kind: SectionKind::Coding }).collect();
    t
}

#[test]
fn users_are_unique_by_name() {
    for (name, store) in backends() {
        let user = UserRecord { user_id: UserId::new("u1"), username: "alice".into(), role: Role::Author, password_hash: "x".into(), external_subject: None };
        store.insert_user(&user).unwrap();
        let dup = UserRecord { user_id: UserId::new("u2"), ..user.clone() };
        assert!(matches!(store.insert_user(&dup), Err(StoreError::AlreadyExists { .. })), "{name}");
        assert_eq!(store.user_by_name("alice").unwrap(), Some(user.clone()), "{name}");
        assert_eq!(store.user(&UserId::new("u1")).unwrap(), Some(user), "{name}");
        assert_eq!(store.user_by_name("bob").unwrap(), None, "{name}");
    }
}

#[test]
fn versioned_updates() {
    for (name, store) in backends() {
        let stored = store.insert_tutorial(&tutorial("t1", &["a"])).unwrap();
        assert_eq!(stored.version, 1);
        let mut next = stored.clone();
        next.title = "renamed".into();
        let updated = store.update_tutorial(&next).unwrap();
        assert_eq!(updated.version, 2, "{name}");
        assert!(matches!(store.update_tutorial(&next), Err(StoreError::Conflict { expected: 1, found: 2, .. })), "{name}");
        assert!(matches!(store.update_tutorial(&tutorial("nope", &[])), Err(StoreError::NotFound { .. })), "{name}");
        assert!(matches!(store.delete_tutorial(&stored.tutorial_id, 1), Err(StoreError::Conflict { .. })), "{name}");
        store.delete_tutorial(&stored.tutorial_id, 2).unwrap();
        assert_eq!(store.tutorial(&stored.tutorial_id).unwrap(), None, "{name}");
    }
}

#[test]
fn released_listing_by_release_time() {
    for (name, store) in backends() {
        for (id, released_at) in [("t1", Some(300)), ("t2", None), ("t3", Some(100)), ("t4", Some(200))] {
            let mut t = store.insert_tutorial(&tutorial(id, &["s"])).unwrap();
            if let Some(at) = released_at {
                t.status = TutorialStatus::Released;
                t.released_at = Some(at);
                store.update_tutorial(&t).unwrap();
            }
        }
        let ids: Vec<String> = store.list_released().unwrap().into_iter().map(|t| t.tutorial_id.to_string()).collect();
        assert_eq!(ids, ["t3", "t4", "t1"], "{name}");
        assert_eq!(store.tutorials_by_owner(&UserId::new("alice")).unwrap().len(), 4, "{name}");
    }
}

#[test]
fn concurrent_resequence_exactly_one_wins() {
    for (name, store) in backends() {
        for round in 0..20 {
            let id = format!("t{round}");
            let base = store.insert_tutorial(&tutorial(&id, &["a", "b", "c"])).unwrap();
            let barrier = Arc::new(Barrier::new(2));
            let orders = [["c", "a", "b"], ["b", "c", "a"]];
            let handles: Vec<_> = orders
                .into_iter()
                .map(|order| {
                    let (store, barrier, mut t) = (store.clone(), barrier.clone(), base.clone());
                    std::thread::spawn(move || {
                        t.sections = order.iter().map(|s| SectionRef { id: SectionId::new(*s), kind: SectionKind::Coding }).collect();
                        barrier.wait();
                        store.update_tutorial(&t)
                    })
                })
                .collect();
            let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
            let wins = results.iter().filter(|r| r.is_ok()).count();
            let conflicts = results.iter().filter(|r| matches!(r, Err(StoreError::Conflict { .. }))).count();
            assert_eq!((wins, conflicts), (1, 1), "{name} round {round}");
            let winner = results.into_iter().find_map(Result::ok).unwrap();
            assert_eq!(store.tutorial(&base.tutorial_id).unwrap().unwrap(), winner, "{name}");
        }
    }
}

#[test]
fn sqlite_persists_across_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("meta.sqlite3");
    {
        let store = SqliteMetadata::open(&path).unwrap();
        store.insert_tutorial(&tutorial("t1", &["x"])).unwrap();
    }
    let store = SqliteMetadata::open(&path).unwrap();
    assert_eq!(store.tutorial(&TutorialId::new("t1")).unwrap().unwrap().sections.len(), 1);
}
