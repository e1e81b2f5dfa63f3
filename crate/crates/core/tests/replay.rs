use proptest::prelude::*;
use tutorcast_core::model::{Action, SectionRecording, Timestamp};
use tutorcast_core::replay::{apply_event, build_snapshot_index, copy_code_at, state_at, PlaybackState, ReplayError};
use tutorcast_core::testkit::{self, oracle_code_at, GenConfig};

fn section(seed: u64, max_events: usize) -> SectionRecording {
    testkit::random_section(&mut testkit::rng(seed), "s", &GenConfig { max_events, ..GenConfig::default() })
}

fn pick_time(section: &SectionRecording, salt: u64) -> Timestamp {
    // Bias toward event timestamps so the inclusive boundary is exercised.
    if salt % 3 == 0 && !section.events.is_empty() {
        section.events[(salt / 3) as usize % section.events.len()].at
    } else {
        Timestamp(salt % (section.duration.0 + 1))
    }
}

/// Plain fold from the initial state over every event with at <= t.
fn brute_force(section: &SectionRecording, t: Timestamp) -> PlaybackState {
    let mut state = PlaybackState::initial(section);
    for e in section.events.iter().take_while(|e| e.at <= t) {
        state = apply_event(&state, e).unwrap();
    }
    state.playhead = t;
    state
}

#[test]
fn final_state_matches_final_code() {
    for seed in 0..200 {
        let s = section(seed, 2000);
        let state = state_at(&s, s.duration, None).unwrap();
        assert_eq!(state.code(), s.final_code, "seed {seed}");
    }
}

#[test]
fn out_of_range_time_is_an_error() {
    let s = section(3, 50);
    let t = Timestamp(s.duration.0 + 1);
    assert!(matches!(state_at(&s, t, None), Err(ReplayError::TimeOutOfRange { .. })));
    assert!(copy_code_at(&s, t, None).is_err());
}

#[test]
fn typing_midway_matches_oracle() {
    let s = tutorcast_core::script::reference_recording("ref");
    let first_edit = s.events.iter().find(|e| matches!(e.action, Action::Edit(_))).unwrap().at;
    for step in 1..30u64 {
        let t = Timestamp(first_edit.0 + step * 400);
        let code = copy_code_at(&s, t, None).unwrap().text;
        assert_eq!(code, oracle_code_at(&s, t), "at {t}");
    }
}

#[test]
fn five_hundred_edit_oracle() {
    let cfg = GenConfig { max_events: 500, edit_weight: 1.0, ..GenConfig::default() };
    let mut rng = testkit::rng(500);
    let mut s = testkit::random_section(&mut rng, "s", &cfg);
    while s.events.len() < 400 {
        s = testkit::random_section(&mut rng, "s", &cfg);
    }
    for e in &s.events {
        let t = e.at;
        assert_eq!(state_at(&s, t, None).unwrap().code(), oracle_code_at(&s, t), "at {t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deterministic(seed in any::<u64>(), salt in any::<u64>()) {
        let s = section(seed, 400);
        let t = pick_time(&s, salt);
        let a = state_at(&s, t, None).unwrap();
        let b = state_at(&s, t, None).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn matches_char_oracle(seed in any::<u64>(), salt in any::<u64>()) {
        let s = section(seed, 400);
        let t = pick_time(&s, salt);
        prop_assert_eq!(state_at(&s, t, None).unwrap().code(), oracle_code_at(&s, t));
    }

    #[test]
    fn seek_equivalence(seed in any::<u64>(), salt in any::<u64>(), interval in 1000u64..8000) {
        let s = section(seed, 1500);
        let index = build_snapshot_index(&s, interval).unwrap();
        let t = pick_time(&s, salt);
        let fast = state_at(&s, t, Some(&index)).unwrap();
        prop_assert_eq!(&fast, &state_at(&s, t, None).unwrap());
        prop_assert_eq!(&fast, &brute_force(&s, t));
    }

    #[test]
    fn monotone_prefix(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let s = section(seed, 400);
        let (t1, t2) = {
            let (x, y) = (pick_time(&s, a), pick_time(&s, b));
            (x.min(y), x.max(y))
        };
        let mut state = state_at(&s, t1, None).unwrap();
        for e in s.events.iter().filter(|e| e.at > t1 && e.at <= t2) {
            state = apply_event(&state, e).unwrap();
        }
        state.playhead = t2;
        prop_assert_eq!(state, state_at(&s, t2, None).unwrap());
    }

    #[test]
    fn backward_seek_has_no_hidden_state(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let s = section(seed, 400);
        let index = build_snapshot_index(&s, 2000).unwrap();
        let (t_late, t_early) = {
            let (x, y) = (pick_time(&s, a), pick_time(&s, b));
            (x.max(y), x.min(y))
        };
        let _ = state_at(&s, t_late, Some(&index)).unwrap();
        let back = state_at(&s, t_early, Some(&index)).unwrap();
        prop_assert_eq!(back, brute_force(&s, t_early));
    }
}
