mod common;

use std::collections::HashSet;

use common::{arb_element, arb_od, arb_spec};
use num_bigint::BigUint;
use probmusic::combinatorics::{serialization_count, total_count, word_count};
use probmusic::generator::{
    generate_piece, pick_from_bag, stream_rng, GenParams, ScoreEvent, Word,
};
use probmusic::notation::{format_mscore, parse_mscore, split_block, NotationError};
use probmusic::spec::{parse_spec, serialize_spec, InstrumentName, NoteElement, NoteLetter};
use probmusic::CompositionSpec;
use proptest::prelude::*;

fn start() -> chrono::NaiveDateTime {
    chrono::NaiveDate::from_ymd_opt(2013, 10, 28)
        .unwrap()
        .and_hms_opt(0, 43, 12)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spec_text_round_trips(spec in arb_spec(3)) {
        let text = serialize_spec(&spec);
        let back = parse_spec(&text).unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(serialize_spec(&back), text);
    }

    #[test]
    fn every_stream_has_exactly_ms_words(
        spec in arb_spec(3),
        ms in 1usize..=50,
        k in 1usize..=5,
        seed in any::<u64>(),
    ) {
        let params = GenParams { length_ms: ms, streams_k: k, master_seed: seed, ..GenParams::default() };
        let piece = generate_piece(&spec, &params).unwrap();
        prop_assert_eq!(piece.len(), k);
        prop_assert_eq!(piece.iter().map(|m| m.word_count()).sum::<usize>(), ms * k);
        for (i, m) in piece.iter().enumerate() {
            prop_assert_eq!(m.stream_index, i);
            prop_assert_eq!(m.word_count(), ms);
            prop_assert!(matches!(&m.events[0], ScoreEvent::Tempo(t) if t == "Allegro"));
            prop_assert!(matches!(m.events[1], ScoreEvent::InstrumentChange(_)));
            prop_assert!(matches!(m.events.last(), Some(ScoreEvent::Word(_))));
            for pair in m.events[1..].windows(2) {
                prop_assert!(!matches!(pair, [ScoreEvent::InstrumentChange(_), ScoreEvent::InstrumentChange(_)]));
            }
            for e in &m.events {
                match e {
                    ScoreEvent::Word(w) => {
                        prop_assert!(spec.notes.contains(&w.notes));
                        prop_assert!(spec.octave_durations.contains(&w.od));
                    }
                    ScoreEvent::InstrumentChange(name) => prop_assert!(spec.instruments.contains(name)),
                    ScoreEvent::Tempo(_) => {}
                }
            }
        }
    }

    #[test]
    fn generation_is_a_function_of_the_seed(spec in arb_spec(2), seed in any::<u64>()) {
        let params = GenParams { length_ms: 20, master_seed: seed, ..GenParams::default() };
        prop_assert_eq!(generate_piece(&spec, &params).unwrap(), generate_piece(&spec, &params).unwrap());
    }

    #[test]
    fn single_note_scores_round_trip(spec in arb_spec(1), ms in 1usize..40, seed in any::<u64>()) {
        let params = GenParams { length_ms: ms, master_seed: seed, ..GenParams::default() };
        for m in generate_piece(&spec, &params).unwrap() {
            let text = format_mscore(&m, start());
            prop_assert_eq!(&parse_mscore(&text, &spec).unwrap(), &m);
            let reread = split_block(&text.to_string());
            prop_assert_eq!(parse_mscore(&reread, &spec).unwrap(), m);
        }
    }

    #[test]
    fn sequence_scores_round_trip_or_report_ambiguity(spec in arb_spec(3), seed in any::<u64>()) {
        let params = GenParams { length_ms: 15, master_seed: seed, ..GenParams::default() };
        for m in generate_piece(&spec, &params).unwrap() {
            match parse_mscore(&format_mscore(&m, start()), &spec) {
                Ok(back) => prop_assert_eq!(back, m),
                Err(NotationError::AmbiguousSequence(_)) => {}
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }

    #[test]
    fn picks_follow_bag_proportions(
        bag in prop::collection::vec(0u8..4, 1..8),
        seed in any::<u64>(),
    ) {
        const DRAWS: usize = 20_000;
        let mut rng = stream_rng(seed, 0);
        let mut counts = [0usize; 4];
        for _ in 0..DRAWS {
            counts[*pick_from_bag(&bag, &mut rng).unwrap() as usize] += 1;
        }
        for (value, &count) in counts.iter().enumerate() {
            let p = bag.iter().filter(|v| **v as usize == value).count() as f64 / bag.len() as f64;
            let sigma = (DRAWS as f64 * p * (1.0 - p)).sqrt();
            let expected = DRAWS as f64 * p;
            prop_assert!(
                (count as f64 - expected).abs() <= 5.0 * sigma + 1e-9,
                "value {} drawn {} times, expected {:.0} ± {:.0}", value, count, expected, sigma
            );
        }
    }

    #[test]
    fn word_count_is_the_product_of_distinct_counts(
        notes in prop::collection::vec(arb_element(2), 1..8),
        ods in prop::collection::vec(arb_od(), 1..8),
    ) {
        let spec = CompositionSpec {
            title: String::new(),
            notes: notes.clone(),
            octave_durations: ods.clone(),
            instruments: vec![InstrumentName::new("Oboe").unwrap(), InstrumentName::new("oboe").unwrap()],
            keywords: Default::default(),
        };
        let n = notes.iter().collect::<HashSet<_>>().len() as u64;
        let od = ods.iter().collect::<HashSet<_>>().len() as u64;
        prop_assert_eq!(word_count(&spec), n * od);
    }
}

/// All sequences of `len` words over `alphabet`.
fn enumerate(alphabet: &[Word], len: u64) -> HashSet<Vec<Word>> {
    let mut out: HashSet<Vec<Word>> = HashSet::from([Vec::new()]);
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                alphabet.iter().map(move |w| {
                    let mut next = prefix.clone();
                    next.push(w.clone());
                    next
                })
            })
            .collect();
    }
    out
}

fn distinct_words(spec: &CompositionSpec) -> Vec<Word> {
    let mut words = Vec::new();
    for n in &spec.notes {
        for od in &spec.octave_durations {
            let w = Word {
                notes: n.clone(),
                od: *od,
            };
            if !words.contains(&w) {
                words.push(w);
            }
        }
    }
    words
}

#[test]
fn serialization_count_matches_enumeration() {
    let specs = [
        r#"{{"w2"},{"A","C"},{"q"},{"Oboe"}}"#,
        r#"{{"w2 dup"},{"A","C","C","A"},{"q","q"},{"Oboe"}}"#,
        r#"{{"w3"},{"A","C","E"},{"q"},{"Oboe"}}"#,
        r#"{{"w3 dup"},{"A","C","C","E"},{"2h","2h"},{"Oboe","oboe"}}"#,
    ];
    for text in specs {
        let spec = parse_spec(text).unwrap();
        let w = word_count(&spec);
        let alphabet = distinct_words(&spec);
        assert_eq!(alphabet.len() as u64, w);
        for ms in 1..=4 {
            let set = enumerate(&alphabet, ms);
            assert_eq!(
                BigUint::from(set.len()),
                serialization_count(w, ms),
                "{text} ms={ms}"
            );
        }
    }
}

#[test]
fn total_count_matches_enumerated_tuples() {
    let spec = parse_spec(r#"{{"t"},{"A","C"},{"q"},{"Oboe"}}"#).unwrap();
    let alphabet = distinct_words(&spec);
    for (ms, k) in [(1, 1), (1, 3), (2, 2), (3, 2)] {
        let streams = enumerate(&alphabet, ms);
        let mut tuples: HashSet<Vec<Vec<Word>>> = HashSet::from([Vec::new()]);
        for _ in 0..k {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    streams.iter().map(move |s| {
                        let mut next = t.clone();
                        next.push(s.clone());
                        next
                    })
                })
                .collect();
        }
        assert_eq!(BigUint::from(tuples.len()), total_count(2, ms, k));
    }
}

#[test]
fn duplicate_elements_are_one_word() {
    let a = NoteElement::single(NoteLetter::A);
    let spec = parse_spec(r#"{{"t"},{"A","A"},{"q"},{"Oboe"}}"#).unwrap();
    assert_eq!(spec.notes, [a.clone(), a]);
    assert_eq!(word_count(&spec), 1);
}
