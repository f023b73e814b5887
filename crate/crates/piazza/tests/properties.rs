//! Property tests for the serialization and numeric invariants.

use proptest::prelude::*;

use piazza::domain::{
    read_events_jsonl, write_events_jsonl, Event, EventKind, EventPayload,
};
use piazza::opinion::StanceLabel;
use piazza::seeding::normalize_activity;
use piazza::stats::percentile;

fn arb_payload() -> impl Strategy<Value = (EventKind, EventPayload)> {
    prop_oneof![
        ("[a-z_]{1,12}", ".{0,80}").prop_map(|(topic, text)| {
            (EventKind::Post, EventPayload::Post { topic_id: topic.as_str().into(), text })
        }),
        ("[a-z_]{1,12}", ".{0,80}", "c[0-9]{1,6}").prop_map(|(topic, text, parent)| {
            (
                EventKind::Comment,
                EventPayload::Comment {
                    topic_id: topic.as_str().into(),
                    text,
                    parent: parent.as_str().into(),
                },
            )
        }),
        ("[a-z_]{1,12}", 0usize..5, ".{0,60}").prop_map(|(topic, label, justification)| {
            let label = StanceLabel::ALL[label];
            (
                EventKind::OpinionUpdate,
                EventPayload::OpinionUpdate {
                    topic_id: topic.as_str().into(),
                    label,
                    score: label.score(),
                    justification,
                },
            )
        }),
        Just((EventKind::Like, EventPayload::Empty {})),
        Just((EventKind::Follow, EventPayload::Empty {})),
        ".{0,60}".prop_map(|message| {
            (EventKind::DriverError, EventPayload::Failure { message })
        }),
    ]
}

proptest! {
    #[test]
    fn event_log_roundtrips_through_jsonl(
        entries in prop::collection::vec((0u32..21, 0u32..24, arb_payload()), 1..40)
    ) {
        let events: Vec<Event> = entries
            .into_iter()
            .enumerate()
            .map(|(i, (day, hour, (kind, payload)))| Event {
                tick_day: day,
                tick_hour: hour,
                seq: i as u64,
                kind,
                actor: format!("a{i:04}").as_str().into(),
                target: None,
                content_id: Some(format!("c{i:06}").as_str().into()),
                payload,
            })
            .collect();
        let mut buf = Vec::new();
        write_events_jsonl(&mut buf, &events).unwrap();
        let back = read_events_jsonl(&buf[..]).unwrap();
        prop_assert_eq!(back, events);
    }

    #[test]
    fn percentile_stays_within_bounds_and_is_monotone(
        mut values in prop::collection::vec(-1e6f64..1e6, 1..200),
        p_low in 0.0f64..1.0,
        p_high in 0.0f64..1.0,
    ) {
        let (p_low, p_high) = if p_low <= p_high { (p_low, p_high) } else { (p_high, p_low) };
        let lo = values.iter().copied().fold(f64::MAX, f64::min);
        let hi = values.iter().copied().fold(f64::MIN, f64::max);
        let at_low = percentile(&values, p_low).unwrap();
        let at_high = percentile(&values, p_high).unwrap();
        prop_assert!(at_low >= lo && at_low <= hi);
        prop_assert!(at_low <= at_high);

        // Pointwise increase never lowers a percentile.
        for v in values.iter_mut() {
            *v += 1.0;
        }
        prop_assert!(percentile(&values, p_high).unwrap() >= at_high);
    }

    #[test]
    fn nearest_label_minimises_distance(score in -1.0f64..=1.0) {
        let label = StanceLabel::nearest(score).unwrap();
        for other in StanceLabel::ALL {
            prop_assert!(
                (score - label.score()).abs() <= (score - other.score()).abs() + 1e-15
            );
        }
    }

    #[test]
    fn activity_is_clamped_and_monotone(
        n in 0u64..100_000,
        extra in 1u64..1000,
        threshold in 0.001f64..10_000.0,
    ) {
        let base = normalize_activity(n, threshold).unwrap();
        let more = normalize_activity(n + extra, threshold).unwrap();
        prop_assert!((0.0..=1.0).contains(&base));
        prop_assert!(more >= base);
    }
}
