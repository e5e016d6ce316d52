//! Spike sorter: counting sort of active events into time order.

use crate::model::{SpikeTime, SpikeTrain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpikeEvent {
    pub neuron: usize,
    pub time: SpikeTime,
}

impl SpikeEvent {
    pub fn new(neuron: usize, time: SpikeTime) -> Self {
        SpikeEvent { neuron, time }
    }
}

/// Active events ordered by `(time, neuron)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventQueue {
    events: Vec<SpikeEvent>,
}

impl EventQueue {
    pub fn events(&self) -> &[SpikeEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Builds a queue from events that are already in `(time, neuron)`
    /// order. Returns `None` otherwise.
    pub fn from_sorted(events: Vec<SpikeEvent>) -> Option<Self> {
        let ordered = events
            .windows(2)
            .all(|w| (w[0].time, w[0].neuron) < (w[1].time, w[1].neuron));
        ordered.then_some(EventQueue { events })
    }

    /// Prefix of events at or before `cutoff`.
    pub fn truncate_after(&self, cutoff: SpikeTime) -> EventQueue {
        let end = self.events.partition_point(|e| e.time <= cutoff);
        EventQueue {
            events: self.events[..end].to_vec(),
        }
    }
}

/// Stable counting sort over `t_max` buckets; silent neurons are dropped.
///
/// Neurons are visited in ascending index, so events sharing a timestep
/// come out in ascending neuron order.
pub fn sort_spikes(train: &SpikeTrain) -> EventQueue {
    let buckets = train.t_max() as usize;
    let mut starts = vec![0usize; buckets + 1];
    for &t in train.times().iter().flatten() {
        starts[t as usize + 1] += 1;
    }
    for b in 1..=buckets {
        starts[b] += starts[b - 1];
    }

    let mut slots: Vec<Option<SpikeEvent>> = vec![None; starts[buckets]];
    for (neuron, t) in train.times().iter().enumerate() {
        if let Some(t) = *t {
            let slot = &mut starts[t as usize];
            slots[*slot] = Some(SpikeEvent::new(neuron, t));
            *slot += 1;
        }
    }
    EventQueue {
        events: slots.into_iter().map(Option::unwrap).collect(),
    }
}

pub fn truncate_after(queue: &EventQueue, cutoff: SpikeTime) -> EventQueue {
    queue.truncate_after(cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(q: &EventQueue) -> Vec<(usize, u8)> {
        q.events().iter().map(|e| (e.neuron, e.time)).collect()
    }

    #[test]
    fn stable_tie_break() {
        let train = SpikeTrain::new(16, vec![Some(5), Some(2), None, Some(2)]).unwrap();
        assert_eq!(pairs(&sort_spikes(&train)), vec![(1, 2), (3, 2), (0, 5)]);
    }

    #[test]
    fn silent_train_is_empty() {
        let train = SpikeTrain::silent(256, 10);
        assert!(sort_spikes(&train).is_empty());
    }

    #[test]
    fn truncation() {
        let q =
            EventQueue::from_sorted(vec![SpikeEvent::new(1, 2), SpikeEvent::new(0, 5)]).unwrap();
        assert_eq!(pairs(&truncate_after(&q, 2)), vec![(1, 2)]);
        assert_eq!(truncate_after(&q, 255), q);
        assert!(truncate_after(&q, 1).is_empty());
    }

    #[test]
    fn from_sorted_rejects_disorder() {
        assert!(
            EventQueue::from_sorted(vec![SpikeEvent::new(0, 5), SpikeEvent::new(1, 2)]).is_none()
        );
        assert!(
            EventQueue::from_sorted(vec![SpikeEvent::new(3, 2), SpikeEvent::new(1, 2)]).is_none()
        );
    }

    fn train_strategy() -> impl Strategy<Value = SpikeTrain> {
        (1u16..=256, 0usize..200).prop_flat_map(|(t_max, n)| {
            proptest::collection::vec(
                proptest::option::weighted(0.7, 0..t_max).prop_map(|t| t.map(|t| t as u8)),
                n,
            )
            .prop_map(move |times| SpikeTrain::new(t_max, times).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matches_comparison_sort(train in train_strategy()) {
            let mut expected: Vec<(u8, usize)> = train
                .times()
                .iter()
                .enumerate()
                .filter_map(|(i, t)| t.map(|t| (t, i)))
                .collect();
            // insertion sort keyed on (time, index), independent of the bucket path
            for k in 1..expected.len() {
                let mut m = k;
                while m > 0 && expected[m - 1] > expected[m] {
                    expected.swap(m - 1, m);
                    m -= 1;
                }
            }
            let got: Vec<(u8, usize)> = sort_spikes(&train).events().iter().map(|e| (e.time, e.neuron)).collect();
            prop_assert_eq!(got.len(), train.active_count());
            prop_assert_eq!(got, expected);
        }
    }
}
