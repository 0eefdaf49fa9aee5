use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::sim::EventKind;

/// Scheduled event. Microsecond timestamps; the sequence number breaks ties
/// so simultaneous events fire in the order they were scheduled.
#[derive(Debug)]
pub struct SimEvent {
    pub fire: u64,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for SimEvent {
    fn eq(&self, other: &Self) -> bool {
        self.fire == other.fire && self.seq == other.seq
    }
}

impl Eq for SimEvent {}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed so the std max-heap pops the earliest event first
        (other.fire, other.seq).cmp(&(self.fire, self.seq))
    }
}

/// Time-ordered event queue. Popping advances the clock; scheduling into the
/// past is a fatal bookkeeping error.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    next_seq: u64,
    now: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, fire: u64, kind: EventKind) -> Result<()> {
        if fire < self.now {
            return Err(Error::InternalConsistency(format!(
                "event scheduled at {fire} behind the clock {}",
                self.now
            )));
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(SimEvent { fire, seq, kind });
        Ok(())
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        let ev = self.heap.pop()?;
        debug_assert!(ev.fire >= self.now, "heap yielded an event from the past");
        self.now = ev.fire;
        Some(ev)
    }
}
