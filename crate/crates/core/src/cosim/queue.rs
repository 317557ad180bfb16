use alloc::collections::BinaryHeap;
use core::cmp::{Ordering, Reverse};

use super::SimTime;

/// A scheduled event. `source` is the rank of the emitting unit in identity
/// order; `seq` is that unit's emission counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Event<T> {
    pub time: SimTime,
    pub source: usize,
    pub seq: u64,
    pub payload: T,
}

impl<T> Event<T> {
    fn key(&self) -> (SimTime, usize, u64) {
        (self.time, self.source, self.seq)
    }
}

struct Entry<T>(Event<T>);

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.0.key() == other.0.key()
    }
}

impl<T> Eq for Entry<T> {}

impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.key().cmp(&other.0.key())
    }
}

/// Events ordered by `(time, source, seq)`.
pub struct EventQueue<T> {
    heap: BinaryHeap<Reverse<Entry<T>>>,
}

impl<T> Default for EventQueue<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> EventQueue<T> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
        }
    }

    pub fn push(&mut self, event: Event<T>) {
        self.heap.push(Reverse(Entry(event)));
    }

    pub fn pop(&mut self) -> Option<Event<T>> {
        self.heap.pop().map(|Reverse(Entry(e))| e)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(Entry(e))| e.time)
    }

    /// Pops the next event if its time is `<= limit`.
    pub fn pop_until(&mut self, limit: SimTime) -> Option<Event<T>> {
        match self.peek_time() {
            Some(t) if t <= limit => self.pop(),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn ev(t: u64, source: usize, seq: u64) -> Event<()> {
        Event {
            time: SimTime::from_ticks(t),
            source,
            seq,
            payload: (),
        }
    }

    #[test]
    fn tie_break() {
        let mut q = EventQueue::new();
        for e in [ev(5, 1, 0), ev(3, 2, 9), ev(5, 0, 4), ev(5, 0, 1), ev(1, 3, 0)] {
            q.push(e);
        }
        let order: Vec<_> = core::iter::from_fn(|| q.pop()).map(|e| e.key()).collect();
        let keys: Vec<_> = [(1, 3, 0), (3, 2, 9), (5, 0, 1), (5, 0, 4), (5, 1, 0)]
            .iter()
            .map(|&(t, s, n)| (SimTime::from_ticks(t), s, n))
            .collect();
        assert_eq!(order, keys);
    }

    #[test]
    fn pop_until_limit() {
        let mut q = EventQueue::new();
        q.push(ev(10, 0, 0));
        q.push(ev(20, 0, 1));
        assert!(q.pop_until(SimTime::from_ticks(10)).is_some());
        assert!(q.pop_until(SimTime::from_ticks(19)).is_none());
        assert_eq!(q.len(), 1);
    }
}
