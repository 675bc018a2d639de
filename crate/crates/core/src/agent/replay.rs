use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;

/// Bounded FIFO memory; the oldest record is evicted first.
#[derive(Clone, Debug)]
pub struct ReplayMemory<R> {
    capacity: usize,
    items: VecDeque<R>,
}

impl<R> ReplayMemory<R> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayMemory {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Returns the evicted record, if any.
    pub fn push(&mut self, item: R) -> Option<R> {
        let evicted = if self.items.len() == self.capacity {
            self.items.pop_front()
        } else {
            None
        };
        self.items.push_back(item);
        evicted
    }

    /// Up to `n` distinct records chosen uniformly.
    pub fn sample<G: Rng + ?Sized>(&self, n: usize, rng: &mut G) -> Vec<&R> {
        let k = n.min(self.items.len());
        index::sample(rng, self.items.len(), k)
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &R> {
        self.items.iter()
    }
}
