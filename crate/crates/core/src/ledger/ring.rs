use std::collections::VecDeque;

/// Default ring length per agent.
pub const RING_CAPACITY: usize = 256;

/// Bounded FIFO buffer; appending to a full buffer evicts the oldest entry.
#[derive(Debug, Clone)]
pub struct RingBuffer<T> {
    capacity: usize,
    entries: VecDeque<T>,
}

impl<T> RingBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "ring capacity must be positive");
        RingBuffer {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    /// Appends `item` as the newest entry and returns the evicted entry, if any.
    pub fn push(&mut self, item: T) -> Option<T> {
        let evicted = if self.entries.len() == self.capacity {
            self.entries.pop_front()
        } else {
            None
        };
        self.entries.push_back(item);
        evicted
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn newest(&self) -> Option<&T> {
        self.entries.back()
    }

    pub fn oldest(&self) -> Option<&T> {
        self.entries.front()
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &T> + ExactSizeIterator {
        self.entries.iter()
    }
}

impl<T> Default for RingBuffer<T> {
    fn default() -> Self {
        RingBuffer::new(RING_CAPACITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_then_one() {
        let mut r = RingBuffer::default();
        r.push(1u32);
        assert_eq!(r.len(), 1);
        assert_eq!(r.newest(), Some(&1));
    }

    #[test]
    fn full_buffer_evicts_oldest() {
        let mut r = RingBuffer::default();
        for i in 1..=256u32 {
            assert!(r.push(i).is_none());
        }
        assert_eq!(r.push(257), Some(1));
        assert_eq!(r.len(), 256);
        assert_eq!(r.oldest(), Some(&2));
        assert_eq!(r.newest(), Some(&257));
    }

    #[test]
    fn three_hundred_appends_keep_last_256() {
        let mut r = RingBuffer::default();
        for i in 1..=300u32 {
            r.push(i);
        }
        let kept: Vec<u32> = r.iter().copied().collect();
        assert_eq!(kept, (45..=300).collect::<Vec<_>>());
    }
}
