use std::collections::VecDeque;

/// Fixed-capacity FIFO of key embeddings used as negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    entries: VecDeque<Vec<f64>>,
    capacity: usize,
}

pub const DEFAULT_BANK_CAPACITY: usize = 512;

impl MemoryBank {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.entries.iter()
    }

    /// Appends `z`, evicting the oldest entry when full.
    pub fn enqueue(&mut self, z: Vec<f64>) {
        if self.capacity == 0 {
            return;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(z);
    }
}
