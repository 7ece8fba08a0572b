/// Fixed-capacity ring of time columns.
///
/// Every column is written twice, at `pos` and `pos + capacity`, so the
/// most recent `n` columns are always one contiguous slice.
#[derive(Clone, Debug, PartialEq)]
pub struct Ring<T> {
    capacity: usize,
    channels: usize,
    storage: Vec<T>,
    write: usize,
    len: usize,
}

impl<T: Copy + Default> Ring<T> {
    pub fn new(capacity: usize, channels: usize) -> Self {
        assert!(
            capacity > 0 && channels > 0,
            "ring needs capacity and channels"
        );
        Self {
            capacity,
            channels,
            storage: vec![T::default(); 2 * capacity * channels],
            write: 0,
            len: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, column: &[T]) {
        assert_eq!(column.len(), self.channels);
        let c = self.channels;
        let lo = self.write * c;
        let hi = (self.write + self.capacity) * c;
        self.storage[lo..lo + c].copy_from_slice(column);
        self.storage[hi..hi + c].copy_from_slice(column);
        self.write = (self.write + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// The newest `n` columns, oldest first, time-major.
    pub fn window(&self, n: usize) -> &[T] {
        assert!(
            n <= self.len,
            "window of {n} exceeds {} stored columns",
            self.len
        );
        let end = self.write + self.capacity;
        &self.storage[(end - n) * self.channels..end * self.channels]
    }

    pub fn clear(&mut self) {
        self.write = 0;
        self.len = 0;
    }
}
