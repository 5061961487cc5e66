/// Fixed-length tid bitset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct TidSet(Vec<u64>);

impl TidSet {
    pub fn empty(len: usize) -> Self {
        TidSet(vec![0; len.div_ceil(64)])
    }

    pub fn full(len: usize) -> Self {
        let mut s = TidSet(vec![u64::MAX; len.div_ceil(64)]);
        let tail = len % 64;
        if tail != 0 {
            *s.0.last_mut().unwrap() = (1u64 << tail) - 1;
        }
        s
    }

    pub fn insert(&mut self, tid: usize) {
        self.0[tid / 64] |= 1 << (tid % 64);
    }

    pub fn and(&self, other: &TidSet) -> TidSet {
        TidSet(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    pub fn and_count(&self, other: &TidSet) -> u64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    pub fn count(&self) -> u64 {
        self.0.iter().map(|w| w.count_ones() as u64).sum()
    }
}
