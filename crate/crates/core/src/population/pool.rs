//! Susceptible community agents bucketed by (county, age group).
//!
//! Removal is O(1) through a position index, and sampling without
//! replacement is a partial Fisher-Yates over each bucket, so daily exposure
//! draws stay cheap on large populations.

use rand::Rng;

use crate::rng::categorical;
use crate::types::{AgentId, AGE_GROUPS};

const ABSENT: u32 = u32::MAX;

#[derive(Debug, Clone, Default)]
pub struct SusceptiblePool {
    buckets: Vec<Vec<AgentId>>,
    pos: Vec<u32>,
}

impl SusceptiblePool {
    pub fn new(counties: usize, agents: usize) -> Self {
        Self {
            buckets: vec![Vec::new(); counties * AGE_GROUPS],
            pos: vec![ABSENT; agents],
        }
    }

    fn bucket(county: usize, age: usize) -> usize {
        county * AGE_GROUPS + age
    }

    pub fn insert(&mut self, id: AgentId, county: usize, age: usize) {
        if self.contains(id) {
            return;
        }
        let b = &mut self.buckets[Self::bucket(county, age)];
        self.pos[id as usize] = b.len() as u32;
        b.push(id);
    }

    pub fn remove(&mut self, id: AgentId, county: usize, age: usize) -> bool {
        let p = self.pos[id as usize];
        if p == ABSENT {
            return false;
        }
        let b = &mut self.buckets[Self::bucket(county, age)];
        let p = p as usize;
        debug_assert_eq!(b[p], id, "agent filed under the wrong bucket");
        b.swap_remove(p);
        if p < b.len() {
            self.pos[b[p] as usize] = p as u32;
        }
        self.pos[id as usize] = ABSENT;
        true
    }

    pub fn contains(&self, id: AgentId) -> bool {
        self.pos[id as usize] != ABSENT
    }

    pub fn len(&self, county: usize, age: usize) -> usize {
        self.buckets[Self::bucket(county, age)].len()
    }

    pub fn county_len(&self, county: usize) -> usize {
        (0..AGE_GROUPS).map(|a| self.len(county, a)).sum()
    }

    pub fn members(&self, county: usize, age: usize) -> &[AgentId] {
        &self.buckets[Self::bucket(county, age)]
    }

    /// Draws up to `k` distinct agents of one county. Each draw first picks an
    /// age group by `weights` among groups that still have undrawn members,
    /// then a uniform member of that group. Agents stay in the pool.
    pub fn sample<R: Rng + ?Sized>(
        &mut self,
        county: usize,
        weights: &[f64; AGE_GROUPS],
        k: usize,
        rng: &mut R,
    ) -> Vec<AgentId> {
        let mut drawn = [0usize; AGE_GROUPS];
        let mut out = Vec::with_capacity(k.min(self.county_len(county)));
        while out.len() < k {
            let avail: [f64; AGE_GROUPS] = std::array::from_fn(|a| {
                if drawn[a] < self.len(county, a) {
                    weights[a]
                } else {
                    0.0
                }
            });
            let Some(age) = categorical(&avail, rng) else {
                break;
            };
            let b = &mut self.buckets[Self::bucket(county, age)];
            let j = drawn[age];
            let r = rng.random_range(j..b.len());
            b.swap(j, r);
            self.pos[b[j] as usize] = j as u32;
            self.pos[b[r] as usize] = r as u32;
            out.push(b[j]);
            drawn[age] += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RngStream, StreamTag};
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn pool_with(sizes: [usize; 3]) -> SusceptiblePool {
        let total: usize = sizes.iter().sum();
        let mut p = SusceptiblePool::new(1, total);
        let mut id = 0;
        for (a, &n) in sizes.iter().enumerate() {
            for _ in 0..n {
                p.insert(id, 0, a);
                id += 1;
            }
        }
        p
    }

    #[test]
    fn remove_keeps_index_consistent() {
        let mut p = pool_with([5, 0, 0]);
        assert!(p.remove(1, 0, 0));
        assert!(!p.remove(1, 0, 0));
        assert_eq!(p.len(0, 0), 4);
        for id in p.members(0, 0).to_vec() {
            assert!(p.contains(id));
            assert!(p.remove(id, 0, 0));
        }
        assert_eq!(p.len(0, 0), 0);
    }

    #[test]
    fn sample_stops_when_exhausted() {
        let mut p = pool_with([2, 1, 0]);
        let mut rng = RngStream::new(1).substream(StreamTag::Exposure, 0);
        let s = p.sample(0, &[0.7, 0.18, 0.12], 10, &mut rng);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn sample_age_shares_follow_weights() {
        let mut p = pool_with([50_000, 50_000, 50_000]);
        let mut rng = RngStream::new(9).substream(StreamTag::Exposure, 0);
        let s = p.sample(0, &[0.70, 0.18, 0.12], 10_000, &mut rng);
        let mut counts = [0usize; 3];
        for id in s {
            counts[(id / 50_000) as usize] += 1;
        }
        for (c, w) in counts.iter().zip([0.70, 0.18, 0.12]) {
            assert!((*c as f64 / 10_000.0 - w).abs() < 0.02, "{counts:?}");
        }
    }

    proptest! {
        #[test]
        fn sample_is_distinct_and_pool_unchanged(
            sizes in prop::array::uniform3(0usize..40),
            k in 0usize..150,
            seed in any::<u64>(),
        ) {
            let mut p = pool_with(sizes);
            let before: HashSet<AgentId> = (0..3).flat_map(|a| p.members(0, a).to_vec()).collect();
            let mut rng = RngStream::new(seed).substream(StreamTag::Exposure, 0);
            let s = p.sample(0, &[0.7, 0.18, 0.12], k, &mut rng);
            let distinct: HashSet<AgentId> = s.iter().copied().collect();
            prop_assert_eq!(distinct.len(), s.len());
            prop_assert_eq!(s.len(), k.min(before.len()));
            let after: HashSet<AgentId> = (0..3).flat_map(|a| p.members(0, a).to_vec()).collect();
            prop_assert_eq!(&before, &after);
            for a in 0..3 {
                for (i, &id) in p.members(0, a).iter().enumerate() {
                    prop_assert_eq!(p.pos[id as usize] as usize, i);
                }
            }
        }
    }
}
