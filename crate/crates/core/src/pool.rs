//! Bounded, sorted candidate lists.
//!
//! Every list in the crate is ordered by `(dist, id)` so that equal distances
//! resolve by id and exact neighbor sets are unique.

use std::cmp::Ordering;

/// One candidate in a pool or graph row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub id: u32,
    /// Squared distance to the owner of the list.
    pub dist: f32,
    /// Set once graph search has expanded this entry.
    pub expanded: bool,
    /// Set once this entry has been carried over from an earlier round.
    pub is_old: bool,
}

impl Neighbor {
    #[inline]
    pub fn new(id: u32, dist: f32) -> Self {
        Self {
            id,
            dist,
            expanded: false,
            is_old: false,
        }
    }

    /// Lexicographic `(dist, id)` order.
    #[inline]
    pub fn key_cmp(&self, other: &Self) -> Ordering {
        key_cmp(self.dist, self.id, other.dist, other.id)
    }
}

#[inline]
pub fn key_cmp(da: f32, ia: u32, db: f32, ib: u32) -> Ordering {
    da.total_cmp(&db).then(ia.cmp(&ib))
}

/// Ascending list of at most `capacity` distinct candidates for `owner`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborPool {
    owner: u32,
    capacity: usize,
    entries: Vec<Neighbor>,
}

impl NeighborPool {
    pub fn new(owner: u32, capacity: usize) -> Self {
        assert!(capacity >= 1, "pool capacity must be positive");
        Self {
            owner,
            capacity,
            entries: Vec::with_capacity(capacity.min(1024) + 1),
        }
    }

    /// Builds a pool from arbitrary entries: sorts, drops duplicates and the
    /// owner, then truncates to `capacity`.
    pub fn from_entries(owner: u32, capacity: usize, mut entries: Vec<Neighbor>) -> Self {
        entries.retain(|e| e.id != owner);
        entries.sort_by(Neighbor::key_cmp);
        entries.dedup_by_key(|e| e.id);
        entries.truncate(capacity);
        assert!(capacity >= 1, "pool capacity must be positive");
        // room for the transient extra slot of an insert, without doubling
        entries.reserve_exact((capacity.min(1024) + 1).saturating_sub(entries.len()));
        let pool = Self { owner, capacity, entries };
        pool.debug_check();
        pool
    }

    #[inline]
    pub fn owner(&self) -> u32 {
        self.owner
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    #[inline]
    pub fn entries(&self) -> &[Neighbor] {
        &self.entries
    }

    /// Flag access for algorithms that track expansion or age. Ids and
    /// distances must not be changed through this slice.
    #[inline]
    pub fn entries_mut(&mut self) -> &mut [Neighbor] {
        &mut self.entries
    }

    pub fn worst(&self) -> Option<&Neighbor> {
        self.entries.last()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.entries.iter().any(|e| e.id == id)
    }

    pub fn into_entries(self) -> Vec<Neighbor> {
        self.entries
    }

    /// Would `(dist, candidate)` be admitted right now?
    #[inline]
    pub fn would_accept(&self, candidate: u32, dist: f32) -> bool {
        if candidate == self.owner {
            return false;
        }
        match self.entries.last() {
            Some(last) if self.is_full() => key_cmp(dist, candidate, last.dist, last.id).is_lt(),
            _ => true,
        }
    }

    /// Inserts `candidate` at its sorted position and truncates to capacity.
    ///
    /// Returns `false` (leaving the pool untouched) when the candidate is the
    /// owner, already present, or no better than the worst entry of a full
    /// pool. A repeated call with the same arguments is therefore a no-op.
    #[inline]
    pub fn update(&mut self, candidate: u32, dist: f32) -> bool {
        self.insert(Neighbor::new(candidate, dist)).is_some()
    }

    /// Like [`update`](Self::update) but keeps the caller's flags and returns
    /// the insertion position.
    pub fn insert(&mut self, entry: Neighbor) -> Option<usize> {
        if !self.would_accept(entry.id, entry.dist) {
            return None;
        }
        let pos = self
            .entries
            .partition_point(|e| e.key_cmp(&entry).is_lt());
        if pos < self.entries.len() && self.entries[pos].id == entry.id {
            return None;
        }
        debug_assert!(
            !self.contains(entry.id),
            "id {} already present with a different distance",
            entry.id
        );
        self.entries.insert(pos, entry);
        if self.entries.len() > self.capacity {
            self.entries.pop();
        }
        self.debug_check_around(pos);
        Some(pos)
    }

    /// Index of the first entry not yet expanded, searching the first `limit`.
    pub fn first_unexpanded(&self, limit: usize) -> Option<usize> {
        self.entries
            .iter()
            .take(limit)
            .position(|e| !e.expanded)
    }

    #[inline]
    fn debug_check_around(&self, pos: usize) {
        if cfg!(debug_assertions) {
            let e = &self.entries;
            if pos > 0 {
                assert!(e[pos - 1].key_cmp(&e[pos]).is_lt(), "pool order broken");
            }
            if pos + 1 < e.len() {
                assert!(e[pos].key_cmp(&e[pos + 1]).is_lt(), "pool order broken");
            }
            assert!(e.len() <= self.capacity);
        }
    }

    fn debug_check(&self) {
        if cfg!(debug_assertions) {
            assert!(self.is_well_formed(), "pool invariant violated");
        }
    }

    /// Strict `(dist, id)` order, no owner, no duplicate ids, within capacity.
    pub fn is_well_formed(&self) -> bool {
        let sorted = self
            .entries
            .windows(2)
            .all(|w| w[0].key_cmp(&w[1]).is_lt());
        let mut ids: Vec<u32> = self.entries.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        let distinct = ids.windows(2).all(|w| w[0] != w[1]);
        sorted
            && distinct
            && self.entries.len() <= self.capacity
            && self.entries.iter().all(|e| e.id != self.owner && e.dist >= 0.0)
    }
}
