//! Ordered multiset of fitness values with rank queries.
//!
//! A treap keyed by `(value, insertion sequence)` with subtree sizes, so
//! insert, delete-min and counting below a threshold are all `O(log n)`
//! expected. Equal values are ordered by insertion. Node priorities are a
//! hash of the insertion sequence, which keeps the shape deterministic.

use std::cmp::Ordering;

type Link = Option<u32>;

#[derive(Debug, Clone)]
struct Node {
    value: f64,
    seq: u64,
    priority: u64,
    size: u32,
    left: Link,
    right: Link,
}

#[derive(Debug, Clone, Default)]
pub struct FitnessMultiset {
    nodes: Vec<Node>,
    free: Vec<u32>,
    root: Link,
    next_seq: u64,
}

/// Handle returned by [`FitnessMultiset::insert`]; unique per insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Entry(pub u64);

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl FitnessMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.size(self.root) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    fn size(&self, link: Link) -> u32 {
        link.map_or(0, |i| self.nodes[i as usize].size)
    }

    fn update(&mut self, i: u32) {
        let n = &self.nodes[i as usize];
        let size = 1 + self.size(n.left) + self.size(n.right);
        self.nodes[i as usize].size = size;
    }

    fn key_cmp(&self, i: u32, value: f64, seq: u64) -> Ordering {
        let n = &self.nodes[i as usize];
        n.value.total_cmp(&value).then(n.seq.cmp(&seq))
    }

    /// Splits into keys strictly below `(value, seq)` and the rest.
    fn split(&mut self, link: Link, value: f64, seq: u64) -> (Link, Link) {
        let Some(i) = link else {
            return (None, None);
        };
        if self.key_cmp(i, value, seq) == Ordering::Less {
            let (l, r) = self.split(self.nodes[i as usize].right, value, seq);
            self.nodes[i as usize].right = l;
            self.update(i);
            (Some(i), r)
        } else {
            let (l, r) = self.split(self.nodes[i as usize].left, value, seq);
            self.nodes[i as usize].left = r;
            self.update(i);
            (l, Some(i))
        }
    }

    fn merge(&mut self, a: Link, b: Link) -> Link {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(ia), Some(ib)) => {
                if self.nodes[ia as usize].priority >= self.nodes[ib as usize].priority {
                    let merged = self.merge(self.nodes[ia as usize].right, b);
                    self.nodes[ia as usize].right = merged;
                    self.update(ia);
                    Some(ia)
                } else {
                    let merged = self.merge(a, self.nodes[ib as usize].left);
                    self.nodes[ib as usize].left = merged;
                    self.update(ib);
                    Some(ib)
                }
            }
        }
    }

    pub fn insert(&mut self, value: f64) -> Entry {
        let seq = self.next_seq;
        self.next_seq += 1;
        let node = Node {
            value,
            seq,
            priority: splitmix64(seq),
            size: 1,
            left: None,
            right: None,
        };
        let idx = match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        };
        let (l, r) = self.split(self.root, value, seq);
        let left = self.merge(l, Some(idx));
        self.root = self.merge(left, r);
        Entry(seq)
    }

    pub fn min(&self) -> Option<(f64, Entry)> {
        let mut cur = self.root?;
        while let Some(l) = self.nodes[cur as usize].left {
            cur = l;
        }
        let n = &self.nodes[cur as usize];
        Some((n.value, Entry(n.seq)))
    }

    /// Removes the smallest value (earliest insertion among ties).
    pub fn pop_min(&mut self) -> Option<(f64, Entry)> {
        let root = self.root?;
        // Walk the left spine, decrementing sizes on the way down.
        let mut parent: Option<u32> = None;
        let mut cur = root;
        while let Some(l) = self.nodes[cur as usize].left {
            self.nodes[cur as usize].size -= 1;
            parent = Some(cur);
            cur = l;
        }
        let right = self.nodes[cur as usize].right;
        match parent {
            Some(p) => self.nodes[p as usize].left = right,
            None => self.root = right,
        }
        self.free.push(cur);
        let n = &self.nodes[cur as usize];
        Some((n.value, Entry(n.seq)))
    }

    /// Number of values `<= x`.
    pub fn count_le(&self, x: f64) -> usize {
        self.count_by(|v| v.total_cmp(&x) != Ordering::Greater)
    }

    /// Number of values `< x`.
    pub fn count_lt(&self, x: f64) -> usize {
        self.count_by(|v| v.total_cmp(&x) == Ordering::Less)
    }

    /// Number of values in the open interval `(a, b)`.
    pub fn count_between(&self, a: f64, b: f64) -> usize {
        self.count_lt(b).saturating_sub(self.count_le(a))
    }

    /// Counts the prefix of values satisfying a monotone predicate.
    fn count_by(&self, below: impl Fn(f64) -> bool) -> usize {
        let mut count = 0;
        let mut link = self.root;
        while let Some(i) = link {
            let n = &self.nodes[i as usize];
            if below(n.value) {
                count += self.size(n.left) + 1;
                link = n.right;
            } else {
                link = n.left;
            }
        }
        count as usize
    }

    /// Values in ascending order.
    pub fn to_sorted_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = Vec::new();
        let mut link = self.root;
        loop {
            while let Some(i) = link {
                stack.push(i);
                link = self.nodes[i as usize].left;
            }
            let Some(i) = stack.pop() else { break };
            out.push(self.nodes[i as usize].value);
            link = self.nodes[i as usize].right;
        }
        out
    }
}

impl FromIterator<f64> for FitnessMultiset {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut set = Self::new();
        for v in iter {
            set.insert(v);
        }
        set
    }
}
