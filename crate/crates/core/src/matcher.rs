//! Ratcliff/Obershelp longest-matching-block decomposition.
//!
//! Finds the longest contiguous common block, then recurses on the pieces to
//! its left and right. Elements flagged as junk are never used to anchor or
//! extend a matching block. There is no popularity-based auto-junk heuristic.

use std::collections::HashMap;
use std::hash::Hash;
use std::ops::Range;

use serde::Serialize;

use crate::scalar::Scalar;

/// A matching block: `a[a..a+len] == b[b..b+len]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Block {
    pub a: usize,
    pub b: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OpKind {
    Equal,
    Replace,
    Insert,
    Delete,
}

/// One edit operation covering `a[old]` and `b[new]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Opcode {
    pub kind: OpKind,
    pub old: Range<usize>,
    pub new: Range<usize>,
}

pub struct SequenceMatcher<'a, T> {
    a: &'a [T],
    b: &'a [T],
    b2j: HashMap<&'a T, Vec<usize>>,
}

struct Scratch {
    prev: Vec<usize>,
    next: Vec<usize>,
    prev_touched: Vec<usize>,
    next_touched: Vec<usize>,
}

impl<'a, T: Eq + Hash> SequenceMatcher<'a, T> {
    pub fn new(a: &'a [T], b: &'a [T]) -> Self {
        Self::with_junk(a, b, |_| false)
    }

    pub fn with_junk(a: &'a [T], b: &'a [T], is_junk: impl Fn(&T) -> bool) -> Self {
        let mut b2j: HashMap<&T, Vec<usize>> = HashMap::new();
        for (j, item) in b.iter().enumerate() {
            if !is_junk(item) {
                b2j.entry(item).or_default().push(j);
            }
        }
        Self { a, b, b2j }
    }

    fn scratch(&self) -> Scratch {
        let n = self.b.len() + 1;
        Scratch {
            prev: vec![0; n],
            next: vec![0; n],
            prev_touched: Vec::new(),
            next_touched: Vec::new(),
        }
    }

    /// Longest block within `a[alo..ahi]` x `b[blo..bhi]`. Ties go to the
    /// block starting earliest in `a`, then earliest in `b`.
    pub fn find_longest_match(&self, alo: usize, ahi: usize, blo: usize, bhi: usize) -> Block {
        self.longest_with(&mut self.scratch(), alo, ahi, blo, bhi)
    }

    fn longest_with(&self, s: &mut Scratch, alo: usize, ahi: usize, blo: usize, bhi: usize) -> Block {
        let mut best = Block { a: alo, b: blo, len: 0 };
        // prev[j + 1] holds the length of the match ending at (i - 1, j).
        for i in alo..ahi {
            if let Some(js) = self.b2j.get(&self.a[i]) {
                for &j in js {
                    if j < blo {
                        continue;
                    }
                    if j >= bhi {
                        break;
                    }
                    let k = s.prev[j] + 1;
                    s.next[j + 1] = k;
                    s.next_touched.push(j + 1);
                    if k > best.len {
                        best = Block {
                            a: i + 1 - k,
                            b: j + 1 - k,
                            len: k,
                        };
                    }
                }
            }
            for &t in &s.prev_touched {
                s.prev[t] = 0;
            }
            s.prev_touched.clear();
            std::mem::swap(&mut s.prev, &mut s.next);
            std::mem::swap(&mut s.prev_touched, &mut s.next_touched);
        }
        for &t in &s.prev_touched {
            s.prev[t] = 0;
        }
        s.prev_touched.clear();
        best
    }

    /// Non-overlapping matching blocks in increasing order, with adjacent
    /// blocks coalesced. No trailing sentinel.
    pub fn matching_blocks(&self) -> Vec<Block> {
        let mut scratch = self.scratch();
        let mut queue = vec![(0, self.a.len(), 0, self.b.len())];
        let mut found = Vec::new();
        while let Some((alo, ahi, blo, bhi)) = queue.pop() {
            let m = self.longest_with(&mut scratch, alo, ahi, blo, bhi);
            if m.len == 0 {
                continue;
            }
            if alo < m.a && blo < m.b {
                queue.push((alo, m.a, blo, m.b));
            }
            if m.a + m.len < ahi && m.b + m.len < bhi {
                queue.push((m.a + m.len, ahi, m.b + m.len, bhi));
            }
            found.push(m);
        }
        found.sort();

        let mut merged: Vec<Block> = Vec::with_capacity(found.len());
        for m in found {
            match merged.last_mut() {
                Some(last) if last.a + last.len == m.a && last.b + last.len == m.b => {
                    last.len += m.len;
                }
                _ => merged.push(m),
            }
        }
        merged
    }

    pub fn opcodes(&self) -> Vec<Opcode> {
        let mut ops = Vec::new();
        let (mut i, mut j) = (0, 0);
        let sentinel = Block {
            a: self.a.len(),
            b: self.b.len(),
            len: 0,
        };
        for m in self.matching_blocks().into_iter().chain(std::iter::once(sentinel)) {
            let kind = match (i < m.a, j < m.b) {
                (true, true) => Some(OpKind::Replace),
                (true, false) => Some(OpKind::Delete),
                (false, true) => Some(OpKind::Insert),
                (false, false) => None,
            };
            if let Some(kind) = kind {
                ops.push(Opcode {
                    kind,
                    old: i..m.a,
                    new: j..m.b,
                });
            }
            i = m.a + m.len;
            j = m.b + m.len;
            if m.len > 0 {
                ops.push(Opcode {
                    kind: OpKind::Equal,
                    old: m.a..i,
                    new: m.b..j,
                });
            }
        }
        ops
    }

    /// Total number of elements covered by matching blocks.
    pub fn matched_len(&self) -> usize {
        self.matching_blocks().iter().map(|m| m.len).sum()
    }

    /// `2M / T`, or zero when both sequences are empty.
    pub fn ratio<S: Scalar>(&self) -> S {
        let total = self.a.len() + self.b.len();
        if total == 0 {
            return S::zero();
        }
        S::ratio(2 * self.matched_len(), total)
    }
}
