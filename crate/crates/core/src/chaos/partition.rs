use std::fmt;

use crate::error::{Error, Result};
use crate::index::AxisSet;

/// Largest ground set [`enumerate_partitions`] accepts (Bell(12) = 4 213 597).
pub const MAX_GROUND: usize = 12;

/// A partition of a finite set of labels into nonempty disjoint blocks.
///
/// Blocks are kept ordered by their smallest element.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    blocks: Vec<AxisSet>,
}

impl SetPartition {
    pub fn new(mut blocks: Vec<AxisSet>) -> Result<Self> {
        let mut seen = AxisSet::empty();
        for &b in &blocks {
            if b.is_empty() {
                return Err(Error::Argument("partition blocks must be nonempty".into()));
            }
            if !b.is_disjoint(seen) {
                return Err(Error::Argument(format!("block {b} overlaps another block")));
            }
            seen = seen.union(b);
        }
        blocks.sort_by_key(|b| b.iter().next());
        Ok(SetPartition { blocks })
    }

    /// The single-block partition `{ground}`.
    pub fn single(ground: AxisSet) -> Result<Self> {
        Self::new(vec![ground])
    }

    /// The all-singletons partition of `ground`.
    pub fn singletons(ground: AxisSet) -> Self {
        SetPartition {
            blocks: ground.iter().map(|l| AxisSet::from_axes(&[l])).collect(),
        }
    }

    pub fn blocks(&self) -> &[AxisSet] {
        &self.blocks
    }

    /// Number of blocks `kappa`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn ground(&self) -> AxisSet {
        self.blocks.iter().fold(AxisSet::empty(), |acc, b| acc.union(*b))
    }

    /// `true` if every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &SetPartition) -> bool {
        self.ground() == coarser.ground()
            && self
                .blocks
                .iter()
                .all(|b| coarser.blocks.iter().any(|c| b.is_subset_of(*c)))
    }
}

impl fmt::Debug for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "}}")
    }
}

/// All partitions of `ground`, optionally only those with exactly `kappa` blocks.
///
/// Partitions are generated from restricted growth strings, so each appears once.
/// The empty ground set has the single empty partition.
pub fn enumerate_partitions(ground: AxisSet, kappa: Option<usize>) -> Result<Vec<SetPartition>> {
    let labels: Vec<usize> = ground.iter().collect();
    let n = labels.len();
    if n > MAX_GROUND {
        return Err(Error::Budget(format!(
            "ground set of size {n} exceeds the partition budget of {MAX_GROUND}"
        )));
    }
    if n == 0 {
        return Ok(match kappa {
            None | Some(0) => vec![SetPartition { blocks: Vec::new() }],
            _ => Vec::new(),
        });
    }
    let mut out = Vec::new();
    // rgs[i] is the block of labels[i]; rgs[0] = 0 and rgs[i] <= 1 + max(rgs[..i]).
    let mut rgs = vec![0usize; n];
    let mut maxes = vec![0usize; n];
    loop {
        let blocks_used = maxes[n - 1] + 1;
        if kappa.is_none_or(|k| k == blocks_used) {
            let mut blocks = vec![AxisSet::empty(); blocks_used];
            for (i, &b) in rgs.iter().enumerate() {
                blocks[b] = blocks[b].with(labels[i]);
            }
            out.push(SetPartition { blocks });
        }
        // Advance to the next restricted growth string.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            if rgs[i] <= maxes[i - 1] {
                rgs[i] += 1;
                maxes[i] = maxes[i - 1].max(rgs[i]);
                for j in i + 1..n {
                    rgs[j] = 0;
                    maxes[j] = maxes[i];
                }
                break;
            }
            i -= 1;
        }
    }
}
