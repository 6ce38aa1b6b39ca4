//! Pairing of input nodes with hidden nodes into local connection groups.
//!
//! Group `g` connects every input in `input_groups[g]` to every hidden node in
//! `hidden_groups[g]` and to nothing else. Each hidden group must hold at least
//! one more node than its input group.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    input_groups: Vec<Vec<usize>>,
    hidden_groups: Vec<Vec<usize>>,
}

/// Which side of the network an index list refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Input,
    Hidden,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Input => "input",
            Side::Hidden => "hidden",
        })
    }
}

/// A single problem found by [`validate`]. Group numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoGroups,
    GroupCountMismatch {
        inputs: usize,
        hidden: usize,
    },
    EmptyGroup {
        side: Side,
        group: usize,
    },
    OutOfRange {
        side: Side,
        index: usize,
        limit: usize,
    },
    Overlap {
        side: Side,
        index: usize,
    },
    Uncovered {
        side: Side,
        index: usize,
    },
    SizeConstraint {
        group: usize,
        inputs: usize,
        hidden: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoGroups => write!(f, "partition has no groups"),
            Violation::GroupCountMismatch { inputs, hidden } => {
                write!(f, "{inputs} input groups but {hidden} hidden groups")
            }
            Violation::EmptyGroup { side, group } => write!(f, "{side} group {group} is empty"),
            Violation::OutOfRange { side, index, limit } => {
                write!(f, "{side} index {index} out of range (< {limit} required)")
            }
            Violation::Overlap { side, index } => {
                write!(
                    f,
                    "{side} index {index} appears in more than one group (disjointness)"
                )
            }
            Violation::Uncovered { side, index } => {
                write!(f, "{side} index {index} belongs to no group")
            }
            Violation::SizeConstraint {
                group,
                inputs,
                hidden,
            } => write!(
                f,
                "group {group}: {hidden} hidden nodes for {inputs} inputs, need at least {}",
                inputs + 1
            ),
        }
    }
}

/// Every violation found in a partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationReport(pub Vec<Violation>);

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl GroupPartition {
    /// Builds a partition from explicit index lists and validates it.
    pub fn from_groups(
        input_groups: Vec<Vec<usize>>,
        hidden_groups: Vec<Vec<usize>>,
        n: usize,
        hidden: usize,
    ) -> Result<Self> {
        let p = GroupPartition {
            input_groups,
            hidden_groups,
        };
        validate(&p, n, hidden).map_err(|r| Error::Config(format!("invalid partition: {r}")))?;
        Ok(p)
    }

    pub fn group_count(&self) -> usize {
        self.input_groups.len()
    }

    pub fn input_groups(&self) -> &[Vec<usize>] {
        &self.input_groups
    }

    pub fn hidden_groups(&self) -> &[Vec<usize>] {
        &self.hidden_groups
    }

    pub fn input_count(&self) -> usize {
        self.input_groups.iter().map(Vec::len).sum()
    }

    pub fn hidden_count(&self) -> usize {
        self.hidden_groups.iter().map(Vec::len).sum()
    }

    pub fn input_sizes(&self) -> Vec<usize> {
        self.input_groups.iter().map(Vec::len).collect()
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.hidden_groups.iter().map(Vec::len).collect()
    }

    /// Number of input-hidden connections: Σ |inputs_g| · |hidden_g|.
    pub fn weight_count(&self) -> usize {
        self.input_groups
            .iter()
            .zip(&self.hidden_groups)
            .map(|(i, h)| i.len() * h.len())
            .sum()
    }

    /// Iterates `(input indices, hidden indices)` per group.
    pub fn pairs(&self) -> impl Iterator<Item = (&[usize], &[usize])> {
        self.input_groups
            .iter()
            .zip(&self.hidden_groups)
            .map(|(i, h)| (i.as_slice(), h.as_slice()))
    }

    /// Group index owning each input node, and likewise for hidden nodes.
    pub fn membership(&self) -> (Vec<usize>, Vec<usize>) {
        let mut inputs = vec![usize::MAX; self.input_count()];
        let mut hidden = vec![usize::MAX; self.hidden_count()];
        for (g, (ig, hg)) in self.pairs().enumerate() {
            for &j in ig {
                inputs[j] = g;
            }
            for &i in hg {
                hidden[i] = g;
            }
        }
        (inputs, hidden)
    }

    /// Reassigns input features to groups through a seeded random permutation.
    /// Group sizes and hidden groups are unchanged.
    pub fn with_permuted_inputs(&self, seed: u64) -> GroupPartition {
        let mut order: Vec<usize> = (0..self.input_count()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut next = order.into_iter();
        let input_groups = self
            .input_groups
            .iter()
            .map(|g| {
                let mut picked: Vec<usize> = next.by_ref().take(g.len()).collect();
                picked.sort_unstable();
                picked
            })
            .collect();
        GroupPartition {
            input_groups,
            hidden_groups: self.hidden_groups.clone(),
        }
    }
}

fn contiguous(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut start = 0;
    sizes
        .iter()
        .map(|&s| {
            let g = (start..start + s).collect();
            start += s;
            g
        })
        .collect()
}

/// Near-equal sizes summing to `total`; the first `total % k` parts get one extra.
fn balanced_sizes(total: usize, k: usize) -> Vec<usize> {
    let (base, extra) = (total / k, total % k);
    (0..k).map(|g| base + usize::from(g < extra)).collect()
}

/// Default grouping: contiguous blocks, remainders spread over the earliest groups.
pub fn make_partition(n: usize, hidden: usize, k: usize) -> Result<GroupPartition> {
    if k == 0 {
        return Err(Error::Config("group count k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Config(format!(
            "group count k={k} exceeds input count n={n}"
        )));
    }
    if k > hidden {
        return Err(Error::Config(format!(
            "group count k={k} exceeds hidden count L={hidden}"
        )));
    }
    GroupPartition::from_groups(
        contiguous(&balanced_sizes(n, k)),
        contiguous(&balanced_sizes(hidden, k)),
        n,
        hidden,
    )
    .map_err(|e| e.context(&format!("make_partition(n={n}, L={hidden}, k={k})")))
}

/// Contiguous partition with exactly the given group sizes.
pub fn make_explicit_partition(
    input_sizes: &[usize],
    hidden_sizes: &[usize],
) -> Result<GroupPartition> {
    if input_sizes.len() != hidden_sizes.len() {
        return Err(Error::Config(format!(
            "{} input group sizes but {} hidden group sizes",
            input_sizes.len(),
            hidden_sizes.len()
        )));
    }
    if input_sizes.is_empty() {
        return Err(Error::Config(
            "explicit partition needs at least one group".into(),
        ));
    }
    if let Some(g) = input_sizes
        .iter()
        .zip(hidden_sizes)
        .position(|(&i, &h)| i == 0 || h == 0)
    {
        return Err(Error::Config(format!("group {} has a zero size", g + 1)));
    }
    let n = input_sizes.iter().sum();
    let hidden = hidden_sizes.iter().sum();
    GroupPartition::from_groups(contiguous(input_sizes), contiguous(hidden_sizes), n, hidden)
}

fn check_cover(side: Side, groups: &[Vec<usize>], limit: usize, out: &mut Vec<Violation>) {
    let mut seen = vec![false; limit];
    for (g, grp) in groups.iter().enumerate() {
        if grp.is_empty() {
            out.push(Violation::EmptyGroup { side, group: g + 1 });
        }
        for &index in grp {
            if index >= limit {
                out.push(Violation::OutOfRange { side, index, limit });
            } else if seen[index] {
                out.push(Violation::Overlap { side, index });
            } else {
                seen[index] = true;
            }
        }
    }
    for (index, s) in seen.into_iter().enumerate() {
        if !s {
            out.push(Violation::Uncovered { side, index });
        }
    }
}

/// Checks disjointness, coverage of `0..n` and `0..hidden`, and the per-group size rule.
pub fn validate(p: &GroupPartition, n: usize, hidden: usize) -> Result<(), ViolationReport> {
    let mut out = Vec::new();
    if p.input_groups.is_empty() && p.hidden_groups.is_empty() {
        out.push(Violation::NoGroups);
    }
    if p.input_groups.len() != p.hidden_groups.len() {
        out.push(Violation::GroupCountMismatch {
            inputs: p.input_groups.len(),
            hidden: p.hidden_groups.len(),
        });
    }
    check_cover(Side::Input, &p.input_groups, n, &mut out);
    check_cover(Side::Hidden, &p.hidden_groups, hidden, &mut out);
    for (g, (ig, hg)) in p.input_groups.iter().zip(&p.hidden_groups).enumerate() {
        if hg.len() < ig.len() + 1 {
            out.push(Violation::SizeConstraint {
                group: g + 1,
                inputs: ig.len(),
                hidden: hg.len(),
            });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(ViolationReport(out))
    }
}
