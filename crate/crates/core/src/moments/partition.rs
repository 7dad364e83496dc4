use crate::error::{Error, Result};

/// Largest total number of indices `k_1 + .. + k_m` the enumeration accepts.
pub const MAX_PARTITION_INDICES: usize = 12;

/// A set partition of the indices `0..k_1+..+k_m`, split into consecutive
/// groups of sizes `k_1..k_m`, in which every block meets every group in at
/// most one index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupedPartition {
    group_sizes: Vec<usize>,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl GroupedPartition {
    /// The partition into singletons.
    pub fn singletons(group_sizes: &[usize]) -> Self {
        let total: usize = group_sizes.iter().sum();
        GroupedPartition {
            group_sizes: group_sizes.to_vec(),
            blocks: (0..total).map(|i| vec![i]).collect(),
            block_of: (0..total).collect(),
        }
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks `|sigma|`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Total number of indices.
    pub fn total(&self) -> usize {
        self.block_of.len()
    }

    /// Block containing index `idx`.
    pub fn block_of(&self, idx: usize) -> usize {
        self.block_of[idx]
    }

    /// Group containing index `idx`.
    pub fn group_of(&self, idx: usize) -> usize {
        group_of(&self.group_sizes, idx)
    }

    /// Checks disjointness, coverage and the one-index-per-group rule.
    pub fn is_valid(&self) -> bool {
        let total = self.total();
        let mut seen = vec![false; total];
        for (b, block) in self.blocks.iter().enumerate() {
            let mut groups: Vec<usize> = Vec::with_capacity(block.len());
            for &i in block {
                if i >= total || seen[i] || self.block_of[i] != b {
                    return false;
                }
                seen[i] = true;
                let g = self.group_of(i);
                if groups.contains(&g) {
                    return false;
                }
                groups.push(g);
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn group_of(sizes: &[usize], idx: usize) -> usize {
    let mut acc = 0;
    for (g, &k) in sizes.iter().enumerate() {
        acc += k;
        if idx < acc {
            return g;
        }
    }
    sizes.len()
}

/// All partitions of the grouped index set whose blocks meet each group at
/// most once, each listed exactly once.
pub fn enumerate_partitions(group_sizes: &[usize]) -> Result<Vec<GroupedPartition>> {
    if group_sizes.is_empty() || group_sizes.contains(&0) {
        return Err(Error::InvalidQuery("need at least one group, each of size >= 1".into()));
    }
    let total: usize = group_sizes.iter().sum();
    if total > MAX_PARTITION_INDICES {
        return Err(Error::Budget(format!("{total} indices exceed the enumeration guard of {MAX_PARTITION_INDICES}")));
    }
    let groups: Vec<usize> = (0..total).map(|i| group_of(group_sizes, i)).collect();
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    assign(0, &groups, &mut blocks, &mut out, group_sizes);
    Ok(out)
}

fn assign(
    idx: usize,
    groups: &[usize],
    blocks: &mut Vec<Vec<usize>>,
    out: &mut Vec<GroupedPartition>,
    sizes: &[usize],
) {
    if idx == groups.len() {
        let mut block_of = vec![0; groups.len()];
        for (b, block) in blocks.iter().enumerate() {
            for &i in block {
                block_of[i] = b;
            }
        }
        out.push(GroupedPartition { group_sizes: sizes.to_vec(), blocks: blocks.clone(), block_of });
        return;
    }
    for b in 0..blocks.len() {
        if blocks[b].iter().all(|&i| groups[i] != groups[idx]) {
            blocks[b].push(idx);
            assign(idx + 1, groups, blocks, out, sizes);
            blocks[b].pop();
        }
    }
    blocks.push(vec![idx]);
    assign(idx + 1, groups, blocks, out, sizes);
    blocks.pop();
}
