use serde::{Deserialize, Serialize};

use crate::error::GameError;

/// Shape of X(Δ, δ): a (Δ-1)-regular base tree with a copy of the δ-regular
/// tree hanging off every base vertex, so base vertices have degree Δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeParams {
    /// Δ, the degree of a base vertex.
    pub base_degree: u32,
    /// δ, the degree of a vertex in a small tree.
    pub small_degree: u32,
}

impl TreeParams {
    pub fn new(base_degree: u32, small_degree: u32) -> Result<Self, GameError> {
        if base_degree < 3 {
            return Err(GameError::InvalidTree(format!("Δ = {base_degree} must be at least 3")));
        }
        if small_degree < 2 {
            return Err(GameError::InvalidTree(format!("δ = {small_degree} must be at least 2")));
        }
        if small_degree > base_degree {
            return Err(GameError::InvalidTree(format!(
                "δ = {small_degree} exceeds Δ = {base_degree}"
            )));
        }
        if base_degree > 256 {
            return Err(GameError::InvalidTree(format!("Δ = {base_degree} is larger than 256")));
        }
        Ok(Self { base_degree, small_degree })
    }

    /// Number of base-edge labels, Δ - 1.
    pub fn base_labels(&self) -> u8 {
        (self.base_degree - 1) as u8
    }

    /// Number of children of a small-tree vertex, δ - 1.
    pub fn child_labels(&self) -> u8 {
        (self.small_degree - 1) as u8
    }
}

/// Canonical address of a vertex of X(Δ, δ).
///
/// `base` is a reduced word over the base labels `0..Δ-1` read from the
/// origin; every label is its own inverse, so a reduced word never repeats a
/// label twice in a row. `small` is empty for base vertices; otherwise it
/// starts with `0` for the root of the small tree and continues with child
/// labels in `0..δ-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TreeVertex {
    pub base: Vec<u8>,
    pub small: Vec<u8>,
}

impl TreeVertex {
    pub fn origin() -> Self {
        Self::default()
    }

    pub fn new(base: Vec<u8>, small: Vec<u8>) -> Self {
        Self { base, small }
    }

    pub fn on_base(&self) -> bool {
        self.small.is_empty()
    }

    /// Distance to the base tree.
    pub fn depth(&self) -> usize {
        self.small.len()
    }

    pub fn validate(&self, tree: &TreeParams) -> Result<(), GameError> {
        if let Some(&l) = self.base.iter().find(|&&l| l >= tree.base_labels()) {
            return Err(GameError::InvalidAddress(format!(
                "base label {l} is not below Δ - 1 = {}",
                tree.base_labels()
            )));
        }
        if self.base.windows(2).any(|w| w[0] == w[1]) {
            return Err(GameError::InvalidAddress("base word is not reduced".into()));
        }
        if let Some((&root, rest)) = self.small.split_first() {
            if root != 0 {
                return Err(GameError::InvalidAddress("small path must start with the root entry 0".into()));
            }
            if let Some(&j) = rest.iter().find(|&&j| j >= tree.child_labels()) {
                return Err(GameError::InvalidAddress(format!(
                    "child label {j} is not below δ - 1 = {}",
                    tree.child_labels()
                )));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}/{:?}", self.base, self.small)
    }
}

pub(crate) fn common_prefix(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Graph distance between two vertices of the same X(Δ, δ).
pub fn distance(tree: &TreeParams, u: &TreeVertex, v: &TreeVertex) -> Result<u64, GameError> {
    u.validate(tree)?;
    v.validate(tree)?;
    Ok(distance_unchecked(u, v))
}

pub(crate) fn distance_unchecked(u: &TreeVertex, v: &TreeVertex) -> u64 {
    let d = if u.base == v.base {
        u.small.len() + v.small.len() - 2 * common_prefix(&u.small, &v.small)
    } else {
        u.small.len() + v.small.len() + u.base.len() + v.base.len()
            - 2 * common_prefix(&u.base, &v.base)
    };
    d as u64
}

/// The closest base vertex.
pub fn project_to_base(v: &TreeVertex) -> TreeVertex {
    TreeVertex { base: v.base.clone(), small: Vec::new() }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeGameState {
    pub cop: TreeVertex,
    pub robber: TreeVertex,
}

impl TreeGameState {
    /// Cop at the origin, robber on the base tree at distance `d0` along the
    /// alternating word `0 1 0 1 ...`.
    pub fn base_pair(d0: usize) -> Self {
        let base = (0..d0).map(|i| (i % 2) as u8).collect();
        Self { cop: TreeVertex::origin(), robber: TreeVertex::new(base, Vec::new()) }
    }

    pub fn is_capture(&self) -> bool {
        self.cop == self.robber
    }

    pub fn validate(&self, tree: &TreeParams) -> Result<(), GameError> {
        self.cop.validate(tree)?;
        self.robber.validate(tree)
    }
}

/// All neighbors of `v`: Δ of them on the base tree, δ in a small tree.
pub fn neighbors(tree: &TreeParams, v: &TreeVertex) -> Vec<TreeVertex> {
    let mut out = Vec::new();
    if v.on_base() {
        out.push(TreeVertex::new(v.base.clone(), vec![0]));
        for l in 0..tree.base_labels() {
            let mut base = v.base.clone();
            if base.last() == Some(&l) {
                base.pop();
            } else {
                base.push(l);
            }
            out.push(TreeVertex::new(base, Vec::new()));
        }
    } else {
        let mut up = v.clone();
        up.small.pop();
        out.push(up);
        for j in 0..tree.child_labels() {
            let mut down = v.clone();
            down.small.push(j);
            out.push(down);
        }
    }
    out
}
