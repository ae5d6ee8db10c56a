//! Per-voxel log-odds storage. `None` marks a voxel that was never updated.

use serde::{Deserialize, Serialize};

use super::grid::GridFrame;

/// Which backing store an [`OccupancyGrid`](super::OccupancyGrid) uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backing {
    #[default]
    Dense,
    Octree,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Storage {
    Dense(DenseStore),
    Octree(OctreeStore),
}

impl Storage {
    pub fn new(backing: Backing, frame: &GridFrame) -> Self {
        match backing {
            Backing::Dense => Storage::Dense(DenseStore::new(frame.len())),
            Backing::Octree => Storage::Octree(OctreeStore::new(frame)),
        }
    }

    pub fn backing(&self) -> Backing {
        match self {
            Storage::Dense(_) => Backing::Dense,
            Storage::Octree(_) => Backing::Octree,
        }
    }

    #[inline]
    pub fn get(&self, frame: &GridFrame, linear: usize) -> Option<f64> {
        match self {
            Storage::Dense(d) => d.get(linear),
            Storage::Octree(o) => o.get(frame.from_linear(linear).as_array()),
        }
    }

    #[inline]
    pub fn set(&mut self, frame: &GridFrame, linear: usize, value: f64) {
        match self {
            Storage::Dense(d) => d.set(linear, value),
            Storage::Octree(o) => o.set(frame.from_linear(linear).as_array(), value),
        }
    }

    /// Touched voxels as `(linear index, log-odds)`, ascending by index.
    pub fn touched(&self, frame: &GridFrame) -> Vec<(usize, f64)> {
        match self {
            Storage::Dense(d) => d.touched(),
            Storage::Octree(o) => {
                let mut v: Vec<(usize, f64)> = Vec::new();
                o.for_each(|c, val| v.push((frame.linear(c.into()), val)));
                v.sort_unstable_by_key(|e| e.0);
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DenseStore {
    logodds: Vec<f64>,
    touched: Vec<bool>,
}

impl DenseStore {
    fn new(n: usize) -> Self {
        Self {
            logodds: vec![0.0; n],
            touched: vec![false; n],
        }
    }

    #[inline]
    fn get(&self, l: usize) -> Option<f64> {
        self.touched[l].then(|| self.logodds[l])
    }

    #[inline]
    fn set(&mut self, l: usize, v: f64) {
        self.logodds[l] = v;
        self.touched[l] = true;
    }

    fn touched(&self) -> Vec<(usize, f64)> {
        self.touched
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(l, _)| (l, self.logodds[l]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Branch(Box<[Option<Node>; 8]>),
    Leaf(f64),
}

/// Pointer octree over a cube of side `2^depth` voxels; only touched leaves are allocated.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct OctreeStore {
    depth: u32,
    root: Option<Node>,
}

impl OctreeStore {
    fn new(frame: &GridFrame) -> Self {
        let side = frame.dims.iter().copied().max().unwrap_or(1).max(1);
        let depth = usize::BITS - (side - 1).leading_zeros();
        Self { depth, root: None }
    }

    #[inline]
    fn child_slot(c: [usize; 3], level: u32) -> usize {
        ((c[0] >> level) & 1) | (((c[1] >> level) & 1) << 1) | (((c[2] >> level) & 1) << 2)
    }

    fn get(&self, c: [usize; 3]) -> Option<f64> {
        let mut node = self.root.as_ref()?;
        let mut level = self.depth;
        loop {
            match node {
                Node::Leaf(v) => return Some(*v),
                Node::Branch(children) => {
                    level -= 1;
                    node = children[Self::child_slot(c, level)].as_ref()?;
                }
            }
        }
    }

    fn set(&mut self, c: [usize; 3], value: f64) {
        fn empty_branch() -> Node {
            Node::Branch(Box::new([None, None, None, None, None, None, None, None]))
        }
        let depth = self.depth;
        if depth == 0 {
            self.root = Some(Node::Leaf(value));
            return;
        }
        let mut node = self.root.get_or_insert_with(empty_branch);
        let mut level = depth;
        while level > 0 {
            level -= 1;
            let Node::Branch(children) = node else {
                unreachable!("leaves only at the bottom level")
            };
            let slot = &mut children[Self::child_slot(c, level)];
            if level == 0 {
                *slot = Some(Node::Leaf(value));
                return;
            }
            node = slot.get_or_insert_with(empty_branch);
        }
    }

    fn for_each(&self, mut f: impl FnMut([usize; 3], f64)) {
        fn walk(node: &Node, level: u32, base: [usize; 3], f: &mut dyn FnMut([usize; 3], f64)) {
            match node {
                Node::Leaf(v) => f(base, *v),
                Node::Branch(children) => {
                    let level = level - 1;
                    for (slot, child) in children.iter().enumerate() {
                        if let Some(child) = child {
                            let c = [
                                base[0] | ((slot & 1) << level),
                                base[1] | (((slot >> 1) & 1) << level),
                                base[2] | (((slot >> 2) & 1) << level),
                            ];
                            walk(child, level, c, f);
                        }
                    }
                }
            }
        }
        if let Some(root) = &self.root {
            walk(root, self.depth, [0, 0, 0], &mut f);
        }
    }
}
