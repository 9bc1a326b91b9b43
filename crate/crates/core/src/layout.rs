//! Rectangular qubit layouts, hop distances, and block tiling.
//!
//! Qubits live on an `rows x cols` grid with 4-neighbour coupling. The qubit
//! index of cell `(r, c)` is `r * cols + c`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::LayoutError;

/// A 2-D rectangular grid of physical qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawLayout", into = "RawLayout")]
pub struct QubitLayout {
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct RawLayout {
    rows: usize,
    cols: usize,
}

impl TryFrom<RawLayout> for QubitLayout {
    type Error = LayoutError;

    fn try_from(raw: RawLayout) -> Result<Self, Self::Error> {
        QubitLayout::new(raw.rows, raw.cols)
    }
}

impl From<QubitLayout> for RawLayout {
    fn from(layout: QubitLayout) -> Self {
        RawLayout {
            rows: layout.rows,
            cols: layout.cols,
        }
    }
}

impl QubitLayout {
    pub fn new(rows: usize, cols: usize) -> Result<Self, LayoutError> {
        if rows == 0 || cols == 0 {
            return Err(LayoutError::ZeroDimension { rows, cols });
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_qubits(&self) -> usize {
        self.rows * self.cols
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    pub fn coords(&self, qubit: usize) -> (usize, usize) {
        (qubit / self.cols, qubit % self.cols)
    }

    pub fn contains(&self, qubit: usize) -> bool {
        qubit < self.num_qubits()
    }

    /// Neighbours of `qubit` in the order up, left, right, down.
    pub fn neighbors(&self, qubit: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = self.coords(qubit);
        let up = (r > 0).then(|| self.index(r - 1, c));
        let left = (c > 0).then(|| self.index(r, c - 1));
        let right = (c + 1 < self.cols).then(|| self.index(r, c + 1));
        let down = (r + 1 < self.rows).then(|| self.index(r + 1, c));
        [up, left, right, down].into_iter().flatten()
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        if !self.contains(a) || !self.contains(b) {
            return false;
        }
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        ra.abs_diff(rb) + ca.abs_diff(cb) == 1
    }

    /// All coupled pairs `(a, b)` with `a < b`, sorted.
    pub fn adjacency_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<_> = (0..self.num_qubits())
            .flat_map(|a| {
                self.neighbors(a)
                    .filter(move |&b| a < b)
                    .map(move |b| (a, b))
            })
            .collect();
        pairs.sort_unstable();
        pairs
    }

    /// All-pairs hop counts, computed by breadth-first search from every qubit.
    pub fn distance_matrix(&self) -> DistanceMatrix {
        let n = self.num_qubits();
        let mut data = vec![u32::MAX; n * n];
        let mut queue = VecDeque::with_capacity(n);
        for source in 0..n {
            let row = &mut data[source * n..(source + 1) * n];
            row[source] = 0;
            queue.clear();
            queue.push_back(source);
            while let Some(q) = queue.pop_front() {
                let next = row[q] + 1;
                for nb in self.neighbors(q) {
                    if row[nb] == u32::MAX {
                        row[nb] = next;
                        queue.push_back(nb);
                    }
                }
            }
        }
        DistanceMatrix { n, data }
    }
}

impl fmt::Display for QubitLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl FromStr for QubitLayout {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LayoutError::Malformed(s.to_string());
        let (r, c) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let rows = r.trim().parse().map_err(|_| bad())?;
        let cols = c.trim().parse().map_err(|_| bad())?;
        QubitLayout::new(rows, cols)
    }
}

/// Shortest hop counts between every pair of physical qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<u32>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> u32 {
        self.data[a * self.n + b]
    }
}

/// Which way a layout is doubled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtensionDirection {
    /// `2m x n`: block 1 sits below block 0.
    Vertical,
    /// `m x 2n`: block 1 sits to the right of block 0.
    Horizontal,
}

/// A grid built from `tile_rows x tile_cols` copies of a base layout.
///
/// Each copy keeps the relative `(r, c)` offsets of the base, so a base
/// qubit index can be relabelled into any tile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TiledLayout {
    base: QubitLayout,
    tile_rows: usize,
    tile_cols: usize,
    extended: QubitLayout,
}

impl TiledLayout {
    pub fn new(base: QubitLayout, tile_rows: usize, tile_cols: usize) -> Result<Self, LayoutError> {
        let extended = QubitLayout::new(base.rows * tile_rows, base.cols * tile_cols)?;
        Ok(Self {
            base,
            tile_rows,
            tile_cols,
            extended,
        })
    }

    pub fn base(&self) -> QubitLayout {
        self.base
    }

    pub fn extended(&self) -> QubitLayout {
        self.extended
    }

    pub fn num_tiles(&self) -> usize {
        self.tile_rows * self.tile_cols
    }

    /// Tile number of `(tile_row, tile_col)` in row-major order.
    pub fn tile(&self, tile_row: usize, tile_col: usize) -> usize {
        tile_row * self.tile_cols + tile_col
    }

    /// Index in the extended grid of base qubit `old` placed in `tile`.
    pub fn relabel(&self, tile: usize, old: usize) -> usize {
        let (tr, tc) = (tile / self.tile_cols, tile % self.tile_cols);
        let (r, c) = self.base.coords(old);
        self.extended
            .index(tr * self.base.rows + r, tc * self.base.cols + c)
    }

    /// Inverse of [`relabel`](Self::relabel): `(tile, base index)`.
    pub fn locate(&self, new: usize) -> (usize, usize) {
        let (r, c) = self.extended.coords(new);
        let tile = self.tile(r / self.base.rows, c / self.base.cols);
        (
            tile,
            self.base.index(r % self.base.rows, c % self.base.cols),
        )
    }

    /// Relabel map of one tile, indexed by base qubit.
    pub fn relabel_map(&self, tile: usize) -> Vec<usize> {
        (0..self.base.num_qubits())
            .map(|old| self.relabel(tile, old))
            .collect()
    }
}

/// Result of doubling a layout for a two-block logical operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionPlan {
    pub direction: ExtensionDirection,
    pub base: QubitLayout,
    pub extended: QubitLayout,
    /// `block0[old]` is the new index of base qubit `old` in the first block.
    pub block0: Vec<usize>,
    /// `block1[old]` is the new index of base qubit `old` in the shifted copy.
    pub block1: Vec<usize>,
}

impl ExtensionPlan {
    pub fn relabel(&self, block: usize, old: usize) -> usize {
        match block {
            0 => self.block0[old],
            1 => self.block1[old],
            _ => panic!("extension plan has two blocks, got block {block}"),
        }
    }
}

pub fn extend_layout(
    layout: &QubitLayout,
    direction: ExtensionDirection,
) -> (QubitLayout, ExtensionPlan) {
    let (tr, tc) = match direction {
        ExtensionDirection::Vertical => (2, 1),
        ExtensionDirection::Horizontal => (1, 2),
    };
    let tiled = TiledLayout::new(*layout, tr, tc).expect("doubling a valid layout is valid");
    let plan = ExtensionPlan {
        direction,
        base: *layout,
        extended: tiled.extended(),
        block0: tiled.relabel_map(0),
        block1: tiled.relabel_map(1),
    };
    (tiled.extended(), plan)
}
