//! Connected-component labelling of alive cells.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::TileGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &[(0, -1), (-1, 0), (1, 0), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ],
        }
    }
}

/// Component labels, numbered in order of each component's first cell in
/// row-major order.
#[derive(Debug, Clone)]
pub struct Regions {
    /// Per-cell label; `None` for dead cells.
    pub labels: Vec<Option<usize>>,
    /// Cell count per label.
    pub sizes: Vec<usize>,
}

impl Regions {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Label of the biggest component, the earliest one on ties.
    pub fn largest(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (label, &size) in self.sizes.iter().enumerate() {
            if best.is_none_or(|b| size > self.sizes[b]) {
                best = Some(label);
            }
        }
        best
    }
}

pub fn label_regions(grid: &TileGrid, connectivity: Connectivity) -> Regions {
    let (w, h) = grid.dimensions();
    let mut labels = vec![None; w * h];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !grid.cells()[start] || labels[start].is_some() {
            continue;
        }
        let label = sizes.len();
        let mut size = 0;
        labels[start] = Some(label);
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for &(dx, dy) in connectivity.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if grid.get_signed(nx, ny) == Some(true) {
                    let j = ny as usize * w + nx as usize;
                    if labels[j].is_none() {
                        labels[j] = Some(label);
                        queue.push_back(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    Regions { labels, sizes }
}

pub fn count_regions(grid: &TileGrid, connectivity: Connectivity) -> usize {
    label_regions(grid, connectivity).count()
}
