//! Grid-to-grid transforms. Each returns a new grid of the same size.

use serde::{Deserialize, Serialize};

use crate::{label_regions, Connectivity, EngineError, Result, TileGrid};

/// Majority filter over the 8-neighbourhood: more than four alive
/// neighbours makes a cell alive, fewer makes it dead, exactly four keeps
/// it. Out-of-bounds neighbours take the centre cell's state.
pub fn mod_smooth(grid: &TileGrid, iterations: u32) -> TileGrid {
    let mut current = grid.clone();
    for _ in 0..iterations {
        let next = current.map_cells(|x, y, alive| {
            let mut n = 0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if (dx, dy) != (0, 0)
                        && current
                            .get_signed(x as i64 + dx, y as i64 + dy)
                            .unwrap_or(alive)
                    {
                        n += 1;
                    }
                }
            }
            match n {
                0..=3 => false,
                4 => alive,
                _ => true,
            }
        });
        if next == current {
            break;
        }
        current = next;
    }
    current
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphOp {
    Erode,
    Dilate,
}

/// Erosion or dilation with a square (Chebyshev) structuring element of the
/// given radius. Cells outside the grid are dead.
///
/// The square element is separable, so this runs a horizontal pass and then
/// a vertical pass, each a sliding-window count.
pub fn mod_morph(grid: &TileGrid, op: MorphOp, radius: u32) -> Result<TileGrid> {
    if radius == 0 {
        return Err(EngineError::param("radius", radius, "[1, inf)"));
    }
    let r = radius as usize;
    let (w, h) = grid.dimensions();
    let horizontal = sweep(grid.cells(), w, h, r, op, true);
    let both = sweep(&horizontal, w, h, r, op, false);
    TileGrid::from_cells(w, h, both)
}

fn sweep(cells: &[bool], w: usize, h: usize, r: usize, op: MorphOp, along_x: bool) -> Vec<bool> {
    let (lines, len) = if along_x { (h, w) } else { (w, h) };
    let at = |line: usize, pos: usize| {
        if along_x {
            line * w + pos
        } else {
            pos * w + line
        }
    };
    let mut out = vec![false; cells.len()];
    for line in 0..lines {
        // prefix[i] = alive count in positions [0, i)
        let mut prefix = vec![0usize; len + 1];
        for pos in 0..len {
            prefix[pos + 1] = prefix[pos] + cells[at(line, pos)] as usize;
        }
        for pos in 0..len {
            let lo = pos.saturating_sub(r);
            let hi = (pos + r + 1).min(len);
            let alive = prefix[hi] - prefix[lo];
            out[at(line, pos)] = match op {
                // Window must be fully inside the grid and fully alive.
                MorphOp::Erode => pos >= r && pos + r < len && alive == 2 * r + 1,
                MorphOp::Dilate => alive > 0,
            };
        }
    }
    out
}

/// Keeps only the largest connected component; the one whose first cell
/// comes first in row-major order wins ties.
pub fn mod_keep_largest_region(grid: &TileGrid, connectivity: Connectivity) -> TileGrid {
    let regions = label_regions(grid, connectivity);
    let Some(keep) = regions.largest() else {
        return grid.clone();
    };
    let w = grid.width();
    grid.map_cells(|x, y, _| regions.labels[y * w + x] == Some(keep))
}

/// Swaps alive and dead cells.
pub fn mod_invert(grid: &TileGrid) -> TileGrid {
    grid.map_cells(|_, _, alive| !alive)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_zero_iterations_is_identity() {
        let g = TileGrid::from_ascii("#.#\n.#.\n#..").unwrap();
        assert_eq!(mod_smooth(&g, 0), g);
    }

    #[test]
    fn smooth_keeps_uniform_grids() {
        let full = TileGrid::filled(6, 5, true).unwrap();
        assert_eq!(mod_smooth(&full, 7), full);
        let empty = TileGrid::new(6, 5).unwrap();
        assert_eq!(mod_smooth(&empty, 7), empty);
    }

    #[test]
    fn smooth_removes_isolated_speck() {
        let g = TileGrid::from_ascii(".....\n.....\n..#..\n.....\n.....").unwrap();
        assert!(mod_smooth(&g, 1).is_empty());
    }

    #[test]
    fn dilate_single_cell() {
        let mut g = TileGrid::new(5, 5).unwrap();
        g.set(2, 2, true);
        let d = mod_morph(&g, MorphOp::Dilate, 1).unwrap();
        assert_eq!(d.rows(), vec![".....", ".###.", ".###.", ".###.", "....."]);
        let mut corner = TileGrid::new(4, 4).unwrap();
        corner.set(0, 0, true);
        let d = mod_morph(&corner, MorphOp::Dilate, 1).unwrap();
        assert_eq!(d.rows(), vec!["##..", "##..", "....", "...."]);
    }

    #[test]
    fn erode_then_dilate_on_empty() {
        let g = TileGrid::new(7, 3).unwrap();
        let e = mod_morph(&g, MorphOp::Erode, 2).unwrap();
        assert!(mod_morph(&e, MorphOp::Dilate, 2).unwrap().is_empty());
    }

    #[test]
    fn erode_treats_outside_as_dead() {
        let full = TileGrid::filled(5, 5, true).unwrap();
        let e = mod_morph(&full, MorphOp::Erode, 1).unwrap();
        assert_eq!(e.rows(), vec![".....", ".###.", ".###.", ".###.", "....."]);
    }

    #[test]
    fn morph_rejects_zero_radius() {
        let g = TileGrid::new(2, 2).unwrap();
        assert!(mod_morph(&g, MorphOp::Erode, 0).is_err());
    }

    #[test]
    fn keep_largest_two_components() {
        let g = TileGrid::from_ascii("###.#\n##..#\n....#\n.....").unwrap();
        let kept = mod_keep_largest_region(&g, Connectivity::Eight);
        assert_eq!(kept.rows(), vec!["###..", "##...", ".....", "....."]);
    }

    #[test]
    fn keep_largest_tie_prefers_first() {
        let g = TileGrid::from_ascii("##.##").unwrap();
        let kept = mod_keep_largest_region(&g, Connectivity::Four);
        assert_eq!(kept.rows(), vec!["##..."]);
    }

    #[test]
    fn keep_largest_on_empty() {
        let g = TileGrid::new(3, 3).unwrap();
        assert_eq!(mod_keep_largest_region(&g, Connectivity::Four), g);
    }

    #[test]
    fn invert_twice_is_identity() {
        let g = TileGrid::from_ascii("#.\n.#").unwrap();
        assert_eq!(mod_invert(&mod_invert(&g)), g);
        assert_eq!(mod_invert(&g).rows(), vec![".#", "#."]);
    }
}
