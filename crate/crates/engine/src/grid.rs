use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{EngineError, Result};

/// Largest width or height the engine accepts.
pub const MAX_DIMENSION: usize = 4096;

/// Dense row-major boolean occupancy grid. `true` is an alive cell.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TileGrid {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl TileGrid {
    /// All-dead grid.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, false)
    }

    pub fn filled(width: usize, height: usize, alive: bool) -> Result<Self> {
        check_dimensions(width, height)?;
        Ok(Self {
            width,
            height,
            cells: vec![alive; width * height],
        })
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<bool>) -> Result<Self> {
        check_dimensions(width, height)?;
        if cells.len() != width * height {
            return Err(EngineError::DimensionMismatch {
                expected: format!("{} cells", width * height),
                found: format!("{} cells", cells.len()),
            });
        }
        Ok(Self { width, height, cells })
    }

    /// Parses `#` (alive) / `.` (dead) rows. Blank lines and surrounding
    /// whitespace are ignored.
    pub fn from_ascii(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        check_dimensions(width, height)?;
        let mut cells = Vec::with_capacity(width * height);
        for row in &rows {
            if row.chars().count() != width {
                return Err(EngineError::DimensionMismatch {
                    expected: format!("rows of {width} cells"),
                    found: format!("row of {} cells", row.chars().count()),
                });
            }
            for c in row.chars() {
                match c {
                    '#' => cells.push(true),
                    '.' => cells.push(false),
                    other => {
                        return Err(EngineError::InvalidArtifact(format!(
                            "unexpected grid character {other:?}"
                        )))
                    }
                }
            }
        }
        Ok(Self { width, height, cells })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.cells[self.index(x, y)]
    }

    /// Cell state with signed coordinates; `None` when out of bounds.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> Option<bool> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            None
        } else {
            Some(self.cells[y as usize * self.width + x as usize])
        }
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, alive: bool) {
        let i = self.index(x, y);
        self.cells[i] = alive;
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64
    }

    pub fn alive_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// Coordinates of alive cells in row-major order.
    pub fn alive_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(move |(i, _)| (i % w, i / w))
    }

    pub fn same_dimensions(&self, other: &TileGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Every cell of `self` alive implies alive in `other`.
    pub fn is_subset_of(&self, other: &TileGrid) -> bool {
        self.same_dimensions(other)
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(&a, &b)| !a || b)
    }

    pub(crate) fn map_cells(&self, f: impl Fn(usize, usize, bool) -> bool) -> TileGrid {
        let mut cells = Vec::with_capacity(self.cells.len());
        for y in 0..self.height {
            for x in 0..self.width {
                cells.push(f(x, y, self.get(x, y)));
            }
        }
        TileGrid {
            width: self.width,
            height: self.height,
            cells,
        }
    }

    /// One string per row, `#` alive and `.` dead.
    pub fn rows(&self) -> Vec<String> {
        self.cells
            .chunks(self.width)
            .map(|row| row.iter().map(|&c| if c { '#' } else { '.' }).collect())
            .collect()
    }
}

pub(crate) fn check_dimensions(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 || width > MAX_DIMENSION || height > MAX_DIMENSION {
        return Err(EngineError::DimensionOutOfRange {
            width,
            height,
            max: MAX_DIMENSION,
        });
    }
    Ok(())
}

impl fmt::Debug for TileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "TileGrid {}x{}", self.width, self.height)?;
        for row in self.rows() {
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    width: usize,
    height: usize,
    rows: Vec<String>,
}

impl Serialize for TileGrid {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridRepr {
            width: self.width,
            height: self.height,
            rows: self.rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TileGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = GridRepr::deserialize(d)?;
        if repr.rows.len() != repr.height {
            return Err(D::Error::custom(format!(
                "expected {} rows, found {}",
                repr.height,
                repr.rows.len()
            )));
        }
        let grid = TileGrid::from_ascii(&repr.rows.join("\n")).map_err(D::Error::custom)?;
        if grid.width != repr.width {
            return Err(D::Error::custom(format!(
                "expected width {}, found {}",
                repr.width, grid.width
            )));
        }
        Ok(grid)
    }
}
