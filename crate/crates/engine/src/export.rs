//! ASCII and PGM renderings for visual inspection.

use crate::{MapArtifact, TileGrid};

impl TileGrid {
    /// `#` alive, `.` dead, one line per row.
    pub fn to_ascii(&self) -> String {
        let mut out = self.rows().join("\n");
        out.push('\n');
        out
    }

    /// Binary PGM (P5): alive 255, dead 0.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width(), self.height()).into_bytes();
        out.extend(self.cells().iter().map(|&c| if c { 255u8 } else { 0 }));
        out
    }
}

impl MapArtifact {
    /// Height map: each cell shows the highest layer index alive there
    /// (`+` above 9, `.` for none), with placements drawn as the first
    /// character of their kind.
    pub fn to_ascii(&self) -> String {
        let Some(first) = self.layers().first() else {
            return String::new();
        };
        let (w, h) = first.grid.dimensions();
        let mut canvas = vec![vec!['.'; w]; h];
        for layer in self.layers() {
            let glyph = char::from_digit(layer.height_index, 10).unwrap_or('+');
            for (x, y) in layer.grid.alive_cells() {
                canvas[y][x] = glyph;
            }
        }
        for p in self.placements() {
            if let Some(c) = p.kind.chars().next() {
                canvas[p.y as usize][p.x as usize] = c;
            }
        }
        canvas
            .into_iter()
            .map(|row| row.into_iter().collect::<String>() + "\n")
            .collect()
    }

    /// Binary PGM height map scaled over the layer count.
    pub fn to_pgm(&self) -> Vec<u8> {
        let Some(first) = self.layers().first() else {
            return b"P5\n0 0\n255\n".to_vec();
        };
        let (w, h) = first.grid.dimensions();
        let steps = self.layers().len() as u32;
        let mut pixels = vec![0u8; w * h];
        for (rank, layer) in self.layers().iter().enumerate() {
            let value = (255 * (rank as u32 + 1) / steps) as u8;
            for (x, y) in layer.grid.alive_cells() {
                pixels[y * w + x] = value;
            }
        }
        let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
        out.extend(pixels);
        out
    }
}
