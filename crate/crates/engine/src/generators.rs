//! Grid generators: cellular automata caves, fractal value noise and
//! recursive-backtracker mazes.

use crate::grid::check_dimensions;
use crate::prng::{mix64, SplitMix64, GAMMA};
use crate::{EngineError, Result, TileGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaParams {
    pub width: usize,
    pub height: usize,
    pub fill_probability: f64,
    pub iterations: u32,
    pub birth_limit: u8,
    pub death_limit: u8,
}

/// Seeds every cell alive with `fill_probability` (row-major draws), then
/// runs `iterations` synchronous steps:
///
/// * a dead cell is born when its alive 8-neighbour count exceeds `birth_limit`;
/// * an alive cell survives when its count is at least `death_limit`.
///
/// Neighbours outside the grid count as alive, so borders stay solid.
pub fn gen_cellular_automata(seed: u64, params: &CaParams) -> Result<TileGrid> {
    check_dimensions(params.width, params.height)?;
    if !(0.0..=1.0).contains(&params.fill_probability) {
        return Err(EngineError::param(
            "fill_probability",
            params.fill_probability,
            "[0, 1]",
        ));
    }
    if params.birth_limit > 8 {
        return Err(EngineError::param("birth_limit", params.birth_limit, "[0, 8]"));
    }
    if params.death_limit > 8 {
        return Err(EngineError::param("death_limit", params.death_limit, "[0, 8]"));
    }

    let mut rng = SplitMix64::new(seed);
    let cells = (0..params.width * params.height)
        .map(|_| rng.chance(params.fill_probability))
        .collect();
    let mut grid = TileGrid::from_cells(params.width, params.height, cells)?;
    for _ in 0..params.iterations {
        let next = ca_step(&grid, params.birth_limit, params.death_limit);
        if next == grid {
            break;
        }
        grid = next;
    }
    Ok(grid)
}

fn ca_step(grid: &TileGrid, birth_limit: u8, death_limit: u8) -> TileGrid {
    grid.map_cells(|x, y, alive| {
        let mut n = 0u8;
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if (dx, dy) != (0, 0)
                    && grid.get_signed(x as i64 + dx, y as i64 + dy).unwrap_or(true)
                {
                    n += 1;
                }
            }
        }
        if alive {
            n >= death_limit
        } else {
            n > birth_limit
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub width: usize,
    pub height: usize,
    pub frequency: f64,
    pub octaves: u32,
    pub threshold: f64,
}

/// Lattice value in `[0, 1)` for integer point `(ix, iy)` of one octave.
pub(crate) fn lattice_value(seed: u64, octave: u32, ix: i64, iy: i64) -> f64 {
    let mut h = seed ^ GAMMA.wrapping_mul(octave as u64 + 1);
    h = mix64(h ^ (ix as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    h = mix64(h ^ (iy as u64).wrapping_mul(0x94D0_49BB_1331_11EB));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Fractal value noise at cell `(x, y)`, normalized to `[0, 1)` by the sum
/// of octave amplitudes. Octave `o` samples the lattice at
/// `frequency * 2^o` with amplitude `0.5^o` and bilinear interpolation.
pub(crate) fn fractal_value(seed: u64, x: usize, y: usize, frequency: f64, octaves: u32) -> f64 {
    let mut total = 0.0;
    let mut amplitude_sum = 0.0;
    let mut amplitude = 1.0;
    let mut freq = frequency;
    for octave in 0..octaves {
        let fx = x as f64 * freq;
        let fy = y as f64 * freq;
        let x0 = fx.floor();
        let y0 = fy.floor();
        let tx = fx - x0;
        let ty = fy - y0;
        let (ix, iy) = (x0 as i64, y0 as i64);
        let v00 = lattice_value(seed, octave, ix, iy);
        let v10 = lattice_value(seed, octave, ix + 1, iy);
        let v01 = lattice_value(seed, octave, ix, iy + 1);
        let v11 = lattice_value(seed, octave, ix + 1, iy + 1);
        let top = v00 + (v10 - v00) * tx;
        let bottom = v01 + (v11 - v01) * tx;
        total += (top + (bottom - top) * ty) * amplitude;
        amplitude_sum += amplitude;
        amplitude *= 0.5;
        freq *= 2.0;
    }
    total / amplitude_sum
}

/// Alive where the normalized fractal value noise is at least `threshold`.
pub fn gen_noise_region(seed: u64, params: &NoiseParams) -> Result<TileGrid> {
    check_dimensions(params.width, params.height)?;
    if !(params.frequency > 0.0 && params.frequency.is_finite()) {
        return Err(EngineError::param("frequency", params.frequency, "(0, inf)"));
    }
    if !(1..=8).contains(&params.octaves) {
        return Err(EngineError::param("octaves", params.octaves, "[1, 8]"));
    }
    if !(0.0..=1.0).contains(&params.threshold) {
        return Err(EngineError::param("threshold", params.threshold, "[0, 1]"));
    }
    let grid = TileGrid::new(params.width, params.height)?;
    Ok(grid.map_cells(|x, y, _| {
        fractal_value(seed, x, y, params.frequency, params.octaves) >= params.threshold
    }))
}

/// Perfect maze by iterative recursive backtracking. Walls are alive,
/// corridors dead. Maze cells sit on odd coordinates; the carve starts at
/// `(1, 1)` and neighbours are considered in the order up, right, down, left.
pub fn gen_maze(seed: u64, width: usize, height: usize) -> Result<TileGrid> {
    check_dimensions(width, height)?;
    if width < 3 || height < 3 || width.is_multiple_of(2) || height.is_multiple_of(2) {
        return Err(EngineError::EvenDimension { width, height });
    }
    const DIRECTIONS: [(i64, i64); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

    let mut grid = TileGrid::filled(width, height, true)?;
    let mut rng = SplitMix64::new(seed);
    let mut stack = vec![(1usize, 1usize)];
    grid.set(1, 1, false);

    while let Some(&(x, y)) = stack.last() {
        let mut options = [(0usize, 0usize); 4];
        let mut count = 0;
        for (dx, dy) in DIRECTIONS {
            let nx = x as i64 + 2 * dx;
            let ny = y as i64 + 2 * dy;
            if nx > 0
                && ny > 0
                && nx < width as i64 - 1
                && ny < height as i64 - 1
                && grid.get(nx as usize, ny as usize)
            {
                options[count] = (nx as usize, ny as usize);
                count += 1;
            }
        }
        if count == 0 {
            stack.pop();
            continue;
        }
        let (nx, ny) = options[rng.below(count)];
        grid.set((x + nx) / 2, (y + ny) / 2, false);
        grid.set(nx, ny, false);
        stack.push((nx, ny));
    }
    Ok(grid)
}
