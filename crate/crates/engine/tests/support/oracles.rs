//! Naive reference implementations used as test oracles.
//!
//! These are written directly from the documented definitions and share no
//! code with the engine: plain nested loops over `Vec<Vec<bool>>`.

#![allow(dead_code, clippy::needless_range_loop)]

pub type Cells = Vec<Vec<bool>>;

pub fn to_cells(grid: &pcg_engine::TileGrid) -> Cells {
    (0..grid.height())
        .map(|y| (0..grid.width()).map(|x| grid.get(x, y)).collect())
        .collect()
}

/// Independent SplitMix64.
pub struct RefRng(pub u64);

impl RefRng {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / 9007199254740992.0
    }
}

pub fn mix(z: u64) -> u64 {
    let mut r = RefRng(z.wrapping_sub(0x9e3779b97f4a7c15));
    r.next()
}

fn alive_or(c: &Cells, x: i64, y: i64, outside: bool) -> bool {
    if y < 0 || x < 0 || y as usize >= c.len() || x as usize >= c[0].len() {
        outside
    } else {
        c[y as usize][x as usize]
    }
}

fn neighbours(c: &Cells, x: usize, y: usize, outside: bool) -> u32 {
    let mut n = 0;
    for dy in [-1i64, 0, 1] {
        for dx in [-1i64, 0, 1] {
            if !(dx == 0 && dy == 0) && alive_or(c, x as i64 + dx, y as i64 + dy, outside) {
                n += 1;
            }
        }
    }
    n
}

pub fn ca_seed(seed: u64, w: usize, h: usize, p: f64) -> Cells {
    let mut rng = RefRng(seed);
    let mut out = vec![vec![false; w]; h];
    for row in out.iter_mut() {
        for cell in row.iter_mut() {
            *cell = rng.unit() < p;
        }
    }
    out
}

pub fn ca_step(c: &Cells, birth: u32, death: u32) -> Cells {
    let mut out = c.clone();
    for y in 0..c.len() {
        for x in 0..c[0].len() {
            let n = neighbours(c, x, y, true);
            out[y][x] = if c[y][x] { n >= death } else { n > birth };
        }
    }
    out
}

pub fn smooth_step(c: &Cells) -> Cells {
    let mut out = c.clone();
    for y in 0..c.len() {
        for x in 0..c[0].len() {
            let n = neighbours(c, x, y, c[y][x]);
            out[y][x] = if n > 4 {
                true
            } else if n < 4 {
                false
            } else {
                c[y][x]
            };
        }
    }
    out
}

pub fn erode(c: &Cells, r: i64) -> Cells {
    let mut out = c.clone();
    for y in 0..c.len() {
        for x in 0..c[0].len() {
            let mut all = true;
            for dy in -r..=r {
                for dx in -r..=r {
                    all &= alive_or(c, x as i64 + dx, y as i64 + dy, false);
                }
            }
            out[y][x] = all;
        }
    }
    out
}

pub fn dilate(c: &Cells, r: i64) -> Cells {
    let mut out = c.clone();
    for y in 0..c.len() {
        for x in 0..c[0].len() {
            let mut any = false;
            for dy in -r..=r {
                for dx in -r..=r {
                    any |= alive_or(c, x as i64 + dx, y as i64 + dy, false);
                }
            }
            out[y][x] = any;
        }
    }
    out
}

/// Component sizes by recursive depth-first flood fill, in discovery order.
pub fn component_sizes(c: &Cells, eight: bool) -> Vec<usize> {
    fn fill(c: &Cells, seen: &mut Vec<Vec<bool>>, x: i64, y: i64, eight: bool) -> usize {
        if !alive_or(c, x, y, false) || seen[y as usize][x as usize] {
            return 0;
        }
        seen[y as usize][x as usize] = true;
        let mut total = 1;
        for dy in [-1i64, 0, 1] {
            for dx in [-1i64, 0, 1] {
                let diagonal = dx != 0 && dy != 0;
                if (dx, dy) != (0, 0) && (eight || !diagonal) {
                    total += fill(c, seen, x + dx, y + dy, eight);
                }
            }
        }
        total
    }
    let mut seen = vec![vec![false; c[0].len()]; c.len()];
    let mut sizes = Vec::new();
    for y in 0..c.len() {
        for x in 0..c[0].len() {
            let s = fill(c, &mut seen, x as i64, y as i64, eight);
            if s > 0 {
                sizes.push(s);
            }
        }
    }
    sizes
}

/// Union-find component count, a second route independent of flood fill.
pub fn union_find_count(c: &Cells, eight: bool) -> usize {
    let h = c.len();
    let w = c[0].len();
    let mut parent: Vec<usize> = (0..w * h).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for y in 0..h {
        for x in 0..w {
            if !c[y][x] {
                continue;
            }
            let link = |nx: i64, ny: i64, parent: &mut Vec<usize>| {
                if alive_or(c, nx, ny, false) {
                    let a = find(parent, y * w + x);
                    let b = find(parent, ny as usize * w + nx as usize);
                    parent[a] = b;
                }
            };
            link(x as i64 - 1, y as i64, &mut parent);
            link(x as i64, y as i64 - 1, &mut parent);
            if eight {
                link(x as i64 - 1, y as i64 - 1, &mut parent);
                link(x as i64 + 1, y as i64 - 1, &mut parent);
            }
        }
    }
    let mut roots = std::collections::HashSet::new();
    for y in 0..h {
        for x in 0..w {
            if c[y][x] {
                roots.insert(find(&mut parent, y * w + x));
            }
        }
    }
    roots.len()
}

/// Corridor (dead) cell count and 4-adjacent corridor edge count.
pub fn corridor_graph(c: &Cells) -> (usize, usize) {
    let mut nodes = 0;
    let mut edges = 0;
    for y in 0..c.len() {
        for x in 0..c[0].len() {
            if c[y][x] {
                continue;
            }
            nodes += 1;
            if x + 1 < c[0].len() && !c[y][x + 1] {
                edges += 1;
            }
            if y + 1 < c.len() && !c[y + 1][x] {
                edges += 1;
            }
        }
    }
    (nodes, edges)
}

pub fn invert(c: &Cells) -> Cells {
    c.iter().map(|r| r.iter().map(|v| !v).collect()).collect()
}

/// Lattice hash + bilinear fractal value noise, transcribed from the
/// documented definition.
pub fn noise_value(seed: u64, x: usize, y: usize, frequency: f64, octaves: u32) -> f64 {
    let lattice = |octave: u32, ix: i64, iy: i64| -> f64 {
        let h0 = seed ^ 0x9e3779b97f4a7c15u64.wrapping_mul(octave as u64 + 1);
        let h1 = mix(h0 ^ (ix as u64).wrapping_mul(0xbf58476d1ce4e5b9));
        let h2 = mix(h1 ^ (iy as u64).wrapping_mul(0x94d049bb133111eb));
        (h2 >> 11) as f64 / 9007199254740992.0
    };
    let mut sum = 0.0;
    let mut norm = 0.0;
    for o in 0..octaves {
        let amp = 0.5f64.powi(o as i32);
        let f = frequency * 2f64.powi(o as i32);
        let (px, py) = (x as f64 * f, y as f64 * f);
        let (ix, iy) = (px.floor() as i64, py.floor() as i64);
        let (tx, ty) = (px - px.floor(), py - py.floor());
        let a = lattice(o, ix, iy);
        let b = lattice(o, ix + 1, iy);
        let c = lattice(o, ix, iy + 1);
        let d = lattice(o, ix + 1, iy + 1);
        let top = a + (b - a) * tx;
        let bottom = c + (d - c) * tx;
        sum += (top + (bottom - top) * ty) * amp;
        norm += amp;
    }
    sum / norm
}

pub fn scatter_cells(mask: &Cells, on_mask: bool, density: f64, seed: u64) -> Vec<(u32, u32)> {
    let mut rng = RefRng(seed);
    let mut out = Vec::new();
    for (y, row) in mask.iter().enumerate() {
        for (x, &v) in row.iter().enumerate() {
            if v == on_mask && rng.unit() < density {
                out.push((x as u32, y as u32));
            }
        }
    }
    out
}
