//! Black and white tile floors with an exact white count.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Side length of the arena in space units; tiles are 1 su square.
pub const ARENA: usize = 36;
pub const TILES: usize = ARENA * ARENA;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Checkerboard,
    Striped,
    FourRectangles,
    Halved,
}

impl Geometry {
    pub const ALL: [Geometry; 4] = [
        Geometry::Checkerboard,
        Geometry::Striped,
        Geometry::FourRectangles,
        Geometry::Halved,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Checkerboard => "checkerboard",
            Geometry::Striped => "striped",
            Geometry::FourRectangles => "four_rectangles",
            Geometry::Halved => "halved",
        }
    }
}

impl std::str::FromStr for Geometry {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Geometry::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| format!("unknown geometry {s:?}"))
    }
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tile `(x, y)` covers `[x, x + 1) × [y, y + 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Environment {
    pub geometry: Geometry,
    white: Vec<bool>,
}

/// Number of white tiles for fill ratio `f`.
pub fn white_target(f: f64) -> Result<usize> {
    if !(f > 0.5 && f <= 1.0) {
        return Err(SimError::FillRatio(f));
    }
    let w = (f * TILES as f64).round() as usize;
    if 2 * w <= TILES {
        return Err(SimError::NoMajority(f));
    }
    Ok(w)
}

pub fn generate_environment(geometry: Geometry, f: f64, seed: u64) -> Result<Environment> {
    generate_with_rng(geometry, f, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn generate_with_rng<R: Rng + ?Sized>(geometry: Geometry, f: f64, rng: &mut R) -> Result<Environment> {
    let w = white_target(f)?;
    let mut env = Environment {
        geometry,
        white: vec![false; TILES],
    };
    match geometry {
        Geometry::Checkerboard => {
            for i in index::sample(rng, TILES, w) {
                env.white[i] = true;
            }
        }
        Geometry::Striped => env.fill_striped(w),
        Geometry::FourRectangles => env.fill_rectangles(w),
        Geometry::Halved => env.fill_columns(0, w),
    }
    debug_assert_eq!(env.white_count(), w);
    Ok(env)
}

/// Splits `total` columns into `parts` widths differing by at most one, wider first.
fn spread(total: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|i| total / parts + usize::from(i < total % parts))
        .collect()
}

impl Environment {
    pub fn is_white(&self, x: usize, y: usize) -> bool {
        self.white[x * ARENA + y]
    }

    fn set(&mut self, x: usize, y: usize, white: bool) {
        self.white[x * ARENA + y] = white;
    }

    /// Color of the tile under the point `(x, y)` in su.
    pub fn sample(&self, x: f64, y: f64) -> bool {
        let clamp = |v: f64| (v.max(0.0) as usize).min(ARENA - 1);
        self.is_white(clamp(x), clamp(y))
    }

    pub fn white_count(&self) -> usize {
        self.white.iter().filter(|&&w| w).count()
    }

    pub fn fill_ratio(&self) -> f64 {
        self.white_count() as f64 / TILES as f64
    }

    /// Majority color of the floor; `true` for white.
    pub fn majority_white(&self) -> bool {
        2 * self.white_count() > TILES
    }

    /// Paints `count` tiles white column by column starting at column `from`.
    fn fill_columns(&mut self, from: usize, count: usize) {
        for i in 0..count {
            self.set(from + i / ARENA, i % ARENA, true);
        }
    }

    /// Eight vertical bars, alternately white and black, starting with white. Bar
    /// widths are spread as evenly as the white count allows and the leftover
    /// tiles fill part of the first column of the first black bar.
    fn fill_striped(&mut self, w: usize) {
        let white_cols = w / ARENA;
        let rem = w % ARENA;
        let whites = spread(white_cols, 4);
        let blacks = spread(ARENA - white_cols, 4);
        let mut x = 0;
        for bar in 0..4 {
            for _ in 0..whites[bar] {
                for y in 0..ARENA {
                    self.set(x, y, true);
                }
                x += 1;
            }
            if bar == 0 {
                for y in 0..rem {
                    self.set(x, y, true);
                }
            }
            x += blacks[bar];
        }
    }

    /// Equal quadrants split at the arena center, bottom-left and top-right white.
    /// The tiles still missing are painted row by row along the bottom wall of the
    /// bottom-right quadrant (then down from the top wall of the top-left one).
    fn fill_rectangles(&mut self, w: usize) {
        let s = ARENA / 2;
        for x in 0..ARENA {
            for y in 0..ARENA {
                self.set(x, y, (x < s) == (y < s));
            }
        }
        let mut deficit = w - 2 * s * s;
        let black_cells = (0..s)
            .flat_map(|y| (s..ARENA).map(move |x| (x, y)))
            .chain((s..ARENA).rev().flat_map(|y| (0..s).map(move |x| (x, y))));
        for (x, y) in black_cells {
            if deficit == 0 {
                break;
            }
            self.set(x, y, true);
            deficit -= 1;
        }
    }

    /// 36 lines of text, top row first; `#` marks black and `.` white.
    pub fn to_bitmap(&self) -> String {
        let mut out = String::with_capacity(TILES + ARENA);
        for y in (0..ARENA).rev() {
            for x in 0..ARENA {
                out.push(if self.is_white(x, y) { '.' } else { '#' });
            }
            out.push('\n');
        }
        out
    }
}
