//! Random walks on the raster.
//!
//! Zombies step to a uniformly chosen available neighbor. Humans take two
//! substeps per hour, each biased toward the three-cell sector that points
//! at their home cell, with a bias that grows linearly with the floored
//! Euclidean distance from home and becomes total beyond a cutoff.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::worldmap::{Cell, Direction, GridWorld};

#[derive(Debug, Error, PartialEq)]
pub enum MovementError {
    #[error("movement parameter {name} = {value} is invalid: {reason}")]
    Invalid {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

/// Weights of the home-biased human walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MovementParams {
    /// Uniform per-neighbor weight.
    pub base_weight: f64,
    /// Extra home-sector mass per kilometre of distance from home.
    pub bias_per_km: f64,
    /// Largest floored distance of the linear regime.
    pub bias_cap_distance: u32,
    /// Floored distance from which all mass goes to the home sector.
    pub full_bias_distance: u32,
}

impl Default for MovementParams {
    fn default() -> Self {
        MovementParams {
            base_weight: 0.125,
            bias_per_km: 0.05,
            bias_cap_distance: 12,
            full_bias_distance: 13,
        }
    }
}

impl MovementParams {
    pub fn validate(&self) -> Result<(), MovementError> {
        let invalid = |name, value, reason| Err(MovementError::Invalid { name, value, reason });
        if !(self.base_weight > 0.0 && self.base_weight.is_finite()) {
            return invalid("base_weight", self.base_weight, "must be positive");
        }
        if !(self.bias_per_km >= 0.0 && self.bias_per_km.is_finite()) {
            return invalid("bias_per_km", self.bias_per_km, "must be nonnegative");
        }
        let cap = f64::from(self.bias_cap_distance);
        let toward = 3.0 * self.base_weight + cap * self.bias_per_km;
        let away = 5.0 * self.base_weight - cap * self.bias_per_km;
        if toward > 8.0 * self.base_weight + 1e-12 || away < -1e-12 {
            return invalid(
                "bias_per_km",
                self.bias_per_km,
                "home-sector mass at the cap distance exceeds the total",
            );
        }
        Ok(())
    }

    /// Home-sector share of the substep mass at floored distance `x`
    /// when both the sector and its complement have available cells.
    #[inline]
    pub fn home_sector_mass(&self, x: u32) -> f64 {
        if x >= self.full_bias_distance {
            return 1.0;
        }
        let x = f64::from(x.min(self.bias_cap_distance));
        ((3.0 * self.base_weight + x * self.bias_per_km) / (8.0 * self.base_weight)).min(1.0)
    }
}

/// Floor of the Euclidean length of `(dx, dy)`.
#[inline]
pub fn floor_distance(dx: i64, dy: i64) -> u32 {
    let d2 = (dx * dx + dy * dy) as u64;
    let mut r = (d2 as f64).sqrt() as u64;
    while r * r > d2 {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= d2 {
        r += 1;
    }
    r as u32
}

/// Neighbor direction whose cell is closest to a target at offset `(dx, dy)`.
/// Ties go to the earlier direction in the fixed ordering.
#[inline]
pub fn central_direction(dx: i64, dy: i64) -> Direction {
    let mut best = Direction::E;
    let mut best_d2 = i64::MAX;
    for d in Direction::ALL {
        let (ox, oy) = d.offset();
        let ex = dx - i64::from(ox);
        let ey = dy - i64::from(oy);
        let d2 = ex * ex + ey * ey;
        if d2 < best_d2 {
            best_d2 = d2;
            best = d;
        }
    }
    best
}

/// Bitmask of the three sector directions around `central`.
#[inline]
pub fn sector_mask(central: Direction) -> u8 {
    (1 << central as u8) | (1 << central.ccw() as u8) | (1 << central.cw() as u8)
}

/// The geometric home sector of a cell and its available part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomeSector {
    pub central: Direction,
    /// In-bounds geometric sector cells (central first, then its clockwise
    /// and counter-clockwise companions).
    pub sector: Vec<Cell>,
    /// Sector cells that are passable.
    pub available: Vec<Cell>,
}

/// Sector toward `home` as seen from `current`. Requires `current != home`.
pub fn home_sector(current: Cell, home: Cell, world: &GridWorld) -> HomeSector {
    debug_assert_ne!(current, home);
    let dx = i64::from(home.x) - i64::from(current.x);
    let dy = i64::from(home.y) - i64::from(current.y);
    let central = central_direction(dx, dy);
    let mask = world.neighbor_mask(current);
    let mut sector = Vec::with_capacity(3);
    let mut available = Vec::with_capacity(3);
    for d in [central, central.cw(), central.ccw()] {
        let (ox, oy) = d.offset();
        if let Some(c) = world.offset_cell(current, ox, oy) {
            sector.push(c);
            if mask & (1 << d as u8) != 0 {
                available.push(c);
            }
        }
    }
    HomeSector { central, sector, available }
}

/// Per-direction substep probabilities for a human at offset `(dx, dy)` from
/// home (`home - current`) whose available neighbors are `mask`.
///
/// An all-zero result means the human has nowhere to go.
pub fn direction_weights(mask: u8, dx: i64, dy: i64, p: &MovementParams) -> [f64; 8] {
    let mut w = [0.0; 8];
    if mask == 0 {
        return w;
    }
    let spread = |w: &mut [f64; 8], bits: u8, mass: f64| {
        let share = mass / f64::from(bits.count_ones());
        for (d, slot) in w.iter_mut().enumerate() {
            if bits & (1 << d) != 0 {
                *slot = share;
            }
        }
    };
    if dx == 0 && dy == 0 {
        spread(&mut w, mask, 1.0);
        return w;
    }
    let sector = sector_mask(central_direction(dx, dy));
    let toward = mask & sector;
    let away = mask & !sector;
    let x = floor_distance(dx, dy);
    if x >= p.full_bias_distance && toward != 0 {
        spread(&mut w, toward, 1.0);
    } else if toward == 0 || away == 0 {
        spread(&mut w, mask, 1.0);
    } else {
        let m = p.home_sector_mass(x);
        spread(&mut w, toward, m);
        spread(&mut w, away, 1.0 - m);
    }
    w
}

/// Running sums of `weights` in direction order.
#[inline]
pub fn cumulative(weights: &[f64; 8]) -> [f64; 8] {
    let mut c = [0.0; 8];
    let mut acc = 0.0;
    for d in 0..8 {
        acc += weights[d];
        c[d] = acc;
    }
    c
}

/// Inverse-CDF pick for `u` in `[0, 1)`. `mask` lists the directions with
/// positive weight; rounding slack at the top end goes to the last of them.
#[inline]
pub fn pick_direction(cum: &[f64; 8], mask: u8, u: f64) -> Option<usize> {
    if mask == 0 {
        return None;
    }
    for (d, &c) in cum.iter().enumerate() {
        if mask & (1 << d) != 0 && u < c {
            return Some(d);
        }
    }
    Some(7 - mask.leading_zeros() as usize)
}

/// Directions that carry positive weight.
#[inline]
pub fn support_mask(weights: &[f64; 8]) -> u8 {
    weights
        .iter()
        .enumerate()
        .fold(0u8, |m, (d, &w)| if w > 0.0 { m | (1 << d) } else { m })
}

/// A human's one-substep move distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstepDistribution {
    pub entries: Vec<(Cell, f64)>,
}

impl SubstepDistribution {
    pub fn probability(&self, c: Cell) -> f64 {
        self.entries.iter().filter(|(e, _)| *e == c).map(|(_, p)| p).sum()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

/// Distribution of the next substep of a human at `current` whose home is `home`.
///
/// Lists every available neighbor in direction order, including those with
/// zero probability; a human with no available neighbor stays put.
pub fn human_substep_distribution(
    current: Cell,
    home: Cell,
    world: &GridWorld,
    p: &MovementParams,
) -> SubstepDistribution {
    let mask = world.neighbor_mask(current);
    if mask == 0 {
        return SubstepDistribution { entries: vec![(current, 1.0)] };
    }
    let dx = i64::from(home.x) - i64::from(current.x);
    let dy = i64::from(home.y) - i64::from(current.y);
    let w = direction_weights(mask, dx, dy, p);
    let entries = Direction::ALL
        .iter()
        .filter(|&&d| mask & (1 << d as u8) != 0)
        .map(|&d| {
            let (ox, oy) = d.offset();
            (world.offset_cell(current, ox, oy).unwrap(), w[d as usize])
        })
        .collect();
    SubstepDistribution { entries }
}

/// One human substep. Returns the chosen direction, or `None` if boxed in.
pub fn sample_human_substep<R: Rng + ?Sized>(
    rng: &mut R,
    current: Cell,
    home: Cell,
    world: &GridWorld,
    p: &MovementParams,
) -> Option<Direction> {
    let mask = world.neighbor_mask(current);
    if mask == 0 {
        return None;
    }
    let dx = i64::from(home.x) - i64::from(current.x);
    let dy = i64::from(home.y) - i64::from(current.y);
    let w = direction_weights(mask, dx, dy, p);
    let u: f64 = rng.random();
    pick_direction(&cumulative(&w), support_mask(&w), u).map(Direction::from_index)
}

fn step_to(world: &GridWorld, c: Cell, d: Direction) -> Cell {
    let (ox, oy) = d.offset();
    world.offset_cell(c, ox, oy).expect("available neighbor is in bounds")
}

/// A full hourly human move: two substeps, the second drawn from the cell
/// reached by the first.
pub fn move_human<R: Rng + ?Sized>(
    rng: &mut R,
    position: Cell,
    home: Cell,
    world: &GridWorld,
    p: &MovementParams,
) -> Cell {
    let mut at = position;
    for _ in 0..2 {
        if let Some(d) = sample_human_substep(rng, at, home, world, p) {
            at = step_to(world, at, d);
        }
    }
    at
}

/// Uniform choice among the set bits of `mask`.
#[inline]
pub fn uniform_direction<R: Rng + ?Sized>(rng: &mut R, mask: u8) -> Option<usize> {
    let n = mask.count_ones();
    if n == 0 {
        return None;
    }
    let mut k = rng.random_range(0..n);
    let mut m = mask;
    loop {
        let d = m.trailing_zeros();
        if k == 0 {
            return Some(d as usize);
        }
        k -= 1;
        m &= m - 1;
    }
}

/// A zombie's hourly move: one uniformly chosen available neighbor.
pub fn move_zombie<R: Rng + ?Sized>(rng: &mut R, position: Cell, world: &GridWorld) -> Cell {
    match uniform_direction(rng, world.neighbor_mask(position)) {
        Some(d) => step_to(world, position, Direction::from_index(d)),
        None => position,
    }
}

/// Radius of the offset-to-class lookup used by [`HumanKernel`].
const OFFSET_RADIUS: i64 = 16;
const OFFSET_SIDE: i64 = 2 * OFFSET_RADIUS + 1;
/// Largest distance class tabulated; larger parameter sets use the generic path.
const MAX_DISTANCE_CLASS: u32 = 48;

/// Cumulative weights padded with `+inf` from the last supported direction
/// on, so a pick is the number of entries `<= u`.
#[derive(Debug, Clone, Copy)]
#[repr(align(64))]
struct Cdf([f64; 8]);

impl Cdf {
    fn new(weights: &[f64; 8]) -> Self {
        let mut cum = cumulative(weights);
        let support = support_mask(weights);
        if support != 0 {
            let last = 7 - support.leading_zeros() as usize;
            for c in &mut cum[last..] {
                *c = f64::INFINITY;
            }
        }
        Cdf(cum)
    }

    #[inline(always)]
    fn pick(&self, u: f64) -> usize {
        self.0.iter().map(|&c| usize::from(c <= u)).sum()
    }
}

/// Tabulated human substep sampler. The weights depend on the offset to
/// home only through the central direction and the floored distance
/// (clamped where the weights stop changing), so every
/// `(direction, distance class, neighbor mask)` combination is precomputed.
/// Picks are bit-identical to [`direction_weights`] + [`pick_direction`].
#[derive(Debug, Clone)]
pub struct HumanKernel {
    params: MovementParams,
    /// Distance classes `0..=max_class`; `None` disables the tables.
    max_class: Option<u32>,
    /// Class row for offsets within `OFFSET_RADIUS`.
    offset_class: Vec<u16>,
    /// `table[row * 256 + mask]`; row `home_row()` is the at-home case.
    table: Vec<Cdf>,
}

impl HumanKernel {
    pub fn new(params: MovementParams) -> Self {
        let max_class = params.bias_cap_distance.max(params.full_bias_distance);
        if max_class > MAX_DISTANCE_CLASS {
            return HumanKernel { params, max_class: None, offset_class: Vec::new(), table: Vec::new() };
        }
        let rows = 8 * (max_class as usize + 1) + 1;
        let mut table = Vec::with_capacity(rows * 256);
        for row in 0..rows {
            // A representative offset for the row: the central direction
            // scaled to the class distance.
            let (dx, dy) = if row == rows - 1 { (0, 0) } else { representative(row, max_class) };
            for mask in 0..=255u8 {
                table.push(Cdf::new(&direction_weights(mask, dx, dy, &params)));
            }
        }
        let mut k = HumanKernel { params, max_class: Some(max_class), offset_class: Vec::new(), table };
        let mut offset_class = Vec::with_capacity((OFFSET_SIDE * OFFSET_SIDE) as usize);
        for dy in -OFFSET_RADIUS..=OFFSET_RADIUS {
            for dx in -OFFSET_RADIUS..=OFFSET_RADIUS {
                offset_class.push(k.row_of(dx, dy, max_class) as u16);
            }
        }
        k.offset_class = offset_class;
        k
    }

    pub fn params(&self) -> &MovementParams {
        &self.params
    }

    fn row_of(&self, dx: i64, dy: i64, max_class: u32) -> usize {
        if dx == 0 && dy == 0 {
            return 8 * (max_class as usize + 1);
        }
        let class = floor_distance(dx, dy).min(max_class) as usize;
        central_direction(dx, dy) as usize * (max_class as usize + 1) + class
    }

    /// Direction for a substep with offset `(dx, dy)` to home, neighbor mask
    /// `mask` and uniform draw `u`.
    #[inline]
    pub fn pick(&self, mask: u8, dx: i64, dy: i64, u: f64) -> Option<usize> {
        if mask == 0 {
            return None;
        }
        let Some(max_class) = self.max_class else {
            let w = direction_weights(mask, dx, dy, &self.params);
            return pick_direction(&cumulative(&w), support_mask(&w), u);
        };
        let row = if dx.abs() <= OFFSET_RADIUS && dy.abs() <= OFFSET_RADIUS {
            usize::from(self.offset_class[((dy + OFFSET_RADIUS) * OFFSET_SIDE + dx + OFFSET_RADIUS) as usize])
        } else {
            self.row_of(dx, dy, max_class)
        };
        Some(self.table[row * 256 + usize::from(mask)].pick(u))
    }
}

/// An offset whose central direction and distance class are those of `row`.
/// Rows that no offset maps to (class 0) get an arbitrary offset.
fn representative(row: usize, max_class: u32) -> (i64, i64) {
    let per_dir = max_class as usize + 1;
    let d = Direction::from_index(row / per_dir);
    let class = (row % per_dir) as u32;
    let r = i64::from(class) + 1;
    for dy in -r..=r {
        for dx in -r..=r {
            if (dx, dy) != (0, 0) && floor_distance(dx, dy) == class && central_direction(dx, dy) == d {
                return (dx, dy);
            }
        }
    }
    let (ox, oy) = d.offset();
    (i64::from(ox), i64::from(oy))
}
