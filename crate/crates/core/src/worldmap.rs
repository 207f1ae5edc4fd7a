//! Rasterized geography: passability, resident population, the quarantine
//! flag and the outbreak origin on a grid of 1 km cells.
//!
//! Coordinates: `x` grows east, `y` grows north. Cell `(x, y)` is stored at
//! index `y * width + x`.

use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported side length. The engine stores coordinates as `u16`.
pub const MAX_SIDE: u32 = u16::MAX as u32;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no outbreak origin given")]
    MissingOrigin,
    #[error("invalid world: {0}")]
    Invalid(String),
}

/// One 1 km x 1 km raster square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub const fn new(x: u32, y: u32) -> Self {
        Cell { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// The eight compass directions in the fixed neighbor ordering
/// E, NE, N, NW, W, SW, S, SE (counter-clockwise from east).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Direction {
    E = 0,
    NE,
    N,
    NW,
    W,
    SW,
    S,
    SE,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::E,
        Direction::NE,
        Direction::N,
        Direction::NW,
        Direction::W,
        Direction::SW,
        Direction::S,
        Direction::SE,
    ];

    /// `(dx, dy)` per direction, indexed by `Direction as usize`.
    pub const OFFSETS: [(i32, i32); 8] = [
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
        (-1, -1),
        (0, -1),
        (1, -1),
    ];

    #[inline]
    pub fn from_index(i: usize) -> Direction {
        Direction::ALL[i & 7]
    }

    #[inline]
    pub fn offset(self) -> (i32, i32) {
        Direction::OFFSETS[self as usize]
    }

    /// The next direction counter-clockwise.
    #[inline]
    pub fn ccw(self) -> Direction {
        Direction::from_index(self as usize + 1)
    }

    /// The next direction clockwise.
    #[inline]
    pub fn cw(self) -> Direction {
        Direction::from_index(self as usize + 7)
    }
}

/// Immutable raster world shared by every run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridWorld {
    width: u32,
    height: u32,
    passable: Vec<bool>,
    population: Vec<u32>,
    quarantine: Vec<bool>,
    origin: Cell,
    /// Bit `d` is set when the neighbor in direction `d` is in bounds and passable.
    masks: Vec<u8>,
    total_population: u64,
    has_quarantine: bool,
}

/// A passable cell as listed in a map file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRecord {
    pub cell: Cell,
    pub population: u32,
    pub quarantine: bool,
}

impl GridWorld {
    /// Builds a world from its passable cells. Cells not listed are impassable.
    pub fn from_records(
        width: u32,
        height: u32,
        records: impl IntoIterator<Item = CellRecord>,
        origin: Cell,
    ) -> Result<Self, WorldError> {
        if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
            return Err(WorldError::Invalid(format!(
                "dimensions {width}x{height} outside 1..={MAX_SIDE}"
            )));
        }
        let n = width as usize * height as usize;
        let mut passable = vec![false; n];
        let mut population = vec![0u32; n];
        let mut quarantine = vec![false; n];
        for r in records {
            if r.cell.x >= width || r.cell.y >= height {
                return Err(WorldError::Invalid(format!("cell {} out of bounds", r.cell)));
            }
            let i = (r.cell.y * width + r.cell.x) as usize;
            if passable[i] {
                return Err(WorldError::Invalid(format!("duplicate cell {}", r.cell)));
            }
            passable[i] = true;
            population[i] = r.population;
            quarantine[i] = r.quarantine;
        }
        Self::from_parts(width, height, passable, population, quarantine, origin)
    }

    fn from_parts(
        width: u32,
        height: u32,
        passable: Vec<bool>,
        population: Vec<u32>,
        quarantine: Vec<bool>,
        origin: Cell,
    ) -> Result<Self, WorldError> {
        if origin.x >= width || origin.y >= height {
            return Err(WorldError::Invalid(format!("origin {origin} out of bounds")));
        }
        let oi = (origin.y * width + origin.x) as usize;
        if !passable[oi] {
            return Err(WorldError::Invalid(format!("origin {origin} is impassable")));
        }
        for i in 0..passable.len() {
            if !passable[i] && (population[i] != 0 || quarantine[i]) {
                return Err(WorldError::Invalid(format!(
                    "impassable cell index {i} carries population or quarantine"
                )));
            }
        }
        let total_population = population.iter().map(|&p| u64::from(p)).sum();
        let has_quarantine = quarantine.iter().any(|&q| q);
        let mut world = GridWorld {
            width,
            height,
            passable,
            population,
            quarantine,
            origin,
            masks: Vec::new(),
            total_population,
            has_quarantine,
        };
        world.masks = (0..world.cell_count())
            .map(|i| world.compute_mask(world.cell_of(i)))
            .collect();
        Ok(world)
    }

    fn compute_mask(&self, c: Cell) -> u8 {
        let mut m = 0u8;
        for (d, &(dx, dy)) in Direction::OFFSETS.iter().enumerate() {
            if let Some(n) = self.offset_cell(c, dx, dy) {
                if self.is_passable(n) {
                    m |= 1 << d;
                }
            }
        }
        m
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn origin(&self) -> Cell {
        self.origin
    }

    pub fn cell_count(&self) -> usize {
        self.passable.len()
    }

    pub fn total_population(&self) -> u64 {
        self.total_population
    }

    /// Whether any cell carries the quarantine flag.
    pub fn has_quarantine(&self) -> bool {
        self.has_quarantine
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    #[inline]
    pub fn index(&self, c: Cell) -> usize {
        debug_assert!(self.contains(c));
        c.y as usize * self.width as usize + c.x as usize
    }

    #[inline]
    pub fn cell_of(&self, index: usize) -> Cell {
        let w = self.width as usize;
        Cell::new((index % w) as u32, (index / w) as u32)
    }

    /// The cell at `c + (dx, dy)` if it lies inside the grid.
    #[inline]
    pub fn offset_cell(&self, c: Cell, dx: i32, dy: i32) -> Option<Cell> {
        let x = i64::from(c.x) + i64::from(dx);
        let y = i64::from(c.y) + i64::from(dy);
        (x >= 0 && y >= 0 && x < i64::from(self.width) && y < i64::from(self.height))
            .then(|| Cell::new(x as u32, y as u32))
    }

    #[inline]
    pub fn is_passable(&self, c: Cell) -> bool {
        self.passable[self.index(c)]
    }

    #[inline]
    pub fn population(&self, c: Cell) -> u32 {
        self.population[self.index(c)]
    }

    #[inline]
    pub fn in_quarantine(&self, c: Cell) -> bool {
        self.quarantine[self.index(c)]
    }

    #[inline]
    pub(crate) fn quarantine_at(&self, index: usize) -> bool {
        self.quarantine[index]
    }

    #[inline]
    pub(crate) fn population_at(&self, index: usize) -> u32 {
        self.population[index]
    }

    #[inline]
    pub(crate) fn passable_at(&self, index: usize) -> bool {
        self.passable[index]
    }

    /// Availability bitmask of the eight neighbors of `c` (bit = `Direction as u8`).
    #[inline]
    pub fn neighbor_mask(&self, c: Cell) -> u8 {
        self.masks[self.index(c)]
    }

    #[inline]
    pub(crate) fn mask_at(&self, index: usize) -> u8 {
        self.masks[index]
    }

    /// Passable in-bounds neighbors of `c` in the fixed order E, NE, N, NW, W, SW, S, SE.
    pub fn neighbors(&self, c: Cell) -> Vec<Cell> {
        let m = self.neighbor_mask(c);
        Direction::ALL
            .iter()
            .filter(|&&d| m & (1 << d as u8) != 0)
            .map(|&d| {
                let (dx, dy) = d.offset();
                self.offset_cell(c, dx, dy).expect("mask bit implies in bounds")
            })
            .collect()
    }

    /// All passable cells as records, in index order.
    pub fn records(&self) -> impl Iterator<Item = CellRecord> + '_ {
        (0..self.cell_count())
            .filter(|&i| self.passable[i])
            .map(|i| CellRecord {
                cell: self.cell_of(i),
                population: self.population[i],
                quarantine: self.quarantine[i],
            })
    }

    pub fn passable_count(&self) -> usize {
        self.passable.iter().filter(|&&p| p).count()
    }

    /// Returns a copy with a different origin.
    pub fn with_origin(&self, origin: Cell) -> Result<Self, WorldError> {
        Self::from_parts(
            self.width,
            self.height,
            self.passable.clone(),
            self.population.clone(),
            self.quarantine.clone(),
            origin,
        )
    }
}

// ---------------------------------------------------------------------------
// Map CSV
// ---------------------------------------------------------------------------

/// Header line of the map CSV format.
pub const MAP_HEADER: &str = "x,y,population,quarantine";

/// Loads a map CSV.
///
/// The file lists one row per passable cell under the header
/// `x,y,population,quarantine`. Lines starting with `#` are comments; the
/// comment directives `# width=W`, `# height=H` and `# origin=X,Y` are
/// recognised. Without explicit dimensions the grid is the bounding box of
/// the listed cells. `origin` overrides any origin directive in the file.
pub fn load_raster(path: impl AsRef<Path>, origin: Option<Cell>) -> Result<GridWorld, WorldError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| WorldError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_raster(BufReader::new(file), origin).map_err(|e| match e {
        WorldError::Io { source, .. } => WorldError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

/// Parses the map CSV format from any reader. See [`load_raster`].
pub fn parse_raster(reader: impl BufRead, origin: Option<Cell>) -> Result<GridWorld, WorldError> {
    let mut width: Option<u32> = None;
    let mut height: Option<u32> = None;
    let mut file_origin: Option<(Cell, usize)> = None;
    let mut seen_header = false;
    let mut rows: Vec<(CellRecord, usize)> = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|source| WorldError::Io {
            path: String::new(),
            source,
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.trim().split_once('=') {
                let value = value.trim();
                let bad = |what: &str| WorldError::Parse {
                    line: lineno,
                    message: format!("invalid {what} directive `{value}`"),
                };
                match key.trim() {
                    "width" => width = Some(value.parse().map_err(|_| bad("width"))?),
                    "height" => height = Some(value.parse().map_err(|_| bad("height"))?),
                    "origin" => {
                        let (x, y) = value.split_once(',').ok_or_else(|| bad("origin"))?;
                        let x = x.trim().parse().map_err(|_| bad("origin"))?;
                        let y = y.trim().parse().map_err(|_| bad("origin"))?;
                        file_origin = Some((Cell::new(x, y), lineno));
                    }
                    _ => {}
                }
            }
            continue;
        }
        if !seen_header {
            if line.replace(' ', "") != MAP_HEADER {
                return Err(WorldError::Parse {
                    line: lineno,
                    message: format!("expected header `{MAP_HEADER}`"),
                });
            }
            seen_header = true;
            continue;
        }
        rows.push((parse_row(line, lineno)?, lineno));
    }
    if !seen_header {
        return Err(WorldError::Parse {
            line: 0,
            message: "missing header".into(),
        });
    }

    let max_x = rows.iter().map(|(r, _)| r.cell.x).max();
    let max_y = rows.iter().map(|(r, _)| r.cell.y).max();
    let width = width.or(max_x.map(|x| x + 1)).unwrap_or(1);
    let height = height.or(max_y.map(|y| y + 1)).unwrap_or(1);
    if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
        return Err(WorldError::Invalid(format!(
            "dimensions {width}x{height} outside 1..={MAX_SIDE}"
        )));
    }

    let n = width as usize * height as usize;
    let mut seen = vec![false; n];
    let mut total: u64 = 0;
    for (r, lineno) in &rows {
        if r.cell.x >= width || r.cell.y >= height {
            return Err(WorldError::Parse {
                line: *lineno,
                message: format!("cell {} outside {width}x{height} grid", r.cell),
            });
        }
        let i = r.cell.y as usize * width as usize + r.cell.x as usize;
        if std::mem::replace(&mut seen[i], true) {
            return Err(WorldError::Parse {
                line: *lineno,
                message: format!("duplicate cell {}", r.cell),
            });
        }
        total += u64::from(r.population);
    }
    if total == 0 {
        return Err(WorldError::Invalid("map has zero total population".into()));
    }

    let (origin, origin_line) = match (origin, file_origin) {
        (Some(o), _) => (o, None),
        (None, Some((o, l))) => (o, Some(l)),
        (None, None) => return Err(WorldError::MissingOrigin),
    };
    let origin_ok = origin.x < width
        && origin.y < height
        && seen[origin.y as usize * width as usize + origin.x as usize];
    if !origin_ok {
        let message = format!("origin {origin} is not a listed passable cell");
        return Err(match origin_line {
            Some(line) => WorldError::Parse { line, message },
            None => WorldError::Invalid(message),
        });
    }

    GridWorld::from_records(width, height, rows.into_iter().map(|(r, _)| r), origin)
}

fn parse_row(line: &str, lineno: usize) -> Result<CellRecord, WorldError> {
    let err = |message: String| WorldError::Parse {
        line: lineno,
        message,
    };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(err(format!("expected 4 fields, found {}", fields.len())));
    }
    let int = |name: &str, s: &str| -> Result<i64, WorldError> {
        s.parse::<i64>()
            .map_err(|_| err(format!("{name} `{s}` is not an integer")))
    };
    let x = int("x", fields[0])?;
    let y = int("y", fields[1])?;
    let population = int("population", fields[2])?;
    let quarantine = int("quarantine", fields[3])?;
    if x < 0 || y < 0 || x >= i64::from(MAX_SIDE) || y >= i64::from(MAX_SIDE) {
        return Err(err(format!("coordinate ({x}, {y}) out of range")));
    }
    if population < 0 {
        return Err(err(format!("negative population {population}")));
    }
    if population > i64::from(u32::MAX) {
        return Err(err(format!("population {population} too large")));
    }
    if quarantine != 0 && quarantine != 1 {
        return Err(err(format!("quarantine flag must be 0 or 1, got {quarantine}")));
    }
    Ok(CellRecord {
        cell: Cell::new(x as u32, y as u32),
        population: population as u32,
        quarantine: quarantine == 1,
    })
}

/// Writes `world` in the map CSV format, including size and origin directives.
pub fn write_raster(world: &GridWorld, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "# width={}", world.width)?;
    writeln!(out, "# height={}", world.height)?;
    writeln!(out, "# origin={},{}", world.origin.x, world.origin.y)?;
    writeln!(out, "{MAP_HEADER}")?;
    for r in world.records() {
        writeln!(
            out,
            "{},{},{},{}",
            r.cell.x,
            r.cell.y,
            r.population,
            u8::from(r.quarantine)
        )?;
    }
    Ok(())
}

/// Writes `world` to a file. See [`write_raster`].
pub fn save_raster(world: &GridWorld, path: impl AsRef<Path>) -> Result<(), WorldError> {
    let path = path.as_ref();
    let io_err = |source| WorldError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = io::BufWriter::new(file);
    write_raster(world, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

// ---------------------------------------------------------------------------
// Synthetic worlds
// ---------------------------------------------------------------------------

/// Half-open rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Rect {
    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.x0 && c.x < self.x1 && c.y >= self.y0 && c.y < self.y1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Placement {
    /// Equal share per passable cell.
    Uniform,
    /// Weight `exp(-d / decay_km)` around `center`, `d` the Euclidean distance.
    Hotspot { center: Cell, decay_km: f64 },
}

/// Recipe for a deterministic test world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub width: u32,
    pub height: u32,
    pub placement: Placement,
    pub total_population: u64,
    #[serde(default)]
    pub quarantine: Option<Rect>,
    #[serde(default)]
    pub impassable: Vec<Rect>,
    /// Defaults to the hotspot center, else the grid center, else the first
    /// passable cell.
    #[serde(default)]
    pub origin: Option<Cell>,
}

impl SyntheticSpec {
    pub fn uniform(width: u32, height: u32, total_population: u64) -> Self {
        SyntheticSpec {
            width,
            height,
            placement: Placement::Uniform,
            total_population,
            quarantine: None,
            impassable: Vec::new(),
            origin: None,
        }
    }
}

/// Builds a world from `spec` without any randomness.
///
/// Population is split by the placement weights, floored, and the leftover
/// humans are handed out one each to the lowest-index passable cells.
pub fn synthetic_world(spec: &SyntheticSpec) -> Result<GridWorld, WorldError> {
    let (w, h) = (spec.width, spec.height);
    if w == 0 || h == 0 || w > MAX_SIDE || h > MAX_SIDE {
        return Err(WorldError::Invalid(format!("dimensions {w}x{h} outside 1..={MAX_SIDE}")));
    }
    let in_bounds = |r: &Rect| r.x0 <= r.x1 && r.y0 <= r.y1 && r.x1 <= w && r.y1 <= h;
    for r in spec.impassable.iter().chain(spec.quarantine.iter()) {
        if !in_bounds(r) {
            return Err(WorldError::Invalid(format!("rectangle {r:?} exceeds {w}x{h} grid")));
        }
    }
    let n = w as usize * h as usize;
    let cell_of = |i: usize| Cell::new((i % w as usize) as u32, (i / w as usize) as u32);
    let passable: Vec<bool> = (0..n)
        .map(|i| !spec.impassable.iter().any(|r| r.contains(cell_of(i))))
        .collect();
    let open: Vec<usize> = (0..n).filter(|&i| passable[i]).collect();
    if open.is_empty() {
        return Err(WorldError::Invalid("no passable cells".into()));
    }

    let weights: Vec<f64> = match &spec.placement {
        Placement::Uniform => vec![1.0; open.len()],
        Placement::Hotspot { center, decay_km } => {
            if !(*decay_km > 0.0) {
                return Err(WorldError::Invalid("hotspot decay must be positive".into()));
            }
            open.iter()
                .map(|&i| {
                    let c = cell_of(i);
                    let dx = f64::from(c.x) - f64::from(center.x);
                    let dy = f64::from(c.y) - f64::from(center.y);
                    (-(dx * dx + dy * dy).sqrt() / decay_km).exp()
                })
                .collect()
        }
    };
    let mut population = vec![0u32; n];
    let total_weight: f64 = weights.iter().sum();
    let mut assigned: u64 = 0;
    for (&i, &wgt) in open.iter().zip(&weights) {
        let share = (spec.total_population as f64 * wgt / total_weight).floor() as u64;
        let share = share.min(spec.total_population - assigned);
        population[i] = u32::try_from(share)
            .map_err(|_| WorldError::Invalid("cell population exceeds u32".into()))?;
        assigned += share;
    }
    let mut leftover = spec.total_population - assigned;
    while leftover > 0 {
        for &i in &open {
            if leftover == 0 {
                break;
            }
            population[i] += 1;
            leftover -= 1;
        }
    }

    let quarantine: Vec<bool> = (0..n)
        .map(|i| passable[i] && spec.quarantine.is_some_and(|r| r.contains(cell_of(i))))
        .collect();

    let default_origin = || {
        let preferred = match &spec.placement {
            Placement::Hotspot { center, .. } => *center,
            Placement::Uniform => Cell::new(w / 2, h / 2),
        };
        if preferred.x < w && preferred.y < h && passable[(preferred.y * w + preferred.x) as usize] {
            preferred
        } else {
            cell_of(open[0])
        }
    };
    let origin = spec.origin.unwrap_or_else(default_origin);
    GridWorld::from_parts(w, h, passable, population, quarantine, origin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<GridWorld, WorldError> {
        parse_raster(s.as_bytes(), None)
    }

    #[test]
    fn minimal_file_loads() {
        let w = parse("# origin=0,0\nx,y,population,quarantine\n0,0,5,0\n1,0,3,1\n").unwrap();
        assert_eq!(w.passable_count(), 2);
        assert_eq!(w.total_population(), 8);
        assert_eq!((w.width(), w.height()), (2, 1));
        assert!(w.in_quarantine(Cell::new(1, 0)));
        assert!(!w.in_quarantine(Cell::new(0, 0)));
    }

    #[test]
    fn negative_population_names_line() {
        let err = parse("# origin=0,0\nx,y,population,quarantine\n0,0,5,0\n1,0,-1,0\n").unwrap_err();
        match err {
            WorldError::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn loader_errors() {
        let cases = [
            ("# origin=0,0\nx,y,population,quarantine\n0,0,5\n", Some(3)),
            ("# origin=0,0\nx,y,population,quarantine\n0,0,5,0\n0,0,1,0\n", Some(4)),
            ("# width=2\n# origin=0,0\nx,y,population,quarantine\n0,0,5,0\n2,0,1,0\n", Some(5)),
            ("# origin=0,0\nx,y,population,quarantine\n0,0,a,0\n", Some(3)),
            ("# origin=0,0\nx,y,population,quarantine\n0,0,1,2\n", Some(3)),
            ("# origin=5,5\nx,y,population,quarantine\n0,0,1,0\n", Some(1)),
            ("x,y,pop\n0,0,1,0\n", Some(1)),
        ];
        for (text, line) in cases {
            match parse(text) {
                Err(WorldError::Parse { line: l, .. }) => assert_eq!(Some(l), line, "{text}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
        assert!(matches!(
            parse("x,y,population,quarantine\n0,0,1,0\n"),
            Err(WorldError::MissingOrigin)
        ));
        assert!(matches!(
            parse("# origin=0,0\nx,y,population,quarantine\n0,0,0,0\n"),
            Err(WorldError::Invalid(_))
        ));
    }

    #[test]
    fn explicit_origin_overrides_directive() {
        let text = "# origin=0,0\nx,y,population,quarantine\n0,0,5,0\n1,0,3,1\n";
        let w = parse_raster(text.as_bytes(), Some(Cell::new(1, 0))).unwrap();
        assert_eq!(w.origin(), Cell::new(1, 0));
    }

    #[test]
    fn uniform_split() {
        let w = synthetic_world(&SyntheticSpec::uniform(3, 3, 9)).unwrap();
        assert!(w.records().all(|r| r.population == 1));
        let w = synthetic_world(&SyntheticSpec::uniform(3, 3, 10)).unwrap();
        assert_eq!(w.population(Cell::new(0, 0)), 2);
        assert_eq!(w.total_population(), 10);
        assert!(w.records().skip(1).all(|r| r.population == 1));
    }

    #[test]
    fn hotspot_center_dominates_edges() {
        let spec = SyntheticSpec {
            placement: Placement::Hotspot { center: Cell::new(2, 2), decay_km: 1.5 },
            ..SyntheticSpec::uniform(5, 5, 100)
        };
        let w = synthetic_world(&spec).unwrap();
        assert_eq!(w.total_population(), 100);
        let center = w.population(Cell::new(2, 2));
        for r in w.records() {
            let c = r.cell;
            if c.x == 0 || c.y == 0 || c.x == 4 || c.y == 4 {
                assert!(center > r.population, "center {center} vs edge {c} {}", r.population);
            }
        }
        assert_eq!(w.origin(), Cell::new(2, 2));
    }

    #[test]
    fn synthetic_rejects_all_impassable() {
        let spec = SyntheticSpec {
            impassable: vec![Rect { x0: 0, y0: 0, x1: 3, y1: 3 }],
            ..SyntheticSpec::uniform(3, 3, 9)
        };
        assert!(synthetic_world(&spec).is_err());
        let spec = SyntheticSpec {
            impassable: vec![Rect { x0: 0, y0: 0, x1: 4, y1: 1 }],
            ..SyntheticSpec::uniform(3, 3, 9)
        };
        assert!(synthetic_world(&spec).is_err());
    }

    #[test]
    fn neighborhoods() {
        let w = synthetic_world(&SyntheticSpec::uniform(5, 5, 25)).unwrap();
        let c = Cell::new(2, 2);
        assert_eq!(
            w.neighbors(c),
            vec![
                Cell::new(3, 2),
                Cell::new(3, 3),
                Cell::new(2, 3),
                Cell::new(1, 3),
                Cell::new(1, 2),
                Cell::new(1, 1),
                Cell::new(2, 1),
                Cell::new(3, 1),
            ]
        );
        assert_eq!(w.neighbors(Cell::new(0, 0)).len(), 3);
        assert_eq!(w.neighbors(Cell::new(4, 4)).len(), 3);

        let spec = SyntheticSpec {
            impassable: vec![Rect { x0: 2, y0: 3, x1: 3, y1: 4 }],
            ..SyntheticSpec::uniform(5, 5, 24)
        };
        let w = synthetic_world(&spec).unwrap();
        let n = w.neighbors(c);
        assert_eq!(n.len(), 7);
        assert!(!n.contains(&Cell::new(2, 3)));
    }

    #[test]
    fn quarantine_flags() {
        let spec = SyntheticSpec {
            quarantine: Some(Rect { x0: 0, y0: 0, x1: 2, y1: 2 }),
            impassable: vec![Rect { x0: 1, y0: 1, x1: 2, y1: 2 }],
            ..SyntheticSpec::uniform(4, 4, 15)
        };
        let w = synthetic_world(&spec).unwrap();
        assert!(w.in_quarantine(Cell::new(0, 0)));
        assert!(!w.in_quarantine(Cell::new(3, 3)));
        assert!(!w.in_quarantine(Cell::new(1, 1)));
        assert!(!w.is_passable(Cell::new(1, 1)));
    }

    fn arb_world() -> impl Strategy<Value = GridWorld> {
        (2u32..9, 2u32..9, 0u64..200, proptest::collection::vec((0u32..9, 0u32..9), 0..6))
            .prop_filter_map("needs a passable cell", |(w, h, pop, holes)| {
                let spec = SyntheticSpec {
                    impassable: holes
                        .into_iter()
                        .map(|(x, y)| Rect { x0: x % w, y0: y % h, x1: x % w + 1, y1: y % h + 1 })
                        .collect(),
                    quarantine: Some(Rect { x0: 0, y0: 0, x1: w / 2, y1: h }),
                    ..SyntheticSpec::uniform(w, h, pop)
                };
                synthetic_world(&spec).ok()
            })
    }

    proptest! {
        #[test]
        fn neighbor_symmetry(world in arb_world()) {
            for i in 0..world.cell_count() {
                let c = world.cell_of(i);
                if !world.is_passable(c) {
                    continue;
                }
                for n in world.neighbors(c) {
                    prop_assert!(world.neighbors(n).contains(&c));
                }
            }
        }

        #[test]
        fn csv_round_trip(world in arb_world()) {
            prop_assume!(world.total_population() > 0);
            let mut buf = Vec::new();
            write_raster(&world, &mut buf).unwrap();
            let back = parse_raster(buf.as_slice(), None).unwrap();
            prop_assert_eq!(back, world);
        }

        #[test]
        fn synthetic_population_is_exact(world in arb_world()) {
            let sum: u64 = world.records().map(|r| u64::from(r.population)).sum();
            prop_assert_eq!(sum, world.total_population());
        }
    }
}
