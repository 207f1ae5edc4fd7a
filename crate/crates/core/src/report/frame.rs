//! PPM (P6) map frames and the per-cell snapshots they are drawn from.

use std::io::{BufRead, Write};

use crate::engine::SimState;
use crate::worldmap::{Cell, GridWorld};

use super::ReportError;

pub const IMPASSABLE: [u8; 3] = [0, 0, 0];
pub const EMPTY: [u8; 3] = [220, 220, 220];

/// Channel intensity for a head count: `min(255, 64 + floor(48 * log2(1 + n)))`.
pub fn intensity(n: u32) -> u8 {
    let v = 64.0 + (48.0 * (f64::from(n) + 1.0).log2()).floor();
    v.min(255.0) as u8
}

/// Pixel for a passable cell with `healthy` humans and `zombies` zombies.
pub fn pixel(healthy: u32, zombies: u32) -> [u8; 3] {
    if zombies > 0 {
        [intensity(zombies), 0, 0]
    } else if healthy > 0 {
        [0, intensity(healthy), 0]
    } else {
        EMPTY
    }
}

/// Healthy and zombie head counts per cell at one step, indexed like the world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub step: u32,
    pub width: u32,
    pub height: u32,
    pub healthy: Vec<u32>,
    pub zombies: Vec<u32>,
}

impl Snapshot {
    pub fn empty(step: u32, width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        Snapshot { step, width, height, healthy: vec![0; n], zombies: vec![0; n] }
    }

    pub fn capture(state: &SimState, world: &GridWorld) -> Self {
        let o = state.occupancy(world);
        Snapshot { step: state.step(), width: o.width, height: o.height, healthy: o.healthy, zombies: o.zombies }
    }

    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }
}

/// Encodes one frame: one pixel per cell, top row = largest `y`.
pub fn render_frame(snapshot: &Snapshot, world: &GridWorld) -> Result<Vec<u8>, ReportError> {
    let (w, h) = (world.width(), world.height());
    let n = w as usize * h as usize;
    if snapshot.width != w || snapshot.height != h || snapshot.healthy.len() != n || snapshot.zombies.len() != n {
        return Err(ReportError::Dimensions {
            expected: (w, h),
            found: (snapshot.width, snapshot.height),
        });
    }
    let header = format!("P6\n{w} {h}\n255\n");
    let mut out = Vec::with_capacity(header.len() + 3 * n);
    out.extend_from_slice(header.as_bytes());
    for y in (0..h).rev() {
        for x in 0..w {
            let c = Cell::new(x, y);
            let i = world.index(c);
            let px = if world.is_passable(c) { pixel(snapshot.healthy[i], snapshot.zombies[i]) } else { IMPASSABLE };
            out.extend_from_slice(&px);
        }
    }
    Ok(out)
}

/// Name of the frame file for `step`.
pub fn frame_file_name(step: u32) -> String {
    format!("frame_{step:06}.ppm")
}

pub const SNAPSHOT_HEADER: &str = "step,x,y,healthy,zombies";

/// Appends the occupied cells of `snapshot` as CSV rows.
pub fn write_snapshot_rows(snapshot: &Snapshot, mut out: impl Write) -> std::io::Result<()> {
    for y in 0..snapshot.height {
        for x in 0..snapshot.width {
            let i = snapshot.index(x, y);
            let (hc, zc) = (snapshot.healthy[i], snapshot.zombies[i]);
            if hc > 0 || zc > 0 {
                writeln!(out, "{},{x},{y},{hc},{zc}", snapshot.step)?;
            }
        }
    }
    Ok(())
}

/// Reads a snapshot CSV back into per-step snapshots, ordered by step.
pub fn read_snapshots(reader: impl BufRead, width: u32, height: u32) -> Result<Vec<Snapshot>, ReportError> {
    let mut frames: std::collections::BTreeMap<u32, Snapshot> = Default::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == SNAPSHOT_HEADER {
            continue;
        }
        let bad = |message: String| ReportError::Parse { line: lineno, message };
        let fields: Vec<u32> = line
            .split(',')
            .map(|f| f.trim().parse::<u32>().map_err(|e| bad(format!("`{f}`: {e}"))))
            .collect::<Result<_, _>>()?;
        let [step, x, y, hc, zc] = fields[..] else {
            return Err(bad(format!("expected 5 fields, found {}", fields.len())));
        };
        if x >= width || y >= height {
            return Err(bad(format!("cell ({x}, {y}) outside {width}x{height} grid")));
        }
        let s = frames.entry(step).or_insert_with(|| Snapshot::empty(step, width, height));
        let idx = s.index(x, y);
        s.healthy[idx] = hc;
        s.zombies[idx] = zc;
    }
    Ok(frames.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldmap::{synthetic_world, Rect, SyntheticSpec};

    /// floor(48 * log2(1 + n)) by exact integer comparison: the largest `k`
    /// with `2^k <= (1 + n)^48`.
    fn floor_48_log2(n: u32) -> u64 {
        // little-endian base 2^32 digits of (1 + n)^48
        let mut digits = vec![1u64];
        for _ in 0..48 {
            let mut carry = 0u64;
            for d in digits.iter_mut() {
                let v = *d * u64::from(n + 1) + carry;
                *d = v & 0xFFFF_FFFF;
                carry = v >> 32;
            }
            if carry > 0 {
                digits.push(carry);
            }
        }
        let top = *digits.last().unwrap();
        (digits.len() as u64 - 1) * 32 + (63 - u64::from(top.leading_zeros()))
    }

    #[test]
    fn intensity_matches_exact_oracle() {
        for n in 0..100_000u32 {
            let expected = (64 + if n < 64 { floor_48_log2(n) } else { 255 }).min(255);
            assert_eq!(u64::from(intensity(n)), expected, "n = {n}");
        }
        assert_eq!(intensity(0), 64);
        assert_eq!(intensity(1), 112);
        assert_eq!(intensity(u32::MAX), 255);
    }

    #[test]
    fn pixel_colours() {
        assert_eq!(pixel(0, 1), [112, 0, 0]);
        assert_eq!(pixel(5000, 1), [112, 0, 0]);
        assert_eq!(pixel(0, 0), [220, 220, 220]);
        assert_eq!(pixel(3, 0), [0, 160, 0]);
    }

    #[test]
    fn frame_layout() {
        let spec = SyntheticSpec {
            impassable: vec![Rect { x0: 0, y0: 0, x1: 1, y1: 1 }],
            ..SyntheticSpec::uniform(3, 2, 0)
        };
        let w = synthetic_world(&spec).unwrap();
        let mut s = Snapshot::empty(0, 3, 2);
        s.zombies[w.index(Cell::new(2, 1))] = 1;
        s.healthy[w.index(Cell::new(1, 0))] = 3;
        let img = render_frame(&s, &w).unwrap();
        let header = b"P6\n3 2\n255\n";
        assert_eq!(img.len(), header.len() + 3 * 3 * 2);
        assert_eq!(&img[..header.len()], header);
        let px: Vec<&[u8]> = img[header.len()..].chunks(3).collect();
        // top row is y = 1
        assert_eq!(px[0], [220, 220, 220]);
        assert_eq!(px[2], [112, 0, 0]);
        assert_eq!(px[3], [0, 0, 0]);
        assert_eq!(px[4], [0, 160, 0]);
    }

    #[test]
    fn dimension_mismatch() {
        let w = synthetic_world(&SyntheticSpec::uniform(3, 2, 0)).unwrap();
        assert!(matches!(render_frame(&Snapshot::empty(0, 2, 3), &w), Err(ReportError::Dimensions { .. })));
    }

    #[test]
    fn snapshot_csv_round_trip() {
        let mut a = Snapshot::empty(4, 5, 3);
        a.healthy[7] = 12;
        a.zombies[7] = 2;
        a.zombies[14] = 1;
        let mut b = Snapshot::empty(9, 5, 3);
        b.healthy[0] = 1;
        let mut buf = format!("{SNAPSHOT_HEADER}\n").into_bytes();
        write_snapshot_rows(&a, &mut buf).unwrap();
        write_snapshot_rows(&b, &mut buf).unwrap();
        assert_eq!(read_snapshots(&buf[..], 5, 3).unwrap(), vec![a, b]);
        assert!(read_snapshots(&b"1,9,0,1,0\n"[..], 5, 3).is_err());
        assert!(read_snapshots(&b"1,0,0,1\n"[..], 5, 3).is_err());
    }
}
