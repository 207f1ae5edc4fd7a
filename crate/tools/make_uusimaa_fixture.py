#!/usr/bin/env python3
"""Generate the bundled Uusimaa-format map fixture.

The real 1 km population grid is not redistributable, so this script builds a
stand-in with the same format and the same headline numbers:

* the region outline, coastline and the largest lakes are approximated by
  hand-digitised polygons (lon/lat, WGS84);
* the population of every municipality is spread around its main centres
  with exponential kernels and a wider rural component, clipped to land;
* the total is scaled to exactly 1 704 456 residents by largest-remainder
  rounding;
* cells inside the Helsinki / Espoo / Vantaa / Kauniainen outline carry the
  quarantine flag;
* the origin is the cell containing central Helsinki.

The output is deterministic. Usage:

    python3 tools/make_uusimaa_fixture.py crates/core/fixtures/uusimaa_synthetic.csv
"""

import math
import sys

TOTAL = 1_704_456

LON0, LAT0 = 22.80, 59.75
KM_PER_LON = 55.6  # at ~60 N
KM_PER_LAT = 111.2
WIDTH, HEIGHT = 212, 130

REGION = [
    # south coast, west to east
    (22.90, 59.80), (23.05, 59.83), (23.20, 59.87), (23.40, 59.93),
    (23.60, 59.95), (23.80, 59.97), (24.00, 60.00), (24.20, 60.03),
    (24.40, 60.08), (24.60, 60.12), (24.80, 60.14), (24.95, 60.15),
    (25.10, 60.18), (25.20, 60.20), (25.40, 60.24), (25.60, 60.30),
    (25.80, 60.33), (26.00, 60.38), (26.20, 60.40), (26.45, 60.42),
    # eastern border, northwards
    (26.50, 60.50), (26.45, 60.62), (26.25, 60.70),
    # northern border, westwards
    (26.00, 60.70), (25.80, 60.75), (25.55, 60.78), (25.35, 60.83),
    (25.10, 60.80), (24.90, 60.76), (24.60, 60.68), (24.35, 60.62),
    (24.10, 60.55), (23.90, 60.45), (23.60, 60.35), (23.40, 60.25),
    (23.20, 60.12), (23.00, 60.00), (22.85, 59.88),
]

HELSINKI_REGION = [
    (24.45, 60.05), (24.50, 60.25), (24.60, 60.33), (24.75, 60.36),
    (25.00, 60.37), (25.18, 60.34), (25.20, 60.28), (25.28, 60.25),
    (25.28, 60.10),
]

# (lon, lat, semi-axis east km, semi-axis north km)
LAKES = [
    (23.95, 60.24, 8.0, 3.5),   # Lohjanjarvi
    (24.20, 60.36, 4.5, 2.0),   # Hiidenvesi
    (25.05, 60.435, 1.0, 3.0),  # Tuusulanjarvi
]

# (name, lon, lat, population, core scale km)
CENTRES = [
    ("Helsinki core", 24.94, 60.17, 260_000, 1.8),
    ("Helsinki inner", 24.95, 60.20, 250_000, 4.0),
    ("Helsinki east", 25.08, 60.22, 80_000, 3.0),
    ("Helsinki north", 24.97, 60.26, 68_457, 3.0),
    ("Espoo Tapiola", 24.80, 60.18, 60_000, 2.0),
    ("Espoo Leppavaara", 24.81, 60.22, 70_000, 2.5),
    ("Espoonlahti", 24.65, 60.15, 55_000, 2.5),
    ("Espoon keskus", 24.66, 60.21, 60_000, 3.0),
    ("Espoo north", 24.70, 60.28, 60_274, 4.0),
    ("Tikkurila", 25.04, 60.29, 90_000, 3.0),
    ("Myyrmaki", 24.85, 60.26, 85_000, 3.0),
    ("Hakunila", 25.10, 60.28, 67_819, 3.0),
    ("Kauniainen", 24.73, 60.21, 10_180, 1.0),
    ("Porvoo", 25.66, 60.39, 51_149, 3.0),
    ("Kirkkonummi", 24.44, 60.12, 41_372, 4.0),
    ("Tuusula", 25.03, 60.40, 39_356, 4.0),
    ("Jarvenpaa", 25.09, 60.47, 45_386, 2.5),
    ("Kerava", 25.11, 60.40, 37_594, 2.0),
    ("Nurmijarvi", 24.81, 60.46, 44_369, 5.0),
    ("Hyvinkaa", 24.86, 60.63, 46_773, 3.0),
    ("Lohja", 24.07, 60.25, 45_886, 5.0),
    ("Vihti", 24.32, 60.42, 29_434, 5.0),
    ("Sipoo", 25.27, 60.38, 22_382, 5.0),
    ("Mantsala", 25.32, 60.63, 21_149, 5.0),
    ("Tammisaari", 23.43, 59.98, 15_484, 3.0),
    ("Karjaa", 23.66, 60.07, 12_000, 3.0),
    ("Hanko", 22.95, 59.83, 8_044, 1.5),
    ("Loviisa", 26.23, 60.46, 14_527, 3.0),
    ("Siuntio", 24.23, 60.14, 6_207, 3.0),
    ("Inkoo", 24.00, 60.05, 5_398, 3.0),
    ("Karkkila", 24.21, 60.54, 8_638, 2.0),
    ("Pornainen", 25.37, 60.48, 5_055, 3.0),
    ("Askola", 25.60, 60.53, 4_887, 3.0),
    ("Pukkila", 25.58, 60.64, 1_920, 2.0),
    ("Myrskyla", 25.85, 60.67, 1_849, 2.0),
    ("Lapinjarvi", 26.20, 60.62, 2_600, 2.0),
]

RURAL_SHARE = 0.15
RURAL_SCALE_KM = 10.0

ORIGIN = (24.94, 60.17)


def to_km(lon, lat):
    return (lon - LON0) * KM_PER_LON, (lat - LAT0) * KM_PER_LAT


def cell_of(lon, lat):
    x, y = to_km(lon, lat)
    return int(math.floor(x)), int(math.floor(y))


def inside(poly_km, px, py):
    hit = False
    n = len(poly_km)
    for i in range(n):
        x1, y1 = poly_km[i]
        x2, y2 = poly_km[(i + 1) % n]
        if (y1 > py) != (y2 > py):
            xc = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < xc:
                hit = not hit
    return hit


def main(out_path):
    region = [to_km(*p) for p in REGION]
    helsinki = [to_km(*p) for p in HELSINKI_REGION]
    lakes = [(*to_km(lon, lat), a, b) for lon, lat, a, b in LAKES]

    land = []
    for y in range(HEIGHT):
        for x in range(WIDTH):
            cx, cy = x + 0.5, y + 0.5
            if not inside(region, cx, cy):
                continue
            if any(((cx - lx) / a) ** 2 + ((cy - ly) / b) ** 2 <= 1.0 for lx, ly, a, b in lakes):
                continue
            land.append((x, y))
    land_set = set(land)

    # keep only the component connected to the origin (8-neighbourhood)
    origin = cell_of(*ORIGIN)
    assert origin in land_set, origin
    seen = {origin}
    stack = [origin]
    while stack:
        x, y = stack.pop()
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                n = (x + dx, y + dy)
                if n in land_set and n not in seen:
                    seen.add(n)
                    stack.append(n)
    land = [c for c in land if c in seen]

    weight = {c: 0.0 for c in land}
    for _name, lon, lat, pop, scale in CENTRES:
        tx, ty = to_km(lon, lat)
        for share, s in ((1.0 - RURAL_SHARE, scale), (RURAL_SHARE, RURAL_SCALE_KM)):
            k = {}
            for (x, y) in land:
                d = math.hypot(x + 0.5 - tx, y + 0.5 - ty)
                k[(x, y)] = math.exp(-d / s)
            z = sum(k.values())
            for c, v in k.items():
                weight[c] += pop * share * v / z

    total_w = sum(weight.values())
    exact = {c: TOTAL * w / total_w for c, w in weight.items()}
    pops = {c: int(math.floor(v)) for c, v in exact.items()}
    left = TOTAL - sum(pops.values())
    order = sorted(land, key=lambda c: (-(exact[c] - pops[c]), c[1], c[0]))
    for c in order[:left]:
        pops[c] += 1
    assert sum(pops.values()) == TOTAL

    quarantine = {c: inside(helsinki, c[0] + 0.5, c[1] + 0.5) for c in land}

    with open(out_path, "w", newline="\n") as f:
        f.write("# Synthetic Uusimaa-format population raster (1 km cells).\n")
        f.write("# Generated by tools/make_uusimaa_fixture.py; approximate geography,\n")
        f.write("# municipal populations spread by kernels, total scaled to 1704456.\n")
        f.write(f"# width={WIDTH}\n# height={HEIGHT}\n# origin={origin[0]},{origin[1]}\n")
        f.write("x,y,population,quarantine\n")
        for (x, y) in sorted(land, key=lambda c: (c[1], c[0])):
            f.write(f"{x},{y},{pops[(x, y)]},{int(quarantine[(x, y)])}\n")

    q_cells = sum(quarantine.values())
    q_pop = sum(p for c, p in pops.items() if quarantine[c])
    print(f"cells={len(land)} quarantine_cells={q_cells} quarantine_pop={q_pop} "
          f"max_cell={max(pops.values())} empty={sum(1 for p in pops.values() if p == 0)} origin={origin}",
          file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "uusimaa_synthetic.csv")
