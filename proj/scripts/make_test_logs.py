#!/usr/bin/env python3
"""Writes the synthetic CARMEN logs used by the test suite into tests/data."""
import math
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"
BEAMS = 37
FOV = math.pi


def ray_to_box(x, y, a, x0, y0, x1, y1):
    dx, dy = math.cos(a), math.sin(a)
    best = math.inf
    if dx > 1e-12:
        best = min(best, (x1 - x) / dx)
    if dx < -1e-12:
        best = min(best, (x0 - x) / dx)
    if dy > 1e-12:
        best = min(best, (y1 - y) / dy)
    if dy < -1e-12:
        best = min(best, (y0 - y) / dy)
    return best


def record(ranges, x, y, th, ts):
    r = " ".join(f"{v:.3f}" for v in ranges)
    return f"FLASER {len(ranges)} {r} {x:.4f} {y:.4f} {th:.6f} {x:.4f} {y:.4f} {th:.6f} {ts:.3f} synth {ts:.3f}"


def bearings(th):
    return [th - FOV / 2 + k * FOV / (BEAMS - 1) for k in range(BEAMS)]


def mini():
    # Robot drives along a 6 m wide, 14 m long room and turns back.
    lines = ["# synthetic corridor log", "PARAM robot_front_laser_max 8.0"]
    ts = 0.0
    poses = [(1.0 + 0.3 * k, 0.0, 0.0) for k in range(36)]
    poses += [(11.5 - 0.3 * k, 0.4, math.pi) for k in range(24)]
    for k, (x, y, th) in enumerate(poses):
        ranges = [min(ray_to_box(x, y, a, 0.0, -3.0, 14.0, 3.0), 8.5) for a in bearings(th)]
        lines.append(f"ODOM {x:.4f} {y:.4f} {th:.6f} 0 0 0 {ts:.3f} synth {ts:.3f}")
        lines.append(record(ranges, x, y, th, ts))
        if k == 10:
            lines.append("FLASER 3 1.0 2.0 0 0 0 0 0 0 0.0 synth 0.0")
        ts += 0.1
    return lines


def high_count():
    # Stationary robot facing a wall 3 m away that later disappears, so the
    # wall cells collect many hits followed by many pass-through frees.
    lines = ["# stationary high-count log"]
    ts = 0.0
    for k in range(60):
        far = k >= 30
        ranges = [9.0 if far else 3.0 / max(math.cos(a), 0.35) for a in bearings(0.0)]
        ranges = [min(r, 9.0) for r in ranges]
        lines.append(record(ranges, 0.0, 0.0, 0.0, ts))
        ts += 0.1
    return lines


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "mini.clf").write_text("\n".join(mini()) + "\n")
    (OUT / "highcount.clf").write_text("\n".join(high_count()) + "\n")
