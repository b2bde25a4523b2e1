"""Generate the shipped test tracks under src/overtake/tracks/."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from overtake.track import save_track

OUT = Path(__file__).resolve().parents[1] / "src" / "overtake" / "tracks"

# control polygons (m); the centerline is a periodic spline through them
CONTROL = {
    "oval_chicane": [
        (0, 0), (6, 0), (12, 0), (16, 1.0), (18.5, 4), (17.5, 7.5), (14, 9), (11, 8.0),
        (8.5, 9.5), (6, 9.0), (2, 9.5), (-1.5, 7.5), (-2.5, 4), (-1.5, 1.0),
    ],
    "kidney": [
        (0, 0), (7, -0.5), (14, 0), (19, 2), (21, 6.5), (19, 11), (15, 12.5), (12, 10.5),
        (9.5, 8.0), (6.5, 9.0), (4, 12), (0, 12.5), (-3.5, 10), (-4.5, 5), (-3, 1.5),
    ],
}
WIDTH = {"oval_chicane": (1.1, 1.1), "kidney": (1.0, 1.0)}


def centerline(name: str, spacing: float = 0.25) -> np.ndarray:
    pts = np.asarray(CONTROL[name], dtype=float)
    closed = np.vstack([pts, pts[:1]])
    u = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(closed, axis=0), axis=1))])
    spline = CubicSpline(u, closed, bc_type="periodic")
    n = int(u[-1] / spacing)
    out = spline(np.linspace(0.0, u[-1], n + 1))
    out[-1] = out[0]
    return out


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name in CONTROL:
        c = centerline(name)
        w = np.tile(WIDTH[name], (len(c), 1))
        save_track(OUT / f"{name}.txt", c, w, comment=f"{name}: generated by scripts/make_tracks.py")
        print(name, len(c))


if __name__ == "__main__":
    main()
