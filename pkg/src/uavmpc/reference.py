"""Arc-length sampling of the global path into the MPC reference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ReferenceTrajectory:
    points: np.ndarray  # (P, 3)
    v_ref: float
    spacing: float
    arclength: np.ndarray | None = None  # polyline coordinate of each sample

    def __len__(self):
        return len(self.points)

    @classmethod
    def hold(cls, position, horizon: int, v_ref: float = 0.0, tau: float = 0.1):
        """Every sample at ``position``: a hover reference."""
        pts = np.tile(np.asarray(position, dtype=float), (horizon, 1))
        return cls(pts, v_ref, v_ref * tau, np.zeros(horizon))


def project(polyline: np.ndarray, point) -> float:
    """Arc-length coordinate of the polyline point closest to ``point``."""
    q = np.asarray(point, dtype=float)
    seg = np.diff(polyline, axis=0)
    seglen = np.linalg.norm(seg, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    if len(seg) == 0:
        return 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.einsum("ij,ij->i", q - polyline[:-1], seg) / seglen ** 2
    t = np.clip(np.nan_to_num(t, nan=0.0), 0.0, 1.0)
    foot = polyline[:-1] + t[:, None] * seg
    d = np.linalg.norm(foot - q, axis=1)
    k = int(np.argmin(d))
    return float(cum[k] + t[k] * seglen[k])


def point_at(polyline: np.ndarray, cum: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Positions at arc-length coordinates ``s``; past the end gives the last vertex."""
    s = np.asarray(s, dtype=float)
    out = np.empty((len(s), 3))
    end = s >= cum[-1]
    out[end] = polyline[-1]
    if (~end).any():
        si = s[~end]
        k = np.searchsorted(cum, si, side="right") - 1
        k = np.clip(k, 0, len(polyline) - 2)
        seglen = cum[k + 1] - cum[k]
        frac = np.where(seglen > 0, (si - cum[k]) / np.where(seglen > 0, seglen, 1.0), 0.0)
        out[~end] = polyline[k] + frac[:, None] * (polyline[k + 1] - polyline[k])
    return out


def sample_reference(polyline, current_pos, v_ref: float, tau: float, P: int) -> ReferenceTrajectory:
    """P samples spaced ``v_ref * tau`` along the polyline, starting one spacing
    past the projection of ``current_pos``. Samples beyond the end repeat the
    final vertex."""
    poly = np.asarray(polyline, dtype=float).reshape(-1, 3)
    if len(poly) == 0:
        raise ValueError("polyline must be non-empty")
    if not v_ref > 0 or P < 1:
        raise ValueError("need v_ref > 0 and P >= 1")
    spacing = v_ref * tau
    if len(poly) == 1:
        return ReferenceTrajectory(np.tile(poly[0], (P, 1)), v_ref, spacing, np.zeros(P))
    cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(poly, axis=0), axis=1))])
    s0 = project(poly, current_pos)
    s = np.minimum(s0 + spacing * np.arange(1, P + 1), cum[-1])
    return ReferenceTrajectory(point_at(poly, cum, s), v_ref, spacing, s)
