"""Automatic subset-size selection on a score curve.

The curve is smoothed with a least-squares polynomial, both axes are
min-max normalized to [0, 1], and the knee is the swept k maximizing the
difference between the normalized fitted curve and the normalized x axis.
A knee only counts when that maximum clears SENSITIVITY times the mean
x spacing; otherwise the result is "no knee" and callers keep everything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .cluster import MssCurve
from .errors import TooFewPoints, Underdetermined

SENSITIVITY = 1.0
FLAT_EPS = 1e-9  # curves with a smaller raw score range are treated as flat


@dataclass(eq=False)
class KneeResult:
    """`k_prime` is None when no knee clears the threshold."""

    k_prime: int | None
    degree: int
    fitted_coeffs: np.ndarray     # ascending powers
    difference_curve: np.ndarray  # normalized fit minus normalized x, per swept k
    curvature_at_knee: float | None = None

    def to_dict(self) -> dict:
        return {
            "k_prime": self.k_prime,
            "degree": self.degree,
            "fitted_coeffs": [float(c) for c in self.fitted_coeffs],
            "difference_curve": [float(d) for d in self.difference_curve],
            "curvature_at_knee": self.curvature_at_knee,
        }


def polyfit(xs, ys, degree: int) -> np.ndarray:
    """Least-squares polynomial coefficients in ascending order."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise Underdetermined("xs and ys must be equal-length vectors")
    if degree < 1:
        raise Underdetermined("degree must be >= 1")
    if len(xs) < degree + 1:
        raise Underdetermined(f"degree {degree} needs {degree + 1} points, got {len(xs)}")
    if len(np.unique(xs)) != len(xs):
        raise Underdetermined("xs must be distinct")
    return npoly.polyfit(xs, ys, degree)


def _curvature(coeffs: np.ndarray, x: float) -> float:
    """Signed curvature of the fitted polynomial at x."""
    d1 = npoly.polyval(x, npoly.polyder(coeffs))
    d2 = npoly.polyval(x, npoly.polyder(coeffs, 2))
    return float(d2 / (1.0 + d1 * d1) ** 1.5)


def find_knee(curve: MssCurve, degree: int = 2) -> KneeResult:
    """Knee of an MSS curve via the normalized-difference rule.

    The fitted curve is expected to rise toward saturation; if it comes out
    decreasing overall it is flipped before normalization. Flat curves
    (raw score range below FLAT_EPS) never produce a knee: min-max scaling
    would only amplify noise.
    """
    ks = curve.ks().astype(np.float64)
    ys = curve.scores()
    if len(ks) < degree + 2:
        raise TooFewPoints(f"need at least {degree + 2} points for degree {degree}, got {len(ks)}")
    coeffs = polyfit(ks, ys, degree)
    if float(ys.max() - ys.min()) <= FLAT_EPS:
        return KneeResult(None, degree, coeffs, np.zeros(len(ks)))
    fit = npoly.polyval(ks, coeffs)
    if fit[-1] < fit[0]:
        fit = -fit
    y_range = fit.max() - fit.min()
    if y_range <= 0.0:
        return KneeResult(None, degree, coeffs, np.zeros(len(ks)))
    x_norm = (ks - ks[0]) / (ks[-1] - ks[0])
    y_norm = (fit - fit.min()) / y_range
    diff = y_norm - x_norm
    best = int(np.argmax(diff))
    threshold = SENSITIVITY / (len(ks) - 1)  # mean spacing of normalized x
    if diff[best] <= threshold:
        return KneeResult(None, degree, coeffs, diff)
    k_prime = int(round(ks[best]))
    return KneeResult(k_prime, degree, coeffs, diff, _curvature(coeffs, ks[best]))


def select_k(curve: MssCurve, degree: int = 2) -> int:
    """Knee if one exists, otherwise the largest swept k (keep everything).

    Curves too short to fit fall back to the largest swept k as well; this
    function never raises on a valid curve.
    """
    try:
        result = find_knee(curve, degree)
    except (TooFewPoints, Underdetermined):
        return int(curve.ks()[-1])
    if result.k_prime is None:
        return int(curve.ks()[-1])
    return result.k_prime
