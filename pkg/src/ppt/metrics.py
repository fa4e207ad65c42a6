"""Distances between individual configurations.

Values on the extended half-line are plain floats with ``math.inf`` as the
explicit infinite value (never a sentinel): comparisons stay total and the
Wasserstein-type distance between configurations of different sizes is +inf.

Marked configurations (time plus spatial marks) reuse ``Configuration`` with
dimension d+1 where coordinate 0 is the time; the marked ground cost
kappa(x, y)^2 + |t - s|^2 is then exactly the squared Euclidean distance on
the extended space.
"""

from __future__ import annotations

import math

import numpy as np

from .core import Configuration, multiset_equal, sym_diff_count
from .errors import ValidationError

__all__ = [
    "rho0",
    "rho1",
    "rho2",
    "rho1_normalized",
    "rho2_normalized",
    "rho2_marked",
]


def _shared_window(omega: Configuration, eta: Configuration) -> None:
    if omega.window != eta.window:
        raise ValidationError("configurations must share one window")


def rho0(omega: Configuration, eta: Configuration) -> int:
    """Trivial distance: 0 iff the two multisets of atoms coincide, else 1."""
    _shared_window(omega, eta)
    return 0 if multiset_equal(omega, eta) else 1


def rho1(omega: Configuration, eta: Configuration) -> int:
    """Total-variation distance: number of unmatched atoms, both directions."""
    _shared_window(omega, eta)
    return sym_diff_count(omega, eta) + sym_diff_count(eta, omega)


def rho2(omega: Configuration, eta: Configuration) -> float:
    """Euclidean transport distance between equal-size configurations.

    +inf when the atom counts differ (no coupling configuration exists);
    otherwise the square root of the minimal sum of squared Euclidean gaps
    over bijections of atoms, solved exactly as an assignment problem.
    """
    from .transport import assignment_solve

    _shared_window(omega, eta)
    if omega.n != eta.n:
        return math.inf
    if omega.n == 0:
        return 0.0
    gaps = omega.atoms[:, None, :] - eta.atoms[None, :, :]
    sq = np.einsum("ijk,ijk->ij", gaps, gaps)
    _, value = assignment_solve(sq)
    return math.sqrt(max(value, 0.0))


def rho1_normalized(omega: Configuration, eta: Configuration) -> float:
    """Total variation between the two count-normalised atomic measures.

    Atoms present in both configurations contribute the exact per-atom mass
    difference |k/omega(L) - l/eta(L)|.  Not lower semicontinuous under vague
    convergence, hence unusable for duality arguments; provided for
    comparisons with the customary normalised notion.
    """
    _shared_window(omega, eta)
    if omega.n == 0 or eta.n == 0:
        raise ValidationError("normalised total variation needs nonempty configurations")
    cw, ce = omega.multiset(), eta.multiset()
    nw, ne = omega.n, eta.n
    tv = 0.0
    for atom in cw.keys() | ce.keys():
        tv += abs(cw.get(atom, 0) / nw - ce.get(atom, 0) / ne)
    return tv


def rho2_normalized(omega: Configuration, eta: Configuration) -> float:
    """Count-normalised Euclidean transport distance.

    rho2 / omega(L) when the counts are equal and nonzero, otherwise the
    count gap |omega(L) - eta(L)| (dimensionless branch).
    """
    _shared_window(omega, eta)
    if omega.n == eta.n and omega.n != 0:
        return rho2(omega, eta) / omega.n
    return float(abs(omega.n - eta.n))


def rho2_marked(omega: Configuration, eta: Configuration) -> float:
    """Transport distance for marked configurations on [0, T] x marks.

    Coordinate 0 is the time; the ground cost adds the squared time gap to
    the squared spatial distance, which is the squared Euclidean cost on the
    extended space, so this is rho2 in dimension d+1.
    """
    if omega.dim < 2:
        raise ValidationError("marked configurations need dimension >= 2 (time + marks)")
    return rho2(omega, eta)
