"""Action, Nehari functional and Nehari rescaling on discrete fields.

For a width ``L`` the rescaled quadratic part is

    Q_L(u) = qx + qy / L**2 + omega * mass2,

with ``qx = u.Kx.u`` and ``qy = u.Ky.u``.  Without ``L`` (a physical book) the
full stiffness is used.  The ``p + 1`` norm uses mass lumping:
``np1 = sum(m_i |u_i|**(p + 1))``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .discretization import DiscreteOperators


class NehariError(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    omega: float
    p: float
    L: Optional[float] = None

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if self.L is not None and not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def c_p(self) -> float:
        return c_p(self.p)


def c_p(p: float) -> float:
    return (p - 1) / (2 * (p + 1))


@dataclass(frozen=True)
class FunctionalReport:
    qx: float
    qy: float
    mass2: float
    np1: float
    action: float
    nehari: float
    level: float

    def to_dict(self) -> dict:
        return asdict(self)


def _check(u, ops):
    u = np.asarray(u, dtype=float)
    if u.shape != (ops.n,):
        raise ValueError(f"field has shape {u.shape}, operators have {ops.n} dofs")
    return u


def energies(u: np.ndarray, ops: DiscreteOperators) -> tuple[float, float, float]:
    """``(qx, qy, mass2)``; ``qy`` is 0 without a stiffness split."""
    if ops.has_split:
        qx, qy = float(u @ (ops.Kx @ u)), float(u @ (ops.Ky @ u))
    else:
        qx, qy = float(u @ (ops.K @ u)), 0.0
    return qx, qy, float(u @ (ops.M @ u))


def lumped_power(u: np.ndarray, ops: DiscreteOperators, p: float) -> float:
    return float(ops.m @ np.abs(u) ** (p + 1))


def quadratic_part(u: np.ndarray, ops: DiscreteOperators, params: Params) -> float:
    qx, qy, mass2 = energies(u, ops)
    return _combine(qx, qy, mass2, params)


def _combine(qx, qy, mass2, params):
    if params.L is None:
        return qx + qy + params.omega * mass2
    return qx + qy / params.L**2 + params.omega * mass2


def evaluate(u: np.ndarray, ops: DiscreteOperators, params: Params) -> FunctionalReport:
    u = _check(u, ops)
    if params.L is not None and not ops.has_split:
        raise ValueError("a width L needs graph-based operators with an x/y split")
    qx, qy, mass2 = energies(u, ops)
    np1 = lumped_power(u, ops, params.p)
    quad = _combine(qx, qy, mass2, params)
    action = 0.5 * quad - np1 / (params.p + 1)
    nehari = quad - np1
    return FunctionalReport(qx, qy, mass2, np1, action, nehari, params.c_p * np1)


def nehari_factor(u: np.ndarray, ops: DiscreteOperators, params: Params) -> float:
    """Scaling ``pi`` with ``I(pi * u) = 0``; equals ``(Q_L(u) / np1)**(1/(p-1))``."""
    u = _check(u, ops)
    np1 = lumped_power(u, ops, params.p)
    if np1 == 0.0:
        raise NehariError("cannot project the zero field")
    quad = quadratic_part(u, ops, params)
    if quad <= 0:
        raise NehariError(
            f"quadratic part {quad:.3e} is not positive: omega is at or below the discrete spectral bottom"
        )
    return (quad / np1) ** (1.0 / (params.p - 1))


def nehari_project(u: np.ndarray, ops: DiscreteOperators, params: Params) -> np.ndarray:
    return nehari_factor(u, ops, params) * np.asarray(u, dtype=float)


def transverse_fraction(u: np.ndarray, ops: DiscreteOperators) -> float:
    if not ops.has_split:
        raise ValueError("transverse fraction needs graph-based operators with an x/y split")
    qx, qy, _ = energies(_check(u, ops), ops)
    # Ky is semidefinite; clip round-off below zero
    qy = max(qy, 0.0)
    total = qx + qy
    return 0.0 if total == 0.0 else qy / total
