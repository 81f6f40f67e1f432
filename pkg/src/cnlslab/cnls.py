"""Stationary cubic NLS (Gross-Pitaevskii) equations in radial form.

    psi'' + (N-1)/x psi' + c(psi) psi = 0,   N = 1, 2, 3

with ``c(psi) = 1 - 2 psi**2`` for a repulsive condensate and
``c(psi) = 2 psi**2 - 1`` for an attractive one. Both admit the constant
solutions ``psi = 0`` and ``psi = +-1/sqrt(2)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

#: Nonzero trivial solution, as the nearest double to ``1/sqrt(2)``.
PSI_PLUS = 1.0 / math.sqrt(2.0)

TRIVIAL_SOLUTIONS = (0.0, PSI_PLUS, -PSI_PLUS)


class Interaction(enum.Enum):
    REPULSIVE = "repulsive"
    ATTRACTIVE = "attractive"

    @property
    def sign(self) -> int:
        """+1 if ``c(0) > 0`` (repulsive), -1 otherwise."""
        return 1 if self is Interaction.REPULSIVE else -1


class SingularPointError(ValueError):
    """The radial equation was evaluated at ``x <= 0``."""


@dataclass(frozen=True)
class EquationSpec:
    """Which radial CNLS equation to solve.

    ``potential`` is an optional ``V(x)`` added to the restoring coefficient.
    ``g_scale`` is bookkeeping only: the equations are dimensionless and the
    nonlinearity enters through ``psi(0) ~ 1/sqrt(|g|)``.
    """

    dimension: int = 2
    interaction: Interaction = Interaction.REPULSIVE
    potential: Optional[Callable[[float], float]] = None
    g_scale: Optional[float] = None

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension!r}")
        if isinstance(self.interaction, str):
            object.__setattr__(self, "interaction", Interaction(self.interaction.lower()))

    @property
    def free(self) -> bool:
        return self.potential is None

    @classmethod
    def repulsive(cls, dimension: int = 2, **kw) -> "EquationSpec":
        return cls(dimension, Interaction.REPULSIVE, **kw)

    @classmethod
    def attractive(cls, dimension: int = 2, **kw) -> "EquationSpec":
        return cls(dimension, Interaction.ATTRACTIVE, **kw)


@dataclass(frozen=True)
class BoundaryCondition:
    """Cauchy data ``(psi(0), psi'(0))`` at the origin."""

    psi0: float
    dpsi0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.psi0) and math.isfinite(self.dpsi0)):
            raise ValueError("boundary values must be finite")

    def check(self, spec: EquationSpec) -> None:
        # (N-1) psi'/x is singular at the origin unless psi'(0) = 0
        if spec.dimension >= 2 and self.dpsi0 != 0.0:
            raise ValueError(
                f"psi'(0) must be 0 for N={spec.dimension}, got {self.dpsi0!r}"
            )


def _free_coefficient(interaction: Interaction, psi: float) -> float:
    # 1 - (psi/psi_plus)**2 equals 1 - 2 psi**2 but vanishes exactly at the
    # double nearest 1/sqrt(2), so the constant solutions are exact fixed points
    r = psi / PSI_PLUS
    c = 1.0 - r * r
    return c if interaction is Interaction.REPULSIVE else -c


def effective_coefficient(spec: EquationSpec, psi: float, x: float = 1.0) -> float:
    """Coefficient multiplying ``psi`` when the equation is read as
    ``psi'' + b psi' + c psi = 0``."""
    c = _free_coefficient(spec.interaction, psi)
    if spec.potential is not None:
        c += spec.potential(x)
    return c


def trivial_solutions(spec: EquationSpec) -> tuple[float, float, float]:
    """Constant solutions ``(0, +1/sqrt 2, -1/sqrt 2)`` of the free equation."""
    if not spec.free:
        raise NotImplementedError(
            "constant solutions are only known for the free-particle equation"
        )
    return TRIVIAL_SOLUTIONS


def predicts_oscillation(spec: EquationSpec, psi: float) -> bool:
    """Pointwise criterion ``c(psi) > 0``: ``psi**2 < 1/2`` when repulsive,
    ``psi**2 > 1/2`` when attractive."""
    return _free_coefficient(spec.interaction, psi) > 0.0


def rhs(spec: EquationSpec, x: float, state: tuple[float, float]) -> tuple[float, float]:
    """First-order system ``(psi', psi'')``; requires ``x > 0``."""
    if x <= 0.0:
        raise SingularPointError(f"rhs needs x > 0 (got {x!r}); start with taylor_start")
    psi, dpsi = state
    ddpsi = -effective_coefficient(spec, psi, x) * psi
    if spec.dimension != 1:
        ddpsi -= (spec.dimension - 1) / x * dpsi
    return dpsi, ddpsi


def make_accel(spec: EquationSpec) -> Callable[[float, float, float], float]:
    """Fast scalar ``psi''(x, psi, dpsi)`` closure used by the integrator."""
    inertia = float(spec.dimension - 1)
    sign = float(spec.interaction.sign)
    potential = spec.potential
    inv = 1.0 / PSI_PLUS

    if potential is None:
        def accel(x, psi, dpsi):
            r = psi * inv
            return -inertia / x * dpsi - sign * (1.0 - r * r) * psi
    else:
        def accel(x, psi, dpsi):
            r = psi * inv
            return -inertia / x * dpsi - (sign * (1.0 - r * r) + potential(x)) * psi
    return accel


def taylor_start(
    spec: EquationSpec, bc: BoundaryCondition, epsilon: float
) -> tuple[float, float, float]:
    """Second-order Taylor step from the origin to ``x = epsilon``.

    Near ``x = 0`` the term ``psi'/x`` tends to ``psi''(0)``, so
    ``psi''(0) = -c(psi(0)) psi(0) / N``.
    """
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    bc.check(spec)
    psi0, dpsi0 = bc.psi0, bc.dpsi0
    dd0 = -effective_coefficient(spec, psi0, 0.0) * psi0 / spec.dimension
    psi = psi0 + dpsi0 * epsilon + 0.5 * dd0 * epsilon * epsilon
    dpsi = dpsi0 + dd0 * epsilon
    return epsilon, psi, dpsi


def first_integral(spec: EquationSpec, psi, dpsi):
    """Conserved quantity of the free ``N = 1`` equation.

    ``psi'^2/2 + s (psi^2/2 - psi^4/2)`` with ``s = +1`` (repulsive) or
    ``-1`` (attractive). Works elementwise on arrays.
    """
    s = spec.interaction.sign
    psi2 = psi * psi
    return 0.5 * dpsi * dpsi + s * (0.5 * psi2 - 0.5 * psi2 * psi2)
