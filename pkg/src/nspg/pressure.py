"""Barotropic pressure laws inside a power-law envelope.

A law P is admissible when P(0) = 0 and its derivative sits inside the
envelope

    (1/a) z^(gamma-1) - b  <=  P'(z)  <=  a z^(gamma-1) + b

for constants a >= 1, b >= 0, gamma > 1.  Monotonicity of P is NOT
assumed; b > 0 leaves room for decreasing stretches.  Two families are
provided:

* ``PurePower``: P(z) = z^gamma / (a gamma), the classical monotone case.
* ``PerturbedNonMonotone``: P'(z) = z^(gamma-1)/a + amp sin(freq z), a
  concrete oscillating instance that is admissible exactly when
  |amp| <= b (checked numerically by :func:`certify_envelope`, never
  assumed).

The pressure potential Pi(z) = z * int_1^z P(s)/s^2 ds drives the internal
energy; it has a closed form for the pure power law and is integrated
adaptively (tolerance 1e-12) otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.integrate import quad

__all__ = ["PressureLaw", "EnvelopeReport", "certify_envelope"]

ArrayLike = Union[float, np.ndarray]

_KINDS = ("PurePower", "PerturbedNonMonotone")


@dataclass(frozen=True)
class PressureLaw:
    """Pressure law with envelope constants.

    Parameters
    ----------
    kind : str
        "PurePower" or "PerturbedNonMonotone".
    gamma : float
        Adiabatic exponent, > 1.
    a : float
        Envelope stiffness constant, >= 1.
    b : float
        Envelope offset constant, >= 0.
    amp, freq : float
        Amplitude and frequency of the sinusoidal perturbation of P'
        (ignored for PurePower).  amp > b builds a law that VIOLATES the
        envelope; construction succeeds and certify_envelope reports it.
    """

    kind: str = "PurePower"
    gamma: float = 5.0 / 3.0
    a: float = 1.0
    b: float = 0.0
    amp: float = 0.0
    freq: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown pressure kind {self.kind!r}; expected one of {_KINDS}")
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if not self.a >= 1.0:
            raise ValueError(f"envelope constant a must be >= 1, got {self.a}")
        if self.b < 0.0:
            raise ValueError(f"envelope constant b must be >= 0, got {self.b}")
        if self.kind == "PerturbedNonMonotone" and self.freq <= 0.0:
            raise ValueError(f"perturbation frequency must be positive, got {self.freq}")

    # gamma regime flags: the stronger one is needed for the attractive
    # coupling, the weaker suffices for the repulsive sign.
    @property
    def gamma_above_4_3(self) -> bool:
        return self.gamma > 4.0 / 3.0

    @property
    def gamma_above_6_5(self) -> bool:
        return self.gamma > 6.0 / 5.0

    @staticmethod
    def _check_nonnegative(z: ArrayLike) -> np.ndarray:
        arr = np.asarray(z, dtype=np.float64)
        if np.any(arr < 0):
            raise ValueError(f"pressure law evaluated at negative density (min {arr.min()})")
        return arr

    def p(self, z: ArrayLike) -> ArrayLike:
        """Pressure P(z); P(0) = 0."""
        arr = self._check_nonnegative(z)
        out = arr**self.gamma / (self.a * self.gamma)
        if self.kind == "PerturbedNonMonotone" and self.amp != 0.0:
            out = out + (self.amp / self.freq) * (1.0 - np.cos(self.freq * arr))
        return out if isinstance(z, np.ndarray) else float(out)

    def dp(self, z: ArrayLike) -> ArrayLike:
        """Derivative P'(z)."""
        arr = self._check_nonnegative(z)
        out = arr ** (self.gamma - 1.0) / self.a
        if self.kind == "PerturbedNonMonotone" and self.amp != 0.0:
            out = out + self.amp * np.sin(self.freq * arr)
        return out if isinstance(z, np.ndarray) else float(out)

    def pi(self, z: ArrayLike) -> ArrayLike:
        """Pressure potential Pi(z) = z int_1^z P(s)/s^2 ds.

        Closed form for the pure power law; adaptive quadrature to
        absolute and relative tolerance 1e-12 otherwise.
        """
        arr = self._check_nonnegative(z)
        g = self.gamma
        power = (arr**g - arr) / (self.a * g * (g - 1.0))
        if self.kind == "PurePower" or self.amp == 0.0:
            return power if isinstance(z, np.ndarray) else float(power)

        def one(zv: float) -> float:
            if zv == 0.0:
                return 0.0
            amp, freq = self.amp, self.freq
            val, _ = quad(
                lambda s: (1.0 - np.cos(freq * s)) / s**2,
                1.0,
                zv,
                epsabs=1e-12,
                epsrel=1e-12,
                limit=500,
            )
            return (amp / freq) * zv * val

        pert = np.vectorize(one, otypes=[np.float64])(arr)
        out = power + pert
        return out if isinstance(z, np.ndarray) else float(out)

    def envelope_lower(self, z: ArrayLike) -> ArrayLike:
        arr = self._check_nonnegative(z)
        return arr ** (self.gamma - 1.0) / self.a - self.b

    def envelope_upper(self, z: ArrayLike) -> ArrayLike:
        arr = self._check_nonnegative(z)
        return self.a * arr ** (self.gamma - 1.0) + self.b

    def potential_lower_bound(self, z: ArrayLike) -> ArrayLike:
        """Envelope consequence: Pi(z) >= (z^g - z)/(a g (g-1)) - b z log z.

        The log term comes from integrating the envelope from 1 upward, so
        for b > 0 the bound is valid only at z >= 1; below 1 the integral
        direction flips and the b-term changes sign.  With b = 0 the bound
        holds for all z >= 0 (with equality for the pure power law).
        """
        arr = self._check_nonnegative(z)
        g = self.gamma
        with np.errstate(divide="ignore", invalid="ignore"):
            zlogz = np.where(arr > 0, arr * np.log(np.maximum(arr, 1e-300)), 0.0)
        return (arr**g - arr) / (self.a * g * (g - 1.0)) - self.b * zlogz


@dataclass(frozen=True)
class EnvelopeReport:
    """Result of a numerical envelope certification.

    ``margin`` is the minimum over samples of the distance to the nearer
    envelope side; negative margin means the law escapes the envelope at
    ``worst_z``.  Failure is data, not an exception.
    """

    passed: bool
    margin: float
    worst_z: float
    z_max: float
    n_samples: int


def certify_envelope(law: PressureLaw, z_max: float, n_samples: int = 4096) -> EnvelopeReport:
    """Sample P' on a log-uniform grid over (0, z_max] against the envelope."""
    if z_max <= 0:
        raise ValueError(f"z_max must be positive, got {z_max}")
    if n_samples < 2:
        raise ValueError(f"need at least 2 samples, got {n_samples}")
    z = np.geomspace(max(z_max * 1e-9, 1e-12), z_max, n_samples)
    dp = law.dp(z)
    lower = law.envelope_lower(z)
    upper = law.envelope_upper(z)
    gap = np.minimum(dp - lower, upper - dp)
    worst = int(np.argmin(gap))
    margin = float(gap[worst])
    return EnvelopeReport(
        passed=bool(margin >= 0.0),
        margin=margin,
        worst_z=float(z[worst]),
        z_max=float(z_max),
        n_samples=int(n_samples),
    )
