"""Drive protocols omega(t)**2, the unit-rate rescaling and the freezing time."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq


class ProtocolError(ValueError):
    pass


class DriveKind(enum.IntEnum):
    POWER_LAW = 0
    GAPPED = 1
    CORRECTED = 2


@dataclass(frozen=True)
class DriveSpec:
    """Even frequency protocol.

    * ``POWER_LAW``: ``(delta |t|)**(2 znu)``
    * ``GAPPED``:    ``(t0 + delta |t|)**(2 znu)``
    * ``CORRECTED``: ``(delta |t|)**(2 znu) + gamma (delta |t|)**n_corr``

    ``offset`` adds a constant to ``omega**2`` (a static mass shift, e.g. the
    gap of a finite-momentum mode); it is zero for the protocols proper.
    """

    kind: DriveKind
    znu: float
    delta: float = 1.0
    t0: float = 0.0
    gamma: float = 0.0
    n_corr: int = 0
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DriveKind(self.kind))
        if not (self.znu > 0 and math.isfinite(self.znu)):
            raise ProtocolError(f"znu must be positive, got {self.znu!r}")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ProtocolError(f"delta must be positive, got {self.delta!r}")
        if not (self.offset >= 0 and math.isfinite(self.offset)):
            raise ProtocolError(f"offset must be finite and >= 0, got {self.offset!r}")
        if self.kind is DriveKind.GAPPED and self.t0 < 0:
            raise ProtocolError(f"gap offset t0 must be >= 0, got {self.t0!r}")
        if self.kind is DriveKind.CORRECTED:
            if self.gamma < 0:
                raise ProtocolError(f"gamma must be >= 0, got {self.gamma!r}")
            if not self.n_corr > 2 * self.znu:
                raise ProtocolError(
                    f"correction exponent n_corr={self.n_corr} must exceed 2*znu={2 * self.znu}"
                )

    @classmethod
    def power_law(cls, znu: float, delta: float = 1.0) -> "DriveSpec":
        return cls(DriveKind.POWER_LAW, znu, delta)

    @classmethod
    def gapped(cls, znu: float, delta: float = 1.0, t0: float = 0.0) -> "DriveSpec":
        return cls(DriveKind.GAPPED, znu, delta, t0=t0)

    @classmethod
    def corrected(cls, znu: float, delta: float = 1.0, gamma: float = 0.0, n_corr: int = 2) -> "DriveSpec":
        return cls(DriveKind.CORRECTED, znu, delta, gamma=gamma, n_corr=int(n_corr))

    @property
    def p(self) -> float:
        return 1.0 / (2.0 + 2.0 * self.znu)

    def as_params(self) -> np.ndarray:
        """Flat float array consumed by the compiled right-hand sides."""
        return np.array(
            [float(self.kind), self.znu, self.delta, self.t0, self.gamma, float(self.n_corr), self.offset]
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.name.lower(),
            "znu": self.znu,
            "delta": self.delta,
            "t0": self.t0,
            "gamma": self.gamma,
            "n_corr": self.n_corr,
            "offset": self.offset,
        }


def omega_squared(drive: DriveSpec, t):
    """Instantaneous squared gap; accepts scalars or arrays."""
    u = drive.delta * np.abs(t)
    two_znu = 2.0 * drive.znu
    if drive.kind is DriveKind.POWER_LAW:
        w2 = u ** two_znu
    elif drive.kind is DriveKind.GAPPED:
        w2 = (drive.t0 + u) ** two_znu
    else:
        w2 = u ** two_znu + drive.gamma * u ** drive.n_corr
    w2 = w2 + drive.offset
    return float(w2) if np.ndim(w2) == 0 else w2


def omega(drive: DriveSpec, t):
    return np.sqrt(omega_squared(drive, t))


def omega_dot(drive: DriveSpec, t):
    """Analytic time derivative of omega(t) (one-sided at t = 0 is ill-defined)."""
    t = np.asarray(t, dtype=float)
    sgn = np.sign(t)
    u = drive.delta * np.abs(t)
    z = drive.znu
    with np.errstate(divide="ignore", invalid="ignore"):
        if drive.kind is DriveKind.POWER_LAW:
            dw2 = 2 * z * drive.delta * u ** (2 * z - 1.0)
        elif drive.kind is DriveKind.GAPPED:
            dw2 = 2 * z * drive.delta * (drive.t0 + u) ** (2 * z - 1.0)
        else:
            dw2 = drive.delta * (2 * z * u ** (2 * z - 1.0) + drive.gamma * drive.n_corr * u ** (drive.n_corr - 1.0))
        d = dw2 / (2.0 * np.sqrt(omega_squared(drive, t)))
    d = sgn * d
    return float(d) if d.ndim == 0 else d


@dataclass(frozen=True)
class Rescaling:
    drive: DriveSpec
    time_scale: float
    width_scale: float

    def to_physical_time(self, s):
        return self.time_scale * np.asarray(s)

    def to_unit_time(self, t):
        return np.asarray(t) / self.time_scale


def rescale_to_unit_rate(drive: DriveSpec) -> Rescaling:
    """Map a drive onto its ``delta = 1`` form.

    With ``t = time_scale * s`` and ``xi(t) = width_scale * xi_unit(s)`` the
    Ermakov equation of ``drive`` becomes that of the returned unit-rate drive.
    """
    z = drive.znu
    d = drive.delta
    time_scale = d ** (-z / (1.0 + z))
    width_scale = d ** (-z / (2.0 * (z + 1.0)))
    drive = replace(drive, offset=drive.offset * time_scale ** 2)
    if drive.kind is DriveKind.GAPPED:
        unit = replace(drive, delta=1.0, t0=d ** (-1.0 / (1.0 + z)) * drive.t0)
    elif drive.kind is DriveKind.CORRECTED:
        unit = replace(drive, delta=1.0, gamma=d ** ((drive.n_corr - 2 * z) / (1.0 + z)) * drive.gamma)
    else:
        unit = replace(drive, delta=1.0)
    return Rescaling(unit, time_scale, width_scale)


def freezing_time_closed_form(znu: float, delta: float) -> float:
    return znu ** (1.0 / (1.0 + znu)) * delta ** (-znu / (1.0 + znu))


def freezing_time(drive: DriveSpec) -> float:
    """Positive root of ``omega_dot(t) = omega(t)**2`` for a pure power law.

    Solves ``znu delta**znu t**(znu-1) = (delta t)**(2 znu)`` in logarithmic
    form with Brent's method; the bracket comes from the closed form.
    """
    if drive.kind is not DriveKind.POWER_LAW or drive.offset:
        raise ProtocolError(f"freezing time is only defined for pure power-law drives, got {drive.kind.name}")
    z, d = drive.znu, drive.delta

    def balance(log_t):
        t = math.exp(log_t)
        # log(omega_dot) - log(omega^2)
        return math.log(z) + z * math.log(d) + (z - 1.0) * log_t - 2.0 * z * (math.log(d) + log_t)

    guess = math.log(freezing_time_closed_form(z, d))
    root = brentq(balance, guess - 5.0, guess + 5.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return math.exp(root)
