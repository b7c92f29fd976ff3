"""Estimation on top of recorded counts: tomography rows, QBER, decoy
bounds, and the secret key rate.

The decoy treatment is the standard vacuum+weak two-intensity analysis: a
lower bound on the single-photon yield from the signal/decoy gain pair and
the vacuum yield, an upper bound on the single-photon error rate from the
decoy error gain, and the usual one-way rate formula
    R = q * (-Q_mu f H2(E_mu) + Q_1 (1 - H2(e_1))).
All bounds clamp to [0, 1] and report what was clamped via flags rather
than failing, since estimator excursions outside the physical range are
expected at finite sample sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .detection import SessionCounts
from .errors import InvalidInputError, NoDataError
from .qubit import Basis
from .source import IntensityClass, SourceConfig

SETTING_LABELS = ("phase:0", "phase:1", "time:0", "time:1")


def _setting_index(basis: Basis, bit: int) -> int:
    if basis not in (Basis.PHASE, Basis.TIME):
        raise InvalidInputError("settings exist only for the two BB84 bases")
    if bit not in (0, 1):
        raise InvalidInputError("bit must be 0 or 1")
    return int(basis) * 2 + bit


@dataclass(frozen=True)
class ProbabilityMatrix:
    """Measured conditional probabilities P(beta, j | alpha, i, clicked).

    Rows are prepared settings, columns measured (pathway, slot), both in
    SETTING_LABELS order.  Entries are exact rationals of the underlying
    counts, so every row sums to exactly 1.
    """

    values: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def from_counts(
        cls, counts: SessionCounts, intensity: IntensityClass = IntensityClass.SIGNAL
    ) -> "ProbabilityMatrix":
        c = counts.counts[int(intensity)]
        rows = []
        for alpha in (0, 1):
            for i in (0, 1):
                row_counts = [int(c[alpha, i, beta, j]) for beta in (0, 1) for j in (0, 1)]
                total = sum(row_counts)
                if total == 0:
                    raise NoDataError(
                        f"no recorded events for preparation {SETTING_LABELS[alpha * 2 + i]}"
                    )
                rows.append(tuple(Fraction(n, total) for n in row_counts))
        return cls(tuple(rows))

    def prob(self, alpha: Basis, i: int, beta: Basis, j: int) -> Fraction:
        return self.values[_setting_index(alpha, i)][_setting_index(beta, j)]

    def as_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.values])


def conditional_probabilities(
    counts: SessionCounts,
    intensity: IntensityClass,
    alpha: Basis,
    i: int,
    beta: Basis,
) -> tuple[float, float]:
    """(P(j=0), P(j=1)) conditioned on measuring pathway beta."""
    c = counts.counts[int(intensity), int(alpha), i, int(beta)]
    total = int(c[0] + c[1])
    if total == 0:
        raise NoDataError(
            f"no events for preparation {SETTING_LABELS[_setting_index(alpha, i)]} "
            f"measured in the {Basis(beta).name.lower()} pathway"
        )
    return int(c[0]) / total, int(c[1]) / total


def fidelities(
    counts: SessionCounts, intensity: IntensityClass = IntensityClass.SIGNAL
) -> dict[tuple[Basis, int], float]:
    """Matched-basis readout fidelity per prepared setting."""
    out = {}
    for alpha in (Basis.PHASE, Basis.TIME):
        for i in (0, 1):
            p0, p1 = conditional_probabilities(counts, intensity, alpha, i, alpha)
            out[(alpha, i)] = (p0, p1)[i]
    return out


def qber(
    counts: SessionCounts, intensity: IntensityClass = IntensityClass.SIGNAL
) -> float:
    """Sifted error rate over matched-basis events of one intensity class."""
    matched = counts.matched_clicks(intensity)
    if matched == 0:
        raise NoDataError(
            f"no matched-basis events for class {IntensityClass(intensity).name.lower()}"
        )
    return counts.matched_errors(intensity) / matched


def binary_entropy(x: float) -> float:
    if not (math.isfinite(x) and 0.0 <= x <= 1.0):
        raise InvalidInputError("binary entropy argument must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


@dataclass(frozen=True)
class DecoyEstimates:
    """Single-photon bounds from the vacuum+weak decoy pair."""

    y1_lower: float
    e1_upper: float
    q1_lower: float
    y0: float
    flags: tuple[str, ...]


def decoy_bounds(
    q_mu: float,
    e_mu: float,
    q_nu: float,
    e_nu: float,
    mu: float,
    nu: float,
    y0: float,
) -> DecoyEstimates:
    """Bound the single-photon yield and error rate from two gain pairs.

    y1_lower is exact when yields are photon-number independent of the
    intensity class; e1_upper additionally uses the measured vacuum yield.
    nu must be strictly positive: a vacuum decoy carries no slope
    information and the bound degenerates.
    """
    if not (math.isfinite(mu) and math.isfinite(nu) and 0.0 < nu < mu):
        raise InvalidInputError("need 0 < nu < mu")
    for name, v in (("q_mu", q_mu), ("q_nu", q_nu), ("e_mu", e_mu), ("e_nu", e_nu)):
        if not (math.isfinite(v) and 0.0 <= v <= 1.0):
            raise InvalidInputError(f"{name} must lie in [0, 1]")
    if not (math.isfinite(y0) and 0.0 <= y0 <= 1.0):
        raise InvalidInputError("y0 must lie in [0, 1]")

    flags: list[str] = []
    coeff = mu / (mu * nu - nu * nu)
    y1 = coeff * (
        q_nu * math.exp(nu)
        - q_mu * math.exp(mu) * (nu * nu) / (mu * mu)
        - ((mu * mu - nu * nu) / (mu * mu)) * y0
    )
    if y1 < 0.0:
        y1 = 0.0
        flags.append("y1-clamped-zero")
    elif y1 > 1.0:
        y1 = 1.0
        flags.append("y1-clamped-one")

    if y1 == 0.0:
        e1 = 1.0
        flags.append("no-single-photon-signal")
    else:
        e1 = (e_nu * q_nu * math.exp(nu) - 0.5 * y0) / (y1 * nu)
        if e1 < 0.0:
            e1 = 0.0
            flags.append("e1-clamped-zero")
        elif e1 > 1.0:
            e1 = 1.0
            flags.append("e1-clamped-one")

    q1 = y1 * mu * math.exp(-mu)
    return DecoyEstimates(y1, e1, q1, y0, tuple(flags))


@dataclass(frozen=True)
class KeyRateReport:
    """Everything the rate formula consumed plus the result."""

    q_mu: float
    e_mu: float
    q_nu: float
    e_nu: float
    y0: float
    y1_lower: float
    e1_upper: float
    q1_lower: float
    mu: float
    nu: float
    rep_rate_hz: float
    f_ec: float
    sifting_factor: float
    r_per_pulse: float
    r_bps: float
    flags: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "Q_mu": self.q_mu,
            "E_mu": self.e_mu,
            "H2_E_mu": binary_entropy(self.e_mu),
            "Q_nu": self.q_nu,
            "E_nu": self.e_nu,
            "Y_0": self.y0,
            "Y_1": self.y1_lower,
            "e_1": self.e1_upper,
            "Q_1": self.q1_lower,
            "mu": self.mu,
            "nu": self.nu,
            "f_rep_Hz": self.rep_rate_hz,
            "f_EC": self.f_ec,
            "sifting_factor": self.sifting_factor,
            "R_per_pulse": self.r_per_pulse,
            "R_bps": self.r_bps,
            "flags": list(self.flags),
        }


def secret_key_rate_from_values(
    q_mu: float,
    e_mu: float,
    q_nu: float,
    e_nu: float,
    y0: float,
    mu: float,
    nu: float,
    rep_rate_hz: float,
    *,
    f_ec: float = 1.22,
    sifting_factor: float = 0.5,
) -> KeyRateReport:
    """Rate formula on already-extracted gains and error rates."""
    if not rep_rate_hz > 0:
        raise InvalidInputError("rep_rate_hz must be positive")
    if not f_ec >= 1.0:
        raise InvalidInputError("error-correction inefficiency must be >= 1")
    if not 0.0 < sifting_factor <= 1.0:
        raise InvalidInputError("sifting_factor must lie in (0, 1]")
    est = decoy_bounds(q_mu, e_mu, q_nu, e_nu, mu, nu, y0)
    flags = list(est.flags)
    r = sifting_factor * (
        -q_mu * f_ec * binary_entropy(e_mu)
        + est.q1_lower * (1.0 - binary_entropy(est.e1_upper))
    )
    if r < 0.0:
        r = 0.0
        flags.append("rate-clamped-zero")
    return KeyRateReport(
        q_mu=q_mu,
        e_mu=e_mu,
        q_nu=q_nu,
        e_nu=e_nu,
        y0=y0,
        y1_lower=est.y1_lower,
        e1_upper=est.e1_upper,
        q1_lower=est.q1_lower,
        mu=mu,
        nu=nu,
        rep_rate_hz=rep_rate_hz,
        f_ec=f_ec,
        sifting_factor=sifting_factor,
        r_per_pulse=r,
        r_bps=r * rep_rate_hz,
        flags=tuple(flags),
    )


def secret_key_rate(
    counts: SessionCounts,
    source: SourceConfig,
    *,
    f_ec: float = 1.22,
    sifting_factor: float = 0.5,
    y0: float | None = None,
) -> KeyRateReport:
    """Extract gains and error rates from counts, then apply the formula.

    Gains are overall click probabilities per class; error rates are the
    sifted matched-basis QBER of that class.  The vacuum yield comes from
    the vacuum class unless given explicitly.
    """
    if y0 is None:
        if counts.pulses(IntensityClass.VACUUM) == 0:
            raise NoDataError("no vacuum-class pulses recorded and no y0 supplied")
        y0 = counts.gain(IntensityClass.VACUUM)
    return secret_key_rate_from_values(
        counts.gain(IntensityClass.SIGNAL),
        qber(counts, IntensityClass.SIGNAL),
        counts.gain(IntensityClass.DECOY),
        qber(counts, IntensityClass.DECOY),
        y0,
        source.mu,
        source.nu,
        source.rep_rate_hz,
        f_ec=f_ec,
        sifting_factor=sifting_factor,
    )


@dataclass(frozen=True)
class AnalyticChannel:
    """Closed-form channel for cross-checking the estimators.

    A photon survives with probability eta end to end; a frame clicks from
    darks with probability y0; detected photons misread with probability
    e_detector.  Dark errors are unbiased.
    """

    eta: float
    y0: float
    e_detector: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidInputError("eta must lie in [0, 1]")
        if not 0.0 <= self.y0 <= 1.0:
            raise InvalidInputError("y0 must lie in [0, 1]")
        if not 0.0 <= self.e_detector <= 0.5:
            raise InvalidInputError("e_detector must lie in [0, 0.5]")

    def yield_n(self, n: int) -> float:
        if n < 0:
            raise InvalidInputError("photon number must be non-negative")
        return 1.0 - (1.0 - self.y0) * (1.0 - self.eta) ** n

    def error_yield_n(self, n: int) -> float:
        """e_n * Y_n: dark half plus misread detections."""
        detect = 1.0 - (1.0 - self.eta) ** n
        return 0.5 * self.y0 * (1.0 - detect) + self.e_detector * detect

    def gain(self, mean_photons: float) -> float:
        if mean_photons < 0:
            raise InvalidInputError("mean photon number must be non-negative")
        return 1.0 - (1.0 - self.y0) * math.exp(-self.eta * mean_photons)

    def error_gain(self, mean_photons: float) -> float:
        detect = 1.0 - math.exp(-self.eta * mean_photons)
        return 0.5 * self.y0 * (1.0 - detect) + self.e_detector * detect

    def error_rate(self, mean_photons: float) -> float:
        g = self.gain(mean_photons)
        if g == 0.0:
            raise NoDataError("zero gain: error rate undefined")
        return self.error_gain(mean_photons) / g

    def rate(
        self,
        mu: float,
        nu: float,
        rep_rate_hz: float,
        *,
        f_ec: float = 1.22,
        sifting_factor: float = 0.5,
    ) -> KeyRateReport:
        return secret_key_rate_from_values(
            self.gain(mu),
            self.error_rate(mu),
            self.gain(nu),
            self.error_rate(nu),
            self.y0,
            mu,
            nu,
            rep_rate_hz,
            f_ec=f_ec,
            sifting_factor=sifting_factor,
        )


def golden_section_max(fn, lo: float, hi: float, *, grid_points: int = 50, tol: float = 1e-4):
    """Maximize a scalar function on [lo, hi]: coarse grid, then golden
    section on the best bracket down to an interval of width tol.

    Robust for unimodal functions; for others it returns a local maximum
    near the best grid point.  Returns (x_opt, fn(x_opt)).
    """
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise InvalidInputError("need a finite interval with lo < hi")
    if grid_points < 2 or not tol > 0:
        raise InvalidInputError("grid_points must be >= 2 and tol positive")

    grid = np.linspace(lo, hi, grid_points)
    vals = [fn(float(x)) for x in grid]
    k = int(np.argmax(vals))
    a = float(grid[max(k - 1, 0)])
    b = float(grid[min(k + 1, len(grid) - 1)])

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    best = max(((fc, c), (fd, d), (vals[k], float(grid[k]))))
    return best[1], best[0]


def optimize_decoy_intensity(
    channel: AnalyticChannel,
    mu: float,
    rep_rate_hz: float = 80e6,
    *,
    f_ec: float = 1.22,
    sifting_factor: float = 0.5,
    nu_lo: float | None = None,
    nu_hi: float | None = None,
    tol: float = 1e-4,
) -> tuple[float, float]:
    """Decoy intensity maximizing the bound rate over [nu_lo, nu_hi].

    On exact gains the vacuum+weak bound tightens monotonically as the
    decoy weakens, so the maximum sits at nu_lo; pick nu_lo to reflect the
    weakest decoy whose gain you could actually resolve.  Defaults span
    (1e-3 mu, 0.999 mu).  Returns (nu_opt, r_bps_opt).
    """
    if not mu > 0:
        raise InvalidInputError("mu must be positive")
    lo = mu * 1e-3 if nu_lo is None else nu_lo
    hi = mu * 0.999 if nu_hi is None else nu_hi
    if not 0.0 < lo < hi < mu:
        raise InvalidInputError("need 0 < nu_lo < nu_hi < mu")

    def rate_of(nu: float) -> float:
        return channel.rate(
            mu, nu, rep_rate_hz, f_ec=f_ec, sifting_factor=sifting_factor
        ).r_bps

    return golden_section_max(rate_of, lo, hi, tol=tol)
