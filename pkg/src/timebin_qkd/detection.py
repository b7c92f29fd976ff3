"""Receiver simulation: projection, click model, time tags, and counting.

The receiver splits incoming light 50:50 between a time-basis and a
phase-basis pathway ending on one detector each.  A polarizing delayed
interferometer (0.88 m path difference, 2.935 ns) maps the two orthogonal
polarizations to two nanosecond slots per pathway, giving four detection
windows per repetition frame.  Counting is by pulse outcome; time tags are
an equivalent record of the same clicks for external tooling.

Probabilities come straight from the switched-state amplitudes: the
effective detected qubit is (switched early-bin V amplitude, unswitched
late-bin H amplitude), projected onto the chosen basis pair.  Amplitude in
the two crossed modes (early-bin H, late-bin V) carries no usable bit in
the time pathway; by default such events record a uniformly random bit
(no-information convention), configurable to discard them or to route by
polarization.  In a superposition basis crossed modes lack a temporal
interference partner and genuinely project 50:50.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ConfigError, InvalidInputError
from .qubit import Basis, PreparationSetting, mub_states
from .source import IntensityClass, LossBudget, SourceConfig, transmittance
from .switch import POL_H, POL_V, SwitchedState, SwitchModel, apply_switch_both_bins

# Path difference of the polarizing delayed interferometer: 0.88 m of fiber
# free-space-equivalent delay between the two polarization arms.
INTERFEROMETER_DELAY_PS = 0.88 / 299792458.0 * 1e12

# Electronic offset separating the two basis groups on the shared time axis.
BASIS_GROUP_OFFSET_PS = 8000.0


class Outcome(IntEnum):
    BIT0 = 0
    BIT1 = 1
    NO_CLICK = 2
    DOUBLE_CLICK = 3


_STRAY_POLICIES = ("random", "discard", "by_polarization")
_DOUBLE_POLICIES = ("random", "discard")


@dataclass(frozen=True)
class DetectorModel:
    """Detector and measurement-chain imperfections.

    efficiency_db: detection efficiency expressed as a dB loss.
    dark_count_rate_hz: dark rate per detector; darks are injected per
        window as rate * window duration.
    jitter_sigma_ps: Gaussian timing jitter applied to time tags.
    window_ns: acceptance window around each slot center.
    dead_time_ns: detector dead time after a recorded click.
    intrinsic_error: probability a detected photon records the wrong bit
        (residual interference contrast, alignment); sets the error floor.
    double_click_policy: "random" squashes a double click to a uniform bit,
        "discard" drops the event.
    stray_time_policy: handling of crossed-polarization modes in the time
        pathway ("random", "discard", or "by_polarization").
    recombination_phase: phase error of the phase-basis recombination (rad).
    """

    efficiency_db: float = 2.2
    dark_count_rate_hz: float = 100.0
    jitter_sigma_ps: float = 150.0
    window_ns: float = 0.8
    dead_time_ns: float = 50.0
    intrinsic_error: float = 0.008
    double_click_policy: str = "random"
    stray_time_policy: str = "random"
    recombination_phase: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.efficiency_db) and self.efficiency_db >= 0):
            raise InvalidInputError("efficiency_db must be finite and non-negative")
        for name in ("dark_count_rate_hz", "jitter_sigma_ps", "dead_time_ns"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidInputError(f"{name} must be finite and non-negative")
        if not self.window_ns > 0:
            raise InvalidInputError("window_ns must be positive")
        if not 0.0 <= self.intrinsic_error <= 0.5:
            raise InvalidInputError("intrinsic_error must lie in [0, 0.5]")
        if self.double_click_policy not in _DOUBLE_POLICIES:
            raise InvalidInputError(f"double_click_policy must be one of {_DOUBLE_POLICIES}")
        if self.stray_time_policy not in _STRAY_POLICIES:
            raise InvalidInputError(f"stray_time_policy must be one of {_STRAY_POLICIES}")
        if not math.isfinite(self.recombination_phase):
            raise InvalidInputError("recombination_phase must be finite")

    @property
    def efficiency(self) -> float:
        return transmittance(self.efficiency_db)

    @property
    def dark_prob_per_window(self) -> float:
        return self.dark_count_rate_hz * self.window_ns * 1e-9


@dataclass(frozen=True)
class ClickEvent:
    """One detector click: which detector, when (ps since pulse epoch)."""

    pulse_index: int
    detector_id: int
    timestamp_ps: float

    def __post_init__(self) -> None:
        if self.pulse_index < 0:
            raise InvalidInputError("pulse_index must be non-negative")
        if self.detector_id not in (0, 1):
            raise InvalidInputError("detector_id must be 0 or 1")
        if not math.isfinite(self.timestamp_ps):
            raise InvalidInputError("timestamp_ps must be finite")


def _default_centers() -> tuple[float, float, float, float]:
    return (
        0.0,
        INTERFEROMETER_DELAY_PS,
        BASIS_GROUP_OFFSET_PS,
        BASIS_GROUP_OFFSET_PS + INTERFEROMETER_DELAY_PS,
    )


@dataclass(frozen=True)
class WindowLayout:
    """Slot centers of the four (basis, bit) windows and their common width.

    centers_ps orders as (phase bit0, phase bit1, time bit0, time bit1);
    index = basis * 2 + bit.  Windows must not overlap.
    """

    centers_ps: tuple[float, float, float, float] = field(default_factory=_default_centers)
    width_ps: float = 800.0

    def __post_init__(self) -> None:
        if len(self.centers_ps) != 4:
            raise ConfigError("centers_ps must hold four slot centers")
        if not self.width_ps > 0:
            raise ConfigError("width_ps must be positive")
        ordered = sorted(self.centers_ps)
        for a, b in zip(ordered, ordered[1:]):
            if b - a < self.width_ps:
                raise ConfigError(
                    f"windows overlap: centers {a} and {b} ps are closer than {self.width_ps} ps"
                )

    def center(self, basis: Basis, bit: int) -> float:
        if basis not in (Basis.PHASE, Basis.TIME):
            raise InvalidInputError("only the two BB84 pathways have slots")
        if bit not in (0, 1):
            raise InvalidInputError("bit must be 0 or 1")
        return self.centers_ps[int(basis) * 2 + bit]

    def classify(self, timestamp_ps: float) -> tuple[Basis, int] | None:
        """Window containing the timestamp, or None if it falls outside all."""
        half = 0.5 * self.width_ps
        for idx, c in enumerate(self.centers_ps):
            if abs(timestamp_ps - c) <= half:
                return Basis(idx // 2), idx % 2
        return None


@dataclass
class SessionCounts:
    """Event counts N_{i,j} indexed [class][alpha][i][beta][j].

    alpha/i are the sender's basis and bit, beta/j the receiver's.  Merging
    is plain integer addition, so partial results combine associatively and
    in any order.  pulses_sent tracks emitted pulses per (class, alpha, i).
    """

    counts: np.ndarray
    pulses_sent: np.ndarray

    @classmethod
    def zeros(cls) -> "SessionCounts":
        return cls(
            counts=np.zeros((3, 2, 2, 2, 2), dtype=np.int64),
            pulses_sent=np.zeros((3, 2, 2), dtype=np.int64),
        )

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.pulses_sent = np.asarray(self.pulses_sent, dtype=np.int64)
        if self.counts.shape != (3, 2, 2, 2, 2) or self.pulses_sent.shape != (3, 2, 2):
            raise InvalidInputError("counts must be (3,2,2,2,2) and pulses_sent (3,2,2)")
        if np.any(self.counts < 0) or np.any(self.pulses_sent < 0):
            raise InvalidInputError("counts must be non-negative")
        recorded = self.counts.sum(axis=(3, 4))
        if np.any(recorded > self.pulses_sent):
            raise InvalidInputError("more recorded events than pulses sent")

    def __add__(self, other: "SessionCounts") -> "SessionCounts":
        return SessionCounts(self.counts + other.counts, self.pulses_sent + other.pulses_sent)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SessionCounts):
            return NotImplemented
        return np.array_equal(self.counts, other.counts) and np.array_equal(
            self.pulses_sent, other.pulses_sent
        )

    def clicks(self, cls: IntensityClass) -> int:
        return int(self.counts[int(cls)].sum())

    def pulses(self, cls: IntensityClass) -> int:
        return int(self.pulses_sent[int(cls)].sum())

    def gain(self, cls: IntensityClass) -> float:
        n = self.pulses(cls)
        if n == 0:
            raise InvalidInputError(f"no pulses recorded for class {IntensityClass(cls).name}")
        return self.clicks(cls) / n

    def matched_clicks(self, cls: IntensityClass) -> int:
        c = self.counts[int(cls)]
        return int(c[0, :, 0, :].sum() + c[1, :, 1, :].sum())

    def matched_errors(self, cls: IntensityClass) -> int:
        c = self.counts[int(cls)]
        return int(c[0, 0, 0, 1] + c[0, 1, 0, 0] + c[1, 0, 1, 1] + c[1, 1, 1, 0])

    def to_dict(self) -> dict:
        return {
            "counts": self.counts.tolist(),
            "pulses_sent": self.pulses_sent.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionCounts":
        try:
            return cls(np.array(d["counts"]), np.array(d["pulses_sent"]))
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInputError(f"malformed counts payload: {e}") from e


def outcome_probabilities(
    state: SwitchedState, basis: Basis, det: DetectorModel
) -> tuple[float, float, float]:
    """(P bit0, P bit1, P discarded) for an incident photon, before darks.

    The effective detected qubit is (e^{i chi} * amp(t0, V), amp(t1, H));
    crossed-mode amplitude is handled per the detector's stray policy in
    the time pathway and projects 50:50 in superposition pathways.
    """
    chi = det.recombination_phase
    psi0 = state.amp(0, POL_V) * complex(math.cos(chi), math.sin(chi))
    psi1 = state.amp(1, POL_H)
    stray_h = abs(state.amp(0, POL_H)) ** 2
    stray_v = abs(state.amp(1, POL_V)) ** 2
    stray = stray_h + stray_v

    if basis == Basis.TIME:
        p0 = abs(psi0) ** 2
        p1 = abs(psi1) ** 2
        drop = 0.0
        if det.stray_time_policy == "random":
            p0 += 0.5 * stray
            p1 += 0.5 * stray
        elif det.stray_time_policy == "by_polarization":
            p0 += stray_v
            p1 += stray_h
        else:
            drop = stray
        return p0, p1, drop

    b0, b1 = mub_states(basis)
    p0 = abs(b0.amp_t0.conjugate() * psi0 + b0.amp_t1.conjugate() * psi1) ** 2 + 0.5 * stray
    p1 = abs(b1.amp_t0.conjugate() * psi0 + b1.amp_t1.conjugate() * psi1) ** 2 + 0.5 * stray
    return p0, p1, 0.0


def measure(
    q_switched: SwitchedState,
    basis: Basis,
    det: DetectorModel,
    rng: np.random.Generator,
) -> Outcome:
    """Measurement outcome for one pulse carrying one incident photon.

    The caller has already drawn the pathway (50:50) and established that a
    photon reached the receiver; this gates it through the detector
    efficiency, projects it, applies the intrinsic error, and injects dark
    counts into the two windows of the chosen pathway.  Dead time acts at
    the pulse-train level and is handled by simulate_block.
    """
    p0, p1, _ = outcome_probabilities(q_switched, basis, det)
    sig = None
    if rng.random() < det.efficiency:
        u = rng.random()
        if u < p0:
            sig = 0
        elif u < p0 + p1:
            sig = 1
    if sig is not None and rng.random() < det.intrinsic_error:
        sig ^= 1
    p_dark = det.dark_prob_per_window
    d0 = rng.random() < p_dark
    d1 = rng.random() < p_dark
    click0 = sig == 0 or d0
    click1 = sig == 1 or d1
    if click0 and click1:
        return Outcome.DOUBLE_CLICK
    if click0:
        return Outcome.BIT0
    if click1:
        return Outcome.BIT1
    return Outcome.NO_CLICK


def to_time_tags(
    outcome: Outcome,
    basis: Basis,
    pulse_index: int,
    det: DetectorModel,
    rng: np.random.Generator,
    layout: WindowLayout | None = None,
) -> list[ClickEvent]:
    """Detector record of one outcome: zero, one, or two timestamped clicks.

    Timestamps are the slot center plus Gaussian jitter.  Both BB84
    pathways share the time axis; the time pathway reads out on detector 1,
    the phase pathway on detector 0.
    """
    if basis not in (Basis.PHASE, Basis.TIME):
        raise InvalidInputError("time tags exist only for the two BB84 pathways")
    layout = layout or WindowLayout()
    detector_id = 1 if basis == Basis.TIME else 0
    bits: tuple[int, ...]
    if outcome == Outcome.NO_CLICK:
        bits = ()
    elif outcome == Outcome.DOUBLE_CLICK:
        bits = (0, 1)
    else:
        bits = (int(outcome),)
    tags = []
    for b in bits:
        ts = layout.center(basis, b) + rng.normal(0.0, det.jitter_sigma_ps)
        tags.append(ClickEvent(pulse_index, detector_id, float(ts)))
    return tags


@dataclass
class PulseLedger:
    """Sender-side record of a pulse range: class and preparation per pulse.

    Covers pulses [start_index, start_index + len); accumulate() needs it
    to attribute windowed clicks to (class, alpha, i).
    """

    start_index: int
    class_idx: np.ndarray
    alpha: np.ndarray
    bit: np.ndarray

    def __post_init__(self) -> None:
        self.class_idx = np.asarray(self.class_idx, dtype=np.int64)
        self.alpha = np.asarray(self.alpha, dtype=np.int64)
        self.bit = np.asarray(self.bit, dtype=np.int64)
        n = len(self.class_idx)
        if len(self.alpha) != n or len(self.bit) != n:
            raise InvalidInputError("ledger arrays must have equal length")
        if self.start_index < 0:
            raise InvalidInputError("start_index must be non-negative")

    def __len__(self) -> int:
        return len(self.class_idx)


def accumulate(
    tags: list[ClickEvent],
    layout: WindowLayout,
    ledger: PulseLedger,
) -> SessionCounts:
    """Bin time tags into windows and tally counts against the ledger.

    Each tag lands in the window containing its timestamp or is discarded.
    Pulses with more than one windowed tag are discarded (deterministic, so
    pieces merge associatively).  pulses_sent comes from the ledger, so
    accumulating disjoint (tags, ledger) pieces and summing equals
    accumulating the concatenation.
    """
    out = SessionCounts.zeros()
    flat_sent = (
        ledger.class_idx * 4 + ledger.alpha * 2 + ledger.bit
    )
    out.pulses_sent += np.bincount(flat_sent, minlength=12).reshape(3, 2, 2)

    classified: dict[int, tuple[int, int]] = {}
    multi: set[int] = set()
    stop = ledger.start_index + len(ledger)
    for tag in tags:
        if not ledger.start_index <= tag.pulse_index < stop:
            raise InvalidInputError(
                f"tag pulse_index {tag.pulse_index} outside ledger range"
            )
        hit = layout.classify(tag.timestamp_ps)
        if hit is None:
            continue
        if tag.pulse_index in classified or tag.pulse_index in multi:
            classified.pop(tag.pulse_index, None)
            multi.add(tag.pulse_index)
            continue
        classified[tag.pulse_index] = (int(hit[0]), hit[1])
    for pi, (beta, j) in classified.items():
        row = pi - ledger.start_index
        out.counts[
            ledger.class_idx[row], ledger.alpha[row], ledger.bit[row], beta, j
        ] += 1
    return out


def write_time_tags(path, tags: list[ClickEvent]) -> None:
    """Write tags as line-oriented text: pulse_index,detector_id,timestamp_ps."""
    with open(path, "w", encoding="ascii") as f:
        f.write("pulse_index,detector_id,timestamp_ps\n")
        for t in tags:
            f.write(f"{t.pulse_index},{t.detector_id},{t.timestamp_ps!r}\n")


def read_time_tags(path) -> list[ClickEvent]:
    tags = []
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().strip()
        if header != "pulse_index,detector_id,timestamp_ps":
            raise InvalidInputError(f"unrecognized tag file header: {header!r}")
        for line in f:
            line = line.strip()
            if not line:
                continue
            pi, det_id, ts = line.split(",")
            tags.append(ClickEvent(int(pi), int(det_id), float(ts)))
    return tags


def write_pulse_ledger(path, ledger: PulseLedger) -> None:
    """Write the sender record: pulse_index,intensity_class,alpha,bit."""
    with open(path, "w", encoding="ascii") as f:
        f.write("pulse_index,intensity_class,alpha,bit\n")
        for row in range(len(ledger)):
            f.write(
                f"{ledger.start_index + row},{int(ledger.class_idx[row])},"
                f"{int(ledger.alpha[row])},{int(ledger.bit[row])}\n"
            )


def read_pulse_ledger(path) -> PulseLedger:
    idx, cls, alpha, bit = [], [], [], []
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().strip()
        if header != "pulse_index,intensity_class,alpha,bit":
            raise InvalidInputError(f"unrecognized ledger header: {header!r}")
        for line in f:
            line = line.strip()
            if not line:
                continue
            a, b, c, d = line.split(",")
            idx.append(int(a))
            cls.append(int(b))
            alpha.append(int(c))
            bit.append(int(d))
    if not idx:
        raise InvalidInputError("empty pulse ledger")
    start = idx[0]
    if idx != list(range(start, start + len(idx))):
        raise InvalidInputError("ledger pulse indices must be contiguous")
    return PulseLedger(start, np.array(cls), np.array(alpha), np.array(bit))


def _dead_frames(det: DetectorModel, source: SourceConfig) -> int:
    return int(math.ceil(det.dead_time_ns * 1e3 / source.frame_ps))


def _prune_dead_time(
    frames: np.ndarray, detector: np.ndarray, blocked: int
) -> np.ndarray:
    # Greedy pass per detector over the sparse click list: a kept event
    # blocks the next `blocked` frames on its detector.
    keep = np.ones(len(frames), dtype=bool)
    if blocked <= 0 or len(frames) == 0:
        return keep
    next_free = [0, 0]
    for k in range(len(frames)):
        d = detector[k]
        if frames[k] < next_free[d]:
            keep[k] = False
        else:
            next_free[d] = frames[k] + blocked + 1
    return keep


def simulate_block(
    prep: PreparationSetting,
    n_pulses: int,
    source: SourceConfig,
    budget: LossBudget,
    switch: SwitchModel,
    det: DetectorModel,
    rng: np.random.Generator,
    *,
    collect_tags: bool = False,
    layout: WindowLayout | None = None,
    start_index: int = 0,
):
    """Simulate a pulse train of one preparation setting, fully vectorized.

    Per pulse: intensity class, Poisson photon number, per-photon survival
    through path loss and detector efficiency, 50:50 pathway choice,
    projection of the switched state, intrinsic error, per-window dark
    counts, dead time, and the double-click policy.  Returns SessionCounts;
    with collect_tags=True returns (counts, tags, ledger) where tags are
    the physical click record (doubles keep both clicks, no policy applied).
    """
    if n_pulses < 0:
        raise InvalidInputError("n_pulses must be non-negative")
    sw = apply_switch_both_bins(prep.state(), switch)
    probs_by_basis = [outcome_probabilities(sw, b, det) for b in (Basis.PHASE, Basis.TIME)]
    thr1 = np.array([p[0] for p in probs_by_basis])
    thr2 = np.array([p[0] + p[1] for p in probs_by_basis])

    q_surv = transmittance(budget.path_db) * det.efficiency
    p_dark = det.dark_prob_per_window
    mu_by_class = np.array([source.mu, source.nu, 0.0])
    cum_probs = np.cumsum(source.class_probabilities)

    n = int(n_pulses)
    cls = np.searchsorted(cum_probs, rng.random(n), side="right")
    cls[cls > 2] = 2  # guard the u == 1.0 edge
    n_ph = rng.poisson(mu_by_class[cls])
    if q_surv >= 1.0:
        p_click = (n_ph > 0).astype(float)
    else:
        p_click = -np.expm1(n_ph * math.log1p(-q_surv))
    clicked = rng.random(n) < p_click
    beta = (rng.random(n) < 0.5).astype(np.int8)  # 1 = time pathway

    u_out = rng.random(n)
    sig_bit = (u_out >= thr1[beta]).astype(np.int8)
    sig_drop = u_out >= thr2[beta]
    flip = rng.random(n) < det.intrinsic_error
    sig_bit ^= flip.astype(np.int8)

    dark0 = rng.random(n) < p_dark
    dark1 = rng.random(n) < p_dark
    sig_click = clicked & ~sig_drop
    click0 = (sig_click & (sig_bit == 0)) | dark0
    click1 = (sig_click & (sig_bit == 1)) | dark1

    any_click = click0 | click1
    blocked = _dead_frames(det, source)
    if blocked > 0 and any_click.any():
        idx = np.flatnonzero(any_click)
        keep = _prune_dead_time(idx, beta[idx], blocked)
        dropped = idx[~keep]
        click0[dropped] = False
        click1[dropped] = False

    double = click0 & click1
    single = click0 ^ click1
    u_double = rng.random(n)
    if det.double_click_policy == "random":
        counted = single | double
        bit = np.where(double, (u_double < 0.5).astype(np.int8), click1.astype(np.int8))
    else:
        counted = single
        bit = click1.astype(np.int8)

    out = SessionCounts.zeros()
    alpha = int(prep.basis)
    i = prep.bit
    flat = cls[counted] * 4 + beta[counted] * 2 + bit[counted]
    out.counts[:, alpha, i, :, :] += np.bincount(flat, minlength=12).reshape(3, 2, 2)
    out.pulses_sent[:, alpha, i] += np.bincount(cls, minlength=3)

    if not collect_tags:
        return out

    layout = layout or WindowLayout()
    tags: list[ClickEvent] = []
    for b_val, clicks in ((0, click0), (1, click1)):
        idx = np.flatnonzero(clicks)
        if len(idx) == 0:
            continue
        centers = np.array([layout.center(Basis(bb), b_val) for bb in (0, 1)])
        ts = centers[beta[idx]] + rng.normal(0.0, det.jitter_sigma_ps, size=len(idx))
        for k, pi in enumerate(idx):
            tags.append(ClickEvent(start_index + int(pi), int(beta[pi]), float(ts[k])))
    tags.sort(key=lambda t: (t.pulse_index, t.timestamp_ps))
    ledger = PulseLedger(
        start_index,
        cls,
        np.full(n, alpha, dtype=np.int64),
        np.full(n, i, dtype=np.int64),
    )
    return out, tags, ledger
