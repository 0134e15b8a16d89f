"""Synthetic pedal-motion RSS traces.

Scripted pedal actions are rendered into per-pedal displacement
trajectories, mapped through a parametric narrowband channel model to a
received-signal-strength trace, and optionally degraded with seeded
Gaussian noise to a target SNR. Every emitted trace carries its own
ground truth, so downstream stages can be scored without a hardware
capture rig.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.signal.windows import hann

PEDALS = ("clutch", "brake", "throttle")
ACTIONS = ("CP", "CR", "BP", "BR", "TP", "TR")
SPEED_PROFILES = ("fast", "regular", "slow")
ACTIVITY_LABELS = (
    "ground-start",
    "parking",
    "hill-start",
    "acceleration",
    "deceleration",
    "free",
)

ACTION_PEDAL = {
    "CP": "clutch",
    "CR": "clutch",
    "BP": "brake",
    "BR": "brake",
    "TP": "throttle",
    "TR": "throttle",
}

# Motion-time multiplier per speed profile: a fast press covers the same
# displacement in half the ticks of a regular one, a slow press in 1.5x.
SPEED_FACTOR = {"fast": 0.5, "regular": 1.0, "slow": 1.5}

DEFAULT_TICK_SECONDS = 0.005  # 200 Hz receiver sampling

# Action composition of the driving activities. Gear motions are invisible
# to the radio link, so only pedal actions appear.
ACTIVITY_TEMPLATES: dict[str, tuple[str, ...]] = {
    "acceleration": ("TR", "CP", "CR", "TP"),
    "deceleration": ("TR", "BP", "BR"),
    "ground-start": ("CP", "TP", "CR"),
    "parking": ("TR", "BP", "CP"),
    "hill-start": ("CP", "BP", "BR", "TP", "CR"),
}

# Pedals that must already be engaged when an activity template begins; a
# release is only legal from an engaged position.
ACTIVITY_INITIAL_PEDALS: dict[str, tuple[str, ...]] = {
    "acceleration": ("throttle",),
    "deceleration": ("throttle",),
    "parking": ("throttle",),
    "ground-start": (),
    "hill-start": (),
}


@dataclass
class ActionEntry:
    """One scripted pedal motion occupying a tick slot."""

    action: str
    start_tick: int
    duration_ticks: int
    extent: float
    speed_profile: str = "regular"

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")
        if self.speed_profile not in SPEED_PROFILES:
            raise ValueError(f"unknown speed profile {self.speed_profile!r}")
        if self.start_tick < 0:
            raise ValueError("start_tick must be >= 0")
        if self.duration_ticks < 2:
            raise ValueError("duration_ticks must be >= 2")
        if not 0.0 < self.extent <= 1.0:
            raise ValueError("extent must lie in (0, 1]")

    @property
    def pedal(self) -> str:
        return ACTION_PEDAL[self.action]

    @property
    def is_press(self) -> bool:
        return self.action.endswith("P")

    @property
    def motion_ticks(self) -> int:
        """Ticks the motion actually takes once the speed profile is applied."""
        return max(2, int(round(self.duration_ticks * SPEED_FACTOR[self.speed_profile])))

    @property
    def end_tick(self) -> int:
        return self.start_tick + self.motion_ticks


@dataclass
class ActionInterval:
    """Ground-truth slice of a trace holding exactly one action."""

    action: str
    start_tick: int
    end_tick: int
    quality: str | None = None


@dataclass
class ActionScript:
    """Ordered, non-overlapping pedal actions plus the starting pedal state."""

    entries: list[ActionEntry]
    activity_label: str | None = None
    initial_positions: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.activity_label is not None and self.activity_label not in ACTIVITY_LABELS:
            raise ValueError(f"unknown activity label {self.activity_label!r}")
        for pedal, pos in self.initial_positions.items():
            if pedal not in PEDALS:
                raise ValueError(f"unknown pedal {pedal!r}")
            if not 0.0 <= pos <= 1.0:
                raise ValueError("initial positions must lie in [0, 1]")
        self._validate_entries()

    def _validate_entries(self):
        entries = self.entries
        if sorted(e.start_tick for e in entries) != [e.start_tick for e in entries]:
            raise ValueError("script invalid: entries must be sorted by start_tick")
        prev_end = -1
        for e in entries:
            if e.start_tick <= prev_end:
                raise ValueError("script invalid: overlapping entries")
            prev_end = e.end_tick
        # Press/release consistency per pedal, walked from the initial state.
        pos = {p: self.initial_positions.get(p, 0.0) for p in PEDALS}
        for e in entries:
            cur = pos[e.pedal]
            if e.is_press:
                if e.extent <= cur:
                    raise ValueError(
                        f"script invalid: press of {e.pedal} to {e.extent} from {cur}"
                    )
                pos[e.pedal] = e.extent
            else:
                if cur <= 0.0:
                    raise ValueError(f"script invalid: release of {e.pedal} while released")
                pos[e.pedal] = 0.0

    @property
    def last_tick(self) -> int:
        return max((e.end_tick for e in self.entries), default=0)


@dataclass
class PedalTrajectory:
    """Normalized displacement of one pedal, one value per sampling tick."""

    pedal: str
    positions: np.ndarray
    tick_seconds: float

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.pedal not in PEDALS:
            raise ValueError(f"unknown pedal {self.pedal!r}")
        if self.tick_seconds <= 0:
            raise ValueError("tick_seconds must be positive")
        if self.positions.size and (
            self.positions.min() < 0.0 or self.positions.max() > 1.0
        ):
            raise ValueError("positions must lie in [0, 1]")


@dataclass
class TrajectoryBundle:
    """Per-pedal trajectories plus the action intervals that produced them."""

    trajectories: dict[str, PedalTrajectory]
    intervals: list[ActionInterval]
    tick_seconds: float
    total_ticks: int


@dataclass
class RssTrace:
    """Uniformly sampled received-signal-strength sequence in dB."""

    samples: np.ndarray
    tick_seconds: float
    ground_truth: list[ActionInterval] = field(default_factory=list)
    snr_db: float | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise ValueError("trace needs at least 2 samples")
        if self.tick_seconds <= 0:
            raise ValueError("tick_seconds must be positive")
        n = self.samples.size
        for iv in self.ground_truth:
            if not (0 <= iv.start_tick < iv.end_tick < n):
                raise ValueError("ground-truth interval outside trace")

    def __len__(self) -> int:
        return self.samples.size


@dataclass
class ChannelModel:
    """Displacement-to-strength mapping for the three pedals.

    The throttle response is strictly monotone, while clutch and brake
    responses carry exactly one interior extremum, so a full press dips
    and partially recovers. Control points are interpolated with a
    shape-preserving cubic. A slow deterministic ripple stands in for
    multipath drift of the idle channel.
    """

    base_strength_db: float = -40.0
    throttle_points: tuple[tuple[float, float], ...] = (
        (0.0, 0.0),
        (0.25, -5.8),
        (0.5, -9.5),
        (0.75, -12.0),
        (1.0, -13.8),
    )
    clutch_points: tuple[tuple[float, float], ...] = (
        (0.0, 0.0),
        (0.3, -8.0),
        (0.5, -10.8),
        (0.55, -12.5),
        (0.6, -10.5),
        (0.8, -6.5),
        (1.0, -3.0),
    )
    brake_points: tuple[tuple[float, float], ...] = (
        (0.0, 0.0),
        (0.2, -3.2),
        (0.45, -6.6),
        (0.85, -16.3),
        (0.9, -18.0),
        (0.95, -16.5),
        (1.0, -16.0),
    )
    multipath_ripple_db: float = 0.15
    ripple_period_s: float = 4.0
    noise_floor_db: float = -95.0

    def __post_init__(self):
        self._curves = {}
        for pedal, pts in (
            ("throttle", self.throttle_points),
            ("clutch", self.clutch_points),
            ("brake", self.brake_points),
        ):
            d = np.array([p[0] for p in pts], dtype=float)
            v = np.array([p[1] for p in pts], dtype=float)
            if d[0] != 0.0 or d[-1] != 1.0 or np.any(np.diff(d) <= 0):
                raise ValueError(f"{pedal} control points must span [0, 1] increasing")
            if v[0] != 0.0:
                raise ValueError(f"{pedal} response must be 0 at rest")
            self._curves[pedal] = PchipInterpolator(d, v)
        self._check_shapes()

    def _check_shapes(self):
        grid = np.linspace(0.0, 1.0, 501)
        d_throttle = np.diff(self._curves["throttle"](grid))
        if not (np.all(d_throttle < 0) or np.all(d_throttle > 0)):
            raise ValueError("throttle response must be strictly monotone")
        for pedal in ("clutch", "brake"):
            diffs = np.diff(self._curves[pedal](grid))
            signs = np.sign(diffs[diffs != 0])
            flips = int(np.count_nonzero(np.diff(signs)))
            if flips != 1:
                raise ValueError(f"{pedal} response must have exactly one interior extremum")

    def response(self, pedal: str, displacement: np.ndarray) -> np.ndarray:
        """Strength offset in dB for the given displacement(s)."""
        if pedal not in PEDALS:
            raise ValueError(f"unknown pedal {pedal!r}")
        return self._curves[pedal](np.asarray(displacement, dtype=float))


def synth_trajectory(
    script: ActionScript, tick_seconds: float, total_ticks: int
) -> TrajectoryBundle:
    """Render a script into per-pedal displacement trajectories.

    Each motion is a linear ramp from the pedal's current displacement to
    its target, spanning the profile-scaled tick count; the target is hit
    exactly on the motion's final tick.
    """
    if tick_seconds <= 0:
        raise ValueError("tick_seconds must be positive")
    if total_ticks <= script.last_tick:
        raise ValueError("total_ticks does not cover the script")
    positions = {
        p: np.full(total_ticks, script.initial_positions.get(p, 0.0), dtype=float)
        for p in PEDALS
    }
    intervals = []
    for e in script.entries:
        pos = positions[e.pedal]
        cur = pos[e.start_tick]
        target = e.extent if e.is_press else 0.0
        ramp = np.linspace(cur, target, e.motion_ticks + 1)
        pos[e.start_tick : e.end_tick + 1] = ramp
        pos[e.end_tick :] = target
        intervals.append(ActionInterval(e.action, e.start_tick, e.end_tick))
    trajectories = {
        p: PedalTrajectory(p, positions[p], tick_seconds) for p in PEDALS
    }
    return TrajectoryBundle(trajectories, intervals, tick_seconds, total_ticks)


def perturb_trajectory(
    bundle: TrajectoryBundle, scale: float, seed: int, burst_duty: float | None = None
) -> TrajectoryBundle:
    """Add smoothed displacement jitter wherever a pedal is engaged.

    Models the unsteady pressure of a distracted driver: zero-mean noise
    with per-sample standard deviation `scale`, band-limited by a 31-tick
    Hann kernel (a few hertz at the default rate), slow enough to survive
    wavelet denoising yet quick enough to modulate within one action.

    With `burst_duty` set, the jitter arrives in intermittent corrective
    bursts covering roughly that fraction of the engaged time instead of
    continuously; burst size stays `scale`.
    """
    if scale < 0:
        raise ValueError("scale must be >= 0")
    if burst_duty is not None and not 0.0 < burst_duty <= 1.0:
        raise ValueError("burst_duty must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    kernel = hann(31)
    kernel = kernel / math.sqrt(float(np.sum(kernel**2)))
    out = {}
    for pedal, traj in bundle.trajectories.items():
        pos = traj.positions.copy()
        if scale > 0:
            n = pos.size
            wiggle = np.convolve(rng.standard_normal(n), kernel, mode="same")
            if burst_duty is not None:
                field = np.convolve(rng.standard_normal(n), hann(41), mode="same")
                threshold = np.quantile(field, 1.0 - burst_duty)
                envelope = np.convolve(
                    (field > threshold).astype(float), hann(15) / hann(15).sum(), mode="same"
                )
                wiggle = wiggle * envelope
            engaged = pos > 0.01
            pos = np.clip(pos + scale * wiggle * engaged, 0.0, 1.0)
        out[pedal] = PedalTrajectory(pedal, pos, traj.tick_seconds)
    return TrajectoryBundle(
        out, [replace(iv) for iv in bundle.intervals], bundle.tick_seconds, bundle.total_ticks
    )


def trajectory_to_rss(bundle: TrajectoryBundle, model: ChannelModel) -> RssTrace:
    """Map pedal trajectories to a clean RSS trace with ground truth."""
    lengths = {t.positions.size for t in bundle.trajectories.values()}
    ticks = {t.tick_seconds for t in bundle.trajectories.values()}
    if len(lengths) != 1 or len(ticks) != 1:
        raise ValueError("trajectories must share tick count and tick_seconds")
    n = lengths.pop()
    tick_seconds = ticks.pop()
    samples = np.full(n, model.base_strength_db, dtype=float)
    for pedal, traj in bundle.trajectories.items():
        samples += model.response(pedal, traj.positions)
    t = np.arange(n) * tick_seconds
    samples += model.multipath_ripple_db * np.sin(2.0 * math.pi * t / model.ripple_period_s)
    samples = np.maximum(samples, model.noise_floor_db)
    return RssTrace(
        samples=samples,
        tick_seconds=tick_seconds,
        ground_truth=[replace(iv) for iv in bundle.intervals],
        snr_db=None,
    )


def add_noise(trace: RssTrace, target_snr_db: float, seed: int) -> RssTrace:
    """Add zero-mean Gaussian noise scaled to hit the target SNR.

    SNR is defined as 10*log10(signal variance around its mean / noise
    variance) over the whole trace. The drawn noise is rescaled by its own
    empirical standard deviation, so the measured SNR matches the target
    exactly and the output is deterministic per seed.
    """
    if trace.snr_db is not None:
        raise ValueError("trace already carries noise")
    if not math.isfinite(target_snr_db):
        raise ValueError("target SNR must be finite")
    signal_var = float(trace.samples.var())
    if signal_var <= 0.0:
        raise ValueError("trace has zero signal variance; SNR undefined")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(trace.samples.size)
    z_std = float(z.std())
    if z_std == 0.0:
        raise ValueError("degenerate noise draw")
    sigma = math.sqrt(signal_var / 10.0 ** (target_snr_db / 10.0))
    noisy = trace.samples + z * (sigma / z_std)
    return RssTrace(
        samples=noisy,
        tick_seconds=trace.tick_seconds,
        ground_truth=[replace(iv) for iv in trace.ground_truth],
        snr_db=float(target_snr_db),
    )


def script_from_template(
    label: str,
    *,
    start_tick: int = 200,
    durations=48,
    gaps=40,
    extents=0.8,
    profiles="regular",
    initial_extent: float = 0.7,
) -> ActionScript:
    """Build an activity script from one of the named templates.

    `durations`, `gaps`, `extents` and `profiles` may be scalars or
    per-action sequences. Pedals the template expects engaged start at
    `initial_extent`; the first press of such a pedal is capped below by it.
    """
    if label not in ACTIVITY_TEMPLATES:
        raise ValueError(f"no template for activity {label!r}")
    actions = ACTIVITY_TEMPLATES[label]
    m = len(actions)

    def seq(v):
        if np.isscalar(v) or isinstance(v, str):
            return [v] * m
        if len(v) != m:
            raise ValueError("per-action parameter length mismatch")
        return list(v)

    durations = seq(durations)
    gaps = seq(gaps)
    extents = seq(extents)
    profiles = seq(profiles)
    initial = {p: initial_extent for p in ACTIVITY_INITIAL_PEDALS[label]}
    entries = []
    tick = start_tick
    held = dict(initial)
    for action, dur, gap, ext, prof in zip(actions, durations, gaps, extents, profiles):
        pedal = ACTION_PEDAL[action]
        extent = float(ext)
        if action.endswith("P") and held.get(pedal, 0.0) >= extent:
            extent = min(1.0, held[pedal] + 0.15)
        entry = ActionEntry(action, tick, int(dur), extent, prof)
        held[pedal] = extent if entry.is_press else 0.0
        entries.append(entry)
        tick = entry.end_tick + int(gap)
    return ActionScript(entries, activity_label=label, initial_positions=initial)
