"""Cell bookkeeping and online trajectory classification.

A trajectory is classified sample by sample. The first rule that fires,
in this order, decides its fate:

1. leaves the grid                        -> ``DIVERGED_OUT_OF_BOUNDS``
2. stays near the desired equilibrium     -> ``CONVERGED_DESIRED``
3. stays near a known discovered attractor -> ``MATCHED_PREVIOUS``;
   stays in one unknown cell long enough   -> ``CONVERGED_NEW_FIXED_POINT``
4. repeats its own recent cell window      -> ``PERIODIC``
5. follows a previously classified record  -> ``MATCHED_PREVIOUS``
6. reaches ``t_max``                       -> ``TIMED_OUT``

Rules 4 and 5 work on a compressed history: the cell is stored every
``stride`` steps (about ``tau / n_tau`` of time) and consecutive
duplicates are merged into runs. Cell windows are compared through a
64-bit hash shared by the Python and compiled kernels.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidInputError, InvalidParameterError

OVERFLOW_LIMIT = 1e12
# raw kernel code for a match through a known attractor neighborhood
MATCH_ATTRACTOR = 7

__all__ = [
    "OUT_OF_BOUNDS",
    "CellGrid",
    "Outcome",
    "Classification",
    "ClassifierParams",
    "TrajectoryRecord",
    "AttractorRegistry",
    "OnlineClassifier",
    "classify_online",
    "register",
    "window_hash",
    "storage_stride",
]

_M64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


class _OutOfBounds:
    __slots__ = ()

    def __repr__(self):
        return "OUT_OF_BOUNDS"

    def __bool__(self):
        return False


OUT_OF_BOUNDS = _OutOfBounds()


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def window_hash(cells) -> int:
    """64-bit order-sensitive hash of a sequence of flat cell ids."""
    h = len(cells)
    for c in cells:
        h = _mix64((h + _GOLDEN + int(c)) & _M64)
    return h


def storage_stride(r: int, n_tau: int) -> int:
    """Steps between stored samples so that ``n_tau`` of them span one delay."""
    return max(1, int(math.floor((r + 0.5) / n_tau + 0.5)))


@dataclass(frozen=True, eq=False)
class CellGrid:
    """Uniform subdivision of a hyperrectangle, same cell count per axis."""

    lower: np.ndarray
    upper: np.ndarray
    n_disc: int

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64).reshape(-1)
        up = np.asarray(self.upper, dtype=np.float64).reshape(-1)
        if lo.shape != up.shape:
            raise InvalidInputError("lower and upper bounds differ in length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(up)) and np.all(lo < up)):
            raise InvalidInputError("grid bounds must be finite with lower < upper")
        if int(self.n_disc) != self.n_disc or self.n_disc < 1:
            raise InvalidParameterError(f"n_disc must be a positive integer, got {self.n_disc}")
        if self.n_disc ** len(lo) >= 2**62:
            raise InvalidParameterError("grid too fine to index with 64-bit cell ids")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "n_disc", int(self.n_disc))

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> np.ndarray:
        return (self.upper - self.lower) / self.n_disc

    def cell_of(self, point):
        """Multi-index of the cell holding `point`, or :data:`OUT_OF_BOUNDS`.

        The upper face is closed: a coordinate equal to the upper bound falls
        in the last cell.
        """
        idx = []
        n = self.n_disc
        for x, lo, up in zip(point, self.lower, self.upper):
            x = float(x)
            if not (lo <= x <= up):
                return OUT_OF_BOUNDS
            k = int(math.floor((x - lo) / (up - lo) * n))
            idx.append(n - 1 if k >= n else k)
        return tuple(idx)

    def flat(self, multi) -> int:
        f = 0
        for k in multi:
            f = f * self.n_disc + int(k)
        return f

    def unflat(self, flat: int) -> tuple:
        out = []
        for _ in range(self.dimension):
            flat, k = divmod(int(flat), self.n_disc)
            out.append(k)
        return tuple(reversed(out))

    def center(self, multi) -> np.ndarray:
        return self.lower + (np.asarray(multi, dtype=np.float64) + 0.5) * self.widths

    def neighborhood(self, multi, radius: int) -> list[int]:
        """Flat ids of all in-grid cells within Chebyshev `radius` of `multi`."""
        ranges = [
            range(max(0, k - radius), min(self.n_disc, k + radius + 1)) for k in multi
        ]
        cells = [()]
        for rg in ranges:
            cells = [c + (k,) for c in cells for k in rg]
        return [self.flat(c) for c in cells]


class Outcome(enum.IntEnum):
    CONVERGED_DESIRED = 0
    DIVERGED_OUT_OF_BOUNDS = 1
    CONVERGED_NEW_FIXED_POINT = 2
    PERIODIC = 3
    MATCHED_PREVIOUS = 4
    TIMED_OUT = 5
    DIVERGED_NUMERIC = 6


@dataclass(frozen=True)
class Classification:
    """Fate of one trajectory.

    For ``MATCHED_PREVIOUS`` the record id it joined is in `matched_id` and
    that record's own final class in `inherited`. ``via`` tells whether the
    match came from a known attractor cell or from trajectory reuse.
    """

    kind: Outcome
    cell: Optional[int] = None
    matched_id: Optional[int] = None
    inherited: Optional[Outcome] = None
    via: Optional[str] = None

    @property
    def final(self) -> Outcome:
        return self.inherited if self.kind is Outcome.MATCHED_PREVIOUS else self.kind

    @property
    def converged(self) -> bool:
        return self.final is Outcome.CONVERGED_DESIRED

    @property
    def divergent(self) -> bool:
        return not self.converged

    def label(self) -> str:
        if self.kind is Outcome.MATCHED_PREVIOUS:
            return f"matched_previous({self.matched_id}:{self.inherited.name.lower()})"
        return self.kind.name.lower()


@dataclass(frozen=True)
class ClassifierParams:
    n_tau: int = 10
    dwell_factor: float = 1.0
    ghost_factor: float = 2.0
    neighborhood: int = 1
    k_rep: int = 2
    m_match: Optional[int] = None
    t_max: float = 1000.0
    reuse: bool = True

    def __post_init__(self):
        if self.n_tau < 1:
            raise InvalidParameterError("n_tau must be >= 1")
        if self.dwell_factor < 1.0:
            raise InvalidParameterError("dwell_factor must be >= 1")
        if self.ghost_factor < self.dwell_factor:
            raise InvalidParameterError("ghost_factor must be >= dwell_factor")
        if self.neighborhood < 0:
            raise InvalidParameterError("neighborhood radius must be >= 0")
        if self.k_rep < 2:
            raise InvalidParameterError("k_rep must be >= 2")
        if self.m_match is not None and self.m_match < 1:
            raise InvalidParameterError("m_match must be >= 1")
        if not self.t_max > 0:
            raise InvalidParameterError("t_max must be positive")

    @property
    def match_length(self) -> int:
        return self.n_tau if self.m_match is None else self.m_match


@dataclass
class TrajectoryRecord:
    id: int
    ich: np.ndarray
    ich_distance: float
    classification: Classification
    run_cells: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    run_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    n_steps: int = 0
    closest_state: Optional[np.ndarray] = None
    closest_distance: float = math.inf
    strategy: str = ""
    # nearest sample per stored run, and the nearest point inherited from a
    # matched record beyond this record's own runs
    run_d2: Optional[np.ndarray] = None
    run_states: Optional[np.ndarray] = None
    tail_state: Optional[np.ndarray] = None
    tail_distance: float = math.inf

    @property
    def stored_steps(self) -> int:
        return int(self.run_counts.sum())

    def closest_from(self, run: int):
        """Nearest point of the trajectory from stored run `run` onward.

        Returns ``(state, distance)``; ``(None, inf)`` when nothing was
        measured there.
        """
        state, dist = self.tail_state, self.tail_distance
        if self.run_d2 is not None and run < len(self.run_d2):
            k = run + int(np.argmin(self.run_d2[run:]))
            d = math.sqrt(self.run_d2[k]) if math.isfinite(self.run_d2[k]) else math.inf
            if d < dist:
                state, dist = self.run_states[k], d
        return state, dist


class AttractorRegistry:
    """Known attractor cells plus every classified trajectory.

    Discovered fixed points are indexed together with their Chebyshev
    neighborhood so later trajectories settling there are matched after a
    normal convergence dwell. Trajectory windows of ``m_match`` runs are
    indexed by hash for the reuse rule.
    """

    def __init__(self, grid: CellGrid, equilibrium, params: ClassifierParams):
        self.grid = grid
        self.params = params
        cell = grid.cell_of(equilibrium)
        if cell is OUT_OF_BOUNDS:
            raise InvalidInputError("desired equilibrium lies outside the grid")
        self.desired_cell = cell
        self.desired_region = frozenset(grid.neighborhood(cell, params.neighborhood))
        self.records: list[TrajectoryRecord] = []
        self._by_id: dict[int, TrajectoryRecord] = {}
        self.attractors: dict[int, int] = {}  # flat cell -> discovering record id
        self.known: dict[int, int] = {}  # neighborhood cell -> discovering record id
        self.reuse_index: dict[int, int] = {}  # window hash -> record id
        self.reuse_end: dict[int, int] = {}  # window hash -> index of its last run

    def __len__(self):
        return len(self.records)

    def record(self, rid: int) -> TrajectoryRecord:
        return self._by_id[rid]

    def final_class(self, rid: int) -> Outcome:
        return self._by_id[rid].classification.final

    def add_attractor(self, flat_cell: int, rid: int) -> None:
        if flat_cell in self.attractors:
            return
        self.attractors[flat_cell] = rid
        for c in self.grid.neighborhood(self.grid.unflat(flat_cell), self.params.neighborhood):
            if c not in self.desired_region:
                self.known.setdefault(c, rid)

    def register(self, record: TrajectoryRecord) -> "AttractorRegistry":
        if record.id in self._by_id:
            raise InvalidInputError(f"duplicate trajectory record id {record.id}")
        self.records.append(record)
        self._by_id[record.id] = record
        cls = record.classification
        if cls.kind is Outcome.CONVERGED_NEW_FIXED_POINT and cls.cell is not None:
            self.add_attractor(cls.cell, record.id)
        if self.params.reuse:
            m = self.params.match_length
            cells = [int(c) for c in record.run_cells]
            for k in range(len(cells) - m + 1):
                hw = window_hash(cells[k:k + m])
                if hw not in self.reuse_index:
                    self.reuse_index[hw] = record.id
                    self.reuse_end[hw] = k + m - 1
        return self

    def resolve(self, code: int, cell: int, matched: int, via: str | None = None) -> Classification:
        """Turn raw kernel output into a :class:`Classification`."""
        if code == MATCH_ATTRACTOR:
            code, via = Outcome.MATCHED_PREVIOUS, "attractor"
        elif code == Outcome.MATCHED_PREVIOUS and via is None:
            via = "trajectory"
        kind = Outcome(code)
        if kind is Outcome.MATCHED_PREVIOUS:
            return Classification(kind, matched_id=matched, inherited=self.final_class(matched), via=via)
        if kind in (Outcome.CONVERGED_NEW_FIXED_POINT, Outcome.DIVERGED_OUT_OF_BOUNDS):
            return Classification(kind, cell=cell if cell >= 0 else None)
        return Classification(kind)


def register(registry: AttractorRegistry, record: TrajectoryRecord) -> AttractorRegistry:
    return registry.register(record)


class OnlineClassifier:
    """Stateful rule engine fed one sample at a time.

    :meth:`push` returns ``None`` while undecided and a raw decision tuple
    ``(code, cell, matched_id, via)`` once a rule fires.
    """

    def __init__(self, registry: AttractorRegistry, tau: float, h: float, r: int):
        p = registry.params
        self.registry = registry
        self.grid = registry.grid
        self.h = float(h)
        self.conv_time = tau * p.dwell_factor
        self.ghost_time = tau * p.ghost_factor
        self.t_max = p.t_max
        self.stride = storage_stride(r, p.n_tau)
        self.window = p.n_tau
        self.k_rep = p.k_rep
        self.m = p.match_length
        self.reuse = p.reuse
        self.radius = p.neighborhood
        self.i = 0
        self.prev_cell = -1
        self.n_desired = 0
        self.n_known = 0
        self.n_same = 0
        self.in_desired = False
        self.known_id = -1
        self.run_cells: list[int] = []
        self.run_counts: list[int] = []
        self.seen: dict[int, int] = {}

    def _extent_exceeds_radius(self, cells) -> bool:
        multis = [self.grid.unflat(c) for c in cells]
        for axis in zip(*multis):
            if max(axis) - min(axis) > 2 * self.radius:
                return True
        return False

    def push(self, y):
        i = self.i
        self.i += 1
        if not all(math.isfinite(v) for v in y):
            return (int(Outcome.DIVERGED_NUMERIC), -1, -1, None)
        multi = self.grid.cell_of(y)
        if multi is OUT_OF_BOUNDS:
            return (int(Outcome.DIVERGED_OUT_OF_BOUNDS), -1, -1, None)
        cell = self.grid.flat(multi)
        if any(abs(v) > OVERFLOW_LIMIT for v in y):
            return (int(Outcome.DIVERGED_NUMERIC), cell, -1, None)
        reg = self.registry
        if cell != self.prev_cell:
            self.in_desired = cell in reg.desired_region
            self.known_id = reg.known.get(cell, -1)
            self.n_same = 0
        else:
            self.n_same += 1
        self.prev_cell = cell

        # rule 2: convergence dwell near the desired equilibrium
        self.n_desired = self.n_desired + 1 if self.in_desired else 0
        if self.in_desired and (self.n_desired - 1) * self.h > self.conv_time:
            return (int(Outcome.CONVERGED_DESIRED), cell, -1, None)
        # rule 3: known attractors, then new fixed points
        self.n_known = self.n_known + 1 if self.known_id >= 0 else 0
        if self.known_id >= 0:
            if (self.n_known - 1) * self.h > self.conv_time:
                return (MATCH_ATTRACTOR, cell, self.known_id, "attractor")
        elif not self.in_desired and self.n_same * self.h > self.ghost_time:
            return (int(Outcome.CONVERGED_NEW_FIXED_POINT), cell, -1, None)

        if i % self.stride == 0:
            if self.run_cells and self.run_cells[-1] == cell:
                self.run_counts[-1] += 1
            else:
                self.run_cells.append(cell)
                self.run_counts.append(1)
                n = len(self.run_cells)
                # rule 4: periodic repetition within this trajectory
                if n >= self.window:
                    win = self.run_cells[n - self.window:]
                    if self._extent_exceeds_radius(win):
                        hw = window_hash(win)
                        cnt = self.seen.get(hw, 0) + 1
                        self.seen[hw] = cnt
                        if cnt >= self.k_rep:
                            return (int(Outcome.PERIODIC), cell, -1, None)
                # rule 5: reuse of an earlier trajectory
                if self.reuse and n >= self.m:
                    rid = reg.reuse_index.get(window_hash(self.run_cells[n - self.m:]), -1)
                    if rid >= 0:
                        return (int(Outcome.MATCHED_PREVIOUS), cell, rid, "trajectory")
        if i * self.h >= self.t_max:
            return (int(Outcome.TIMED_OUT), cell, -1, None)
        return None


def classify_online(
    registry: AttractorRegistry,
    stream: Iterable,
    tau: float,
    h: float,
    r: int,
) -> Classification:
    """Classify a stream of ``(time, state)`` samples starting at ``t = 0``.

    Raises :class:`InvalidInputError` for an empty stream or one that ends
    before any rule fires.
    """
    clf = OnlineClassifier(registry, tau, h, r)
    empty = True
    for _, y in stream:
        empty = False
        raw = clf.push(np.asarray(y, dtype=np.float64))
        if raw is not None:
            code, cell, matched, via = raw
            return registry.resolve(code, cell, matched, via)
    if empty:
        raise InvalidInputError("empty sample stream")
    raise InvalidInputError("stream ended before the trajectory could be classified")
