"""Domain types shared by every module: radio grid, scenario, allocation.

All powers and gains are stored in linear units (mW and power ratios).
Conversions from dB only happen in configuration parsing and reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# Sentinel latency for messages that never reach a receiver.
LARGE = 1e10


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def _frozen(a, dtype=None) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RadioGrid:
    """F frequency slots by T timeslots; an RB is the pair (f, t)."""

    F: int
    T: int

    def __post_init__(self):
        if self.F < 1 or self.T < 1:
            raise ValueError(f"radio grid needs F >= 1 and T >= 1, got F={self.F}, T={self.T}")

    @property
    def n_rbs(self) -> int:
        return self.F * self.T


@dataclass(frozen=True, eq=False)
class Scenario:
    """A fixed network snapshot for one scheduling interval.

    ``omega[i, m, t]`` marks the earliest slot in which VUE ``i`` may send
    its own message ``m``.  ``slot_times`` maps local slot indices to the
    absolute timeslot they represent; it is ``arange(T)`` for a full
    scenario and the group's timeslot set for a clustered slice.
    ``can_transmit`` and ``vue_ids``/``message_ids`` are only interesting
    for slices produced by the clustering module.
    """

    grid: RadioGrid
    H: np.ndarray
    acir: np.ndarray
    noise: float
    p_max: float
    gamma_t: float
    receivers: tuple
    omega: np.ndarray
    t_gen: np.ndarray
    t_d: float = 0.0
    t_p: int = 1
    a_init: Optional[np.ndarray] = None
    slot_times: Optional[np.ndarray] = None
    can_transmit: Optional[np.ndarray] = None
    vue_ids: Optional[np.ndarray] = None
    message_ids: Optional[np.ndarray] = None
    positions: Optional[np.ndarray] = None

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError("H must be a square matrix")
        N = H.shape[0]
        if N < 1:
            raise ValueError("scenario needs at least one VUE")
        off = ~np.eye(N, dtype=bool)
        if np.any(H[off] <= 0) or not np.all(np.isfinite(H)):
            raise ValueError("channel gains H[i, j] must be positive and finite for i != j")
        np.fill_diagonal(H, 0.0)
        object.__setattr__(self, "H", _frozen(H))

        acir = np.array(self.acir, dtype=float).ravel()
        if acir.size != self.grid.F:
            raise ValueError(f"ACIR vector has {acir.size} entries, expected F={self.grid.F}")
        if acir[0] != 1.0:
            raise ValueError("ACIR mask must have lambda_0 = 1")
        if np.any(acir < 0) or np.any(np.diff(acir) > 0):
            raise ValueError("ACIR mask must be nonnegative and nonincreasing")
        object.__setattr__(self, "acir", _frozen(acir))

        if not (self.noise > 0 and np.isfinite(self.noise)):
            raise ValueError("noise power must be positive")
        if not self.p_max > 0:
            raise ValueError("p_max must be positive")
        if self.gamma_t < 0:
            raise ValueError("gamma_t must be nonnegative")
        if int(self.t_p) != self.t_p or self.t_p < 1:
            raise ValueError("relay processing delay t_p must be an integer >= 1")

        if len(self.receivers) != N:
            raise ValueError("need one receiver set per VUE")
        recv = []
        for i, r in enumerate(self.receivers):
            r = frozenset(int(j) for j in r)
            if i in r or any(j < 0 or j >= N for j in r):
                raise ValueError(f"receiver set of VUE {i} must be a subset of the other VUEs")
            recv.append(r)
        object.__setattr__(self, "receivers", tuple(recv))

        omega = np.array(self.omega, dtype=bool)
        if omega.ndim != 3 or omega.shape[0] != N or omega.shape[2] != self.grid.T:
            raise ValueError(f"omega must have shape (N, M, T) = ({N}, M, {self.grid.T})")
        per_msg = omega.sum(axis=(0, 2))
        if np.any(per_msg != 1):
            bad = np.flatnonzero(per_msg != 1)
            raise ValueError(f"messages {bad.tolist()} do not have exactly one generator slot")
        object.__setattr__(self, "omega", _frozen(omega))
        M = omega.shape[1]

        t_gen = np.array(self.t_gen, dtype=float).ravel()
        if t_gen.size != M:
            raise ValueError("t_gen needs one entry per message")
        object.__setattr__(self, "t_gen", _frozen(t_gen))

        a_init = np.zeros((N, N)) if self.a_init is None else np.array(self.a_init, dtype=float)
        if a_init.shape != (N, N):
            raise ValueError("a_init must be N x N")
        object.__setattr__(self, "a_init", _frozen(a_init))

        st = np.arange(self.grid.T) if self.slot_times is None else np.array(self.slot_times)
        if st.shape != (self.grid.T,) or np.any(np.diff(st) <= 0):
            raise ValueError("slot_times must be strictly increasing, one per timeslot")
        object.__setattr__(self, "slot_times", _frozen(st.astype(int)))

        ct = np.ones(N, dtype=bool) if self.can_transmit is None else np.array(self.can_transmit, dtype=bool)
        object.__setattr__(self, "can_transmit", _frozen(ct))
        ids = np.arange(N) if self.vue_ids is None else np.array(self.vue_ids)
        object.__setattr__(self, "vue_ids", _frozen(ids.astype(int)))
        mids = np.arange(M) if self.message_ids is None else np.array(self.message_ids)
        object.__setattr__(self, "message_ids", _frozen(mids.astype(int)))
        if self.positions is not None:
            object.__setattr__(self, "positions", _frozen(np.asarray(self.positions, dtype=float)))

    # -- construction helpers -------------------------------------------

    @classmethod
    def build(
        cls,
        H,
        *,
        T: int,
        acir: Sequence[float] = (1.0,),
        noise: float = 1.0,
        p_max: float = 1.0,
        gamma_t: float = 1.0,
        receivers=None,
        origins: Optional[Sequence[int]] = None,
        t_gen: Optional[Sequence[float]] = None,
        t_d: float = 0.0,
        t_p: int = 1,
        a_init=None,
        positions=None,
    ) -> "Scenario":
        """Build a scenario from message origins and generation times.

        By default every VUE owns exactly one message generated at t = 0
        and wants to reach every other VUE.
        """
        H = np.asarray(H, dtype=float)
        N = H.shape[0]
        origins = list(range(N)) if origins is None else list(origins)
        M = len(origins)
        t_gen = np.zeros(M) if t_gen is None else np.asarray(t_gen, dtype=float)
        if receivers is None:
            receivers = [set(range(N)) - {i} for i in range(N)]
        omega = np.zeros((N, M, T), dtype=bool)
        for m, (i, tg) in enumerate(zip(origins, t_gen)):
            t_avail = int(np.ceil(tg + t_d - 1e-12))
            if not 0 <= t_avail < T:
                raise ValueError(f"message {m} becomes available at t={t_avail}, outside 0..{T - 1}")
            omega[i, m, t_avail] = True
        acir = np.asarray(acir, dtype=float)
        return cls(
            grid=RadioGrid(acir.size, T),
            H=H,
            acir=acir,
            noise=noise,
            p_max=p_max,
            gamma_t=gamma_t,
            receivers=tuple(receivers),
            omega=omega,
            t_gen=t_gen,
            t_d=t_d,
            t_p=t_p,
            a_init=a_init,
            positions=positions,
        )

    # -- derived quantities ---------------------------------------------

    @property
    def N(self) -> int:
        return self.H.shape[0]

    @property
    def M(self) -> int:
        return self.omega.shape[1]

    @property
    def F(self) -> int:
        return self.grid.F

    @property
    def T(self) -> int:
        return self.grid.T

    def origin(self, m: int) -> int:
        return int(np.flatnonzero(self.omega[:, m, :].any(axis=1))[0])

    def available_time(self, m: int) -> int:
        """Absolute time of the earliest slot in which message m may be sent."""
        t_local = int(np.flatnonzero(self.omega[:, m, :].any(axis=0))[0])
        return int(self.slot_times[t_local])

    def messages_of(self, i: int) -> list:
        return np.flatnonzero(self.omega[i].any(axis=1)).tolist()

    def acir_matrix(self) -> np.ndarray:
        """L[f', f] = lambda_{|f' - f|}."""
        idx = np.arange(self.F)
        return self.acir[np.abs(idx[:, None] - idx[None, :])]

    def replace(self, **changes) -> "Scenario":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return Scenario(**fields)


@dataclass(eq=False)
class Allocation:
    """A solved (or hand-made) schedule and power allocation.

    Shapes: X (N, M, F, T), P (N, F, T), Y (N, N, F, T), W (N, M, T),
    Z (N, N), A (N, N, T), tau (N, M).  When messages are fragmented the
    second axis of X indexes packets instead of messages.
    """

    X: np.ndarray
    P: np.ndarray
    Y: np.ndarray
    W: np.ndarray
    Z: Optional[np.ndarray] = None
    A: Optional[np.ndarray] = None
    tau: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def zeros(cls, scenario: Scenario, n_packets: Optional[int] = None) -> "Allocation":
        N, M, F, T = scenario.N, scenario.M, scenario.F, scenario.T
        K = M if n_packets is None else n_packets
        return cls(
            X=np.zeros((N, K, F, T), dtype=bool),
            P=np.zeros((N, F, T)),
            Y=np.zeros((N, N, F, T), dtype=bool),
            W=np.zeros((N, M, T), dtype=bool),
        )

    @property
    def transmitting(self) -> np.ndarray:
        """X-tilde: (N, F, T) count of messages scheduled per RB."""
        return self.X.sum(axis=1)


def gamma_bar(gamma_t: float) -> float:
    if gamma_t < 0:
        raise ValueError("gamma_t must be nonnegative")
    return gamma_t / (1.0 + gamma_t)


def received_power(P: np.ndarray, scenario: Scenario) -> np.ndarray:
    """R[j, f, t]: total power (desired + interference) at j in RB (f, t)."""
    leak = np.einsum("kgt,gf->kft", P, scenario.acir_matrix())
    return np.einsum("kft,kj->jft", leak, scenario.H)


def sinr_tensor(P: np.ndarray, scenario: Scenario, noise: Optional[float] = None) -> np.ndarray:
    """SINR of every link (i, j) in every RB, shape (N, N, F, T)."""
    noise = scenario.noise if noise is None else noise
    S = P[:, None, :, :] * scenario.H[:, :, None, None]
    R = received_power(P, scenario)[None]
    with np.errstate(divide="ignore", invalid="ignore"):
        return S / (noise + R - S)


def sinr(alloc: Allocation, scenario: Scenario, i: int, j: int, f: int, t: int) -> float:
    P = alloc.P
    S = P[i, f, t] * scenario.H[i, j]
    lam = scenario.acir[np.abs(np.arange(scenario.F) - f)]
    R = float(np.sum(P[:, :, t] * lam[None, :] * scenario.H[:, j][:, None]))
    return S / (scenario.noise + R - S)


# -- independent constraint auditor -----------------------------------------


@dataclass(frozen=True)
class AuditOptions:
    half_duplex: bool = True
    multihop: bool = True
    sinr_rtol: float = 1e-6
    power_atol: float = 1e-7
    repetitions: int = 1
    packets: Optional[Sequence[Sequence[int]]] = None  # message -> packet ids


@dataclass(frozen=True)
class Violation:
    constraint: str
    index: tuple
    detail: str


@dataclass
class ViolationReport:
    violations: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def cites(self, constraint: str) -> bool:
        return any(v.constraint == constraint for v in self.violations)

    def add(self, constraint, index, detail):
        self.violations.append(Violation(constraint, tuple(int(k) for k in index), detail))

    def summary(self) -> str:
        if not self.violations:
            return "feasible"
        counts = {}
        for v in self.violations:
            counts[v.constraint] = counts.get(v.constraint, 0) + 1
        return ", ".join(f"{k}: {n}" for k, n in sorted(counts.items()))


def _packet_map(scenario: Scenario, opts: AuditOptions):
    if opts.packets is None:
        return [[m] for m in range(scenario.M)]
    return [list(p) for p in opts.packets]


def expected_receptions(X: np.ndarray, Y: np.ndarray, scenario: Scenario, opts: AuditOptions = AuditOptions()) -> np.ndarray:
    """Evaluate the reception rule for every (j, m, t) directly from X and Y.

    With ``opts.repetitions`` = rho > 1 a message counts as received in the
    slot of its rho-th high-SINR copy.
    """
    packets = _packet_map(scenario, opts)
    N, M, T = scenario.N, scenario.M, scenario.T
    Xb, Yb = X.astype(bool), Y.astype(bool)
    # hit[i, j, p, f, t] = X[i, p, f, t] and Y[i, j, f, t]
    hit = np.einsum("ipft,ijft->jpt", Xb.astype(np.int64), Yb.astype(np.int64)) > 0
    got = np.zeros((N, M, T), dtype=bool)
    for m, ps in enumerate(packets):
        got[:, m, :] = np.all(hit[:, ps, :], axis=1)
        got[scenario.origin(m), m, :] = False  # a relay echoing m back to its source is not a reception
    W = np.zeros((N, M, T), dtype=bool)
    count = np.cumsum(got, axis=2)
    for j in range(N):
        for m in range(M):
            for t in range(T):
                if count[j, m, t] >= opts.repetitions:
                    W[j, m, t] = True
                    break
    return W


def audit_allocation(alloc: Allocation, scenario: Scenario, opts: AuditOptions = AuditOptions()) -> ViolationReport:
    """Check an allocation against every scheduling-model constraint.

    The SINR condition is re-evaluated from the raw powers instead of
    trusting any big-M relaxation.  An empty report means feasible.
    """
    N, M, F, T = scenario.N, scenario.M, scenario.F, scenario.T
    packets = _packet_map(scenario, opts)
    K = sum(len(p) for p in packets)
    shapes = {"X": (N, K, F, T), "P": (N, F, T), "Y": (N, N, F, T), "W": (N, M, T)}
    for name, shape in shapes.items():
        got = np.shape(getattr(alloc, name))
        if got != shape:
            raise ValueError(f"allocation {name} has shape {got}, scenario expects {shape}")

    report = ViolationReport()
    X = np.asarray(alloc.X).astype(bool)
    P = np.asarray(alloc.P, dtype=float)
    Y = np.asarray(alloc.Y).astype(bool)
    W = np.asarray(alloc.W).astype(bool)
    Xt = X.sum(axis=1)
    pmax, atol = scenario.p_max, opts.power_atol * scenario.p_max

    for idx in zip(*np.nonzero(Xt > 1)):
        report.add("Xift", idx, f"{Xt[idx]} messages in one RB")
    for idx in zip(*np.nonzero(~scenario.can_transmit[:, None, None] & (Xt > 0))):
        report.add("Xift", idx, "VUE may not transmit in this slice")
    tot = P.sum(axis=1)
    for idx in zip(*np.nonzero(tot > pmax + atol)):
        report.add("power_total", idx, f"total power {tot[idx]:.6g} > {pmax:.6g}")
    for idx in zip(*np.nonzero((P < -atol) | (P > pmax * np.minimum(Xt, 1) + atol))):
        report.add("PConstrainedByX", idx, f"power {P[idx]:.6g} with {Xt[idx]} scheduled")

    gam = sinr_tensor(P, scenario)
    for i, j, f, t in zip(*np.nonzero(Y)):
        if i == j:
            report.add("Yijft", (i, j, f, t), "self link")
            continue
        g = gam[i, j, f, t]
        if not g >= scenario.gamma_t * (1.0 - opts.sinr_rtol):
            report.add("Yijft", (i, j, f, t), f"SINR {g:.6g} < threshold {scenario.gamma_t:.6g}")
        if opts.half_duplex and Xt[j, :, t].sum() > 0:
            report.add("half_duplex", (i, j, f, t), "receiver transmits in the same timeslot")

    expected = expected_receptions(X, Y, scenario, opts)
    if opts.repetitions > 1:
        # Counting rows only bound W from above: a reception may be
        # recorded no earlier than the rho-th copy, and at most once.
        reached = np.cumsum(expected, axis=2) > 0
        for idx in zip(*np.nonzero(W & ~reached)):
            report.add("Wjmt", idx, f"W=1 before {opts.repetitions} high-SINR copies arrived")
        for idx in zip(*np.nonzero(W.sum(axis=2) > 1)):
            report.add("Wjmt", idx, "message recorded as received more than once")
    else:
        for idx in zip(*np.nonzero(W != expected)):
            report.add("Wjmt", idx, f"W={int(W[idx])} but the reception rule gives {int(expected[idx])}")

    owner_time = {}
    for m in range(M):
        owner_time[m] = (scenario.origin(m), scenario.available_time(m))
    times = scenario.slot_times
    packet_msg = {p: m for m, ps in enumerate(packets) for p in ps}
    for i, p, f, t in zip(*np.nonzero(X)):
        m = packet_msg[p]
        owner, t_av = owner_time[m]
        if owner == i and times[t] >= t_av:
            continue
        if opts.multihop:
            ok = times <= times[t] - scenario.t_p
            if W[i, m, ok].any():
                continue
        report.add("Ximft", (i, p, f, t), "message not held by the transmitter")
    return report


def link_feasible(scenario: Scenario) -> np.ndarray:
    """D[i, j]: j can decode i at full power with no interference (boundary inclusive)."""
    D = scenario.H >= scenario.gamma_t * scenario.noise / scenario.p_max
    np.fill_diagonal(D, False)
    return D
