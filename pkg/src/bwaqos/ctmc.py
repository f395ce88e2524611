"""Continuous-time Markov chain induced by the admission policy.

The chain is generated from :func:`bwaqos.cac.decide` and
:func:`bwaqos.cac.restore_on_departure` directly, so the analytical model
and the simulator run the same policy.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cac import ALL_REQUESTS, RejectReason, RequestKind, decide, restore_on_departure
from .model import CLASSES, CellConfig, SystemState, TrafficModel, used_bandwidth


class StateSpaceTooLargeError(RuntimeError):
    pass


class SolverError(RuntimeError):
    pass


DEFAULT_STATE_CAP = 2_000_000


@dataclass
class StateSpace:
    states: list[SystemState]
    index: dict[SystemState, int] = field(repr=False)

    def __len__(self):
        return len(self.states)

    def __contains__(self, s):
        return s in self.index


def _events(traffic: TrafficModel | None):
    """(request, rate) pairs that can fire; everything if traffic is None."""
    for req in ALL_REQUESTS:
        if traffic is None:
            yield req, 1.0
            continue
        rate = traffic.new(req.cls) if req.kind is RequestKind.NEW else traffic.handoff(req.cls)
        if rate > 0:
            yield req, rate


def transitions(s: SystemState, cfg: CellConfig, traffic: TrafficModel | None = None):
    """Yield (target, rate) for every enabled move out of ``s``.

    With ``traffic=None`` rates are placeholders (1 per arrival stream,
    count per departure), enough for reachability.
    """
    for req, rate in _events(traffic):
        v = decide(s, req, cfg)
        if v.admitted:
            yield v.next_state, rate
    for c in CLASSES:
        n = s.count(c)
        if n:
            mu = 1.0 if traffic is None else traffic.service(c)
            yield restore_on_departure(s, c, cfg), n * mu


def enumerate_states(cfg: CellConfig, traffic: TrafficModel | None = None,
                     cap: int = DEFAULT_STATE_CAP) -> StateSpace:
    """Breadth-first closure from the empty cell.

    When ``traffic`` is given, arrival streams with zero rate are not
    followed.
    """
    start = cfg.empty_state()
    index = {start: 0}
    states = [start]
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for t, _ in transitions(s, cfg, traffic):
            if t not in index:
                if len(states) >= cap:
                    raise StateSpaceTooLargeError(
                        f"state space exceeds {cap} states")
                index[t] = len(states)
                states.append(t)
                queue.append(t)
    return StateSpace(states, index)


@dataclass
class GeneratorMatrix:
    q: sp.csr_matrix

    @property
    def dimension(self) -> int:
        return self.q.shape[0]


def build_generator(space: StateSpace, traffic: TrafficModel, cfg: CellConfig) -> GeneratorMatrix:
    rows, cols, vals = [], [], []
    for i, s in enumerate(space.states):
        for t, rate in transitions(s, cfg, traffic):
            if t == s:
                continue
            j = space.index.get(t)
            if j is None:
                raise SolverError(f"transition {s} -> {t} leaves the state space")
            rows.append(i)
            cols.append(j)
            vals.append(rate)
    n = len(space)
    off = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    off.sum_duplicates()
    q = off - sp.diags(np.asarray(off.sum(axis=1)).ravel())
    return GeneratorMatrix(q.tocsr())


@dataclass
class StationaryDistribution:
    pi: np.ndarray
    residual: float


def _power_iteration(q: sp.csr_matrix, tol: float, max_iter: int) -> np.ndarray:
    # uniformised DTMC P = I + Q / Lambda
    lam = float(-q.diagonal().min()) * 1.0001 or 1.0
    pt = (sp.identity(q.shape[0], format="csr") + q / lam).T.tocsr()
    pi = np.full(q.shape[0], 1.0 / q.shape[0])
    for _ in range(max_iter):
        nxt = pt @ pi
        nxt /= nxt.sum()
        if np.abs(nxt - pi).max() < tol:
            return nxt
        pi = nxt
    raise SolverError(f"power iteration did not converge in {max_iter} steps")


def solve_stationary(gen: GeneratorMatrix, direct_limit: int = 50_000,
                     tol: float = 1e-10, max_iter: int = 1_000_000) -> StationaryDistribution:
    """Solve pi Q = 0, sum(pi) = 1."""
    q = gen.q
    n = gen.dimension
    if n == 1:
        return StationaryDistribution(np.ones(1), 0.0)
    if n <= direct_limit:
        a = q.T.tolil()
        a[n - 1, :] = np.ones(n)
        b = np.zeros(n)
        b[-1] = 1.0
        try:
            pi = spla.spsolve(a.tocsc(), b)
        except RuntimeError as exc:
            raise SolverError(str(exc)) from exc
        if not np.all(np.isfinite(pi)):
            raise SolverError("singular generator (is the chain irreducible?)")
    else:
        pi = _power_iteration(q, tol, max_iter)
    if pi.min() < -1e-9:
        raise SolverError(f"negative stationary mass {pi.min():.3g}")
    pi = np.where(pi < 0, 0.0, pi)
    pi /= pi.sum()
    residual = float(np.abs(q.T @ pi).max())
    return StationaryDistribution(pi, residual)


@dataclass(frozen=True)
class QosReport:
    """Per-class probabilities ordered (UGS, rtPS, nrtPS)."""

    ncbp: tuple[float, float, float]
    hcdp: tuple[float, float, float]
    cop: tuple[float, float, float]
    bu: float

    def metrics(self) -> dict[str, float]:
        out = {}
        for name in ("ncbp", "hcdp", "cop"):
            for c, v in zip(CLASSES, getattr(self, name)):
                out[f"{name}_{c.value}"] = v
        out["bu"] = self.bu
        return out


METRIC_NAMES = tuple(QosReport((0,) * 3, (0,) * 3, (0,) * 3, 0).metrics())


def qos_report(space: StateSpace, pi: np.ndarray, cfg: CellConfig) -> QosReport:
    """Blocking, dropping and outage masses plus mean utilisation.

    A state counts toward NCBP/HCDP of a class when a new/handoff request of
    that class is rejected there for any reason; it counts toward COP when
    the reason is SINR outage.
    """
    ncbp, hcdp, cop = np.zeros(3), np.zeros(3), np.zeros(3)
    used = np.empty(len(space))
    for i, s in enumerate(space.states):
        p = pi[i]
        used[i] = used_bandwidth(s, cfg)
        for req in ALL_REQUESTS:
            v = decide(s, req, cfg)
            if v.admitted:
                continue
            k = CLASSES.index(req.cls)
            if req.kind is RequestKind.NEW:
                ncbp[k] += p
                if v.reject_reason is RejectReason.OUTAGE:
                    cop[k] += p
            else:
                hcdp[k] += p
    bu = float(pi @ used) / cfg.total_bandwidth
    clip = lambda a: tuple(float(min(max(x, 0.0), 1.0)) for x in a)
    return QosReport(clip(ncbp), clip(hcdp), clip(cop), min(bu, 1.0))


@dataclass
class Solution:
    space: StateSpace
    generator: GeneratorMatrix
    stationary: StationaryDistribution
    report: QosReport


def solve(cfg: CellConfig, traffic: TrafficModel, cap: int = DEFAULT_STATE_CAP,
          direct_limit: int = 50_000) -> Solution:
    space = enumerate_states(cfg, traffic, cap)
    gen = build_generator(space, traffic, cfg)
    st = solve_stationary(gen, direct_limit)
    return Solution(space, gen, st, qos_report(space, st.pi, cfg))


QOS_HEADER = ["lambda", "mcs"] + list(METRIC_NAMES)


def qos_rows_csv(rows: list[tuple[float, str, QosReport]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(QOS_HEADER)
    for lam, mcs, rep in rows:
        w.writerow([repr(float(lam)), mcs] + [f"{v:.10g}" for v in rep.metrics().values()])
    return buf.getvalue()


def state_dump(space: StateSpace, pi: np.ndarray) -> str:
    lines = ["n_u,n_r,d_r,n_n,d_n,probability"]
    for s, p in zip(space.states, pi):
        lines.append(",".join(map(str, s)) + f",{p:.15g}")
    return "\n".join(lines) + "\n"
