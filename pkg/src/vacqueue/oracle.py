"""Truncated-generator ground truth for every supported model.

States are laid out as ``index = phase * (N + 1) + count``.  Under multiple
vacations the slot of (1,0) is kept but carries no transitions and is left
out of the solve.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidState, SingularSystem, TruncationInsufficient
from .model import (
    BalanceVariant,
    Engine,
    ModelParams,
    Policy,
    QueueState,
    _return_rate,
    is_valid_state,
    transitions,
    validate,
)
from .report import PerformanceReport, round_sig

DEFAULT_N_TRUNC = 400
TAIL_THRESHOLD = 1e-9
TAIL_LEVELS = 5


@dataclass(frozen=True)
class Generator:
    params: ModelParams
    n_trunc: int
    variant: BalanceVariant
    matrix: sp.csr_matrix
    valid: np.ndarray

    def index(self, phase: int, count: int) -> int:
        return phase * (self.n_trunc + 1) + count

    def rate(self, source: QueueState, target: QueueState) -> float:
        return float(self.matrix[self.index(*_pair(source)), self.index(*_pair(target))])


def _pair(state: QueueState) -> tuple[int, int]:
    return state.phase, state.count


def build_generator(
    params: ModelParams,
    n_trunc: int = DEFAULT_N_TRUNC,
    variant: BalanceVariant | str = BalanceVariant.CORRECTED,
) -> Generator:
    """Sparse generator of the chain truncated at level ``n_trunc`` (arrivals blocked there)."""
    validate(params, Engine.ORACLE).raise_if_invalid()
    variant = BalanceVariant(variant)
    c = params.servers
    if n_trunc < max(c, 10):
        raise ValueError(f"n_trunc must be at least max(servers, 10), got {n_trunc}")
    width = n_trunc + 1
    size = (c + 1) * width
    rows, cols, vals = [], [], []
    valid = np.zeros(size, dtype=bool)
    for j in range(c + 1):
        for n in range(width):
            state = QueueState(j, n)
            if not is_valid_state(params, state):
                continue
            i = j * width + n
            valid[i] = True
            out = 0.0
            for t in transitions(params, state, variant, max_count=n_trunc):
                rows.append(i)
                cols.append(t.target.phase * width + t.target.count)
                vals.append(t.rate)
                out += t.rate
            rows.append(i)
            cols.append(i)
            vals.append(-out)
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(size, size))
    return Generator(params, n_trunc, variant, matrix, valid)


@dataclass
class SteadyStateTable:
    params: ModelParams
    n_trunc: int
    probs: np.ndarray
    tail_mass: float
    residual: float
    variant: BalanceVariant = BalanceVariant.CORRECTED
    flags: list[str] = field(default_factory=list)

    def prob(self, phase: int, count: int) -> float:
        if count > self.n_trunc:
            return 0.0
        return float(self.probs[phase, count])

    def phase_marginals(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def pgf(self, phase: int, z: float) -> float:
        """Partial generating function ``sum_n z^n pi(phase, n)`` of the truncated table."""
        return float(np.polyval(self.probs[phase, ::-1], z))

    def rows(self):
        for j in range(self.probs.shape[0]):
            for n in range(self.n_trunc + 1):
                yield j, n, float(self.probs[j, n])

    def write_csv(self, target) -> None:
        """Write ``phase,count,prob`` rows to a path or an open text file."""
        if isinstance(target, (str, Path)):
            with open(target, "w", newline="") as fh:
                self.write_csv(fh)
            return
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(["phase", "count", "prob"])
        for j, n, p in self.rows():
            writer.writerow([j, n, repr(round_sig(p))])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def solve_stationary(
    generator: Generator, tail_threshold: float = TAIL_THRESHOLD, strict: bool = True
) -> SteadyStateTable:
    """Stationary vector of ``generator``.

    ``pi Q = 0`` is solved with its last equation replaced by ``sum(pi) = 1``.
    A tail mass over the top levels above ``tail_threshold`` raises
    :class:`TruncationInsufficient`, or is only flagged when ``strict`` is false.
    """
    idx = np.flatnonzero(generator.valid)
    q = generator.matrix[idx][:, idx]
    system = q.T.tolil()
    system[-1, :] = np.ones(len(idx))
    rhs = np.zeros(len(idx))
    rhs[-1] = 1.0
    with np.errstate(all="raise"):
        try:
            x = spla.spsolve(system.tocsc(), rhs)
        except (RuntimeError, FloatingPointError) as exc:
            raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystem("stationary solve produced non-finite values")
    residual = float(np.max(np.abs(q.T @ x)))
    if x.min() < -1e-14:
        raise SingularSystem(f"stationary solve produced a negative entry {x.min():.3g}")
    x = np.clip(x, 0.0, None)
    x /= x.sum()

    c, width = generator.params.servers, generator.n_trunc + 1
    full = np.zeros(generator.valid.size)
    full[idx] = x
    probs = full.reshape(c + 1, width)
    tail = float(probs[:, width - TAIL_LEVELS:].sum())
    table = SteadyStateTable(generator.params, generator.n_trunc, probs, tail, residual, generator.variant)
    if tail > tail_threshold:
        message = (
            f"tail mass {tail:.3g} over the top {TAIL_LEVELS} levels exceeds {tail_threshold:g}; "
            f"raise n_trunc above {generator.n_trunc}"
        )
        if strict:
            raise TruncationInsufficient(message, tail)
        table.flags.append(message)
    return table


def stationary(
    params: ModelParams,
    n_trunc: int = DEFAULT_N_TRUNC,
    variant: BalanceVariant | str = BalanceVariant.CORRECTED,
    strict: bool = True,
) -> SteadyStateTable:
    return solve_stationary(build_generator(params, n_trunc, variant), strict=strict)


@dataclass(frozen=True)
class SojournSystem:
    """Expected remaining sojourn of a tagged customer.

    ``values[j, a]`` is the mean time to leave for a tagged customer with
    ``a`` customers ahead while ``j`` servers are back.  A customer arriving
    to state ``(j, n)`` starts at ``(j, n)``, so ``values[j, n]`` is
    ``E(S_{j,n})``.
    """

    params: ModelParams
    n_trunc: int
    values: np.ndarray
    method: str = "first-step linear equations"

    def __call__(self, phase: int, count: int) -> float:
        return float(self.values[phase, count])


def solve_sojourn(
    params: ModelParams,
    n_trunc: int = DEFAULT_N_TRUNC,
    variant: BalanceVariant | str = BalanceVariant.CORRECTED,
) -> SojournSystem:
    """First-step equations for the tagged customer's sojourn, absorbing at service end or reneging.

    Customers behind the tagged one never overtake it and never change the
    rates it sees: servers only return (at a rate that does not depend on
    the queue once it is non-empty), and while the tagged customer waits no
    server can leave.  The state is therefore (phase, customers ahead), and
    the system is exact for every ``a <= n_trunc``.
    """
    validate(params, Engine.ORACLE).raise_if_invalid()
    variant = BalanceVariant(variant)
    c, mu, xi = params.servers, params.mu, params.xi
    width = n_trunc + 1
    size = (c + 1) * width
    rows, cols, vals = [], [], []
    rhs = np.zeros(size)
    for j in range(c + 1):
        for a in range(width):
            i = j * width + a
            rows.append(i)
            cols.append(i)
            if a < j:
                # in service: absorbed at rate mu
                vals.append(mu)
                rhs[i] = 1.0
                continue
            up = _return_rate(params, j, a + 1, variant)
            ahead = j * mu + (a - j) * xi
            vals.append(up + ahead + xi)
            rhs[i] = 1.0
            if up > 0:
                rows.append(i)
                cols.append((j + 1) * width + a)
                vals.append(-up)
            if ahead > 0:
                rows.append(i)
                cols.append(j * width + a - 1)
                vals.append(-ahead)
    system = sp.csc_matrix((vals, (rows, cols)), shape=(size, size))
    x = spla.spsolve(system, rhs)
    if not np.all(np.isfinite(x)):
        raise SingularSystem("sojourn system is singular")
    return SojournSystem(params, n_trunc, x.reshape(c + 1, width))


def oracle_measures(table: SteadyStateTable, sojourn: SojournSystem | None = None) -> PerformanceReport:
    """Every scalar measure of ``table``; ``sojourn`` is solved when not supplied."""
    params = table.params
    c = params.servers
    probs = table.probs
    n = np.arange(table.n_trunc + 1)
    phases = np.arange(c + 1)[:, None]
    marginals = probs.sum(axis=1)
    means = probs @ n
    if sojourn is None:
        sojourn = solve_sojourn(params, table.n_trunc, table.variant)

    p_vac = float(marginals[:c].sum())
    p_idle = float(probs[c, :c].sum())
    p_ser = float(probs[c, c:].sum())
    busy = float((probs * np.minimum(n[None, :], phases)).sum())
    mean_n0 = float(means[0])
    mean_n1 = float(means[1:].sum())
    total = mean_n0 + mean_n1
    weighted_sojourn = float((probs * sojourn.values).sum())
    multiple = params.policy is Policy.MULTIPLE
    extra: dict[str, float | None] = {
        "residual": table.residual,
        "tail_mass": table.tail_mass,
        "n_trunc": float(table.n_trunc),
        "mean_sojourn_little": total / params.lam,
        "mean_sojourn_first_step": weighted_sojourn,
        "reneging_rate": params.xi * float((probs * np.maximum(n[None, :] - phases, 0)).sum()),
        "S_0_0_first_step": sojourn(0, 0),
    }
    for j in range(c + 1):
        extra[f"phase_{j}_prob"] = float(marginals[j])
        extra[f"phase_{j}_mean"] = float(means[j])
    return PerformanceReport(
        engine=Engine.ORACLE,
        p00=table.prob(0, 0), p10=table.prob(1, 0), p11=table.prob(1, 1),
        p_vac=p_vac, p_idle=p_idle, p_ser=p_ser,
        mean_n0=mean_n0, mean_n1=mean_n1, mean_n_total=total,
        sojourn_10=None if multiple else sojourn(1, 0),
        sojourn_00=sojourn(0, 0),
        mean_sojourn=weighted_sojourn,
        fraction_served=params.mu * busy / params.lam,
        extra=extra,
    )


def balance_residuals(table: SteadyStateTable) -> np.ndarray:
    """Inflow minus outflow for every state, recomputed from the transition rules."""
    gen = build_generator(table.params, table.n_trunc, table.variant)
    return (gen.matrix.T @ table.probs.ravel()).reshape(table.probs.shape)


def oracle_pgf(table: SteadyStateTable, phase: int, z: float) -> float:
    if not 0 <= phase <= table.params.servers:
        raise InvalidState(f"phase {phase} out of range")
    return table.pgf(phase, z)
