"""Model parameters, state space and the transition structure shared by all engines.

The chain is ``(J, N)``: ``J`` counts servers that are back from vacation
(for one server, 0 = on vacation, 1 = serving or idle) and ``N`` is the
number of customers present.  Every engine derives its rates from
:func:`transitions`, so the oracle generator, the balance checks and the
simulator's event logic cannot drift apart.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import InvalidState, ValidationError


class Policy(str, enum.Enum):
    SINGLE = "single"
    MULTIPLE = "multiple"


class Engine(str, enum.Enum):
    ANALYTIC = "analytic"
    ORACLE = "oracle"
    SIMULATION = "simulation"


class BalanceVariant(str, enum.Enum):
    """How vacation-return rates are read for more than one server.

    ``CORRECTED`` returns servers individually at ``(c - j) * gamma`` from
    phase ``j``.  ``LITERAL`` uses the labels drawn on the multi-server
    transition diagram verbatim: ``(c - 1) * gamma`` out of ``(0, 0)``,
    ``c * gamma`` out of ``(0, n >= 1)`` and ``(c - 1) * gamma`` out of every
    intermediate phase.  Both coincide for a single server.
    """

    CORRECTED = "corrected"
    LITERAL = "literal"


@dataclass(frozen=True)
class ModelParams:
    lam: float
    mu: float
    gamma: float
    xi: float
    servers: int = 1
    policy: Policy = Policy.SINGLE

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy(self.policy))
        problems = []
        for name in ("lam", "mu", "gamma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                problems.append((f"{name} > 0", f"{name}={value}"))
        if not (math.isfinite(self.xi) and self.xi >= 0):
            problems.append(("xi >= 0", f"xi={self.xi}"))
        if isinstance(self.servers, bool) or int(self.servers) != self.servers or self.servers < 1:
            problems.append(("servers is a positive integer", f"servers={self.servers}"))
        elif self.policy is Policy.MULTIPLE and self.servers > 1:
            problems.append(("multiple vacations need servers == 1", f"servers={self.servers}"))
        if problems:
            raise ValidationError(problems)
        object.__setattr__(self, "servers", int(self.servers))

    @property
    def rho(self) -> float:
        return self.lam / (self.servers * self.mu)

    def replace(self, **changes) -> "ModelParams":
        values = {
            "lam": self.lam, "mu": self.mu, "gamma": self.gamma, "xi": self.xi,
            "servers": self.servers, "policy": self.policy,
        }
        values.update(changes)
        return ModelParams(**values)

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam, "mu": self.mu, "gamma": self.gamma, "xi": self.xi,
            "servers": self.servers, "policy": self.policy.value,
        }


@dataclass(frozen=True, order=True)
class QueueState:
    phase: int
    count: int


@dataclass(frozen=True)
class Transition:
    source: QueueState
    target: QueueState
    rate: float


@dataclass
class ValidationResult:
    engine: Engine
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_if_invalid(self) -> None:
        if self.violations:
            raise ValidationError(self.violations)


def validate(params: ModelParams, engine: Engine | str) -> ValidationResult:
    """Check ``params`` against the conditions of ``engine``.

    The closed forms need ``rho < 1``, ``xi < mu`` and positive ``gamma``
    and ``xi`` (they integrate against ``s**(mu/xi - 1)`` and
    ``(1 - s)**(gamma/xi - 1)``).  The oracle and the simulator only need
    a stable chain, which impatience guarantees for any arrival rate.
    """
    engine = Engine(engine)
    result = ValidationResult(engine)
    bad = result.violations
    if engine is Engine.ANALYTIC:
        if params.servers != 1:
            bad.append(("servers == 1", f"servers={params.servers}"))
        if not params.rho < 1:
            bad.append(("rho < 1", f"rho={params.rho:.6g}"))
        if not params.xi > 0:
            bad.append(("xi > 0", f"xi={params.xi}"))
        if not params.xi < params.mu:
            bad.append(("xi < mu", f"xi={params.xi}, mu={params.mu}"))
        if not params.gamma > 0:
            bad.append(("gamma > 0", f"gamma={params.gamma}"))
    elif params.xi == 0 and not params.rho < 1:
        # without impatience the queue is only stable below unit load
        bad.append(("rho < 1 when xi == 0", f"rho={params.rho:.6g}"))
    return result


def is_valid_state(params: ModelParams, state: QueueState) -> bool:
    if not (0 <= state.phase <= params.servers and state.count >= 0):
        return False
    if params.policy is Policy.MULTIPLE and state.phase == 1 and state.count == 0:
        return False
    return True


def _return_rate(params: ModelParams, phase: int, count: int, variant: BalanceVariant) -> float:
    c = params.servers
    if phase >= c:
        return 0.0
    if params.policy is Policy.MULTIPLE and count == 0:
        # the server starts another vacation: a self-loop, not a transition
        return 0.0
    if variant is BalanceVariant.LITERAL and c > 1:
        if phase == 0:
            return (c - 1) * params.gamma if count == 0 else c * params.gamma
        return (c - 1) * params.gamma
    return (c - phase) * params.gamma


def transitions(
    params: ModelParams,
    state: QueueState,
    variant: BalanceVariant | str = BalanceVariant.CORRECTED,
    max_count: int | None = None,
) -> list[Transition]:
    """Outgoing transitions of ``state``.

    ``max_count`` truncates the level dimension by suppressing arrivals at
    that level (reflecting boundary).
    """
    if not is_valid_state(params, state):
        raise InvalidState(f"{state} is not a state of {params}")
    variant = BalanceVariant(variant)
    j, n = state.phase, state.count
    out = []
    if max_count is None or n < max_count:
        out.append(Transition(state, QueueState(j, n + 1), params.lam))
    up = _return_rate(params, j, n, variant)
    if up > 0:
        out.append(Transition(state, QueueState(j + 1, n), up))
    if n > 0:
        in_service = min(n, j)
        waiting = n - in_service
        if waiting > 0 and params.xi > 0:
            out.append(Transition(state, QueueState(j, n - 1), waiting * params.xi))
        if in_service > 0:
            if waiting > 0:
                # the freed server takes the next waiting customer
                target = QueueState(j, n - 1)
            else:
                # empty waiting line: the server leaves on vacation
                target = QueueState(j - 1, n - 1)
            out.append(Transition(state, target, in_service * params.mu))
    merged: dict[QueueState, float] = {}
    for t in out:
        merged[t.target] = merged.get(t.target, 0.0) + t.rate
    return [Transition(state, target, rate) for target, rate in merged.items()]


def rate_of(
    params: ModelParams,
    source: QueueState,
    target: QueueState,
    variant: BalanceVariant | str = BalanceVariant.CORRECTED,
) -> float:
    """Transition rate from ``source`` to ``target`` (0 for non-adjacent pairs)."""
    if not is_valid_state(params, target):
        raise InvalidState(f"{target} is not a state of {params}")
    for t in transitions(params, source, variant):
        if t.target == target:
            return t.rate
    return 0.0


def states(params: ModelParams, max_count: int) -> list[QueueState]:
    return [
        QueueState(j, n)
        for j in range(params.servers + 1)
        for n in range(max_count + 1)
        if is_valid_state(params, QueueState(j, n))
    ]
