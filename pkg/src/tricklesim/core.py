"""Generalized Trickle state machine.

A node repeats intervals of length tau in [tau_l, tau_h].  Within each
interval it draws a broadcast timer theta uniformly from [eta*tau, tau],
counts consistent messages heard since the interval started, and fires at
theta only if the counter is still below the redundancy constant k.  When
the interval ends tau doubles (capped at tau_h); hearing inconsistent data
collapses tau back to tau_l.  Setting eta = 0 recovers the classic listen
window of half an interval being optional; eta = 1 forces every timer to
the interval end.

All transition functions are pure: they take a state, return a new state,
and leave scheduling to the caller.  Randomness comes in through an
explicit numpy Generator so simulations can replay bit for bit.
"""

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ParameterError

__all__ = [
    "TrickleConfig",
    "NodeState",
    "init_node",
    "on_interval_start",
    "on_hear_consistent",
    "on_hear_inconsistent",
    "on_timer_theta",
    "on_interval_end",
]


@dataclass(frozen=True)
class TrickleConfig:
    """Protocol parameters shared by every node in a network."""

    k: int
    tau_l: float = 1.0
    tau_h: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ParameterError(f"redundancy constant k must be an integer >= 1, got {self.k!r}")
        if not (0.0 < self.tau_l <= self.tau_h):
            raise ParameterError(
                f"interval bounds need 0 < tau_l <= tau_h, got tau_l={self.tau_l!r} tau_h={self.tau_h!r}"
            )
        if not (0.0 <= self.eta <= 1.0):
            raise ParameterError(f"listen-only fraction eta must lie in [0, 1], got {self.eta!r}")


@dataclass(frozen=True)
class NodeState:
    """One node's view of its current interval.

    ``theta`` is an absolute time (interval_start plus the drawn offset), so
    an event queue can use it directly.  ``config`` rides along so the
    transition functions do not need a separate argument.
    """

    config: TrickleConfig
    node_id: int
    tau: float
    interval_start: float
    c: int
    theta: float
    data_version: int = 0


def _draw_theta(config: TrickleConfig, interval_start: float, tau: float, rng) -> float:
    return interval_start + rng.uniform(config.eta * tau, tau)


def init_node(config: TrickleConfig, node_id: int, skew: float, rng,
              data_version: int = 0) -> NodeState:
    """Steady-state start: the first full interval opens at ``skew``.

    The interval length starts at tau_h, which is the fixed point of rule 4
    for a network that has been consistent for a long time.  ``skew`` must
    lie in [0, tau_h).
    """
    if not (0.0 <= skew < config.tau_h):
        raise ParameterError(f"skew must lie in [0, tau_h), got {skew!r}")
    tau = config.tau_h
    return NodeState(
        config=config,
        node_id=node_id,
        tau=tau,
        interval_start=skew,
        c=0,
        theta=_draw_theta(config, skew, tau, rng),
        data_version=data_version,
    )


def partial_interval_theta(config: TrickleConfig, skew: float, rng) -> float:
    """Timer for the truncated interval that precedes the first full one.

    A node whose first full interval opens at ``skew`` is mid-interval at
    time zero; that interval conceptually started at skew - tau_h.  The
    timer is drawn by the usual uniform rule restricted to the still
    reachable part of the window, [max(eta*tau, tau - skew), tau], and the
    returned value is absolute.  It can equal ``skew`` when the remaining
    window is empty, in which case there is nothing left to fire.
    """
    tau = config.tau_h
    lo = max(config.eta * tau, tau - skew)
    return (skew - tau) + rng.uniform(lo, tau)


def on_interval_start(state: NodeState, rng) -> NodeState:
    """Rule 1: reset the counter and draw a fresh timer for this interval."""
    return replace(
        state,
        c=0,
        theta=_draw_theta(state.config, state.interval_start, state.tau, rng),
    )


def on_hear_consistent(state: NodeState) -> NodeState:
    """Rule 2: a consistent message bumps the counter."""
    return replace(state, c=state.c + 1)


def on_timer_theta(state: NodeState) -> tuple[NodeState, bool]:
    """Rule 3: at theta the node transmits iff fewer than k messages were heard.

    Only messages heard strictly before the timer count; the caller is
    responsible for ordering deliveries against timer events.
    """
    return state, state.c < state.config.k


def on_interval_end(state: NodeState, rng) -> NodeState:
    """Rule 4: double tau up to tau_h and open the next interval."""
    new_tau = min(2.0 * state.tau, state.config.tau_h)
    new_start = state.interval_start + state.tau
    moved = replace(state, tau=new_tau, interval_start=new_start)
    return on_interval_start(moved, rng)


def on_hear_inconsistent(state: NodeState, now: float, rng,
                         data_version: int | None = None) -> NodeState:
    """Rule 5: inconsistent data collapses tau to tau_l with a fresh interval.

    A node already running at tau_l keeps its current interval.  ``now`` is
    needed because the fresh interval opens at the moment the message was
    heard, which the state alone does not know.  When ``data_version`` is
    given the node also adopts it.
    """
    version = state.data_version if data_version is None else data_version
    if state.tau <= state.config.tau_l:
        return replace(state, data_version=version)
    moved = replace(state, tau=state.config.tau_l, interval_start=now,
                    data_version=version)
    return on_interval_start(moved, rng)
