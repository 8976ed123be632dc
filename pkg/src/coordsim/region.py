"""Inner-bound rate computations over the auxiliary-output channel.

The decision variable is always the channel q from the observation alphabet
to the output alphabet; composing it behind the observation channel enforces
the chain action - observation - output structurally.  For a query
(p0, observation channel, target channel, delta) the two objectives are

    finite-agent threshold   I(obs; out)          (one agent must pay it)
    per-agent threshold      I(obs; out | action) (every agent pays it)

minimized over all q whose induced action/output joint lies within total
variation delta of the target joint.  Both objectives are convex in q and
the constraint set is a polytope (simplex rows intersected with a TV ball),
so the pipeline is: coarse grid plus restarts, multi-start projected descent
with boundary bisection, a sequential-linearization stage whose step targets
come from an exact LP over the feasible polytope (projected moves alone
stall on the fidelity boundary), and a shrinking direction-set polish.  The
tolerances below are the documented contract at the small alphabet sizes
this solver is specified for.

The unconstrained fidelity floor (the smallest achievable delta) is a plain
linear program in q and is solved exactly with HiGHS.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linprog

from .probkit import CondPmf, Pmf, ZERO_TOL

FEASIBILITY_SLACK = 1e-9
OPTIMUM_TOL = 1e-4

_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class RegionQuery:
    """Inputs of one rate computation.  delta may be None for operations
    that do not need a fidelity radius."""

    p0: Pmf
    obs_channel: CondPmf
    target: CondPmf
    delta: float | None = None

    def __post_init__(self):
        if self.obs_channel.in_size != self.p0.size:
            raise ValueError("observation channel input must match p0")
        if self.target.in_size != self.p0.size:
            raise ValueError("target channel input must match p0")
        if self.delta is not None and self.delta < 0:
            raise ValueError("delta must be >= 0")

    @property
    def obs_size(self) -> int:
        return self.obs_channel.out_size

    @property
    def out_size(self) -> int:
        return self.target.out_size

    @property
    def target_joint(self) -> np.ndarray:
        return self.p0.probs[:, None] * self.target.rows


@dataclass(frozen=True)
class RegionPoint:
    """One solved point: optimal rate (nats/symbol), the optimizing channel,
    the action/output channel it induces, and the fidelity it achieves."""

    rate: float
    q_star: CondPmf
    induced: CondPmf
    achieved_tv: float
    feasible: bool


@dataclass(frozen=True)
class CurvePoint:
    delta: float
    per_agent: RegionPoint
    finite: RegionPoint


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the grid + descent + polish pipeline; defaults match the
    documented contract (grid step 0.05, >= 20 random restarts)."""

    grid_step: float = 0.05
    restarts: int = 20
    seed: int = 0
    descent_iters: int = 250
    descent_starts: int = 8
    polish_rounds: int = 70
    max_grid_points: int = 4096


def _as_channel_array(q, in_size: int, out_size: int) -> np.ndarray:
    arr = q.rows if isinstance(q, CondPmf) else np.asarray(q, dtype=np.float64)
    if arr.shape != (in_size, out_size):
        raise ValueError(f"channel shape {arr.shape} incompatible with "
                         f"({in_size}, {out_size})")
    return arr


def _obs_marginal(query: RegionQuery) -> np.ndarray:
    return query.p0.probs @ query.obs_channel.rows


def induced_target(q, query: RegionQuery) -> CondPmf:
    """Action-to-output channel obtained by riding q behind the observation
    channel: rows = obs_rows @ q."""
    arr = _as_channel_array(q, query.obs_size, query.out_size)
    return CondPmf(query.obs_channel.rows @ arr)


def _induced_joint(q_arr: np.ndarray, query: RegionQuery) -> np.ndarray:
    return query.p0.probs[:, None] * (query.obs_channel.rows @ q_arr)


def _tv_to_target(q_arr: np.ndarray, query: RegionQuery) -> float:
    return 0.5 * float(np.abs(_induced_joint(q_arr, query) - query.target_joint).sum())


def _mi_batch(q_batch: np.ndarray, pxh: np.ndarray) -> np.ndarray:
    joint = pxh[None, :, None] * q_batch
    py = joint.sum(axis=1)
    outer = pxh[None, :, None] * py[:, None, :]
    mask = joint > ZERO_TOL
    terms = np.zeros_like(joint)
    np.divide(joint, np.maximum(outer, _LOG_FLOOR), out=terms, where=mask)
    np.log(terms, out=terms, where=mask)
    terms *= joint
    terms[~mask] = 0.0
    return np.maximum(terms.sum(axis=(1, 2)), 0.0)


def _cmi_batch(q_batch: np.ndarray, query: RegionQuery) -> np.ndarray:
    # joint over (candidate, action, obs, out)
    t = np.einsum("x,xa,mab->mxab", query.p0.probs, query.obs_channel.rows, q_batch)
    p_x = query.p0.probs
    p_xa = t.sum(axis=3)
    p_xb = t.sum(axis=2)
    num = t * p_x[None, :, None, None]
    den = p_xa[:, :, :, None] * p_xb[:, :, None, :]
    mask = t > ZERO_TOL
    terms = np.zeros_like(t)
    np.divide(num, np.maximum(den, _LOG_FLOOR), out=terms, where=mask)
    np.log(terms, out=terms, where=mask)
    terms *= t
    terms[~mask] = 0.0
    return np.maximum(terms.sum(axis=(1, 2, 3)), 0.0)


def finite_agent_rate(q, query: RegionQuery) -> float:
    """I(obs; out) under p0, the observation channel, and q: the rate at
    least one agent must carry."""
    arr = _as_channel_array(q, query.obs_size, query.out_size)
    return float(_mi_batch(arr[None], _obs_marginal(query))[0])


def per_agent_rate(q, query: RegionQuery) -> float:
    """I(obs; out | action): the common rate every agent carries in the
    many-agent regime."""
    arr = _as_channel_array(q, query.obs_size, query.out_size)
    return float(_cmi_batch(arr[None], query)[0])


def _induced_coeff_matrix(query: RegionQuery) -> np.ndarray:
    """Linear map from flattened channel entries (a, b) to the flattened
    induced joint cells (x, y): J[(x,y),(a,b)] = p0(x) obs(a|x) [b == y]."""
    a_size, b_size = query.obs_size, query.out_size
    sx = query.p0.size
    coeff = np.zeros((sx * b_size, a_size * b_size))
    for x in range(sx):
        for y in range(b_size):
            row = x * b_size + y
            for a in range(a_size):
                coeff[row, a * b_size + y] = \
                    query.p0.probs[x] * query.obs_channel.rows[x, a]
    return coeff


def min_achievable_delta(query: RegionQuery) -> tuple[float, CondPmf]:
    """Smallest total variation to the target joint over all channels q.

    The objective is piecewise linear in q, so this is a linear program;
    zero means the target is exactly reachable through the observation
    channel.
    """
    a_size, b_size = query.obs_size, query.out_size
    sx = query.p0.size
    n_q = a_size * b_size
    n_s = sx * b_size
    target = query.target_joint.reshape(-1)

    # TV(q) = 0.5 * sum_s s_xy with s_xy >= |J q - t|_xy, J linear in q
    coeff = _induced_coeff_matrix(query)

    c = np.concatenate([np.zeros(n_q), 0.5 * np.ones(n_s)])
    a_ub = np.block([[coeff, -np.eye(n_s)], [-coeff, -np.eye(n_s)]])
    b_ub = np.concatenate([target, -target])
    a_eq = np.zeros((a_size, n_q + n_s))
    for a in range(a_size):
        a_eq[a, a * b_size:(a + 1) * b_size] = 1.0
    b_eq = np.ones(a_size)
    bounds = [(0.0, 1.0)] * n_q + [(0.0, None)] * n_s

    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"fidelity-floor LP failed: {res.message}")
    q_arr = np.clip(res.x[:n_q].reshape(a_size, b_size), 0.0, None)
    q_arr /= q_arr.sum(axis=1, keepdims=True)
    return _tv_to_target(q_arr, query), CondPmf(q_arr)


def _simplex_lattice(dim: int, step: float) -> np.ndarray:
    k = max(int(round(1.0 / step)), 1)
    points = [np.array(c, dtype=np.float64) / k
              for c in itertools.product(range(k + 1), repeat=dim)
              if sum(c) == k]
    return np.array(points)


def _project_row_simplex(v: np.ndarray) -> np.ndarray:
    # Euclidean projection of each row onto the probability simplex
    u = np.sort(v, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, v.shape[1] + 1)
    cond = u - css / ind > 0
    rho = cond.sum(axis=1)
    theta = css[np.arange(v.shape[0]), rho - 1] / rho
    return np.maximum(v - theta[:, None], 0.0)


def _starts(query: RegionQuery, options: SolverOptions, q_tv: np.ndarray) -> np.ndarray:
    a_size, b_size = query.obs_size, query.out_size
    generator = np.random.default_rng(options.seed)
    collected = [q_tv]
    collected.append(np.full((a_size, b_size), 1.0 / b_size))
    if a_size == b_size:
        collected.append(np.eye(a_size))
    for b in range(b_size):
        const = np.zeros((a_size, b_size))
        const[:, b] = 1.0
        collected.append(const)

    lattice = _simplex_lattice(b_size, options.grid_step)
    total = lattice.shape[0] ** a_size
    if total <= options.max_grid_points:
        for combo in itertools.product(range(lattice.shape[0]), repeat=a_size):
            collected.append(lattice[list(combo)])
    else:
        picks = generator.integers(0, lattice.shape[0],
                                   size=(options.max_grid_points, a_size))
        for combo in picks:
            collected.append(lattice[combo])

    for _ in range(max(options.restarts, 20)):
        collected.append(generator.dirichlet(np.ones(b_size), size=a_size))
    return np.array(collected)


def _toward_feasible(anchor: np.ndarray, cand: np.ndarray, radius: float,
                     query: RegionQuery) -> np.ndarray:
    """Largest step from a within-radius anchor toward cand that keeps the
    fidelity at most `radius` (the ball is convex, so bisection works)."""
    if _tv_to_target(cand, query) <= radius:
        return cand
    lo_t, hi_t = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo_t + hi_t)
        point = anchor + mid * (cand - anchor)
        if _tv_to_target(point, query) <= radius:
            lo_t = mid
        else:
            hi_t = mid
    return anchor + lo_t * (cand - anchor)


def _gradient(kind: str, q_arr: np.ndarray, query: RegionQuery) -> np.ndarray:
    safe_q = np.maximum(q_arr, 1e-18)
    if kind == "finite":
        pxh = _obs_marginal(query)
        py = pxh @ q_arr
        return pxh[:, None] * np.log(safe_q / np.maximum(py, 1e-18)[None, :])
    weights = query.p0.probs[:, None] * query.obs_channel.rows  # (x, a)
    p_b_given_x = query.obs_channel.rows @ q_arr                # (x, b)
    logs = np.log(safe_q[None, :, :] /
                  np.maximum(p_b_given_x, 1e-18)[:, None, :])   # (x, a, b)
    return np.einsum("xa,xab->ab", weights, logs)


def _objective_batch(kind: str, q_batch: np.ndarray, query: RegionQuery) -> np.ndarray:
    if kind == "finite":
        return _mi_batch(q_batch, _obs_marginal(query))
    return _cmi_batch(q_batch, query)


def _descend(kind: str, q_arr: np.ndarray, value: float, radius: float,
             query: RegionQuery, options: SolverOptions) -> tuple[np.ndarray, float]:
    step = 0.5
    for _ in range(options.descent_iters):
        grad = _gradient(kind, q_arr, query)
        trial_step = step
        improved = False
        for _ in range(40):
            cand = _project_row_simplex(q_arr - trial_step * grad)
            cand = _toward_feasible(q_arr, cand, radius, query)
            cand_value = float(_objective_batch(kind, cand[None], query)[0])
            if cand_value < value - 1e-15:
                q_arr, value = cand, cand_value
                step = min(trial_step * 2.0, 4.0)
                improved = True
                break
            trial_step *= 0.5
        if not improved:
            break
    return q_arr, value


def _lp_direction(grad: np.ndarray, q_arr: np.ndarray, delta: float,
                  trust: float, query: RegionQuery) -> np.ndarray | None:
    """Minimize the linearized objective over the exact feasible polytope
    (simplex rows, fidelity ball, box trust region around the iterate)."""
    a_size, b_size = q_arr.shape
    sx = query.p0.size
    n_q = a_size * b_size
    n_s = sx * b_size
    target = query.target_joint.reshape(-1)
    coeff = _induced_coeff_matrix(query)

    c = np.concatenate([grad.reshape(-1), np.zeros(n_s)])
    a_ub = np.vstack([
        np.block([[coeff, -np.eye(n_s)], [-coeff, -np.eye(n_s)]]),
        np.concatenate([np.zeros(n_q), np.ones(n_s)])[None, :],
    ])
    b_ub = np.concatenate([target, -target, [2.0 * delta]])
    a_eq = np.zeros((a_size, n_q + n_s))
    for a in range(a_size):
        a_eq[a, a * b_size:(a + 1) * b_size] = 1.0
    b_eq = np.ones(a_size)
    flat_q = q_arr.reshape(-1)
    bounds = [(max(0.0, flat_q[i] - trust), min(1.0, flat_q[i] + trust))
              for i in range(n_q)] + [(0.0, None)] * n_s

    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if not res.success:
        return None
    return np.clip(res.x[:n_q].reshape(a_size, b_size), 0.0, None)


def _segment_min(kind: str, q_arr: np.ndarray, target_pt: np.ndarray,
                 query: RegionQuery) -> tuple[np.ndarray, float]:
    """Ternary search of the convex objective along [q, target_pt]."""
    lo_t, hi_t = 0.0, 1.0
    for _ in range(40):
        m1 = lo_t + (hi_t - lo_t) / 3.0
        m2 = hi_t - (hi_t - lo_t) / 3.0
        pts = np.stack([q_arr + m1 * (target_pt - q_arr),
                        q_arr + m2 * (target_pt - q_arr)])
        f1, f2 = _objective_batch(kind, pts, query)
        if f1 <= f2:
            hi_t = m2
        else:
            lo_t = m1
    best_t = 0.5 * (lo_t + hi_t)
    point = q_arr + best_t * (target_pt - q_arr)
    return point, float(_objective_batch(kind, point[None], query)[0])


def _lp_refine(kind: str, q_arr: np.ndarray, value: float, delta: float,
               query: RegionQuery) -> tuple[np.ndarray, float]:
    """Sequential linearized refinement: an exact-LP step target handles the
    fidelity boundary (where projected moves stall) and the trust region
    shrinks until the linear model certifies local optimality."""
    trust = 0.25
    for _ in range(80):
        grad = _gradient(kind, q_arr, query)
        step_target = _lp_direction(grad, q_arr, delta, trust, query)
        if step_target is None:
            break
        gap = float(np.sum(grad * (step_target - q_arr)))
        if gap >= -1e-10:
            trust *= 0.25
            if trust < 1e-6:
                break
            continue
        cand, cand_value = _segment_min(kind, q_arr, step_target, query)
        if cand_value < value - 1e-14:
            q_arr, value = cand, cand_value
        else:
            trust *= 0.25
            if trust < 1e-6:
                break
    return q_arr, value


_PAIR_RATIOS = (0.25, 0.5, 1.0, 2.0, 4.0)


def _polish_directions(a_size: int, b_size: int) -> np.ndarray:
    """Single within-row mass moves plus ratio'd combinations of two moves.

    The combinations matter: at a fidelity-boundary optimum the improving
    feasible directions hug the boundary tangent, whose slope between any
    two coordinates is arbitrary, so equal-weight pairs alone stall.
    """
    basics = []
    for a in range(a_size):
        for b1 in range(b_size):
            for b2 in range(b_size):
                if b1 == b2:
                    continue
                d = np.zeros((a_size, b_size))
                d[a, b1] -= 1.0
                d[a, b2] += 1.0
                basics.append(d)
    dirs = list(basics)
    for i in range(len(basics)):
        for j in range(i + 1, len(basics)):
            for ratio in _PAIR_RATIOS:
                dirs.append(basics[i] + ratio * basics[j])
    return np.array(dirs)


def _polish(kind: str, q_arr: np.ndarray, value: float, radius: float,
            query: RegionQuery, options: SolverOptions) -> tuple[np.ndarray, float]:
    """Shrinking direction-set search; ratio'd paired directions let the
    iterate slide along the fidelity boundary where single moves stall."""
    dirs = _polish_directions(*q_arr.shape)
    h = max(options.grid_step / 2.0, 1e-3)
    for _ in range(options.polish_rounds):
        cands = q_arr[None, :, :] + h * dirs
        valid = np.all(cands >= -1e-15, axis=(1, 2))
        if valid.any():
            cands = np.clip(cands[valid], 0.0, None)
            cands /= cands.sum(axis=2, keepdims=True)
            joints = query.p0.probs[None, :, None] * np.einsum(
                "xa,mab->mxb", query.obs_channel.rows, cands)
            tvs = 0.5 * np.abs(joints - query.target_joint[None]).sum(axis=(1, 2))
            feasible = tvs <= radius
            if feasible.any():
                values = _objective_batch(kind, cands[feasible], query)
                best = int(np.argmin(values))
                if values[best] < value - 1e-15:
                    q_arr = cands[feasible][best]
                    value = float(values[best])
                    continue
        h *= 0.5
        if h < 1e-8:
            break
    return q_arr, value


def _solve(kind: str, query: RegionQuery, options: SolverOptions,
           extra_starts: list[np.ndarray] | None = None) -> RegionPoint:
    if query.delta is None:
        raise ValueError("query.delta is required for rate minimization")
    delta = float(query.delta)
    delta_min, q_tv = min_achievable_delta(query)
    if delta_min > delta + FEASIBILITY_SLACK:
        return RegionPoint(rate=math.inf, q_star=q_tv,
                           induced=induced_target(q_tv, query),
                           achieved_tv=delta_min, feasible=False)

    radius = delta + FEASIBILITY_SLACK

    starts = _starts(query, options, q_tv.rows)
    if extra_starts:
        starts = np.concatenate([starts, np.array(extra_starts)])
    repaired = np.array([_toward_feasible(q_tv.rows, s, radius, query)
                         for s in starts])
    values = _objective_batch(kind, repaired, query)
    order = np.argsort(values, kind="stable")[:max(options.descent_starts, 1)]

    best_q, best_value = repaired[order[0]], float(values[order[0]])
    for idx in order:
        q_arr, value = _descend(kind, repaired[idx], float(values[idx]),
                                radius, query, options)
        if value < best_value:
            best_q, best_value = q_arr, value

    best_q, best_value = _lp_refine(kind, best_q, best_value, delta, query)
    best_q, best_value = _polish(kind, best_q, best_value, radius,
                                 query, options)

    rate = float(_objective_batch(kind, best_q[None], query)[0])
    q_star = CondPmf(best_q)
    return RegionPoint(rate=rate, q_star=q_star,
                       induced=induced_target(q_star, query),
                       achieved_tv=_tv_to_target(best_q, query),
                       feasible=True)


def min_per_agent_rate(query: RegionQuery,
                       options: SolverOptions = SolverOptions(),
                       extra_starts: list[np.ndarray] | None = None) -> RegionPoint:
    """Minimize I(obs; out | action) over the fidelity ball."""
    return _solve("per_agent", query, options, extra_starts)


def min_finite_agent_rate(query: RegionQuery,
                          options: SolverOptions = SolverOptions(),
                          extra_starts: list[np.ndarray] | None = None) -> RegionPoint:
    """Minimize I(obs; out) over the fidelity ball."""
    return _solve("finite", query, options, extra_starts)


def rate_delta_curve(query: RegionQuery, delta_grid,
                     options: SolverOptions = SolverOptions()) -> list[CurvePoint]:
    """Both minimized rates per fidelity radius, in the given grid order.

    Radii are solved in ascending order and each optimum seeds the next
    (larger) radius, which makes the returned curves non-increasing by
    construction.
    """
    deltas = [float(d) for d in delta_grid]
    ascending = sorted(range(len(deltas)), key=lambda i: deltas[i])
    solved: dict[int, CurvePoint] = {}
    warm_per: list[np.ndarray] = []
    warm_fin: list[np.ndarray] = []
    for i in ascending:
        q = replace(query, delta=deltas[i])
        per = min_per_agent_rate(q, options, extra_starts=warm_per or None)
        fin = min_finite_agent_rate(q, options, extra_starts=warm_fin or None)
        if per.feasible:
            warm_per = [per.q_star.rows]
        if fin.feasible:
            warm_fin = [fin.q_star.rows]
        solved[i] = CurvePoint(delta=deltas[i], per_agent=per, finite=fin)
    return [solved[i] for i in range(len(deltas))]
