"""Solving, schedule extraction and independent feasibility checking.

The solver boundary is deliberately narrow: :func:`solve_model` takes the
solver-neutral model from :mod:`cems.milp` and returns a plain
:class:`Solution` (status, objective, variable values).  The bundled backend
is HiGHS through :func:`scipy.optimize.milp`; a solution produced by any
external solver against the exported LP file can be read back with
:func:`read_solution` and fed through the same extraction path.

:func:`check_schedule_feasibility` re-derives every physical constraint from
the raw config (temperatures through :mod:`cems.thermal`, storage books
re-accumulated from flows) rather than trusting the model rows, so it also
guards against builder bugs.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Union

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp as _highs_milp
from scipy.sparse import csr_array

from .domain import CommunityConfig, HomeConfig
from .milp import BINARY, MilpModel
from .thermal import pv_output_energy, simulate_indoor_trajectory

MODE_ROUND_TOL = 1e-6

_STATUS_TOKENS = ("optimal", "feasible", "infeasible", "unbounded", "time_limit")


class SolverError(Exception):
    """The backend failed for a reason other than infeasible/unbounded."""


@dataclass(frozen=True)
class SolverOptions:
    """Knobs forwarded to the backend.

    ``threads`` is accepted for interface stability but the bundled HiGHS
    backend runs single-threaded and ignores it.
    """

    relative_mip_gap: float = 1e-6
    time_limit: float | None = None
    threads: int | None = None


@dataclass(frozen=True)
class Solution:
    status: str
    objective: float | None
    values: dict[str, float] | None
    solve_time: float
    mip_gap: float | None = None
    message: str = ""


def solve_model(model: MilpModel, options: SolverOptions | None = None) -> Solution:
    """Solve a model with the bundled HiGHS backend."""
    options = options or SolverOptions()
    model.validate()
    n = model.n_variables
    index = model.variable_index()
    c = np.zeros(n)
    for name, coef in model.objective:
        c[index[name]] += coef
    integrality = np.array([1 if v.kind == BINARY else 0 for v in model.variables])
    lb = np.array([v.lb for v in model.variables])
    ub = np.array([v.ub for v in model.variables])

    rows, cols, data = [], [], []
    c_lo = np.empty(len(model.constraints))
    c_hi = np.empty(len(model.constraints))
    for i, con in enumerate(model.constraints):
        for name, coef in con.terms:
            rows.append(i)
            cols.append(index[name])
            data.append(coef)
        if con.sense == "<=":
            c_lo[i], c_hi[i] = -np.inf, con.rhs
        elif con.sense == ">=":
            c_lo[i], c_hi[i] = con.rhs, np.inf
        else:
            c_lo[i] = c_hi[i] = con.rhs
    a = csr_array((data, (rows, cols)), shape=(len(model.constraints), n))

    opts: dict = {"presolve": True, "disp": False, "mip_rel_gap": options.relative_mip_gap}
    if options.time_limit is not None:
        opts["time_limit"] = options.time_limit

    start = time.perf_counter()
    res = _highs_milp(
        c=c,
        constraints=LinearConstraint(a, c_lo, c_hi),
        integrality=integrality,
        bounds=Bounds(lb, ub),
        options=opts,
    )
    elapsed = time.perf_counter() - start

    if res.status == 4:
        raise SolverError(f"solver failed on {model.name}: {res.message}")
    has_x = res.x is not None
    if res.status == 0:
        status = "optimal"
    elif res.status == 1:
        status = "feasible" if has_x else "time_limit"
    elif res.status == 2:
        status = "infeasible"
    else:
        status = "unbounded"
    return Solution(
        status=status,
        objective=float(res.fun) if has_x else None,
        values={v.name: float(x) for v, x in zip(model.variables, res.x)} if has_x else None,
        solve_time=elapsed,
        mip_gap=float(res.mip_gap) if has_x and getattr(res, "mip_gap", None) is not None else None,
        message=str(res.message),
    )


# ---------------------------------------------------------------------------
# schedules


_FLOW_ROLES = (
    "hvac_power",
    "com_load",
    "com_buy",
    "com_sell",
    "mode_home",
    "ess_level",
    "ess_load",
    "ess_sell",
    "com_charge",
    "res_charge",
    "res_load",
    "res_sell",
    "mode_ess",
)


@dataclass(frozen=True, eq=False)
class HomeSchedule:
    """One home's day: per-slot arrays (temperatures have a leading entry
    for the start-of-day state).  Roles of absent DERs are all-zero."""

    home: str
    hvac_power: np.ndarray
    indoor_temp: np.ndarray
    com_load: np.ndarray
    com_buy: np.ndarray
    com_sell: np.ndarray
    mode_home: np.ndarray
    ess_level: np.ndarray
    ess_load: np.ndarray
    ess_sell: np.ndarray
    com_charge: np.ndarray
    res_charge: np.ndarray
    res_load: np.ndarray
    res_sell: np.ndarray
    mode_ess: np.ndarray

    @property
    def net(self) -> np.ndarray:
        """Energy drawn from (positive) or pushed to (negative) the pool."""
        return self.com_buy - self.com_sell


@dataclass(frozen=True, eq=False)
class CommunitySchedule:
    """Extracted decision values for every home plus community aggregates.

    ``status_flags`` and ``slot_costs`` are present only for schedules that
    came out of the system-centric model.
    """

    homes: dict[str, HomeSchedule]
    community_net: np.ndarray
    status_flags: np.ndarray | None = None
    slot_costs: np.ndarray | None = None


def _round_mode(x: np.ndarray) -> np.ndarray:
    out = x.copy()
    near = np.abs(out - np.round(out)) <= MODE_ROUND_TOL
    out[near] = np.round(out[near])
    return out


def extract_schedule(solution: Solution, model: MilpModel, config: CommunityConfig) -> CommunitySchedule:
    """Turn raw variable values into per-home arrays keyed by role.

    Works for both model kinds; a home model yields a one-home schedule.
    Mode and status values within ``1e-6`` of an integer are rounded to it;
    values farther away are left as-is for the checker to flag.
    """
    if solution.values is None:
        raise ValueError(f"solution has status {solution.status!r} and carries no values")
    T = config.horizon_slots
    values = solution.values
    present: dict[str, dict[str, np.ndarray]] = {}
    status = np.zeros(T)
    slot_costs = np.zeros(T)
    has_community = False
    for name, meta in model.metadata.items():
        if name not in values:
            raise ValueError(f"solution is missing variable {name!r}")
        if meta.home is None:
            has_community = True
            if meta.role == "status":
                status[meta.slot - 1] = values[name]
            elif meta.role == "slot_cost":
                slot_costs[meta.slot - 1] = values[name]
            continue
        arrays = present.setdefault(meta.home, {})
        if meta.role not in arrays:
            arrays[meta.role] = np.zeros(T)
        arrays[meta.role][meta.slot - 1] = values[name]

    homes: dict[str, HomeSchedule] = {}
    for home in config.homes:
        if home.id not in present:
            continue
        arrays = present[home.id]
        temp = np.empty(T + 1)
        temp[0] = home.hvac.t_in_initial
        temp[1:] = arrays.get("temp_in", np.full(T, np.nan))
        fields_by_role = {role: arrays.get(role, np.zeros(T)) for role in _FLOW_ROLES}
        for mode_role in ("mode_home", "mode_ess"):
            fields_by_role[mode_role] = _round_mode(fields_by_role[mode_role])
        homes[home.id] = HomeSchedule(home=home.id, indoor_temp=temp, **fields_by_role)
    if not homes:
        raise ValueError("model metadata names no home of this config")

    community_net = np.sum([h.net for h in homes.values()], axis=0)
    return CommunitySchedule(
        homes=homes,
        community_net=community_net,
        status_flags=_round_mode(status) if has_community else None,
        slot_costs=slot_costs if has_community else None,
    )


def community_cost(schedule: CommunitySchedule, config: CommunityConfig) -> float:
    """Day cost of the pooled exchange: imports at ``P``, exports at
    ``alpha * P``, slots with zero net exchange contribute nothing."""
    cost = 0.0
    for t, net in enumerate(schedule.community_net):
        if net > 0:
            cost += float(config.buy_price[t]) * net
        elif net < 0:
            cost += config.alpha * float(config.buy_price[t]) * net
    return cost


# ---------------------------------------------------------------------------
# independent feasibility checking


@dataclass(frozen=True)
class Violation:
    family: str
    home: str | None
    slot: int | None
    magnitude: float


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...]
    warnings: tuple[Violation, ...]
    max_violation: float
    cost_recomputed: float
    cost_matches_solver: bool

    @property
    def ok(self) -> bool:
        return not self.violations


def check_schedule_feasibility(
    schedule: CommunitySchedule,
    config: CommunityConfig,
    tolerance: float = 1e-6,
    reference_objective: float | None = None,
    community_peak_as_warning: bool = False,
) -> FeasibilityReport:
    """Re-verify a schedule against the raw config.

    Temperatures are re-simulated from HVAC powers and storage levels
    re-accumulated from flows, then compared with the schedule's own arrays,
    so a schedule cannot pass on the strength of its claimed state
    variables.  ``community_peak_as_warning`` downgrades pool-band breaches
    to warnings; the selfish baselines never constrained that band, so a
    breach there is reportable but not an extraction bug.
    """
    T = config.horizon_slots
    dt = config.slot_hours
    violations: list[Violation] = []
    warnings: list[Violation] = []

    def bad(family: str, home: str | None, slot: int | None, magnitude: float):
        violations.append(Violation(family, home, slot, float(magnitude)))

    for home in config.homes:
        hs = schedule.homes.get(home.id)
        if hs is None:
            bad("missing_home", home.id, None, np.inf)
            continue
        hv, ess, pv = home.hvac, home.ess, home.pv

        for t in range(T):
            p = hs.hvac_power[t]
            excess = max(-p, p - hv.p_max)
            if excess > tolerance:
                bad("hvac_power_range", home.id, t + 1, excess)

        clipped_p = np.clip(hs.hvac_power, 0.0, hv.p_max)
        traj = simulate_indoor_trajectory(hv.t_in_initial, config.t_out, clipped_p, hv, dt)
        for t in range(1, T + 1):
            drift = abs(traj.indoor_temp[t] - hs.indoor_temp[t])
            if drift > tolerance:
                bad("temperature_recursion", home.id, t, drift)
            outside = max(hv.t_min - traj.indoor_temp[t], traj.indoor_temp[t] - hv.t_max)
            if outside > tolerance:
                bad("comfort_band", home.id, t, outside)

        for role in ("com_load", "com_buy", "com_sell", "ess_load", "ess_sell",
                     "com_charge", "res_charge", "res_load", "res_sell"):
            arr = getattr(hs, role)
            for t in range(T):
                if arr[t] < -tolerance:
                    bad("nonnegative_flow", home.id, t + 1, -arr[t])

        for role in ("mode_home", "mode_ess"):
            arr = getattr(hs, role)
            for t in range(T):
                drift = abs(arr[t] - round(arr[t]))
                if drift > tolerance or not -tolerance <= arr[t] <= 1 + tolerance:
                    bad("mode_integrality", home.id, t + 1, max(drift, -arr[t], arr[t] - 1))

        if pv is not None:
            for t in range(T):
                produced = pv_output_energy(float(config.ghi[t]), pv.panel_area, pv.efficiency, dt)
                gap = abs(hs.res_load[t] + hs.res_sell[t] + hs.res_charge[t] - produced)
                if gap > tolerance:
                    bad("pv_split", home.id, t + 1, gap)
        else:
            for t in range(T):
                stray = abs(hs.res_load[t]) + abs(hs.res_sell[t]) + abs(hs.res_charge[t])
                if stray > tolerance:
                    bad("absent_der_flow", home.id, t + 1, stray)

        if ess is not None:
            eta = ess.efficiency
            level = ess.level_initial
            for t in range(T):
                discharge = hs.ess_load[t] + hs.ess_sell[t]
                charge = hs.res_charge[t] + hs.com_charge[t]
                level = level - discharge / eta + charge * eta
                drift = abs(level - hs.ess_level[t])
                if drift > tolerance:
                    bad("ess_level_recursion", home.id, t + 1, drift)
                outside = max(ess.level_min - level, level - ess.level_max)
                if outside > tolerance:
                    bad("ess_level_range", home.id, t + 1, outside)
                mode = hs.mode_ess[t]
                over_charge = charge - ess.charge_rate_max * dt * mode
                if over_charge > tolerance:
                    bad("ess_charge_rate", home.id, t + 1, over_charge)
                over_discharge = discharge - ess.discharge_rate_max * dt * (1.0 - mode)
                if over_discharge > tolerance:
                    bad("ess_discharge_rate", home.id, t + 1, over_discharge)
                if min(charge, discharge) > tolerance:
                    bad("ess_simultaneity", home.id, t + 1, min(charge, discharge))
            terminal = abs(level - ess.level_initial)
            if terminal > tolerance:
                bad("ess_terminal_level", home.id, T, terminal)
        else:
            for t in range(T):
                stray = abs(hs.ess_load[t]) + abs(hs.ess_sell[t]) + abs(hs.com_charge[t])
                if stray > tolerance:
                    bad("absent_der_flow", home.id, t + 1, stray)

        for t in range(T):
            supplied = hs.com_load[t] + hs.ess_load[t] + hs.res_load[t]
            gap = abs(home.fixed_load[t] + hs.hvac_power[t] * dt - supplied)
            if gap > tolerance:
                bad("home_balance", home.id, t + 1, gap)
            buy_gap = abs(hs.com_buy[t] - hs.com_load[t] - hs.com_charge[t])
            sell_gap = abs(hs.com_sell[t] - hs.res_sell[t] - hs.ess_sell[t])
            if max(buy_gap, sell_gap) > tolerance:
                bad("buy_sell_definition", home.id, t + 1, max(buy_gap, sell_gap))
            overlap = min(hs.com_buy[t], hs.com_sell[t])
            if overlap > tolerance:
                bad("buy_sell_exclusivity", home.id, t + 1, overlap)

    net_sum = np.sum([hs.net for hs in schedule.homes.values()], axis=0)
    for t in range(T):
        drift = abs(net_sum[t] - schedule.community_net[t])
        if drift > tolerance:
            bad("community_net", None, t + 1, drift)
        breach = abs(schedule.community_net[t]) - config.community_peak
        if breach > tolerance:
            v = Violation("community_peak", None, t + 1, float(breach))
            (warnings if community_peak_as_warning else violations).append(v)

    cost = community_cost(schedule, config)
    matches = True
    if reference_objective is not None:
        matches = bool(abs(cost - reference_objective) <= tolerance * (1.0 + abs(reference_objective)))
    return FeasibilityReport(
        violations=tuple(violations),
        warnings=tuple(warnings),
        max_violation=max((v.magnitude for v in violations), default=0.0),
        cost_recomputed=cost,
        cost_matches_solver=matches,
    )


# ---------------------------------------------------------------------------
# schedule and solution serialization


def schedule_to_dict(schedule: CommunitySchedule) -> dict:
    doc: dict = {
        "homes": {
            hid: {
                "indoor_temp": list(hs.indoor_temp),
                **{role: list(getattr(hs, role)) for role in _FLOW_ROLES},
                "net": list(hs.net),
            }
            for hid, hs in schedule.homes.items()
        },
        "community_net": list(schedule.community_net),
        "status_flags": None if schedule.status_flags is None else list(schedule.status_flags),
        "slot_costs": None if schedule.slot_costs is None else list(schedule.slot_costs),
    }
    return doc


def schedule_from_dict(doc: Mapping, config: CommunityConfig) -> CommunitySchedule:
    """Rebuild a schedule written by :func:`schedule_to_dict`."""
    homes_doc = doc.get("homes")
    if not isinstance(homes_doc, Mapping):
        raise ValueError("schedule document lacks a 'homes' mapping")
    T = config.horizon_slots
    homes: dict[str, HomeSchedule] = {}
    for home in config.homes:
        h = homes_doc.get(home.id)
        if h is None:
            raise ValueError(f"schedule is missing home {home.id!r}")
        temp = np.asarray(h["indoor_temp"], dtype=float)
        if temp.shape != (T + 1,):
            raise ValueError(f"home {home.id!r}: indoor_temp must have {T + 1} entries")
        arrays = {}
        for role in _FLOW_ROLES:
            arr = np.asarray(h.get(role, np.zeros(T)), dtype=float)
            if arr.shape != (T,):
                raise ValueError(f"home {home.id!r}: {role} must have {T} entries")
            arrays[role] = arr
        homes[home.id] = HomeSchedule(home=home.id, indoor_temp=temp, **arrays)
    community_net = np.sum([hs.net for hs in homes.values()], axis=0)
    flags = doc.get("status_flags")
    costs = doc.get("slot_costs")
    return CommunitySchedule(
        homes=homes,
        community_net=community_net,
        status_flags=None if flags is None else np.asarray(flags, dtype=float),
        slot_costs=None if costs is None else np.asarray(costs, dtype=float),
    )


def write_solution(solution: Solution, stream: IO[str]) -> None:
    """Plain-text solution dump: header lines then one ``name value`` pair
    per variable, the format expected back by :func:`read_solution`."""
    stream.write(f"objective {'none' if solution.objective is None else repr(solution.objective)}\n")
    stream.write(f"status {solution.status}\n")
    if solution.mip_gap is not None:
        stream.write(f"gap {solution.mip_gap!r}\n")
    if solution.values is not None:
        for name, value in solution.values.items():
            stream.write(f"{name} {value!r}\n")


def read_solution(stream: Union[IO[str], str]) -> Solution:
    """Parse a solution file, e.g. one produced by an external solver run
    against the exported LP model."""
    text = stream if isinstance(stream, str) else stream.read()
    objective: float | None = None
    status: str | None = None
    gap: float | None = None
    values: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected '<name> <value>'")
        key, raw = parts
        if key == "objective":
            objective = None if raw == "none" else float(raw)
        elif key == "status":
            if raw not in _STATUS_TOKENS:
                raise ValueError(f"line {lineno}: unknown status {raw!r}")
            status = raw
        elif key == "gap":
            gap = float(raw)
        else:
            try:
                values[key] = float(raw)
            except ValueError:
                raise ValueError(f"line {lineno}: bad value for {key!r}") from None
    if status is None:
        raise ValueError("solution file has no status line")
    if status in ("optimal", "feasible") and not values:
        raise ValueError(f"status {status!r} requires variable values")
    return Solution(
        status=status,
        objective=objective,
        values=values if status in ("optimal", "feasible") else None,
        solve_time=0.0,
        mip_gap=gap,
    )
