"""Local trading settlement at the mid-market rate.

After the day is scheduled, each slot's internal trades are settled at
local prices anchored to a mid price between the external buy price ``P``
and sell price ``alpha * P``.  When the community as a whole imports, the
local sell price sticks at the mid price and the local buy price blends the
mid price with ``P`` so that buyers exactly fund both the sellers and the
external bill; symmetrically when the community exports.  Settlement is
therefore budget balanced by construction: the per-home costs of a slot sum
to exactly what the community pays the external provider for that slot.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import IO, Mapping, Sequence, Union

import numpy as np

from .domain import MID_PRICE_CASES, CommunityConfig
from .solve import CommunitySchedule, community_cost

ZERO_NET_TOL = 1e-9


@dataclass(frozen=True)
class SlotSettlement:
    slot: int
    p_local_buy: float
    p_local_sell: float
    per_home_cost: dict[str, float]
    net_community: float


@dataclass(frozen=True)
class SettlementReport:
    slots: tuple[SlotSettlement, ...]
    per_home_daily_cost: dict[str, float]
    community_daily_cost: float
    budget_residual: float


def mid_price(p_mg: float, alpha: float, policy: Union[str, float]) -> float:
    """Mid price between the external sell price ``alpha * p_mg`` and ``p_mg``.

    ``case1`` sits a quarter of the way up from the sell price, ``case2``
    halfway, ``case3`` three quarters up.  A number is taken as an explicit
    mid price and must lie inside the band.
    """
    if isinstance(policy, str):
        if policy == "case1":
            return (1.0 + 3.0 * alpha) / 4.0 * p_mg
        if policy == "case2":
            return (1.0 + alpha) / 2.0 * p_mg
        if policy == "case3":
            return (3.0 + alpha) / 4.0 * p_mg
        raise ValueError(f"unknown mid price policy {policy!r}")
    value = float(policy)
    if not alpha * p_mg <= value <= p_mg:
        raise ValueError(f"explicit mid price {value} outside [{alpha * p_mg}, {p_mg}]")
    return value


def mid_price_series(config: CommunityConfig, policy: Union[str, Sequence[float], None] = None) -> np.ndarray:
    """Per-slot mid prices under ``policy`` (default: the config's policy)."""
    if policy is None:
        policy = config.mid_price_policy
    if isinstance(policy, str):
        return np.array([mid_price(float(p), config.alpha, policy) for p in config.buy_price])
    series = np.asarray(policy, dtype=float)
    if series.shape != (config.horizon_slots,):
        raise ValueError(f"explicit mid price series must have {config.horizon_slots} entries")
    return np.array([mid_price(float(p), config.alpha, float(v)) for p, v in zip(config.buy_price, series)])


def settle_timeslot(
    net_by_home: Mapping[str, float],
    p_mg: float,
    alpha: float,
    p_mid: float,
    slot: int = 0,
) -> SlotSettlement:
    """Settle one slot given each home's net position (positive buys).

    With a net-importing community the local sell price is ``p_mid`` and the
    local buy price is the volume blend ``(p_mid * sales + p_mg * net) /
    purchases``; net-exporting is the mirror image built on the external
    sell price; a balanced slot settles both sides at ``p_mid``.
    """
    if not alpha * p_mg - 1e-12 <= p_mid <= p_mg + 1e-12:
        raise ValueError(f"mid price {p_mid} outside [{alpha * p_mg}, {p_mg}]")
    buys = sum(max(v, 0.0) for v in net_by_home.values())
    sells = sum(max(-v, 0.0) for v in net_by_home.values())
    net = buys - sells
    if abs(net) <= ZERO_NET_TOL:
        p_lb = p_ls = p_mid
    elif net > 0:
        p_ls = p_mid
        p_lb = (p_mid * sells + p_mg * net) / buys
    else:
        p_lb = p_mid
        p_ls = (p_mid * buys + alpha * p_mg * (-net)) / sells
    costs = {
        home: (p_lb * v if v > 0 else p_ls * v if v < 0 else 0.0)
        for home, v in net_by_home.items()
    }
    return SlotSettlement(
        slot=slot,
        p_local_buy=p_lb,
        p_local_sell=p_ls,
        per_home_cost=costs,
        net_community=net,
    )


def settle_day(
    schedule: CommunitySchedule,
    config: CommunityConfig,
    policy: Union[str, Sequence[float], None] = None,
) -> SettlementReport:
    """Settle a whole scheduled day at the mid-market rate."""
    mids = mid_price_series(config, policy)
    slots = []
    daily = {hid: 0.0 for hid in schedule.homes}
    for t in range(config.horizon_slots):
        nets = {hid: float(hs.net[t]) for hid, hs in schedule.homes.items()}
        slot = settle_timeslot(nets, float(config.buy_price[t]), config.alpha, float(mids[t]), slot=t + 1)
        slots.append(slot)
        for hid, cost in slot.per_home_cost.items():
            daily[hid] += cost
    total = community_cost(schedule, config)
    return SettlementReport(
        slots=tuple(slots),
        per_home_daily_cost=daily,
        community_daily_cost=total,
        budget_residual=total - sum(daily.values()),
    )


def settle_day_at_external_prices(schedule: CommunitySchedule, config: CommunityConfig) -> SettlementReport:
    """Settlement without any local market: every home buys at ``P`` and
    sells at ``alpha * P`` on its own.  The community cost is then by
    definition the sum of the individual bills."""
    slots = []
    daily = {hid: 0.0 for hid in schedule.homes}
    for t in range(config.horizon_slots):
        p = float(config.buy_price[t])
        costs = {}
        net_total = 0.0
        for hid, hs in schedule.homes.items():
            v = float(hs.net[t])
            costs[hid] = p * v if v > 0 else config.alpha * p * v if v < 0 else 0.0
            daily[hid] += costs[hid]
            net_total += v
        slots.append(
            SlotSettlement(
                slot=t + 1,
                p_local_buy=p,
                p_local_sell=config.alpha * p,
                per_home_cost=costs,
                net_community=net_total,
            )
        )
    return SettlementReport(
        slots=tuple(slots),
        per_home_daily_cost=daily,
        community_daily_cost=sum(daily.values()),
        budget_residual=0.0,
    )


# ---------------------------------------------------------------------------
# serialization


def settlement_to_csv(report: SettlementReport, stream: IO[str]) -> None:
    """Long-format CSV: ``slot,p_local_buy,p_local_sell,home,cost``."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["slot", "p_local_buy", "p_local_sell", "home", "cost"])
    for slot in report.slots:
        for home, cost in slot.per_home_cost.items():
            writer.writerow([slot.slot, repr(slot.p_local_buy), repr(slot.p_local_sell), home, repr(cost)])


def settlement_to_dict(report: SettlementReport) -> dict:
    return {
        "slots": [
            {
                "slot": s.slot,
                "p_local_buy": s.p_local_buy,
                "p_local_sell": s.p_local_sell,
                "net_community": s.net_community,
                "per_home_cost": dict(s.per_home_cost),
            }
            for s in report.slots
        ],
        "per_home_daily_cost": dict(report.per_home_daily_cost),
        "community_daily_cost": report.community_daily_cost,
        "budget_residual": report.budget_residual,
    }
