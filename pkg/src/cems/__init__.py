"""Day-ahead scheduling and local-trading settlement for home energy
communities: a pooled MILP scheduler, selfish baselines, mid-market-rate
settlement, and an independent feasibility checker."""

from .domain import (
    CommunityConfig,
    ConfigError,
    EssParams,
    HomeConfig,
    HvacParams,
    InvalidConfigError,
    ParseError,
    PvParams,
    SchemaError,
    ValidationReport,
    archetype_counts,
    config_to_dict,
    config_to_json,
    generate_synthetic_community,
    load_community_config,
    replication_config,
    validate_config,
)
from .milp import (
    BigM,
    MilpModel,
    big_m_value,
    build_home_model,
    build_system_centric_model,
    relaxed,
    write_lp,
)
from .scenarios import (
    BenchReport,
    ComparisonReport,
    InfeasibleHomeError,
    ScenarioResult,
    bench_scaling,
    compare,
    run_no_cems,
    run_prosumer_centric,
    run_scenario,
    run_system_centric,
)
from .solve import (
    CommunitySchedule,
    FeasibilityReport,
    HomeSchedule,
    Solution,
    SolverError,
    SolverOptions,
    check_schedule_feasibility,
    community_cost,
    extract_schedule,
    read_solution,
    solve_model,
    write_solution,
)
from .thermal import (
    ThermalTrajectory,
    next_indoor_temperature,
    pv_output_energy,
    simulate_indoor_trajectory,
)
from .trading import (
    SettlementReport,
    SlotSettlement,
    mid_price,
    mid_price_series,
    settle_day,
    settle_day_at_external_prices,
    settle_timeslot,
)

__version__ = "0.1.0"
