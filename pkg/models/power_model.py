"""
File: models/power_model.py
Purpose: Current, energy and battery arithmetic for the three pipelines
Version: 1.0.0
Author: StreamFirst Team

Revision History:
- v1.0.0: Scenario / PowerReport, average current, reduction, energy,
          battery life and the pipeline comparison table

Notes:
- regular_wf / regular_df: host runs the whole network, IMU alone on the
  sensor side.
- ours: host current interpolates linearly in the wake fraction p between
  the active and sleep figures; the IMU with its processing core adds a
  constant.
- Reductions are relative to regular_wf and rounded to whole percent;
  battery life in hours is reported raw and rounded.
"""

import logging
from dataclasses import asdict, dataclass

logger = logging.getLogger(__name__)

# ========== CONSTANTS ==========

REGULAR_WF = 'regular_wf'
REGULAR_DF = 'regular_df'
OURS = 'ours'
PIPELINES = (REGULAR_WF, REGULAR_DF, OURS)

SECONDS_PER_HOUR = 3600.0

# ========== DOMAIN TYPES ==========

@dataclass(frozen=True)
class Scenario:
    pipeline: str
    wake_fraction: float = 1.0

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ValueError(f'pipeline must be one of {PIPELINES}, got {self.pipeline!r}')
        if not 0.0 <= self.wake_fraction <= 1.0:
            raise ValueError(f'wake_fraction must be in [0, 1], got {self.wake_fraction}')


@dataclass(frozen=True)
class PowerReport:
    pipeline: str
    wake_fraction: float
    avg_current_ma: float
    reduction_vs_regular_pct: int
    reduction_vs_regular_raw_pct: float
    duration_s: float
    energy_j: float
    battery_life_h: float
    battery_life_h_rounded: int

    def to_dict(self):
        return asdict(self)


# ========== CALCULATIONS ==========

def average_current(scenario, profile):
    """
    Average current draw of the whole system in mA

    Args:
        scenario: Scenario (pipeline + wake fraction)
        profile: DeviceProfile holding the measured currents

    Returns:
        Current in mA
    """
    currents = profile.currents_ma
    if scenario.pipeline == REGULAR_WF:
        return currents.mcu_regular_wf + currents.imu_only
    if scenario.pipeline == REGULAR_DF:
        return currents.mcu_regular_df + currents.imu_only
    p = scenario.wake_fraction
    active = currents.mcu_ours_active + currents.imu_plus_ispu
    sleep = currents.mcu_ours_sleep + currents.imu_plus_ispu
    return p * active + (1.0 - p) * sleep


def reduction_raw_pct(scenario, profile):
    baseline = average_current(Scenario(REGULAR_WF), profile)
    return 100.0 * (baseline - average_current(scenario, profile)) / baseline


def reduction_pct(scenario, profile):
    """Percent saving against the regular width-first pipeline, whole percent"""
    return int(round(reduction_raw_pct(scenario, profile)))


def energy_joules(current_ma, voltage_v, duration_s):
    """I * V * t with the current given in mA"""
    return current_ma / 1000.0 * voltage_v * duration_s


def battery_life_hours(capacity_mah, current_ma):
    if not current_ma > 0:
        raise ValueError(f'current must be positive, got {current_ma}')
    return capacity_mah / current_ma


def power_report(scenario, profile, duration_s=SECONDS_PER_HOUR):
    current = average_current(scenario, profile)
    life = battery_life_hours(profile.battery_mah, current)
    logger.debug('power %s p=%.3f: %.3f mA, %.1f h', scenario.pipeline, scenario.wake_fraction, current, life)
    return PowerReport(
        pipeline=scenario.pipeline,
        wake_fraction=scenario.wake_fraction,
        avg_current_ma=round(current, 9),
        reduction_vs_regular_pct=reduction_pct(scenario, profile),
        reduction_vs_regular_raw_pct=round(reduction_raw_pct(scenario, profile), 6),
        duration_s=duration_s,
        energy_j=round(energy_joules(current, profile.voltage_v, duration_s), 6),
        battery_life_h=round(life, 6),
        battery_life_h_rounded=int(round(life)),
    )


def compare_pipelines(profile, wake_fraction=1.0, duration_s=SECONDS_PER_HOUR):
    """One PowerReport per pipeline; the regular pipelines ignore the wake fraction"""
    return [power_report(Scenario(pipeline, wake_fraction if pipeline == OURS else 1.0), profile, duration_s)
            for pipeline in PIPELINES]
