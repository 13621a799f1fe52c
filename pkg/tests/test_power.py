import pytest

from models.partition import Currents, DeviceProfile
from models.power_model import (OURS, REGULAR_DF, REGULAR_WF, Scenario, average_current, battery_life_hours,
                                compare_pipelines, energy_joules, power_report, reduction_pct)


@pytest.fixture
def profile():
    return DeviceProfile()


def test_average_currents(profile):
    assert average_current(Scenario(REGULAR_WF), profile) == pytest.approx(5.4)
    assert average_current(Scenario(REGULAR_DF), profile) == pytest.approx(6.5)
    assert average_current(Scenario(OURS, 1.0), profile) == pytest.approx(4.8)
    assert average_current(Scenario(OURS, 0.0), profile) == pytest.approx(4.6)
    assert average_current(Scenario(OURS, 0.5), profile) == pytest.approx(4.7)


def test_reduction_against_regular_pipeline(profile):
    assert reduction_pct(Scenario(OURS, 1.0), profile) == 11
    assert reduction_pct(Scenario(OURS, 0.0), profile) == 15
    assert reduction_pct(Scenario(REGULAR_WF), profile) == 0


def test_ours_current_is_monotonic_in_wake_fraction(profile):
    currents = [average_current(Scenario(OURS, p / 10), profile) for p in range(11)]
    assert currents == sorted(currents)


def test_energy_over_one_hour(profile):
    regular = power_report(Scenario(REGULAR_WF), profile, 3600)
    active = power_report(Scenario(OURS, 1.0), profile, 3600)
    suppressed = power_report(Scenario(OURS, 0.0), profile, 3600)
    assert regular.energy_j == pytest.approx(34.99, abs=0.01)
    assert active.energy_j == pytest.approx(31.10, abs=0.01)
    assert abs(regular.energy_j - 35) <= 0.5
    assert abs(active.energy_j - 31) <= 0.5
    assert active.energy_j - suppressed.energy_j > 1.0


def test_energy_is_linear_in_duration():
    assert energy_joules(5.0, 1.8, 7200) == pytest.approx(2 * energy_joules(5.0, 1.8, 3600))
    assert energy_joules(5.0, 1.8, 0) == 0


def test_battery_life(profile):
    regular = power_report(Scenario(REGULAR_WF), profile)
    ours = power_report(Scenario(OURS, 1.0), profile)
    assert regular.battery_life_h == pytest.approx(37.0, abs=0.05)
    assert ours.battery_life_h == pytest.approx(41.7, abs=0.05)
    assert (regular.battery_life_h_rounded, ours.battery_life_h_rounded) == (37, 42)
    with pytest.raises(ValueError):
        battery_life_hours(200, 0)


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario('turbo')
    with pytest.raises(ValueError):
        Scenario(OURS, 1.5)


def test_compare_pipelines_covers_every_pipeline(profile):
    reports = compare_pipelines(profile, wake_fraction=0.25)
    assert [r.pipeline for r in reports] == [REGULAR_WF, REGULAR_DF, OURS]
    assert reports[0].wake_fraction == 1.0
    assert reports[2].wake_fraction == 0.25
    assert reports[2].avg_current_ma == pytest.approx(4.65)


def test_custom_currents_flow_through():
    profile = DeviceProfile(currents_ma=Currents(mcu_ours_active=2.0, mcu_ours_sleep=1.0, imu_plus_ispu=1.0))
    assert average_current(Scenario(OURS, 0.5), profile) == pytest.approx(2.5)
    assert power_report(Scenario(OURS, 0.5), profile).to_dict()['pipeline'] == OURS
