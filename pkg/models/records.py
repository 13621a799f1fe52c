"""
File: models/records.py
Purpose: Database tables for device profiles and recorded simulation runs
Version: 1.1.0
Author: StreamFirst Team

Revision History:
- v1.0.0: DeviceProfileRecord with seeded defaults
- v1.1.0: SimulationRun table for replays requested over HTTP or `run --record`

Notes:
- Default profiles are seeded on first start, like any other lookup table.
- Currents are stored as flat columns so profiles can be filtered in SQL.
"""

import json
import logging
from datetime import datetime

from flask_sqlalchemy import SQLAlchemy

from models.partition import Currents, DeviceProfile

logger = logging.getLogger(__name__)

# ========== DATABASE INITIALIZATION ==========

db = SQLAlchemy()

# ========== DEVICE PROFILES ==========

class DeviceProfileRecord(db.Model):
    """
    Stored sensor-core + board profile
    Converted to the immutable DeviceProfile before any computation
    """
    __tablename__ = 'device_profiles'

    # ========== PRIMARY KEY ==========
    id = db.Column(db.Integer, primary_key=True)
    name = db.Column(db.String(50), unique=True, nullable=False)  # ispu-10mhz
    description = db.Column(db.Text)

    # ========== SENSOR CORE ==========
    clock_hz = db.Column(db.Float, nullable=False, default=10e6)
    data_ram_bytes = db.Column(db.Integer, nullable=False, default=8192)
    program_ram_bytes = db.Column(db.Integer, nullable=False, default=32768)
    odr_hz = db.Column(db.Float, nullable=False, default=26.0)
    fifo_depth_samples = db.Column(db.Integer, nullable=False, default=5)

    # ========== SUPPLY ==========
    voltage_v = db.Column(db.Float, nullable=False, default=1.8)
    battery_mah = db.Column(db.Float, nullable=False, default=200.0)

    # ========== CURRENTS (mA) ==========
    mcu_regular_wf = db.Column(db.Float, nullable=False, default=4.8)
    mcu_regular_df = db.Column(db.Float, nullable=False, default=5.9)
    imu_only = db.Column(db.Float, nullable=False, default=0.6)
    mcu_ours_active = db.Column(db.Float, nullable=False, default=4.0)
    mcu_ours_sleep = db.Column(db.Float, nullable=False, default=3.8)
    imu_plus_ispu = db.Column(db.Float, nullable=False, default=0.8)

    # ========== TIMESTAMPS ==========
    created_at = db.Column(db.DateTime, default=datetime.utcnow)
    updated_at = db.Column(db.DateTime, default=datetime.utcnow, onupdate=datetime.utcnow)

    # ========== RELATIONSHIPS ==========
    simulations = db.relationship('SimulationRun', backref='profile', lazy='dynamic', cascade='all, delete-orphan')

    CURRENT_FIELDS = ('mcu_regular_wf', 'mcu_regular_df', 'imu_only',
                      'mcu_ours_active', 'mcu_ours_sleep', 'imu_plus_ispu')
    CORE_FIELDS = ('clock_hz', 'data_ram_bytes', 'program_ram_bytes', 'odr_hz',
                   'fifo_depth_samples', 'voltage_v', 'battery_mah')

    def to_profile(self):
        """Immutable DeviceProfile (validates on construction)"""
        currents = Currents(**{key: getattr(self, key) for key in self.CURRENT_FIELDS})
        core = {key: getattr(self, key) for key in self.CORE_FIELDS}
        return DeviceProfile(name=self.name, currents_ma=currents, **core)

    @classmethod
    def from_profile(cls, profile, description=None):
        data = profile.to_dict()
        currents = data.pop('currents_ma')
        return cls(description=description, **data, **currents)

    def to_dict(self):
        data = self.to_profile().to_dict()
        data['description'] = self.description
        return data

    def __repr__(self):
        return f'<DeviceProfileRecord {self.name}>'


# ========== SIMULATION RUNS ==========

class SimulationRun(db.Model):
    """One trace replay and its summary numbers"""
    __tablename__ = 'simulation_runs'

    id = db.Column(db.Integer, primary_key=True)
    profile_id = db.Column(db.Integer, db.ForeignKey('device_profiles.id'), nullable=True)

    # Run configuration
    label = db.Column(db.String(100))  # free text, e.g. "worn 1h"
    mode = db.Column(db.String(20), nullable=False)  # width_first, depth_first
    pipeline = db.Column(db.String(20), nullable=False)  # ours, regular
    odr_hz = db.Column(db.Float, nullable=False)
    seed = db.Column(db.Integer)

    # Results
    samples_total = db.Column(db.Integer, nullable=False, default=0)
    windows_total = db.Column(db.Integer, nullable=False, default=0)
    wakeups = db.Column(db.Integer, nullable=False, default=0)
    suppressions = db.Column(db.Integer, nullable=False, default=0)
    samples_lost = db.Column(db.Integer, nullable=False, default=0)
    avg_current_ma = db.Column(db.Float)
    energy_j = db.Column(db.Float)
    duration_s = db.Column(db.Float)
    report_json = db.Column(db.Text)  # full SimReport, decisions included

    created_at = db.Column(db.DateTime, default=datetime.utcnow)

    @property
    def wake_fraction(self):
        """Share of completed windows that woke the host"""
        if not self.windows_total:
            return 0.0
        return self.wakeups / self.windows_total

    @classmethod
    def from_report(cls, report, profile_record=None, label=None, seed=None):
        summary = report.summary()
        return cls(
            profile=profile_record,
            label=label,
            mode=report.mode,
            pipeline=report.pipeline,
            odr_hz=report.odr_hz,
            seed=seed,
            samples_total=summary['samples_total'],
            windows_total=summary['windows_total'],
            wakeups=summary['wakeups'],
            suppressions=summary['suppressions'],
            samples_lost=summary['samples_lost'],
            avg_current_ma=summary['avg_current_ma'],
            energy_j=summary['energy_j'],
            duration_s=summary['duration_s'],
            report_json=json.dumps(report.to_dict(), sort_keys=True),
        )

    def to_dict(self, include_report=False):
        data = {
            'id': self.id,
            'profile': self.profile.name if self.profile else None,
            'label': self.label,
            'mode': self.mode,
            'pipeline': self.pipeline,
            'odr_hz': self.odr_hz,
            'seed': self.seed,
            'samples_total': self.samples_total,
            'windows_total': self.windows_total,
            'wakeups': self.wakeups,
            'suppressions': self.suppressions,
            'samples_lost': self.samples_lost,
            'wake_fraction': self.wake_fraction,
            'avg_current_ma': self.avg_current_ma,
            'energy_j': self.energy_j,
            'duration_s': self.duration_s,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }
        if include_report and self.report_json:
            data['report'] = json.loads(self.report_json)
        return data

    def __repr__(self):
        return f'<SimulationRun {self.id} {self.mode}/{self.pipeline}>'


# ========== DEFAULT PROFILES ==========
# Reference board: 10 MHz sensor core with 8 kB data RAM, host MCU at 1.8 V

DEFAULT_PROFILES = [
    {
        'name': 'ispu-10mhz',
        'description': 'Reference sensor core at 10 MHz, 26 Hz ODR, 200 mAh battery',
        'clock_hz': 10e6,
    },
    {
        'name': 'ispu-5mhz',
        'description': 'Same core clocked down to 5 MHz; per-trigger times double',
        'clock_hz': 5e6,
    },
]


def init_default_profiles(db_session):
    """
    Seed the profile table with DEFAULT_PROFILES
    Call this during app initialization
    """
    added = 0
    for profile_data in DEFAULT_PROFILES:
        existing = DeviceProfileRecord.query.filter_by(name=profile_data['name']).first()
        if not existing:
            db_session.add(DeviceProfileRecord(**profile_data))
            added += 1

    db_session.commit()
    logger.info('Loaded %d default device profiles (%d new)', len(DEFAULT_PROFILES), added)


def default_profile(name):
    """DeviceProfile for a built-in profile name, None when unknown (no database needed)"""
    for profile_data in DEFAULT_PROFILES:
        if profile_data['name'] == name:
            data = {key: value for key, value in profile_data.items() if key != 'description'}
            return DeviceProfile(**data)
    return None
