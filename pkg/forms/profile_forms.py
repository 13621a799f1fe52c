"""
File: forms/profile_forms.py
Purpose: WTForms validation for device profile documents
Version: 1.0.0
Author: StreamFirst Team

Revision History:
- v1.0.0: DeviceProfileForm with nested CurrentsForm; used for profile JSON
          files and for POST /profiles payloads

Notes:
- Plain wtforms.Form (no CSRF): the input is a JSON document flattened to
  form data, nested currents become `currents_ma-<name>`.
- Missing fields keep the reference defaults.
"""

from dataclasses import fields

from werkzeug.datastructures import MultiDict
from wtforms import FloatField, Form, FormField, IntegerField, StringField, TextAreaField
from wtforms.validators import Length, NumberRange, Optional, Regexp

from models.errors import ProfileError
from models.partition import Currents, DeviceProfile

# ========== FORM DEFINITIONS ==========

class CurrentsForm(Form):
    """Measured average currents (mA)"""
    mcu_regular_wf = FloatField('Host, regular pipeline, width-first', default=Currents.mcu_regular_wf,
                                validators=[Optional(), NumberRange(min=0.001)])
    mcu_regular_df = FloatField('Host, regular pipeline, depth-first', default=Currents.mcu_regular_df,
                                validators=[Optional(), NumberRange(min=0.001)])
    imu_only = FloatField('IMU alone', default=Currents.imu_only,
                          validators=[Optional(), NumberRange(min=0.001)])
    mcu_ours_active = FloatField('Host woken by the gate', default=Currents.mcu_ours_active,
                                 validators=[Optional(), NumberRange(min=0.001)])
    mcu_ours_sleep = FloatField('Host left asleep by the gate', default=Currents.mcu_ours_sleep,
                                validators=[Optional(), NumberRange(min=0.001)])
    imu_plus_ispu = FloatField('IMU with its processing core', default=Currents.imu_plus_ispu,
                               validators=[Optional(), NumberRange(min=0.001)])


class DeviceProfileForm(Form):
    """
    Sensor core limits, supply and currents
    Names are lowercase slugs like ispu-10mhz
    """
    name = StringField('Profile Name',
                       validators=[Optional(), Length(max=50),
                                   Regexp(r'^[a-z0-9][a-z0-9._-]*$', message='lowercase letters, digits, . _ - only')],
                       default='custom')
    description = TextAreaField('Description', validators=[Optional()])

    clock_hz = FloatField('Core Clock (Hz)', default=10e6,
                          validators=[Optional(), NumberRange(min=1e3, max=1e9)])
    data_ram_bytes = IntegerField('Data RAM (bytes)', default=8192,
                                  validators=[Optional(), NumberRange(min=1)])
    program_ram_bytes = IntegerField('Program RAM (bytes)', default=32768,
                                     validators=[Optional(), NumberRange(min=1)])
    odr_hz = FloatField('Output Data Rate (Hz)', default=26.0,
                        validators=[Optional(), NumberRange(min=0.1, max=10000)])
    fifo_depth_samples = IntegerField('FIFO Depth (samples)', default=5,
                                      validators=[Optional(), NumberRange(min=1)])
    voltage_v = FloatField('Supply Voltage (V)', default=1.8,
                           validators=[Optional(), NumberRange(min=0.1, max=12)])
    battery_mah = FloatField('Battery Capacity (mAh)', default=200.0,
                             validators=[Optional(), NumberRange(min=0.001)])

    currents_ma = FormField(CurrentsForm)


# ========== DOCUMENT HELPERS ==========

PROFILE_KEYS = ('name', 'description', 'clock_hz', 'data_ram_bytes', 'program_ram_bytes', 'odr_hz',
                'fifo_depth_samples', 'voltage_v', 'battery_mah', 'currents_ma')


def profile_formdata(document):
    """Flatten a profile document into form data"""
    items = []
    for key, value in document.items():
        if key == 'currents_ma' and isinstance(value, dict):
            items.extend((f'currents_ma-{name}', str(current)) for name, current in value.items())
        elif value is not None:
            items.append((key, str(value)))
    return MultiDict(items)


def validate_profile_document(document, default_name='custom'):
    """
    Validate a profile document and return (DeviceProfile, description)

    Raises:
        ProfileError: unknown keys, or field errors (details['errors'])
    """
    if not isinstance(document, dict):
        raise ProfileError('profile document must be a JSON object')
    unknown = sorted(set(document) - set(PROFILE_KEYS))
    currents = document.get('currents_ma', {})
    if not isinstance(currents, dict):
        raise ProfileError('currents_ma must be an object', field='currents_ma')
    unknown += sorted(f'currents_ma.{key}' for key in set(currents) - {item.name for item in fields(Currents)})
    if unknown:
        raise ProfileError(f'unknown profile fields: {", ".join(unknown)}', fields=unknown)

    document = dict(document)
    document.setdefault('name', default_name)
    form = DeviceProfileForm(formdata=profile_formdata(document))
    if not form.validate():
        raise ProfileError(f'invalid profile: {form.errors}', errors=form.errors)

    data = dict(form.data)
    description = data.pop('description') or None
    try:
        return DeviceProfile(**data), description
    except TypeError as exc:
        raise ProfileError(f'invalid profile: {exc}') from exc
