"""
File: forms/analysis_forms.py
Purpose: Query validation for the power, planner and simulation endpoints
Version: 1.0.0
Author: StreamFirst Team

Notes:
- FlaskForm with CSRF disabled: these back a JSON API, not HTML pages.
- Routes pass request.args (GET) or the JSON body (POST) as formdata.
"""

from flask_wtf import FlaskForm
from wtforms import FloatField, IntegerField, SelectField, StringField
from wtforms.validators import Length, NumberRange, Optional

from models.datagen import LABELS
from models.partition import MODES
from models.power_model import PIPELINES

# ========== FORM DEFINITIONS ==========

class ApiForm(FlaskForm):
    class Meta:
        csrf = False

    profile = StringField('Device Profile', validators=[Optional(), Length(max=50)], default='ispu-10mhz')


class PowerQueryForm(ApiForm):
    """Average current, reduction, energy and battery life for one scenario"""
    pipeline = SelectField('Pipeline', choices=[(p, p) for p in PIPELINES + ('all',)],
                           validators=[Optional()], default='all')
    wake_fraction = FloatField('Wake Fraction', validators=[Optional(), NumberRange(min=0.0, max=1.0)],
                               default=1.0)
    duration_s = FloatField('Duration (s)', validators=[Optional(), NumberRange(min=0.001)], default=3600.0)


class SweepForm(ApiForm):
    """Window sweep in whole seconds"""
    first_s = IntegerField('First Window (s)', validators=[Optional(), NumberRange(min=1, max=60)], default=1)
    last_s = IntegerField('Last Window (s)', validators=[Optional(), NumberRange(min=1, max=60)], default=10)
    mode = SelectField('Mode', choices=[(m, m) for m in MODES + ('both',)], validators=[Optional()],
                       default='both')

    def validate(self, extra_validators=None):
        if not super().validate(extra_validators):
            return False
        if self.first_s.data > self.last_s.data:
            self.last_s.errors.append('must not be smaller than first_s')
            return False
        return True


class FeasibilityForm(ApiForm):
    mode = SelectField('Mode', choices=[(m, m) for m in MODES], validators=[Optional()], default='depth_first')
    window_s = FloatField('Window (s)', validators=[Optional(), NumberRange(min=0.1, max=600)], default=1.0)
    odr_hz = FloatField('ODR override (Hz)', validators=[Optional(), NumberRange(min=0.1, max=10000)])


class ReplayForm(ApiForm):
    """Replay of a generated single-label trace"""
    label = SelectField('Trace Label', choices=[(label, label) for label in LABELS], validators=[Optional()],
                        default='worn')
    seconds = FloatField('Trace Length (s)', validators=[Optional(), NumberRange(min=1, max=3600)], default=60.0)
    mode = SelectField('Mode', choices=[(m, m) for m in MODES], validators=[Optional()], default='depth_first')
    pipeline = SelectField('Pipeline', choices=[('ours', 'ours'), ('regular', 'regular')],
                           validators=[Optional()], default='ours')
    seed = IntegerField('Seed', validators=[Optional(), NumberRange(min=0)], default=0)
    threshold = FloatField('Gate Threshold', validators=[Optional(), NumberRange(min=0.001, max=0.999)])
    odr_hz = FloatField('ODR override (Hz)', validators=[Optional(), NumberRange(min=0.1, max=10000)])
    label_text = StringField('Run Label', validators=[Optional(), Length(max=100)])
