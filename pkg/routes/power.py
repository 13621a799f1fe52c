"""
File: routes/power.py
Purpose: Current, energy and battery figures for a stored device profile
Version: 1.0.0
Author: StreamFirst Team
"""

from flask import Blueprint, jsonify, request

from forms.analysis_forms import PowerQueryForm
from models.power_model import Scenario, compare_pipelines, power_report
from routes.profiles import form_errors, get_profile_or_404

power_bp = Blueprint('power', __name__, url_prefix='/power')


@power_bp.route('')
def power_query():
    """
    GET /power?profile=ispu-10mhz&pipeline=ours&wake_fraction=0.3&duration_s=3600
    pipeline=all (default) returns the comparison of every pipeline
    """
    form = PowerQueryForm(formdata=request.args)
    if not form.validate():
        return form_errors(form)

    profile = get_profile_or_404(form.profile.data)
    if form.pipeline.data == 'all':
        reports = compare_pipelines(profile, form.wake_fraction.data, form.duration_s.data)
        return jsonify({'profile': profile.name, 'reports': [r.to_dict() for r in reports]})

    report = power_report(Scenario(form.pipeline.data, form.wake_fraction.data), profile, form.duration_s.data)
    return jsonify({'profile': profile.name, 'report': report.to_dict()})
