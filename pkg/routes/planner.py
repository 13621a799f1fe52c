"""
File: routes/planner.py
Purpose: Window sweep and feasibility verdicts over the configured model
Version: 1.0.0
Author: StreamFirst Team

Revision History:
- v1.0.0: GET /planner/sweep, GET /planner/feasibility, GET /planner/model
"""

import json

from flask import Blueprint, current_app, jsonify, request

from forms.analysis_forms import FeasibilityForm, SweepForm
from models.model_io import load_model
from models.partition import MODES, feasibility, reference_params
from models.simulator import sweep_window, window_grid
from routes.profiles import form_errors, get_profile_or_404

# ========== BLUEPRINT INITIALIZATION ==========

planner_bp = Blueprint('planner', __name__, url_prefix='/planner')

# ========== UTILITY FUNCTIONS ==========

def current_network():
    """Network from STREAMFIRST_MODEL_PATH, loaded once per app"""
    path = current_app.config['STREAMFIRST_MODEL_PATH']
    cache = current_app.extensions.setdefault('streamfirst.networks', {})
    if path not in cache:
        cache[path] = load_model(path, seed=current_app.config['STREAMFIRST_SEED'])
    return cache[path]

# ========== ROUTES ==========

@planner_bp.route('/model')
def model_summary():
    network = current_network()
    spec = network.spec
    return jsonify({
        'window_len': spec.window_len,
        'channels': spec.channels,
        'odr_hz': spec.odr_hz,
        'layers': [layer.kind for layer in spec.layers],
        'split_index': spec.split_index,
        'feature_dim': network.feature_dim,
        'ee_threshold': spec.ee_threshold,
        'cost_model': reference_params().to_dict(),
    })


@planner_bp.route('/sweep')
def sweep():
    """GET /planner/sweep?profile=ispu-10mhz&first_s=1&last_s=10&mode=both"""
    form = SweepForm(formdata=request.args)
    if not form.validate():
        return form_errors(form)

    profile = get_profile_or_404(form.profile.data)
    modes = MODES if form.mode.data == 'both' else (form.mode.data,)
    grid = window_grid(form.first_s.data, form.last_s.data, profile.odr_hz)
    table = sweep_window(current_network(), grid, modes, profile)
    return jsonify({'profile': profile.name, 'rows': json.loads(table.to_json(orient='records'))})


@planner_bp.route('/feasibility')
def feasibility_check():
    """GET /planner/feasibility?profile=ispu-10mhz&mode=width_first&window_s=6&odr_hz=50"""
    form = FeasibilityForm(formdata=request.args)
    if not form.validate():
        return form_errors(form)

    profile = get_profile_or_404(form.profile.data)
    if form.odr_hz.data:
        profile = profile.with_odr(form.odr_hz.data)
    T = int(round(form.window_s.data * profile.odr_hz))
    report = feasibility(current_network().g_part, form.mode.data, T, profile)
    return jsonify({'profile': profile.name, 'report': report.to_dict()})
