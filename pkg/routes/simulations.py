"""
File: routes/simulations.py
Purpose: Run and list recorded trace replays
Version: 1.0.0
Author: StreamFirst Team

Revision History:
- v1.0.0: POST /simulations replays a generated trace and records the run;
          GET /simulations lists runs, GET /simulations/<id> returns one
"""

from flask import Blueprint, current_app, jsonify, request
from werkzeug.datastructures import MultiDict

from forms.analysis_forms import ReplayForm
from models.datagen import SynthConfig, generate_trace
from models.records import SimulationRun, db
from models.simulator import replay
from routes.planner import current_network
from routes.profiles import form_errors, get_profile_record_or_404

simulations_bp = Blueprint('simulations', __name__, url_prefix='/simulations')


@simulations_bp.route('')
def list_simulations():
    runs = SimulationRun.query.order_by(SimulationRun.created_at.desc(), SimulationRun.id.desc()).limit(50).all()
    return jsonify([run.to_dict() for run in runs])


@simulations_bp.route('/<int:run_id>')
def get_simulation(run_id):
    run = db.get_or_404(SimulationRun, run_id)
    return jsonify(run.to_dict(include_report=True))


@simulations_bp.route('', methods=['POST'])
def create_simulation():
    """
    Replay a synthetic single-label trace through the configured model
    Body (JSON or form): label, seconds, mode, pipeline, seed, threshold, odr_hz, profile
    """
    payload = request.get_json(silent=True)
    formdata = MultiDict({k: str(v) for k, v in payload.items()}) if isinstance(payload, dict) else request.form
    form = ReplayForm(formdata=formdata)
    if not form.validate():
        return form_errors(form)

    record = get_profile_record_or_404(form.profile.data)
    profile = record.to_profile()
    if form.odr_hz.data:
        profile = profile.with_odr(form.odr_hz.data)

    cfg = SynthConfig(seed=form.seed.data, odr_hz=profile.odr_hz)
    trace = generate_trace(cfg, form.label.data, form.seconds.data)
    report = replay(trace, current_network(), form.mode.data, profile,
                    pipeline=form.pipeline.data, threshold=form.threshold.data)

    run = SimulationRun.from_report(report, profile_record=record,
                                    label=form.label_text.data or f'{form.label.data} {form.seconds.data:g}s',
                                    seed=form.seed.data)
    db.session.add(run)
    db.session.commit()
    current_app.logger.info('Recorded simulation %d (%s/%s)', run.id, report.pipeline, report.mode)
    return jsonify(run.to_dict(include_report=True)), 201
