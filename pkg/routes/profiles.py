"""
File: routes/profiles.py
Purpose: Device profile listing, lookup and creation
Version: 1.0.0
Author: StreamFirst Team

Revision History:
- v1.0.0: GET /profiles, GET /profiles/<name>, POST /profiles
"""

from flask import Blueprint, abort, current_app, jsonify, request

from forms.profile_forms import validate_profile_document
from models.records import DeviceProfileRecord, db

# ========== BLUEPRINT INITIALIZATION ==========

profiles_bp = Blueprint('profiles', __name__, url_prefix='/profiles')

# ========== UTILITY FUNCTIONS ==========

def get_profile_record_or_404(name):
    record = DeviceProfileRecord.query.filter_by(name=name).first()
    if record is None:
        abort(404)
    return record


def get_profile_or_404(name):
    """Immutable DeviceProfile for a stored profile name"""
    return get_profile_record_or_404(name).to_profile()


def form_errors(form):
    return jsonify({'error': 'ValidationError', 'errors': form.errors}), 400

# ========== ROUTES ==========

@profiles_bp.route('')
def list_profiles():
    records = DeviceProfileRecord.query.order_by(DeviceProfileRecord.name).all()
    return jsonify([record.to_dict() for record in records])


@profiles_bp.route('/<name>')
def get_profile(name):
    return jsonify(get_profile_record_or_404(name).to_dict())


@profiles_bp.route('', methods=['POST'])
def create_profile():
    """Validate a profile document (JSON body) and store it"""
    document = request.get_json(silent=True)
    if document is None:
        return jsonify({'error': 'ValidationError', 'message': 'expected a JSON object'}), 400
    profile, description = validate_profile_document(document)

    if DeviceProfileRecord.query.filter_by(name=profile.name).first():
        return jsonify({'error': 'Conflict', 'message': f'profile {profile.name} already exists'}), 409

    record = DeviceProfileRecord.from_profile(profile, description=description)
    db.session.add(record)
    db.session.commit()
    current_app.logger.info('Created device profile %s', profile.name)
    return jsonify(record.to_dict()), 201
