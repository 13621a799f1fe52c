"""
File: app.py
Purpose: Flask application factory for the StreamFirst planner / simulator API
Version: 2.0.0
Author: StreamFirst Team

Revision History:
- v1.0.0: Application container, SQLAlchemy initialization, health check
- v1.1.0: Device profile table seeded with the default profiles
- v1.2.0: Power, planner and simulation blueprints
- v2.0.0: create_app factory with environment configuration, JSON error
          handlers and the CLI commands attached to app.cli
"""

import logging
import os
from datetime import datetime

from dotenv import load_dotenv
from flask import Flask, jsonify

from models.errors import StreamFirstError

VERSION = '2.0.0'

# ========== CONFIGURATION ==========

def load_config(app, overrides=None):
    """Environment (and .env) first, then explicit overrides"""
    load_dotenv()
    app.config['SECRET_KEY'] = os.environ.get('STREAMFIRST_SECRET_KEY', 'dev-key-change-this-in-production')
    app.config['SQLALCHEMY_DATABASE_URI'] = os.environ.get('STREAMFIRST_DATABASE_URI', 'sqlite:///streamfirst.db')
    app.config['SQLALCHEMY_TRACK_MODIFICATIONS'] = False
    app.config['STREAMFIRST_LOG_LEVEL'] = os.environ.get('STREAMFIRST_LOG_LEVEL', 'INFO').upper()
    app.config['STREAMFIRST_SEED'] = int(os.environ.get('STREAMFIRST_SEED', '0'))
    app.config['STREAMFIRST_MODEL_PATH'] = os.environ.get(
        'STREAMFIRST_MODEL_PATH', os.path.join(app.root_path, 'instance', 'models', 'reference.json'))
    app.config['WTF_CSRF_ENABLED'] = False
    if overrides:
        app.config.update(overrides)


def configure_logging(app):
    level = getattr(logging, app.config['STREAMFIRST_LOG_LEVEL'], logging.INFO)
    app.logger.setLevel(level)
    logging.getLogger('models').setLevel(level)


# ========== APPLICATION FACTORY ==========

def create_app(overrides=None):
    """
    Build the Flask application

    Args:
        overrides: config values applied after the environment (tests pass
            an in-memory database here)
    """
    app = Flask(__name__)
    load_config(app, overrides)
    configure_logging(app)

    # ========== DATABASE SETUP ==========
    from models.records import DeviceProfileRecord, db, init_default_profiles
    db.init_app(app)

    # ========== BLUEPRINT REGISTRATION ==========
    from routes.planner import planner_bp
    from routes.power import power_bp
    from routes.profiles import profiles_bp
    from routes.simulations import simulations_bp

    app.register_blueprint(power_bp)
    app.register_blueprint(planner_bp)
    app.register_blueprint(profiles_bp)
    app.register_blueprint(simulations_bp)

    with app.app_context():
        db.create_all()
        if DeviceProfileRecord.query.count() == 0:
            init_default_profiles(db.session)
            app.logger.info('Initialized default device profiles')

    register_handlers(app)

    from cli import register_commands
    register_commands(app)
    return app


# ========== ROUTES AND ERROR HANDLERS ==========

def register_handlers(app):

    @app.route('/')
    def index():
        """Endpoint overview"""
        return jsonify({
            'service': 'StreamFirst',
            'version': VERSION,
            'endpoints': sorted(str(rule) for rule in app.url_map.iter_rules() if rule.endpoint != 'static'),
        })

    @app.route('/health')
    def health_check():
        """Simple health check endpoint"""
        return jsonify({
            'status': 'healthy',
            'timestamp': datetime.now().isoformat(),
            'service': 'StreamFirst',
            'version': VERSION,
        })

    @app.errorhandler(StreamFirstError)
    def domain_error(error):
        app.logger.warning('request failed: %s', error)
        return jsonify(error.to_dict()), 400

    @app.errorhandler(404)
    def not_found_error(error):
        return jsonify({'error': 'NotFound', 'message': 'resource not found'}), 404

    @app.errorhandler(500)
    def internal_error(error):
        return jsonify({'error': 'InternalError', 'message': 'internal server error'}), 500


# ========== APPLICATION ENTRY POINT ==========

if __name__ == '__main__':
    create_app().run(host='127.0.0.1', port=5000, debug=True)
