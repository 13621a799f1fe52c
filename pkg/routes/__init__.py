"""
File: routes/__init__.py
Purpose: JSON API blueprints (profiles, power, planner, simulations)
Author: StreamFirst Team
"""
