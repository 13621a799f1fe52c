"""
File: models/__init__.py
Purpose: Network model, stream engine, cost / power models, simulator and ORM records
Author: StreamFirst Team
"""
