"""
File: forms/__init__.py
Purpose: WTForms validation for profile documents and API queries
Author: StreamFirst Team
"""
