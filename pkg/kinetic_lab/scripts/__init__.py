"""
Initial-data generators for kinetic_lab runs.
"""
