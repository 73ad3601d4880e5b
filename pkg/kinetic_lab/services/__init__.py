"""
Services for kinetic_lab: Riemann problems, time stepping and the
diagnostics that run on recorded solutions.
"""
