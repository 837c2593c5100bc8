"""Offline goal-reaching stack: point-mass env, datasets, planner."""
