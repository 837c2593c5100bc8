"""Classifier-free guided flow matching on Gaussian paths.

Pieces: closed-form schedulers, an analytic Gaussian-mixture oracle for
velocities and scores, flow-matching training with condition dropout,
fixed-step guided ODE sampling (optionally with clamped coordinates),
and a return-conditioned planner for a point-mass control task.
"""

__version__ = "0.1.0"
