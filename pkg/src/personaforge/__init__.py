"""Personality-driven content generation platform at desk scale.

Infers MBTI types from multi-view social timelines, retrieves
best-performing branded content from same-personality cohorts, generates
styled content variants, and folds four-factor human feedback into the
next retraining cycle.
"""

__version__ = "0.1.0"
