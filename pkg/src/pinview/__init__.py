"""pinview: interactive image retrieval driven by gaze and click feedback.

The engine learns a per-session similarity metric over pre-extracted visual
features (multiple-kernel learning on relevance feedback), optionally
augments it with a feedback-feature tensor kernel, and picks each next
collage with an exploration/exploitation bandit rule.
"""
__version__ = "0.1.0"
