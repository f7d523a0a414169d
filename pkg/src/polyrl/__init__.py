"""Polymer-inspired persistent exploration for reinforcement learning.

Modules: ``chain`` (ideal chain models and gyration statistics), ``bounds``
(confidence bounds on the gyration change), ``sampler`` (angle-constrained
actions), ``policy`` (the exploration state machine), ``envs`` (sparse
navigation and point-mass tasks), ``learner`` (tile-coded Q-learning) and
``harness`` (experiment CLI).
"""

__version__ = "0.1.0"
