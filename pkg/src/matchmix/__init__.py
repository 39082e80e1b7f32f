"""Simulation and verification toolkit for the k-rematch random walk on
perfect matchings.

Submodules:
    core      -- matchings, cycle structures, partitions, exact enumeration
    sampling  -- uniform samplers and swap-sequence generators
    walk      -- the random walk, fixed-point statistics, exact TV oracles
    coupling  -- tilings, the Schramm-type coupling, three-stage coupling
    graphproc -- auxiliary clique-graph process and giant-component estimates
    harness   -- configuration, seeding, experiment orchestration
"""

__version__ = "0.1.0"
