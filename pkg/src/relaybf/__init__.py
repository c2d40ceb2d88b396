"""Grouping and zero-forcing beamforming for relay-assisted multiuser MIMO.

Modules
-------
topology, channel
    Node placement, path loss and Rayleigh fading.
matrixkit
    SVD, right inverse, Gram-Schmidt residuals, joint diagonalization.
decompose
    Receive beamforming and extraction of SMCs and relay pairs.
grouping
    Compatibility rules, exhaustive (ESGA) and greedy (OCGA) grouping, pruning.
beamform, capacity
    Per-group zero forcing, effective CNRs and two-phase capacity.
sim, config, cli
    Seeded Monte-Carlo campaigns, experiment files and the command line.
"""

__version__ = "0.1.0"
