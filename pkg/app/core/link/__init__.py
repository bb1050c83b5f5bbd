"""Numerical core of the link simulator.

Modules, bottom-up: ``rng`` (keyed random streams), ``chanmodel`` (chamber ensembles),
``oam`` (metasurface mixing), ``phy`` (QAM and OFDM), ``detect`` (zero-forcing, capacity,
link runner) and ``metrics`` (BER fit, correlation, coherence bandwidth).
"""
