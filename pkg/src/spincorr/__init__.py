"""Quantum and classical dynamics of two kicked, coupled spins.

Modules: ``wigner`` (rotation matrices), ``quantum`` (Floquet evolution of
product-basis states), ``classical`` (stroboscopic map, Lyapunov exponents,
Liouville ensembles), ``analysis`` (difference measures and fits) and
``experiments``/``cli`` (the ``spincorr`` command).
"""
