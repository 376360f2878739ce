"""Self-consistent coherent-product state propagation for lattice-phonon
systems, with decoherence-free subspace detection and an exact truncated-Fock
oracle."""

try:
    from ._cps import *  # noqa: F401,F403  (installed package layout)
except ImportError:
    from _cps import *  # noqa: F401,F403  (in-tree build on PYTHONPATH)
