"""stochlab — a seeded stochastic-dynamics laboratory.

A library plus batch CLI for reproducible Monte Carlo experiments:
quantum amplitude arithmetic, Euclidean path geometry, random-walk
diffusion, self-organized criticality, stochastic resonance, spin-glass
associative memory, small-world networks, and lattice search.  Every
stochastic routine draws from an explicit RngStream so that any result
can be replayed bit for bit from (seed, stream_id).
"""

from stochlab.core import RngStream

__version__ = "0.1.0"

__all__ = ["RngStream", "__version__"]
