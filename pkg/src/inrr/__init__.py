"""Implicit neural representations with a learned Laplacian regularizer.

Subpackages: ``autodiff``/``optim``/``linalg`` (numeric substrate),
``models`` (coordinate networks, DMF), ``regularizers`` (Dirichlet-energy
family), ``ntk`` (kernel oracles), ``tasks`` (data plane and metrics),
``harness`` (experiment runner) and ``cli``.
"""

__version__ = "0.1.0"

from ._kernels import NUMBA_ACTIVE
