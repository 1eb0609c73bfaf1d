"""CR and pseudohermitian invariants of real hypersurfaces in C^{n+1}.

Everything is computed at a point from a defining function: the Levi form,
Tanaka-Webster torsion and curvature, the Chern-Moser-Weyl tensor S, and in
CR dimension two the one-form X and the scalar invariant I'.
"""
__version__ = "0.1.0"

from .backend import get_backend  # noqa: E402
from .errors import CRWeylError  # noqa: E402
from .frame import FrameContext, Hypersurface, Tolerances, context_build  # noqa: E402

__all__ = ["__version__", "get_backend", "CRWeylError", "FrameContext", "Hypersurface",
           "Tolerances", "context_build"]
