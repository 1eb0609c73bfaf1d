"""Exception hierarchy.

Every domain failure carries a stable ``code`` string and the ``module`` that
raised it so the CLI can emit a machine-readable error object.
"""


class CRWeylError(Exception):
    """Base class for all domain errors."""

    code = "Error"
    module = "crweyl"

    def __init__(self, message="", **info):
        super().__init__(message)
        self.message = message
        self.info = info

    def to_dict(self):
        return {"code": self.code, "message": self.message, "module": self.module}


def _make(name, module, base=CRWeylError, doc=None):
    cls = type(name, (base,), {"code": name, "module": module, "__doc__": doc})
    return cls


class ParseError(CRWeylError, SyntaxError):
    """Malformed polynomial text; ``offset`` is the byte offset of the problem."""

    code = "SyntaxError"
    module = "jetring"

    def __init__(self, message="", offset=0, **info):
        CRWeylError.__init__(self, f"{message} at offset {offset}", offset=offset, **info)
        self.offset = offset


VarOutOfRange = _make("VarOutOfRange", "jetring", doc="Variable index outside 1..N.")
EvalSingular = _make("EvalSingular", "jetring", doc="Division by zero, log of zero, or branch cut hit.")
BackendError = _make("BackendError", "jetring", doc="Operation not available in the chosen backend.")

OffSurface = _make("OffSurface", "frame", doc="Point is not on the zero set within tolerance.")
FrameDegenerate = _make("FrameDegenerate", "frame", doc="rho_w vanishes at the point.")
LeviDegenerate = _make("LeviDegenerate", "frame", doc="Levi matrix is numerically singular.")
FeffermanDegenerate = _make("FeffermanDegenerate", "frame", doc="Fefferman determinant vanishes.")
NoConvergence = _make("NoConvergence", "frame", doc="Point placement did not converge.")

KindMismatch = _make("KindMismatch", "tensor", doc="Index kinds incompatible with the operation.")
FrameMismatch = _make("FrameMismatch", "tensor", doc="Tensors expressed in different frames.")
SymmetryViolation = _make("SymmetryViolation", "tensor", doc="Input lacks the required symmetries.")
WrongDimension = _make("WrongDimension", "tensor", doc="Operation not defined in this dimension.")

HessianDegenerate = _make("HessianDegenerate", "pseudohermitian", doc="Complex Hessian is singular.")
NotStrictlyPSH = _make("NotStrictlyPSH", "pseudohermitian", doc="Complex Hessian is not positive definite.")
ComponentNotField = _make("ComponentNotField", "pseudohermitian", doc="Tensor holds point values, not fields.")
NotUnitHessian = _make("NotUnitHessian", "pseudohermitian", doc="The unit-Hessian route needs the complex Hessian of rho to be the identity.")
NotApproxMongeAmpere = _make("NotApproxMongeAmpere", "pseudohermitian",
                             doc="J(rho) - 1 does not vanish to the required order.")
NotPositiveJ = _make("NotPositiveJ", "pseudohermitian", doc="Fefferman determinant is not positive.")

RouteDisagreement = _make("RouteDisagreement", "invariants", doc="Two independent routes disagree.")
NotPositiveFactor = _make("NotPositiveFactor", "invariants", doc="Conformal factor is not positive.")

BadGridSpec = _make("BadGridSpec", "catalog", doc="Malformed scan grid specification.")
UnknownSurface = _make("UnknownSurface", "catalog", doc="No catalog entry with that name.")
