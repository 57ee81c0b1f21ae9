"""Balance laws and Lipschitz flux traces for hyperbolic conservation laws"""

__version__ = "0.1.0"

from .exceptions import BalanceFluxError  # noqa: E402
from .systems import get_model  # noqa: E402

__all__ = ["__version__", "BalanceFluxError", "get_model"]
