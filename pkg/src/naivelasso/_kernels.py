"""Backend selection for the coordinate-descent kernel.

The compiled extension is used when importable. Setting the environment
variable ``NAIVELASSO_PURE_PYTHON=1`` forces the pure-Python fallback.
"""
import os

from . import _cd_py

BACKEND = "python"
cd_lasso = _cd_py.cd_lasso

if os.environ.get("NAIVELASSO_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._cd import cd_lasso  # noqa: F811
    except ImportError:
        pass
    else:
        BACKEND = "cython"

BACKENDS = {"python": _cd_py.cd_lasso}
try:
    from ._cd import cd_lasso as _compiled
except ImportError:
    pass
else:
    BACKENDS["cython"] = _compiled
