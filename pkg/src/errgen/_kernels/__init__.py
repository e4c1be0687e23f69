"""Edit-distance kernels with backend selection at import time.

The compiled extension is used when present; the pure-Python fallback is
always available. Set ERRGEN_PURE_PYTHON=1 to force the fallback (used by
the benchmark and the backend-agreement tests).
"""

import os

from . import editdist_py

OP_MATCH = editdist_py.OP_MATCH
OP_SUB = editdist_py.OP_SUB
OP_DEL = editdist_py.OP_DEL
OP_INS = editdist_py.OP_INS

if os.environ.get("ERRGEN_PURE_PYTHON") == "1":
    _impl = editdist_py
    BACKEND = "python"
else:
    try:
        from . import _editdist as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = editdist_py
        BACKEND = "python"

edit_cost = _impl.edit_cost
edit_script = _impl.edit_script
