"""Pick the compiled core when it is importable, else the numpy fallback.

Set ``LONGMEM_GP_PURE=1`` to force the fallback.
"""
import os

if os.environ.get("LONGMEM_GP_PURE"):
    from . import _fallback as impl
    NAME = "python"
else:
    try:
        from . import _core as impl
        NAME = "compiled"
    except ImportError:
        from . import _fallback as impl
        NAME = "python"

betainc_pair = impl.betainc_pair
philox4x64 = impl.philox4x64
uniform_stream = impl.uniform_stream

__all__ = ["NAME", "betainc_pair", "philox4x64", "uniform_stream"]
