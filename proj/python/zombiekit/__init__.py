"""Python bindings for the zombiekit C++ toolkit.

Everything public lives in the compiled module; this package only locates it.
Installed wheels carry the extension inside the package; development builds
put it on PYTHONPATH next to the build tree.
"""

try:
    from .zombiekit_core import *  # noqa: F401,F403
    from . import zombiekit_core as _core
except ImportError:  # development layout
    from zombiekit_core import *  # noqa: F401,F403
    import zombiekit_core as _core

__all__ = sorted(n for n in dir(_core) if not n.startswith("_"))
__version__ = "0.1.0"
