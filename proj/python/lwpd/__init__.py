"""Projective derivative codes for asynchronous coded gradient descent.

Thin re-export of the compiled extension. Installed builds ship _lwpd inside
this package; during development the extension may sit on PYTHONPATH instead.
"""

try:
    from ._lwpd import *  # noqa: F401,F403
    from ._lwpd import __doc__ as _core_doc
except ImportError:  # pragma: no cover - dev tree fallback
    from _lwpd import *  # noqa: F401,F403
    from _lwpd import __doc__ as _core_doc

__doc__ = _core_doc or __doc__
__version__ = "0.1.0"
