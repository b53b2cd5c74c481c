"""Dual-resource flexible job shop scheduling toolkit."""

try:
    from ._shopsched import *  # noqa: F401,F403
    from ._shopsched import __doc__ as _core_doc  # noqa: F401
except ImportError:  # pragma: no cover - cmake-built module on PYTHONPATH
    from _shopsched import *  # noqa: F401,F403
