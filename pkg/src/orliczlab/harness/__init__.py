"""Verification harness: solved instances, estimate checks and the suite runner."""
from .checks import *  # noqa: F401,F403
from .checks import __all__ as _checks_all
from .instances import *  # noqa: F401,F403
from .instances import __all__ as _inst_all

__all__ = list(_checks_all) + list(_inst_all)
