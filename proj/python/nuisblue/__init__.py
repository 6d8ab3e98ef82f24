"""Linear estimation with nuisance parameters.

Thin re-export of the compiled core; see the C++ headers for the contracts.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc

__doc__ = _core_doc
__version__ = "0.1.0"
