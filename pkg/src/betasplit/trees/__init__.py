"""Tree resolutions, projections, counts and serialization."""

from .core import *  # noqa: F401,F403
from .core import AnyTree, Tree, __all__ as _core_all
from .io import (
    NewickParseError,
    from_bracket,
    from_json_obj,
    from_newick,
    project,
    resolve,
    to_bracket,
    to_json_obj,
    to_newick,
)

__all__ = list(_core_all) + [
    "AnyTree",
    "Tree",
    "NewickParseError",
    "from_bracket",
    "from_json_obj",
    "from_newick",
    "project",
    "resolve",
    "to_bracket",
    "to_json_obj",
    "to_newick",
]
