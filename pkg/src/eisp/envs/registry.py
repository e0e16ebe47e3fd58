"""String-id environment construction: ``pointrooms-2``, ``chainpush-1``,
``tabularchain-8``. The numeric suffix is the size parameter; keyword
overrides pass through to the constructor (epsilon, horizon, layout)."""

from __future__ import annotations

import re

from .base import Env
from .chainpush import ChainPush
from .pointrooms import PointRooms
from .tabular import TabularChain

_FAMILIES = {
    "pointrooms": PointRooms,
    "chainpush": ChainPush,
    "tabularchain": TabularChain,
}

_ID_RE = re.compile(r"^([a-z]+)-(\d+)$")


def make_env(env_id: str, **overrides) -> Env:
    m = _ID_RE.match(env_id)
    if not m or m.group(1) not in _FAMILIES:
        raise ValueError(
            f"unknown env id {env_id!r}; expected one of "
            f"{', '.join(sorted(_FAMILIES))} with a size suffix like 'pointrooms-2'"
        )
    cls = _FAMILIES[m.group(1)]
    return cls(int(m.group(2)), **overrides)
