from .base import Env, EnvSpec, sparse_reward
from .chainpush import ChainPush
from .pointrooms import PointRooms
from .registry import make_env
from .scripted import DEFAULT_NOISE_LEVEL, scripted_policy
from .tabular import TabularChain

__all__ = [
    "Env",
    "EnvSpec",
    "sparse_reward",
    "ChainPush",
    "PointRooms",
    "TabularChain",
    "make_env",
    "scripted_policy",
    "DEFAULT_NOISE_LEVEL",
]
