"""Grid games and their scripted opponents."""
from qmixlab.envs.base import MarkovGame, Observation, Policy, StepOutcome
from qmixlab.envs.commons import (
    CommonsEnv,
    CommonsMap,
    CommonsParams,
    CommonsState,
    commons_encode,
    commons_reset,
    commons_step,
    default_map,
    load_map,
    parse_map,
)
from qmixlab.envs.opponents import scripted_opponent
from qmixlab.envs.soccer import SoccerEnv, SoccerState, soccer_decode, soccer_encode, soccer_reset, soccer_step


def make_env(name: str, **kwargs):
    if name == "soccer":
        return SoccerEnv(**kwargs)
    if name == "commons":
        return CommonsEnv(**kwargs)
    raise ValueError(f"unknown environment {name!r}")


__all__ = [
    "CommonsEnv", "CommonsMap", "CommonsParams", "CommonsState", "MarkovGame", "Observation", "Policy",
    "SoccerEnv", "SoccerState", "StepOutcome", "commons_encode", "commons_reset", "commons_step",
    "default_map", "load_map", "make_env", "parse_map", "scripted_opponent", "soccer_decode",
    "soccer_encode", "soccer_reset", "soccer_step",
]
