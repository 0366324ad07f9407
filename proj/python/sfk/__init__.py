from ._sfk import (
    Error,
    SyntaxError,
    check,
    classify,
    compose,
    decompose,
    disintegrate,
    eval,
    importance,
    integrate,
    posterior_mean,
    randomise,
    rejection,
    rn_derivative,
    sample,
    suites,
)

__all__ = [
    "Error",
    "SyntaxError",
    "check",
    "classify",
    "compose",
    "decompose",
    "disintegrate",
    "eval",
    "importance",
    "integrate",
    "posterior_mean",
    "randomise",
    "rejection",
    "rn_derivative",
    "sample",
    "suites",
]
