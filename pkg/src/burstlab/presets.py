"""Built-in kernel presets with default tilings and problem sizes.

Presets are stored as plain config trees so they flow through the same
validation path as user-supplied config files.  Dependence vectors are listed
in the read order of the reference loop nests, which fixes the floating-point
summation order.
"""
from __future__ import annotations

import copy

PRESETS: dict[str, dict] = {
    "jacobi-1d": {
        "kernel": {
            "name": "jacobi-1d",
            "deps": [[1, 1], [1, 0], [1, -1]],
            "coeffs": "0.33",
            "dtype": {"kind": "float", "totalBits": 64},
        },
        "tiling": {"kind": "diamond1d", "sizes": [6, 6]},
        "problem": {"timeSteps": 20, "spatialSizes": [40], "init": {"formula": "polybench"}},
    },
    "jacobi-2d": {
        "kernel": {
            "name": "jacobi-2d",
            "deps": [[1, 0, 0], [1, 0, 1], [1, 0, -1], [1, -1, 0], [1, 1, 0]],
            "coeffs": "0.2",
            "dtype": {"kind": "float", "totalBits": 64},
        },
        "tiling": {
            "kind": "skewed-rect",
            "sizes": [4, 5, 7],
            "skew": [[1, 0, 0], [1, 1, 0], [1, 0, 1]],
        },
        "problem": {"timeSteps": 12, "spatialSizes": [30, 30], "init": {"formula": "polybench"}},
    },
    "seidel-2d": {
        "kernel": {
            "name": "seidel-2d",
            "deps": [
                [0, 1, 1],
                [0, 1, 0],
                [0, 1, -1],
                [0, 0, 1],
                [1, 0, 0],
                [1, 0, -1],
                [1, -1, 1],
                [1, -1, 0],
                [1, -1, -1],
            ],
            "coeffs": "1/9",
            "dtype": {"kind": "float", "totalBits": 64},
        },
        "tiling": {
            "kind": "skewed-rect",
            "sizes": [4, 10, 10],
            "skew": [[1, 0, 0], [1, 1, 0], [2, 1, 1]],
        },
        "problem": {"timeSteps": 12, "spatialSizes": [30, 30], "init": {"formula": "polybench"}},
    },
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def preset_tree(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r} (have: {', '.join(preset_names())})")
    return copy.deepcopy(PRESETS[name])
