"""Config tree validation and resolution into core model objects.

The wire format everywhere (config files, service requests, CLI) is one JSON
tree with three sections::

    {
      "kernel":  {"name", "deps", "coeffs", "dtype"},
      "tiling":  {"kind", "sizes", "skew"?},
      "problem": {"timeSteps", "spatialSizes", "init"?}
    }

Validation errors carry the path of the offending field so callers can report
usable messages.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .kernel import DataTypeSpec, InitSpec, Kernel, ProblemInstance, TilingScheme
from .presets import preset_tree


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class RunSpec:
    kernel: Kernel
    tiling: TilingScheme
    problem: ProblemInstance

    def to_tree(self) -> dict:
        return {
            "kernel": {
                "name": self.kernel.name,
                "deps": [list(d) for d in self.kernel.deps],
                "coeffs": [str(c) for c in self.kernel.coeffs],
                "dtype": self.kernel.dtype.to_tree(),
            },
            "tiling": self.tiling.to_tree(),
            "problem": self.problem.to_tree(),
        }


def _expect(tree: dict, key: str, path: str):
    if key not in tree:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return tree[key]


def _int_list(value, path: str) -> list[int]:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a non-empty list of integers")
    out = []
    for k, v in enumerate(value):
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError(f"{path}[{k}]", "expected an integer")
        out.append(v)
    return out


def parse_coeff(value, path: str) -> Fraction:
    """Accept '0.33', '1/9', integers, or JSON numbers (via decimal literal)."""
    try:
        if isinstance(value, str):
            return Fraction(value)
        if isinstance(value, bool):
            raise ValueError
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, float):
            return Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        pass
    raise ConfigError(path, f"cannot parse coefficient {value!r}")


def parse_dtype_tree(tree, path: str) -> DataTypeSpec:
    if not isinstance(tree, dict):
        raise ConfigError(path, "expected an object")
    kind = _expect(tree, "kind", path)
    total = _expect(tree, "totalBits", path)
    if not isinstance(total, int):
        raise ConfigError(f"{path}.totalBits", "expected an integer")
    frac = tree.get("fracBits")
    if frac is None:
        # signed with 8 integer bits by default; narrow types keep all bits fractional
        frac = max(total - 8, 0) if kind == "fixed" else 0
    signed = tree.get("signed", True)
    try:
        return DataTypeSpec(kind=kind, total_bits=total, frac_bits=frac, signed=bool(signed))
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def parse_dtype_string(text: str) -> DataTypeSpec:
    """CLI syntax: ``fixed:N[:frac]`` or ``float:N``."""
    parts = text.split(":")
    try:
        if parts[0] == "fixed" and len(parts) in (2, 3):
            total = int(parts[1])
            frac = int(parts[2]) if len(parts) == 3 else max(total - 8, 0)
            return DataTypeSpec("fixed", total, frac)
        if parts[0] == "float" and len(parts) == 2:
            return DataTypeSpec("float", int(parts[1]))
    except ValueError as e:
        raise ConfigError("dtype", str(e)) from None
    raise ConfigError("dtype", f"cannot parse {text!r}; expected fixed:N[:frac] or float:N")


def _parse_kernel(tree, path: str) -> Kernel:
    if not isinstance(tree, dict):
        raise ConfigError(path, "expected an object")
    name = tree.get("name", "custom")
    deps_tree = _expect(tree, "deps", path)
    if not isinstance(deps_tree, list) or not deps_tree:
        raise ConfigError(f"{path}.deps", "expected a non-empty list")
    deps = []
    dim = None
    for k, d in enumerate(deps_tree):
        vec = _int_list(d, f"{path}.deps[{k}]")
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise ConfigError(f"{path}.deps[{k}]", f"expected {dim} components, got {len(vec)}")
        deps.append(tuple(vec))
    coeffs_tree = _expect(tree, "coeffs", path)
    if isinstance(coeffs_tree, list):
        if len(coeffs_tree) != len(deps):
            raise ConfigError(f"{path}.coeffs", f"expected {len(deps)} coefficients, got {len(coeffs_tree)}")
        coeffs = tuple(parse_coeff(c, f"{path}.coeffs[{k}]") for k, c in enumerate(coeffs_tree))
    else:
        coeffs = (parse_coeff(coeffs_tree, f"{path}.coeffs"),) * len(deps)
    dtype = parse_dtype_tree(_expect(tree, "dtype", path), f"{path}.dtype")
    try:
        return Kernel(name=name, dim=dim, deps=tuple(deps), coeffs=coeffs, dtype=dtype)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def _parse_tiling(tree, path: str, dim: int) -> TilingScheme:
    if not isinstance(tree, dict):
        raise ConfigError(path, "expected an object")
    kind = _expect(tree, "kind", path)
    sizes = tuple(_int_list(_expect(tree, "sizes", path), f"{path}.sizes"))
    skew = None
    if "skew" in tree and tree["skew"] is not None:
        rows = tree["skew"]
        if not isinstance(rows, list):
            raise ConfigError(f"{path}.skew", "expected a matrix (list of rows)")
        skew = tuple(tuple(_int_list(r, f"{path}.skew[{k}]")) for k, r in enumerate(rows))
    try:
        ts = TilingScheme(kind=kind, sizes=sizes, skew=skew)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None
    if ts.dim != dim:
        raise ConfigError(path, f"tiling is {ts.dim}-dimensional but the kernel is {dim}-dimensional")
    return ts


def _parse_init(tree, path: str) -> InitSpec:
    if tree is None:
        return InitSpec()
    if not isinstance(tree, dict):
        raise ConfigError(path, "expected an object")
    formula = tree.get("formula", "polybench")
    value = parse_coeff(tree.get("value", "1"), f"{path}.value")
    seed = tree.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ConfigError(f"{path}.seed", "expected an integer")
    try:
        return InitSpec(formula=formula, value=value, seed=seed)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def _parse_problem(tree, path: str, dim: int) -> ProblemInstance:
    if not isinstance(tree, dict):
        raise ConfigError(path, "expected an object")
    t = _expect(tree, "timeSteps", path)
    if not isinstance(t, int):
        raise ConfigError(f"{path}.timeSteps", "expected an integer")
    sizes = tuple(_int_list(_expect(tree, "spatialSizes", path), f"{path}.spatialSizes"))
    if len(sizes) != dim - 1:
        raise ConfigError(f"{path}.spatialSizes", f"expected {dim - 1} spatial sizes, got {len(sizes)}")
    init = _parse_init(tree.get("init"), f"{path}.init")
    try:
        return ProblemInstance(time_steps=t, spatial_sizes=sizes, init=init)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def load_config(tree: dict) -> RunSpec:
    if not isinstance(tree, dict):
        raise ConfigError("$", "config root must be an object")
    kernel = _parse_kernel(_expect(tree, "kernel", "$"), "kernel")
    tiling = _parse_tiling(_expect(tree, "tiling", "$"), "tiling", kernel.dim)
    problem = _parse_problem(_expect(tree, "problem", "$"), "problem", kernel.dim)
    return RunSpec(kernel=kernel, tiling=tiling, problem=problem)


def resolve_tree(
    preset: str | None = None,
    config_path: str | Path | None = None,
    tile: str | None = None,
    dtype: str | None = None,
    n: int | None = None,
    t: int | None = None,
) -> dict:
    """Merge a preset or config file with CLI-style overrides into one tree."""
    if preset is None and config_path is None:
        raise ConfigError("$", "either a preset or a config file is required")
    if config_path is not None:
        try:
            tree = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError("$", f"config file is not valid JSON: {e}") from None
        if not isinstance(tree, dict):
            raise ConfigError("$", "config root must be an object")
    else:
        try:
            tree = preset_tree(preset)
        except KeyError as e:
            raise ConfigError("preset", str(e.args[0])) from None
    if tile is not None:
        try:
            sizes = [int(x) for x in tile.lower().split("x")]
        except ValueError:
            raise ConfigError("tile", f"cannot parse {tile!r}; expected e.g. 6x6 or 4x5x7") from None
        tree.setdefault("tiling", {})["sizes"] = sizes
    if dtype is not None:
        tree.setdefault("kernel", {})["dtype"] = parse_dtype_string(dtype).to_tree()
    if n is not None:
        prob = tree.setdefault("problem", {})
        dim = len(prob.get("spatialSizes", [0]))
        prob["spatialSizes"] = [n] * dim
    if t is not None:
        tree.setdefault("problem", {})["timeSteps"] = t
    return tree
