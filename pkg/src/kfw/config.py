"""Run configuration: a flat ``key = value`` text format.

Example::

    # comments start with '#'
    problem.name = lasso
    problem.seed = 3
    problem.m = 100
    solver[0].algorithm = fw
    solver[1].algorithm = kfw
    solver[1].k = 20
    output.dir = runs/lasso
    output.jobs = 2

Keys are ``problem.<field>``, ``solver[i].<field>`` (``solver.<field>`` is
shorthand for ``solver[0]``) and ``output.<field>``.  Values are Python
literals (numbers, ``true``/``false``, quoted strings, ``none``); anything
else is taken as a bare string.  Problem fields other than ``name``,
``seed`` and ``paper_scale`` are passed to the benchmark generator and must
match one of its parameters.
"""
from __future__ import annotations

import ast
import inspect
import re
from dataclasses import dataclass, field, fields

from .apg import ApgConfig
from .bench import BENCHMARKS
from .errors import ConfigError, ParameterError
from .solvers import ALGORITHMS, SolverConfig

__all__ = ["ProblemSpec", "SolverSpec", "OutputSpec", "RunConfig", "parse_config",
           "serialize_config", "load_config", "EXTERNAL_PROBLEM"]

# least squares over a set, with A and b read from Matrix Market files
EXTERNAL_PROBLEM = "external"
EXTERNAL_PARAMS = {"matrix": str, "rhs": str, "set": str, "radius": float}
EXTERNAL_SETS = ("l1", "simplex")


@dataclass
class ProblemSpec:
    name: str
    seed: int = 0
    paper_scale: bool = False
    params: dict = field(default_factory=dict)


@dataclass
class SolverSpec:
    algorithm: str
    k: int = 1
    max_iter: int = 1000
    rel_change_tol: float = 1e-6
    fw_gap_tol: float = 0.0
    growth: float = 2.0
    k_max: int | None = None
    memory: int | None = None
    seed: int = 0
    line_search: str = "auto"
    apg_max_inner: int = 500
    apg_rel_tol: float = 1e-10
    label: str | None = None

    @property
    def name(self):
        return self.label or (self.algorithm if self.algorithm in ("fw", "away", "pairwise", "lfw")
                              else f"{self.algorithm}_k{self.k}")

    def to_solver_config(self) -> SolverConfig:
        return SolverConfig(
            algorithm=self.algorithm, k=self.k, max_iter=self.max_iter,
            rel_change_tol=self.rel_change_tol, fw_gap_tol=self.fw_gap_tol,
            growth=self.growth, k_max=self.k_max, memory=self.memory, seed=self.seed,
            line_search=self.line_search,
            apg=ApgConfig(max_inner=self.apg_max_inner, rel_tol=self.apg_rel_tol),
        )


@dataclass
class OutputSpec:
    dir: str = "kfw_out"
    jobs: int = 1
    certify: bool = True
    samples: int = 200


@dataclass
class RunConfig:
    problem: ProblemSpec
    solvers: list
    output: OutputSpec = field(default_factory=OutputSpec)


_KEY = re.compile(r"^(problem|output)\.([A-Za-z_]\w*)$|^solver(?:\[(\d+)\])?\.([A-Za-z_]\w*)$")
_OPTIONAL = {"k_max", "memory", "label"}


def _field_types(cls):
    hints = {"int": int, "float": float, "bool": bool, "str": str,
             "int | None": int, "str | None": str}
    return {f.name: hints[f.type] for f in fields(cls) if f.type in hints}


_SOLVER_TYPES = _field_types(SolverSpec)
_OUTPUT_TYPES = _field_types(OutputSpec)
_PROBLEM_TYPES = {"name": str, "seed": int, "paper_scale": bool}


def _literal(text):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _coerce(value, typ, optional):
    """Return ``(ok, value)`` converting ints to floats where a float is wanted."""
    if value is None:
        return optional, None
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        return True, float(value)
    if typ is int and isinstance(value, bool):
        return False, value
    return isinstance(value, typ), value


def _generator_types(name):
    if name == EXTERNAL_PROBLEM:
        return dict(EXTERNAL_PARAMS)
    sig = inspect.signature(BENCHMARKS[name])
    out = {}
    for p in sig.parameters.values():
        if p.name == "seed":
            continue
        d = p.default
        out[p.name] = float if isinstance(d, float) else type(d) if d is not None else object
    return out


def _strip_comment(line):
    # '#' starts a comment unless it sits inside a quoted string
    quote = None
    escaped = False
    for i, ch in enumerate(line):
        if escaped:
            escaped = False
        elif quote:
            if ch == "\\":
                escaped = True
            elif ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def parse_config(text) -> RunConfig:
    """Parse and validate configuration text.

    Raises
    ------
    ConfigError
        With one ``line N: ...`` message per problem found (unknown key,
        duplicate key, type mismatch, missing required field).
    """
    errors = []
    problem, output, solvers = {}, {}, {}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        m = _KEY.match(key)
        if not m:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            errors.append(f"line {lineno}: duplicate key {key!r} (first on line {seen[key]})")
            continue
        seen[key] = lineno
        entry = (_literal(value), lineno, key)
        if m.group(1) == "problem":
            problem[m.group(2)] = entry
        elif m.group(1) == "output":
            output[m.group(2)] = entry
        else:
            idx = int(m.group(3) or 0)
            solvers.setdefault(idx, {})[m.group(4)] = entry

    # problem section
    pspec = None
    if "name" not in problem:
        errors.append("missing required field 'problem.name'")
    else:
        name, lineno, key = problem["name"]
        if name != EXTERNAL_PROBLEM and name not in BENCHMARKS:
            errors.append(f"line {lineno}: {key}: unknown problem {name!r}")
        else:
            gen_types = _generator_types(name)
            kw = {}
            params = {}
            for fname, (val, lineno, key) in problem.items():
                typ = _PROBLEM_TYPES.get(fname) or gen_types.get(fname)
                if typ is None:
                    errors.append(f"line {lineno}: unknown key {key!r}")
                    continue
                ok, val = _coerce(val, typ, False) if typ is not object else (True, val)
                if not ok:
                    errors.append(f"line {lineno}: {key}: expected {typ.__name__}, got {val!r}")
                    continue
                if fname in _PROBLEM_TYPES:
                    kw[fname] = val
                else:
                    params[fname] = val
            if name == EXTERNAL_PROBLEM:
                for req in ("matrix", "rhs", "set"):
                    if req not in params:
                        errors.append(f"missing required field 'problem.{req}'")
                if params.get("set") not in (None, *EXTERNAL_SETS):
                    errors.append(f"problem.set: expected one of {EXTERNAL_SETS}")
            pspec = ProblemSpec(params=params, **kw)

    # solvers
    specs = []
    if not solvers:
        errors.append("missing required field 'solver[0].algorithm'")
    expected = list(range(len(solvers)))
    if sorted(solvers) != expected:
        errors.append(f"solver indices must be 0..{len(solvers) - 1} without gaps")
    for idx in sorted(solvers):
        entries = solvers[idx]
        kw = {}
        for fname, (val, lineno, key) in entries.items():
            typ = _SOLVER_TYPES.get(fname)
            if typ is None:
                errors.append(f"line {lineno}: unknown key {key!r}")
                continue
            ok, val = _coerce(val, typ, fname in _OPTIONAL)
            if not ok:
                errors.append(f"line {lineno}: {key}: expected {typ.__name__}, got {val!r}")
                continue
            kw[fname] = val
        if "algorithm" not in entries:
            errors.append(f"missing required field 'solver[{idx}].algorithm'")
            continue
        if "algorithm" not in kw:
            continue
        if kw["algorithm"] not in ALGORITHMS:
            lineno = entries["algorithm"][1]
            errors.append(f"line {lineno}: solver[{idx}].algorithm: unknown algorithm "
                          f"{kw['algorithm']!r}")
            continue
        spec = SolverSpec(**kw)
        try:
            spec.to_solver_config()
        except ParameterError as exc:
            errors.append(f"solver[{idx}]: {exc}")
            continue
        specs.append(spec)
    names = [s.name for s in specs]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        errors.append(f"solver names must be unique (set solver[i].label): {dupes}")

    # output
    okw = {}
    for fname, (val, lineno, key) in output.items():
        typ = _OUTPUT_TYPES.get(fname)
        if typ is None:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        ok, val = _coerce(val, typ, False)
        if not ok:
            errors.append(f"line {lineno}: {key}: expected {typ.__name__}, got {val!r}")
            continue
        okw[fname] = val
    if okw.get("jobs", 1) < 1:
        errors.append(f"line {output['jobs'][1]}: output.jobs must be at least 1")

    if errors:
        raise ConfigError(errors)
    return RunConfig(pspec, specs, OutputSpec(**okw))


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, str):
        return repr(value)
    return repr(value)


def serialize_config(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config`; every field is written explicitly."""
    lines = [f"problem.name = {_fmt(cfg.problem.name)}",
             f"problem.seed = {_fmt(cfg.problem.seed)}",
             f"problem.paper_scale = {_fmt(cfg.problem.paper_scale)}"]
    for key in sorted(cfg.problem.params):
        lines.append(f"problem.{key} = {_fmt(cfg.problem.params[key])}")
    for i, spec in enumerate(cfg.solvers):
        for f in fields(SolverSpec):
            lines.append(f"solver[{i}].{f.name} = {_fmt(getattr(spec, f.name))}")
    for f in fields(OutputSpec):
        lines.append(f"output.{f.name} = {_fmt(getattr(cfg.output, f.name))}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
