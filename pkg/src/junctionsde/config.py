"""
INI configuration files.

Grammar (``configparser`` syntax, ``#`` comments, keys case-insensitive)::

    [simulation]
    edges = 3                       # number of edges I
    alpha = 0.2, 0.3, 0.5           # vertex weights, sum 1
    x0 = 0.01                       # or "delta": follow each ladder delta
    delta = 0.01
    h = auto                        # auto: h_ratio * delta^2
    T = 1.0
    initial_edge = draw-from-alpha  # or an edge number
    seed = 12345
    restart = carry                 # or reset

    [field]
    kind = constant                 # any registered coefficient kind
    drift = 0.0                     # remaining keys are parameters of kind
    sigma = 1.0
    c = 1.0                         # declared ellipticity floor
    bound_b = 1.0                   # declared sup + Lipschitz bounds
    bound_sigma = 1.5
    edge.2 = linear_decay rate=1.0 sigma=1.0   # per-edge override

    [estimators]
    epsilons = 0.2, 0.1, 0.05       # strictly decreasing
    deltas = 0.08, 0.04, 0.02, 0.01 # strictly decreasing
    subsets = 1; 1,2                # edge subsets, ';' separated
    test_functions = linear_symmetric, quadratic
    checkpoints = 0.25, 0.5, 1.0
    thetas = 0.05
    h_ratio = 0.125                 # h = h_ratio * delta^2 on ladders
    delta_ratio = 0.1               # delta = delta_ratio * eps (estimator_consistency)

    [experiment]
    name = edge_occupation
    n_paths = 10000
    out = results
    workers = 1
    format = csv                    # per-path files: csv or binary
    write_paths = 0                 # number of per-path files to write
    threshold.z = 3.0               # any threshold.* key overrides a default

Every section but ``[simulation]`` is optional. Errors name the section,
key and line.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass

from .ito import CATALOG
from .junction import FIELD_KINDS, CoefficientField, VertexWeights, make_edge_coefficients

SECTIONS = ("simulation", "field", "estimators", "experiment")
_FIELD_RESERVED = {"kind", "c", "bound_b", "bound_sigma"}


class ConfigError(ValueError):
    def __init__(self, message: str, section: str | None = None, key: str | None = None,
                 line: int | None = None, source: str = "<config>"):
        where = source
        if line is not None:
            where += f":{line}"
        if section:
            where += f" [{section}]" + (f" {key}" if key else "")
        super().__init__(f"{where}: {message}")
        self.section, self.key, self.line = section, key, line


@dataclass
class RawConfig:
    """Parsed sections with the source line of every key."""

    sections: dict
    lines: dict
    source: str

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    def error(self, section: str, key: str | None, message: str) -> ConfigError:
        return ConfigError(message, section, key, self.lines.get((section, key)), self.source)

    def get(self, section: str, key: str, conv=str, default=...):
        sec = self.sections.get(section, {})
        if key not in sec:
            if default is ...:
                raise ConfigError("missing required key", section, key,
                                  self.lines.get((section, None)), self.source)
            return default
        try:
            return conv(sec[key])
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise self.error(section, key, f"bad value {sec[key]!r}: {exc}") from None


def _key_lines(text: str) -> dict:
    lines = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        m = re.match(r"\[([^\]]+)\]$", s)
        if m:
            section = m.group(1).strip().lower()
            lines[(section, None)] = n
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None and not raw[:1].isspace():
            lines[(section, m.group(1).strip().lower())] = n
    return lines


def parse_text(text: str, source: str = "<config>") -> RawConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None,
                                   comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError("duplicate key", exc.section, exc.option, exc.lineno, source) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError("duplicate section", exc.section, None, exc.lineno, source) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("text before the first [section]", None, None, exc.lineno, source) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"cannot parse line {exc.errors[0][1] if exc.errors else ''}", None, None,
                          line, source) from None
    lines = _key_lines(text)
    sections = {}
    for name in cp.sections():
        key = name.strip().lower()
        if key not in SECTIONS:
            raise ConfigError(f"unknown section; expected one of {SECTIONS}", key, None,
                              lines.get((key, None)), source)
        sections[key] = {k: v.strip() for k, v in cp.items(name)}
    if "simulation" not in sections:
        raise ConfigError("missing [simulation] section", source=source)
    return RawConfig(sections, lines, source)


def load(path) -> RawConfig:
    with open(path) as fh:
        return parse_text(fh.read(), source=str(path))


# -- value converters ---------------------------------------------------------


def float_list(s: str) -> list[float]:
    out = [float(v) for v in s.replace(";", ",").split(",") if v.strip()]
    if not out:
        raise ValueError("empty list")
    return out


def name_list(s: str) -> list[str]:
    return [v.strip() for v in s.split(",") if v.strip()]


def subset_list(s: str) -> list[tuple[int, ...]]:
    groups = [g for g in s.split(";") if g.strip()]
    return [tuple(int(v) for v in g.split(",") if v.strip()) for g in groups]


def boolean(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def decreasing(values: list[float]) -> list[float]:
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValueError("ladder must be strictly decreasing")
    if any(v <= 0 for v in values):
        raise ValueError("ladder values must be positive")
    return values


def _params(tokens: list[str]) -> dict:
    out = {}
    for tok in tokens:
        k, sep, v = tok.partition("=")
        if not sep:
            raise ValueError(f"expected name=value, got {tok!r}")
        out[k.strip()] = float(v)
    return out


# -- builders -------------------------------------------------------------------


def build_field(raw: RawConfig, edge_count: int, T: float) -> CoefficientField:
    sec = raw.sections.get("field", {})
    kind = sec.get("kind", "constant")
    if kind not in FIELD_KINDS:
        raise raw.error("field", "kind", f"unknown coefficient kind {kind!r}; known: {sorted(FIELD_KINDS)}")
    base = {}
    for k, v in sec.items():
        if k in _FIELD_RESERVED or k.startswith("edge."):
            continue
        try:
            base[k] = float(v)
        except ValueError:
            raise raw.error("field", k, f"expected a number, got {v!r}") from None
    kinds = [(kind, dict(base))] * edge_count
    for k, v in sec.items():
        if not k.startswith("edge."):
            continue
        try:
            i = int(k.split(".", 1)[1])
        except ValueError:
            raise raw.error("field", k, "per-edge key must be edge.<number>") from None
        if not 1 <= i <= edge_count:
            raise raw.error("field", k, f"edge {i} outside 1..{edge_count}")
        tokens = v.split()
        if not tokens or tokens[0] not in FIELD_KINDS:
            raise raw.error("field", k, f"unknown coefficient kind in {v!r}; known: {sorted(FIELD_KINDS)}")
        try:
            kinds[i - 1] = (tokens[0], _params(tokens[1:]))
        except ValueError as exc:
            raise raw.error("field", k, str(exc)) from None
    for i, (kd, params) in enumerate(kinds):
        try:
            make_edge_coefficients(kd, **params)
        except TypeError as exc:
            key = f"edge.{i + 1}" if raw.has("field", f"edge.{i + 1}") else "kind"
            raise raw.error("field", key, f"bad parameters for {kd!r}: {exc}") from None
    c = raw.get("field", "c", float, 1.0)
    bb = raw.get("field", "bound_b", float, 1.0)
    bs = raw.get("field", "bound_sigma", float, 1.5)
    try:
        return CoefficientField.from_kinds(kinds, c=c, bound_b=bb, bound_sigma=bs, T=T)
    except ValueError as exc:
        raise ConfigError(str(exc), "field", None, raw.lines.get(("field", None)), raw.source) from None


def build_alpha(raw: RawConfig, edge_count: int) -> VertexWeights:
    a = raw.get("simulation", "alpha", float_list, None)
    if a is None:
        a = [1.0 / edge_count] * edge_count
    if len(a) != edge_count:
        raise raw.error("simulation", "alpha", f"{len(a)} weights for {edge_count} edges")
    try:
        return VertexWeights(tuple(a))
    except ValueError as exc:
        raise raw.error("simulation", "alpha", str(exc)) from None


def check_test_functions(raw: RawConfig, names: list[str]) -> list[str]:
    for n in names:
        if n not in CATALOG:
            raise raw.error("estimators", "test_functions",
                            f"unknown test function {n!r}; known: {sorted(CATALOG)}")
    return names
