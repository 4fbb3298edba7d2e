"""``key = value`` configuration for a pipeline run."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .builders import DEFAULT_D, DEFAULT_ETA, DEFAULT_LAMBDA


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    mapping: Path | None = None
    train: Path | None = None
    dev: Path | None = None
    test: Path | None = None
    order: int = 4
    d: int = DEFAULT_D
    lam: float = DEFAULT_LAMBDA
    eta: float = DEFAULT_ETA
    seed: int = 1
    out: Path = Path("rnr-out")
    p_sub: float = 0.05
    p_del: float = 0.0
    p_ins: float = 0.0
    p_within: float = 0.0
    confusions: tuple[str, ...] = field(default_factory=tuple)
    ppl_order: int = 3
    jobs: int = 1

    def validate(self) -> "PipelineConfig":
        for name in ("mapping", "train", "dev", "test"):
            path = getattr(self, name)
            if path is None:
                raise ConfigError(f"missing required key {name!r}")
            if not path.is_file():
                raise ConfigError(f"{name}: no such file {path}")
        if self.order < 1 or self.ppl_order < 1:
            raise ConfigError("LM orders must be >= 1")
        if self.d < 0 or self.lam < 0 or self.eta < 0:
            raise ConfigError("d, lambda and eta must be non-negative")
        for name in ("p_sub", "p_del", "p_ins", "p_within"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1]")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return self

    def items(self) -> list[tuple[str, str]]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(v)
            out.append((_KEY_OF.get(f.name, f.name), "" if v is None else str(v)))
        return out


# file keys that differ from attribute names
_ATTR_OF = {"lambda": "lam"}
_KEY_OF = {v: k for k, v in _ATTR_OF.items()}
_PATHS = {"mapping", "train", "dev", "test", "out"}


def _convert(attr: str, raw: str, typ):
    if attr in _PATHS:
        return Path(raw)
    if attr == "confusions":
        return tuple(c for c in (x.strip() for x in raw.split(",")) if c)
    try:
        return int(raw) if typ == "int" else float(raw)
    except ValueError:
        raise ConfigError(f"{_KEY_OF.get(attr, attr)}: expected a number, got {raw!r}") from None


_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def parse_config(text: str, base: Path | None = None, **overrides) -> PipelineConfig:
    """Parse ``key = value`` lines; relative paths resolve against ``base``.

    Keyword ``overrides`` (attribute names, ``None`` meaning unset) win over
    the file.
    """
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        attr = _ATTR_OF.get(key, key).replace("-", "_")
        if attr not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        value = _convert(attr, raw, _TYPES[attr])
        if isinstance(value, Path) and base is not None and not value.is_absolute():
            value = base / value
        values[attr] = value
    values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**values)


def load_config(path, **overrides) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return parse_config(text, base=path.parent, **overrides)


def with_overrides(cfg: PipelineConfig, **overrides) -> PipelineConfig:
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
