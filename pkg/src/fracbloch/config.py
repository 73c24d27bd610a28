"""Weight-spec grammar and the serialisable experiment configuration."""

import json
import re
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigurationError, SpecParseError
from .weights import builtin_weight, load_tabulated

EXPERIMENTS = (
    "classify", "dmu", "norms", "kernel-asymptotics", "lacunary", "counterexample",
    "verify-thm12", "verify-thm13", "verify-prop23", "verify-partition", "verify-multiplier",
)
FORMATS = ("json", "csv")

_FAMILY_ALIASES = {
    "constant": "constant",
    "standard": "standard",
    "exp": "exp",
    "exponential": "exp",
    "lograpid": "lograpid",
    "log_rapid": "lograpid",
    "tabulated": "tabulated",
}
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _fail(text, pos, msg):
    raise SpecParseError(f"{msg} at position {pos} of {text!r}") from None


def _parse_params(text, start):
    params = {}
    pos = start
    while True:
        m = _NAME.match(text, pos)
        if not m:
            _fail(text, pos, "expected a parameter name")
        key = m.group(0)
        pos = m.end()
        if pos >= len(text) or text[pos] != "=":
            _fail(text, pos, f"expected '=' after {key!r}")
        pos += 1
        end = text.find(",", pos)
        end = len(text) if end < 0 else end
        raw = text[pos:end].strip()
        if not raw:
            _fail(text, pos, f"missing value for {key!r}")
        if key in params:
            _fail(text, m.start(), f"repeated parameter {key!r}")
        params[key] = (raw, pos)
        if end == len(text):
            return params
        pos = end + 1


def parse_weight_spec(text):
    """Build a weight from ``family[:key=value,...]``.

    Families: ``constant``, ``standard:beta=B``, ``exp:alpha=A,l=L,beta=B``,
    ``lograpid:alpha=A`` and ``tabulated:file=PATH``.
    """
    if not isinstance(text, str) or not text.strip():
        raise SpecParseError("empty weight spec")
    text = text.strip()
    m = _NAME.match(text)
    if not m:
        _fail(text, 0, "expected a weight family")
    fam = _FAMILY_ALIASES.get(m.group(0))
    if fam is None:
        _fail(text, 0, f"unknown weight family {m.group(0)!r}")
    pos = m.end()
    params = {}
    if pos < len(text):
        if text[pos] != ":":
            _fail(text, pos, "expected ':' after the family name")
        params = _parse_params(text, pos + 1)
    if fam == "tabulated":
        if set(params) != {"file"}:
            _fail(text, pos, "tabulated weights take exactly one parameter, file=PATH")
        return load_tabulated(params["file"][0])
    values = {}
    for key, (raw, at) in params.items():
        try:
            values[key] = float(raw)
        except ValueError:
            _fail(text, at, f"value of {key!r} is not a number")
    try:
        return builtin_weight(fam, **values)
    except ConfigurationError as exc:
        raise SpecParseError(f"{text!r}: {exc}") from None


@dataclass
class ExperimentConfig:
    experiment: str
    weights: list = field(default_factory=list)
    omega: str = None
    mu: str = None
    trunc: int = None
    grid_depth: int = None
    seed: int = 20240601
    out: str = None
    format: str = "json"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}")
        if self.format not in FORMATS:
            raise ConfigurationError(f"format must be one of {FORMATS}")
        if self.trunc is not None and self.trunc < 1:
            raise ConfigurationError("truncation must be positive")
        if self.grid_depth is not None and self.grid_depth < 1:
            raise ConfigurationError("grid depth must be positive")
        self.weights = list(self.weights)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigurationError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)
