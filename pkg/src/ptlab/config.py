"""Experiment configuration: JSON file plus command-line overrides."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .counting import DEFAULT_BUDGET
from .field import is_prime

# fields that change how a run executes but not what it computes
EXECUTION_FIELDS = ("workers", "chunk_size", "out", "checkpoint_dir", "resume", "config")


@dataclass
class ExperimentConfig:
    form: Optional[str] = None
    primes: list = field(default_factory=list)
    R: int = 1
    mode: str = "full"
    samples: int = 0
    sample_class: str = "uniform"
    seed: int = 0
    strategy: str = "direct"
    disc: bool = True
    s_max: int = 6
    tau_bound: float = 20.0
    tau_growth: float = 5.0
    delta: float = 0.25
    budget: float = DEFAULT_BUDGET
    symmetry_cache: bool = True
    ext: int = 1
    c: Optional[list] = None
    a: Optional[list] = None
    n: Optional[int] = None
    r: Optional[int] = None
    char: int = 0
    sigmas: list = field(default_factory=lambda: [0, 2, 4])
    epsilons: list = field(default_factory=lambda: [0, 0.25, 0.5])
    workers: int = 1
    chunk_size: int = 256
    out: Optional[str] = None
    checkpoint_dir: Optional[str] = None
    resume: bool = False
    config: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.primes = parse_primes(cfg.primes)
        return cfg

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def override(self, **kw) -> "ExperimentConfig":
        """Copy with every non-None keyword applied."""
        d = asdict(self)
        for k, v in kw.items():
            if v is not None:
                if k not in d:
                    raise ValueError(f"unknown config key {k}")
                d[k] = v
        return ExperimentConfig.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)

    def computational(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k not in EXECUTION_FIELDS}

    def sha256(self) -> str:
        blob = json.dumps(self.computational(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_primes(spec) -> list[int]:
    """"31", "11,13,17", "11-61" (all primes in the range) or a list of those."""
    if spec is None:
        return []
    if isinstance(spec, int):
        spec = [spec]
    if isinstance(spec, str):
        spec = [spec]
    out: list[int] = []
    for item in spec:
        if isinstance(item, int):
            out.append(item)
            continue
        for part in str(item).split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                out.extend(v for v in range(lo, hi + 1) if is_prime(v))
            else:
                out.append(int(part))
    for p in out:
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
    return out


def parse_int_list(text: Optional[str]) -> Optional[list[int]]:
    if text is None:
        return None
    return [int(v) for v in text.replace("(", "").replace(")", "").split(",") if v.strip()]


def parse_float_list(text: Optional[str]) -> Optional[list]:
    if text is None:
        return None
    vals = []
    for v in text.split(","):
        v = v.strip()
        if v:
            f = float(v)
            vals.append(int(f) if f.is_integer() and "." not in v else f)
    return vals
