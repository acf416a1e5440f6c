"""Chunked, checkpointed and parallel scans of hyperplane sections E_c over c-space."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import multiprocessing as mp
import os
from dataclasses import asdict, dataclass, field as dc_field, replace
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .counting import (DEFAULT_BUDGET, BudgetExceeded, Thresholds, hyperplane_section_series,
                       sqrt_cancellation_verdict)
from .criteria import consistency_audit, diagonal_cubic_dichotomy
from .discriminant import disc_vanish_geometric, eval_diag_disc, pairing_criterion, perfect_matchings
from .field import Field, decode_projective, field_make, projective_count
from .forms import DiagonalForm, as_form, parse_form

log = logging.getLogger(__name__)

MODES = ("full", "projective", "sample")
SAMPLE_CLASSES = ("uniform", "pairing")


@dataclass(frozen=True)
class ScanSpec:
    """Everything that determines the content of a scan table."""
    form: str
    p: int
    R: int = 1
    mode: str = "projective"
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

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.sample_class not in SAMPLE_CLASSES:
            raise ValueError(f"sample_class must be one of {SAMPLE_CLASSES}")
        if self.mode == "sample" and self.samples <= 0:
            raise ValueError("sample mode needs samples > 0")
        if self.R < 1:
            raise ValueError("R must be at least 1")

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(self.tau_bound, self.tau_growth, self.delta)

    def sha256(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def header(m: int, R: int) -> list[str]:
    return (["p", "m", "d", "form"] + [f"c{i + 1}" for i in range(m)]
            + ["disc_zero", "pairing", "vanishing_factors"]
            + [f"E{r}" for r in range(1, R + 1)] + [f"rho{r}" for r in range(1, R + 1)]
            + ["verdict", "agree", "note"])


# ----------------------------------------------------------------------------
# selecting c

def n_items(spec: ScanSpec, m: int) -> int:
    if spec.mode == "sample":
        return spec.samples
    return projective_count(spec.p, m - 1)


def sample_c(spec: ScanSpec, i: int, F, field: Field) -> tuple[int, ...]:
    """The i-th sampled c: a function of (seed, i) only, through a counter-based generator."""
    p = field.p
    m = as_form(F).m
    key = np.array([spec.seed & 0xFFFFFFFFFFFFFFFF, i], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    while True:
        if spec.sample_class == "uniform":
            c = tuple(int(v) for v in rng.integers(0, p, m))
        else:
            c = _sample_pairing(rng, F, field)
        if any(c):
            return c


def _sample_pairing(rng, F, field: Field) -> tuple[int, ...]:
    """Random c satisfying c_i^3 F_j = c_j^3 F_i on the pairs of a random perfect matching."""
    coeffs = as_form(F).diagonal_coeffs()
    if coeffs is None:
        raise ValueError("pairing sampling needs a diagonal form")
    coeffs = [int(v) % field.p for v in coeffs]
    matches = perfect_matchings(len(coeffs))
    if not matches:
        raise ValueError("pairing sampling needs an even number of variables")
    for _ in range(64):
        match = matches[int(rng.integers(0, len(matches)))]
        c = [0] * len(coeffs)
        ok = True
        for i, j in match:
            ci = int(rng.integers(0, field.p))
            # c_j^3 = c_i^3 F_j / F_i
            target = field.div(field.mul(field.pow(ci, 3), coeffs[j]), coeffs[i])
            roots = field.cube_roots(target)
            if not roots:
                ok = False
                break
            c[i] = ci
            c[j] = sorted(roots)[int(rng.integers(0, len(roots)))]
        if ok:
            return tuple(c)
    raise ValueError("no pairing c found for this form; F_j / F_i is not a cube on any matching")


def items(spec: ScanSpec, F, field: Field, start: int, stop: int) -> Iterator[tuple[int, ...]]:
    m = as_form(F).m
    for i in range(start, stop):
        if spec.mode == "sample":
            yield sample_c(spec, i, F, field)
        else:
            yield decode_projective(field.q, m - 1, i)


# ----------------------------------------------------------------------------
# one section

def orbit_key(coeffs: Sequence[int], c: Sequence[int], field: Field) -> tuple:
    """Canonical key of c under the symmetries of a diagonal cubic.

    E_c depends on c only through the multiset of pairs (F_i, c_i^3) up to
    a common factor lambda^3: x_i -> zeta x_i with zeta^3 = 1 rescales c_i,
    swapping x_i, x_j with F_i = F_j permutes c, and c -> lambda c fixes the
    hyperplane.
    """
    cubes = [field.pow(int(v), 3) for v in c]
    best = None
    for lam3 in sorted({field.pow(v, 3) for v in range(1, field.q)}):
        key = tuple(sorted((int(f), field.mul(lam3, t)) for f, t in zip(coeffs, cubes)))
        if best is None or key < best:
            best = key
    return best


@dataclass
class SectionResult:
    disc_zero: Optional[bool]
    pairing: str
    vanishing_factors: Optional[int]
    E: list
    rho: list
    verdict: str
    agree: str
    note: str


class SectionEvaluator:
    """Computes the row data for one c, with an optional exact orbit cache for diagonal cubics."""

    def __init__(self, spec: ScanSpec):
        self.spec = spec
        self.F = parse_form(spec.form)
        self.field = field_make(spec.p)
        G = as_form(self.F)
        self.G = G.over(self.field)
        self.m, self.d = G.m, G.d
        co = G.diagonal_coeffs()
        self.diag = None if co is None else tuple(int(v) % spec.p for v in co)
        self.diag_cubic = self.diag is not None and self.d == 3 and all(self.diag)
        self.cache: dict = {}

    def evaluate(self, c: Sequence[int]) -> SectionResult:
        key = None
        res = None
        if self.spec.symmetry_cache and self.diag_cubic:
            key = orbit_key(self.diag, c, self.field)
            res = self.cache.get(key)
        if res is None:
            res = self._compute(c)
            if key is not None:
                self.cache[key] = res
        pairing = ""
        if self.diag_cubic and self.m in (4, 6):
            # the matching itself is not an orbit invariant
            match = pairing_criterion(self.G, c, self.field)
            if match is not None:
                pairing = "|".join(f"{i}{j}" for i, j in match)
        return replace(res, pairing=pairing)

    def _compute(self, c: Sequence[int]) -> SectionResult:
        spec, fld = self.spec, self.field
        disc_zero, vf = None, None
        predicted = None
        if self.diag_cubic:
            dd = eval_diag_disc(self.G, c, fld)
            disc_zero = dd.value == 0
            vf = dd.vanishing_count
            if self.m in (4, 6):
                predicted = diagonal_cubic_dichotomy(self.G, c, fld)
        elif spec.disc:
            disc_zero = disc_vanish_geometric(self.G, c, fld, s_max=spec.s_max, budget=int(spec.budget))
        series = hyperplane_section_series(self.G, c, fld, spec.R, budget=int(spec.budget),
                                           strategy=spec.strategy)
        v = sqrt_cancellation_verdict(series, spec.thresholds)
        agree = consistency_audit(predicted, v.label) if predicted is not None else ""
        return SectionResult(disc_zero, "", vf, list(series.E), list(series.rho), v.label, agree,
                             "; ".join(series.notes))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def format_rows(spec: ScanSpec, ev: SectionEvaluator, c: Sequence[int], res: SectionResult) -> list[str]:
    """CSV lines for one work item (p - 1 lines in full mode: c scaled by lambda = 1..p-1)."""
    scalars = range(1, spec.p) if spec.mode == "full" else (1,)
    out = []
    for lam in scalars:
        cc = [ev.field.mul(lam, v) for v in c]
        row = ([spec.p, ev.m, ev.d, spec.form] + cc
               + [res.disc_zero, res.pairing, res.vanishing_factors] + res.E + res.rho
               + [res.verdict, res.agree, res.note])
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow([_fmt(x) for x in row])
        out.append(buf.getvalue())
    return out


# ----------------------------------------------------------------------------
# chunks, checkpoints and workers

_EVALUATORS: dict = {}


def _evaluator(spec: ScanSpec) -> SectionEvaluator:
    ev = _EVALUATORS.get(spec)
    if ev is None:
        ev = _EVALUATORS[spec] = SectionEvaluator(spec)
    return ev


def compute_chunk(spec: ScanSpec, chunk: int, chunk_size: int) -> tuple[int, int, int, list[str]]:
    ev = _evaluator(spec)
    total = n_items(spec, ev.m)
    start = chunk * chunk_size
    stop = min(total, start + chunk_size)
    lines: list[str] = []
    for c in items(spec, ev.F, ev.field, start, stop):
        lines.extend(format_rows(spec, ev, c, ev.evaluate(c)))
    return chunk, start, stop, lines


def _compute_chunk_star(args):
    return compute_chunk(*args)


def _checksum(lines: list[str]) -> str:
    return hashlib.sha256("".join(lines).encode()).hexdigest()


def _chunk_path(ckpt_dir: Path, chunk: int) -> Path:
    return ckpt_dir / f"chunk_{chunk:07d}.json"


def write_checkpoint(ckpt_dir: Path, config_hash: str, chunk: int, start: int, stop: int, lines: list[str]):
    path = _chunk_path(ckpt_dir, chunk)
    tmp = path.with_suffix(".tmp")
    doc = {"config_sha256": config_hash, "chunk": chunk, "start": start, "stop": stop,
           "rows": lines, "checksum": _checksum(lines)}
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def load_checkpoint(ckpt_dir: Path, config_hash: str, chunk: int) -> Optional[list[str]]:
    """Rows of a finished chunk, or None if absent, foreign or corrupt."""
    path = _chunk_path(ckpt_dir, chunk)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, ValueError):
        return None
    if doc.get("config_sha256") != config_hash or doc.get("chunk") != chunk:
        return None
    if _checksum(doc["rows"]) != doc.get("checksum"):
        log.warning("checkpoint %s fails its checksum; recomputing", path)
        return None
    return doc["rows"]


@dataclass
class ScanRun:
    """How to execute a scan; none of these fields affect its content."""
    out: str
    workers: int = 1
    chunk_size: int = 256
    checkpoint_dir: Optional[str] = None
    resume: bool = False
    meta: dict = dc_field(default_factory=dict)


def run_scan(spec: ScanSpec, run: ScanRun) -> Path:
    """Compute the scan table and write it to run.out.

    Each finished chunk is checkpointed by the collector; with resume=True
    valid checkpoints are reused and only missing chunks are computed.  The
    final CSV depends on spec only.
    """
    config_hash = spec.sha256()
    F = parse_form(spec.form)
    m = as_form(F).m
    total = n_items(spec, m)
    nchunks = (total + run.chunk_size - 1) // run.chunk_size
    out = Path(run.out)
    ckpt = Path(run.checkpoint_dir) if run.checkpoint_dir else out.with_name(out.name + ".chunks")
    ckpt.mkdir(parents=True, exist_ok=True)
    done: dict[int, list[str]] = {}
    if run.resume:
        for k in range(nchunks):
            rows = load_checkpoint(ckpt, config_hash, k)
            if rows is not None:
                done[k] = rows
        log.info("resume: %d of %d chunks already done", len(done), nchunks)
    todo = [k for k in range(nchunks) if k not in done]
    tasks = [(spec, k, run.chunk_size) for k in todo]
    if run.workers <= 1 or len(tasks) <= 1:
        results = map(_compute_chunk_star, tasks)
        pool = None
    else:
        pool = mp.get_context("fork").Pool(run.workers)
        results = pool.imap_unordered(_compute_chunk_star, tasks)
    try:
        for chunk, start, stop, lines in results:
            write_checkpoint(ckpt, config_hash, chunk, start, stop, lines)
            done[chunk] = lines
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    tmp = out.with_suffix(out.suffix + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(f"# config_sha256={config_hash}\n")
        csv.writer(fh, lineterminator="\n").writerow(header(m, spec.R))
        for k in range(nchunks):
            fh.writelines(done[k])
    os.replace(tmp, out)
    meta = {"schema": "v1", "config_sha256": config_hash, "spec": asdict(spec),
            "run": {"workers": run.workers, "chunk_size": run.chunk_size}, **run.meta}
    with open(out.with_name(out.name + ".meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return out


def read_scan(path) -> tuple[str, list[dict]]:
    """Config hash and rows of a scan CSV."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        config_hash = first.split("=", 1)[1] if first.startswith("# config_sha256=") else ""
        rows = list(csv.DictReader(fh))
    return config_hash, rows


def scan_rows(spec: ScanSpec) -> Iterator[tuple[tuple[int, ...], SectionResult]]:
    """In-process iteration over (c, result) in table order (projective classes are not expanded)."""
    ev = _evaluator(spec)
    for c in items(spec, ev.F, ev.field, 0, n_items(spec, ev.m)):
        yield c, ev.evaluate(c)
