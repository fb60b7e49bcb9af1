"""Problem instances: synthetic generation, CSV ingestion with blocking, metrics, bundle I/O.

Synthetic instances follow Y = P_star @ B @ X_star + W with Gaussian or
Uniform[0,1] B, standard-normal X_star, a structured permutation, and Gaussian
noise of standard deviation sigma. CSV ingestion groups rows into blocks by a
rounded key, permutes targets within blocks, and retains the ground truth so
recovered estimates can be scored against the oracle regression.

Instance bundle layout (one directory):
    B.csv       measurement matrix, one row per line, comma separated
    Y.csv       permuted observations
    Ystar.csv   optional unpermuted observations
    truth.json  {"permutation": [...0-based indices...], "partition": [sizes] | null}
    meta.json   {"sigma": float, "seed": int | null, "model": {...} | null}
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (EmptyBlockRule, InvalidConfig, NonNumeric, ParseError,
                     ShapeMismatch)
from .linalg import as_matrix, pinv_solve
from .permutation import (BlockPartition, KSparse, Permutation, PermutationModel,
                          RLocal, apply, hamming_distortion, sample_ksparse,
                          sample_rlocal)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Measurements plus optional ground truth.

    ``y_star`` holds the unpermuted observations (noiseless B @ X_star for
    synthetic instances, the original targets for ingested CSV data).
    ``source_rows`` maps the block-sorted rows of an ingested instance back to
    the original file order.
    """

    B: np.ndarray
    Y: np.ndarray
    sigma: float = 0.0
    partition: BlockPartition | None = None
    p_star: Permutation | None = None
    x_star: np.ndarray | None = None
    y_star: np.ndarray | None = None
    source_rows: np.ndarray | None = None

    def __post_init__(self):
        B = as_matrix(self.B, "B")
        Y = as_matrix(self.Y, "Y")
        if B.shape[0] != Y.shape[0]:
            raise ShapeMismatch(f"B has {B.shape[0]} rows but Y has {Y.shape[0]}")
        if self.sigma < 0:
            raise InvalidConfig(f"sigma must be >= 0, got {self.sigma}")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def has_truth(self) -> bool:
        return self.p_star is not None


@dataclass(frozen=True)
class SynthConfig:
    n: int
    d: int
    m: int
    model: PermutationModel
    sigma: float = 0.0
    b_dist: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if min(self.n, self.d, self.m) < 1:
            raise InvalidConfig(f"n, d, m must be >= 1, got ({self.n}, {self.d}, {self.m})")
        if self.sigma < 0:
            raise InvalidConfig(f"sigma must be >= 0, got {self.sigma}")
        if self.b_dist not in ("gaussian", "uniform01"):
            raise InvalidConfig(f"b_dist must be 'gaussian' or 'uniform01', got {self.b_dist!r}")
        if isinstance(self.model, RLocal) and self.model.partition.n != self.n:
            raise InvalidConfig(
                f"partition covers {self.model.partition.n} rows but n={self.n}")
        if isinstance(self.model, KSparse) and self.model.k > self.n:
            raise InvalidConfig(f"k={self.model.k} exceeds n={self.n}")


@dataclass(frozen=True)
class EvalMetrics:
    frac_distortion: float | None
    relative_error: float
    r2: float


def generate(config: SynthConfig) -> ProblemInstance:
    """Draw an instance; a fixed seed reproduces it bit for bit.

    Draw order is B, X_star, P_star, W, so changing only sigma rescales the
    same noise panel and leaves everything else untouched.
    """
    rng = np.random.default_rng(config.seed)
    if config.b_dist == "gaussian":
        B = rng.standard_normal((config.n, config.d))
    else:
        B = rng.uniform(0.0, 1.0, size=(config.n, config.d))
    x_star = rng.standard_normal((config.d, config.m))
    if isinstance(config.model, RLocal):
        p_star = sample_rlocal(config.model.partition, rng)
        partition = config.model.partition
    else:
        p_star = sample_ksparse(config.n, config.model.k, rng)
        partition = None
    w = rng.standard_normal((config.n, config.m))
    y_star = B @ x_star
    return ProblemInstance(
        B=B,
        Y=apply(p_star, y_star) + config.sigma * w,
        sigma=config.sigma,
        partition=partition,
        p_star=p_star,
        x_star=x_star,
        y_star=y_star,
    )


# ---------------------------------------------------------------- CSV ingestion

@dataclass(frozen=True)
class BlockRule:
    """Rows whose named columns round to the same value share a block."""

    columns: tuple[str, ...]
    decimals: int = 0

    def __post_init__(self):
        cols = tuple(self.columns)
        if not cols:
            raise EmptyBlockRule("block rule must name at least one column")
        object.__setattr__(self, "columns", cols)


def _round_half_away(value: float, decimals: int) -> float:
    scale = 10.0 ** decimals
    return math.copysign(math.floor(abs(value) * scale + 0.5), value) / scale


def _read_csv_table(path) -> tuple[list[str], list[list[float]]]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty", path=str(path)) from None
        header = [h.strip() for h in header]
        rows: list[list[float]] = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            if len(raw) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(raw)}",
                    path=str(path), line=lineno)
            parsed = []
            for col_name, cell in zip(header, raw):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise NonNumeric(
                        f"cannot parse {cell!r} as a number",
                        path=str(path), line=lineno, column=col_name) from None
            rows.append(parsed)
    if not rows:
        raise ParseError("no data rows after header", path=str(path))
    return header, rows


def ingest_csv(path, target_cols, feature_cols, block_rule: BlockRule,
               seed: int = 0) -> ProblemInstance:
    """Build an r-local instance from a CSV file with a header row.

    Rows are stably sorted by the rounded blocking key so blocks are
    contiguous; the original row order is kept in ``source_rows``. Targets are
    then permuted within blocks by a seeded uniform r-local permutation, and
    the unpermuted targets are retained as ground truth.
    """
    header, rows = _read_csv_table(path)
    index = {name: i for i, name in enumerate(header)}
    for name in tuple(target_cols) + tuple(feature_cols) + block_rule.columns:
        if name not in index:
            raise ParseError(f"column {name!r} not found in header {header}", path=str(path))

    keys = [
        tuple(_round_half_away(row[index[c]], block_rule.decimals) for c in block_rule.columns)
        for row in rows
    ]
    order = sorted(range(len(rows)), key=lambda i: keys[i])

    sizes = []
    for i, row_idx in enumerate(order):
        if i and keys[row_idx] == keys[order[i - 1]]:
            sizes[-1] += 1
        else:
            sizes.append(1)
    partition = BlockPartition(tuple(sizes))

    feat_idx = [index[c] for c in feature_cols]
    targ_idx = [index[c] for c in target_cols]
    table = np.asarray(rows, dtype=np.float64)[order]
    B = table[:, feat_idx]
    y_star = table[:, targ_idx]

    p_star = sample_rlocal(partition, np.random.default_rng(seed))
    return ProblemInstance(
        B=B,
        Y=apply(p_star, y_star),
        sigma=0.0,
        partition=partition,
        p_star=p_star,
        y_star=y_star,
        source_rows=np.asarray(order, dtype=np.intp),
    )


# ---------------------------------------------------------------- evaluation

def oracle_and_naive(B, Y_star, Y) -> tuple[np.ndarray, np.ndarray]:
    """Reference regressions: oracle pinv(B) @ Y_star and naive pinv(B) @ Y."""
    return pinv_solve(B, Y_star), pinv_solve(B, Y)


def evaluate(X_hat, X_oracle, B, Y_star,
             P_hat: Permutation | None = None,
             P_star: Permutation | None = None) -> EvalMetrics:
    """Score an estimate against the oracle regression.

    relative_error is ||X_oracle - X_hat||_F / ||X_oracle||_F and the
    goodness-of-fit coefficient is 1 - ||Y_star - B X_hat||_F / ||Y_star||_F
    (a plain ratio, not the squared one). Fractional Hamming distortion is
    reported only when both permutations are supplied.
    """
    X_hat = as_matrix(X_hat, "X_hat")
    X_oracle = as_matrix(X_oracle, "X_oracle")
    B = as_matrix(B, "B")
    Y_star = as_matrix(Y_star, "Y_star")
    if X_hat.shape != X_oracle.shape:
        raise ShapeMismatch(f"X_hat {X_hat.shape} vs X_oracle {X_oracle.shape}")
    if B.shape[1] != X_hat.shape[0] or B.shape[0] != Y_star.shape[0]:
        raise ShapeMismatch(
            f"inconsistent shapes B {B.shape}, X_hat {X_hat.shape}, Y_star {Y_star.shape}")

    denom = float(np.linalg.norm(X_oracle))
    num = float(np.linalg.norm(X_oracle - X_hat))
    relative_error = num / denom if denom > 0 else (0.0 if num == 0.0 else float("inf"))

    y_norm = float(np.linalg.norm(Y_star))
    resid = float(np.linalg.norm(Y_star - B @ X_hat))
    r2 = 1.0 - (resid / y_norm if y_norm > 0 else 0.0)

    frac = None
    if P_hat is not None and P_star is not None:
        frac = hamming_distortion(P_hat, P_star) / P_star.n
    return EvalMetrics(frac_distortion=frac, relative_error=relative_error, r2=r2)


# ---------------------------------------------------------------- bundle I/O

def write_matrix_csv(path, M) -> None:
    np.savetxt(path, np.atleast_2d(np.asarray(M, dtype=np.float64)), delimiter=",", fmt="%.17g")


def read_matrix_csv(path) -> np.ndarray:
    """Matrix CSV reader; tolerates one optional header line."""
    path = Path(path)
    rows: list[list[float]] = []
    with path.open(newline="") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            parsed = []
            for col, cell in enumerate(raw):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    if lineno == 1:
                        parsed = None  # header line, skip
                        break
                    raise ParseError(
                        f"cannot parse {cell!r} as a number",
                        path=str(path), line=lineno, column=col + 1) from None
            if parsed is None:
                continue
            if rows and len(parsed) != len(rows[0]):
                raise ParseError(
                    f"expected {len(rows[0])} fields, got {len(parsed)}",
                    path=str(path), line=lineno)
            rows.append(parsed)
    if not rows:
        raise ParseError("no numeric rows", path=str(path))
    return np.asarray(rows, dtype=np.float64)


def _model_to_dict(model: PermutationModel | None):
    if model is None:
        return None
    if isinstance(model, RLocal):
        return {"variant": "rlocal", "sizes": list(model.partition.sizes)}
    return {"variant": "ksparse", "k": model.k}


def model_from_dict(payload) -> PermutationModel | None:
    if payload is None:
        return None
    if payload["variant"] == "rlocal":
        return RLocal(BlockPartition(tuple(payload["sizes"])))
    if payload["variant"] == "ksparse":
        return KSparse(int(payload["k"]))
    raise InvalidConfig(f"unknown model variant {payload['variant']!r}")


def save_bundle(instance: ProblemInstance, out_dir,
                seed: int | None = None,
                model: PermutationModel | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out / "B.csv", instance.B)
    write_matrix_csv(out / "Y.csv", instance.Y)
    if instance.y_star is not None:
        write_matrix_csv(out / "Ystar.csv", instance.y_star)
    truth = {
        "permutation": instance.p_star.to_list() if instance.p_star is not None else None,
        "partition": list(instance.partition.sizes) if instance.partition is not None else None,
    }
    (out / "truth.json").write_text(json.dumps(truth, indent=2) + "\n")
    meta = {"sigma": instance.sigma, "seed": seed, "model": _model_to_dict(model)}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return out


def load_bundle(bundle_dir) -> ProblemInstance:
    bundle = Path(bundle_dir)
    B = read_matrix_csv(bundle / "B.csv")
    Y = read_matrix_csv(bundle / "Y.csv")
    y_star = None
    if (bundle / "Ystar.csv").exists():
        y_star = read_matrix_csv(bundle / "Ystar.csv")
    sigma = 0.0
    partition = None
    p_star = None
    meta_path = bundle / "meta.json"
    if meta_path.exists():
        sigma = float(json.loads(meta_path.read_text()).get("sigma", 0.0) or 0.0)
    truth_path = bundle / "truth.json"
    if truth_path.exists():
        truth = json.loads(truth_path.read_text())
        if truth.get("partition") is not None:
            partition = BlockPartition(tuple(truth["partition"]))
        if truth.get("permutation") is not None:
            p_star = Permutation.from_list(truth["permutation"])
    return ProblemInstance(B=B, Y=Y, sigma=sigma, partition=partition,
                           p_star=p_star, y_star=y_star)


def load_bundle_meta(bundle_dir) -> dict:
    meta_path = Path(bundle_dir) / "meta.json"
    if not meta_path.exists():
        return {"sigma": 0.0, "seed": None, "model": None}
    return json.loads(meta_path.read_text())
