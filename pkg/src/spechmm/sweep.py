"""Experiment harness: sweep (training size, rank) cells over one true HMM.

One sweep fixes a ground-truth model and a test set, then for every
(N, trial) cell samples a fresh training set and evaluates the configured
learners against the exact joint probabilities:

* spectral: once per rank in rank_values, from the cell's dataset;
* em: once per rank in em_ranks (defaults to the true state count),
             sharing the same dataset so learners see identical data;
* true-model: the generating parameters themselves, as a floor/reference.

Every random draw is keyed by derive_seed(base_seed, stream, indices...), so
results are byte-reproducible and adding ranks, sizes or trials never
perturbs existing cells. Record order in the CSV is canonical
(N, m_hyper, trial, learner) regardless of execution order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

from .em import EmConfig, dataset_log_likelihood, em_fit
from .errors import FormatError, ValidationError
from .hmm import (
    MAX_ENUMERATION,
    all_sequences,
    joint_probability_forward_batch,
    random_hmm,
    read_model,
    sample_sequences,
)
from .metrics import (
    CORRECTION_MODES,
    LEARNERS,
    MetricsRecord,
    apply_correction,
    neg_prop,
    normalized_l1,
    write_metrics_csv,
)
from .seeding import STREAM_DATA, STREAM_EM, derive_seed
from .spectral import estimate_moments, learn_spectral, predict_joint_batch

_TEST_MODES = ("exhaustive", "sampled")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one sweep; every field maps 1:1 to a config key.

    The true model comes from model_file when set, otherwise it is drawn as
    random_hmm(m, n, hmm_seed, concentration). correction_mode rewrites the
    spectral estimates used for l1; neg_prop is always computed on the raw
    outputs first. record_timing=False writes wall_time_ms as 0.0 so reruns
    of one config are byte-identical.
    """

    experiment_id: str = "experiment"
    model_file: str | None = None
    m: int = 4
    n: int = 8
    hmm_seed: int = 7
    concentration: float = 1.0
    train_sizes: tuple[int, ...] = (100, 1000, 10000, 100000)
    rank_values: tuple[int, ...] = (2, 4, 8)
    train_length: int = 4
    test_mode: str = "exhaustive"
    test_length: int = 4
    test_count: int = 10000
    test_seed: int = 424242
    trials: int = 10
    base_seed: int = 20260814
    correction_mode: str = "none"
    learners: tuple[str, ...] = ("spectral", "em", "true-model")
    em_ranks: tuple[int, ...] | None = None
    em_max_iterations: int = 200
    em_rel_tolerance: float = 1e-6
    em_restarts: int = 5
    sliding_window: bool = False
    record_timing: bool = False
    output_dir: str = "."

    def __post_init__(self):
        if self.model_file is None and (self.m < 1 or self.n < 1):
            raise ValidationError(f"need m >= 1 and n >= 1, got m={self.m}, n={self.n}")
        for name, values in (("train_sizes", self.train_sizes), ("rank_values", self.rank_values)):
            if not values or any(v < 1 for v in values):
                raise ValidationError(f"{name} must be non-empty positive integers, got {values}")
        if len(set(self.train_sizes)) != len(self.train_sizes):
            raise ValidationError(f"train_sizes contains duplicates: {self.train_sizes}")
        if self.train_length < 3:
            raise ValidationError(
                f"train_length must be >= 3 for moment estimation, got {self.train_length}"
            )
        if self.test_mode not in _TEST_MODES:
            raise ValidationError(f"test_mode must be one of {_TEST_MODES}, got {self.test_mode!r}")
        if self.test_length < 1 or self.test_count < 1:
            raise ValidationError("test_length and test_count must be >= 1")
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        if self.base_seed < 0 or self.test_seed < 0 or (self.model_file is None and self.hmm_seed < 0):
            raise ValidationError("seeds must be non-negative")
        if self.correction_mode not in CORRECTION_MODES:
            raise ValidationError(
                f"correction_mode must be one of {CORRECTION_MODES}, got {self.correction_mode!r}"
            )
        if not self.learners or any(l not in LEARNERS for l in self.learners):
            raise ValidationError(f"learners must be a non-empty subset of {LEARNERS}")
        if len(set(self.learners)) != len(self.learners):
            raise ValidationError(f"learners contains duplicates: {self.learners}")
        if self.em_ranks is not None and (not self.em_ranks or any(v < 1 for v in self.em_ranks)):
            raise ValidationError(f"em_ranks must be non-empty positive integers, got {self.em_ranks}")
        # Embedded EmConfig field checks (m_hyper filled in per cell).
        EmConfig(
            m_hyper=1,
            max_iterations=self.em_max_iterations,
            rel_tolerance=self.em_rel_tolerance,
            restarts=self.em_restarts,
        )


# Config file keys, with the parser used to read each value.


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_int_list(s: str) -> tuple[int, ...]:
    return tuple(int(p.strip()) for p in s.split(",") if p.strip())


def _parse_str_list(s: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in s.split(",") if p.strip())


CONFIG_PARSERS = {
    "experiment_id": str,
    "model_file": str,
    "m": int,
    "n": int,
    "hmm_seed": int,
    "concentration": float,
    "train_sizes": _parse_int_list,
    "rank_values": _parse_int_list,
    "train_length": int,
    "test_mode": str,
    "test_length": int,
    "test_count": int,
    "test_seed": int,
    "trials": int,
    "base_seed": int,
    "correction_mode": str,
    "learners": _parse_str_list,
    "em_ranks": _parse_int_list,
    "em_max_iterations": int,
    "em_rel_tolerance": float,
    "em_restarts": int,
    "sliding_window": _parse_bool,
    "record_timing": _parse_bool,
    "output_dir": str,
}


def parse_config_file(path) -> dict[str, str]:
    """Read a flat `key = value` file into a raw string mapping.

    '#' starts a comment; blank lines are ignored; keys must be known and
    unique. Values stay as strings so CLI overrides can merge before typing.
    """
    mapping: dict[str, str] = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise FormatError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = key.strip(), value.strip()
            if key not in CONFIG_PARSERS:
                raise FormatError(f"{path}:{lineno}: unknown key {key!r}")
            if key in mapping:
                raise FormatError(f"{path}:{lineno}: duplicate key {key!r}")
            mapping[key] = value
    return mapping


def config_from_mapping(mapping: dict[str, str]) -> ExperimentConfig:
    """Type and validate a raw string mapping into an ExperimentConfig."""
    kwargs = {}
    for key, raw in mapping.items():
        if key not in CONFIG_PARSERS:
            raise ValidationError(f"unknown config key {key!r}")
        try:
            kwargs[key] = CONFIG_PARSERS[key](raw)
        except ValueError as e:
            raise ValidationError(f"config key {key!r}: {e}") from None
    return ExperimentConfig(**kwargs)


def _resolve_model(config: ExperimentConfig):
    if config.model_file is not None:
        return read_model(config.model_file)
    return random_hmm(config.m, config.n, config.hmm_seed, config.concentration)


def _build_test_set(config: ExperimentConfig, params):
    if config.test_mode == "exhaustive":
        cells = params.n ** config.test_length
        if cells > MAX_ENUMERATION:
            raise ValidationError(
                f"exhaustive test set would hold {params.n}**{config.test_length} = {cells} "
                f"sequences (limit {MAX_ENUMERATION}); use test_mode = sampled"
            )
        return all_sequences(params.n, config.test_length)
    return sample_sequences(
        params, config.test_count, config.test_length, config.test_seed
    ).sequences


def run_sweep(config: ExperimentConfig) -> tuple[list[MetricsRecord], Path]:
    """Execute the sweep and write `<output_dir>/<experiment_id>_metrics.csv`.

    Returns the records in canonical order together with the CSV path.
    """
    params = _resolve_model(config)
    bad_ranks = [r for r in config.rank_values if r > params.n]
    if bad_ranks:
        raise ValidationError(
            f"rank_values {bad_ranks} exceed the alphabet size n={params.n}"
        )
    em_ranks = config.em_ranks if config.em_ranks is not None else (params.m,)
    test = _build_test_set(config, params)
    true_probs = joint_probability_forward_batch(params, test)
    t_test = config.test_length

    records: list[MetricsRecord] = []
    for ni, N in enumerate(config.train_sizes):
        for trial in range(config.trials):
            data_seed = derive_seed(config.base_seed, STREAM_DATA, ni, trial)
            dataset = sample_sequences(params, N, config.train_length, data_seed)

            if "spectral" in config.learners:
                for rank in config.rank_values:
                    t0 = time.perf_counter()
                    moments = estimate_moments(dataset, sliding_window=config.sliding_window)
                    ops = learn_spectral(moments, rank)
                    wall = (time.perf_counter() - t0) * 1e3 if config.record_timing else 0.0
                    raw = predict_joint_batch(ops, test)
                    raw_neg = neg_prop(raw)
                    est = apply_correction(raw, config.correction_mode)
                    records.append(MetricsRecord(
                        experiment_id=config.experiment_id,
                        learner="spectral",
                        N=N,
                        m_hyper=rank,
                        trial=trial,
                        seed=data_seed,
                        l1=normalized_l1(true_probs, est, t_test),
                        neg_prop=raw_neg,
                        loglik=math.nan,
                        wall_time_ms=wall,
                    ))

            if "em" in config.learners:
                for ri, em_rank in enumerate(em_ranks):
                    em_seed = derive_seed(config.base_seed, STREAM_EM, ni, trial, ri)
                    em_config = EmConfig(
                        m_hyper=em_rank,
                        max_iterations=config.em_max_iterations,
                        rel_tolerance=config.em_rel_tolerance,
                        restarts=config.em_restarts,
                        seed=em_seed,
                    )
                    t0 = time.perf_counter()
                    result = em_fit(dataset, em_config)
                    wall = (time.perf_counter() - t0) * 1e3 if config.record_timing else 0.0
                    est = joint_probability_forward_batch(result.params, test)
                    records.append(MetricsRecord(
                        experiment_id=config.experiment_id,
                        learner="em",
                        N=N,
                        m_hyper=em_rank,
                        trial=trial,
                        seed=em_seed,
                        l1=normalized_l1(true_probs, est, t_test),
                        neg_prop=neg_prop(est),
                        loglik=float(result.loglik_trace[-1]),
                        wall_time_ms=wall,
                    ))

            if "true-model" in config.learners:
                records.append(MetricsRecord(
                    experiment_id=config.experiment_id,
                    learner="true-model",
                    N=N,
                    m_hyper=params.m,
                    trial=trial,
                    seed=data_seed,
                    l1=0.0,
                    neg_prop=0.0,
                    loglik=dataset_log_likelihood(params, dataset.sequences),
                    wall_time_ms=0.0,
                ))

    records.sort(key=lambda r: (r.N, r.m_hyper, r.trial, r.learner))
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{config.experiment_id}_metrics.csv"
    write_metrics_csv(records, csv_path)
    return records, csv_path
