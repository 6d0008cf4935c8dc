"""Command-line interface.

Subcommands cover the full pipeline: generate a ground-truth model, sample
data, train either learner, evaluate against exact joint probabilities, run
full sweeps from config files, and produce the likelihood-curve and
EM-consistency analyses with their charts.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import hmm, metrics, spectral
from .em import EmConfig, em_fit, write_loglik_trace
from .errors import ValidationError
from .likelihood import (
    SymmetricHmmSpec,
    count_unimodal_modes,
    em_consistency_experiment,
    likelihood_curve,
    write_consistency_csv,
    write_curve_csv,
)
from .sweep import CONFIG_PARSERS, config_from_mapping, parse_config_file, run_sweep


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage errors map to the
    documented exit code 1."""

    def error(self, message):
        raise ValidationError(message)


def _parse_sequence(text: str) -> np.ndarray:
    try:
        return np.array([int(p) for p in text.replace(",", " ").split()], dtype=np.int64)
    except ValueError:
        raise ValidationError(f"bad sequence {text!r}; expected integers like '1,2,2,1'") from None


def _cmd_generate_hmm(args) -> int:
    params = hmm.random_hmm(args.m, args.n, args.seed, args.concentration)
    hmm.write_model(params, args.output)
    print(f"wrote model to {args.output} (m={params.m}, n={params.n}, seed={args.seed})")
    return 0


def _cmd_sample_data(args) -> int:
    params = hmm.read_model(args.model)
    dataset = hmm.sample_sequences(params, args.count, args.length, args.seed)
    hmm.write_dataset(dataset, args.output)
    print(f"wrote {dataset.count} sequences of length {dataset.length} to {args.output}")
    return 0


def _cmd_learn_spectral(args) -> int:
    dataset = hmm.read_dataset(args.data)
    moments = spectral.estimate_moments(dataset, sliding_window=args.sliding_window)
    ops = spectral.learn_spectral(moments, args.rank)
    spectral.write_operators(ops, args.output)
    sv = ", ".join(f"{v:.6g}" for v in ops.singular_values)
    flag = " (rank-deficient)" if ops.rank_deficient else ""
    print(f"wrote operators to {args.output} (rank={ops.m_hyper}, singular values: {sv}){flag}")
    return 0


def _cmd_learn_em(args) -> int:
    dataset = hmm.read_dataset(args.data)
    config = EmConfig(
        m_hyper=args.states,
        max_iterations=args.max_iterations,
        rel_tolerance=args.rel_tolerance,
        restarts=args.restarts,
        seed=args.seed,
    )
    result = em_fit(dataset, config)
    hmm.write_model(result.params, args.output)
    if args.trace_output:
        write_loglik_trace(result.loglik_trace, args.trace_output)
        print(f"wrote loglik trace to {args.trace_output}")
    status = "converged" if result.converged else "hit max_iterations"
    print(
        f"wrote model to {args.output} (states={args.states}, "
        f"loglik={result.loglik_trace[-1]:.6f}, {status}, "
        f"{len(result.loglik_trace)} trace points)"
    )
    return 0


def _build_test_sequences(params, args):
    if args.test_mode == "exhaustive":
        return hmm.all_sequences(params.n, args.test_length)
    return hmm.sample_sequences(
        params, args.test_count, args.test_length, args.test_seed
    ).sequences


def _cmd_evaluate(args) -> int:
    if (args.operators is None) == (args.em_model is None):
        raise ValidationError("pass exactly one of --operators or --em-model")
    params = hmm.read_model(args.model)
    test = _build_test_sequences(params, args)
    true_probs = hmm.joint_probability_forward_batch(params, test)
    if args.operators is not None:
        ops = spectral.read_operators(args.operators)
        raw = spectral.predict_joint_batch(ops, test)
    else:
        est_params = hmm.read_model(args.em_model)
        raw = hmm.joint_probability_forward_batch(est_params, test)
    raw_neg = metrics.neg_prop(raw)
    est = metrics.apply_correction(raw, args.correction)
    print(f"test_sequences = {test.shape[0]}")
    print(f"l1 = {metrics.normalized_l1(true_probs, est, args.test_length)!r}")
    print(f"neg_prop = {raw_neg!r}")
    print(f"total_variation = {metrics.total_variation(true_probs, est)!r}")
    return 0


def _cmd_sweep(args) -> int:
    mapping = parse_config_file(args.config) if args.config else {}
    for key in CONFIG_PARSERS:
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    config = config_from_mapping(mapping)
    records, csv_path = run_sweep(config)
    print(f"wrote {len(records)} records to {csv_path}")
    if args.render:
        from .charts import render_charts

        for path in render_charts(csv_path, config.output_dir):
            print(f"wrote chart {path}")
    return 0


def _cmd_likelihood_curve(args) -> int:
    spec = SymmetricHmmSpec(theta=args.theta, emission_correct=args.emission)
    if args.sequence is not None:
        seq = _parse_sequence(args.sequence)
    else:
        dataset = hmm.sample_sequences(spec.to_params(), 1, args.length, args.seed)
        seq = dataset.sequences[0]
    curve = likelihood_curve(spec, seq, grid_size=args.grid_size)
    write_curve_csv(curve, args.output_csv)
    modes = count_unimodal_modes(curve)
    print(
        f"wrote curve to {args.output_csv} "
        f"(t={curve.sequence_length}, grid={args.grid_size}, modes={modes})"
    )
    if args.output_chart:
        from .charts import likelihood_curves_chart

        likelihood_curves_chart([curve], [f"t={curve.sequence_length}"], args.output_chart)
        print(f"wrote chart {args.output_chart}")
    return 0


def _cmd_em_consistency(args) -> int:
    if args.model:
        params = hmm.read_model(args.model)
    else:
        params = hmm.random_hmm(2, 2, args.hmm_seed)
    em_config = EmConfig(
        m_hyper=2,
        max_iterations=args.max_iterations,
        rel_tolerance=args.rel_tolerance,
        restarts=args.restarts,
        seed=args.em_seed,
    )
    rows = em_consistency_experiment(
        params,
        sample_sizes=[int(p) for p in args.sizes.split(",") if p.strip()],
        trials=args.trials,
        em_config=em_config,
        sequence_length=args.length,
        base_seed=args.base_seed,
    )
    write_consistency_csv(rows, args.output_csv)
    wins = sum(r.em_loglik >= r.true_loglik for r in rows)
    print(f"wrote {len(rows)} rows to {args.output_csv} (EM >= true in {wins}/{len(rows)})")
    if args.output_chart:
        from .charts import consistency_chart

        consistency_chart(rows, args.output_chart)
        print(f"wrote chart {args.output_chart}")
    return 0


def _cmd_render(args) -> int:
    from .charts import render_charts

    for path in render_charts(args.csv, args.output_dir):
        print(f"wrote chart {path}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="spechmm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-hmm", help="draw a random HMM and write the model file")
    p.add_argument("--m", type=int, required=True, help="hidden states")
    p.add_argument("--n", type=int, required=True, help="observation symbols")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--concentration", type=float, default=1.0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_generate_hmm)

    p = sub.add_parser("sample-data", help="sample sequences from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_sample_data)

    p = sub.add_parser("learn-spectral", help="fit observable operators from a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--rank", type=int, required=True, help="subspace rank hyperparameter")
    p.add_argument("--sliding-window", action="store_true",
                   help="pool every consecutive triple instead of the first one")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_learn_spectral)

    p = sub.add_parser("learn-em", help="fit an HMM by Baum-Welch EM")
    p.add_argument("--data", required=True)
    p.add_argument("--states", type=int, required=True, help="hidden states to fit")
    p.add_argument("--max-iterations", type=int, default=200)
    p.add_argument("--rel-tolerance", type=float, default=1e-6)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--trace-output", help="also write the loglik trace CSV here")
    p.set_defaults(func=_cmd_learn_em)

    p = sub.add_parser("evaluate", help="score a learned artifact against a true model")
    p.add_argument("--model", required=True, help="true model file")
    p.add_argument("--operators", help="operator file from learn-spectral")
    p.add_argument("--em-model", help="model file from learn-em")
    p.add_argument("--test-mode", choices=["exhaustive", "sampled"], default="exhaustive")
    p.add_argument("--test-length", type=int, default=4)
    p.add_argument("--test-count", type=int, default=10000)
    p.add_argument("--test-seed", type=int, default=424242)
    p.add_argument("--correction", choices=list(metrics.CORRECTION_MODES), default="none")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="run a full (N, rank) sweep from a config file")
    p.add_argument("--config", help="key = value config file; flags below override it")
    p.add_argument("--render", action="store_true", help="also render the charts")
    for key in sorted(CONFIG_PARSERS):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None, metavar="VALUE",
                       help=f"override config key {key}")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("likelihood-curve",
                       help="likelihood of one sequence over a theta grid")
    p.add_argument("--theta", type=float, default=0.6,
                   help="data-generating self-transition probability")
    p.add_argument("--emission", type=float, default=0.7)
    p.add_argument("--length", type=int, default=64, help="sampled sequence length")
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    p.add_argument("--sequence", help="explicit sequence like '1,2,2,1' (skips sampling)")
    p.add_argument("--grid-size", type=int, default=1001)
    p.add_argument("--output-csv", required=True)
    p.add_argument("--output-chart")
    p.set_defaults(func=_cmd_likelihood_curve)

    p = sub.add_parser("em-consistency",
                       help="EM vs true-parameter training likelihood across N")
    p.add_argument("--model", help="2-state/2-symbol model file (default: random)")
    p.add_argument("--hmm-seed", type=int, default=5, help="seed for the random true model")
    p.add_argument("--sizes", default="1000,10000,100000", help="comma-separated N values")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--length", type=int, default=10, help="training sequence length")
    p.add_argument("--max-iterations", type=int, default=200)
    p.add_argument("--rel-tolerance", type=float, default=1e-6)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--em-seed", type=int, default=0)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--output-csv", required=True)
    p.add_argument("--output-chart")
    p.set_defaults(func=_cmd_em_consistency)

    p = sub.add_parser("render", help="render charts from a sweep metrics CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--output-dir", default=".")
    p.set_defaults(func=_cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
