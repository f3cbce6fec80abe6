"""Command line interface: simulate | fit | postprocess | metrics.

Exit codes: 0 success, 2 validation problems (bad config, bad keys,
unparseable inputs), 1 runtime failures.
"""

import argparse
import concurrent.futures
import json
import os
import re
import sys
from collections import Counter

import numpy as np
import pandas as pd

from . import __version__, io, report
from .basis import build_basis_system
from .exceptions import MgffaError, ValidationError
from .gibbs import run_chain
from .metrics import geweke_diagnostic, pointwise_mse, rv_coefficient, total_mse
from .postprocess import (
    active_loading_draws,
    covariance_derived_loadings,
    covariance_summaries,
    modal_configuration,
    posterior_mean_curves,
    rsp_align,
)
from .simulate import generate_replicate, generate_truth

DATASET_PATTERN = re.compile(r"dataset_r(\d+)\.csv$")


def _write_csv(frame, path):
    frame.to_csv(path, index=False, float_format=io.FLOAT_FMT, lineterminator="\n")


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    config = io.load_simulate_config(args.config, args.seed)
    started = io.utc_now()
    os.makedirs(args.out, exist_ok=True)
    truth = generate_truth(config)
    outputs = []
    grid_path = os.path.join(args.out, "grid.csv")
    io.write_grid(truth.grid, grid_path)
    outputs.append(grid_path)
    for i in range(1, config.replicates + 1):
        data = generate_replicate(truth, i)
        path = os.path.join(args.out, f"dataset_r{i}.csv")
        io.write_dataset(data, path)
        outputs.append(path)
    outputs += io.write_truth(truth, os.path.join(args.out, "truth"))
    io.write_manifest(
        args.out,
        "simulate",
        config.seed,
        [args.config],
        outputs,
        started,
        config_digest=io.sha256_of_file(args.config),
    )
    print(f"simulated {config.replicates} replicate(s) of {config.name} into {args.out}")
    return 0


# ---------------------------------------------------------------------------
# fit


def _geweke_table(draws, config):
    """Convergence z-scores for the variances and three seeded beta entries."""
    rows = []
    S = draws.num_groups
    R = draws.beta.shape[2]
    picker = np.random.default_rng(config.seed)
    targets = [("sigma2_eps", s, 0) for s in range(S)]
    targets += [("sigma2_beta", s, 0) for s in range(S)]
    targets += [
        ("beta", int(picker.integers(S)), int(picker.integers(R))) for _ in range(3)
    ]
    for name, s, idx in targets:
        if name == "beta":
            chain = draws.beta[:, s, idx]
        else:
            chain = getattr(draws, name)[:, s]
        try:
            z = geweke_diagnostic(chain)
        except MgffaError:
            z = np.nan
        rows.append(
            {
                "parameter": name,
                "group_id": draws.group_ids[s],
                "index": idx + 1,
                "z": z,
            }
        )
    return pd.DataFrame(rows)


def _fit_one(dataset_path, grid_path, config, out_dir, fmt):
    grid = io.read_grid(grid_path)
    data = io.read_dataset(dataset_path, grid)
    num_basis = config.num_basis if config.num_basis is not None else max(4, round(len(grid) / 2))
    basis = build_basis_system(grid, num_basis, config.ridge)
    started = io.utc_now()
    draws = run_chain(data, config, basis)
    os.makedirs(out_dir, exist_ok=True)
    outputs = io.write_draws(
        draws, out_dir, fmt, meta=io.draws_meta(draws, config, num_basis)
    )
    grid_copy = os.path.join(out_dir, "grid.csv")
    io.write_grid(grid, grid_copy)
    outputs.append(grid_copy)
    geweke_path = os.path.join(out_dir, "geweke.csv")
    _write_csv(_geweke_table(draws, config), geweke_path)
    outputs.append(geweke_path)
    io.write_manifest(
        out_dir, "fit", config.seed, [dataset_path, grid_path], outputs, started
    )
    return out_dir


def _replicate_seed(base_seed, index) -> int:
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(index,))
    return int(seq.generate_state(1)[0])


def cmd_fit(args) -> int:
    config, fmt = io.load_fit_config(args.config, args.seed)
    if args.format:
        fmt = args.format
    started = io.utc_now()
    if os.path.isfile(args.data):
        grid_path = os.path.join(os.path.dirname(os.path.abspath(args.data)), "grid.csv")
        if not os.path.exists(grid_path):
            raise ValidationError(f"no grid.csv next to dataset {args.data}")
        _fit_one(args.data, grid_path, config, args.out, fmt)
        print(f"fit written to {args.out}")
        return 0

    if not os.path.isdir(args.data):
        raise ValidationError(f"data path {args.data} does not exist")
    entries = []
    for name in sorted(os.listdir(args.data)):
        m = DATASET_PATTERN.fullmatch(name)
        if m:
            entries.append((int(m.group(1)), os.path.join(args.data, name)))
    if not entries:
        raise ValidationError(f"no dataset_r*.csv files under {args.data}")
    grid_path = os.path.join(args.data, "grid.csv")
    if not os.path.exists(grid_path):
        raise ValidationError(f"no grid.csv under {args.data}")
    entries.sort()
    os.makedirs(args.out, exist_ok=True)

    jobs = []
    for index, dataset_path in entries:
        rep_config = io.SamplerConfig(
            **{
                **config.__dict__,
                "seed": _replicate_seed(config.seed, index),
            }
        )
        jobs.append((dataset_path, grid_path, rep_config, os.path.join(args.out, f"r{index}"), fmt))

    if args.threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.threads) as pool:
            futures = [pool.submit(_fit_one, *job) for job in jobs]
            for future in futures:
                future.result()
    else:
        for job in jobs:
            _fit_one(*job)
    io.write_manifest(
        args.out,
        "fit",
        config.seed,
        [args.data, args.config],
        [job[3] for job in jobs],
        started,
        config_digest=io.sha256_of_file(args.config),
    )
    print(f"fit {len(jobs)} replicate(s) into {args.out}")
    return 0


# ---------------------------------------------------------------------------
# postprocess


def _config_label(row) -> str:
    return "(" + ",".join(str(v) for v in row) + ")"


def _postprocess_one(draws_dir, out_dir, top, figures):
    with open(os.path.join(draws_dir, "draws_meta.json")) as fh:
        meta = json.load(fh)
    draws = io.read_draws(draws_dir)
    grid = io.read_grid(os.path.join(draws_dir, "grid.csv"))
    basis = build_basis_system(grid, meta["num_basis"], meta["ridge"])
    started = io.utc_now()
    os.makedirs(out_dir, exist_ok=True)
    outputs = []

    def emit(frame, name):
        path = os.path.join(out_dir, name)
        _write_csv(frame, path)
        outputs.append(path)
        return path

    config, members = modal_configuration(draws)
    S = draws.num_groups
    counts = Counter(tuple(int(v) for v in r) for r in draws.configs)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], sum(kv[0]), kv[0]))[:top]
    hist = pd.DataFrame(
        [
            {
                "L_star": cfg[0],
                **{f"K_star_{s + 1}": cfg[1 + s] for s in range(S)},
                "count": count,
            }
            for cfg, count in ranked
        ]
    )
    emit(hist, "config_frequencies.csv")

    selected_path = os.path.join(out_dir, "selected_configuration.json")
    io.atomic_write_json(
        {
            "L_star": config.L_star,
            "K_star": list(config.K_star),
            "matching_draws": int(members.size),
            "retained_draws": int(draws.num_draws),
            "group_ids": draws.group_ids,
        },
        selected_path,
    )
    outputs.append(selected_path)

    # alignment in coefficient space, then posterior means of the aligned draws
    blocks = [("shared", "shared")] + [(s, draws.group_ids[s]) for s in range(S)]
    for which, label in blocks:
        lams, scores = active_loading_draws(draws, members, which)
        aligned, _ = rsp_align(lams, scores)
        mean = (
            np.mean(aligned, axis=0) if aligned and aligned[0].shape[1] else np.zeros((basis.num_basis, 0))
        )
        rows, cols = np.indices(mean.shape)
        emit(
            pd.DataFrame(
                {
                    "row": rows.ravel() + 1,
                    "component": cols.ravel() + 1,
                    "value": mean.ravel(),
                }
            ),
            f"aligned_loadings_{label}.csv",
        )

    curves = posterior_mean_curves(draws, basis, members)
    for s in range(S):
        n_s = curves[s]["mean"].shape[0]
        frame = pd.DataFrame(
            {
                "subject": np.repeat(np.arange(1, n_s + 1), len(grid)),
                "time": np.tile(grid.points, n_s),
                "mean": curves[s]["mean"].ravel(),
                "lower": curves[s]["lower"].ravel(),
                "upper": curves[s]["upper"].ravel(),
            }
        )
        emit(frame, f"curves_{draws.group_ids[s]}.csv")

    summaries = covariance_summaries(draws, basis, members)
    ident = covariance_derived_loadings(summaries, config)
    emit(io.loadings_frame(ident.shared, grid.points), "identified_loadings_shared.csv")
    emit(io.matrix_frame(summaries["shared"]), "covariance_shared.csv")
    for s in range(S):
        gid = draws.group_ids[s]
        emit(io.loadings_frame(ident.specific[s], grid.points), f"identified_loadings_{gid}.csv")
        emit(io.matrix_frame(summaries["specific"][s]), f"covariance_specific_{gid}.csv")
        emit(io.matrix_frame(summaries["total"][s]), f"covariance_total_{gid}.csv")

    if figures:
        outputs.append(
            report.save_config_histogram(
                [_config_label(cfg) for cfg, _ in ranked],
                [count for _, count in ranked],
                os.path.join(out_dir, "config_frequencies.png"),
            )
        )
        outputs.append(
            report.save_loading_heatmap(
                ident.shared,
                grid.points,
                os.path.join(out_dir, "identified_loadings_shared.png"),
                "Shared loadings",
            )
        )
        for s in range(S):
            gid = draws.group_ids[s]
            outputs.append(
                report.save_loading_heatmap(
                    ident.specific[s],
                    grid.points,
                    os.path.join(out_dir, f"identified_loadings_{gid}.png"),
                    f"{gid} loadings",
                )
            )
            outputs.append(
                report.save_group_curves(
                    grid.points,
                    curves[s]["mean"],
                    curves[s]["lower"],
                    curves[s]["upper"],
                    os.path.join(out_dir, f"curves_{gid}.png"),
                    f"Posterior mean curves, {gid}",
                )
            )
    io.write_manifest(out_dir, "postprocess", None, [draws_dir], outputs, started)
    return out_dir


def _find_draw_dirs(root):
    if os.path.exists(os.path.join(root, "draws_meta.json")):
        return [(None, root)]
    found = []
    for name in sorted(os.listdir(root)):
        sub = os.path.join(root, name)
        m = re.fullmatch(r"r(\d+)", name)
        if m and os.path.exists(os.path.join(sub, "draws_meta.json")):
            found.append((int(m.group(1)), sub))
    found.sort(key=lambda kv: kv[0])
    return found


def cmd_postprocess(args) -> int:
    if not os.path.isdir(args.draws):
        raise ValidationError(f"draws path {args.draws} is not a directory")
    targets = _find_draw_dirs(args.draws)
    if not targets:
        raise ValidationError(f"no draw files found under {args.draws}")
    for index, draws_dir in targets:
        out_dir = args.out if index is None else os.path.join(args.out, f"r{index}")
        _postprocess_one(draws_dir, out_dir, args.top, not args.no_figures)
    print(f"postprocessed {len(targets)} run(s) into {args.out}")
    return 0


# ---------------------------------------------------------------------------
# metrics


def _truth_dir(path):
    if os.path.exists(os.path.join(path, "scenario.json")):
        return path
    nested = os.path.join(path, "truth")
    if os.path.exists(os.path.join(nested, "scenario.json")):
        return nested
    raise ValidationError(f"no scenario.json under {path}")


def _result_dirs(root):
    if os.path.exists(os.path.join(root, "selected_configuration.json")):
        return [(1, root)]
    found = []
    for name in sorted(os.listdir(root)):
        m = re.fullmatch(r"r(\d+)", name)
        sub = os.path.join(root, name)
        if m and os.path.exists(os.path.join(sub, "selected_configuration.json")):
            found.append((int(m.group(1)), sub))
    found.sort(key=lambda kv: kv[0])
    return found


def _read_curves_matrix(path, T):
    frame = io.read_csv(path)
    frame = frame.sort_values(["subject", "time"], kind="stable")
    n = frame["subject"].nunique()
    if len(frame) != n * T:
        raise ValidationError(f"curve file {path} has inconsistent dimensions")
    return frame["mean"].to_numpy().reshape(n, T)


def cmd_metrics(args) -> int:
    started = io.utc_now()
    truth = io.read_truth(_truth_dir(args.truth))
    meta = truth["meta"]
    results = _result_dirs(args.results)
    if not results:
        raise ValidationError(f"no postprocessed results under {args.results}")

    missing = []
    for index, sub in results:
        if index > meta["replicates"]:
            missing.append(f"replicate r{index} has results but no truth (truth has {meta['replicates']})")
        for gid in meta["group_ids"]:
            for needed in (f"curves_{gid}.csv", f"identified_loadings_{gid}.csv"):
                if not os.path.exists(os.path.join(sub, needed)):
                    missing.append(f"r{index}: missing {needed}")
    if missing:
        raise ValidationError("truth/result key mismatches: " + "; ".join(missing))

    T = meta["T"]
    scenario = meta["name"]
    times = truth["grid"].points
    rv_rows, mse_rows, pw_rows = [], [], []
    for index, sub in results:
        est_shared = io.read_loadings(
            os.path.join(sub, "identified_loadings_shared.csv"), times
        )
        pairs = [("shared", est_shared, truth["loadings"]["shared"])]
        for gid in meta["group_ids"]:
            est = io.read_loadings(os.path.join(sub, f"identified_loadings_{gid}.csv"), times)
            pairs.append((gid, est, truth["loadings"][gid]))
        for label, est, ref in pairs:
            try:
                value = rv_coefficient(est, ref)
            except MgffaError:
                value = np.nan
            rv_rows.append(
                {
                    "scenario": scenario,
                    "replicate": index,
                    "block": label,
                    "rv": value,
                    "method": "self",
                }
            )
        for gid in meta["group_ids"]:
            f_hat = _read_curves_matrix(os.path.join(sub, f"curves_{gid}.csv"), T)
            f_ref = truth["f_true"][gid]
            if f_hat.shape != f_ref.shape:
                raise ValidationError(
                    f"r{index} group {gid}: curves shape {f_hat.shape} vs truth {f_ref.shape}"
                )
            mse_rows.append(
                {
                    "scenario": scenario,
                    "replicate": index,
                    "group_id": gid,
                    "total_mse": total_mse(f_ref, f_hat),
                    "method": "self",
                }
            )
            for t, v in zip(times, pointwise_mse(f_ref, f_hat)):
                pw_rows.append(
                    {
                        "scenario": scenario,
                        "replicate": index,
                        "group_id": gid,
                        "time": t,
                        "value": v,
                        "method": "self",
                    }
                )

    os.makedirs(args.out, exist_ok=True)
    outputs = []
    for name, rows in (
        ("rv.csv", rv_rows),
        ("mse.csv", mse_rows),
        ("pointwise_mse.csv", pw_rows),
    ):
        path = os.path.join(args.out, name)
        _write_csv(pd.DataFrame(rows), path)
        outputs.append(path)

    if not args.no_figures:
        pw_frame = pd.DataFrame(pw_rows)
        per_group = {
            gid: sub.groupby("time")["value"].mean().to_numpy()
            for gid, sub in pw_frame.groupby("group_id", sort=False)
        }
        outputs.append(
            report.save_pointwise_mse(
                times, per_group, os.path.join(args.out, "pointwise_mse.png")
            )
        )
        labeled = [
            (f"r{r['replicate']}:{r['block']}", r["rv"])
            for r in rv_rows
            if np.isfinite(r["rv"])
        ]
        if labeled:
            outputs.append(
                report.save_rv_bars(labeled, os.path.join(args.out, "rv.png"))
            )
    io.write_manifest(
        args.out, "metrics", None, [args.truth, args.results], outputs, started
    )
    print(f"metrics for {len(results)} replicate(s) written to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgffa",
        description="Bayesian multi-group functional factor analysis",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate scenario datasets and truth files")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="run the Gibbs sampler on a dataset or replicate directory")
    p_fit.add_argument("data", help="dataset CSV or directory of dataset_r*.csv")
    p_fit.add_argument("--config", required=True)
    p_fit.add_argument("--out", required=True)
    p_fit.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_fit.add_argument("--threads", type=int, default=1, help="parallel replicate workers")
    p_fit.add_argument("--format", choices=("csv", "npz"), default=None)
    p_fit.set_defaults(func=cmd_fit)

    p_post = sub.add_parser("postprocess", help="identify factors and summarize draws")
    p_post.add_argument("draws", help="fit output directory")
    p_post.add_argument("--out", required=True)
    p_post.add_argument("--top", type=int, default=15, help="configurations kept in the histogram")
    p_post.add_argument("--no-figures", action="store_true")
    p_post.set_defaults(func=cmd_postprocess)

    p_met = sub.add_parser("metrics", help="score postprocessed fits against simulation truth")
    p_met.add_argument("--truth", required=True, help="simulate output directory")
    p_met.add_argument("--results", required=True, help="postprocess output directory")
    p_met.add_argument("--out", required=True)
    p_met.add_argument("--no-figures", action="store_true")
    p_met.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MgffaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
