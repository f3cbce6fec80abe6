"""File formats, config parsing, and run manifests.

Datasets travel as wide CSVs (one row per subject) with a companion grid
file; draws are one long-format CSV per parameter family, or a single npz
archive.  Floats are serialized with 17 significant digits so a write/read
round trip reproduces values exactly.
"""

import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone

import numpy as np
import pandas as pd
import yaml

from . import __version__
from .basis import TimeGrid
from .cusp import CuspHyper
from .exceptions import ValidationError
from .gibbs import PosteriorDraws, SamplerConfig
from .model import FunctionalDataset, GroupData
from .simulate import ScenarioConfig, scenario_preset

FLOAT_FMT = "%.17g"
SHARED_GROUP = -1


def _write_csv(frame: pd.DataFrame, path) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FMT, lineterminator="\n")


def read_csv(path) -> pd.DataFrame:
    """CSV reader with bit-exact float parsing; pairs with FLOAT_FMT."""
    return pd.read_csv(path, float_precision="round_trip")


def sha256_of_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def atomic_write_json(payload: dict, path) -> None:
    """Write JSON via a temp file and rename so readers never see a torn file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(out_dir, command, seed, inputs, outputs, started_at, config_digest=None):
    manifest = {
        "command": command,
        "config_digest": config_digest,
        "seed": seed,
        "started_at": started_at,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "version": __version__,
    }
    atomic_write_json(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


# ---------------------------------------------------------------------------
# grid and datasets


def write_grid(grid: TimeGrid, path) -> None:
    frame = pd.DataFrame(
        {"index": np.arange(1, len(grid) + 1), "time": grid.points}
    )
    _write_csv(frame, path)


def read_grid(path) -> TimeGrid:
    frame = read_csv(path)
    return TimeGrid(frame["time"].to_numpy(dtype=float))


def write_dataset(data: FunctionalDataset, path) -> None:
    T = len(data.grid)
    columns = ["subject_id", "group_id"] + [f"t_{j}" for j in range(1, T + 1)]
    rows = []
    for g in data.groups:
        for i in range(g.num_subjects):
            rows.append([f"{g.group_id}_{i + 1}", g.group_id, *g.Y[i]])
    _write_csv(pd.DataFrame(rows, columns=columns), path)


def read_dataset(path, grid: TimeGrid) -> FunctionalDataset:
    frame = read_csv(path)
    T = len(grid)
    value_cols = [f"t_{j}" for j in range(1, T + 1)]
    missing = [c for c in ("subject_id", "group_id", *value_cols) if c not in frame.columns]
    if missing:
        raise ValidationError(f"dataset {path} is missing columns {missing[:4]}")
    groups = []
    for gid, sub in frame.groupby("group_id", sort=False):
        groups.append(GroupData(group_id=str(gid), Y=sub[value_cols].to_numpy(dtype=float)))
    return FunctionalDataset(grid=grid, groups=groups)


# ---------------------------------------------------------------------------
# truth files


def matrix_frame(mat: np.ndarray, row_name="row", col_name="col") -> pd.DataFrame:
    rows, cols = np.indices(mat.shape)
    return pd.DataFrame(
        {
            row_name: rows.ravel() + 1,
            col_name: cols.ravel() + 1,
            "value": mat.ravel(),
        }
    )


def loadings_frame(mat: np.ndarray, times: np.ndarray) -> pd.DataFrame:
    rows, cols = np.indices(mat.shape)
    return pd.DataFrame(
        {
            "time": times[rows.ravel()],
            "component": cols.ravel() + 1,
            "value": mat.ravel(),
        }
    )


def write_truth(truth, out_dir) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit(frame, name):
        path = os.path.join(out_dir, name)
        _write_csv(frame, path)
        written.append(path)

    times = truth.grid.points
    group_ids = [f"group{s + 1}" for s in range(truth.config.num_groups)]
    T = len(truth.grid)
    columns = ["subject_id", "group_id"] + [f"t_{j}" for j in range(1, T + 1)]
    rows = []
    for s, gid in enumerate(group_ids):
        for i in range(truth.f_true[s].shape[0]):
            rows.append([f"{gid}_{i + 1}", gid, *truth.f_true[s][i]])
    emit(pd.DataFrame(rows, columns=columns), "f_true.csv")

    emit(loadings_frame(truth.loadings_time_shared, times), "loadings_shared.csv")
    for s, gid in enumerate(group_ids):
        emit(
            loadings_frame(truth.loadings_time_specific(s), times),
            f"loadings_{gid}.csv",
        )
        emit(matrix_frame(truth.Sigma_f_true[s]), f"sigma_f_{gid}.csv")
    emit(
        pd.DataFrame(
            {"group_id": group_ids, "sigma2_eps": truth.sigma2_eps_true}
        ),
        "noise.csv",
    )
    meta = {
        "name": truth.config.name,
        "L_true": truth.config.L_true,
        "K_true": list(truth.config.K_true),
        "n": list(truth.config.n),
        "T": truth.config.T,
        "num_basis": truth.config.num_basis,
        "snr": truth.config.snr,
        "replicates": truth.config.replicates,
        "seed": truth.config.seed,
        "group_ids": group_ids,
    }
    path = os.path.join(out_dir, "scenario.json")
    atomic_write_json(meta, path)
    written.append(path)
    return written


def read_loadings(path, times) -> np.ndarray:
    frame = read_csv(path)
    n_comp = int(frame["component"].max()) if len(frame) else 0
    out = np.zeros((times.size, n_comp))
    for t, c, v in frame.itertuples(index=False):
        j = int(np.argmin(np.abs(times - t)))
        out[j, int(c) - 1] = v
    return out


def read_truth(out_dir) -> dict:
    with open(os.path.join(out_dir, "scenario.json")) as fh:
        meta = json.load(fh)
    grid = TimeGrid(np.linspace(0.0, 1.0, meta["T"]))
    frame = read_csv(os.path.join(out_dir, "f_true.csv"))
    value_cols = [f"t_{j}" for j in range(1, meta["T"] + 1)]
    f_true = {}
    for gid, sub in frame.groupby("group_id", sort=False):
        f_true[str(gid)] = sub[value_cols].to_numpy(dtype=float)
    loadings = {"shared": read_loadings(os.path.join(out_dir, "loadings_shared.csv"), grid.points)}
    for gid in meta["group_ids"]:
        loadings[gid] = read_loadings(os.path.join(out_dir, f"loadings_{gid}.csv"), grid.points)
    noise = read_csv(os.path.join(out_dir, "noise.csv"))
    return {
        "meta": meta,
        "grid": grid,
        "f_true": f_true,
        "loadings": loadings,
        "sigma2_eps": dict(zip(noise["group_id"].astype(str), noise["sigma2_eps"])),
    }


# ---------------------------------------------------------------------------
# draws


def _family_frame(values, iterations, group):
    """Long format (iteration, group, row, col, value) for one (M, r, c) array."""
    M, r, c = values.shape
    iter_col = np.repeat(iterations, r * c)
    rows = np.tile(np.repeat(np.arange(1, r + 1), c), M)
    cols = np.tile(np.arange(1, c + 1), M * r)
    return pd.DataFrame(
        {
            "iteration": iter_col,
            "group": group,
            "row": rows,
            "col": cols,
            "value": values.reshape(M, r * c).ravel(),
        }
    )


def _stack_family(per_group_frames):
    return pd.concat(per_group_frames, ignore_index=True)


def draws_meta(draws: PosteriorDraws, config: SamplerConfig, num_basis: int) -> dict:
    return {
        "group_ids": draws.group_ids,
        "group_sizes": [draws.eta[s].shape[1] for s in range(draws.num_groups)],
        "L_max": draws.lam.shape[2],
        "K_max": draws.phi[0].shape[2],
        "num_basis": num_basis,
        "ridge": config.ridge,
        "iterations": config.iterations,
        "burn_in": config.burn_in,
        "thin": config.thin,
        "seed": config.seed,
        "num_draws": draws.num_draws,
    }


def write_draws(draws: PosteriorDraws, out_dir, fmt="csv", meta=None) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    S = draws.num_groups
    it = draws.iteration

    if meta is not None:
        meta_path = os.path.join(out_dir, "draws_meta.json")
        atomic_write_json(meta, meta_path)
        written.append(meta_path)

    groups_path = os.path.join(out_dir, "groups.csv")
    _write_csv(
        pd.DataFrame(
            {
                "group": np.arange(1, S + 1),
                "group_id": draws.group_ids,
                "num_subjects": [draws.eta[s].shape[1] for s in range(S)],
            }
        ),
        groups_path,
    )
    written.append(groups_path)

    config_cols = {"iteration": it, "L_star": draws.configs[:, 0]}
    for s in range(S):
        config_cols[f"K_star_{s + 1}"] = draws.configs[:, 1 + s]
    configs_path = os.path.join(out_dir, "configs.csv")
    _write_csv(pd.DataFrame(config_cols), configs_path)
    written.append(configs_path)

    if fmt == "npz":
        path = os.path.join(out_dir, "draws.npz")
        payload = {
            "iteration": it,
            "beta": draws.beta,
            "sigma2_eps": draws.sigma2_eps,
            "sigma2_beta": draws.sigma2_beta,
            "lam": draws.lam,
            "z_shared": draws.z_shared,
            "z_specific": draws.z_specific,
            "configs": draws.configs,
        }
        for s in range(S):
            payload[f"phi_{s}"] = draws.phi[s]
            payload[f"eta_{s}"] = draws.eta[s]
            payload[f"rho_{s}"] = draws.rho[s]
        np.savez(path, **payload)
        written.append(path)
        return written
    if fmt != "csv":
        raise ValidationError(f"unknown draws format '{fmt}'")

    def emit(frame, name):
        path = os.path.join(out_dir, name)
        _write_csv(frame, path)
        written.append(path)

    emit(
        _stack_family(
            [_family_frame(draws.beta[:, s, :, None], it, s + 1) for s in range(S)]
        ),
        "beta.csv",
    )
    emit(
        _stack_family(
            [_family_frame(draws.sigma2_eps[:, s, None, None], it, s + 1) for s in range(S)]
        ),
        "sigma2_eps.csv",
    )
    emit(
        _stack_family(
            [_family_frame(draws.sigma2_beta[:, s, None, None], it, s + 1) for s in range(S)]
        ),
        "sigma2_beta.csv",
    )
    emit(_family_frame(draws.lam, it, SHARED_GROUP), "loadings_shared.csv")
    emit(
        _stack_family([_family_frame(draws.phi[s], it, s + 1) for s in range(S)]),
        "loadings_specific.csv",
    )
    emit(
        _stack_family([_family_frame(draws.eta[s], it, s + 1) for s in range(S)]),
        "scores_shared.csv",
    )
    emit(
        _stack_family([_family_frame(draws.rho[s], it, s + 1) for s in range(S)]),
        "scores_specific.csv",
    )
    emit(
        _family_frame(draws.z_shared[:, None, :].astype(float), it, SHARED_GROUP),
        "indicators_shared.csv",
    )
    emit(
        _stack_family(
            [
                _family_frame(draws.z_specific[:, s][:, None, :].astype(float), it, s + 1)
                for s in range(S)
            ]
        ),
        "indicators_specific.csv",
    )
    return written


def _family_array(frame, group, shape):
    sub = frame[frame["group"] == group] if group is not None else frame
    M, r, c = shape
    out = np.zeros(shape)
    idx_iter = {v: i for i, v in enumerate(np.unique(sub["iteration"].to_numpy()))}
    i = np.fromiter((idx_iter[v] for v in sub["iteration"]), dtype=int, count=len(sub))
    out[i, sub["row"].to_numpy() - 1, sub["col"].to_numpy() - 1] = sub["value"].to_numpy()
    return out


def read_draws(out_dir) -> PosteriorDraws:
    meta_path = os.path.join(out_dir, "draws_meta.json")
    with open(meta_path) as fh:
        meta = json.load(fh)
    S = len(meta["group_ids"])
    M = meta["num_draws"]
    L_max, K_max, R = meta["L_max"], meta["K_max"], meta["num_basis"]
    sizes = meta["group_sizes"]

    npz_path = os.path.join(out_dir, "draws.npz")
    if os.path.exists(npz_path):
        with np.load(npz_path) as payload:
            return PosteriorDraws(
                iteration=payload["iteration"],
                beta=payload["beta"],
                sigma2_eps=payload["sigma2_eps"],
                sigma2_beta=payload["sigma2_beta"],
                lam=payload["lam"],
                phi=[payload[f"phi_{s}"] for s in range(S)],
                eta=[payload[f"eta_{s}"] for s in range(S)],
                rho=[payload[f"rho_{s}"] for s in range(S)],
                z_shared=payload["z_shared"],
                z_specific=payload["z_specific"],
                configs=payload["configs"],
                group_ids=list(meta["group_ids"]),
            )

    def load(name):
        return read_csv(os.path.join(out_dir, name))

    configs_frame = load("configs.csv")
    iteration = configs_frame["iteration"].to_numpy(dtype=int)
    configs = np.column_stack(
        [configs_frame["L_star"].to_numpy(dtype=int)]
        + [configs_frame[f"K_star_{s + 1}"].to_numpy(dtype=int) for s in range(S)]
    )
    beta_frame = load("beta.csv")
    beta = np.stack(
        [_family_array(beta_frame, s + 1, (M, R, 1))[:, :, 0] for s in range(S)], axis=1
    )
    eps_frame = load("sigma2_eps.csv")
    sigma2_eps = np.column_stack(
        [_family_array(eps_frame, s + 1, (M, 1, 1))[:, 0, 0] for s in range(S)]
    )
    sb_frame = load("sigma2_beta.csv")
    sigma2_beta = np.column_stack(
        [_family_array(sb_frame, s + 1, (M, 1, 1))[:, 0, 0] for s in range(S)]
    )
    lam = _family_array(load("loadings_shared.csv"), None, (M, R, L_max))
    phi_frame = load("loadings_specific.csv")
    phi = [_family_array(phi_frame, s + 1, (M, R, K_max)) for s in range(S)]
    eta_frame = load("scores_shared.csv")
    eta = [_family_array(eta_frame, s + 1, (M, sizes[s], L_max)) for s in range(S)]
    rho_frame = load("scores_specific.csv")
    rho = [_family_array(rho_frame, s + 1, (M, sizes[s], K_max)) for s in range(S)]
    z_shared = _family_array(load("indicators_shared.csv"), None, (M, 1, L_max))[
        :, 0, :
    ].astype(int)
    zs_frame = load("indicators_specific.csv")
    z_specific = np.stack(
        [
            _family_array(zs_frame, s + 1, (M, 1, K_max))[:, 0, :].astype(int)
            for s in range(S)
        ],
        axis=1,
    )
    return PosteriorDraws(
        iteration=iteration,
        beta=beta,
        sigma2_eps=sigma2_eps,
        sigma2_beta=sigma2_beta,
        lam=lam,
        phi=phi,
        eta=eta,
        rho=rho,
        z_shared=z_shared,
        z_specific=z_specific,
        configs=configs,
        group_ids=list(meta["group_ids"]),
    )


# ---------------------------------------------------------------------------
# config files


def _check_keys(section: dict, allowed, where):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ValidationError(f"unknown keys {unknown} in {where}")


def _coerce(value, kind, where):
    if value is None:
        return None
    try:
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if kind is float:
            return float(value)
        if kind is str:
            return str(value)
    except (TypeError, ValueError):
        pass
    raise ValidationError(f"{where} must be {kind.__name__}, got {value!r}")


def _load_yaml(path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ValidationError(f"cannot parse config {path}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ValidationError(f"config {path} must be a mapping")
    return raw


def _hyper_from(section: dict, where) -> CuspHyper:
    _check_keys(section, ("a1", "a2", "v0", "a_alpha", "b_alpha", "iota"), where)
    defaults = dict(a1=10.0, a2=30.0, v0=0.001, a_alpha=2.0, b_alpha=1.0, iota=1.0)
    kwargs = {
        k: _coerce(section.get(k, d), float, f"{where}.{k}") for k, d in defaults.items()
    }
    return CuspHyper(**kwargs)


def load_fit_config(path, seed_override=None):
    """Parse a fit config file into (SamplerConfig, output format)."""
    raw = _load_yaml(path)
    _check_keys(raw, ("sampler", "basis", "shrinkage", "output"), "config")
    sampler = raw.get("sampler") or {}
    basis = raw.get("basis") or {}
    shrink = raw.get("shrinkage") or {}
    output = raw.get("output") or {}
    _check_keys(
        sampler,
        (
            "iterations",
            "burn_in",
            "thin",
            "L_max",
            "K_max",
            "seed",
            "a_beta",
            "b_beta",
            "a_eps",
            "b_eps",
        ),
        "sampler",
    )
    _check_keys(basis, ("num_basis", "ridge"), "basis")
    _check_keys(shrink, ("shared", "specific"), "shrinkage")
    _check_keys(output, ("format",), "output")

    seed = seed_override if seed_override is not None else sampler.get("seed", 0)
    num_basis = basis.get("num_basis")
    config = SamplerConfig(
        iterations=_coerce(sampler.get("iterations", 20_000), int, "sampler.iterations"),
        burn_in=_coerce(sampler.get("burn_in", 10_000), int, "sampler.burn_in"),
        thin=_coerce(sampler.get("thin", 1), int, "sampler.thin"),
        L_max=_coerce(sampler.get("L_max", 10), int, "sampler.L_max"),
        K_max=_coerce(sampler.get("K_max", 10), int, "sampler.K_max"),
        hyper_shared=_hyper_from(shrink.get("shared") or {}, "shrinkage.shared"),
        hyper_specific=_hyper_from(shrink.get("specific") or {}, "shrinkage.specific"),
        a_beta=_coerce(sampler.get("a_beta", 1.0), float, "sampler.a_beta"),
        b_beta=_coerce(sampler.get("b_beta", 1.0), float, "sampler.b_beta"),
        a_eps=_coerce(sampler.get("a_eps"), float, "sampler.a_eps"),
        b_eps=_coerce(sampler.get("b_eps"), float, "sampler.b_eps"),
        num_basis=_coerce(num_basis, int, "basis.num_basis"),
        ridge=_coerce(basis.get("ridge", 1e-7), float, "basis.ridge"),
        seed=_coerce(seed, int, "sampler.seed"),
    )
    fmt = _coerce(output.get("format", "csv"), str, "output.format")
    if fmt not in ("csv", "npz"):
        raise ValidationError(f"output.format must be csv or npz, got '{fmt}'")
    return config, fmt


def load_simulate_config(path, seed_override=None) -> ScenarioConfig:
    raw = _load_yaml(path)
    _check_keys(raw, ("scenario",), "config")
    section = raw.get("scenario") or {}
    allowed = (
        "preset",
        "L_true",
        "K_true",
        "n",
        "T",
        "num_basis",
        "sigma2_beta_true",
        "snr",
        "replicates",
        "seed",
    )
    _check_keys(section, allowed, "scenario")
    replicates = _coerce(section.get("replicates", 1), int, "scenario.replicates")
    seed = seed_override if seed_override is not None else section.get("seed", 0)
    seed = _coerce(seed, int, "scenario.seed")
    snr = _coerce(section.get("snr", 2.0), float, "scenario.snr")
    preset = section.get("preset")
    if preset is not None:
        clash = [
            k
            for k in ("L_true", "K_true", "n", "T", "num_basis", "sigma2_beta_true")
            if k in section
        ]
        if clash:
            raise ValidationError(f"scenario.preset conflicts with explicit keys {clash}")
        return scenario_preset(str(preset), replicates=replicates, seed=seed, snr=snr)
    for key in ("L_true", "K_true", "n"):
        if key not in section:
            raise ValidationError(f"scenario needs '{key}' when no preset is given")
    sigma2_beta = section.get("sigma2_beta_true")
    return ScenarioConfig(
        L_true=_coerce(section["L_true"], int, "scenario.L_true"),
        K_true=tuple(_coerce(v, int, "scenario.K_true") for v in section["K_true"]),
        n=tuple(_coerce(v, int, "scenario.n") for v in section["n"]),
        T=_coerce(section.get("T", 60), int, "scenario.T"),
        num_basis=_coerce(section.get("num_basis", 30), int, "scenario.num_basis"),
        sigma2_beta_true=None
        if sigma2_beta is None
        else tuple(_coerce(v, float, "scenario.sigma2_beta_true") for v in sigma2_beta),
        snr=snr,
        replicates=replicates,
        seed=seed,
        name=str(preset) if preset else "custom",
    )
