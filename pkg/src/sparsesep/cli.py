"""Command-line front end: mix, separate, evaluate, sweep, dict-learn, dict-render.

Every verb resolves its settings into a manifest JSON written next to its
outputs; re-running a verb with --config <manifest> reproduces the outputs
byte for byte. Exit codes: 0 success, 2 validation error, 3 solver failure.
The environment variable SPARSESEP_SEED overrides any configured seed.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import synth
from .adaptive import AdaptiveBssConfig, adaptive_separate
from .core import SolverError
from .dictlearn import learn_dictionary
from .fastica import fastica
from .fileio import (read_csv_matrix, read_json, read_pgm, write_csv_matrix,
                     write_manifest, write_pgm)
from .mca import BssProblem, McaProblem, mca_decompose, mmca_separate, gmca_separate, \
    fast_gmca_separate
from .metrics import evaluate
from .mixing import MixtureSet, center, mix, random_mixing_matrix
from .patches import PatchGrid, extract_patches
from .sparse_coding import ThresholdSchedule
from .transforms import Dictionary, dct_basis, dwt_basis, overcomplete_dct, render_mosaic

_METHODS = ("fastica", "mca", "mmca", "gmca", "fgmca", "ksvd-mmca", "bksvd-mmca")


def _resolve_seed(seed: int) -> int:
    env = os.environ.get("SPARSESEP_SEED")
    return int(env) if env else seed


def _load_source(spec: str, seed: int) -> np.ndarray:
    """A source is either a file (PGM image, CSV signal) or a generator spec."""
    path = Path(spec)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    if path.suffix.lower() == ".csv":
        arr = read_csv_matrix(path)
        return arr[0] if arr.shape[0] == 1 else arr
    return synth.generate(spec, seed)


def _save_signal(path_base: Path, signal: np.ndarray, image_shape) -> str:
    """PGM for in-range images, CSV otherwise (PGM would clip and quantize)."""
    signal = np.asarray(signal, dtype=float)
    if image_shape is not None and signal.min() > -0.5 and signal.max() < 255.5:
        out = path_base.with_suffix(".pgm")
        write_pgm(out, signal.reshape(image_shape))
    else:
        out = path_base.with_suffix(".csv")
        write_csv_matrix(out, np.atleast_2d(signal.ravel()))
    return out.name


def _build_dictionary(spec: dict, n: int) -> Dictionary:
    kind = spec.get("kind", "dct")
    if kind == "dct":
        return dct_basis(n)
    if kind == "dwt":
        return dwt_basis(n, spec.get("wavelet", "haar"), spec.get("levels"))
    if kind == "odct":
        return overcomplete_dct(n, int(spec.get("atoms", 4 * n)))
    raise ValueError(f"unknown dictionary kind {kind!r}")


def _merge_config(args: argparse.Namespace, keys: list[str]) -> dict:
    """Config-file values provide defaults; explicit CLI flags override them."""
    cfg = dict(read_json(args.config)) if getattr(args, "config", None) else {}
    for key in keys:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    return cfg


# ---------------------------------------------------------------- mix

def cmd_mix(args) -> int:
    cfg = _merge_config(args, ["sources", "channels", "psnr", "seed", "out_dir"])
    cfg.setdefault("seed", 0)
    cfg.setdefault("psnr", None)
    cfg["seed"] = _resolve_seed(cfg["seed"])
    if not cfg.get("sources"):
        raise ValueError("no sources given")
    if not cfg.get("out_dir"):
        raise ValueError("no output directory given")
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)

    raw = [_load_source(s, cfg["seed"] + i) for i, s in enumerate(cfg["sources"])]
    shapes = {a.shape for a in raw}
    if len(shapes) != 1:
        raise ValueError(f"sources disagree on shape: {sorted(shapes)}")
    image_shape = raw[0].shape if raw[0].ndim == 2 else None
    S = np.vstack([a.ravel() for a in raw])
    n = S.shape[0]
    m = int(cfg.get("channels", n))
    if m < n:
        raise ValueError(f"need at least as many channels as sources, got {m} < {n}")
    A = random_mixing_matrix(m, n, cfg["seed"])
    mixture = mix(S, A, psnr_db=cfg["psnr"], seed=cfg["seed"] + 1)

    files = {"mixtures": [], "sources": []}
    for i in range(m):
        files["mixtures"].append(_save_signal(out / f"mixture_{i:02d}", mixture.data[i],
                                              image_shape))
    for j in range(n):
        files["sources"].append(_save_signal(out / f"source_{j:02d}", S[j], image_shape))
    write_csv_matrix(out / "A.csv", A)
    manifest = dict(cfg)
    manifest.update({"verb": "mix", "noise_sigma": mixture.noise_sigma,
                     "image_shape": list(image_shape) if image_shape else None,
                     "files": files, "mixing_matrix": "A.csv"})
    write_manifest(out / "mix_manifest.json", manifest)
    print(f"wrote {m} mixtures of {n} sources to {out}")
    return 0


# ---------------------------------------------------------------- separate

def _load_matrix_rows(paths: list[str], base: Path):
    rows, image_shape = [], None
    for p in paths:
        path = Path(p) if Path(p).is_absolute() else base / p
        if path.suffix.lower() == ".pgm":
            img = read_pgm(path)
            image_shape = img.shape
            rows.append(img.ravel())
        else:
            arr = read_csv_matrix(path)
            rows.extend(arr)
    return np.vstack(rows), image_shape


def cmd_separate(args) -> int:
    cfg = dict(read_json(args.config))
    if args.method is not None:
        cfg["method"] = args.method
    if args.out_dir is not None:
        cfg["out_dir"] = args.out_dir
    method = cfg.get("method")
    if method not in _METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {_METHODS}")
    cfg.setdefault("seed", 0)
    cfg["seed"] = _resolve_seed(cfg["seed"])
    out = Path(cfg.get("out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    base = Path(args.config).parent

    X, image_shape = _load_matrix_rows(cfg["mixtures"], base)
    if cfg.get("image_shape"):
        image_shape = tuple(cfg["image_shape"])
    mixture = MixtureSet(X, cfg.get("noise_sigma", 0.0))
    if cfg.get("center", True):
        mixture, _ = center(mixture)
    n = int(cfg.get("n_sources", X.shape[0]))
    side = image_shape[0] if image_shape else X.shape[1]

    t0 = time.time()
    dictionaries_out = []
    if method == "mca":
        if X.shape[0] != 1:
            raise ValueError("mca takes a single mixture channel")
        dicts = [_build_dictionary(d, side) for d in cfg.get("dicts", [{"kind": "dct"},
                                                                       {"kind": "dwt"}])]
        y = mixture.data[0].reshape(image_shape) if image_shape else mixture.data[0]
        coeffs = [d.atoms.T @ y if y.ndim == 1 else d.atoms.T @ y @ d.atoms for d in dicts]
        cmax = max(float(np.max(np.abs(c))) for c in coeffs)
        schedule = ThresholdSchedule.linear(int(cfg.get("l_max", 100)),
                                            cmax / int(cfg.get("l_max", 100)))
        res = mca_decompose(McaProblem(y, dicts, schedule))
        S_hat = np.vstack([c.ravel() for c in res.components])
        A_hat = np.ones((1, len(dicts)))
        trace = np.column_stack([res.thresholds, res.residuals, res.residuals ** 2])
    elif method == "fastica":
        r = fastica(mixture, n, nonlinearity=cfg.get("nonlinearity", "tanh"),
                    seed=cfg["seed"], max_iter=int(cfg.get("max_iter", 200)),
                    tol=float(cfg.get("tol", 1e-6)))
        S_hat, A_hat, trace = r.S_hat, r.A_hat, r.trace
    elif method in ("ksvd-mmca", "bksvd-mmca"):
        if image_shape is None:
            raise ValueError(f"{method} expects image mixtures")
        acfg = AdaptiveBssConfig(
            n_sources=n, image_shape=image_shape, patch=int(cfg.get("patch", 8)),
            stride=int(cfg.get("stride", 4)), n_atoms=int(cfg.get("atoms", 256)),
            method="ksvd" if method == "ksvd-mmca" else "sac_bksvd",
            sparsity=int(cfg.get("sparsity", 2)), block_size=int(cfg.get("block_size", 3)),
            l_max=int(cfg.get("l_max", 50)), seed=cfg["seed"])
        r, dictionaries = adaptive_separate(mixture, acfg)
        S_hat, A_hat, trace = r.S_hat, r.A_hat, r.trace
        for j, d in enumerate(dictionaries):
            write_csv_matrix(out / f"dictionary_{j:02d}.csv", d.atoms)
            write_pgm(out / f"dictionary_{j:02d}.pgm", render_mosaic(d))
            dictionaries_out.append(f"dictionary_{j:02d}.csv")
    else:
        dict_specs = cfg.get("dicts", [{"kind": "dwt"}])
        dicts = [_build_dictionary(d, side) for d in dict_specs]
        problem = BssProblem(mixture, n, dicts, image_shape=image_shape,
                             l_max=int(cfg.get("l_max", 100)), seed=cfg["seed"])
        if method == "mmca":
            r = mmca_separate(problem)
        elif method == "gmca":
            r = gmca_separate(problem)
        else:
            r = fast_gmca_separate(problem, threshold=cfg.get("threshold", "hard"))
        S_hat, A_hat, trace = r.S_hat, r.A_hat, r.trace
    elapsed = time.time() - t0

    files = {"sources": [], "dictionaries": dictionaries_out}
    for j in range(S_hat.shape[0]):
        files["sources"].append(_save_signal(out / f"s_hat_{j:02d}", S_hat[j], image_shape))
    write_csv_matrix(out / "A_hat.csv", A_hat)
    write_csv_matrix(out / "trace.csv", trace)

    if cfg.get("truth_sources"):
        S_true, _ = _load_matrix_rows(cfg["truth_sources"], base)
        A_true = read_csv_matrix(Path(cfg["truth_mixing"]) if Path(cfg.get("truth_mixing", "")).is_absolute()
                                 else base / cfg["truth_mixing"]) if cfg.get("truth_mixing") else None
        report = evaluate(S_hat, S_true, A_true, A_hat if A_true is not None else None)
        rows = [[j, report.rho[j], report.mean_abs_rho, report.c_a,
                 report.mse[j], report.psnr_db[j]] for j in range(len(report.rho))]
        write_csv_matrix(out / "metrics.csv", np.array(rows))
        files["metrics"] = "metrics.csv"

    manifest = dict(cfg)
    manifest.update({"verb": "separate", "files": files, "elapsed_s": round(elapsed, 3)})
    write_manifest(out / "separate_manifest.json", manifest)
    print(f"{method}: separated {S_hat.shape[0]} sources in {elapsed:.2f}s -> {out}")
    return 0


# ---------------------------------------------------------------- evaluate

def cmd_evaluate(args) -> int:
    estimates, _ = _load_matrix_rows(args.estimates, Path("."))
    truth, _ = _load_matrix_rows(args.truth, Path("."))
    if estimates.shape != truth.shape:
        raise ValueError(f"shape mismatch: estimates {estimates.shape} vs truth {truth.shape}")
    A = read_csv_matrix(args.mixing) if args.mixing else None
    A_hat = read_csv_matrix(args.mixing_estimate) if args.mixing_estimate else None
    report = evaluate(estimates, truth, A, A_hat)
    rows = [[j, report.rho[j], report.mean_abs_rho, report.c_a,
             report.mse[j], report.psnr_db[j]] for j in range(len(report.rho))]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv_matrix(out, np.array(rows))
    print(f"mean |rho| {report.mean_abs_rho:.4f}  C_A {report.c_a:.4f} -> {out}")
    return 0


# ---------------------------------------------------------------- sweep

def _psnr_cell(spec, solver, psnr_db, S, A, image_shape, seed):
    X = mix(S, A, psnr_db=psnr_db, seed=seed + 1)
    Xc, _ = center(X)
    n = S.shape[0]
    side = image_shape[0]
    method = solver["method"]
    if method == "fastica":
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            r = fastica(Xc, n, seed=seed)
    else:
        dicts = [_build_dictionary(d, side) for d in solver.get("dicts", [{"kind": "dwt"}])]
        problem = BssProblem(Xc, n, dicts, image_shape=image_shape,
                             l_max=int(solver.get("l_max", 100)), seed=seed)
        if method == "mmca":
            r = mmca_separate(problem)
        elif method == "gmca":
            r = gmca_separate(problem)
        elif method == "fgmca":
            r = fast_gmca_separate(problem)
        else:
            raise ValueError(f"sweep does not support method {method!r}")
    return evaluate(r.S_hat, S, A, r.A_hat)


def _grid_cell(Y0, s, k, n_atoms, iterations):
    mse_k = learn_dictionary(Y0, "ksvd", n_atoms=n_atoms, sparsity=s * k,
                             iterations=iterations).objective ** 2 / Y0.size
    mse_b = learn_dictionary(Y0, "sac_bksvd", n_atoms=n_atoms, sparsity=k, block_size=s,
                             iterations=iterations).objective ** 2 / Y0.size
    return mse_k, mse_b


def cmd_sweep(args) -> int:
    spec = dict(read_json(args.spec))
    if args.out_dir is not None:
        spec["out_dir"] = args.out_dir
    spec.setdefault("seed", 0)
    spec["seed"] = _resolve_seed(spec["seed"])
    out = Path(spec.get("out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    jobs = max(1, args.jobs)
    mode = spec.get("mode", "psnr")
    rows = []

    if mode == "psnr":
        solvers = spec.get("solvers", [])
        sweep = spec.get("psnr_sweep", [])
        if not solvers:
            raise ValueError("empty solver list")
        if len(set(sweep)) != len(sweep) or not sweep:
            raise ValueError("psnr sweep values must be distinct and nonempty")
        raw = [_load_source(s, spec["seed"] + i) for i, s in enumerate(spec["sources"])]
        image_shape = raw[0].shape
        S = np.vstack([a.ravel() for a in raw])
        A = random_mixing_matrix(int(spec["channels"]), S.shape[0], spec["seed"])
        cells = [(si, pi) for si in range(len(solvers)) for pi in range(len(sweep))]

        def run_cell(cell):
            si, pi = cell
            try:
                rep = _psnr_cell(spec, solvers[si], sweep[pi], S, A, image_shape,
                                 spec["seed"])
                return [(si, sweep[pi], j, rep.rho[j], rep.mean_abs_rho, rep.c_a,
                         rep.mse[j], rep.psnr_db[j], 0) for j in range(S.shape[0])]
            except Exception:
                return [(si, sweep[pi], j, np.nan, np.nan, np.nan, np.nan, np.nan, 1)
                        for j in range(S.shape[0])]

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(run_cell, cells))
        else:
            results = [run_cell(c) for c in cells]
        for chunk in results:
            rows.extend(chunk)
    elif mode == "grid":
        img = _load_source(spec["image"], spec["seed"])
        grid = PatchGrid(int(spec.get("patch", 8)), int(spec.get("patch", 8)),
                         int(spec.get("stride", 4)), *img.shape)
        Y = extract_patches(img, grid)
        Y0 = Y - Y.mean(axis=0)
        cells = [(s, k) for s in spec.get("s_values", [1, 2, 3])
                 for k in spec.get("k_values", [1, 2, 3])]

        def run_cell(cell):
            s, k = cell
            try:
                mse_k, mse_b = _grid_cell(Y0, s, k, int(spec.get("atoms", 96)),
                                          int(spec.get("iterations", 100)))
                return (s, k, mse_k, mse_b, 0)
            except Exception:
                return (s, k, np.nan, np.nan, 1)

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(run_cell, cells))
        else:
            rows = [run_cell(c) for c in cells]
    else:
        raise ValueError(f"unknown sweep mode {mode!r}")

    write_csv_matrix(out / "sweep_metrics.csv", np.array(rows, dtype=float))
    manifest = dict(spec)
    manifest.update({"verb": "sweep", "files": {"metrics": "sweep_metrics.csv"}})
    write_manifest(out / "sweep_manifest.json", manifest)
    print(f"sweep {mode}: {len(rows)} rows -> {out / 'sweep_metrics.csv'}")
    return 0


# ---------------------------------------------------------------- dict-learn / dict-render

def cmd_dict_learn(args) -> int:
    cfg = _merge_config(args, ["image", "method", "atoms", "patch", "stride", "sparsity",
                               "block_size", "iterations", "seed", "out_dir"])
    cfg.setdefault("seed", 0)
    cfg["seed"] = _resolve_seed(cfg["seed"])
    for key, default in (("method", "ksvd"), ("atoms", 96), ("patch", 8), ("stride", 4),
                         ("sparsity", 2), ("block_size", 3), ("iterations", 50)):
        cfg.setdefault(key, default)
    out = Path(cfg.get("out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    img = _load_source(cfg["image"], cfg["seed"])
    grid = PatchGrid(cfg["patch"], cfg["patch"], cfg["stride"], *img.shape)
    Y = extract_patches(img, grid)
    Y0 = Y - Y.mean(axis=0)
    method = "sac_bksvd" if cfg["method"] in ("sac_bksvd", "bksvd") else "ksvd"
    state = learn_dictionary(Y0, method, n_atoms=cfg["atoms"], sparsity=cfg["sparsity"],
                             block_size=cfg["block_size"], iterations=cfg["iterations"])
    write_csv_matrix(out / "dictionary.csv", state.dictionary.atoms)
    write_pgm(out / "dictionary.pgm", render_mosaic(state.dictionary))
    write_csv_matrix(out / "objective_trace.csv", state.trace)
    blocks = state.dictionary.block_structure
    sidecar = {"method": method, "blocks": [list(b) for b in blocks.blocks],
               "max_block_size": blocks.max_block_size,
               "final_objective": state.objective}
    write_manifest(out / "dictionary_blocks.json", sidecar)
    manifest = dict(cfg)
    manifest.update({"verb": "dict-learn",
                     "files": {"dictionary": "dictionary.csv", "mosaic": "dictionary.pgm",
                               "blocks": "dictionary_blocks.json",
                               "trace": "objective_trace.csv"}})
    write_manifest(out / "dict_learn_manifest.json", manifest)
    print(f"{method}: final ||Y - DX||_F {state.objective:.4f} -> {out}")
    return 0


def cmd_dict_render(args) -> int:
    atoms = read_csv_matrix(args.dict)
    atoms = atoms / np.linalg.norm(atoms, axis=0)
    d = Dictionary(atoms, "learned")
    write_pgm(args.out, render_mosaic(d))
    print(f"rendered {d.n_atoms} atoms -> {args.out}")
    return 0


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsesep",
        description="Blind source separation by sparsity and morphological diversity")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("mix", help="mix sources into noisy channels")
    p.add_argument("--sources", nargs="+", help="PGM/CSV files or generator specs "
                                                "like texture:64")
    p.add_argument("--channels", type=int)
    p.add_argument("--psnr", type=float, help="noise level in dB (omit for noiseless)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--config", help="manifest/config JSON supplying defaults")
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("separate", help="run one separation method")
    p.add_argument("--method", choices=_METHODS)
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("evaluate", help="align estimates against ground truth")
    p.add_argument("--estimates", nargs="+", required=True)
    p.add_argument("--truth", nargs="+", required=True)
    p.add_argument("--mixing", help="true mixing matrix CSV")
    p.add_argument("--mixing-estimate", help="estimated mixing matrix CSV")
    p.add_argument("--out", default="metrics.csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run a noise sweep or an (s, k) grid")
    p.add_argument("--spec", required=True, help="experiment spec JSON")
    p.add_argument("--out-dir")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dict-learn", help="learn a patch dictionary from an image")
    p.add_argument("--image")
    p.add_argument("--method", choices=("ksvd", "sac_bksvd", "bksvd"))
    p.add_argument("--atoms", type=int)
    p.add_argument("--patch", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--sparsity", type=int)
    p.add_argument("--block-size", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--config")
    p.set_defaults(func=cmd_dict_learn)

    p = sub.add_parser("dict-render", help="tile dictionary atoms into a PGM mosaic")
    p.add_argument("--dict", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dict_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
