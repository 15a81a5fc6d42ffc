"""Command-line front end: synthesis, sub-sampling, grid analysis,
estimation, benchmarking, and certificate verification.

One JSON config file (``"schema": 1``) drives every subcommand; command
line flags override config fields, and the environment variable
``SPECTRAL_SDP_SEED`` overrides the config seed (precedence:
flag > env > config > default). Grid rates and delays are exact strings
("num/den"), complex numbers are {re, im} objects, and sample files are
CSV with header ``index,re,im``. All writes are atomic (temp + rename).

Exit codes: 0 success, 1 usage/input error, 2 numerical non-convergence,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import (
    InvalidInputError,
    InvariantViolationError,
    NumericalError,
    SpectralSDPError,
)
from .localization import EstimationConfig, estimate, verify_certificate
from .multirate import (
    Grid,
    MultirateSystem,
    align_measurements,
    common_grid,
    complexity_report,
)
from .sampling import SelectionPattern, compute_partition, random_selection
from .signal_model import (
    RNG_ALGORITHM,
    NoiseSpec,
    SpikeSpectrum,
    add_noise,
    synthesize_grid,
    synthesize_uniform,
)
from .solver import ProblemSpec, solve
from .trigops import poly_eval

SCHEMA_VERSION = 1
ENV_SEED = "SPECTRAL_SDP_SEED"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOCONV = 2
EXIT_INVARIANT = 3


# ---------- small IO helpers ----------

def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_samples_csv(path: str, y: np.ndarray) -> None:
    lines = ["index,re,im"]
    lines += [f"{k},{float(v.real)!r},{float(v.imag)!r}" for k, v in enumerate(y)]
    _atomic_write(path, "\n".join(lines) + "\n")


def _read_samples_csv(path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "index,re,im":
            raise InvalidInputError(f"{path}: expected header 'index,re,im'")
        values = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise InvalidInputError(f"{path}:{lineno}: expected 3 fields")
            values.append(complex(float(parts[1]), float(parts[2])))
    return np.array(values, dtype=complex)


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: invalid JSON ({exc})") from exc


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _complex_list(values) -> list:
    return [{"re": float(v.real), "im": float(v.imag)} for v in values]


def _parse_complex_list(items) -> np.ndarray:
    return np.array([complex(d["re"], d["im"]) for d in items], dtype=complex)


# ---------- config handling ----------

def _get(cfg: dict, path: str, default=None):
    node = cfg
    for key in path.split("."):
        if not isinstance(node, dict) or key not in node:
            return default
        node = node[key]
    return node


def _load_config(args) -> dict:
    cfg = _load_json(args.config)
    if cfg.get("schema") != SCHEMA_VERSION:
        raise InvalidInputError(
            f"{args.config}: unsupported schema {cfg.get('schema')!r}, "
            f"expected {SCHEMA_VERSION}"
        )
    if cfg.get("scenario") not in ("full", "selection", "random-selection", "multirate"):
        raise InvalidInputError(f"unknown scenario {cfg.get('scenario')!r}")
    return cfg


def _resolve_seed(cfg: dict, args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get(ENV_SEED)
    if env is not None:
        return int(env)
    return int(cfg.get("seed", 0))


def _resolve_sigma(cfg: dict, args) -> float:
    if getattr(args, "sigma", None) is not None:
        return float(args.sigma)
    return float(_get(cfg, "noise.sigma", 0.0))


def _out_paths(cfg: dict, args):
    out_dir = getattr(args, "out_dir", None) or _get(cfg, "output.dir", ".")
    prefix = getattr(args, "prefix", None) or _get(cfg, "output.prefix", "run")
    os.makedirs(out_dir, exist_ok=True)
    return out_dir, prefix


def _signal_from_config(cfg: dict) -> SpikeSpectrum:
    sig = cfg.get("signal")
    if not sig:
        raise InvalidInputError("config has no 'signal' section")
    freqs = np.asarray(sig["freqs_hz"], dtype=float)
    amps = _parse_complex_list(sig["amps"])
    return SpikeSpectrum(freqs=freqs, amps=amps)


def _system_from_config(cfg: dict) -> MultirateSystem:
    grids_cfg = _get(cfg, "sampling.grids")
    if not grids_cfg:
        raise InvalidInputError("multirate scenario needs sampling.grids")
    for j, g in enumerate(grids_cfg):
        for key in ("f", "gamma"):
            if isinstance(g.get(key), float):
                raise InvalidInputError(
                    f"grid {j}: '{key}' must be an exact rational string like "
                    f"'3/2', got float {g[key]!r}; alignment is an exact "
                    "integrality condition"
                )
    grids = tuple(
        Grid(f=Fraction(g["f"]), gamma=Fraction(g.get("gamma", 0)), n=int(g["n"]))
        for g in grids_cfg
    )
    return MultirateSystem(grids=grids)


def _rate_from_config(cfg: dict) -> float:
    f = _get(cfg, "sampling.f")
    if f is None:
        raise InvalidInputError("config needs sampling.f")
    return float(Fraction(f)) if isinstance(f, str) else float(f)


def _child_seed(seed: int, key: int) -> int:
    child = np.random.SeedSequence(seed, spawn_key=(key,))
    return int(child.generate_state(1, dtype=np.uint64)[0])


def _pattern_from_config(cfg: dict, seed: int) -> SelectionPattern:
    scenario = cfg["scenario"]
    n = int(_get(cfg, "sampling.n", 0))
    if scenario == "full":
        return SelectionPattern(indices=tuple(range(n)), ambient=n)
    if scenario == "selection":
        idx = _get(cfg, "sampling.indices")
        if not idx:
            raise InvalidInputError("selection scenario needs sampling.indices")
        return SelectionPattern(indices=tuple(int(i) for i in idx), ambient=n)
    if scenario == "random-selection":
        p = _get(cfg, "sampling.keep_prob")
        if p is None:
            raise InvalidInputError("random-selection scenario needs sampling.keep_prob")
        return random_selection(n, float(p), _child_seed(seed, 0))
    raise InvalidInputError(f"no selection pattern for scenario {scenario!r}")


def _estimation_config(cfg: dict, args, sigma: float) -> EstimationConfig:
    tau = getattr(args, "tau", None)
    if tau is None:
        tau = _get(cfg, "solver.tau")
    gamma = float(_get(cfg, "solver.gamma", 1.5))
    if sigma > 0 and tau is None and gamma <= 1:
        raise InvalidInputError("solver.gamma must exceed 1 for the noise rule")
    return EstimationConfig(
        tau=None if tau is None else float(tau),
        sigma=sigma if sigma > 0 else None,
        gamma=gamma,
        rho=float(_get(cfg, "solver.rho", 1.0)),
        max_iter=int(getattr(args, "max_iter", None) or _get(cfg, "solver.max_iter", 20000)),
        tol_primal=float(_get(cfg, "solver.tol_primal", 1e-7)),
        tol_dual=float(_get(cfg, "solver.tol_dual", 1e-7)),
        grid_points=_get(cfg, "localization.grid_points"),
        peak_tol=float(_get(cfg, "localization.peak_tol", 1e-3)),
    )


# ---------- synthesis ----------

def _synthesize(cfg: dict, seed: int, sigma: float):
    """Returns (per-grid sample vectors, truth dict). Non-multirate
    scenarios produce one raw uniform vector."""
    spec = _signal_from_config(cfg)
    scenario = cfg["scenario"]
    truth = {
        "schema": SCHEMA_VERSION,
        "scenario": scenario,
        "freqs_hz": [float(x) for x in spec.freqs],
        "amps": _complex_list(spec.amps),
        "sigma": sigma,
        "seed": seed,
        "rng": RNG_ALGORITHM,
    }
    if scenario == "multirate":
        system = _system_from_config(cfg)
        outs = []
        for j, grid in enumerate(system.grids):
            y = synthesize_grid(spec, grid)
            y = add_noise(y, NoiseSpec(sigma=sigma, seed=_child_seed(seed, 1 + j)))
            outs.append(y)
        truth["grids"] = [
            {"f": str(g.f), "gamma": str(g.gamma), "n": g.n} for g in system.grids
        ]
        return outs, truth
    f = _rate_from_config(cfg)
    n = int(_get(cfg, "sampling.n", 0))
    y = synthesize_uniform(spec, f, n)
    y = add_noise(y, NoiseSpec(sigma=sigma, seed=_child_seed(seed, 1)))
    truth["f_hz"] = f
    truth["n"] = n
    return [y], truth


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    seed = _resolve_seed(cfg, args)
    sigma = _resolve_sigma(cfg, args)
    out_dir, prefix = _out_paths(cfg, args)
    vectors, truth = _synthesize(cfg, seed, sigma)
    if cfg["scenario"] == "multirate":
        for j, y in enumerate(vectors):
            _write_samples_csv(os.path.join(out_dir, f"{prefix}_grid{j}.csv"), y)
    else:
        _write_samples_csv(os.path.join(out_dir, f"{prefix}_samples.csv"), vectors[0])
    truth["config_sha256"] = _config_hash(cfg)
    _atomic_write(os.path.join(out_dir, f"{prefix}_truth.json"), _dump_json(truth))
    print(f"wrote {len(vectors)} sample file(s) under {out_dir}/{prefix}_*")
    return EXIT_OK


# ---------- sub-sampling ----------

def _load_inputs(cfg: dict, args):
    out_dir, prefix = _out_paths(cfg, args)
    in_prefix = getattr(args, "input_prefix", None) or prefix
    if cfg["scenario"] == "multirate":
        system = _system_from_config(cfg)
        paths = [
            os.path.join(out_dir, f"{in_prefix}_grid{j}.csv")
            for j in range(system.p)
        ]
    else:
        paths = [os.path.join(out_dir, f"{in_prefix}_samples.csv")]
    missing = [p for p in paths if not os.path.exists(p)]
    if missing:
        raise InvalidInputError(f"missing input file(s): {', '.join(missing)}")
    return [_read_samples_csv(p) for p in paths]


def cmd_sample(args) -> int:
    cfg = _load_config(args)
    seed = _resolve_seed(cfg, args)
    out_dir, prefix = _out_paths(cfg, args)
    vectors = _load_inputs(cfg, args)
    meta = {"schema": SCHEMA_VERSION, "scenario": cfg["scenario"], "seed": seed}
    if cfg["scenario"] == "multirate":
        system = _system_from_config(cfg)
        cg = common_grid(system)
        y = align_measurements(system, vectors, cg)
        meta["ambient_n"] = cg.n0
        meta["indices"] = list(cg.observation_set.indices)
        meta["f0"] = str(cg.f0)
        meta["gamma0"] = str(cg.gamma0)
    else:
        pattern = _pattern_from_config(cfg, seed)
        raw = vectors[0]
        if raw.size != pattern.ambient:
            raise InvalidInputError(
                f"raw file has {raw.size} samples, config expects {pattern.ambient}"
            )
        y = raw[list(pattern.indices)]
        meta["ambient_n"] = pattern.ambient
        meta["indices"] = list(pattern.indices)
    _write_samples_csv(os.path.join(out_dir, f"{prefix}_net.csv"), y)
    _atomic_write(os.path.join(out_dir, f"{prefix}_pattern.json"), _dump_json(meta))
    print(f"net observation vector of length {y.size} written")
    return EXIT_OK


# ---------- grid report ----------

def cmd_check_grid(args) -> int:
    cfg = _load_config(args)
    if cfg["scenario"] != "multirate":
        raise InvalidInputError("check-grid needs a multirate scenario config")
    system = _system_from_config(cfg)
    cg = common_grid(system)
    rep = complexity_report(system, cg)
    out = {
        "schema": SCHEMA_VERSION,
        "exists": True,
        "f0": str(cg.f0),
        "gamma0": str(cg.gamma0),
        "n0": cg.n0,
        "expansions": [{"l": l, "a": a} for l, a in cg.expansions],
        "indices": list(cg.observation_set.indices),
        "m": rep.m,
        "m_tilde": rep.m_tilde,
        "ratio": str(rep.ratio),
        "ratio_float": float(rep.ratio),
    }
    print(
        f"common grid: f0={out['f0']} Hz, gamma0={out['gamma0']}, n0={cg.n0}, "
        f"m={rep.m}, m_tilde={rep.m_tilde}, ratio={rep.ratio}"
    )
    out_dir, prefix = _out_paths(cfg, args)
    _atomic_write(os.path.join(out_dir, f"{prefix}_grid_report.json"), _dump_json(out))
    return EXIT_OK


# ---------- estimation ----------

def _dual_poly_tsv(q: np.ndarray, points: int = 4096) -> str:
    nu = np.arange(points) / points
    mags = np.abs(poly_eval(q, nu))
    lines = ["nu\tabs_q"] + [
        f"{float(x)!r}\t{float(v)!r}" for x, v in zip(nu, mags)
    ]
    return "\n".join(lines) + "\n"


def cmd_estimate(args) -> int:
    cfg = _load_config(args)
    seed = _resolve_seed(cfg, args)
    sigma = _resolve_sigma(cfg, args)
    out_dir, prefix = _out_paths(cfg, args)
    vectors = _load_inputs(cfg, args)
    est_cfg = _estimation_config(cfg, args, sigma)

    if cfg["scenario"] == "multirate":
        system = _system_from_config(cfg)
        result = estimate(vectors, system, config=est_cfg)
        frame_f = result.diagnostics.solve_rate_hz
    else:
        pattern = _pattern_from_config(cfg, seed)
        raw = vectors[0]
        if raw.size != pattern.ambient:
            raise InvalidInputError(
                f"raw file has {raw.size} samples, config expects {pattern.ambient}"
            )
        y = raw[list(pattern.indices)]
        f = _rate_from_config(cfg)
        result = estimate(y, pattern, f, config=est_cfg)
        frame_f = f

    diag = result.diagnostics
    record = {
        "schema": SCHEMA_VERSION,
        "estimate": {
            "freqs_hz": [float(x) for x in result.freqs],
            "amps": _complex_list(result.amps),
        },
        "dual_poly": _complex_list(result.dual_poly),
        "diagnostics": {
            "iterations": diag.iterations,
            "residuals": {
                "primal": diag.final_residuals[0],
                "constraint": diag.final_residuals[1],
                "dual": diag.final_residuals[2],
            },
            "sup_norm": diag.sup_norm,
            "peak_moduli": [float(x) for x in diag.peak_moduli],
            "amplitude_residual": diag.residual,
            "converged": diag.converged,
            "reliable": diag.reliable,
            "tau": diag.tau,
            "dual_objective": diag.dual_objective,
        },
        "frame": {
            "solve_rate_hz": diag.solve_rate_hz,
            "time_shift_s": diag.time_shift_s,
        },
        "provenance": {
            "config_sha256": _config_hash(cfg),
            "seed": seed,
            "package": f"spectral-sdp {__version__}",
            "rng": RNG_ALGORITHM,
        },
    }
    _atomic_write(os.path.join(out_dir, f"{prefix}_result.json"), _dump_json(record))
    _atomic_write(
        os.path.join(out_dir, f"{prefix}_dualpoly.tsv"), _dual_poly_tsv(result.dual_poly)
    )
    spike_lines = ["freq_hz\tre\tim\tmodulus"]
    for x, a, mod in zip(result.freqs, result.amps, diag.peak_moduli):
        spike_lines.append(f"{float(x)!r}\t{a.real!r}\t{a.imag!r}\t{float(mod)!r}")
    _atomic_write(
        os.path.join(out_dir, f"{prefix}_spikes.tsv"), "\n".join(spike_lines) + "\n"
    )
    print(
        f"estimated {result.freqs.size} spike(s); converged={diag.converged}, "
        f"sup|Q|={diag.sup_norm:.6f}"
    )
    if not diag.converged:
        print("solver did not converge; record flagged unreliable", file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


# ---------- benchmark ----------

def _bench_one(task) -> tuple:
    m, n, iters, seed = task
    rng = np.random.default_rng(seed)
    others = rng.choice(np.arange(1, n), size=m - 1, replace=False)
    pattern = SelectionPattern(
        indices=tuple(sorted([0] + [int(i) for i in others])), ambient=n
    )
    y = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    spec = ProblemSpec(
        y=y,
        partition=compute_partition(pattern),
        max_iter=iters,
        tol_primal=0.0,
        tol_dual=0.0,
    )
    start = time.perf_counter()
    report = solve(spec)
    total = time.perf_counter() - start
    return m, 1e6 * total / report.iterations, 1e3 * total, report.iterations


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    seed = _resolve_seed(cfg, args)
    out_dir, prefix = _out_paths(cfg, args)
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else [50, 100, 200]
    iters = args.iters
    tasks = [(m, 2 * m, iters, seed + i) for i, m in enumerate(sizes)]
    if args.jobs > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_one, tasks))
    else:
        rows = [_bench_one(t) for t in tasks]
    lines = ["m,iter_time_us,total_ms,iterations"]
    for m, it_us, tot_ms, nit in rows:
        lines.append(f"{m},{it_us:.3f},{tot_ms:.3f},{nit}")
        print(f"m={m}: {it_us:.1f} us/iteration over {nit} iterations")
    _atomic_write(os.path.join(out_dir, f"{prefix}_bench.csv"), "\n".join(lines) + "\n")
    return EXIT_OK


# ---------- certificate verification ----------

def cmd_verify(args) -> int:
    record = _load_json(args.result)
    truth = _load_json(args.truth)
    q = _parse_complex_list(record["dual_poly"])
    f_solve = float(record["frame"]["solve_rate_hz"])
    shift = float(record["frame"]["time_shift_s"])
    freqs = np.asarray(truth["freqs_hz"], dtype=float)
    amps = _parse_complex_list(truth["amps"])
    surrogate = SpikeSpectrum(
        freqs=freqs, amps=amps * np.exp(-2j * np.pi * freqs * shift)
    )
    report = verify_certificate(q, surrogate, f_solve, tol=args.tol)
    print(
        f"certificate: {report.is_certificate} "
        f"(max interpolation error {report.interp_errors.max():.3e}, "
        f"strict margin {report.strict_margin:.3e})"
    )
    return EXIT_OK


# ---------- entry point ----------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectral-sdp",
        description="Sparse line spectral estimation from partial measurements",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", dest="out_dir", default=None)
        p.add_argument("--prefix", default=None)

    p = sub.add_parser("synth", help="synthesize sample files from a spike model")
    add_common(p)
    p.add_argument("--sigma", type=float, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="reduce raw acquisitions to the net observation vector")
    add_common(p)
    p.add_argument("--input-prefix", dest="input_prefix", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("check-grid", help="analyze a multirate system's common grid")
    add_common(p)
    p.set_defaults(func=cmd_check_grid)

    p = sub.add_parser("estimate", help="run the full estimation pipeline")
    add_common(p)
    p.add_argument("--input-prefix", dest="input_prefix", default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="time solver iterations across problem sizes")
    add_common(p)
    p.add_argument("--sizes", default=None, help="comma-separated m values")
    p.add_argument("--iters", type=int, default=300)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="check a result's dual certificate against ground truth")
    p.add_argument("--result", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--tol", type=float, default=1e-3)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolationError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except (InvalidInputError, FileNotFoundError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SpectralSDPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
