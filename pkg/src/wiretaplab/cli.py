"""Batch front door: config-driven experiment runs with reproducible outputs.

One invocation reads a JSON config naming a command and its parameters, runs
the corresponding module operation, and writes results plus a run manifest
into the output directory.  Identical (config, seed) pairs produce
byte-identical result files; only the manifest's wall time differs between
reruns.  All failures exit through a single-line machine-parsable error on
stderr: "E_<CODE>: message", with exit status 2 for validation problems, 3
for numerical failures, and 4 for output I/O.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .concentration import BoundSpec, evaluate_bound
from .covering import (
    band_decomposition,
    build_covering_instance,
    covering_experiment,
    gentle_measurement_check,
    plus_mass_check,
    primed_average_distance,
)
from .divergences import cq_hypothesis_testing_divergence, smooth_max_divergence
from .ensembles import CqState, load_channel, load_ensemble, bob_marginals
from .errors import (
    DegenerateEpsilon,
    ExpurgationFailed,
    NoFiniteValue,
    WiretapLabError,
)
from .rates import AchievabilityInputs, achievable_rate, code_params_for_targets, converse_bound
from .spectral import classical_spectral_estimate, tensor_power_rates
from .wiretap import expurgate

__all__ = ["main"]

COMMANDS = ("divergence", "rate", "simulate", "covering", "chernoff", "spectral")

EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_NUMERIC_FAILURES = (DegenerateEpsilon, ExpurgationFailed, NoFiniteValue, np.linalg.LinAlgError)


class _CliError(Exception):
    def __init__(self, code, message, status):
        super().__init__(message)
        self.code = code
        self.status = status


def _fail(code, message, status):
    raise _CliError(code, message, status)


def _fmt_float(x):
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return format(float(x), ".17g")


def _to_json(obj, indent=0):
    # Hand-rolled so floats carry 17 significant digits; json.dumps offers
    # no hook for float formatting.
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}{json.dumps(str(k))}: {_to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        items = [f"{inner}{_to_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _csv_text(config_hash, header, rows):
    lines = [f"# config_sha256: {config_hash}", ",".join(header)]
    lines.extend(",".join(_csv_cell(c) for c in row) for row in rows)
    return "\n".join(lines) + "\n"


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="wiretaplab",
        description="Run a wiretaplab experiment described by a JSON config.",
    )
    parser.add_argument("--config", required=True, help="path to the experiment config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override the config's seed")
    parser.add_argument("--out", default=None, help="output directory (default: config's, else .)")
    parser.add_argument("--trials", type=int, default=None, help="override the config's trial count")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="advisory worker count; results are identical at any value",
    )
    return parser.parse_args(argv)


def _load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as ex:
        _fail("E_INPUT", f"cannot read config {path}: {ex}", EXIT_VALIDATION)
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as ex:
        _fail("E_INPUT", f"config {path} is not valid JSON: {ex}", EXIT_VALIDATION)
    if not isinstance(doc, dict):
        _fail("E_CONFIG", "config root must be a JSON object", EXIT_VALIDATION)
    return doc, hashlib.sha256(raw).hexdigest()


def _resolve_seed(doc, args):
    if args.seed is not None:
        seed = args.seed
    else:
        if "seed" not in doc:
            _fail("E_CONFIG", "config must carry an explicit seed", EXIT_VALIDATION)
        seed = doc["seed"]
    if not (isinstance(seed, int) and 0 <= seed < 2**64):
        _fail("E_CONFIG", f"seed must be a 64-bit unsigned integer, got {seed!r}", EXIT_VALIDATION)
    return seed


def _section(doc, key):
    sec = doc.get(key, {})
    if not isinstance(sec, dict):
        _fail("E_CONFIG", f"config section {key!r} must be an object", EXIT_VALIDATION)
    return sec


def _param(params, name, kind, default=None, required=False):
    if name not in params:
        if required:
            _fail("E_CONFIG", f"missing required param {name!r}", EXIT_VALIDATION)
        return default
    v = params[name]
    if kind is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    if not isinstance(v, kind) or isinstance(v, bool):
        _fail("E_CONFIG", f"param {name!r} must be {kind.__name__}, got {v!r}", EXIT_VALIDATION)
    return v


def _input_path(inputs, name):
    if name not in inputs:
        _fail("E_CONFIG", f"missing required input {name!r}", EXIT_VALIDATION)
    path = inputs[name]
    if not isinstance(path, str):
        _fail("E_CONFIG", f"input {name!r} must be a path string", EXIT_VALIDATION)
    if not os.path.isfile(path):
        _fail("E_INPUT", f"input file does not exist: {path}", EXIT_VALIDATION)
    return path


def _run_divergence(inputs, params, seed, config_hash):
    e = load_ensemble(_input_path(inputs, "cq"))
    eps = _param(params, "eps", float, required=True)
    kind = _param(params, "kind", str, default="hypothesis_testing")
    base = {
        "command": "divergence",
        "config_sha256": config_hash,
        "seed": seed,
        "kind": kind,
        "eps": eps,
    }
    if kind == "hypothesis_testing":
        res = cq_hypothesis_testing_divergence(CqState(e), eps)
        wit = res.witness
        base.update(
            value_bits=res.value_bits,
            infinite=res.infinite,
            achieved_alpha=wit.achieved_alpha,
            achieved_beta=wit.achieved_beta,
        )
    elif kind == "smooth_max":
        step = _param(params, "grid_step_bits", float, default=1e-3)
        res = smooth_max_divergence(e, eps, grid_step_bits=step)
        base.update(
            value_bits=res.value_bits,
            infinite=res.infinite,
            threshold_bits=res.threshold_bits,
            tail_value=res.tail_value,
        )
    else:
        _fail("E_CONFIG", f"unknown divergence kind {kind!r}", EXIT_VALIDATION)
    return {"divergence_result.json": _to_json(base) + "\n"}


def _run_rate(inputs, params, seed, config_hash):
    eps_prime = _param(params, "eps_prime", float)
    delta_hat = _param(params, "delta_hat", float)
    derived = None
    if eps_prime is None or delta_hat is None:
        eps_t = _param(params, "eps_target", float, required=True)
        delta_t = _param(params, "delta_target", float, required=True)
        eps_prime, delta_hat = code_params_for_targets(eps_t, delta_t)
        derived = {"eps_target": eps_t, "delta_target": delta_t}
    inp = AchievabilityInputs(
        i0_bits=_param(params, "i0_bits", float, required=True),
        iinf_bits=_param(params, "iinf_bits", float, required=True),
        eps_prime=eps_prime,
        delta_hat=delta_hat,
        dim_e=_param(params, "dim_e", int, required=True),
    )
    pair = achievable_rate(inp)
    out = {
        "command": "rate",
        "config_sha256": config_hash,
        "seed": seed,
        "i0_bits": inp.i0_bits,
        "iinf_bits": inp.iinf_bits,
        "eps_prime": eps_prime,
        "delta_hat": delta_hat,
        "dim_e": inp.dim_e,
        "r_bits": pair.r_bits,
        "r_tilde_bits": pair.r_tilde_bits,
        "c_const": pair.c_const,
        "error_budget": pair.error_budget,
        "leakage_budget": pair.leakage_budget,
        "converse_bits": converse_bound(inp.i0_bits, inp.iinf_bits),
    }
    if derived is not None:
        out["targets"] = derived
    return {"rate_result.json": _to_json(out) + "\n"}


def _run_simulate(inputs, params, seed, config_hash):
    ch = load_channel(_input_path(inputs, "channel"))
    eps = _param(params, "eps", float, required=True)
    n_messages = _param(params, "n_messages", int, required=True)
    band_size = _param(params, "band_size", int, required=True)
    trials = _param(params, "trials", int, required=True)

    bob = bob_marginals(ch)
    div = cq_hypothesis_testing_divergence(CqState(bob), eps)
    book, perf, report = expurgate(bob, ch, div.witness, n_messages, band_size, trials, seed)

    result = {
        "command": "simulate",
        "config_sha256": config_hash,
        "seed": seed,
        "eps": eps,
        "n_messages": n_messages,
        "band_size": band_size,
        "trials": trials,
        "i0_bits": div.value_bits,
        "mean_error": report.mean_error,
        "mean_leakage": report.mean_leakage,
        "qualifying_fraction": report.qualifying_fraction,
        "selected_seed": book.seed,
        "selected_error": perf.avg_error,
        "selected_leakage": perf.leakage,
    }
    rows = [
        (report.seeds[i], n_messages, band_size, report.errors[i], report.leakages[i],
         int(report.qualified[i]))
        for i in range(report.trials)
    ]
    header = ("seed", "n_messages", "band_size", "avg_error", "leakage", "qualified_flag")
    return {
        "simulate_result.json": _to_json(result) + "\n",
        "simulate_series.csv": _csv_text(config_hash, header, rows),
    }


def _run_covering(inputs, params, seed, config_hash):
    e = load_ensemble(_input_path(inputs, "ensemble"))
    i_param = _param(params, "i_param", float, required=True)
    m_samples = _param(params, "m_samples", int, required=True)
    trials = _param(params, "trials", int, required=True)
    eps_floor = _param(params, "eps_floor", float)

    ci = build_covering_instance(e, i_param, eps_floor=eps_floor)
    bands = band_decomposition(ci.rho, ci.eps)
    rep = covering_experiment(ci, m_samples, trials, seed)
    mass = plus_mass_check(ci, bands)
    primed_value, primed_bound, primed_holds = primed_average_distance(ci)
    gentle = gentle_measurement_check(e, bands.pi_star)

    out = {
        "command": "covering",
        "config_sha256": config_hash,
        "seed": seed,
        "i_param": ci.i_param,
        "eps": ci.eps,
        "eps_floored": ci.floored,
        "k_bands": bands.k_bands,
        "nonempty_bands": list(bands.nonempty),
        "tail_mass": bands.tail_mass,
        "m_samples": rep.m_samples,
        "trials": rep.trials,
        "threshold": rep.threshold,
        "empirical_fail": rep.empirical_fail,
        "bound_rhs": rep.bound_rhs,
        "deviations": list(rep.deviations),
        "plus_mass": {"value": mass.mass, "bound": mass.bound, "holds": mass.holds},
        "primed_distance": {
            "value": primed_value,
            "bound": primed_bound,
            "holds": primed_holds,
        },
        "gentle": {"value": gentle.lhs, "bound": gentle.rhs, "holds": gentle.holds},
    }
    return {"covering_result.json": _to_json(out) + "\n"}


def _run_chernoff(inputs, params, seed, config_hash):
    specs = params.get("bounds")
    if not isinstance(specs, list) or not specs:
        _fail("E_CONFIG", "chernoff needs a nonempty 'bounds' list", EXIT_VALIDATION)
    evaluated = []
    for item in specs:
        if not (isinstance(item, dict) and isinstance(item.get("name"), str)):
            _fail("E_CONFIG", f"each bound needs a string 'name', got {item!r}", EXIT_VALIDATION)
        bound_params = item.get("params", {})
        if not isinstance(bound_params, dict):
            _fail("E_CONFIG", "bound 'params' must be an object", EXIT_VALIDATION)
        value = evaluate_bound(BoundSpec(item["name"], bound_params))
        evaluated.append({"name": item["name"], "params": bound_params, "value": value})
    out = {
        "command": "chernoff",
        "config_sha256": config_hash,
        "seed": seed,
        "bounds": evaluated,
    }
    return {"chernoff_result.json": _to_json(out) + "\n"}


def _run_spectral(inputs, params, seed, config_hash):
    mode = _param(params, "mode", str, required=True)
    if mode == "tensor":
        e = load_ensemble(_input_path(inputs, "ensemble"))
        n_max = _param(params, "n_max", int, required=True)
        eps = _param(params, "eps", float, required=True)
        series = tensor_power_rates(CqState(e), n_max, eps)
        rows = list(zip(series.n_values, series.rate_lower, series.rate_upper))
        out = {
            "command": "spectral",
            "config_sha256": config_hash,
            "seed": seed,
            "mode": mode,
            "eps": series.eps,
            "n_values": list(series.n_values),
            "rate_lower": list(series.rate_lower),
            "rate_upper": list(series.rate_upper),
        }
        return {
            "spectral_result.json": _to_json(out) + "\n",
            "spectral_series.csv": _csv_text(
                config_hash, ("n", "rate_lower", "rate_upper"), rows
            ),
        }
    if mode == "classical":
        joint = params.get("joint")
        if not isinstance(joint, list):
            _fail("E_CONFIG", "classical mode needs a 'joint' probability table", EXIT_VALIDATION)
        n_samples = _param(params, "n_samples", int, required=True)
        eps = _param(params, "eps", float, required=True)
        lo, hi = classical_spectral_estimate(np.array(joint, dtype=float), n_samples, eps, seed)
        out = {
            "command": "spectral",
            "config_sha256": config_hash,
            "seed": seed,
            "mode": mode,
            "eps": eps,
            "n_samples": n_samples,
            "inf_rate": lo,
            "sup_rate": hi,
        }
        return {"spectral_result.json": _to_json(out) + "\n"}
    _fail("E_CONFIG", f"unknown spectral mode {mode!r}", EXIT_VALIDATION)


_RUNNERS = {
    "divergence": _run_divergence,
    "rate": _run_rate,
    "simulate": _run_simulate,
    "covering": _run_covering,
    "chernoff": _run_chernoff,
    "spectral": _run_spectral,
}


def _write_outputs(out_dir, files):
    written = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        for name, text in files.items():
            final = os.path.join(out_dir, name)
            tmp = final + ".tmp"
            with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, final)
            written.append(final)
    except OSError as ex:
        for path in written:
            try:
                os.unlink(path)
            except OSError:
                pass
        _fail("E_OUTPUT", f"cannot write results: {ex}", EXIT_IO)
    return written


def main(argv=None):
    args = _parse_args(argv)
    try:
        doc, config_hash = _load_config(args.config)
        command = doc.get("command")
        if command not in COMMANDS:
            _fail(
                "E_CONFIG",
                f"command must be one of {', '.join(COMMANDS)}; got {command!r}",
                EXIT_VALIDATION,
            )
        seed = _resolve_seed(doc, args)
        inputs = _section(doc, "inputs")
        params = dict(_section(doc, "params"))
        if args.trials is not None:
            params["trials"] = args.trials
        out_dir = args.out if args.out is not None else doc.get("output", ".")
        if not isinstance(out_dir, str):
            _fail("E_CONFIG", "output must be a path string", EXIT_VALIDATION)

        start = time.perf_counter()
        try:
            files = _RUNNERS[command](inputs, params, seed, config_hash)
        except _NUMERIC_FAILURES as ex:
            _fail("E_NUMERIC", str(ex), EXIT_NUMERIC)
        except WiretapLabError as ex:
            _fail("E_PARAMS", str(ex), EXIT_VALIDATION)
        wall = time.perf_counter() - start

        manifest = {
            "config_path": args.config,
            "config_sha256": config_hash,
            "command": command,
            "seed": seed,
            "threads": args.threads,
            "versions": {
                "wiretaplab": __version__,
                "numpy": np.__version__,
                "python": sys.version.split()[0],
                "kernel_backend": BACKEND,
            },
            "wall_time_s": wall,
            "results": sorted(files),
        }
        files["run_manifest.json"] = _to_json(manifest) + "\n"
        _write_outputs(out_dir, files)
    except _CliError as ex:
        message = " ".join(str(ex).split())
        print(f"{ex.code}: {message}", file=sys.stderr)
        return ex.status
    return 0


if __name__ == "__main__":
    sys.exit(main())
