"""Batch front end: one command per run, JSON config in, deterministic
report out.

Reports are plain dicts with a fixed field order, serialized with a
fixed layout, so identical config and cache state give byte-identical
output.  Timing goes to stderr, never into the report.  Exit codes:
0 success, 1 config problem, 2 caps too small to certify, 3 validation
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time

from .affinegroups import AffineGroup, affine_sphere_module
from .curvefield import (
    Coordinate,
    CycCache,
    TorsionDivisor,
    WeierstrassCurve,
    divisors_of,
)
from .eatheory import (
    EATheory,
    coefficient_ring,
    completion,
    local_cohomology,
    serre_pairing,
    sphere_cohomology,
    sphere_homology,
)
from .errors import CapTooSmall, EllTError
from .exactcore import Q, qtext
from .sheafside import DEFAULT_OPENS, OpenSet, glue_check, roundtrip, sections


class ConfigError(Exception):
    """The configuration (file, flags, or parameters) is unusable."""


# ----------------------------------------------------------------------
# config parsing


def _check_keys(obj: dict, allowed, where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}")


def _rational(value, where: str) -> Q:
    """Exact rational from an int or a 'p/q' string; floats are refused."""
    if type(value) is int:
        return Q(value)
    if isinstance(value, str):
        try:
            return Q(value)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"{where} is not a rational 'p/q' string: {value!r}")
    raise ConfigError(f"{where} must be an integer or a 'p/q' string, got {value!r}")


def _integer(value, where: str) -> int:
    if type(value) is not int:
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    return value


def _weight_dict(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be an object of {{class: count}}")
    out = {}
    for key, count in value.items():
        try:
            s = int(key)
        except (TypeError, ValueError):
            raise ConfigError(f"{where} has a non-integer class label {key!r}")
        if s < 1:
            raise ConfigError(f"{where} classes are labelled by integers >= 1")
        out[s] = _integer(count, f"{where}[{key}]")
    return out


def _class_list(value, where: str) -> list[int]:
    if not isinstance(value, list):
        raise ConfigError(f"{where} must be a list of class orders")
    return [_integer(s, where) for s in value]


class JobConfig:
    """Validated run description: curve, coordinate, command parameters."""

    __slots__ = ("command", "curve", "scale", "params", "cache_path",
                 "output_path", "fmt")

    def __init__(self, command: str, raw: dict):
        _check_keys(raw, ("curve", "coordinate", "command", "params",
                          "cache_path", "output_path", "format"), "config")
        if "command" in raw and raw["command"] != command:
            raise ConfigError(
                f"config names command {raw['command']!r} but {command!r} was invoked"
            )
        self.command = command

        self.curve = None
        if "curve" in raw:
            block = raw["curve"]
            if not isinstance(block, dict):
                raise ConfigError("curve must be an object with keys a, b")
            _check_keys(block, ("a", "b"), "curve")
            if "a" not in block or "b" not in block:
                raise ConfigError("curve needs both a and b")
            self.curve = (_rational(block["a"], "curve.a"),
                          _rational(block["b"], "curve.b"))

        self.scale = Q(1)
        if "coordinate" in raw:
            block = raw["coordinate"]
            if not isinstance(block, dict):
                raise ConfigError("coordinate must be an object")
            _check_keys(block, ("form", "scale"), "coordinate")
            form = block.get("form", "x/y")
            if form != "x/y":
                raise ConfigError(f"only the x/y coordinate form is supported, got {form!r}")
            if "scale" in block:
                self.scale = _rational(block["scale"], "coordinate.scale")
                if self.scale == 0:
                    raise ConfigError("coordinate.scale must be nonzero")

        params = raw.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("params must be an object")
        self.params = params

        self.cache_path = raw.get("cache_path")
        self.output_path = raw.get("output_path")
        for field in ("cache_path", "output_path"):
            value = getattr(self, field)
            if value is not None and not isinstance(value, str):
                raise ConfigError(f"{field} must be a string path")

        self.fmt = raw.get("format", "json")
        if self.fmt not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.fmt!r}")
        if self.fmt == "csv" and command not in ("dims", "coeff"):
            raise ConfigError("csv output is limited to the dimension tables "
                              "(dims, coeff)")

    def require_curve(self) -> tuple:
        if self.curve is None:
            raise ConfigError(f"command {self.command} needs a curve")
        return self.curve


def load_config(command: str, path: str) -> JobConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return JobConfig(command, raw)


# ----------------------------------------------------------------------
# cache file handling


def _cache_identity(cache: CycCache) -> dict:
    curve = cache.curve
    return {
        "curve": {"a": qtext(curve.a), "b": qtext(curve.b)},
        "scale": qtext(cache.coordinate.scale),
    }


def _read_cache_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read cache {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cache {path} is not valid JSON: {exc}")
    if not isinstance(payload, dict) or "psi" not in payload:
        raise ConfigError(f"cache {path} is not a division-polynomial cache")
    return payload


def _load_cache_into(cache: CycCache, path: str | None) -> None:
    """Seed the in-memory cache from disk, verifying every entry.

    A file for a different curve or coordinate scale is ignored rather
    than rejected: one path may serve a batch over several curves.
    """
    if path is None or not os.path.exists(path):
        return
    payload = _read_cache_file(path)
    identity = _cache_identity(cache)
    if payload.get("curve") != identity["curve"] or payload.get("scale") != identity["scale"]:
        return
    cache.load_psi_payload(payload["psi"])


def _make_cache(config: JobConfig) -> CycCache:
    a, b = config.require_curve()
    curve = WeierstrassCurve(a, b)
    return CycCache(curve, Coordinate(curve, scale=config.scale))


def _make_theory(config: JobConfig, cache_path: str | None) -> EATheory:
    cache = _make_cache(config)
    _load_cache_into(cache, cache_path)
    return EATheory(cache)


# ----------------------------------------------------------------------
# command handlers


def _echo(config: JobConfig, theory_or_cache) -> dict:
    cache = getattr(theory_or_cache, "cache", theory_or_cache)
    curve = cache.curve
    return {
        "command": config.command,
        "curve": {"a": qtext(curve.a), "b": qtext(curve.b)},
        "coordinate": cache.coordinate.describe(),
    }


def _run_dims(config: JobConfig, cache_path) -> dict:
    _check_keys(config.params, ("W", "variance", "caps"), "params")
    if "W" not in config.params:
        raise ConfigError("dims needs params.W")
    weights = _weight_dict(config.params["W"], "params.W")
    variance = config.params.get("variance", "homology")
    if variance not in ("homology", "cohomology"):
        raise ConfigError("params.variance must be homology or cohomology")
    caps = None
    if "caps" in config.params:
        caps = _weight_dict(config.params["caps"], "params.caps")
    theory = _make_theory(config, cache_path)
    run = sphere_homology if variance == "homology" else sphere_cohomology
    hom = run(theory, weights, caps=caps)
    return {
        **_echo(config, theory),
        "variance": variance,
        "W": {str(s): a for s, a in sorted(weights.items()) if a},
        "h0": hom.h0,
        "h1": hom.h1,
        "h0_basis": [f.text() for f in hom.h0_basis()],
        "certified_caps": {str(s): c for s, c in sorted(hom.window.caps.items())},
    }


def _run_basis(config: JobConfig, cache_path) -> dict:
    _check_keys(config.params, ("divisor",), "params")
    if "divisor" not in config.params:
        raise ConfigError("basis needs params.divisor")
    coeffs = _weight_dict(config.params["divisor"], "params.divisor")
    cache = _make_cache(config)
    _load_cache_into(cache, cache_path)
    basis = cache.rr_basis(TorsionDivisor(coeffs))
    return {
        **_echo(config, cache),
        "divisor": {str(s): n for s, n in sorted(coeffs.items()) if n},
        "dim": len(basis),
        "basis": [f.text() for f in basis],
    }


def _run_coeff(config: JobConfig, cache_path) -> dict:
    _check_keys(config.params, ("d_min", "d_max", "caps"), "params")
    d_min = _integer(config.params.get("d_min", -4), "params.d_min")
    d_max = _integer(config.params.get("d_max", 4), "params.d_max")
    caps = None
    if "caps" in config.params:
        caps = _weight_dict(config.params["caps"], "params.caps")
    theory = _make_theory(config, cache_path)
    rows = coefficient_ring(theory, d_min, d_max, caps=caps)
    return {**_echo(config, theory), "d_min": d_min, "d_max": d_max, "rows": rows}


def _run_divpoly(config: JobConfig, cache_path) -> dict:
    _check_keys(config.params, ("n",), "params")
    if "n" not in config.params:
        raise ConfigError("divpoly needs params.n")
    n = _integer(config.params["n"], "params.n")
    if n < 1:
        raise ConfigError("params.n must be >= 1")
    cache = _make_cache(config)
    _load_cache_into(cache, cache_path)
    psi = cache.psi(n)
    factors = {s: cache.t(s) for s in divisors_of(n) if s > 1}
    product = None
    for f in factors.values():
        product = f if product is None else product * f
    recombined = product * n if product is not None else psi
    if recombined != psi:
        raise EllTError(f"psi_{n} does not match its cyclotomic factorization")
    return {
        **_echo(config, cache),
        "n": n,
        "psi": psi.text(),
        "ord_e": -(n * n - 1),
        "scalar": qtext(Q(n)),
        "t_factors": {str(s): f.text() for s, f in sorted(factors.items())},
        "factorization_ok": True,
    }


def _run_kmodel(config: JobConfig, cache_path) -> dict:
    _check_keys(config.params, ("group", "W", "sign", "products_upto"), "params")
    kind = config.params.get("group")
    if kind not in ("multiplicative", "additive"):
        raise ConfigError("params.group must be multiplicative or additive")
    group = AffineGroup(kind)
    report = {"command": config.command, "group": kind}
    if "W" in config.params:
        weights = _weight_dict(config.params["W"], "params.W")
        if any(a < 1 for a in weights.values()):
            raise ConfigError("params.W multiplicities must be >= 1; dual "
                              "spheres are selected with params.sign = -1")
        sign = config.params.get("sign", 1)
        if sign not in (1, -1):
            raise ConfigError("params.sign must be 1 or -1")
        module = affine_sphere_module(group, weights, sign)
        report["W"] = {str(s): a for s, a in sorted(weights.items()) if a}
        report["sign"] = sign
        report["rank"] = module.rank
        report["odd_dim"] = module.odd_dim
        report["generator"] = module.generator.text()
        report["euler"] = group.euler_class(weights).text()
    upto = config.params.get("products_upto")
    if upto is not None:
        upto = _integer(upto, "params.products_upto")
        if upto < 1:
            raise ConfigError("params.products_upto must be >= 1")
        for n in range(1, upto + 1):
            product = None
            for d in divisors_of(n):
                p = group.phi(d)
                product = p if product is None else product * p
            if not (product - group.n_series(n)).is_zero():
                raise EllTError(f"phi factors fail to assemble [{n}]")
        report["phi"] = {str(s): group.phi(s).text() for s in range(1, upto + 1)}
        report["products_ok_upto"] = upto
    return report


def _run_completion(config: JobConfig, cache_path) -> dict:
    _check_keys(config.params, ("k",), "params")
    if "k" not in config.params:
        raise ConfigError("completion needs params.k")
    k = _integer(config.params["k"], "params.k")
    theory = _make_theory(config, cache_path)
    module = completion(theory, k)
    action = module.action_matrix()
    power, order = action, 1
    while order < k and any(e for row in power.entries for e in row):
        power = power * action
        order += 1
    return {
        **_echo(config, theory),
        "k": k,
        "dim": k,
        "action": [[qtext(e) for e in row] for row in action.entries],
        "nilpotency_order": order if not any(e for row in power.entries for e in row) else None,
    }


def _run_localcoh(config: JobConfig, cache_path) -> dict:
    _check_keys(config.params, ("pi", "a"), "params")
    if "pi" not in config.params:
        raise ConfigError("localcoh needs params.pi")
    pi = _class_list(config.params["pi"], "params.pi")
    a = _integer(config.params.get("a", 1), "params.a")
    theory = _make_theory(config, cache_path)
    return {**_echo(config, theory), **local_cohomology(theory, pi, a).report()}


def _run_serre(config: JobConfig, cache_path) -> dict:
    _check_keys(config.params, ("divisor", "caps"), "params")
    if "divisor" not in config.params:
        raise ConfigError("serre needs params.divisor")
    coeffs = _weight_dict(config.params["divisor"], "params.divisor")
    caps = None
    if "caps" in config.params:
        caps = _weight_dict(config.params["caps"], "params.caps")
    theory = _make_theory(config, cache_path)
    pairing = serre_pairing(theory, coeffs, caps=caps)
    return {
        **_echo(config, theory),
        "divisor": {str(s): n for s, n in sorted(coeffs.items()) if n},
        "dim": pairing.dim,
        "rank": pairing.rank,
        "nondegenerate": pairing.nondegenerate,
        "matrix": [[qtext(e) for e in row] for row in pairing.matrix.entries],
    }


def _run_sections(config: JobConfig, cache_path) -> dict:
    _check_keys(config.params, ("divisor", "pi", "cap"), "params")
    for key in ("divisor", "pi"):
        if key not in config.params:
            raise ConfigError(f"sections needs params.{key}")
    coeffs = _weight_dict(config.params["divisor"], "params.divisor")
    pi = _class_list(config.params["pi"], "params.pi")
    cap = _integer(config.params.get("cap", 0), "params.cap")
    cache = _make_cache(config)
    _load_cache_into(cache, cache_path)
    window = sections(cache, coeffs, OpenSet(pi), cap)
    return {**_echo(config, cache), **window.report()}


def _run_glue(config: JobConfig, cache_path) -> dict:
    _check_keys(config.params, ("divisor", "left", "right", "cap"), "params")
    for key in ("divisor", "left", "right"):
        if key not in config.params:
            raise ConfigError(f"glue needs params.{key}")
    coeffs = _weight_dict(config.params["divisor"], "params.divisor")
    left = OpenSet(_class_list(config.params["left"], "params.left"))
    right = OpenSet(_class_list(config.params["right"], "params.right"))
    cap = _integer(config.params.get("cap", 0), "params.cap")
    cache = _make_cache(config)
    _load_cache_into(cache, cache_path)
    return {**_echo(config, cache), **glue_check(cache, coeffs, left, right, cap)}


def _run_roundtrip(config: JobConfig, cache_path) -> dict:
    _check_keys(config.params, ("W", "opens", "caps"), "params")
    if "W" not in config.params:
        raise ConfigError("roundtrip needs params.W")
    weights = _weight_dict(config.params["W"], "params.W")
    opens = DEFAULT_OPENS
    if "opens" in config.params:
        raw = config.params["opens"]
        if not isinstance(raw, list):
            raise ConfigError("params.opens must be a list of class lists")
        opens = tuple(OpenSet(_class_list(p, "params.opens")) for p in raw)
    caps = (0, 1, 2, 3)
    if "caps" in config.params:
        caps = tuple(_class_list(config.params["caps"], "params.caps"))
    theory = _make_theory(config, cache_path)
    return {**_echo(config, theory), **roundtrip(theory, weights, opens, caps)}


def _run_cache_admin(config: JobConfig, cache_path) -> dict:
    _check_keys(config.params, ("action", "upto"), "params")
    action = config.params.get("action")
    if action not in ("warm", "verify", "clear"):
        raise ConfigError("params.action must be warm, verify, or clear")
    if cache_path is None:
        raise ConfigError("cache admin needs a cache path (--cache, ELLT_CACHE, "
                          "or cache_path in the config)")
    report = {"command": config.command, "action": action, "path": cache_path}

    if action == "clear":
        removed = os.path.exists(cache_path)
        if removed:
            try:
                os.remove(cache_path)
            except OSError as exc:
                raise ConfigError(f"cannot clear cache {cache_path}: {exc}")
        report["removed"] = removed
        return report

    cache = _make_cache(config)
    if action == "warm":
        upto = _integer(config.params.get("upto", 6), "params.upto")
        if upto < 1:
            raise ConfigError("params.upto must be >= 1")
        cache.warm(upto)
        payload = {**_cache_identity(cache), "upto": upto,
                   "psi": cache.psi_cache_payload()}
        _write_output(cache_path, _json_bytes(payload))
        report["upto"] = upto
        report["entries"] = len(payload["psi"])
        return report

    payload = _read_cache_file(cache_path)
    identity = _cache_identity(cache)
    if payload.get("curve") != identity["curve"] or payload.get("scale") != identity["scale"]:
        raise EllTError(
            f"cache {cache_path} was built for curve {payload.get('curve')} "
            f"at scale {payload.get('scale')}, not the configured one"
        )
    cache.load_psi_payload(payload["psi"])
    report["entries"] = len(payload["psi"])
    report["ok"] = True
    return report


_HANDLERS = {
    "dims": _run_dims,
    "basis": _run_basis,
    "coeff": _run_coeff,
    "divpoly": _run_divpoly,
    "kmodel": _run_kmodel,
    "completion": _run_completion,
    "localcoh": _run_localcoh,
    "serre": _run_serre,
    "sections": _run_sections,
    "glue": _run_glue,
    "roundtrip": _run_roundtrip,
    "cache": _run_cache_admin,
}


# ----------------------------------------------------------------------
# output


def _json_bytes(report: dict) -> bytes:
    return (json.dumps(report, indent=2) + "\n").encode("utf-8")


def _csv_bytes(command: str, report: dict) -> bytes:
    import csv
    import io

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    if command == "coeff":
        writer.writerow(["degree", "dim", "witness"])
        for row in report["rows"]:
            writer.writerow([row["degree"], row["dim"], row["witness"]])
    else:
        writer.writerow(["h0", "h1"])
        writer.writerow([report["h0"], report["h1"]])
    return out.getvalue().encode("utf-8")


def _write_output(path: str, data: bytes) -> None:
    """Atomic write: a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ellt-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def run(config: JobConfig, cache_path: str | None) -> dict:
    return _HANDLERS[config.command](config, cache_path)


# ----------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellt",
        description="exact windows on the elliptic model, one command per run",
        exit_on_error=False,
    )
    parser.add_argument("command", choices=sorted(_HANDLERS))
    parser.add_argument("--config", required=True, help="path to a JSON job config")
    parser.add_argument("--out", help="report destination (default: stdout)")
    parser.add_argument("--cache", help="division-polynomial cache file")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except argparse.ArgumentError as exc:
            raise ConfigError(str(exc))
        except SystemExit as exc:
            # argparse still exits directly for --help and a few error
            # paths; success stays 0, every failure becomes a config error
            return 0 if not exc.code else 1
        config = load_config(args.command, args.config)
        cache_path = args.cache or os.environ.get("ELLT_CACHE") or config.cache_path
        started = time.perf_counter()
        report = run(config, cache_path)
        elapsed = time.perf_counter() - started
    except ConfigError as exc:
        print(f"ellt: config error: {exc}", file=sys.stderr)
        return 1
    except CapTooSmall as exc:
        print(f"ellt: caps too small: {exc}", file=sys.stderr)
        return 2
    except EllTError as exc:
        print(f"ellt: validation failed: {exc}", file=sys.stderr)
        return 3

    data = _json_bytes(report) if config.fmt == "json" else _csv_bytes(config.command, report)
    out_path = args.out or config.output_path
    try:
        if out_path:
            _write_output(out_path, data)
        else:
            sys.stdout.write(data.decode("utf-8"))
    except OSError as exc:
        print(f"ellt: cannot write report to {out_path}: {exc}", file=sys.stderr)
        return 1
    print(f"ellt: {config.command} finished in {elapsed:.3f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
