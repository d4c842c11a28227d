"""Command-line interface: radius tables, error-rate sweeps, PAPR CCDFs, replay.

Configs are INI files with one section per subcommand ([simulate] or
[papr]) whose keys mirror the SweepSpec / run_papr_ccdf parameter names.
Every run that writes files also writes ``manifest.json``; ``bmocz replay``
re-executes a manifest and reproduces its outputs byte for byte.
"""
from __future__ import annotations

import argparse
import configparser
import itertools
import json
import re
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .channel import PdpSpec
from .codebook import MAX_ML_RADIUS_K, METRICS, RadiusSearchSpec, radius_curve, radius_dizet, radius_ml
from .errors import BmoczError, ConfigurationError, NumericalError, ResourceError
from .ofdm import Mapping, OfdmConfig
from .sim import CHANNELS, DECODERS, SweepSpec, run_error_sweep, run_mapping_comparison, run_papr_ccdf

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
MANIFEST = "manifest.json"


class ConfigError(ConfigurationError):
    """Config problem tied to a file location."""

    def __init__(self, msg, path=None, line=None):
        loc = f"{path}:{line}: " if path is not None and line is not None else (f"{path}: " if path else "")
        super().__init__(loc + msg)
        self.path, self.line = path, line


# ---------------------------------------------------------------- value parsing


def parse_range(text: str, kind=float) -> list:
    """'a:step:b' (inclusive), 'a..b' (integers) or a comma list."""
    text = text.strip()
    if not text:
        raise ValueError("empty value")
    if ".." in text:
        a, b = (int(t) for t in text.split(".."))
        if b < a:
            raise ValueError(f"empty range {text}")
        return list(range(a, b + 1))
    if ":" in text:
        parts = [float(t) for t in text.split(":")]
        if len(parts) != 3:
            raise ValueError("expected start:step:stop")
        a, step, b = parts
        if step <= 0 or b < a:
            raise ValueError(f"bad grid {text}")
        n = int(np.floor((b - a) / step + 1e-9)) + 1
        vals = np.round(a + step * np.arange(n), 10)
        return [kind(v) for v in vals]
    return [kind(t) for t in text.split(",") if t.strip()]


def _int_list(text):
    vals = parse_range(text, int)
    if any(float(v) != float(int(v)) for v in vals):
        raise ValueError("expected integers")
    return [int(v) for v in vals]


def _name_list(allowed):
    def parse(text):
        out = [t.strip().lower() for t in text.split(",") if t.strip()]
        if not out:
            raise ValueError("empty value")
        for t in out:
            if t not in allowed:
                raise ValueError(f"{t!r} not one of {', '.join(allowed)}")
        return out

    return parse


def _mapping_list(text):
    out = []
    for t in text.split(","):
        if t.strip():
            out.append(Mapping.parse(t).value)
    if not out:
        raise ValueError("empty value")
    return out


def _opt_int(text):
    t = text.strip().lower()
    return None if t in ("none", "off", "") else int(t)


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _radius(text):
    t = text.strip().lower()
    if t in ("auto", "ml", "dizet"):
        return t
    v = float(t)
    if not v > 1.0:
        raise ValueError("explicit radius must exceed 1")
    return v


def _metric(text):
    t = text.strip().lower()
    if t not in METRICS:
        raise ValueError(f"{t!r} not one of {', '.join(METRICS)}")
    return t


SIM_KEYS = {
    "K": (_int_list, [4]),
    "decoder": (_name_list(DECODERS), ["ml"]),
    "radius": (_radius, "auto"),
    "radius_metric": (_metric, "phase"),
    "channel": (_name_list(CHANNELS), ["awgn"]),
    "L": (int, None),
    "rho": (float, None),
    "mapping": (_mapping_list, ["frequency"]),
    "P": (int, 1),
    "N_idft": (_opt_int, None),
    "N_cp": (_opt_int, None),
    "M": (_opt_int, None),
    "scramble_seed": (_opt_int, None),
    "snr_db": (lambda t: parse_range(t, float), list(range(0, 31, 2))),
    "trials": (int, 100_000),
    "seed": (int, 0),
    "max_block_errors": (_opt_int, 200),
    "batch_packets": (_opt_int, None),
    "dizet_weighted": (_bool, True),
}

PAPR_KEYS = {
    "K": (_int_list, [9]),
    "mapping": (_mapping_list, [m.value for m in Mapping]),
    "radius": (_radius, "ml"),
    "radius_metric": (_metric, "phase"),
    "P": (int, 64),
    "N_idft": (int, 512),
    "M": (int, 5),
    "n_symbols": (int, 10_000),
    "seed": (int, 0),
    "scramble_seed": (_opt_int, None),
    "oversample": (int, 1),
}


def _key_lines(path: Path) -> dict:
    """(section, key) -> line number, and section -> header line."""
    lines, section = {}, None
    for no, raw in enumerate(path.read_text().splitlines(), 1):
        s = raw.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            lines[section] = no
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            lines[(section, m.group(1).strip().lower())] = no
    return lines


def _blame_line(msg: str, lines: dict, section: str, schema: dict):
    """Line of the first config key named in an error message, else the section header."""
    names = sorted(schema, key=len, reverse=True)
    for pattern in (r"\b{}=", r"\b{}\b"):  # 'name=value' mentions first
        for name in names:
            if re.search(pattern.format(re.escape(name)), msg) and (section, name.lower()) in lines:
                return lines[(section, name.lower())]
    return lines.get(section)


def load_section(path, section: str, schema: dict, required=True) -> tuple[dict, dict]:
    """Parse and type-check one config section. Returns (params, line map)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("no such config file", path)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(path.read_text(), source=str(path))
    except configparser.Error as e:
        raise ConfigError(str(e).splitlines()[0], path, getattr(e, "lineno", None)) from None
    lines = _key_lines(path)
    params = {k: (list(v) if isinstance(v, list) else v) for k, (_, v) in schema.items()}
    if not cp.has_section(section):
        if required:
            raise ConfigError(f"missing [{section}] section", path, 1)
        return params, lines
    lower = {k.lower(): k for k in schema}
    for key, raw in cp.items(section):
        line = lines.get((section, key.lower()))
        name = lower.get(key.lower())
        if name is None:
            raise ConfigError(f"unknown key {key!r} in [{section}]", path, line)
        try:
            params[name] = schema[name][0](raw)
        except (ValueError, ConfigurationError) as e:
            raise ConfigError(f"{name}: {e}", path, line) from None
    return params, lines


# ---------------------------------------------------------------- simulate


def _sim_specs(params: dict):
    """Expand list-valued parameters into (K, decoder, channel) -> SweepSpec."""
    search = RadiusSearchSpec(metric=params["radius_metric"])
    pdp = None
    if params["L"] is not None or params["rho"] is not None:
        if params["L"] is None or params["rho"] is None:
            raise ConfigurationError("multipath needs both L and rho")
        pdp = PdpSpec(params["L"], params["rho"])
    jobs = []
    for K, dec, chan in itertools.product(params["K"], params["decoder"], params["channel"]):
        spec = SweepSpec(
            K=K,
            decoder=dec,
            radius=params["radius"],
            channel=chan,
            pdp=pdp if chan == "multipath" else None,
            mapping=params["mapping"][0],
            P=params["P"],
            N_idft=params["N_idft"],
            N_cp=params["N_cp"],
            M=params["M"],
            scramble_seed=params["scramble_seed"],
            snr_db=tuple(params["snr_db"]),
            trials=params["trials"],
            seed=params["seed"],
            max_block_errors=params["max_block_errors"],
            batch_packets=params["batch_packets"],
            dizet_weighted=params["dizet_weighted"],
            radius_search=search,
        )
        for m in params["mapping"]:  # capacity check for every mapping, before any compute
            spec.ofdm_config(Mapping.parse(m))
        jobs.append(spec)
    return jobs


def run_simulate(params: dict, outdir: Path, threads=1, log=print) -> list:
    jobs = _sim_specs(params)
    stem = params.get("name", "sim")
    outputs = []
    for spec in jobs:
        tag = f"{stem}_K{spec.K}_{spec.decoder}_{spec.channel}"
        log(f"# K={spec.K} decoder={spec.decoder} channel={spec.channel}")
        if len(params["mapping"]) > 1:
            results = run_mapping_comparison(spec, params["mapping"], threads=threads, progress=log)
        else:
            results = {spec.mapping: run_error_sweep(spec, threads=threads, progress=log)}
        for m, res in results.items():
            name = f"{tag}_{m.value}.csv"
            res.write(outdir / name)
            outputs += [name, str(Path(name).with_suffix(".json"))]
            log(f"wrote {outdir / name} (R={res.R:.6f})")
    return outputs


# ---------------------------------------------------------------- papr


def run_papr(params: dict, outdir: Path, threads=1, log=print) -> list:
    search = RadiusSearchSpec(metric=params["radius_metric"])
    stem = params.get("name", "papr")
    outputs = []
    for K in params["K"]:
        for m in params["mapping"]:
            res = run_papr_ccdf(
                m,
                K,
                R=params["radius"],
                P=params["P"],
                N_idft=params["N_idft"],
                M=params["M"],
                n_symbols=params["n_symbols"],
                seed=params["seed"],
                scramble_seed=params["scramble_seed"],
                oversample=params["oversample"],
                radius_search=search,
            )
            name = f"{stem}_K{K}_{m}.csv"
            res.write(outdir / name)
            outputs += [name, str(Path(name).with_suffix(".json"))]
            log(f"K={K} {m}: PAPR at CCDF 1e-2 = {res.level(1e-2):.3f} dB -> {outdir / name}")
    return outputs


def _check_papr(params):
    for K in params["K"]:
        if params["radius"] in ("ml", "auto") and K > MAX_ML_RADIUS_K:
            raise ConfigurationError(f"K={K}: ML radius search limited to K <= {MAX_ML_RADIUS_K}")
    if params["oversample"] < 1 or params["n_symbols"] < 1:
        raise ConfigurationError("oversample and n_symbols must be >= 1")
    for K in params["K"]:
        for m in params["mapping"]:
            OfdmConfig(N_idft=params["N_idft"], P=params["P"], K=K, mapping=m,
                       M=params["M"] if Mapping.parse(m) is Mapping.TIME_FREQUENCY else None)


# ---------------------------------------------------------------- radius


def _radius_rows(params: dict) -> str:
    mode, Ks = params["mode"], params["K"]
    if mode == "dizet":
        rows = ["K,R_dz"] + [f"{K},{radius_dizet(K)!r}" for K in Ks]
        return "\n".join(rows) + "\n"
    search = RadiusSearchSpec(metric=params["metric"])
    if mode == "ml":
        rows = ["K,R_dz,R_ml"] + [f"{K},{radius_dizet(K)!r},{radius_ml(K, search)!r}" for K in Ks]
        return "\n".join(rows) + "\n"
    grid = params["grid"] if params["grid"] is not None else list(search.coarse_grid())
    out = ""
    for i, K in enumerate(Ks):
        text = radius_curve(K, grid, params["metric"]).to_csv()
        out += text if i == 0 else text.split("\n", 1)[1]
    return out


def run_radius(params: dict, outdir: Path, threads=1, log=print) -> list:
    name = params["out"]
    (outdir / name).write_text(_radius_rows(params))
    return [name]


def _check_radius(params):
    Ks = params["K"]
    if any(K < 1 for K in Ks):
        raise ConfigurationError("K must be >= 1")
    if params["mode"] in ("ml", "curve"):
        big = [K for K in Ks if K > MAX_ML_RADIUS_K]
        if big:
            raise ResourceError(
                f"K={big[0]} is out of range for mode {params['mode']}: each separation sample "
                f"compares all 4^K codeword pairs, so K is limited to 1..{MAX_ML_RADIUS_K}"
            )
    if params["grid"] is not None and min(params["grid"]) <= 1.0:
        raise ConfigurationError("curve grid radii must exceed 1")


RUNNERS = {"simulate": run_simulate, "papr": run_papr, "radius": run_radius}


# ---------------------------------------------------------------- manifest


def write_manifest(outdir: Path, subcommand: str, params: dict, outputs: list) -> Path:
    man = {
        "subcommand": subcommand,
        "version": __version__,
        "seed": params.get("seed"),
        "params": params,
        "outputs": outputs,
    }
    p = outdir / MANIFEST
    p.write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    return p


def execute(subcommand: str, params: dict, outdir, threads=1, log=print) -> tuple[list, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = RUNNERS[subcommand](params, outdir, threads=threads, log=log)
    return outputs, write_manifest(outdir, subcommand, params, outputs)


# ---------------------------------------------------------------- commands


def cmd_radius(args, log):
    try:
        Ks = _int_list(args.k)
        grid = parse_range(args.grid, float) if args.grid else None
    except ValueError as e:
        raise ConfigurationError(f"bad --k/--grid: {e}") from None
    params = {"mode": args.mode, "K": Ks, "grid": grid, "metric": args.metric,
              "out": Path(args.out).name if args.out else None}
    _check_radius(params)
    if args.out is None:
        sys.stdout.write(_radius_rows(params))
        return EXIT_OK
    outdir = Path(args.out).parent
    _, man = execute("radius", params, outdir, log=log)
    log(f"wrote {args.out} and {man}")
    return EXIT_OK


def cmd_simulate(args, log):
    params, _ = load_section(args.config, "simulate", SIM_KEYS)
    params["name"] = Path(args.config).stem
    if args.seed is not None:
        params["seed"] = args.seed
    if args.trials is not None:
        params["trials"] = args.trials
    if args.snr is not None:
        try:
            params["snr_db"] = parse_range(args.snr, float)
        except ValueError as e:
            raise ConfigurationError(f"bad --snr: {e}") from None
    if args.max_block_errors is not None:
        params["max_block_errors"] = _opt_int(args.max_block_errors)
    try:
        _sim_specs(params)
    except ConfigurationError as e:
        lines = _key_lines(Path(args.config))
        raise ConfigError(str(e), args.config, _blame_line(str(e), lines, "simulate", SIM_KEYS)) from None
    outdir = Path(args.outdir or Path("results") / params["name"])
    _, man = execute("simulate", params, outdir, threads=args.threads, log=log)
    log(f"manifest {man}")
    return EXIT_OK


def cmd_papr(args, log):
    if args.config:
        params, _ = load_section(args.config, "papr", PAPR_KEYS, required=False)
        params["name"] = Path(args.config).stem
    else:
        params = {k: (list(v) if isinstance(v, list) else v) for k, (_, v) in PAPR_KEYS.items()}
        params["name"] = "papr"
    try:
        if args.k is not None:
            params["K"] = _int_list(args.k)
        if args.mapping is not None:
            params["mapping"] = _mapping_list(args.mapping)
    except ValueError as e:
        raise ConfigurationError(f"bad flag value: {e}") from None
    for key, val in (("n_symbols", args.symbols), ("oversample", args.oversample), ("seed", args.seed)):
        if val is not None:
            params[key] = val
    try:
        _check_papr(params)
    except ConfigurationError as e:
        if args.config:
            lines = _key_lines(Path(args.config))
            raise ConfigError(str(e), args.config, _blame_line(str(e), lines, "papr", PAPR_KEYS)) from None
        raise
    outdir = Path(args.outdir or Path("results") / params["name"])
    _, man = execute("papr", params, outdir, threads=args.threads, log=log)
    log(f"manifest {man}")
    return EXIT_OK


def replay(manifest_path, outdir=None, log=print) -> tuple[list, Path]:
    manifest_path = Path(manifest_path)
    try:
        man = json.loads(manifest_path.read_text())
        sub, params = man["subcommand"], man["params"]
    except (OSError, ValueError, KeyError) as e:
        raise ConfigurationError(f"unreadable manifest {manifest_path}: {e}") from None
    if sub not in RUNNERS:
        raise ConfigurationError(f"manifest names unknown subcommand {sub!r}")
    if man.get("version") != __version__:
        log(f"warning: manifest written by version {man.get('version')}, running {__version__}")
    return execute(sub, params, outdir or manifest_path.parent, log=log)


def cmd_replay(args, log):
    src = Path(args.manifest)
    if not args.check:
        outputs, man = replay(src, args.outdir, log)
        log(f"replayed {len(outputs)} outputs, manifest {man}")
        return EXIT_OK
    with tempfile.TemporaryDirectory() as tmp:
        outputs, man = replay(src, tmp, log)
        bad = [n for n in outputs + [MANIFEST]
               if not (src.parent / n).is_file() or (src.parent / n).read_bytes() != (Path(tmp) / n).read_bytes()]
    for n in bad:
        log(f"differs: {n}")
    log("identical" if not bad else f"{len(bad)} file(s) differ")
    return EXIT_OK if not bad else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bmocz", description="BMOCZ modulation toolkit")
    ap.add_argument("--version", action="version", version=f"bmocz {__version__}")
    ap.add_argument("-q", "--quiet", action="store_true", help="suppress progress lines")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS, help="suppress progress lines")

    r = sub.add_parser("radius", parents=[common], help="zero-constellation radii and separation curves")
    r.add_argument("--mode", choices=["dizet", "ml", "curve"], default="dizet")
    r.add_argument("--k", default="4", help="K, a list '4,6' or a range '4..13'")
    r.add_argument("--grid", help="curve radii as start:step:stop (default: 61 points over (1,4])")
    r.add_argument("--metric", choices=METRICS, default="phase", help="codeword separation metric")
    r.add_argument("--out", help="write CSV here (and a manifest beside it) instead of stdout")
    r.set_defaults(func=cmd_radius)

    s = sub.add_parser("simulate", parents=[common], help="BER/BLER sweep from an INI config")
    s.add_argument("config")
    s.add_argument("--seed", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--snr", help="SNR grid in dB, start:step:stop or a comma list")
    s.add_argument("--max-block-errors", help="early-stop threshold, or 'off'")
    s.add_argument("--outdir")
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    p = sub.add_parser("papr", parents=[common], help="PAPR CCDF per mapping")
    p.add_argument("config", nargs="?")
    p.add_argument("--k", help="K or list of K (default 9)")
    p.add_argument("--mapping", help="comma list of mappings (default all three)")
    p.add_argument("--symbols", type=int, help="OFDM symbols per mapping")
    p.add_argument("--oversample", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--outdir")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_papr)

    rp = sub.add_parser("replay", parents=[common], help="re-run a manifest")
    rp.add_argument("manifest")
    rp.add_argument("--outdir", help="write here instead of next to the manifest")
    rp.add_argument("--check", action="store_true", help="re-run in a scratch dir and compare bytes")
    rp.set_defaults(func=cmd_replay)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    log = (lambda *a, **k: None) if args.quiet else (lambda msg: print(msg, flush=True))
    try:
        return args.func(args, log)
    except (ConfigurationError, ResourceError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except BmoczError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
