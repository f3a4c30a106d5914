"""Command line entry point: ``microhop {info,gen,parse,run}``."""

import argparse
import json
import sys

import numpy as np

from . import experiments
from .channel import ChannelSpec, impair
from .errors import ConfigError, MicroHopError
from .frame import FrameConfig, build_frame, parse_frame, sensitivity_dbm
from .hopping import PATTERN_PRNG, random_pattern
from .iqfile import read_iq, write_iq
from .modem import bits_per_symbol, spreading_gain_db

SPEED_OF_LIGHT = 299_792_458.0


def _frame_config(sf, root, key_seed, read_roots):
    base = FrameConfig(sf, root)
    key = random_pattern(base.P, key_seed) if key_seed is not None else None
    return FrameConfig(sf, root, key, read_roots or None)


def _roots(text):
    return [int(v) for v in text.split(",")] if text else None


def cmd_info(args):
    fc = FrameConfig(args.sf, args.root)
    info = {
        "sf": fc.SF,
        "p": fc.P,
        "p1": fc.P1,
        "bits_per_data_symbol": fc.SF,
        "floor_log2_p": bits_per_symbol(fc.P),
        "data_spreading_gain_db": round(spreading_gain_db(fc.P, fc.SF), 4),
        "preamble_spreading_gain_db": round(spreading_gain_db(fc.P1, fc.SF + 1), 4),
        "max_payload_symbols": fc.max_payload_symbols,
        "pilot_roots": [fc.pilot.rx, fc.pilot.ry],
        "sensitivity_dbm": round(sensitivity_dbm(args.nf, args.bw, args.ebno, fc.SF, fc.P), 4),
        "sample_period_s": 1 / args.bw,
        "range_per_sample_m": SPEED_OF_LIGHT / args.bw,
        "pattern_prng": PATTERN_PRNG,
    }
    print(json.dumps(info, indent=2))
    return 0


def cmd_gen(args):
    fc = _frame_config(args.sf, args.root, args.key_seed, _roots(args.read_roots))
    rng = np.random.default_rng(args.seed)
    if args.bits is not None:
        bits = np.array([int(c) for c in args.bits if c in "01"], dtype=np.int64)
    else:
        bits = rng.integers(0, 2, args.symbols * fc.SF)
    x = build_frame(fc, bits)
    spec = ChannelSpec(args.delay, args.cfo_bins / fc.P1, args.esn0, 0.0, args.seed)
    y = impair(x, spec)
    y = np.concatenate([y, np.zeros(fc.P1, dtype=complex)])
    meta = {"sf": fc.SF, "p": fc.P, "p1": fc.P1, "root": fc.R, "seed": args.seed,
            "key_seed": args.key_seed, "read_roots": list(fc.read_roots or []),
            "bits": "".join(map(str, bits.tolist())), "channel": spec.to_dict(),
            "pattern_prng": PATTERN_PRNG}
    write_iq(args.out, y, meta)
    print(json.dumps({"written": str(args.out), "sample_count": len(y),
                      "payload_bits": int(bits.size)}))
    return 0


def cmd_parse(args):
    samples, meta = read_iq(args.path)
    sf = args.sf if args.sf is not None else meta.get("sf")
    root = args.root if args.root is not None else meta.get("root", 3)
    key_seed = args.key_seed if args.key_seed is not None else meta.get("key_seed")
    roots = _roots(args.read_roots) if args.read_roots is not None else meta.get("read_roots")
    if sf is None:
        raise ConfigError("spreading factor unknown; pass --sf", field="sf")
    fc = _frame_config(int(sf), int(root), key_seed, roots)
    res = parse_frame(samples.astype(complex), fc)
    est = res.estimate
    out = {
        "bits": "".join(map(str, res.bits.tolist())),
        "values": res.values.tolist(),
        "sync_value": res.sync_value,
        "sync_ratio": round(res.sync_ratio, 4),
        "data_ratios": [round(float(r), 4) for r in res.data_ratios],
        "low_confidence_symbols": res.low_confidence.tolist(),
        "estimate": {"eTo": est.eto, "eFo": est.efo, "frame_start": est.frame_start,
                     "cfo_cycles_per_sample": est.cfo_cycles_per_sample,
                     "ratio_x": round(est.ratio_x, 4), "ratio_y": round(est.ratio_y, 4)},
    }
    if "bits" in meta:
        sent = meta["bits"]
        got = out["bits"][:len(sent)]
        out["bit_errors"] = sum(a != b for a, b in zip(sent, got)) + len(sent) - len(got)
    print(json.dumps(out, indent=2))
    return 0


def cmd_run(args):
    overrides = {"seed": args.seed, "threads": args.threads, "trials": args.trials}
    if args.config:
        cfg = experiments.load_config(args.config, overrides)
    else:
        if not args.experiment:
            raise ConfigError("pass --config or --experiment", field="experiment")
        cfg = experiments.ExperimentConfig(
            args.experiment, {}, args.trials or 0, args.seed or 0, None, args.threads or 1)
    path = experiments.run(cfg, args.out)
    print(json.dumps({"experiment": cfg.experiment, "csv": str(path)}))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="microhop", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="derived primes, gains and sensitivity for an SF")
    p.add_argument("--sf", type=int, required=True)
    p.add_argument("--root", type=int, default=3)
    p.add_argument("--nf", type=float, default=6.0, help="noise figure, dB")
    p.add_argument("--bw", type=float, default=125e3, help="baseband bandwidth, Hz")
    p.add_argument("--ebno", type=float, default=10.0, help="required Eb/N0, dB")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("gen", help="build a frame and write it as a cf32 IQ file")
    p.add_argument("--sf", type=int, default=7)
    p.add_argument("--root", type=int, default=3)
    p.add_argument("--bits", help="payload as a 0/1 string")
    p.add_argument("--symbols", type=int, default=8, help="random payload symbols if no --bits")
    p.add_argument("--key-seed", type=int, help="enable secondary-hopping key")
    p.add_argument("--read-roots", help="comma separated per-symbol key read roots")
    p.add_argument("--delay", type=int, default=0)
    p.add_argument("--cfo-bins", type=int, default=0, help="CFO in pilot bins (1/P1 cycles/sample)")
    p.add_argument("--esn0", type=float, help="per-sample Es/N0 in dB; omit for noiseless")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("parse", help="detect and demodulate a frame from a cf32 IQ file")
    p.add_argument("path")
    p.add_argument("--sf", type=int)
    p.add_argument("--root", type=int)
    p.add_argument("--key-seed", type=int)
    p.add_argument("--read-roots")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("run", help="run an experiment config and write CSV")
    p.add_argument("--config")
    p.add_argument("--experiment", choices=sorted(experiments.RUNNERS))
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps(exc.as_dict()), file=sys.stderr)
        return 2
    except (MicroHopError, ValueError, OSError) as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
