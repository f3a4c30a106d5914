"""Reproducible experiments producing plot-ready CSV.

Every experiment returns rows with the columns
``experiment, <experiment params...>, metric, value``. Trials draw their
randomness from ``trial_rng(seed, trial_index)`` and results are gathered
in trial order, so the output bytes do not depend on ``threads``.
"""

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field
import json
import math
from pathlib import Path

import numpy as np

from . import spectral, theory
from .channel import apply_cfo, apply_delay, awgn, trial_rng
from .errors import ConfigError, MicroHopError
from .frame import FrameConfig, build_frame, parse_frame
from .hopping import linear_pattern, pattern_symbol, random_pattern, zc_closed_form
from .modem import (
    DETECTION_THRESHOLD,
    make_sum_reference,
    modulate_secure,
)
from .ntcore import is_prime, smallest_prime_above
from .sync import PilotConfig, build_pilot, estimate_stream

_INT = "int"
_FLOAT = "float"
_OPT_FLOAT = "float|null"
_INTS = "list[int]"
_FLOATS = "list[float|null]"
_STR = "str"

# name -> (type, default)
SCHEMAS = {
    "correlation": {"P": (_INT, 17), "roots": (_INTS, [3, 5]), "key_seed": (_INT, 1)},
    "demod-sweep": {
        "SF": (_INT, 7), "R": (_INT, 3), "esn0_start": (_FLOAT, -15.0),
        "esn0_stop": (_FLOAT, 0.0), "esn0_step": (_FLOAT, 1.0), "mode": (_STR, "cfs"),
        "chunk": (_INT, 20000),
    },
    "timefreq-grid": {
        "P1": (_INT, 31), "R": (_INT, 3), "pairs": (_INT, 0), "esn0_db": (_OPT_FLOAT, None),
    },
    "multiuser": {
        "P": (_INT, 257), "roots": (_INTS, [3, 5]), "symbols": (_INT, 1000),
        "esn0_db": (_FLOATS, [None, 0.0, -12.0, -14.0]),
    },
    "confidentiality": {
        "P": (_INT, 131), "R": (_INT, 3), "wrong_keys": (_INT, 100),
        "plain_trials": (_INT, 1000),
    },
    "frame-loopback": {
        "SF": (_INT, 7), "R": (_INT, 3), "max_symbols": (_INT, 16), "key_seed": (_INT, 7),
        "read_roots": (_INTS, [2, 3, 5]), "max_delay": (_INT, 600),
        "max_cfo_bins": (_INT, 20), "esn0_db": (_OPT_FLOAT, None),
    },
}

DEFAULT_TRIALS = {
    "correlation": 1, "demod-sweep": 20000, "timefreq-grid": 1, "multiuser": 1,
    "confidentiality": 1, "frame-loopback": 100,
}


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    trials: int = 0
    seed: int = 0
    output: str | None = None
    threads: int = 1

    def __post_init__(self):
        validate(self)


def _check_type(name, kind, value):
    ok = {
        _INT: lambda v: isinstance(v, int) and not isinstance(v, bool),
        _FLOAT: lambda v: isinstance(v, (int, float)) and not isinstance(v, bool)
        and math.isfinite(v),
        _OPT_FLOAT: lambda v: v is None or (isinstance(v, (int, float))
                                            and not isinstance(v, bool) and math.isfinite(v)),
        _INTS: lambda v: isinstance(v, list) and all(isinstance(i, int) for i in v),
        _FLOATS: lambda v: isinstance(v, list) and all(
            i is None or isinstance(i, (int, float)) for i in v),
        _STR: lambda v: isinstance(v, str),
    }[kind]
    if not ok(value):
        raise ConfigError(f"expected {kind}, got {value!r}", field=f"params.{name}")


def validate(cfg: ExperimentConfig):
    if cfg.experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; choose from "
                          f"{sorted(SCHEMAS)}", field="experiment")
    schema = SCHEMAS[cfg.experiment]
    if not isinstance(cfg.params, dict):
        raise ConfigError("params must be an object", field="params")
    for name in cfg.params:
        if name not in schema:
            raise ConfigError(f"unknown parameter {name!r}", field=f"params.{name}")
    full = {k: d for k, (_, d) in schema.items()}
    full.update(cfg.params)
    for name, value in full.items():
        _check_type(name, schema[name][0], value)
    cfg.params = full
    if not isinstance(cfg.trials, int) or cfg.trials < 0:
        raise ConfigError("trials must be an integer >= 1", field="trials")
    if cfg.trials == 0:
        cfg.trials = DEFAULT_TRIALS[cfg.experiment]
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError("seed must be a non-negative integer", field="seed")
    if not isinstance(cfg.threads, int) or cfg.threads < 1:
        raise ConfigError("threads must be >= 1", field="threads")

    p = cfg.params
    for key in ("P", "P1"):
        if key in p and not is_prime(p[key]):
            raise ConfigError(f"{p[key]} is not prime", field=f"params.{key}")
    size = p.get("P") or p.get("P1")
    if size:
        for key in ("R",):
            if key in p and not 1 <= p[key] < size:
                raise ConfigError(f"root must lie in [1, {size - 1}]", field=f"params.{key}")
        for i, r in enumerate(p.get("roots", [])):
            if not 1 <= r < size:
                raise ConfigError(f"root must lie in [1, {size - 1}]", field=f"params.roots[{i}]")
    if "SF" in p and not 2 <= p["SF"] <= 12:
        raise ConfigError("SF must lie in [2, 12]", field="params.SF")
    if "mode" in p and p["mode"] not in ("cfs", "cts"):
        raise ConfigError("mode must be 'cfs' or 'cts'", field="params.mode")
    if cfg.experiment == "frame-loopback":
        fc = FrameConfig(p["SF"])
        if not 1 <= p["R"] < min(fc.P, fc.P1):
            raise ConfigError("root out of range for SF", field="params.R")
        if not 0 <= p["max_symbols"] <= fc.max_payload_symbols:
            raise ConfigError(f"max_symbols must lie in [0, {fc.max_payload_symbols}]",
                              field="params.max_symbols")
    if cfg.experiment == "multiuser" and len(p["roots"]) != len(set(p["roots"])):
        raise ConfigError("user roots must be distinct", field="params.roots")


def load_config(path, overrides=None) -> ExperimentConfig:
    """Parse a JSON experiment config; errors carry the field or line."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", line=1)
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    allowed = {"experiment", "params", "trials", "seed", "output", "threads"}
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", field=key)
    if "experiment" not in raw:
        raise ConfigError("missing required key", field="experiment")
    return ExperimentConfig(**raw)


def _pmap(fn, items, threads):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


# --- experiments ------------------------------------------------------------


def exp_correlation(cfg):
    p = cfg.params
    P, roots = p["P"], p["roots"]
    ra, rb = roots[0], roots[1]
    za, zb = zc_closed_form(P, ra).samples, zc_closed_form(P, rb).samples
    rows = []
    series = {
        ("time", "autocorr"): spectral.circular_cross_correlation(za, za),
        ("time", "crosscorr"): spectral.circular_cross_correlation(za, zb),
        ("freq", "autocorr"): spectral.freq_correlation(za, za),
        ("freq", "crosscorr"): spectral.freq_correlation(zb, za),
    }
    key = random_pattern(P, p["key_seed"])
    sa = make_sum_reference(P, ra, key).samples
    sb = make_sum_reference(P, rb, key).samples
    series[("time", "sumref_autocorr")] = spectral.circular_cross_correlation(sa, sa)
    series[("time", "sumref_crosscorr")] = spectral.circular_cross_correlation(sa, sb)
    for (domain, name), c in series.items():
        mag = np.abs(c)
        for lag, v in enumerate(mag):
            rows.append({"domain": domain, "lag": lag, "metric": f"{name}_mag", "value": v})
        rows.append({"domain": domain, "lag": None, "metric": f"{name}_peak", "value": mag.max()})
        rows.append({"domain": domain, "lag": None, "metric": f"{name}_min", "value": mag.min()})
        rows.append({"domain": domain, "lag": None, "metric": f"{name}_max_offpeak",
                     "value": np.delete(mag, np.argmax(mag)).max()})
    rows.append({"domain": None, "lag": None, "metric": "sqrt_P", "value": math.sqrt(P)})
    return [{"P": P, "root_a": ra, "root_b": rb, **r} for r in rows]


def symbol_batch(P, R, data, mode="cfs"):
    """Noiseless ``(len(data), P)`` batch of linear symbols carrying ``data``."""
    n = np.arange(P, dtype=np.int64)
    base = np.cumsum(R * n) % P
    data = np.asarray(data, dtype=np.int64)
    if mode == "cfs":
        num = (base[None, :] + data[:, None] * (n + 1)[None, :]) % P
        return np.exp(2j * np.pi * num / P)
    ref = np.exp(2j * np.pi * base / P)
    idx = (n[None, :] - data[:, None]) % P
    return ref[idx]


def demod_batch(rx, ref, mode="cfs"):
    if mode == "cfs":
        corr = spectral.freq_correlation(rx, ref)
    else:
        corr = spectral.circular_cross_correlation(rx, np.broadcast_to(ref, rx.shape))
    return np.argmax(np.abs(corr), axis=-1)


def simulate_ser(P, R, esn0_db, trials, seed, index=0, mode="cfs", chunk=20000):
    """Monte-Carlo symbol error rate of linear-symbol demodulation."""
    rng = trial_rng(seed, index)
    ref = pattern_symbol(linear_pattern(P, R)).samples
    errors = 0
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        data = rng.integers(0, P, n)
        rx = symbol_batch(P, R, data, mode)
        rx = rx + awgn(rx.size, esn0_db, rng).reshape(rx.shape)
        errors += int(np.count_nonzero(demod_batch(rx, ref, mode) != data))
        done += n
    return errors / trials


def exp_demod_sweep(cfg):
    p = cfg.params
    P = smallest_prime_above(2 ** p["SF"])
    grid = np.arange(p["esn0_start"], p["esn0_stop"] + 1e-9, p["esn0_step"])

    def point(i):
        e = float(grid[i])
        ser = simulate_ser(P, p["R"], e, cfg.trials, cfg.seed, i, p["mode"], p["chunk"])
        return e, ser, theory.cfs_ser_theory(P, e)

    rows = []
    for e, ser, th in _pmap(point, range(len(grid)), cfg.threads):
        base = {"SF": p["SF"], "P": P, "mode": p["mode"], "esn0_db": round(e, 6),
                "ebn0_db": round(e + 10 * math.log10(P / p["SF"]), 6)}
        rows.append({**base, "metric": "ser_sim", "value": ser})
        rows.append({**base, "metric": "ser_theory", "value": th})
    return rows


def pilot_stream(cfg: PilotConfig, to, fo):
    zx, zy = build_pilot(cfg)
    pilot = np.concatenate([zx.samples, zy.samples])
    return apply_cfo(apply_delay(pilot, to), fo / cfg.P1)


def exp_timefreq_grid(cfg):
    p = cfg.params
    pc = PilotConfig(p["P1"], p["R"])
    half = (pc.P1 - 1) // 2
    if p["pairs"] > 0:
        rng = trial_rng(cfg.seed, 0)
        pairs = [(int(rng.integers(0, pc.P1)), int(rng.integers(-half, half + 1)))
                 for _ in range(p["pairs"])]
    else:
        pairs = [(to, fo) for to in range(pc.P1) for fo in range(-half, half + 1)]

    def trial(i):
        to, fo = pairs[i]
        s = pilot_stream(pc, to, fo)
        if p["esn0_db"] is not None:
            s = s + awgn(len(s), p["esn0_db"], trial_rng(cfg.seed, i + 1))
        try:
            est = estimate_stream(s, pc)
        except MicroHopError:
            return to, fo, None, None, False
        return to, fo, est.eto, est.efo, (est.eto, est.efo, est.start) == (to, fo, to)

    rows = []
    for to, fo, eto, efo, exact in _pmap(trial, range(len(pairs)), cfg.threads):
        rows.append({"P1": pc.P1, "R": pc.R, "To": to, "Fo": fo, "eTo": eto, "eFo": efo,
                     "metric": "exact", "value": exact})
    return rows


def multiuser_ser(P, roots, symbols, esn0_db, seed, index=0):
    """SER per user, alone and with all users superposed on the same samples.

    Returns ``{root: (single_ser, multi_ser)}``.
    """
    rng = trial_rng(seed, index)
    data = {r: rng.integers(0, P, symbols) for r in roots}
    tx = {r: symbol_batch(P, r, data[r]) for r in roots}
    total = sum(tx.values())
    noise = (awgn(symbols * P, esn0_db, rng).reshape(symbols, P)
             if esn0_db is not None else 0)
    out = {}
    for r in roots:
        ref = pattern_symbol(linear_pattern(P, r)).samples
        solo_noise = (awgn(symbols * P, esn0_db, rng).reshape(symbols, P)
                      if esn0_db is not None else 0)
        single = np.mean(demod_batch(tx[r] + solo_noise, ref) != data[r])
        multi = np.mean(demod_batch(total + noise, ref) != data[r])
        out[r] = (float(single), float(multi))
    return out


def exp_multiuser(cfg):
    p = cfg.params
    levels = p["esn0_db"]

    def point(i):
        return levels[i], multiuser_ser(p["P"], p["roots"], p["symbols"], levels[i], cfg.seed, i)

    rows = []
    for e, res in _pmap(point, range(len(levels)), cfg.threads):
        for r in p["roots"]:
            single, multi = res[r]
            base = {"P": p["P"], "users": len(p["roots"]),
                    "esn0_db": "noiseless" if e is None else e, "root": r}
            rows.append({**base, "metric": "ser_single", "value": single})
            rows.append({**base, "metric": "ser_multi", "value": multi})
    return rows


def confidentiality_stats(P, R, wrong_keys, plain_trials, seed):
    rng = trial_rng(seed, 0)
    data = np.arange(P)
    key = random_pattern(P, int(rng.integers(2**63)))
    tx = np.array([modulate_secure(P, R, int(d), key).samples for d in data])
    right = demod_batch(tx, make_sum_reference(P, R, key).samples)
    correct_rate = float(np.mean(right == data))

    hits = 0
    for _ in range(wrong_keys):
        wrong = random_pattern(P, int(rng.integers(2**63)))
        hits += int(np.count_nonzero(demod_batch(tx, make_sum_reference(P, R, wrong).samples)
                                     == data))
    hit_rate = hits / (wrong_keys * P)

    plain = pattern_symbol(linear_pattern(P, R)).samples
    ratios = np.empty(plain_trials)
    for t in range(plain_trials):
        k = random_pattern(P, int(rng.integers(2**63)))
        x = modulate_secure(P, R, int(rng.integers(P)), k).samples
        ratios[t] = spectral.peak_to_mean(spectral.freq_correlation(x, plain))
    return correct_rate, hit_rate, ratios


def exp_confidentiality(cfg):
    p = cfg.params
    P, R = p["P"], p["R"]
    correct, hit, ratios = confidentiality_stats(P, R, p["wrong_keys"], p["plain_trials"],
                                                 cfg.seed)
    base = {"P": P, "R": R}
    rows = [
        {**base, "metric": "correct_key_exact_rate", "value": correct},
        {**base, "metric": "wrong_key_hit_rate", "value": hit},
        {**base, "metric": "chance_level_2_over_P", "value": 2 / P},
        {**base, "metric": "plain_ref_ratio_below_2_fraction", "value": float(np.mean(ratios < 2))},
        {**base, "metric": "plain_ref_detected_fraction",
         "value": float(np.mean(ratios >= DETECTION_THRESHOLD))},
    ]
    for q in (0.01, 0.5, 0.99):
        rows.append({**base, "metric": f"plain_ref_ratio_q{q:g}",
                     "value": float(np.quantile(ratios, q))})
    return rows


def exp_frame_loopback(cfg):
    p = cfg.params
    fc0 = FrameConfig(p["SF"], p["R"])
    key = random_pattern(fc0.P, p["key_seed"])
    fc = FrameConfig(p["SF"], p["R"], key, p["read_roots"] or None)

    def trial(i):
        rng = trial_rng(cfg.seed, i)
        nsym = int(rng.integers(0, p["max_symbols"] + 1))
        bits = rng.integers(0, 2, nsym * fc.SF)
        delay = int(rng.integers(0, p["max_delay"] + 1))
        fo = int(rng.integers(-p["max_cfo_bins"], p["max_cfo_bins"] + 1))
        x = apply_cfo(apply_delay(build_frame(fc, bits), delay), fo / fc.P1)
        x = np.concatenate([x, np.zeros(fc.P1, dtype=complex)])
        if p["esn0_db"] is not None:
            x = x + awgn(len(x), p["esn0_db"], rng)
        try:
            res = parse_frame(x, fc)
        except MicroHopError as exc:
            return i, nsym, delay, fo, None, type(exc).__name__
        errs = int(np.count_nonzero(res.bits[:bits.size] != bits)) if res.bits.size >= bits.size \
            else bits.size
        exact = (res.estimate.start, res.estimate.efo) == (delay, fo)
        return i, nsym, delay, fo, (errs, exact), None

    rows = []
    for i, nsym, delay, fo, res, err in _pmap(trial, range(cfg.trials), cfg.threads):
        base = {"SF": fc.SF, "trial": i, "symbols": nsym, "delay": delay, "cfo_bins": fo}
        if res is None:
            rows.append({**base, "metric": "error", "value": err})
            continue
        rows.append({**base, "metric": "bit_errors", "value": res[0]})
        rows.append({**base, "metric": "estimate_exact", "value": res[1]})
    return rows


RUNNERS = {
    "correlation": exp_correlation,
    "demod-sweep": exp_demod_sweep,
    "timefreq-grid": exp_timefreq_grid,
    "multiuser": exp_multiuser,
    "confidentiality": exp_confidentiality,
    "frame-loopback": exp_frame_loopback,
}


def run_rows(cfg: ExperimentConfig):
    return [{"experiment": cfg.experiment, **r} for r in RUNNERS[cfg.experiment](cfg)]


def write_csv(rows, path):
    cols = []
    for r in rows:
        for k in r:
            if k not in ("metric", "value") and k not in cols:
                cols.append(k)
    cols += ["metric", "value"]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in cols])
    return path


def run(cfg: ExperimentConfig, out_dir="."):
    """Run one experiment and write its CSV; returns the output path."""
    name = cfg.output or f"{cfg.experiment}.csv"
    return write_csv(run_rows(cfg), Path(out_dir) / name)
