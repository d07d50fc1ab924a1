"""Command-line entry point.

Every subcommand prints a JSON report on stdout (and writes it to
``--report`` when given). Exit status: 0 success, 1 domain error, 2 usage
error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .acoustics.mcd import mcd
from .acoustics.rt60 import rt60, rte, synth_decay
from .acoustics.spectral import SpectrogramConfig, mel_cepstrum, mel_spectrogram
from .acoustics.wav import read_wav, write_wav
from .errors import SpatialFuseError
from .fileio import atomic_write_bytes, dumps_json, write_json
from .fusion import ABLATABLE, FUSED, FusionConfig, fuse_samples, init_params
from .numerics.rng import Rng
from .sources.manifest import SpeakerPosition, load_manifest, serialize_manifest
from .sources.position import PositionEncoderParams, position_features
from .sources.samples import load_samples, synth_sample, write_sample
from .sources.tensorio import write_tensor
from .training import evaluate, load_params, pipeline_gradcheck, save_params, train_toy

FIXTURE_T60_RANGE = (0.3, 1.0)


def write_report(path, payload: dict) -> None:
    write_json(path, payload)


def _emit(payload: dict, report: str | None = None) -> None:
    if report:
        write_report(report, payload)
    sys.stdout.write(dumps_json(payload))


def _config(args, **extra) -> dict:
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    return {"command": args.command, "flags": flags, **extra}


def _model_config(args, dim: int) -> FusionConfig:
    return FusionConfig(dim=dim, bands=args.bands, pool=args.pool, heads=args.heads)


# -- fusion subcommands -------------------------------------------------------

def cmd_gen_fixtures(args) -> dict:
    out = Path(args.out)
    rng = Rng(args.seed)
    records = [write_sample(synth_sample(rng, args.dim, f"s{i:04d}"), out) for i in range(args.count)]
    atomic_write_bytes(out / "manifest.json", serialize_manifest(records).encode("utf-8"))
    decays = []
    lo, hi = FIXTURE_T60_RANGE
    for i in range(args.count):
        t60 = lo + (hi - lo) * rng.uniform()
        rel = f"wav/decay_{i:04d}.wav"
        write_wav(out / rel, synth_decay(rng, t60, args.sample_rate))
        decays.append({"id": f"s{i:04d}", "wav": rel, "t60": t60})
    write_json(out / "decays.json", decays)
    return {"manifest": str(out / "manifest.json"), "n": args.count, "decays": str(out / "decays.json"),
            "config": _config(args)}


def cmd_init_params(args) -> dict:
    cfg = _model_config(args, args.dim)
    save_params(args.out, init_params(cfg, Rng(args.seed)), cfg)
    return {"params": args.out, "config": _config(args, model=cfg.to_json())}


def cmd_encode_position(args) -> dict:
    params, cfg = load_params(args.params)
    bands = args.bands if args.bands is not None else cfg.bands
    fp = position_features(SpeakerPosition(args.x, args.y), PositionEncoderParams.from_store(params, bands))
    write_tensor(args.out, fp)
    return {"out": args.out, "dim": fp.shape[1], "values": fp.reshape(-1).tolist(),
            "config": _config(args, model=cfg.to_json())}


def _load(manifest: str):
    records, base = load_manifest(manifest)
    return load_samples(records, base)


def cmd_fuse(args) -> dict:
    params, cfg = load_params(args.params)
    samples = _load(args.manifest)
    outputs = fuse_samples(samples, params, cfg) if samples else []
    out = Path(args.out)
    per_sample = []
    for s, o in zip(samples, outputs):
        rel = f"H/{s.id}.mskt"
        write_tensor(out / rel, o.H)
        entry = {"id": s.id, "H": rel}
        if args.dump_weights:
            entry["entropy"] = dict(zip(FUSED, o.u.tolist()))
            entry["lambda"] = dict(zip(FUSED, o.lam.tolist()))
        per_sample.append(entry)
    payload = {"n": len(samples), "per_sample": per_sample, "config": _config(args, model=cfg.to_json())}
    write_report(out / "fusion.json", payload)
    return payload


def cmd_gradcheck(args) -> dict:
    cfg = FusionConfig(dim=args.dim, bands=args.bands, pool=args.pool, heads=args.heads)
    start = time.perf_counter()
    err = pipeline_gradcheck(args.seed, args.dim, args.eps, args.samples, cfg)
    elapsed = time.perf_counter() - start
    sys.stderr.write(f"gradcheck finished in {elapsed:.2f} s\n")
    if err > args.tol:
        sys.stderr.write(f"error: max relative error {err:.3e} exceeds tolerance {args.tol:.1e}\n")
    return {"max_rel_err": err, "tol": args.tol, "pass": err <= args.tol,
            "config": _config(args, model=cfg.to_json())}


def cmd_train_toy(args) -> dict:
    samples = _load(args.manifest)
    if not samples:
        raise SpatialFuseError("cannot train on an empty manifest")
    cfg = _model_config(args, samples[0].dim)
    result = train_toy(samples, cfg, args.steps, args.lr, args.seed)
    save_params(args.out, result.params, cfg)
    payload = {"initial_mse": result.initial_loss, "final_mse": result.final_loss, "losses": result.losses,
               "params": args.out, "config": _config(args, model=cfg.to_json())}
    write_report(Path(args.out) / "train.json", payload)
    return payload


def cmd_eval(args) -> dict:
    params, cfg = load_params(args.params)
    report = evaluate(_load(args.manifest), params, cfg, args.zero_source)
    return {**report.to_json(), "config": _config(args, model=cfg.to_json())}


# -- acoustic subcommands ------------------------------------------------------

def _pairs(pred: str, target: str) -> list[tuple[str, Path, Path]]:
    p, t = Path(pred), Path(target)
    if p.is_dir() and t.is_dir():
        names = sorted(f.name for f in t.glob("*.wav"))
        if not names:
            raise SpatialFuseError(f"no .wav files in {t}")
        missing = [n for n in names if not (p / n).is_file()]
        if missing:
            raise SpatialFuseError(f"prediction directory lacks {', '.join(missing)}")
        return [(Path(n).stem, p / n, t / n) for n in names]
    if p.is_dir() or t.is_dir():
        raise SpatialFuseError("--pred and --target must both be files or both be directories")
    return [(t.stem, p, t)]


def _metric_payload(metric: str, per_pair, args, **config) -> dict:
    values = [v for _, v in per_pair]
    return {"metric": metric, "value": float(np.mean(values)),
            "per_pair": [{"id": i, "value": v} for i, v in per_pair],
            "config": _config(args, **config)}


def cmd_rt60(args) -> dict:
    w = read_wav(args.wav)
    value = rt60(w, args.fit_lo, args.fit_hi)
    return _metric_payload("rt60", [(Path(args.wav).stem, value)], args, sample_rate=w.sample_rate)


def cmd_rte(args) -> dict:
    per_pair = []
    for sid, p, t in _pairs(args.pred, args.target):
        wp, wt = read_wav(p), read_wav(t)
        _same_rate(wp, wt, sid)
        per_pair.append((sid, rte(wp, wt, args.fit_lo, args.fit_hi)))
    return _metric_payload("rte", per_pair, args, unit="s")


def _same_rate(a, b, sid):
    if a.sample_rate != b.sample_rate:
        raise SpatialFuseError(f"{sid}: sample rates differ ({a.sample_rate} vs {b.sample_rate}); resampling is not supported")


def cmd_mcd(args) -> dict:
    spec = SpectrogramConfig()
    per_pair = []
    for sid, p, t in _pairs(args.pred, args.target):
        wp, wt = read_wav(p), read_wav(t)
        _same_rate(wp, wt, sid)
        cp = mel_cepstrum(mel_spectrogram(wp, spec), args.K)
        ct = mel_cepstrum(mel_spectrogram(wt, spec), args.K)
        per_pair.append((sid, mcd(cp, ct, use_dtw=not args.no_dtw)))
    return _metric_payload("mcd", per_pair, args, unit="dB", spectrogram=spec.to_json(), K=args.K,
                           dtw=not args.no_dtw, log="natural", dct="orthonormal DCT-II, c0 dropped")


def cmd_melspec(args) -> dict:
    spec = SpectrogramConfig()
    w = read_wav(args.wav)
    m = mel_spectrogram(w, spec)
    write_tensor(args.out, m.values)
    return {"out": args.out, "frames": m.frames, "n_mels": spec.n_mels, "sample_rate": w.sample_rate,
            "config": _config(args, spectrogram=spec.to_json())}


# -- parser --------------------------------------------------------------------

def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _seed(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {s}")
    return v


def _unit(s: str) -> float:
    v = float(s)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"coordinate must lie in [0, 1], got {s}")
    return v


def _model_flags(p, bands_default=10):
    p.add_argument("--bands", type=_positive_int, default=bands_default, help="position encoding bands L")
    p.add_argument("--pool", type=_positive_int, default=16, help="adaptive max pool output size O")
    p.add_argument("--heads", type=_positive_int, default=4, help="semantic attention heads")


def _fit_flags(p):
    p.add_argument("--fit-lo", type=float, default=-5.0, help="upper EDC level of the fit (dB)")
    p.add_argument("--fit-hi", type=float, default=-25.0, help="lower EDC level of the fit (dB)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spatialfuse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen-fixtures", help="synthetic manifest, MSKT features and WAV decays")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--count", type=_positive_int, required=True)
    p.add_argument("--dim", type=_positive_int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sample-rate", type=_positive_int, default=16000)
    p.set_defaults(func=cmd_gen_fixtures)

    p = sub.add_parser("init-params", help="write freshly initialized parameters")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--dim", type=_positive_int, default=512)
    p.add_argument("--out", required=True)
    _model_flags(p)
    p.set_defaults(func=cmd_init_params)

    p = sub.add_parser("encode-position", help="speaker position feature F_P")
    p.add_argument("--x", type=_unit, required=True)
    p.add_argument("--y", type=_unit, required=True)
    p.add_argument("--bands", type=_positive_int, default=None)
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode_position)

    p = sub.add_parser("fuse", help="run the fusion pipeline over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-weights", action="store_true", help="include per-sample entropies and weights")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--dim", type=_positive_int, required=True)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--samples", type=_positive_int, default=2)
    _model_flags(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("train-toy", help="train the toy regression head")
    p.add_argument("--manifest", required=True)
    p.add_argument("--steps", type=_positive_int, required=True)
    p.add_argument("--lr", type=float, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    _model_flags(p)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("eval", help="evaluate, optionally zeroing one source")
    p.add_argument("--manifest", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--zero-source", choices=ABLATABLE, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rt60", help="RT60 of a WAV file")
    p.add_argument("--wav", required=True)
    p.add_argument("--report")
    _fit_flags(p)
    p.set_defaults(func=cmd_rt60)

    p = sub.add_parser("rte", help="RT60 error between WAV files or directories")
    p.add_argument("--pred", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--report")
    _fit_flags(p)
    p.set_defaults(func=cmd_rte)

    p = sub.add_parser("mcd", help="mel cepstral distortion between WAV files or directories")
    p.add_argument("--pred", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--no-dtw", action="store_true")
    p.add_argument("--K", type=_positive_int, default=13)
    p.add_argument("--report")
    p.set_defaults(func=cmd_mcd)

    p = sub.add_parser("melspec", help="80-bin mel spectrogram of a WAV file")
    p.add_argument("--wav", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_melspec)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload = args.func(args)
        _emit(payload, getattr(args, "report", None))
    except (SpatialFuseError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0 if payload.get("pass", True) else 1


if __name__ == "__main__":
    sys.exit(main())
