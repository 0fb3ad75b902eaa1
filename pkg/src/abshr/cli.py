"""Command-line entry point: process, evaluate, synth, selftest."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path

from . import evaluation, pipeline, selftest, synth
from .signal_core import read_wav, write_wav

IHR_PAIRING_TOLERANCE_S = 0.5
AHR_PAIRING_TOLERANCE_S = 1.0  # window centers sit 8 s apart; this is index equality


@dataclass(frozen=True)
class ManifestRow:
    audio_path: str
    rpeak_path: str | None
    participant: str
    day: str


@dataclass(frozen=True)
class RunManifest:
    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        seen = {}
        for idx, row in enumerate(rows, start=1):
            key = (row.participant, row.day, row.audio_path)
            if key in seen:
                raise ValueError(
                    f"manifest rows {seen[key]} and {idx} repeat "
                    f"(participant, day, audio) = {key}"
                )
            seen[key] = idx
        object.__setattr__(self, "rows", rows)


def read_manifest(path) -> RunManifest:
    """Read rows of audio_file,rpeak_file,participant,day; relative paths
    resolve against the manifest's own directory, empty rpeak_file means
    no ground truth for that row."""
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"manifest not found: {path}")
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = ["audio_file", "rpeak_file", "participant", "day"]
        have = reader.fieldnames or []
        if sorted(set(have) & set(required)) != sorted(required):
            raise ValueError(
                f"manifest needs columns {required}, got {have}"
            )
        base = path.parent
        for lineno, rec in enumerate(reader, start=2):
            audio = (rec.get("audio_file") or "").strip()
            rpeak = (rec.get("rpeak_file") or "").strip()
            participant = (rec.get("participant") or "").strip()
            day = (rec.get("day") or "").strip()
            if not audio:
                raise ValueError(f"{path}:{lineno}: audio_file is empty")
            if not participant or not day:
                raise ValueError(f"{path}:{lineno}: participant and day are required")
            rows.append(ManifestRow(
                audio_path=str((base / audio)),
                rpeak_path=str((base / rpeak)) if rpeak else None,
                participant=participant,
                day=day,
            ))
    return RunManifest(tuple(rows))


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", text)


def _load_config(arg: str | None) -> pipeline.PipelineConfig:
    if arg is None:
        return pipeline.PipelineConfig()
    return pipeline.load_config(arg)


def _cmd_process(args) -> int:
    config = _load_config(args.config)
    segment = read_wav(args.audio)
    result = pipeline.run_pipeline(segment, config, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pipeline.write_hr_csv(out / "ihr.csv", result.ihr)
    pipeline.write_hr_csv(out / "ahr.csv", result.ahr)
    pipeline.write_missingness_json(out / "missingness.json", result.missingness)
    _write_json(out / "effective_config.json", dataclasses.asdict(config))
    return 0


def _pairing_meta(tolerance_s: float, pred_len: int, truth_len: int, n_pairs: int) -> dict:
    return {
        "pairing_rule": "one_to_one_nearest_in_time",
        "pairing_tolerance_s": tolerance_s,
        "n_predictions": pred_len,
        "n_truth": truth_len,
        "unpaired_predictions": pred_len - n_pairs,
        "unpaired_truth": truth_len - n_pairs,
    }


def _empty_report_dict(group_keys, missing, extra: dict) -> dict:
    payload = {
        "mde_bpm": None,
        "mae_bpm": None,
        "mape_pct": None,
        "n_pairs": 0,
        "missingness": pipeline.missingness_as_dict(missing) if missing else None,
        "group_keys": group_keys,
    }
    payload.update(extra)
    return payload


def _cmd_evaluate(args) -> int:
    config = _load_config(args.config)
    manifest = read_manifest(args.manifest)
    bad = []
    for idx, row in enumerate(manifest.rows, start=1):
        if not Path(row.audio_path).is_file():
            bad.append(f"row {idx}: missing audio {row.audio_path}")
        if row.rpeak_path is not None and not Path(row.rpeak_path).is_file():
            bad.append(f"row {idx}: missing R-peak file {row.rpeak_path}")
    if bad:
        raise ValueError("manifest references missing files:\n  " + "\n  ".join(bad))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    skipped = []
    row_reports = {"ihr": [], "ahr": []}
    pooled_pairs = {"ihr": [], "ahr": []}
    pooled_missing = []

    for idx, row in enumerate(manifest.rows, start=1):
        if row.rpeak_path is None:
            print(f"warning: row {idx} has no ground truth, skipping", file=sys.stderr)
            skipped.append(idx)
            continue
        segment = read_wav(row.audio_path)
        result = pipeline.run_pipeline(segment, config, jobs=args.jobs)
        annotations = evaluation.read_rpeaks(row.rpeak_path)
        truth = {
            "ihr": evaluation.ecg_hr(annotations),
            "ahr": evaluation.ecg_window_hr(
                annotations, config, start_time_s=segment.start_time_s,
                duration_s=segment.duration_s,
            ),
        }
        tolerance = {"ihr": IHR_PAIRING_TOLERANCE_S, "ahr": AHR_PAIRING_TOLERANCE_S}
        group_keys = {"participant": row.participant, "day": row.day}
        row_dir = out / "rows" / _slug(f"{row.participant}_{row.day}_{Path(row.audio_path).stem}")
        row_dir.mkdir(parents=True, exist_ok=True)
        pipeline.write_hr_csv(row_dir / "ihr.csv", result.ihr)
        pipeline.write_hr_csv(row_dir / "ahr.csv", result.ahr)
        pipeline.write_missingness_json(row_dir / "missingness.json", result.missingness)
        pooled_missing.append(result.missingness)
        for kind in ("ihr", "ahr"):
            series = getattr(result, kind)
            pairs = evaluation.align(series, truth[kind], tolerance[kind])
            pooled_pairs[kind].extend(pairs)
            meta = _pairing_meta(tolerance[kind], len(series), len(truth[kind]), len(pairs))
            if pairs:
                report = evaluation.metrics(
                    pairs, missingness=result.missingness, group_keys=group_keys
                )
                row_reports[kind].append(report)
                evaluation.write_report_json(row_dir / f"report_{kind}.json", report, meta)
            else:
                print(f"warning: row {idx} produced no {kind} pairs", file=sys.stderr)
                _write_json(
                    row_dir / f"report_{kind}.json",
                    _empty_report_dict(group_keys, result.missingness, meta),
                )
            evaluation.write_bland_altman_csv(
                row_dir / f"bland_altman_{kind}.csv",
                evaluation.metrics(pairs).bland_altman if pairs else (),
            )

    overall_missing = pipeline.sum_missingness(pooled_missing) if pooled_missing else None
    run_meta = {
        "rows_total": len(manifest.rows),
        "rows_skipped_no_truth": skipped,
    }
    for kind in ("ihr", "ahr"):
        pairs = pooled_pairs[kind]
        if pairs:
            overall = evaluation.metrics(pairs, missingness=overall_missing)
            evaluation.write_report_json(out / f"overall_{kind}.json", overall, run_meta)
            evaluation.write_bland_altman_csv(
                out / f"bland_altman_{kind}.csv", overall.bland_altman
            )
        else:
            _write_json(
                out / f"overall_{kind}.json",
                _empty_report_dict(None, overall_missing, run_meta),
            )
            evaluation.write_bland_altman_csv(out / f"bland_altman_{kind}.csv", ())
        for key in ("participant", "day"):
            if row_reports[kind]:
                grouped = evaluation.aggregate(row_reports[kind], key)
                payload = {
                    rep.group_keys[key]: evaluation.report_as_dict(rep) for rep in grouped
                }
            else:
                payload = {}
            _write_json(out / f"by_{key}_{kind}.json", payload)
    _write_json(out / "effective_config.json", dataclasses.asdict(config))
    return 0


def _cmd_synth(args) -> int:
    spec = synth.load_synth_spec(args.spec)
    if args.seed is not None:
        spec = dataclasses.replace(spec, rng_seed=args.seed)
    output = synth.synthesize(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_wav(out / "audio.wav", output.audio, fmt="float32")
    evaluation.write_rpeaks(out / "true_beats.csv", output.true_beat_times_s)
    pipeline.write_hr_csv(out / "true_hr.csv", output.true_hr)
    _write_json(out / "effective_synth_spec.json", synth.spec_as_dict(spec))
    return 0


def _cmd_selftest(args) -> int:
    results = selftest.run_checks()
    failures = 0
    for res in results:
        state = "PASS" if res.passed else "FAIL"
        failures += 0 if res.passed else 1
        print(f"{state}: {res.name} ({res.detail})")
    if failures:
        print(f"{failures} of {len(results)} checks failed", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abshr",
        description="Heart-rate extraction from abdominal audio recordings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="run the estimator on one WAV file")
    p.add_argument("audio", help="mono WAV (PCM16 or float32)")
    p.add_argument("--config", help="JSON/TOML pipeline config", default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel window workers")

    e = sub.add_parser("evaluate", help="score recordings against ECG R peaks")
    e.add_argument("manifest", help="CSV of audio_file,rpeak_file,participant,day")
    e.add_argument("--config", help="JSON/TOML pipeline config", default=None)
    e.add_argument("--out", required=True, help="output directory")
    e.add_argument("--jobs", type=int, default=1, help="parallel window workers")

    s = sub.add_parser("synth", help="generate a synthetic recording with ground truth")
    s.add_argument("spec", help="JSON/TOML synthesis spec")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, default=None, help="override the spec's rng_seed")

    sub.add_parser("selftest", help="run the embedded invariant checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    handlers = {
        "process": _cmd_process,
        "evaluate": _cmd_evaluate,
        "synth": _cmd_synth,
        "selftest": _cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
