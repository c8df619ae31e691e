"""Command-line pipeline driver.

One subcommand per stage: ingest scans, extract signals, compare, analyze,
bundle, serve. `synth` generates a demo dataset so the whole chain can run
without real scans.
"""

import argparse
import json
import re
import sys
from pathlib import Path

from . import backend
from .analyze import analyze_set
from .bundle import (BundleError, analysis_from_json, analysis_json,
                     bounds_json, build_bundle, crosscut_json,
                     land_entries_json, land_record_from_json,
                     matrix_from_json, profile_json, score_from_json,
                     signal_json, thumbnail_json, write_bundle)
from .compare import (N_LANDS, Bullet, ComparisonSet, LagSearchParams,
                      compare_set)
from .config import load_config
from .scan_io import (ManifestRow, ScanFormatError, ScanMeta, ScanRecord,
                      downsample, ingest, read_manifest, read_scan, validate,
                      write_grid_csv, write_manifest)
from .server import DEFAULT_BIND, DEFAULT_PORT, serve
from .signal import (InsufficientDataError, LoessParams, CrosscutResult,
                     detect_grooves, extract_profile, extract_signal,
                     select_crosscut)
from .synthetic import make_scan_set


def _load_records(signals_dir: Path) -> list:
    records = []
    for path in sorted(Path(signals_dir).glob("*.json")):
        if path.name == "flags_report.json":
            continue
        with open(path, encoding="utf-8") as fh:
            records.append(land_record_from_json(json.load(fh)))
    if not records:
        raise SystemExit(f"no signal records found in {signals_dir}")
    records.sort(key=lambda r: (r.barrel_id, r.shot_number, r.land_index))
    return records


def _records_to_bullets(records: list) -> list:
    grouped: dict = {}
    order = []
    for rec in records:
        if rec.bullet_id not in grouped:
            grouped[rec.bullet_id] = {"barrel_id": rec.barrel_id,
                                      "shot_number": rec.shot_number,
                                      "lands": [None] * N_LANDS}
            order.append(rec.bullet_id)
        if not rec.excluded and rec.signal is not None:
            grouped[rec.bullet_id]["lands"][rec.land_index - 1] = rec.signal
    bullets = []
    for bid in order:
        info = grouped[bid]
        if all(land is None for land in info["lands"]):
            print(f"skipping {bid}: no usable lands", file=sys.stderr)
            continue
        bullets.append(Bullet(bullet_id=bid, lands=info["lands"],
                              barrel_id=info["barrel_id"],
                              shot_number=info["shot_number"]))
    return bullets


def _shot_numbers_from_ids(bullet_ids: list) -> dict:
    shots = {}
    for bid in bullet_ids:
        match = re.search(r"(\d+)$", bid)
        if not match:
            raise SystemExit(
                f"cannot derive a shot number from bullet id {bid!r}")
        shots[bid] = int(match.group(1))
    return shots


def _scores_to_set(score_entries: list) -> ComparisonSet:
    order: list = []
    for entry in score_entries:
        for bid in (entry["bullet1"], entry["bullet2"]):
            if bid not in order:
                order.append(bid)
    scores, matrices = {}, {}
    for entry in score_entries:
        key = (entry["bullet1"], entry["bullet2"])
        scores[key] = score_from_json(entry, *key)
        if "land_entries" in entry:
            matrices[key] = matrix_from_json(entry["land_entries"], *key)
    return ComparisonSet(bullet_ids=order, bullets={}, scores=scores,
                         matrices=matrices)


def cmd_ingest(args) -> int:
    cfg = load_config(args.config)
    rows = read_manifest(args.manifest)
    records = ingest(args.dir, rows, cfg.scan)
    n_ok = 0
    for row, rec in zip(rows, records):
        if rec.excluded:
            print(f"{row.path}: EXCLUDED ({rec.reason})")
            row.excluded, row.reason = True, rec.reason
        else:
            fld = rec.field
            print(f"{row.path}: ok {fld.n_rows}x{fld.n_cols} "
                  f"measured {fld.measured_fraction:.3f}")
            n_ok += 1
    print(f"{n_ok}/{len(rows)} scans usable")
    if args.out:
        write_manifest(rows, args.out)
        print(f"updated manifest written to {args.out}")
    return 0


def cmd_signal(args) -> int:
    cfg = load_config(args.config)
    rows = read_manifest(args.manifest)
    scan_dir = Path(args.manifest).resolve().parent
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    detrend = LoessParams(span=cfg.detrend.span, degree=cfg.detrend.degree,
                          robust_iterations=cfg.detrend.robust_iterations)
    flags: dict = {"fallback_crosscut": [], "manual_crosscut": [],
                   "missing_left_shoulder": [], "missing_right_shoulder": [],
                   "excluded": []}

    for row in rows:
        name = f"{row.bullet_id}_land{row.land_index}"
        record = {"barrel_id": row.barrel_id, "shot_number": row.shot_number,
                  "land_index": row.land_index, "excluded": False,
                  "reason": "", "signal": None, "profile": None,
                  "bounds": None, "crosscut": None, "thumbnail": None,
                  "scan_meta": None}

        def exclude(reason: str):
            record["excluded"] = True
            record["reason"] = reason
            flags["excluded"].append({"scan": name, "reason": reason})

        if row.excluded:
            exclude(row.reason or "excluded by manifest")
        else:
            try:
                fld, extra = read_scan(scan_dir / row.path, cfg.scan)
            except (ScanFormatError, OSError) as exc:
                fld, extra = None, None
                exclude(f"unreadable scan: {exc}")
            if fld is not None:
                meta = ScanMeta(barrel_id=row.barrel_id,
                                shot_number=row.shot_number,
                                land_index=row.land_index,
                                source_path=str(scan_dir / row.path),
                                extra=extra)
                checked = validate(ScanRecord(meta, fld), cfg.scan)
                if checked.excluded:
                    exclude(checked.reason)
                else:
                    try:
                        if row.crosscut_y is not None:
                            crosscut = CrosscutResult(
                                y_location=row.crosscut_y,
                                row_index=int(round(row.crosscut_y / fld.y_inc)))
                            flags["manual_crosscut"].append(name)
                        else:
                            crosscut = select_crosscut(fld, cfg.crosscut)
                            if crosscut.fallback:
                                flags["fallback_crosscut"].append(name)
                        profile = extract_profile(fld, crosscut.y_location,
                                                  cfg.profile.band_halfwidth)
                        bounds = detect_grooves(profile, cfg.grooves)
                        if bounds.left_flagged:
                            flags["missing_left_shoulder"].append(name)
                        if bounds.right_flagged:
                            flags["missing_right_shoulder"].append(name)
                        sig = extract_signal(profile, bounds, detrend,
                                             meta=meta)
                        thumb = downsample(fld, cfg.bundle.thumbnail_factor)
                        record.update(
                            signal=signal_json(sig),
                            profile=profile_json(profile),
                            bounds=bounds_json(bounds),
                            crosscut=crosscut_json(crosscut),
                            thumbnail=thumbnail_json(thumb),
                            scan_meta={"source_path": meta.source_path,
                                       **{k: str(v)
                                          for k, v in (extra or {}).items()}})
                    except (InsufficientDataError, ValueError) as exc:
                        exclude(f"signal extraction failed: {exc}")

        with open(out_dir / f"{name}.json", "w", encoding="utf-8") as fh:
            json.dump(record, fh)

    with open(out_dir / "flags_report.json", "w", encoding="utf-8") as fh:
        json.dump(flags, fh, indent=2, sort_keys=True)
    n_bad = len(flags["excluded"])
    print(f"{len(rows) - n_bad}/{len(rows)} signals extracted to {out_dir} "
          f"({n_bad} excluded); flags in flags_report.json")
    return 0


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    records = _load_records(args.signals_dir)
    bullets = _records_to_bullets(records)
    if not bullets:
        raise SystemExit("no bullets with usable lands")
    params = LagSearchParams.from_config(cfg.compare)
    cset = compare_set(bullets, params,
                       min_in_phase_valid=cfg.compare.min_in_phase_valid,
                       workers=cfg.compare.workers)
    entries = []
    for i, a in enumerate(cset.bullet_ids):
        for b in cset.bullet_ids[i:]:
            score = cset.scores[(a, b)]
            entries.append({
                "bullet1": a, "bullet2": b, "phase": score.phase,
                "in_phase_avg": score.in_phase_avg,
                "out_phase_avg": score.out_phase_avg,
                "ccf_diff": score.ccf_diff,
                "unreliable_flag": score.unreliable,
                "n_in": score.n_in, "n_out": score.n_out,
                "partial": score.partial,
                "land_entries": land_entries_json(cset.matrices[(a, b)]),
            })
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(entries, fh)
    k = len(cset.bullet_ids)
    print(f"{len(entries)} scores ({k} bullets, backend {backend.backend_name()}) "
          f"written to {args.out}")
    return 0


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    with open(args.scores, encoding="utf-8") as fh:
        entries = json.load(fh)
    cset = _scores_to_set(entries)
    shots = _shot_numbers_from_ids(cset.bullet_ids)
    result = analyze_set(cset, shots, cfg.analyze)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(analysis_json(result), fh)
    n_flags = len(result.outliers.flags) if result.outliers else 0
    print(f"analysis written to {args.out} "
          f"({len(result.variogram_points)} variogram points, "
          f"{n_flags} outlier flags)")
    return 0


def cmd_bundle(args) -> int:
    cfg = load_config(args.config)
    records = _load_records(args.signals_dir)
    with open(args.scores, encoding="utf-8") as fh:
        cset = _scores_to_set(json.load(fh))
    with open(args.analysis, encoding="utf-8") as fh:
        analysis = analysis_from_json(json.load(fh))
    bundle = build_bundle(records, cset, analysis, cfg)
    write_bundle(bundle, args.out)
    size = Path(args.out).stat().st_size
    print(f"bundle written to {args.out} ({size / 1e6:.1f} MB, "
          f"{len(bundle.bullet_ids)} bullets)")
    return 0


def cmd_serve(args) -> int:
    try:
        serve(args.bundle, port=args.port, bind=args.bind,
              static_dir=args.static)
    except BundleError as exc:
        raise SystemExit(str(exc))
    return 0


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    barrel_ids = [chr(ord("A") + i) for i in range(args.barrels)]
    scans = make_scan_set(args.seed, barrel_ids, args.bullets,
                          noise_sigma=args.noise)
    rows = []
    for meta, fld in scans:
        name = (f"{meta['barrel_id']}{meta['shot_number']}"
                f"_land{meta['land_index']}.csv")
        write_grid_csv(fld, out_dir / name)
        rows.append(ManifestRow(path=name, barrel_id=meta["barrel_id"],
                                shot_number=meta["shot_number"],
                                land_index=meta["land_index"]))
    write_manifest(rows, out_dir / "manifest.csv")
    print(f"{len(rows)} synthetic scans written to {out_dir} "
          f"(manifest.csv included)")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="striae",
        description="Bullet land-engraved-area comparison pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read and validate scans in a manifest")
    p.add_argument("dir", help="directory containing the scan files")
    p.add_argument("--manifest", required=True, help="manifest CSV")
    p.add_argument("--config", default=None, help="configuration INI")
    p.add_argument("--out", default=None,
                   help="write an updated manifest with exclusions filled in")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("signal", help="extract 1D signals from scans")
    p.add_argument("manifest", help="manifest CSV (scan paths relative to it)")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_signal)

    p = sub.add_parser("compare", help="pairwise comparison of all bullets")
    p.add_argument("signals_dir", help="directory written by `signal`")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True, help="scores JSON file")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("analyze",
                       help="clustering, variogram, outliers over scores")
    p.add_argument("scores", help="scores JSON from `compare`")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True, help="analysis JSON file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bundle", help="assemble the single-file JSON bundle")
    p.add_argument("signals_dir")
    p.add_argument("scores")
    p.add_argument("analysis")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bundle)

    p = sub.add_parser("serve", help="serve a bundle over HTTP")
    p.add_argument("bundle")
    p.add_argument("--port", type=int, default=DEFAULT_PORT,
                   help=f"TCP port (default {DEFAULT_PORT}; "
                        "STRIAE_PORT overrides)")
    p.add_argument("--bind", default=DEFAULT_BIND,
                   help=f"bind address (default {DEFAULT_BIND}; "
                        "STRIAE_BIND overrides)")
    p.add_argument("--static", default=None,
                   help="directory of explorer UI assets served at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="generate a synthetic demo dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--barrels", type=int, default=2)
    p.add_argument("--bullets", type=int, default=2,
                   help="bullets per barrel")
    p.add_argument("--noise", type=float, default=0.05,
                   help="noise sigma as a fraction of striation amplitude")
    p.add_argument("--seed", type=int, default=20260819)
    p.set_defaults(func=cmd_synth)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
