"""Command line front end: generate, validate, replace, consequence, data."""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .consequence import derive_consequence
from .datagen import NoiseSpec, apply_noise, gen_biased_system_data, gen_consequence_data
from .dataset_io import read_bundle, write_bundle
from .errors import ConfigError, ExhaustedAttempts, TheoryGenError
from .generator import admissible_replacement_indices, gen_replacement_axiom
from .pipeline import (
    DISCARDS,
    RunConfig,
    _mismatch_ok,
    cell_dictionaries,
    derive_seed,
    find_bundles,
    generate_run,
    parse_config,
    parse_grid,
    settings_from_meta,
    validate_bundle,
)

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3

log = logging.getLogger("theorygen")


def _levels(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"bad noise level list {text!r}") from None


def _families(text: str) -> tuple:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def build_run_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg = parse_config(text, args.config)
    s = cfg.settings
    if args.points is not None:
        s = replace(s, points=args.points)
    if args.noise is not None:
        s = replace(s, consequence_noise=_levels(args.noise))
    if args.system_noise is not None:
        s = replace(s, system_noise=_levels(args.system_noise))
    if args.noise_families is not None:
        s = replace(s, noise_families=_families(args.noise_families))
    if args.dims is not None:
        s = replace(s, gen=replace(s.gen, dimensional_mode=args.dims))
    cfg = replace(cfg, settings=s)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    if args.jobs is not None:
        cfg = replace(cfg, jobs=args.jobs)
    if args.grid is not None:
        cfg = replace(cfg, cells=parse_grid(args.grid))
    if args.systems_per_config is not None:
        cfg = replace(cfg, systems_per_config=args.systems_per_config)
    if args.families is not None:
        cfg = replace(cfg, families=_families(args.families))
    if args.symbols is not None:
        cfg = replace(cfg, symbols=args.symbols)
    if cfg.seed is None:
        raise ConfigError("a seed is required (--seed or 'seed =' in the config)")
    return cfg


def cmd_generate(args) -> int:
    cfg = build_run_config(args)
    outcomes = generate_run(cfg)
    ok = sum(o.status == "ok" for o in outcomes)
    discarded = sum(sum(o.discards.values()) for o in outcomes)
    print(f"generated {ok}/{len(outcomes)} systems ({discarded} discarded) under {cfg.out}")
    return EXIT_OK if ok == len(outcomes) else EXIT_BUDGET


def cmd_validate(args) -> int:
    bundles = find_bundles(args.root)
    if not bundles:
        print(f"no bundles under {args.root}", file=sys.stderr)
        return EXIT_VALIDATION
    report = []
    failed = False
    for path in bundles:
        try:
            checks = validate_bundle(path)
        except TheoryGenError as exc:
            checks = None
            report.append({"bundle": str(path), "check": "read", "ok": False, "detail": str(exc)})
            failed = True
        for c in checks or ():
            report.append({"bundle": str(path), "check": c.check, "ok": bool(c.ok), "detail": c.detail})
            failed |= not c.ok
    if args.json:
        print(json.dumps(report, indent=1))
    else:
        for r in report:
            print(f"{'PASS' if r['ok'] else 'FAIL'}\t{r['bundle']}\t{r['check']}\t{r['detail']}")
    return EXIT_VALIDATION if failed else EXIT_OK


def _bundle_context(path):
    b = read_bundle(path)
    settings = settings_from_meta(b.meta)
    dicts = cell_dictionaries(b.system.table, settings.gen, int(b.meta.get("dict_seed", 0)))
    return b, settings, dicts


def cmd_replace(args) -> int:
    b, settings, dicts = _bundle_context(args.bundle)
    system = b.system
    choices = system.replaceable_indices()
    targets = admissible_replacement_indices(system, b.consequence.poly) or choices
    seed = args.seed if args.seed is not None else derive_seed(b.meta.get("seed"), "replace", len(b.replacements))
    rng = random.Random(seed)
    if args.index is not None and args.index not in choices:
        print(f"axiom index must be one of {choices}", file=sys.stderr)
        return EXIT_CONFIG
    gcfg = replace(settings.gen, seed=seed)
    sdata = b.system_data.get(None)
    for _ in range(settings.replacement_tries):
        idx = args.index if args.index is not None else rng.choice(targets)
        try:
            eq, new = gen_replacement_axiom(system, idx, gcfg, dicts, rng, consequence=b.consequence.poly)
        except ExhaustedAttempts:
            continue
        if sdata is not None and not _mismatch_ok(eq, sdata, system.table):
            continue
        b.replacements.append((idx, eq, new))
        b.meta[f"manual_replacement.{len(b.replacements)}"] = str(seed)
        write_bundle(b, args.bundle, overwrite=True)
        print(f"replacement_{len(b.replacements)}.txt: axiom {idx} -> {eq}")
        return EXIT_OK
    print("no admissible replacement found", file=sys.stderr)
    return EXIT_BUDGET


def cmd_consequence(args) -> int:
    b, settings, _ = _bundle_context(args.bundle)
    seed = args.seed if args.seed is not None else int(b.meta.get("seed", 0))
    try:
        q = derive_consequence(b.system, settings.cons, random.Random(seed))
    except DISCARDS as exc:
        print(f"no consequence: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    names = q.measured.names(b.system.table)
    print(q.polynomial)
    for k, v in names.items():
        print(f"{k}: {','.join(v)}")
    return EXIT_OK


def cmd_data(args) -> int:
    b, settings, _ = _bundle_context(args.bundle)
    if args.points is not None:
        settings = replace(settings, points=args.points)
    if args.noise is not None:
        settings = replace(settings, consequence_noise=_levels(args.noise))
    seed = args.seed if args.seed is not None else derive_seed(b.meta.get("seed"), "data")
    nrng = np.random.default_rng(seed)
    try:
        cdata = gen_consequence_data(b.consequence, points=settings.points, rng=nrng)
        sdata = gen_biased_system_data(b.system, settings.points, nrng)
    except DISCARDS as exc:
        print(f"data generation failed: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    b.consequence_data = {None: cdata}
    b.system_data = {None: sdata}
    for fam in settings.noise_families:
        for eps in settings.consequence_noise:
            b.consequence_data[NoiseSpec(fam, eps)] = apply_noise(
                cdata, NoiseSpec(fam, eps), settings.consequence_noise_mode, nrng)
        for eps in settings.system_noise:
            b.system_data[NoiseSpec(fam, eps)] = apply_noise(sdata, NoiseSpec(fam, eps), "all-columns", nrng)
    b.meta.update(data_seed=str(seed), points=str(settings.points))
    root = Path(args.bundle)
    for old in root.glob("*.dat"):
        old.unlink()
    write_bundle(b, root, overwrite=True)
    print(f"rewrote data for {root} ({settings.points} rows)")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="theorygen", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a dataset tree")
    g.add_argument("--config")
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.add_argument("--jobs", type=int)
    g.add_argument("--grid", help="cells as V:D:E or V:D:C:E, comma separated")
    g.add_argument("--points", type=int)
    g.add_argument("--noise", help="consequence noise levels, comma separated")
    g.add_argument("--system-noise", help="system data noise levels, comma separated")
    g.add_argument("--noise-families", help="gaussian,exponential,lognormal")
    g.add_argument("--families", help="symbol families: plain,trig")
    g.add_argument("--symbols", help="symbol specification file")
    g.add_argument("--dims", dest="dims", action="store_true", default=None)
    g.add_argument("--no-dims", dest="dims", action="store_false")
    g.add_argument("--systems-per-config", type=int)
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="re-check every bundle under a directory")
    v.add_argument("root")
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("replace", help="add a replacement axiom to a bundle")
    r.add_argument("bundle")
    r.add_argument("--index", type=int)
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_replace)

    c = sub.add_parser("consequence", help="re-derive a consequence for a bundle's axioms")
    c.add_argument("bundle")
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_consequence)

    d = sub.add_parser("data", help="regenerate the data files of a bundle")
    d.add_argument("bundle")
    d.add_argument("--seed", type=int)
    d.add_argument("--points", type=int)
    d.add_argument("--noise")
    d.set_defaults(func=cmd_data)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TheoryGenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET if isinstance(exc, DISCARDS) else EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
