"""Run configuration, per-system bundle construction, regeneration and validation."""

from __future__ import annotations

import hashlib
import itertools
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from ._kv import format_value, parse_lines, parse_value
from .consequence import ConsequenceConfig, derive_consequence, verify_consequence
from .datagen import (
    CONSEQUENCE_LEVELS,
    FAMILIES,
    SYSTEM_LEVELS,
    CompiledPoly,
    NoiseSpec,
    apply_noise,
    exponential_rate,
    gen_biased_system_data,
    gen_consequence_data,
    induced_ode,
    lognormal_shape,
)
from .dataset_io import (
    MANIFEST,
    TheoryBundle,
    bundle_dirname,
    file_digest,
    provenance_meta,
    read_bundle,
    write_bundle,
)
from .errors import (
    BudgetExceeded,
    ConfigError,
    ExhaustedAttempts,
    Inconsistent,
    NoRealSolutionInRegion,
    Rejected,
    TheoryGenError,
)
from .generator import (
    Dictionaries,
    GeneratorConfig,
    admissible_replacement_indices,
    build_dictionaries,
    gen_replacement_axiom,
    gen_system,
    is_homogeneous,
)
from .groebner import Budget, buchberger, is_consistent, normal_form
from .polynomial import BlockLexOrder
from .symbols import SymbolKind, SymbolTable, build_symbol_table, parse_symbol_specs

log = logging.getLogger(__name__)

__all__ = [
    "Cell",
    "RunConfig",
    "parse_config",
    "load_symbols",
    "derive_seed",
    "cell_table",
    "BuildSettings",
    "build_bundle",
    "generate_cell_system",
    "generate_run",
    "regenerate_bundle",
    "validate_bundle",
    "find_bundles",
    "CheckResult",
    "DISCARDS",
]

FAMILIES_SYMBOLS = ("plain", "trig")
DISCARDS = (Inconsistent, Rejected, NoRealSolutionInRegion, BudgetExceeded, ExhaustedAttempts)
MISMATCH_FACTOR = 10.0
CLEAN_BOUND = 1e-6
ODE_BOUND = 1e-4
NOISE_TOL = 0.1


@dataclass(frozen=True)
class Cell:
    num_vars: int
    num_derivs: int
    num_consts: int
    num_eqns: int

    @property
    def dirname(self) -> str:
        return bundle_dirname(self.num_vars, self.num_derivs, self.num_eqns)

    def key(self) -> str:
        return f"{self.num_vars}:{self.num_derivs}:{self.num_consts}:{self.num_eqns}"


@dataclass(frozen=True)
class BuildSettings:
    """Everything besides the seed that shapes one bundle."""

    gen: GeneratorConfig = GeneratorConfig()
    cons: ConsequenceConfig = ConsequenceConfig()
    points: int = 1000
    consequence_noise: tuple = CONSEQUENCE_LEVELS
    system_noise: tuple = SYSTEM_LEVELS
    noise_families: tuple = ("gaussian",)
    consequence_noise_mode: str = "all-columns"
    replacements: int = 5
    replacement_tries: int = 10


@dataclass
class RunConfig:
    symbols: str | None = None
    grid_vars: tuple = (6, 7, 8, 9)
    grid_derivs: tuple = (2, 3, 4)
    grid_consts: tuple = (2,)
    grid_eqns: tuple = (4, 5, 6)
    cells: tuple | None = None
    families: tuple = FAMILIES_SYMBOLS
    systems_per_config: int = 3
    seed: int | None = None
    out: str = "dataset"
    jobs: int = 1
    max_attempts: int = 40
    settings: BuildSettings = field(default_factory=BuildSettings)

    def grid(self) -> list[Cell]:
        if self.cells is not None:
            return list(self.cells)
        return [Cell(v, d, c, e) for v, d, c, e in
                itertools.product(self.grid_vars, self.grid_derivs, self.grid_consts, self.grid_eqns)]


_RUN_KEYS = {
    "symbols", "grid_vars", "grid_derivs", "grid_consts", "grid_eqns", "families",
    "systems_per_config", "seed", "out", "jobs", "max_attempts",
}
_SETTING_KEYS = {f.name for f in fields(BuildSettings)} - {"gen", "cons"}


def _as_tuple(v):
    return v if isinstance(v, tuple) else (v,)


def _coerce(value, like):
    if isinstance(like, tuple):
        return tuple(_as_tuple(value))
    if isinstance(like, bool):
        if not isinstance(value, bool):
            raise ValueError(f"expected true/false, got {value!r}")
        return value
    if isinstance(like, int):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValueError(f"expected an integer, got {value!r}")
        return value
    if isinstance(like, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"expected a number, got {value!r}")
        return float(value)
    return value


def parse_grid(text: str) -> tuple:
    """``V:D:E`` or ``V:D:C:E`` items separated by commas (constants default to 2)."""
    cells = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        parts = item.split(":")
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise ConfigError(f"bad grid cell {item!r}") from None
        if len(nums) == 3:
            cells.append(Cell(nums[0], nums[1], 2, nums[2]))
        elif len(nums) == 4:
            cells.append(Cell(*nums))
        else:
            raise ConfigError(f"bad grid cell {item!r}; use V:D:E or V:D:C:E")
    if not cells:
        raise ConfigError("empty grid")
    return tuple(cells)


def parse_config(text: str, path=None, base: RunConfig | None = None) -> RunConfig:
    """``key = value`` lines; ``gen.*`` and ``cons.*`` override the generator and filters."""
    cfg = base or RunConfig()
    gen, cons, settings = {}, {}, {}
    run = {}
    try:
        items = parse_lines(text, "=", path)
    except TheoryGenError as exc:
        raise ConfigError(str(exc)) from None
    for key, raw, lineno in items:
        try:
            value = parse_value(raw)
            if key.startswith("gen."):
                name = key[4:]
                like = getattr(GeneratorConfig(), name)
                gen[name] = _coerce(value, like)
            elif key.startswith("cons."):
                name = key[5:]
                like = getattr(ConsequenceConfig(), name)
                cons[name] = _coerce(value, like)
            elif key in _SETTING_KEYS:
                settings[key] = _coerce(value, getattr(BuildSettings(), key))
            elif key == "grid":
                run["cells"] = parse_grid(raw)
            elif key in _RUN_KEYS:
                like = getattr(RunConfig(), key)
                if key in ("symbols", "out"):
                    run[key] = str(value)
                elif key == "seed":
                    run[key] = _coerce(value, 0)
                else:
                    run[key] = _coerce(value, like)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except AttributeError:
            raise ConfigError(f"{path or '<config>'}:{lineno}: unknown key {key!r}") from None
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{path or '<config>'}:{lineno}: {key}: {exc}") from None
    try:
        s = cfg.settings
        s = replace(s, gen=replace(s.gen, **gen), cons=replace(s.cons, **cons), **settings)
        cfg = replace(cfg, settings=s, **run)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    check_run_config(cfg)
    return cfg


def check_run_config(cfg: RunConfig):
    if not cfg.grid():
        raise ConfigError("grid is empty")
    for fam in cfg.families:
        if fam not in FAMILIES_SYMBOLS:
            raise ConfigError(f"unknown symbol family {fam!r}")
    for fam in cfg.settings.noise_families:
        if fam not in FAMILIES:
            raise ConfigError(f"unknown noise family {fam!r}")
    for eps in cfg.settings.consequence_noise + cfg.settings.system_noise:
        if not 0 < eps <= 1:
            raise ConfigError(f"noise level {eps} outside (0, 1]")
    if cfg.systems_per_config < 1 or cfg.jobs < 1 or cfg.settings.points < 1:
        raise ConfigError("systems_per_config, jobs and points must be positive")


def load_symbols(path=None) -> SymbolTable:
    if path is None:
        text = resources.files("theorygen").joinpath("data/default_symbols.txt").read_text()
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read symbol file {path}: {exc}") from None
    return build_symbol_table(parse_symbol_specs(text, path))


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from any tuple of printable parts."""
    digest = hashlib.sha256(repr(parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def cell_table(full: SymbolTable, cell: Cell, family: str) -> SymbolTable:
    """First variables, derivatives and constants of the full table, plus theta for ``trig``."""
    plain = [full[i].name for i in full.ids_of(SymbolKind.VARIABLE)]
    derivs = [full[i].name for i in full.derivatives()]
    consts = [full[i].name for i in full.constants()]
    if cell.num_vars > len(plain) or cell.num_derivs > len(derivs) or cell.num_consts > len(consts):
        raise ConfigError(f"symbol file too small for cell {cell.key()}")
    names = plain[:cell.num_vars] + derivs[:cell.num_derivs] + consts[:cell.num_consts]
    if family == "trig":
        names += [full[i].name for i in full.ids_of(SymbolKind.THETA_AUX)]
    return full.subtable(names)


# ---------------------------------------------------------------------------
# one bundle


def _mismatch_ok(eq, data, table) -> bool:
    V = data.matrix_for(table)
    res = CompiledPoly(eq.poly).relative_residual(V)
    return bool(np.mean(res > MISMATCH_FACTOR * CLEAN_BOUND) >= 0.99)


def build_bundle(table: SymbolTable, num_eqns: int, settings: BuildSettings, dicts: Dictionaries,
                 seed: int, meta: dict | None = None) -> TheoryBundle:
    """Axioms, consequence, data and replacements from one seed, or a discard exception."""
    rng = random.Random(seed)
    nrng = np.random.default_rng(seed)
    gcfg = replace(settings.gen, seed=seed)
    system = gen_system(gcfg, table, num_eqns, dicts, rng)
    q = derive_consequence(system, settings.cons, rng, system_id=seed)
    cdata = gen_consequence_data(q, points=settings.points, rng=nrng)
    sdata = gen_biased_system_data(system, settings.points, nrng, Budget(settings.gen.gb_step_budget))

    replacements = []
    seen = set()
    targets = admissible_replacement_indices(system, q.poly, Budget(settings.gen.gb_step_budget))
    if not targets:
        raise ExhaustedAttempts("no axiom can be replaced without keeping the consequence provable")
    for _ in range(settings.replacements):
        for _try in range(settings.replacement_tries):
            idx = rng.choice(targets)
            try:
                eq, new = gen_replacement_axiom(system, idx, gcfg, dicts, rng, consequence=q.poly)
            except ExhaustedAttempts:
                continue
            if (idx, eq) in seen or not _mismatch_ok(eq, sdata, table):
                continue
            seen.add((idx, eq))
            replacements.append((idx, eq, new))
            break
        else:
            raise ExhaustedAttempts("could not find enough admissible replacement axioms")

    cons_data = {None: cdata}
    sys_data = {None: sdata}
    for fam in settings.noise_families:
        for eps in settings.consequence_noise:
            spec = NoiseSpec(fam, eps)
            cons_data[spec] = apply_noise(cdata, spec, settings.consequence_noise_mode, nrng)
        for eps in settings.system_noise:
            spec = NoiseSpec(fam, eps)
            sys_data[spec] = apply_noise(sdata, spec, "all-columns", nrng)

    full_meta = dict(meta or {})
    full_meta["seed"] = str(seed)
    full_meta["consequence_attempt"] = str(q.provenance[1])
    full_meta["elimination_order"] = ",".join(q.provenance[2])
    return TheoryBundle(system, q, replacements, cons_data, sys_data, full_meta)


def settings_meta(settings: BuildSettings) -> dict:
    meta = {}
    for f in fields(BuildSettings):
        if f.name in ("gen", "cons"):
            continue
        meta[f.name] = format_value(getattr(settings, f.name))
    for f in fields(GeneratorConfig):
        if f.name != "seed":
            meta[f"gen.{f.name}"] = format_value(getattr(settings.gen, f.name))
    for f in fields(ConsequenceConfig):
        meta[f"cons.{f.name}"] = format_value(getattr(settings.cons, f.name))
    return meta


def settings_from_meta(meta: dict) -> BuildSettings:
    base = BuildSettings()
    gen, cons, top = {}, {}, {}
    for k, v in meta.items():
        if k.startswith("gen."):
            gen[k[4:]] = _coerce(parse_value(v), getattr(base.gen, k[4:]))
        elif k.startswith("cons."):
            cons[k[5:]] = _coerce(parse_value(v), getattr(base.cons, k[5:]))
        elif k in _SETTING_KEYS:
            top[k] = _coerce(parse_value(v), getattr(base, k))
    return replace(base, gen=replace(base.gen, **gen), cons=replace(base.cons, **cons), **top)


def config_digest(meta: dict) -> str:
    body = "".join(f"{k}={v}\n" for k, v in sorted(meta.items()))
    return hashlib.sha256(body.encode()).hexdigest()[:16]


_DICT_CACHE: dict = {}


def cell_dictionaries(table: SymbolTable, gen: GeneratorConfig, dict_seed: int) -> Dictionaries:
    key = (table, replace(gen, seed=0), dict_seed)
    if key not in _DICT_CACHE:
        _DICT_CACHE[key] = build_dictionaries(gen, table, dict_seed)
    return _DICT_CACHE[key]


@dataclass
class SystemOutcome:
    family: str
    cell: Cell
    index: int
    status: str
    attempts: int
    discards: dict
    path: str | None = None


def generate_cell_system(full: SymbolTable, cfg: RunConfig, family: str, cell: Cell, index: int,
                         write: bool = True) -> tuple[SystemOutcome, TheoryBundle | None]:
    """Resample (with fresh derived seeds) until a bundle is produced or the budget runs out."""
    table = cell_table(full, cell, family)
    s = cfg.settings
    dict_seed = derive_seed(cfg.seed, family, cell.key(), "dictionaries")
    dicts = cell_dictionaries(table, s.gen, dict_seed)
    base_meta = {
        "generator_version": __version__,
        "master_seed": str(cfg.seed),
        "family": family,
        "cell": cell.key(),
        "system_index": str(index),
        "dict_seed": str(dict_seed),
    }
    base_meta.update(settings_meta(s))
    discards: dict[str, int] = {}
    for attempt in range(cfg.max_attempts):
        seed = derive_seed(cfg.seed, family, cell.key(), index, attempt)
        meta = dict(base_meta, attempt=str(attempt))
        meta["config_digest"] = config_digest(meta)
        try:
            bundle = build_bundle(table, cell.num_eqns, s, dicts, seed, meta)
        except DISCARDS as exc:
            name = type(exc).__name__
            discards[name] = discards.get(name, 0) + 1
            log.debug("discarded %s/%s/%d attempt %d: %s", family, cell.key(), index, attempt, exc)
            continue
        path = None
        if write:
            path = Path(cfg.out) / family / cell.dirname / f"system_{index + 1}"
            write_bundle(bundle, path, overwrite=True)
            path = str(path)
        return SystemOutcome(family, cell, index, "ok", attempt + 1, discards, path), bundle
    return SystemOutcome(family, cell, index, "exhausted", cfg.max_attempts, discards), None


def _task(args):
    full, cfg, family, cell, index = args
    outcome, _ = generate_cell_system(full, cfg, family, cell, index)
    return outcome


def generate_run(cfg: RunConfig) -> list[SystemOutcome]:
    """Generate every (family, cell, system) and write a run manifest."""
    if cfg.seed is None:
        raise ConfigError("a seed is required")
    check_run_config(cfg)
    full = load_symbols(cfg.symbols)
    tasks = [(full, cfg, fam, cell, i)
             for fam in cfg.families for cell in cfg.grid() for i in range(cfg.systems_per_config)]
    if cfg.jobs == 1:
        outcomes = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_task, tasks))
    write_run_manifest(cfg, outcomes)
    return outcomes


def write_run_manifest(cfg: RunConfig, outcomes):
    root = Path(cfg.out)
    root.mkdir(parents=True, exist_ok=True)
    lines = [f"# master_seed: {cfg.seed}", "# family cell system status attempted emitted discarded reasons"]
    for o in outcomes:
        emitted = 1 if o.status == "ok" else 0
        reasons = ",".join(f"{k}={v}" for k, v in sorted(o.discards.items())) or "-"
        lines.append(f"{o.family} {o.cell.key()} {o.index + 1} {o.status} {o.attempts} {emitted} "
                     f"{o.attempts - emitted} {reasons}")
    for o in outcomes:
        if o.path:
            rel = Path(o.path).relative_to(root)
            lines.append(f"bundle {rel} {file_digest(Path(o.path) / MANIFEST)}")
    (root / "run_manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# regeneration and validation


def regenerate_bundle(meta: dict, table: SymbolTable) -> TheoryBundle:
    """Rebuild a bundle from its meta provenance alone."""
    settings = settings_from_meta(meta)
    v, d, c, e = (int(x) for x in meta["cell"].split(":"))
    dicts = cell_dictionaries(table, settings.gen, int(meta["dict_seed"]))
    keep = {k: v for k, v in provenance_meta(meta).items()
            if k not in ("seed", "consequence_attempt", "elimination_order")}
    return build_bundle(table, e, settings, dicts, int(meta["seed"]), keep)


@dataclass
class CheckResult:
    check: str
    ok: bool
    detail: str = ""


def _residual_check(name, data, polys, table, bound):
    V = data.matrix_for(table)
    worst, where = 0.0, None
    for p in polys:
        res = CompiledPoly(p).relative_residual(V)
        res = np.where(np.isnan(res), np.inf, res)
        k = int(np.argmax(res))
        if res[k] > worst:
            worst, where = float(res[k]), k
    if worst < bound:
        return CheckResult(name, True, f"max residual {worst:.2e}")
    return CheckResult(name, False, f"row {where + 1}: residual {worst:.2e} exceeds {bound:.0e}")


def expected_noise_sd(family: str, sigma: float) -> float:
    """Standard deviation of the injected noise under the implemented scaling."""
    if family == "gaussian":
        return sigma
    if family == "exponential":
        return np.sqrt(2.0) / exponential_rate(sigma)
    s = lognormal_shape(sigma)
    return float(np.exp(s * s))  # sqrt(E[X^2]) for a symmetric-sign log-normal


def noise_tolerance(diff: np.ndarray) -> float:
    """Allowed relative error of the sample sd of ``diff``.

    10% when rows are plentiful; with few rows (or heavy tails) the bound
    widens to four standard errors of the sample sd, whose relative standard
    error is sqrt((kurtosis - 1) / (4 n)).
    """
    d = diff - diff.mean()
    m2 = float(np.mean(d**2))
    kurt = float(np.mean(d**4)) / m2**2 if m2 > 0 else 3.0
    return max(NOISE_TOL, 4.0 * np.sqrt(max(kurt - 1.0, 0.0) / (4 * len(diff))))


def validate_bundle(path) -> list[CheckResult]:
    b = read_bundle(path)
    table = b.system.table
    out = []
    G = buchberger(b.system.polys(), BlockLexOrder.lex(table))
    out.append(CheckResult("consistency", is_consistent(G)))
    out.append(CheckResult("consequence_membership", verify_consequence(b.system, b.consequence, G)))
    dims = str(b.meta.get("gen.dimensional_mode", "true")) == "true"
    if dims:
        bad = [i for i, a in enumerate(b.system.axioms) if not is_homogeneous(a)]
        out.append(CheckResult("dimensional_homogeneity", not bad, f"axioms {bad}" if bad else ""))
    for k, (idx, eq, new) in enumerate(b.replacements, 1):
        name = f"replacement_{k}.txt"
        Gn = buchberger(new.polys(), BlockLexOrder.lex(table))
        ok = is_consistent(Gn) and not normal_form(b.consequence.poly, Gn).is_zero()
        ok = ok and not normal_form(eq.poly, G).is_zero()
        out.append(CheckResult(f"{name} non_membership", ok))
        sdata = b.system_data.get(None)
        if sdata is not None:
            out.append(CheckResult(f"{name} mismatch", bool(_mismatch_ok(eq, sdata, table))))
    cdata = b.consequence_data.get(None)
    if cdata is not None:
        bound = ODE_BOUND if induced_ode(b.consequence) is not None else CLEAN_BOUND
        out.append(_residual_check("consequence.dat residual", cdata, [b.consequence.poly], table, bound))
    sdata = b.system_data.get(None)
    if sdata is not None:
        out.append(_residual_check("system.dat residual", sdata, b.system.polys(), table, CLEAN_BOUND))
    for prefix, datasets in (("consequence", b.consequence_data), ("system", b.system_data)):
        clean = datasets.get(None)
        for spec, noisy in datasets.items():
            if spec is None or clean is None:
                continue
            worst = 0.0
            for j, role in enumerate(clean.roles):
                diff = noisy.values[:, j] - clean.values[:, j]
                sigma = spec.epsilon * abs(float(np.mean(clean.values[:, j])))
                if not diff.any() or sigma == 0:
                    continue
                err = abs(float(np.std(diff)) / expected_noise_sd(spec.family, sigma) - 1)
                worst = max(worst, err / noise_tolerance(diff))
            out.append(CheckResult(f"{prefix} noise {spec.family} {spec.epsilon:g}", worst <= 1.0,
                                   f"worst sd error {worst:.2f} of tolerance"))
    return out


def find_bundles(root) -> list[Path]:
    root = Path(root)
    if (root / "meta.txt").is_file():
        return [root]
    return sorted(p.parent for p in root.rglob("meta.txt"))
