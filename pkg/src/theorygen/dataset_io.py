"""Bundle directories: axioms, consequence, replacements, data tables and meta."""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kv import parse_lines
from .consequence import Consequence, MeasuredSet
from .datagen import DataTable, NoiseSpec
from .errors import IoFailure, MissingFile, ParseError
from .generator import TheorySystem
from .polynomial import Equation, parse_equation
from .symbols import build_symbol_table, format_symbol_specs, parse_symbol_specs

__all__ = [
    "TheoryBundle",
    "write_bundle",
    "read_bundle",
    "read_meta",
    "write_data",
    "read_data",
    "level_token",
    "noise_filename",
    "bundle_dirname",
    "file_digest",
    "write_manifest",
    "provenance_meta",
    "MANIFEST",
]

MANIFEST = "MANIFEST.txt"
_NOISE_RE = re.compile(r"^(consequence|system)_noise_(?:(exponential|lognormal)_)?([0-9.]+e[+-]\d+)\.dat$")
# meta keys derived from the bundle itself (everything else is provenance)
_STRUCTURAL = (
    "symbol.", "includes_trig_identity", "measured_vars", "measured_derivs", "observed_consts",
    "consequence_roles", "consequence_target", "system_roles", "replacement.",
)


@dataclass
class TheoryBundle:
    system: TheorySystem
    consequence: Consequence
    replacements: list = field(default_factory=list)
    consequence_data: dict = field(default_factory=dict)
    system_data: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.system.axioms)
        for idx, eq, new in self.replacements:
            if idx not in self.system.replaceable_indices():
                raise ValueError(f"replacement index {idx} is not a replaceable axiom of {n}")
            if new.axioms[idx] != eq:
                raise ValueError("replacement system does not hold the replacement axiom")


def bundle_dirname(num_vars: int, num_derivs: int, num_eqns: int) -> str:
    return f"vars{num_vars}_derivs{num_derivs}_eqns{num_eqns}"


def level_token(eps: float) -> str:
    """Shortest ``mantissa e signed-two-digit-exponent`` spelling of ``eps``."""
    for p in range(17):
        tok = f"{eps:.{p}e}"
        if float(tok) == eps:
            return tok
    return f"{eps:.17e}"


def noise_filename(prefix: str, spec: NoiseSpec) -> str:
    fam = "" if spec.family == "gaussian" else f"{spec.family}_"
    return f"{prefix}_noise_{fam}{level_token(spec.epsilon)}.dat"


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_text(path: Path, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _read_text(path: Path) -> str:
    if not path.is_file():
        raise MissingFile(f"missing file {path}")
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# data tables


def write_data(path, data: DataTable):
    lines = [",".join(data.columns)]
    for row in data.values:
        lines.append(",".join(repr(float(x)) for x in row))
    _write_text(Path(path), "\n".join(lines) + "\n")


def read_data(path, roles=None, target=None) -> DataTable:
    path = Path(path)
    text = _read_text(path)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty data file", path, 1)
    columns = lines[0].split(",")
    rows = []
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split(",")
        if len(parts) != len(columns):
            raise ParseError(f"expected {len(columns)} values, found {len(parts)}", path, lineno)
        try:
            rows.append([float(x) for x in parts])
        except ValueError as exc:
            raise ParseError(str(exc), path, lineno) from None
    values = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    if roles is None:
        roles = ["sampled"] * len(columns)
    return DataTable(columns, values, roles, target)


# ---------------------------------------------------------------------------
# equations


def _equations_text(axioms) -> str:
    return "".join(f"{a}\n" for a in axioms)


def _parse_equations(text: str, table, path) -> list[Equation]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            out.append(parse_equation(line, table))
        except ParseError as exc:
            raise ParseError(str(exc), path, lineno) from None
        except (KeyError, ValueError) as exc:
            raise ParseError(str(exc), path, lineno) from None
    return out


# ---------------------------------------------------------------------------
# meta


def _roles_text(data: DataTable) -> str:
    return ",".join(f"{c}={r}" for c, r in zip(data.columns, data.roles))


def _parse_roles(text: str) -> dict:
    out = {}
    for item in filter(None, text.split(",")):
        name, _, role = item.partition("=")
        out[name] = role
    return out


def _structural_meta(b: TheoryBundle) -> dict:
    table = b.system.table
    meta = {}
    for k, line in enumerate(format_symbol_specs(table).splitlines()):
        meta[f"symbol.{k}"] = line
    meta["includes_trig_identity"] = "true" if b.system.includes_trig_identity else "false"
    names = b.consequence.measured.names(table)
    for key in ("measured_vars", "measured_derivs", "observed_consts"):
        meta[key] = ",".join(names[key])
    clean = b.consequence_data.get(None)
    if clean is not None:
        meta["consequence_roles"] = _roles_text(clean)
        meta["consequence_target"] = clean.target or ""
    sclean = b.system_data.get(None)
    if sclean is not None:
        meta["system_roles"] = _roles_text(sclean)
    for k, (idx, _, _) in enumerate(b.replacements, 1):
        meta[f"replacement.{k}"] = str(idx)
    return meta


def _is_structural(key: str) -> bool:
    return any(key == s or (s.endswith(".") and key.startswith(s)) for s in _STRUCTURAL)


def provenance_meta(meta: dict) -> dict:
    """The keys of ``meta`` that are not recomputed from the bundle on write."""
    return {k: v for k, v in meta.items() if not _is_structural(k)}


def read_meta(path) -> dict:
    path = Path(path)
    return {k: v for k, v, _ in parse_lines(_read_text(path), ":", path)}


# ---------------------------------------------------------------------------


def write_manifest(bundle_dir) -> list[tuple[str, str]]:
    bundle_dir = Path(bundle_dir)
    names = sorted(p.name for p in bundle_dir.iterdir() if p.is_file() and p.name != MANIFEST)
    entries = [(n, file_digest(bundle_dir / n)) for n in names]
    _write_text(bundle_dir / MANIFEST, "".join(f"{d}  {n}\n" for n, d in entries))
    return entries


def write_bundle(b: TheoryBundle, root, overwrite: bool = False) -> list[tuple[str, str]]:
    """Write ``b`` into directory ``root``; returns the manifest (name, sha256)."""
    root = Path(root)
    try:
        if root.exists() and any(root.iterdir()) and not overwrite:
            raise IoFailure(f"{root} exists and is not empty")
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {root}: {exc}") from exc

    _write_text(root / "system.txt", _equations_text(b.system.axioms))
    _write_text(root / "consequence.txt", f"{b.consequence.polynomial}\n")
    for k, (idx, _, new) in enumerate(b.replacements, 1):
        _write_text(root / f"replacement_{k}.txt",
                    f"# replaces axiom {idx}\n" + _equations_text(new.axioms))
    for prefix, datasets in (("consequence", b.consequence_data), ("system", b.system_data)):
        for spec, data in datasets.items():
            name = f"{prefix}.dat" if spec is None else noise_filename(prefix, spec)
            write_data(root / name, data)
    meta = dict(b.meta)
    meta.update(_structural_meta(b))
    _write_text(root / "meta.txt", "".join(f"{k}: {v}\n" for k, v in meta.items()))
    return write_manifest(root)


def read_bundle(root) -> TheoryBundle:
    root = Path(root)
    if not root.is_dir():
        raise MissingFile(f"no bundle directory {root}")
    meta = read_meta(root / "meta.txt")
    sym_keys = sorted((k for k in meta if k.startswith("symbol.")), key=lambda k: int(k.split(".")[1]))
    if not sym_keys:
        raise ParseError("meta.txt lists no symbols", root / "meta.txt")
    table = build_symbol_table(parse_symbol_specs("\n".join(meta[k] for k in sym_keys), root / "meta.txt"))
    trig = meta.get("includes_trig_identity", "false") == "true"

    path = root / "system.txt"
    axioms = tuple(_parse_equations(_read_text(path), table, path))
    system = TheorySystem(table, axioms, trig)

    path = root / "consequence.txt"
    cons_eqs = _parse_equations(_read_text(path), table, path)
    if len(cons_eqs) != 1:
        raise ParseError("consequence.txt must hold exactly one equation", path)

    def ids(key):
        return frozenset(table.index(n) for n in filter(None, meta.get(key, "").split(",")))

    measured = MeasuredSet(ids("measured_vars"), ids("measured_derivs"), ids("observed_consts"))
    consequence = Consequence(cons_eqs[0], measured)

    replacements = []
    rep_keys = sorted((k for k in meta if k.startswith("replacement.")), key=lambda k: int(k.split(".")[1]))
    for k in rep_keys:
        n = int(k.split(".")[1])
        idx = int(meta[k])
        path = root / f"replacement_{n}.txt"
        eqs = tuple(_parse_equations(_read_text(path), table, path))
        if len(eqs) != len(axioms):
            raise ParseError(f"expected {len(axioms)} axioms, found {len(eqs)}", path)
        replacements.append((idx, eqs[idx], TheorySystem(table, eqs, trig)))

    c_roles = _parse_roles(meta.get("consequence_roles", ""))
    s_roles = _parse_roles(meta.get("system_roles", ""))
    target = meta.get("consequence_target") or None
    consequence_data, system_data = {}, {}
    for p in sorted(root.glob("*.dat")):
        if p.name in ("consequence.dat", "system.dat"):
            prefix, spec = p.stem, None
        else:
            m = _NOISE_RE.match(p.name)
            if not m:
                raise ParseError("unrecognised data file name", p)
            prefix = m.group(1)
            spec = NoiseSpec(m.group(2) or "gaussian", float(m.group(3)))
        roles_map = c_roles if prefix == "consequence" else s_roles
        data = read_data(p)
        roles = [roles_map.get(c, "sampled") for c in data.columns]
        data = DataTable(data.columns, data.values, roles, target if prefix == "consequence" else None)
        (consequence_data if prefix == "consequence" else system_data)[spec] = data

    return TheoryBundle(system, consequence, replacements, consequence_data, system_data,
                        provenance_meta(meta))


def ensure_dir(path) -> Path:
    path = Path(path)
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {path}: {exc}") from exc
    return path
