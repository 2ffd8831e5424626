"""Line-oriented key/value text used by meta files and run configs."""

from __future__ import annotations

from .errors import ParseError


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list, frozenset, set)):
        items = sorted(v) if isinstance(v, (set, frozenset)) else v
        return "{" + ",".join(format_value(x) for x in items) + "}"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "none"
    return str(v)


def parse_scalar(tok: str):
    t = tok.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low == "none":
        return None
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def parse_value(text: str):
    t = text.strip()
    if t.startswith("{"):
        if not t.endswith("}"):
            raise ValueError(f"unterminated list {text!r}")
        inner = t[1:-1].strip()
        if not inner:
            return ()
        return tuple(parse_scalar(x) for x in inner.split(","))
    return parse_scalar(t)


def parse_lines(text: str, sep: str, path=None) -> list[tuple[str, str, int]]:
    """(key, raw value, line number) for each non-blank, non-comment line."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, found, value = line.partition(sep)
        if not found or not key.strip():
            raise ParseError(f"expected 'key {sep.strip()} value', got {raw!r}", path, lineno)
        out.append((key.strip(), value.strip(), lineno))
    return out
