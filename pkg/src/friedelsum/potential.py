"""Bounded, compactly supported spherical potentials.

Units are ``hbar^2 / 2m = 1``, so ``H = -Laplacian + V`` and ``E = k^2``.

File format
-----------
A UTF-8 document of ``key = value`` lines. Blank lines and text after ``#``
are ignored. Recognised keys:

``kind``
    ``piecewise_constant`` or ``tabulated``.
``support_radius``
    Radius beyond which ``V`` vanishes. Optional for ``piecewise_constant``
    (defaults to the last breakpoint), required for ``tabulated``.
``pieces``
    ``[(r1, v1), (r2, v2), ...]``: ``V = v1`` on ``[0, r1)``, ``v2`` on
    ``[r1, r2)`` and so on. The breakpoints are right edges.
``samples``
    ``[(r, v), ...]`` interpolated by a monotone cubic. Samples must end at
    ``support_radius`` with value 0 so the potential is continuous.

A list value may continue over several lines until its closing bracket.
Numbers use Python float syntax (``inf`` and ``nan`` are rejected).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ParseError, ValidationError

KINDS = ("piecewise_constant", "tabulated")

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_PAIR = re.compile(rf"\(\s*({_NUM})\s*,\s*({_NUM})\s*\)")
_PAIR_NC = rf"\(\s*{_NUM}\s*,\s*{_NUM}\s*\)"
_LIST = re.compile(rf"\[\s*(?:{_PAIR_NC}(?:\s*,\s*{_PAIR_NC})*\s*,?)?\s*\]")
_KEY = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


@dataclass(frozen=True)
class Potential:
    """A spherical potential ``V(r)`` that vanishes for ``r > support_radius``.

    Construct through :func:`square_well`, :func:`zero_potential` or
    :func:`parse_potential_file`; the constructor validates its arguments.
    """

    kind: str
    points: tuple
    support_radius: float
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        _validate(self.kind, self.points, self.support_radius)
        if self.kind == "tabulated":
            r = np.array([p[0] for p in self.points])
            v = np.array([p[1] for p in self.points])
            object.__setattr__(self, "_interp", PchipInterpolator(r, v, extrapolate=False))

    @property
    def radii(self):
        return np.array([p[0] for p in self.points], dtype=float)

    @property
    def values(self):
        return np.array([p[1] for p in self.points], dtype=float)

    @property
    def bound(self):
        """``sup |V|``."""
        return float(np.max(np.abs(self.values)))

    @property
    def v_min(self):
        return min(0.0, float(np.min(self.values)))

    @property
    def v_max(self):
        return max(0.0, float(np.max(self.values)))

    @property
    def is_zero(self):
        return bool(np.all(self.values == 0.0))

    def evaluate(self, r):
        """``V(r)`` for scalar or array ``r >= 0``."""
        r_arr = np.asarray(r, dtype=float)
        if self.kind == "piecewise_constant":
            edges = self.radii
            vals = np.append(self.values, 0.0)
            out = vals[np.searchsorted(edges, r_arr, side="right")]
        else:
            first_r, first_v = self.points[0]
            out = self._interp(np.clip(r_arr, first_r, self.support_radius))
            out = np.where(r_arr < first_r, first_v, out)
            out = np.where(r_arr >= self.support_radius, 0.0, out)
        out = np.where(r_arr > self.support_radius, 0.0, out)
        return float(out) if np.ndim(out) == 0 else out

    __call__ = evaluate

    def on_grid(self, r):
        """Sample ``V`` on a grid, averaging the one-sided limits at jumps.

        Numerov's local error at a discontinuity of ``V`` drops from first
        to third order in ``h`` when the jump sits on a grid point and
        takes the mean value there.
        """
        r = np.asarray(r, dtype=float)
        out = np.array(self.evaluate(r), dtype=float)
        if self.kind != "piecewise_constant" or r.size < 2:
            return out
        h = r[1] - r[0]
        vals = np.append(self.values, 0.0)
        for i, b in enumerate(self.radii):
            j = int(round(b / h))
            if 0 <= j < r.size and abs(r[j] - b) <= 1e-9 * max(1.0, b):
                out[j] = 0.5 * (vals[i] + vals[i + 1])
        return out

    def jumps_on_grid(self, r):
        """``V(b+) - V(b-)`` at grid points that coincide with a breakpoint ``b``."""
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        if self.kind != "piecewise_constant" or r.size < 2:
            return out
        h = r[1] - r[0]
        vals = np.append(self.values, 0.0)
        for i, b in enumerate(self.radii):
            j = int(round(b / h))
            if 0 <= j < r.size and abs(r[j] - b) <= 1e-9 * max(1.0, b):
                out[j] = vals[i + 1] - vals[i]
        return out

    def aligned_step(self, h_max):
        """Largest ``h <= h_max`` putting ``support_radius`` (and, where a
        small search finds one, every breakpoint) on the grid ``i*h``."""
        n0 = max(1, math.ceil(self.support_radius / h_max - 1e-12))
        if self.kind == "piecewise_constant":
            for n in range(n0, 4 * n0 + 1):
                h = self.support_radius / n
                if all(abs(b / h - round(b / h)) < 1e-9 * max(1.0, b / h) for b in self.radii):
                    return h
        return self.support_radius / n0

    def integral_abs(self, n=2001):
        """``int_0^rs |V(r)| dr`` by composite Simpson on ``n`` points."""
        from scipy.integrate import simpson

        r = np.linspace(0.0, self.support_radius, n)
        vals = np.abs(self.evaluate(r))
        if self.kind == "piecewise_constant":
            # exact for step functions
            edges = np.concatenate(([0.0], self.radii))
            return float(np.sum(np.abs(self.values) * np.diff(edges)))
        return float(simpson(vals, x=r))


def _validate(kind, points, support_radius):
    if kind not in KINDS:
        raise ValidationError(f"potential: kind must be one of {KINDS}, got {kind!r}")
    if not points:
        raise ValidationError("potential: at least one piece or sample is required")
    rs = [float(p[0]) for p in points]
    vs = [float(p[1]) for p in points]
    if not all(math.isfinite(x) for x in rs + vs) or not math.isfinite(support_radius):
        raise ValidationError("potential: values and radii must be finite (V must be bounded, compactly supported)")
    if not support_radius > 0.0:
        raise ValidationError("potential: support_radius must be > 0")
    if any(b <= a for a, b in zip(rs, rs[1:])):
        raise ValidationError("potential: breakpoints must be strictly increasing")
    if kind == "piecewise_constant":
        if rs[0] <= 0.0:
            raise ValidationError("potential: piece breakpoints must be > 0")
        if rs[-1] > support_radius * (1 + 1e-12):
            raise ValidationError("potential: a piece extends beyond support_radius (V must vanish there)")
    else:
        if len(rs) < 2:
            raise ValidationError("potential: tabulated kind needs at least two samples")
        if rs[0] < 0.0:
            raise ValidationError("potential: sample radii must be >= 0")
        if rs[-1] != support_radius:
            raise ValidationError("potential: the last sample must sit at support_radius")
        if vs[-1] != 0.0:
            raise ValidationError("potential: the last sample value must be 0 (continuity at support_radius)")


def square_well(v0, a):
    """Constant ``V = v0`` on ``[0, a)``; ``v0 < 0`` is a well, ``> 0`` a barrier."""
    return Potential("piecewise_constant", ((float(a), float(v0)),), float(a))


def zero_potential(support_radius=1.0):
    """The free case ``V = 0``, carried with a nominal support radius."""
    return square_well(0.0, support_radius)


def _parse_pairs(text, line):
    if not _LIST.fullmatch(text.strip()):
        raise ParseError(f"expected a list of '(r, v)' pairs, got {text.strip()[:40]!r}", line)
    return tuple((float(a), float(b)) for a, b in _PAIR.findall(text))


def parse_potential_file(text):
    """Parse a potential document (see module docstring for the grammar).

    Raises
    ------
    ParseError
        Malformed syntax; the message carries the line number.
    ValidationError
        Well-formed document describing an inadmissible potential.
    """
    entries = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        lineno = i + 1
        raw = lines[i].split("#", 1)[0].strip()
        i += 1
        if not raw:
            continue
        m = _KEY.match(raw)
        if not m:
            raise ParseError(f"expected 'key = value', got {raw!r}", lineno)
        key, value = m.group(1), m.group(2).strip()
        if value.startswith("[") and "]" not in value:
            while i < len(lines) and "]" not in value:
                value += " " + lines[i].split("#", 1)[0].strip()
                i += 1
            if "]" not in value:
                raise ParseError("unterminated list", lineno)
        if key in entries:
            raise ParseError(f"duplicate key {key!r}", lineno)
        entries[key] = (value, lineno)

    unknown = set(entries) - {"kind", "support_radius", "pieces", "samples"}
    if unknown:
        key = sorted(unknown)[0]
        raise ParseError(f"unknown key {key!r}", entries[key][1])
    if "kind" not in entries:
        raise ValidationError("potential: missing required key 'kind'")
    kind = entries["kind"][0]
    if kind not in KINDS:
        raise ValidationError(f"potential: kind must be one of {KINDS}, got {kind!r}")
    list_key = "pieces" if kind == "piecewise_constant" else "samples"
    other = "samples" if list_key == "pieces" else "pieces"
    if other in entries:
        raise ParseError(f"key {other!r} is not allowed for kind {kind!r}", entries[other][1])
    if list_key not in entries:
        raise ValidationError(f"potential: missing required key {list_key!r}")
    points = _parse_pairs(*entries[list_key])

    if "support_radius" in entries:
        text_value, lineno = entries["support_radius"]
        if not re.fullmatch(_NUM, text_value):
            raise ParseError(f"support_radius is not a number: {text_value!r}", lineno)
        support = float(text_value)
    elif kind == "piecewise_constant" and points:
        support = points[-1][0]
    else:
        raise ValidationError("potential: tabulated kind requires support_radius")
    return Potential(kind, points, support)


def serialize_potential(v):
    """Render ``v`` in the file format; :func:`parse_potential_file` inverts it."""
    key = "pieces" if v.kind == "piecewise_constant" else "samples"
    body = ", ".join(f"({r!r}, {val!r})" for r, val in v.points)
    return f"kind = {v.kind}\nsupport_radius = {v.support_radius!r}\n{key} = [{body}]\n"


def load_potential(path):
    return parse_potential_file(Path(path).read_text(encoding="utf-8"))
