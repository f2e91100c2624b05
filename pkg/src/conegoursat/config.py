"""INI-style run configuration with strict key checking.

Example::

    [geometry]
    n = 4
    a = 1.0
    lambda = -0.5

    [weights]
    alpha = -0.5

    [source]
    terms =
        1.0 3 0 0 0 0

Every key has a default, so an empty file is valid.  Source lines are either a
monomial ``coeff pow_p pow_qy pow_qx pow_qA extra_x_exponent``, the shorthand
``cubic [coeff]``, or ``wavemap K=<curvature> N=<dim>``.
"""
import configparser
import hashlib
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, replace

from .conformal import ConeGeometry
from .errors import ConfigError, ParseError, RangeError
from .goursat import SolverConfig
from .grid import Grid
from .initialdata import (build_approximant, minus_from_profile, parse_profile, plus_from_profile,
                          read_minus_csv, read_plus_csv)
from .nonlinearity import MonomialTerm, SourceSpec, wave_map_source

DEFAULTS = {
    "geometry": {"n": "4", "a": "1.0", "lambda": "-0.5"},
    "weights": {"alpha": "-0.5", "ell": "0.0", "lambda": "1.0"},
    "grid": {"ny": "400", "nx": "", "hy": "", "hx": "", "eps_scri": "5e-4", "u_max": "0.25",
             "rho_min": "0.0"},
    "picard": {"tol": "1e-10", "kmax": "20", "seed": "data", "gate_override": "false",
               "min_iterations": "1"},
    "source": {"terms": "cubic 1.0"},
    "data": {"plus": "gaussian -0.25 0.05 1e-2", "minus": "zero", "mollifier_w0": "0.0",
             "mollifier_k": "0"},
    "output": {"dir": "out"},
    "sweep": {},
}


@dataclass(frozen=True)
class RunConfig:
    n: int = 4
    a: float = 1.0
    lam: float = -0.5
    alpha: float = -0.5
    ell: float = 0.0
    Lam: float = 1.0
    ny: int = 400
    nx: int = 400
    eps_scri: float = 5e-4
    u_max: float = 0.25
    rho_min: float = 0.0
    tol: float = 1e-10
    kmax: int = 20
    seed: str = "data"
    gate_override: bool = False
    min_iterations: int = 1
    terms: tuple = ("cubic 1.0",)
    plus: str = "gaussian -0.25 0.05 1e-2"
    minus: str = "zero"
    mollifier_w0: float = 0.0
    mollifier_k: int = 0
    output_dir: str = "out"
    sweep: tuple = ()
    config_hash: str = field(default="", compare=False)

    # --- derived objects --------------------------------------------------------
    def geometry(self):
        return ConeGeometry(self.n, self.a, self.lam)

    def grid(self):
        return Grid.build(self.geometry(), self.ny, self.nx, self.u_max, self.eps_scri,
                          self.rho_min)

    def solver_config(self):
        return SolverConfig(tol=self.tol, k_max=self.kmax, Lam=self.Lam, ell=self.ell,
                            alpha=self.alpha, gate_override=self.gate_override, seed=self.seed,
                            min_iterations=self.min_iterations)

    def source(self):
        return build_source(self.terms)

    def data(self, grid=None):
        """C+ and C- data on the grid, made corner-compatible by the approximant."""
        grid = grid or self.grid()
        ncomp = self.source().n_components
        plus = _load_plus(self.plus, grid.x, ncomp, self.alpha)
        minus = _load_minus(self.minus, grid.y, ncomp)
        return build_approximant(plus, minus, self.mollifier_k, self.mollifier_w0)

    def canonical(self):
        d = asdict(self)
        d.pop("config_hash")
        d["terms"] = list(d["terms"])
        d["sweep"] = [[k, list(v)] for k, v in d["sweep"]]
        return json.dumps(d, sort_keys=True, separators=(",", ":"))


def _load_plus(spec, x, ncomp, alpha):
    if spec.startswith("csv:"):
        return read_plus_csv(spec[4:], alpha=alpha)
    return plus_from_profile(parse_profile(spec), x, ncomp, alpha)


def _load_minus(spec, y, ncomp):
    if spec.startswith("csv:"):
        return read_minus_csv(spec[4:])
    return minus_from_profile(parse_profile(spec), y, ncomp)


def build_source(lines):
    terms = []
    wavemap = None
    for line in lines:
        parts = line.split()
        head = parts[0].lower()
        if head == "wavemap":
            kw = dict(p.split("=", 1) for p in parts[1:])
            wavemap = wave_map_source(float(kw.get("K", kw.get("k", 1.0))),
                                      int(kw.get("N", kw.get("n", 2))))
        elif head == "cubic":
            terms.append(MonomialTerm(float(parts[1]) if len(parts) > 1 else 1.0, pow_p=3))
        else:
            c, p, qy, qx, qa, extra = (float(v) for v in parts)
            terms.append(MonomialTerm(c, int(p), int(qy), int(qx), int(qa), extra))
    if wavemap is not None:
        if terms:
            raise ConfigError("a wavemap source cannot be combined with monomials")
        return wavemap
    return SourceSpec(tuple(terms))


# --- parsing ------------------------------------------------------------------------

def _line_of(text, section, key):
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip().lower()
        elif current == section and "=" in s and s.split("=", 1)[0].strip().lower() == key:
            return no
    return None


def _num(text, section, key, raw, kind=float):
    try:
        if kind is int:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError
        return v
    except ValueError:
        raise ParseError(f"{section}.{key}: cannot read {raw!r} as {kind.__name__}",
                         _line_of(text, section, key)) from None


def _bool(text, section, key, raw):
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ParseError(f"{section}.{key}: expected a boolean, got {raw!r}", _line_of(text, section, key))


def _check_terms(text, lines):
    line_no = _line_of(text, "source", "terms")
    for ln in lines:
        parts = ln.split()
        head = parts[0].lower()
        try:
            if head == "wavemap":
                kw = dict(p.split("=", 1) for p in parts[1:])
                if set(k.lower() for k in kw) - {"k", "n"}:
                    raise ValueError
                [float(v) for v in kw.values()]
            elif head == "cubic":
                if len(parts) > 2:
                    raise ValueError
                [float(v) for v in parts[1:]]
            else:
                if len(parts) != 6:
                    raise ValueError
                vals = [float(v) for v in parts]
                if any(v < 0 or v != int(v) for v in vals[1:5]):
                    raise RangeError("source.terms", f"powers must be non-negative integers in {ln!r}")
        except ValueError:
            raise ParseError(f"source.terms: cannot read {ln!r}", line_no) from None


def parse_config(text):
    """Parse and validate configuration text into a :class:`RunConfig`."""
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=("#", ";"),
                                   empty_lines_in_values=False)
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("content before the first [section] header", exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ParseError(str(exc).split(":", 1)[-1].strip(), exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ParseError("malformed line", lineno) from None

    for section in cp.sections():
        if section not in DEFAULTS:
            raise ParseError(f"unknown section [{section}]", _section_line(text, section))
        if section == "sweep":
            continue
        for key in cp[section]:
            if key not in DEFAULTS[section]:
                raise ParseError(f"unknown key {section}.{key}", _line_of(text, section, key))

    def get(section, key):
        if cp.has_section(section) and key in cp[section]:
            return cp[section][key]
        return DEFAULTS[section][key]

    n = _num(text, "geometry", "n", get("geometry", "n"), int)
    a = _num(text, "geometry", "a", get("geometry", "a"))
    lam = _num(text, "geometry", "lambda", get("geometry", "lambda"))
    alpha = _num(text, "weights", "alpha", get("weights", "alpha"))
    ell = _num(text, "weights", "ell", get("weights", "ell"))
    Lam = _num(text, "weights", "lambda", get("weights", "lambda"))
    eps = _num(text, "grid", "eps_scri", get("grid", "eps_scri"))
    u_max = _num(text, "grid", "u_max", get("grid", "u_max"))
    rho_min = _num(text, "grid", "rho_min", get("grid", "rho_min"))
    tol = _num(text, "picard", "tol", get("picard", "tol"))
    kmax = _num(text, "picard", "kmax", get("picard", "kmax"), int)
    min_it = _num(text, "picard", "min_iterations", get("picard", "min_iterations"), int)
    seed = get("picard", "seed").strip().lower()
    override = _bool(text, "picard", "gate_override", get("picard", "gate_override"))
    w0 = _num(text, "data", "mollifier_w0", get("data", "mollifier_w0"))
    mk = _num(text, "data", "mollifier_k", get("data", "mollifier_k"), int)

    if n < 1:
        raise RangeError("geometry.n", "must be a positive integer")
    if not a > 0:
        raise RangeError("geometry.a", "must be positive")
    if not -1.0 / a < lam < 0:
        raise RangeError("geometry.lambda", f"must lie in (-1/a, 0) = ({-1.0 / a}, 0)")
    if not -1.0 < alpha <= -0.5:
        raise RangeError("weights.alpha", "must lie in (-1, -1/2]")
    if ell < 0:
        raise RangeError("weights.ell", "must be >= 0")
    if Lam < 0:
        raise RangeError("weights.lambda", "must be >= 0")
    x0, y0 = lam, lam + 1.0 / a
    if not 0 < eps < abs(x0):
        raise RangeError("grid.eps_scri", f"must lie in (0, |x0|) = (0, {abs(x0)})")
    if not 0 < u_max <= y0:
        raise RangeError("grid.u_max", f"must lie in (0, y0] = (0, {y0}]")
    if rho_min < 0:
        raise RangeError("grid.rho_min", "must be >= 0")
    if not tol > 0:
        raise RangeError("picard.tol", "must be positive")
    if kmax < 1:
        raise RangeError("picard.kmax", "must be >= 1")
    if min_it < 1:
        raise RangeError("picard.min_iterations", "must be >= 1")
    if seed not in ("data", "zero"):
        raise RangeError("picard.seed", "must be 'data' or 'zero'")
    if w0 < 0:
        raise RangeError("data.mollifier_w0", "must be >= 0")
    if mk < 0:
        raise RangeError("data.mollifier_k", "must be >= 0")

    ny, nx = _grid_counts(text, get, u_max, abs(x0) - eps)

    terms = tuple(ln.strip() for ln in get("source", "terms").splitlines() if ln.strip())
    if not terms:
        raise RangeError("source.terms", "at least one source line is required")
    _check_terms(text, terms)

    plus = get("data", "plus").strip()
    minus = get("data", "minus").strip()
    for key, spec in (("plus", plus), ("minus", minus)):
        if not spec.startswith("csv:"):
            try:
                parse_profile(spec)
            except ValueError as exc:
                raise RangeError(f"data.{key}", str(exc)) from None

    sweep = []
    if cp.has_section("sweep"):
        for key, raw in cp["sweep"].items():
            if "." not in key:
                raise ParseError(f"sweep keys are section.key, got {key!r}", _line_of(text, "sweep", key))
            sec, opt = key.split(".", 1)
            if sec not in DEFAULTS or sec == "sweep" or opt not in DEFAULTS[sec]:
                raise ParseError(f"unknown sweep target {key}", _line_of(text, "sweep", key))
            vals = tuple(v.strip() for v in raw.split(",") if v.strip())
            if not vals:
                raise RangeError(f"sweep.{key}", "needs at least one value")
            sweep.append((key, vals))

    out_dir = get("output", "dir").strip()
    cfg = RunConfig(n=n, a=a, lam=lam, alpha=alpha, ell=ell, Lam=Lam, ny=ny, nx=nx, eps_scri=eps,
                    u_max=u_max, rho_min=rho_min, tol=tol, kmax=kmax, seed=seed,
                    gate_override=override, min_iterations=min_it, terms=terms, plus=plus,
                    minus=minus, mollifier_w0=w0, mollifier_k=mk, output_dir=out_dir,
                    sweep=tuple(sweep))
    return replace(cfg, config_hash=hashlib.sha256(cfg.canonical().encode()).hexdigest())


def _section_line(text, section):
    for no, raw in enumerate(text.splitlines(), 1):
        if raw.strip().lower() == f"[{section}]":
            return no
    return None


def _grid_counts(text, get, ylen, xlen):
    """Cell counts from ``ny``/``nx`` or from the steps ``hy``/``hx``."""
    def count(kc, kh, length, fallback):
        rawc, rawh = get("grid", kc).strip(), get("grid", kh).strip()
        if rawh and (cp_has(text, "grid", kc)):
            raise RangeError(f"grid.{kh}", f"give either {kc} or {kh}, not both")
        if rawh:
            h = _num(text, "grid", kh, rawh)
            if not 0 < h < length:
                raise RangeError(f"grid.{kh}", f"must lie in (0, {length})")
            return max(2, int(round(length / h)))
        if rawc:
            c = _num(text, "grid", kc, rawc, int)
        else:
            c = fallback
        if c < 2:
            raise RangeError(f"grid.{kc}", "must be >= 2")
        return c

    ny = count("ny", "hy", ylen, 400)
    nx = count("nx", "hx", xlen, ny)
    return ny, nx


def cp_has(text, section, key):
    return _line_of(text, section, key) is not None


def expand_sweep(text, cfg):
    """Cartesian product of the sweep values, as parsed configs (no sweep blocks)."""
    if not cfg.sweep:
        return [cfg]
    keys = [k for k, _ in cfg.sweep]
    out = []
    for combo in itertools.product(*(v for _, v in cfg.sweep)):
        out.append(parse_config(override_text(text, dict(zip(keys, combo)))))
    return out


def override_text(text, overrides):
    """Configuration text with ``section.key`` values replaced and the sweep block removed."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.read_string(text)
    if cp.has_section("sweep"):
        cp.remove_section("sweep")
    for dotted, value in overrides.items():
        sec, key = dotted.split(".", 1)
        if not cp.has_section(sec):
            cp.add_section(sec)
        cp[sec][key] = value
    lines = []
    for sec in cp.sections():
        lines.append(f"[{sec}]")
        for key, value in cp[sec].items():
            value = value.replace("\n", "\n    ")
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)
