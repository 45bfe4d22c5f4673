"""Batch command-line driver.

Subcommands
-----------
report    geometry report (metric, curvature, spectrum, bounds) per theta
holonomy  transport phase of a curve given as an ordered theta list
check     quasi-parallel / antiunitary / momentum-symmetry classification
fisher    classical vs quantum Fisher comparison for a measurement
sample    Monte Carlo outcome draws from a measurement

Models are described by JSON documents, either a catalog entry

    {"kind": "catalog", "name": "position_shift",
     "params": {"profile": "gaussian", "grid": {"n": 512, "lower": -10, "upper": 10}}}

or a table of states on a uniform 1-parameter grid

    {"kind": "tabulated", "space": {"type": "grid", "n": 8, "lower": 0, "upper": 1},
     "thetas": [0.0, 0.1, 0.2],
     "amplitudes": [[[re, im], ...], ...]}

Grid sizes left out of a catalog spec default to the QESTGEO_GRID_N
environment variable (512 when unset).  Output documents are JSON with
floats printed to 17 significant digits and keys in fixed order, so
identical invocations are byte-identical.

Exit codes: 0 success, 2 malformed input documents, 3 numerical-contract
violations, 64 usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, estimation, geometry, hilbert, holonomy, model, symmetry
from .errors import (
    AnchorError,
    DomainError,
    MeasurementDefinitionError,
    ModelDefinitionError,
    NonRealOverlapError,
    QestgeoError,
    RankDeficiencyError,
    RefinementError,
    SingularSupportError,
    SpecFormatError,
    SpectralConsistencyError,
    UndefinedPhaseError,
)
from .hilbert import BasisSpace, GridSpace, StateVector
from .model import Curve, PureStateModel

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64

_NUMERICAL_ERRORS = (
    RankDeficiencyError,
    SpectralConsistencyError,
    NonRealOverlapError,
    RefinementError,
    SingularSupportError,
    ModelDefinitionError,
    AnchorError,
    UndefinedPhaseError,
)

TOLERANCES = {
    "rank": geometry.RANK_TOL,
    "quasi_classical": geometry.QUASI_CLASSICAL_TOL,
    "quasi_parallel": 1e-6,
    "beta_bound": geometry.BETA_BOUND_TOL,
}


# ---------------------------------------------------------------------------
# deterministic JSON with 17-significant-digit floats


def _float_repr(x):
    if x != x:
        return "NaN"
    if x == float("inf"):
        return "Infinity"
    if x == float("-inf"):
        return "-Infinity"
    return format(x, ".17g")


class _ReportEncoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        return json.encoder._make_iterencode(
            {} if self.check_circular else None,
            self.default,
            json.encoder.encode_basestring_ascii,
            self.indent,
            _float_repr,
            self.key_separator,
            self.item_separator,
            self.sort_keys,
            self.skipkeys,
            _one_shot=False,
        )(o, 0)


def render_document(doc):
    return json.dumps(doc, cls=_ReportEncoder, indent=2) + "\n"


def _matrix(a):
    return [[float(v) for v in row] for row in np.asarray(a)]


# ---------------------------------------------------------------------------
# input documents


def _require(mapping, key, path):
    if key not in mapping:
        raise SpecFormatError("missing required field", path=f"{path}.{key}" if path else key)
    return mapping[key]


def default_grid_points():
    raw = os.environ.get("QESTGEO_GRID_N", "512")
    try:
        n = int(raw)
    except ValueError as exc:
        raise SpecFormatError(f"QESTGEO_GRID_N={raw!r} is not an integer") from exc
    if n < 2:
        raise SpecFormatError(f"QESTGEO_GRID_N={n} must be >= 2")
    return n


def parse_model_spec(doc):
    """Build a model from a spec mapping; returns (model, normalized echo)."""
    if not isinstance(doc, dict):
        raise SpecFormatError("model spec must be a JSON object")
    kind = _require(doc, "kind", "")
    if kind == "catalog":
        return _parse_catalog_spec(doc)
    if kind == "tabulated":
        return _parse_tabulated_spec(doc)
    raise SpecFormatError(f"unknown kind {kind!r}", path="kind")


def _parse_catalog_spec(doc):
    name = _require(doc, "name", "")
    if name not in model.CATALOG:
        raise SpecFormatError(
            f"unknown catalog model {name!r}; known: {sorted(model.CATALOG)}",
            path="name",
        )
    params = dict(doc.get("params", {}))
    if "grid" in params and isinstance(params["grid"], dict):
        grid = dict(params["grid"])
        grid.setdefault("n", default_grid_points())
        params["grid"] = grid
    try:
        built = model.catalog(name, params)
    except (ValueError, KeyError, TypeError) as exc:
        raise SpecFormatError(f"invalid params for {name}: {exc}", path="params") from exc
    if "fd_step" in doc:
        built = _with_fd_step(built, float(doc["fd_step"]))
    echo = {"kind": "catalog", "name": name, "params": _jsonable(params)}
    if "fd_step" in doc:
        echo["fd_step"] = float(doc["fd_step"])
    return built, echo


def _with_fd_step(built, fd_step):
    return PureStateModel(
        space=built.space, m=built.m, domain=built.domain,
        evaluate_fn=built.evaluate_fn, tangent_fn=built.tangent_fn,
        fd_step=fd_step, kind=built.kind, params=built.params,
        sample_grid=built.sample_grid,
    )


def _parse_space_spec(spec, path):
    if not isinstance(spec, dict):
        raise SpecFormatError("space must be an object", path=path)
    stype = _require(spec, "type", path)
    if stype == "grid":
        return GridSpace(
            int(_require(spec, "n", path)),
            float(_require(spec, "lower", path)),
            float(_require(spec, "upper", path)),
            periodic=bool(spec.get("periodic", False)),
        )
    if stype == "basis":
        return BasisSpace(int(_require(spec, "dimension", path)),
                          labels=spec.get("labels"))
    raise SpecFormatError(f"unknown space type {stype!r}", path=f"{path}.type")


def _parse_tabulated_spec(doc):
    space = _parse_space_spec(_require(doc, "space", ""), "space")
    thetas = np.asarray(_require(doc, "thetas", ""), dtype=float)
    if thetas.ndim != 1 or thetas.size < 2:
        raise SpecFormatError("thetas must be a flat list of at least two values",
                              path="thetas")
    steps = np.diff(thetas)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
        raise SpecFormatError("theta grid must be uniform", path="thetas")
    if steps[0] <= 0:
        raise SpecFormatError("thetas must be strictly increasing", path="thetas")
    rows = _require(doc, "amplitudes", "")
    if len(rows) != thetas.size:
        raise SpecFormatError(
            f"got {len(rows)} amplitude rows for {thetas.size} thetas",
            path="amplitudes",
        )
    table = []
    for r, row in enumerate(rows):
        arr = np.asarray(row, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] != space.dim:
            raise SpecFormatError(
                f"row {r} must be {space.dim} [re, im] pairs",
                path=f"amplitudes[{r}]",
            )
        amp = arr[:, 0] + 1j * arr[:, 1]
        state = StateVector(space, amp)
        if abs(state.norm() - 1.0) >= model.NORM_DRIFT_TOL:
            raise SpecFormatError(
                f"row {r} has norm {state.norm():.8f}, not 1",
                path=f"amplitudes[{r}]",
            )
        table.append(StateVector(space, amp, normalize=True))
    built = _tabulated_model(space, thetas, table)
    echo = {
        "kind": "tabulated",
        "space": _space_echo(space),
        "thetas": [float(t) for t in thetas],
        "amplitudes": [
            [[float(a.real), float(a.imag)] for a in st.amplitudes] for st in table
        ],
    }
    return built, echo


def _tabulated_model(space, thetas, table):
    step = float(thetas[1] - thetas[0])

    def row_index(theta):
        k = int(round((theta[0] - thetas[0]) / step))
        if not 0 <= k < len(table) or abs(thetas[k] - theta[0]) > 1e-9 * max(1.0, step):
            raise DomainError(
                f"tabulated model is defined only at the table points; got {theta[0]}"
            )
        return k

    def ev(theta):
        return table[row_index(theta)].amplitudes

    def tangent_fn(theta, i):
        k = row_index(theta)
        if k == 0 or k == len(table) - 1:
            raise DomainError("finite differences need an interior table point")
        return (table[k + 1].amplitudes - table[k - 1].amplitudes) / (2.0 * step)

    interior = tuple((float(t),) for t in thetas[1:-1])
    return PureStateModel(
        space=space, m=1, domain=((float(thetas[0]), float(thetas[-1])),),
        evaluate_fn=ev, tangent_fn=tangent_fn, kind="tabulated", params={},
        sample_grid=interior if interior else tuple((float(t),) for t in thetas),
    )


def _space_echo(space):
    if isinstance(space, GridSpace):
        return {"type": "grid", "n": space.n_points, "lower": space.lower,
                "upper": space.upper, "periodic": space.periodic}
    return {"type": "basis", "dimension": space.dimension,
            "labels": list(space.labels) if space.labels else None}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def parse_theta_list(text, m):
    """Semicolon-separated points, comma-separated components."""
    points = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p for p in chunk.split(",") if p.strip()]
        if len(parts) != m:
            raise SpecFormatError(
                f"theta point {chunk!r} has {len(parts)} components, model expects {m}"
            )
        try:
            points.append(tuple(float(p) for p in parts))
        except ValueError as exc:
            raise SpecFormatError(f"non-numeric theta component in {chunk!r}") from exc
    if not points:
        raise SpecFormatError("empty theta list")
    return points


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise SpecFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"invalid JSON in {path}: {exc}") from exc


def _load_model(path):
    return parse_model_spec(_load_json(path))


def _parse_weight(text, m):
    if text is None:
        return None
    if text == "js":
        return {"kind": "js"}
    if text.startswith("diag:"):
        values = [float(v) for v in text[len("diag:"):].split(",") if v.strip()]
        if len(values) != m:
            raise SpecFormatError(
                f"diag weight has {len(values)} entries, model expects {m}"
            )
        return {"kind": "diag", "values": values}
    raise SpecFormatError(f"unknown weight spec {text!r} (use js or diag:...)")


def _tool_header(command):
    return {"name": "qestgeo", "version": __version__, "command": command}


# ---------------------------------------------------------------------------
# subcommands


def _cmd_report(args):
    built, echo = _load_model(args.model)
    thetas = parse_theta_list(args.theta, built.m)
    weight = _parse_weight(args.weight, built.m)
    entries = []
    max_beta = None
    for theta in thetas:
        rep = geometry.analyze(built, theta)
        entry = {
            "theta": [float(t) for t in theta],
            "sld_fisher": _matrix(rep.sld_fisher),
            "berry_curvature": _matrix(rep.berry_curvature),
            "d_transform": None if rep.d_matrix is None else _matrix(rep.d_matrix),
            "betas": [float(b) for b in rep.betas],
            "sld_bound_js": None if rep.rank_deficient
            else rep.sld_bound(rep.sld_fisher),
            "attainable_cr_js": rep.cr_js,
            "quasi_classical": rep.quasi_classical,
            "rank_deficient": rep.rank_deficient,
        }
        if weight is not None and not rep.rank_deficient:
            g = (rep.sld_fisher if weight["kind"] == "js"
                 else np.diag(weight["values"]))
            entry["sld_bound_weight"] = rep.sld_bound(g)
        elif weight is not None:
            entry["sld_bound_weight"] = None
        for b in rep.betas:
            max_beta = b if max_beta is None else max(max_beta, b)
        entries.append(entry)
    return {
        "tool": _tool_header("report"),
        "model": echo,
        "weight": weight,
        "tolerances": dict(TOLERANCES),
        "entries": entries,
        "summary": {
            "all_quasi_classical": all(e["quasi_classical"] for e in entries),
            "any_rank_deficient": any(e["rank_deficient"] for e in entries),
            "max_beta": max_beta,
        },
    }


def _cmd_holonomy(args):
    built, echo = _load_model(args.model)
    loop_doc = _load_json(args.loop)
    if not isinstance(loop_doc, dict) or "thetas" not in loop_doc:
        raise SpecFormatError("loop document must contain a thetas list")
    raw = loop_doc["thetas"]
    points = [tuple(np.atleast_1d(np.asarray(p, dtype=float))) for p in raw]
    for k, p in enumerate(points):
        if len(p) != built.m:
            raise SpecFormatError(
                f"loop point {k} has {len(p)} components, model expects {built.m}",
                path=f"thetas[{k}]",
            )
    closed = bool(loop_doc.get("closed", False)) or args.closed
    curve = Curve(built, tuple(points), closed=closed)
    result = (holonomy.berry_phase_loop(curve) if closed
              else holonomy.berry_phase_open(curve))
    return {
        "tool": _tool_header("holonomy"),
        "model": echo,
        "loop": {"n_points": len(points), "closed": closed},
        "result": {
            "gamma": result.gamma,
            "n_segments": result.n_segments,
            "min_overlap": result.min_overlap,
        },
    }


def _momentum_symmetry_section(built):
    applicable = built.kind in ("position_shift", "two_well") and isinstance(
        built.space, GridSpace
    )
    if not applicable:
        return {"applicable": False, "flag": None, "max_asymmetry": None}
    base = built.evaluate(np.zeros(built.m))
    flag, asym = symmetry.momentum_symmetry_check(base)
    return {"applicable": True, "flag": flag, "max_asymmetry": asym}


def _cmd_check(args):
    built, echo = _load_model(args.model)
    samples = parse_theta_list(args.samples, built.m)
    qp_flag, witness = holonomy.is_quasi_parallel(built, samples,
                                                  tol=TOLERANCES["quasi_parallel"])
    raw_flag, _ = holonomy.is_quasi_parallel(built, samples,
                                             tol=TOLERANCES["quasi_parallel"],
                                             align=False)
    anti = {"constructed": False, "invariant": None, "max_residual": None,
            "reason": None}
    try:
        states = [built.evaluate(t) for t in samples]
        aligned, _ = holonomy.align_phases(states)
        basis = hilbert.gram_schmidt_real(aligned, tol=1e-8)
        op = symmetry.conjugation_in_basis(hilbert.complete_basis(basis))
        residual = 0.0
        for s in aligned:
            delta = op.apply(s).amplitudes - s.amplitudes
            residual = max(residual, StateVector(s.space, delta).norm())
        anti = {
            "constructed": True,
            "invariant": bool(residual < 1e-6),
            "max_residual": residual,
            "reason": None,
        }
    except NonRealOverlapError as exc:
        anti["reason"] = str(exc)
    momentum = _momentum_symmetry_section(built)
    consistent = True
    if anti["constructed"]:
        consistent = consistent and (anti["invariant"] == qp_flag)
    else:
        consistent = consistent and (not qp_flag)
    if momentum["applicable"]:
        # the momentum flag matches the overlap reality of the family as
        # given; alignment can only forgive non-horizontal phase twists
        consistent = consistent and (momentum["flag"] == raw_flag)
    return {
        "tool": _tool_header("check"),
        "model": echo,
        "samples": [list(map(float, s)) for s in samples],
        "quasi_parallel": {
            "flag": qp_flag,
            "raw_flag": raw_flag,
            "witness": witness,
            "tolerance": TOLERANCES["quasi_parallel"],
        },
        "antiunitary": anti,
        "momentum_symmetry": momentum,
        "consistent": consistent,
    }


def _make_povm(spec, built, samples):
    if spec in ("grid", "basis"):
        return estimation.grid_pvm(built.space), {"kind": spec}
    if spec == "schmidt":
        povm = estimation.optimal_measurement_quasi_parallel(built, samples)
        return povm, {"kind": "schmidt", "n_samples": len(samples)}
    doc = _load_json(spec)
    if not isinstance(doc, dict) or doc.get("kind") != "matrices":
        raise SpecFormatError("POVM file must be {\"kind\": \"matrices\", ...}")
    elements = []
    for k, element in enumerate(doc.get("elements", [])):
        arr = np.asarray(element, dtype=float)
        if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
            raise SpecFormatError(
                f"element {k} must be a square matrix of [re, im] pairs",
                path=f"elements[{k}]",
            )
        elements.append(arr[:, :, 0] + 1j * arr[:, :, 1])
    try:
        povm = estimation.MatrixPovm(elements, space=built.space)
    except MeasurementDefinitionError as exc:
        raise SpecFormatError(f"invalid POVM: {exc}") from exc
    return povm, {"kind": "matrices", "n_elements": len(elements)}


def _cmd_fisher(args):
    built, echo = _load_model(args.model)
    thetas = parse_theta_list(args.theta, built.m)
    samples = parse_theta_list(args.samples, built.m) if args.samples else thetas
    povm, povm_echo = _make_povm(args.povm, built, samples)
    family = estimation.measurement_family(built, povm)
    entries = []
    for theta in thetas:
        j_c = estimation.classical_fisher(family, np.asarray(theta))
        j_s = geometry.sld_fisher(built.horizontal_lift(theta))
        gap = j_s - j_c
        entries.append({
            "theta": [float(t) for t in theta],
            "classical_fisher": _matrix(j_c),
            "sld_fisher": _matrix(j_s),
            "max_relative_gap": float(
                np.max(np.abs(gap)) / max(np.max(np.abs(j_s)), 1e-300)
            ),
            "min_psd_eigenvalue": float(np.min(np.linalg.eigvalsh(gap))),
        })
    return {
        "tool": _tool_header("fisher"),
        "model": echo,
        "povm": povm_echo,
        "entries": entries,
    }


def _cmd_sample(args):
    built, echo = _load_model(args.model)
    thetas = parse_theta_list(args.theta, built.m)
    if len(thetas) != 1:
        raise SpecFormatError("sample takes exactly one theta point")
    samples = [thetas[0]]
    povm, povm_echo = _make_povm(args.povm, built, samples)
    state = built.evaluate(thetas[0])
    outcomes = estimation.sample_outcomes(povm, state, args.n, args.seed)
    values, counts = np.unique(outcomes, return_counts=True)
    return {
        "tool": _tool_header("sample"),
        "model": echo,
        "povm": povm_echo,
        "theta": [float(t) for t in thetas[0]],
        "n": int(args.n),
        "seed": int(args.seed),
        "counts": [[int(v), int(c)] for v, c in zip(values, counts)],
    }


# ---------------------------------------------------------------------------
# driver


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="qestgeo",
                     description="estimation geometry of pure-state families")
    parser.add_argument("--version", action="version",
                        version=f"qestgeo {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None,
                        help="write the output document here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    rep = sub.add_parser("report", help="geometry report over theta points",
                         parents=[common])
    rep.add_argument("--model", required=True, help="model spec JSON file")
    rep.add_argument("--theta", required=True,
                     help="theta points, e.g. '0,0;0.5,0.2'")
    rep.add_argument("--weight", default=None,
                     help="extra bound weight: js or diag:g1,g2,...")
    rep.set_defaults(func=_cmd_report)

    hol = sub.add_parser("holonomy", help="transport phase of a curve",
                         parents=[common])
    hol.add_argument("--model", required=True)
    hol.add_argument("--loop", required=True, help="loop spec JSON file")
    hol.add_argument("--closed", action="store_true",
                     help="treat the curve as closed regardless of the file flag")
    hol.set_defaults(func=_cmd_holonomy)

    chk = sub.add_parser("check", help="classification checks on samples",
                         parents=[common])
    chk.add_argument("--model", required=True)
    chk.add_argument("--samples", required=True, help="sample theta list")
    chk.set_defaults(func=_cmd_check)

    fis = sub.add_parser("fisher", help="classical vs quantum Fisher comparison",
                         parents=[common])
    fis.add_argument("--model", required=True)
    fis.add_argument("--povm", required=True,
                     help="basis | grid | schmidt | POVM JSON file")
    fis.add_argument("--theta", required=True)
    fis.add_argument("--samples", default=None,
                     help="construction samples for schmidt (default: --theta)")
    fis.set_defaults(func=_cmd_fisher)

    smp = sub.add_parser("sample", help="draw measurement outcomes",
                         parents=[common])
    smp.add_argument("--model", required=True)
    smp.add_argument("--povm", required=True)
    smp.add_argument("--theta", required=True)
    smp.add_argument("--n", type=int, required=True)
    smp.add_argument("--seed", type=int, required=True)
    smp.set_defaults(func=_cmd_sample)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = args.func(args)
    except SpecFormatError as exc:
        print(f"qestgeo: spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except DomainError as exc:
        print(f"qestgeo: spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except _NUMERICAL_ERRORS as exc:
        print(f"qestgeo: numerical contract violated: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QestgeoError as exc:
        print(f"qestgeo: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    text = render_document(doc)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
