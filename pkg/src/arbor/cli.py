"""Command-line front end: every command writes one deterministic JSON report."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .decomp import Decomposition, DecompositionError, dual_tree, nested_family, reconstruct_check
from .inverse import InverseBundle, balls, build_extended, check_fine, check_functoriality, evaluate_threads
from .labels import LabeledSystem, LabelError, label_content_preserved, saturate, two_saturation, weak_saturation
from .metric import FiniteCompactum, circle_sample, greedy_correspondence, gh_upper
from .realize import WeightSchedule, embedding_distortion, realize_limit
from .report import Report, _jsonable
from .rewrite import RewriteError, consolidation_distortion, roundtrip_check, subdivide
from .system import SystemError_, TreeSystem, validate_system

REPORT_SCHEMA = "arbor-report/1"
GENERATORS = ("punctured-circle", "punctured-interval", "reflection-disk", "random", "labeled", "labeled-path")


class InputError(Exception):
    pass


# io


def _read_json(path) -> dict:
    if path is None:
        raise InputError("--input is required")
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def load_system(path) -> TreeSystem:
    data = _read_json(path)
    if "system" in data:
        data = data["system"]
    return TreeSystem.from_json(data, Path(path).parent)


def load_labeled(path) -> LabeledSystem:
    data = _read_json(path)
    if "alphabet" not in data:
        raise InputError(f"{path} holds no labeled system")
    return LabeledSystem.from_json(data, Path(path).parent)


def load_decomposition(path) -> tuple[int | None, Decomposition]:
    data = _read_json(path)
    ambient = FiniteCompactum.from_json(data["ambient"], Path(path).parent)
    return data.get("vertex"), Decomposition.from_json(data["decomposition"], ambient)


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


class Output:
    """Artifacts go to ``--output``; without it only the report is printed."""

    def __init__(self, directory):
        self.dir = None if directory is None else Path(directory)
        self.written: list[str] = []
        if self.dir is not None:
            try:
                self.dir.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise InputError(f"cannot create {self.dir}: {exc}") from exc

    def text(self, name: str, content: str):
        if self.dir is None:
            return
        try:
            (self.dir / name).write_text(content)
        except OSError as exc:
            raise InputError(f"cannot write {name}: {exc}") from exc
        self.written.append(name)

    def system(self, theta: TreeSystem, name: str = "system.json"):
        if self.dir is not None:
            self.text(name, _dump(theta.to_json(self.dir)))

    def labeled(self, L: LabeledSystem, name: str = "labeled.json"):
        if self.dir is not None:
            self.text(name, _dump(L.to_json(self.dir)))

    def compactum(self, K: FiniteCompactum, name: str):
        if self.dir is not None:
            self.text(name, _dump({"compactum": K.to_json(self.dir / (Path(name).stem + ".bin"))}))


# helpers


def _weights(theta: TreeSystem, args):
    kind = args.weights or theta.meta.get("generator", {}).get("weights", "geometric")
    if kind == "uniform":
        return WeightSchedule.uniform(theta), kind
    return WeightSchedule.geometric(theta, ratio=args.ratio if args.ratio is not None else 0.5), kind


def _restore_meta(theta: TreeSystem) -> TreeSystem:
    """Regenerate gallery extras (layouts, retractions) that JSON drops."""
    gen = theta.meta.get("generator", {})
    kind = gen.get("kind")
    params = {k: v for k, v in gen.items() if k not in ("kind", "weights", "depth")}
    if kind == "punctured-circle":
        from .gallery.circle import gen_punctured_circle

        fresh = gen_punctured_circle(gen["depth"], **params)
    elif kind == "punctured-interval":
        from .gallery.interval import gen_punctured_interval

        fresh = gen_punctured_interval(gen["depth"], **params)
    else:
        return theta
    if fresh.tree == theta.tree:
        theta.meta.update(fresh.meta)
    return theta


def _obj(K: FiniteCompactum) -> str:
    if K.coords is None:
        raise InputError("no coordinates to export as OBJ")
    c = K.coords if K.coords.shape[1] >= 3 else np.pad(K.coords, ((0, 0), (0, 3 - K.coords.shape[1])))
    return "".join(f"v {x:.12g} {y:.12g} {z:.12g}\n" for x, y, z in c[:, :3])


# commands; each returns (ok, report dict)


def cmd_gen(args, out: Output):
    kind = args.kind
    depth = args.depth if args.depth is not None else 3
    seed = args.seed if args.seed is not None else 0
    rep = Report(f"gen {kind}")
    if kind == "punctured-circle":
        from .gallery.circle import gen_punctured_circle

        theta = gen_punctured_circle(depth, **({"ratio": args.ratio} if args.ratio is not None else {}))
    elif kind == "punctured-interval":
        from .gallery.interval import gen_punctured_interval

        theta = gen_punctured_interval(depth, **({"scale": args.ratio} if args.ratio is not None else {}))
    elif kind == "random":
        from .gallery.random_system import gen_random

        theta = gen_random(seed, depth)
    elif kind == "reflection-disk":
        from .gallery.disk import gen_reflection_disk

        model = gen_reflection_disk(depth)
        theta = model.template
        rep.data["orbit_counts"] = model.orbit_counts
        if out.dir is not None:
            amb = model.cloud.to_json(out.dir / "cloud.bin")
            out.text("decomposition.json", _dump({"ambient": amb, "decomposition": model.decomposition.to_json()}))
    else:
        from .gallery.labeled import complete_labeled, labeled_path

        L = complete_labeled(depth=depth) if kind == "labeled" else labeled_path(depth)
        rep.merge(L.validate())
        rep.data.update({"vertices": len(L.tree.vertices), "weakly_saturated": weak_saturation(L).ok, "two_saturated": two_saturation(L).ok})
        out.labeled(L)
        return rep.ok, rep
    rep.merge(validate_system(theta))
    rep.data.update({"vertices": len(theta.tree.vertices), "points": theta.n_points(), "stubs": len(theta.tree.stubs)})
    out.system(theta)
    return rep.ok, rep


def cmd_validate(args, out: Output):
    data = _read_json(args.input)
    if "alphabet" in data:
        L = LabeledSystem.from_json(data, Path(args.input).parent)
        rep = validate_system(L.system, args.tolerance)
        rep.merge(L.validate(), "labels:")
        rep.data["weakly_saturated"] = weak_saturation(L).ok
        rep.data["two_saturated"] = two_saturation(L).ok
        return rep.ok, rep
    theta = TreeSystem.from_json(data, Path(args.input).parent)
    rep = validate_system(theta, args.tolerance)
    return rep.ok, rep


def cmd_realize(args, out: Output):
    theta = load_system(args.input)
    w, kind = _weights(theta, args)
    R = realize_limit(theta, w=w)
    emb = embedding_distortion(theta, R)
    rep = Report("realize")
    rep.data.update({"points": R.space.n, "error": R.error, "weights": kind, "diameter": R.space.diameter, "end_markers": R.end_markers, "embedding_distortion": max(emb.values(), default=0.0)})
    out.compactum(R.space, "realization.json")
    if args.format == "obj":
        out.text("realization.obj", _obj(R.space))
    return True, rep


def _parse_cells(text, theta, seed):
    if text is None:
        from .gallery.random_system import random_partition

        return random_partition(theta.tree, np.random.default_rng(seed if seed is not None else 0))
    try:
        cells = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"--cells is not JSON: {exc}") from exc
    return [frozenset(int(v) for v in c) for c in cells]


def cmd_consolidate(args, out: Output):
    theta = load_system(args.input)
    cells = _parse_cells(args.cells, theta, args.seed)
    w, kind = _weights(theta, args)
    res = consolidation_distortion(theta, cells, w=w)
    rep = Report("consolidate")
    rep.data.update({"cells": [sorted(c) for c in cells], "bijective": res["bijective"], "distortion": res["distortion"], "weights": kind})
    if not res["bijective"]:
        rep.add("bijection", "the canonical map is not a bijection")
    if res["distortion"] > args.tolerance:
        rep.add("distortion", f"canonical map distorts by {res['distortion']:.3g}")
    out.system(res["consolidation"].system)
    return rep.ok, rep


def cmd_decompose(args, out: Output):
    theta = load_system(args.input)
    t = args.vertex
    K = theta.constituents[t]
    x = args.point
    radii = [float(r) for r in args.radii.split(",")]
    nested = []
    for r in sorted(radii, reverse=True):
        H = K.dist[x] <= r + 1e-12
        shell = K.dist[x][H].max()
        A = H & (K.dist[x] >= shell - 1e-12)
        nested.append((A, H))
    C, rep = nested_family(theta, t, x, nested, resolution=args.resolution)
    rep.data.update({"vertex": t, "point": x, "splittings": len(C)})
    if out.dir is not None:
        amb = K.to_json(out.dir / "ambient.bin")
        out.text("decomposition.json", _dump({"vertex": t, "ambient": amb, "decomposition": C.to_json()}))
    return rep.ok, rep


def cmd_dualtree(args, out: Output):
    _, C = load_decomposition(args.decomposition or args.input)
    dt = dual_tree(C)
    rep = reconstruct_check(C)
    rep.data.update({"vertices": len(dt.tree.vertices), "edges": len(dt.tree.geometric_edges()), "splittings": len(C)})
    if len(dt.tree.geometric_edges()) != len(C):
        rep.add("edge-count", "dual tree edges do not match the splittings")
    if args.format == "dot":
        out.text("dualtree.dot", dt.to_dot())
    else:
        out.text("dualtree.json", _dump({"tree": dt.tree.to_json(), "domains": {v: np.flatnonzero(d.points).tolist() for v, d in dt.domains.items()}}))
    return rep.ok, rep


def _decomposition_arg(args, theta):
    if args.decomposition is None:
        raise InputError("--decomposition is required")
    t, C = load_decomposition(args.decomposition)
    if t is None:
        raise InputError("decomposition file names no vertex")
    if C.ambient.n != theta.constituents[t].n:
        raise InputError("decomposition does not match the constituent")
    C.ambient = theta.constituents[t]
    return {int(t): C}


def cmd_subdivide(args, out: Output):
    theta = load_system(args.input)
    C = _decomposition_arg(args, theta)
    sub = subdivide(theta, C)
    rep = validate_system(sub.system, args.tolerance)
    rep.data.update({"vertices": len(sub.system.tree.vertices), "provenance": sub.provenance})
    out.system(sub.system)
    if args.format == "dot":
        out.text("tree.dot", sub.system.tree.to_dot(sub.system.labels))
    return rep.ok, rep


def cmd_roundtrip(args, out: Output):
    theta = load_system(args.input)
    rep = roundtrip_check(theta, _decomposition_arg(args, theta), args.tolerance)
    return rep.ok, rep


def _family(theta, kind, levels):
    if kind == "standard":
        if "circle" not in theta.meta:
            raise InputError("the standard family needs a punctured-circle system")
        from .gallery.circle import standard_family

        return standard_family(theta)
    return build_extended(theta, kind, levels=levels, retractions=theta.meta.get("retractions") if kind == "trivial" else None)


def _chain(theta):
    _, _, depth = theta.tree.bfs()
    return balls(theta.tree, range(max(depth.values()) + 1))


def cmd_inverse(args, out: Output):
    theta = _restore_meta(load_system(args.input))
    E = _family(theta, args.kind, args.levels)
    cert = check_fine(E, depth=args.depth if args.depth is not None else 4)
    chain = _chain(theta)
    bundle = InverseBundle(E, chain)
    triples = [(chain[i], chain[j], chain[k]) for i in range(len(chain)) for j in range(i + 1, len(chain)) for k in range(j + 1, len(chain))]
    rep = check_functoriality(bundle, triples)
    rep.data["fineness"] = cert.to_json()
    rep.data["spaces"] = [S.n for S in bundle.spaces]
    if not cert.certified:
        rep.add("fineness", cert.reason)
    if out.dir is not None:
        out.text("bundle.json", _dump({"chain": [sorted(F) for F in chain], "spaces": [S.metric().to_json(out.dir / f"X{i}.bin") for i, S in enumerate(bundle.spaces)], "bonds": [b.tolist() for b in bundle.bonds]}))
    return rep.ok, rep


def cmd_threads(args, out: Output):
    theta = _restore_meta(load_system(args.input))
    E = _family(theta, args.kind, args.levels)
    bundle = InverseBundle(E, _chain(theta))
    w, _ = _weights(theta, args)
    tr = evaluate_threads(bundle, realize_limit(theta, w=w))
    rep = tr.report
    rep.data.update({"bijective": tr.bijective, "compatible": tr.compatible, "stable": tr.stable})
    return rep.ok, rep


def cmd_compare(args, out: Output):
    data = _read_json(args.input)
    if "compactum" in data:
        X = FiniteCompactum.from_json(data["compactum"], Path(args.input).parent)
    else:
        theta = TreeSystem.from_json(data, Path(args.input).parent)
        w, _ = _weights(theta, args)
        X = realize_limit(theta, w=w).space
    against = args.against
    if against.startswith("circle"):
        Y = circle_sample(int(against[len("circle") :] or 256))
    else:
        Y = FiniteCompactum.from_json(_read_json(against)["compactum"], Path(against).parent)
    corr = greedy_correspondence(X, Y)
    gh = gh_upper(X, Y, corr)
    rep = Report("compare")
    rep.data.update({"gh_upper": gh, "diameter": X.diameter, "relative": gh / X.diameter if X.diameter else 0.0, "points": [X.n, Y.n]})
    if args.threshold is not None and gh > args.threshold * X.diameter:
        rep.add("gh", f"gh bound {gh:.4g} exceeds {args.threshold} x diameter")
    return rep.ok, rep


def cmd_saturate(args, out: Output):
    L = load_labeled(args.input)
    res = saturate(L)
    rep = two_saturation(res.labeled)
    rep.merge(label_content_preserved(L, res))
    rep.data.update({"log": res.log, "vertices": len(res.labeled.tree.vertices), "cells": [sorted(c) for c in res.cells]})
    out.labeled(res.labeled)
    out.text("rewrite_log.json", _dump(res.log))
    return rep.ok, rep


COMMANDS = {
    "validate": cmd_validate,
    "realize": cmd_realize,
    "consolidate": cmd_consolidate,
    "subdivide": cmd_subdivide,
    "decompose": cmd_decompose,
    "dualtree": cmd_dualtree,
    "inverse": cmd_inverse,
    "threads": cmd_threads,
    "compare": cmd_compare,
    "gen": cmd_gen,
    "saturate": cmd_saturate,
    "roundtrip": cmd_roundtrip,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="system, labeled system, decomposition or realization JSON")
    common.add_argument("--output", help="directory for the report and artifacts")
    common.add_argument("--seed", type=int)
    common.add_argument("--depth", type=int)
    common.add_argument("--ratio", type=float, help="geometric weight ratio, or the generator's decay ratio for gen")
    common.add_argument("--tolerance", type=float, default=1e-9)
    common.add_argument("--format", choices=("json", "dot", "obj"), default="json")
    common.add_argument("--weights", choices=("geometric", "uniform"), help="default: the generator's declared schedule, else geometric")
    p = argparse.ArgumentParser(prog="arbor", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "gen":
            sp.add_argument("kind", choices=GENERATORS)
        if name == "consolidate":
            sp.add_argument("--cells", help='JSON list of vertex lists; random partition from --seed when absent')
        if name in ("subdivide", "roundtrip", "dualtree"):
            sp.add_argument("--decomposition")
        if name == "decompose":
            sp.add_argument("--vertex", type=int, default=0)
            sp.add_argument("--point", type=int, required=True)
            sp.add_argument("--radii", required=True, help="comma separated, outermost first or in any order")
            sp.add_argument("--resolution", type=float)
        if name in ("inverse", "threads"):
            sp.add_argument("--kind", choices=("conical", "trivial", "standard"), default="conical")
            sp.add_argument("--levels", type=int, default=4, help="cone levels")
        if name == "compare":
            sp.add_argument("--against", default="circle256", help="circleN or a realization JSON")
            sp.add_argument("--threshold", type=float, help="fail when gh exceeds this multiple of the diameter")
    return p


def _config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items())}
    cfg["threads"] = os.environ.get("ARBOR_THREADS")  # recorded only; results never depend on it
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tolerance <= 0:
        parser.error("--tolerance must be positive")
    try:
        out = Output(args.output)
        ok, rep = COMMANDS[args.command](args, out)
        status = 0 if ok else 1
    except InputError as exc:
        rep, status, out = Report(args.command), 3, Output(None)
        rep.add("io", str(exc))
    except (SystemError_, DecompositionError, RewriteError, LabelError, KeyError, ValueError) as exc:
        rep, status, out = Report(args.command), 1, Output(None)
        rep.add("error", f"{type(exc).__name__}: {exc}")
    envelope = {"schema": REPORT_SCHEMA, "version": __version__, "command": args.command, "config": _config(args), "status": status, "artifacts": sorted(out.written), "report": rep.to_json()}
    text = _dump(envelope)
    if args.output is not None and status != 3:
        try:
            (Path(args.output) / "report.json").write_text(text)
        except OSError:
            status = 3
    sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
