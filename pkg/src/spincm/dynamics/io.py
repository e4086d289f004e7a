"""Trajectory serialization: JSON with 17-significant-digit reals, atomic writes."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from ..openchain import OpenRadialState
from ..orbits import KOrbitPoint, RankOneOrbitPoint
from ..periodic import PeriodicRadialState
from .integrate import Trajectory

__all__ = [
    "dumps",
    "atomic_write",
    "state_to_dict",
    "state_from_dict",
    "trajectory_to_dict",
    "trajectory_from_dict",
    "save_trajectory",
    "load_trajectory",
    "flat_row",
    "csv_header",
]


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    s = format(x, ".17g")
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def dumps(obj, indent: int | None = 1) -> str:
    """JSON text with every real written to 17 significant digits and sorted keys."""

    def enc(o, level):
        pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
        end = "" if indent is None else "\n" + " " * (indent * level)
        sep = "," if indent is None else ","
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {enc(o[k], level + 1)}" for k in sorted(o)]
            return "{" + sep.join(items) + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in o):
                return "[" + ", ".join(enc(v, level) for v in o) + "]"
            return "[" + sep.join(f"{pad}{enc(v, level + 1)}" for v in o) + end + "]"
        if isinstance(o, np.ndarray):
            return enc(o.tolist(), level)
        if isinstance(o, (bool, np.bool_)):
            return "true" if o else "false"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _fmt_float(float(o))
        if o is None:
            return "null"
        if isinstance(o, str):
            return json.dumps(o)
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0) + "\n"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def state_to_dict(state) -> dict:
    spins = []
    for sp in state.spins:
        if not isinstance(sp, RankOneOrbitPoint):
            raise TypeError("only rank-one spins are serializable")
        spins.append({"xi": sp.xi, "a": sp.a.tolist(), "b": sp.b.tolist()})
    out = {"p": state.p.tolist(), "q": state.q.tolist(), "spins": spins}
    if isinstance(state, OpenRadialState):
        out["mu_left"] = state.L.tolist()
        out["mu_right"] = state.R.tolist()
    return out


def state_from_dict(d: dict, tol: float = 1e-7):
    spins = tuple(RankOneOrbitPoint(s["xi"], s["a"], s["b"], tol=tol) for s in d["spins"])
    if "mu_left" in d:
        return OpenRadialState(
            KOrbitPoint(np.array(d["mu_left"])), spins, KOrbitPoint(np.array(d["mu_right"])), d["p"], d["q"], tol=tol
        )
    return PeriodicRadialState(spins, d["p"], d["q"], tol=tol)


def trajectory_to_dict(traj: Trajectory) -> dict:
    return {
        "times": traj.times.tolist(),
        "states": [state_to_dict(s) for s in traj.states],
        "meta": traj.meta,
    }


def trajectory_from_dict(d: dict, tol: float = 1e-7) -> Trajectory:
    return Trajectory(np.array(d["times"], dtype=float), [state_from_dict(s, tol) for s in d["states"]], d.get("meta", {}))


def save_trajectory(traj: Trajectory, path) -> None:
    atomic_write(path, dumps(trajectory_to_dict(traj)))


def load_trajectory(path, tol: float = 1e-7) -> Trajectory:
    with open(path, encoding="utf-8") as fh:
        return trajectory_from_dict(json.load(fh), tol)


def csv_header(state) -> list[str]:
    N = state.N
    cols = [f"p{i + 1}" for i in range(N)] + [f"q{i + 1}" for i in range(N)]
    for k in range(state.n):
        cols += [f"a{k + 1}_{i + 1}" for i in range(N)] + [f"b{k + 1}_{i + 1}" for i in range(N)]
    if isinstance(state, OpenRadialState):
        iu = zip(*np.triu_indices(N, 1))
        pairs = [(i + 1, j + 1) for i, j in iu]
        cols += [f"L{i}{j}" for i, j in pairs] + [f"R{i}{j}" for i, j in pairs]
    return cols


def flat_row(state) -> list[float]:
    """CSV order: ``p``, ``q``, then ``a``, ``b`` per site, then boundary upper triangles."""
    row = list(state.p) + list(state.q)
    for sp in state.spins:
        row += list(sp.a) + list(sp.b)
    if isinstance(state, OpenRadialState):
        iu = np.triu_indices(state.N, 1)
        row += list(state.L[iu]) + list(state.R[iu])
    return [float(v) for v in row]
