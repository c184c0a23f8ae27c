"""JSON spline archives.

Top-level fields: ``knots`` (reals), ``order`` (int), ``type`` (family
tag), ``epsilon`` (real), ``splines`` (list of members, each with ``supp``,
a list of 0-based ``[lo, hi]`` knot-index pairs, and ``der``, one row-major
matrix per support component in the symmetric convention), and optionally
``net`` (list of levels, each a list of member-index tuples).  Floats are
written in shortest-round-trip decimal form, so write/read round-trips are
bit-exact.
"""

from __future__ import annotations

import json

import numpy as np

from .bases import DyadicNet
from .core import (
    KnotSet,
    SplineFamily,
    SupportSet,
    SYMMETRIC,
    as_symmetric,
    make_member,
)


def family_to_dict(fam, net=None):
    fam = as_symmetric(fam)
    out = {
        "knots": [float(x) for x in fam.knots.xi],
        "order": int(fam.smorder),
        "type": fam.type,
        "epsilon": float(fam.epsilon),
        "splines": [
            {
                "supp": [[int(lo), int(hi)] for lo, hi in supp],
                "der": [[[float(x) for x in row] for row in blk]
                        for blk in der.blocks],
            }
            for supp, der in fam.members
        ],
    }
    if net is not None:
        out["net"] = [[list(t) for t in level] for level in net.levels]
    return out


def family_from_dict(obj):
    knots = KnotSet(np.array(obj["knots"], dtype=float))
    k = int(obj["order"])
    members = []
    for item in obj["splines"]:
        supp = SupportSet(tuple((lo, hi) for lo, hi in item["supp"]))
        blocks = [np.array(b, dtype=float) for b in item["der"]]
        for (lo, hi), blk in zip(supp, blocks):
            if blk.shape != (hi - lo + 1, k + 1):
                raise ValueError("derivative block shape does not match support")
        members.append(make_member(supp, blocks, SYMMETRIC))
    fam = SplineFamily(knots, k, tuple(members), obj.get("type", "sp"),
                       float(obj.get("epsilon", 1e-7)))
    net = None
    if "net" in obj:
        levels = tuple(tuple(tuple(int(i) for i in t) for t in lv)
                       for lv in obj["net"])
        d = len(fam)
        n_tuples = sum(len(lv) for lv in levels)
        complete = n_tuples == 2 ** len(levels) - 1 and all(
            len(t) == max(k, 1) for lv in levels for t in lv
        ) and n_tuples * max(k, 1) == d
        net = DyadicNet(levels, complete, k)
    return fam, net


def save_archive(path, fam, net=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(family_to_dict(fam, net), fh, indent=1)
        fh.write("\n")


def load_archive(path):
    """Returns ``(family, net-or-None)``; the family is in the symmetric
    convention as stored."""
    with open(path, encoding="utf-8") as fh:
        return family_from_dict(json.load(fh))
