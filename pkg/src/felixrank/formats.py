"""Readers and writers for the on-disk formats.

* item catalog: CSV ``query_id,doc_id,merit,feature``
* MRP matrix: JSON ``{query_id, n, k, entries, objective, fairness_residual}``
* policy: JSON ``{query_id, n, k, entries: [{prob, doc_indices}]}`` plus
  ``iterations``, ``seed`` and ``unknown_mass_trace`` for re-sampled policies
* metrics and sensitivity tables: CSV

Files holding several queries wrap the per-query objects as ``{"queries": [...]}``.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from collections import OrderedDict

import numpy as np

from .core import MERIT_FLOOR, Item, ItemCatalog, MrpMatrix, StochasticPolicy, normalize_scores
from .felix import FelixPolicy

CATALOG_HEADER = ["query_id", "doc_id", "merit", "feature"]
METRICS_HEADER = ["query_id", "ee_l", "ndcg_5", "ndcg_10", "p_unknown", "outlierness", "utility"]
SENSITIVITY_HEADER = ["distribution", "x", "relative_reduction_pct", "queries_used",
                      "queries_skipped"]


class FormatError(ValueError):
    pass


def atomic_write(path, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- catalogs ---------------------------------------------------------------

def read_catalogs(path, normalize: bool = False,
                  merit_floor: float = MERIT_FLOOR) -> list[ItemCatalog]:
    """Parse a catalog CSV, grouping rows by query_id in order of appearance.

    With ``normalize`` the merits of each query are affinely rescaled to
    ``[merit_floor, 1]``; otherwise they must already lie there.
    """
    groups: "OrderedDict[str, list]" = OrderedDict()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CATALOG_HEADER:
            raise FormatError(f"{path}:1: expected header {','.join(CATALOG_HEADER)}")
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise FormatError(f"{path}:{line}: expected 4 fields, got {len(row)}")
            qid, doc, merit, feature = (c.strip() for c in row)
            try:
                m, g = float(merit), float(feature)
            except ValueError:
                raise FormatError(f"{path}:{line}: merit and feature must be numbers") from None
            if not (math.isfinite(m) and math.isfinite(g)):
                raise FormatError(f"{path}:{line}: non-finite value")
            groups.setdefault(qid, []).append((line, doc, m, g))

    out = []
    for qid, rows in groups.items():
        merits = np.array([r[2] for r in rows])
        if normalize:
            merits = normalize_scores(merits, merit_floor)
        items = tuple(Item(doc, float(u), g) for (_, doc, _, g), u in zip(rows, merits))
        try:
            out.append(ItemCatalog(qid, items, merit_floor))
        except ValueError as e:
            raise FormatError(f"{path}:{rows[0][0]}: {e}") from None
    if not out:
        raise FormatError(f"{path}: no items")
    return out


def catalogs_to_csv(catalogs) -> str:
    lines = [",".join(CATALOG_HEADER)]
    for cat in catalogs:
        for it in cat.items:
            lines.append(f"{cat.query_id},{it.doc_id},{it.merit!r},{it.feature!r}")
    return "\n".join(lines) + "\n"


# -- JSON documents ------------------------------------------------------------

def mrp_to_dict(P, query_id="", objective=None, fairness_residual=None) -> dict:
    a = np.asarray(P, dtype=float)
    return {"query_id": query_id, "n": int(a.shape[0]), "k": int(a.shape[1]),
            "entries": a.tolist(), "objective": objective,
            "fairness_residual": fairness_residual}


def mrp_from_dict(d) -> tuple[str, MrpMatrix]:
    try:
        a = np.array(d["entries"], dtype=float).reshape(int(d["n"]), int(d["k"]))
    except (KeyError, ValueError, TypeError) as e:
        raise FormatError(f"malformed MRP document: {e}") from None
    return str(d.get("query_id", "")), MrpMatrix(a)


def policy_to_dict(policy: StochasticPolicy) -> dict:
    d = {"query_id": policy.query_id, "n": policy.n, "k": policy.k,
         "entries": [{"prob": p, "doc_indices": list(r)} for p, r in policy]}
    if isinstance(policy, FelixPolicy):
        d["iterations"] = policy.iterations
        d["seed"] = policy.seed
        d["unknown_mass_trace"] = list(policy.unknown_mass_trace)
    return d


def policy_from_dict(d) -> StochasticPolicy:
    try:
        entries = tuple((float(e["prob"]), tuple(e["doc_indices"])) for e in d["entries"])
        base = dict(entries=entries, n=int(d["n"]), k=int(d["k"]),
                    query_id=str(d.get("query_id", "")))
        if "unknown_mass_trace" in d:
            return FelixPolicy(**base, iterations=int(d["iterations"]), seed=d.get("seed"),
                               unknown_mass_trace=tuple(d["unknown_mass_trace"]))
        return StochasticPolicy(**base)
    except (KeyError, TypeError) as e:
        raise FormatError(f"malformed policy document: {e}") from None


def dump_documents(docs: list[dict]) -> str:
    body = docs[0] if len(docs) == 1 else {"queries": docs}
    return json.dumps(body, indent=1, sort_keys=True) + "\n"


def load_documents(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        try:
            body = json.load(fh)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}: invalid JSON ({e})") from None
    if isinstance(body, dict) and "queries" in body:
        return list(body["queries"])
    return [body]


def write_mrps(path, docs) -> None:
    atomic_write(path, dump_documents(docs))


def read_mrps(path) -> list[tuple[str, MrpMatrix]]:
    return [mrp_from_dict(d) for d in load_documents(path)]


def write_policies(path, policies) -> None:
    atomic_write(path, dump_documents([policy_to_dict(p) for p in policies]))


def read_policies(path) -> list[StochasticPolicy]:
    return [policy_from_dict(d) for d in load_documents(path)]


# -- tables --------------------------------------------------------------------

def metrics_to_csv(named_reports, mean) -> str:
    """One row per (query_id, EvalReport) pair, then a MEAN row."""
    def row(qid, r):
        return [qid, r.ee_l, r.ndcg_at.get(5), r.ndcg_at.get(10), r.prob_unknown,
                r.outlierness_at, r.utility]

    lines = [",".join(METRICS_HEADER)]
    for qid, r in list(named_reports) + [("MEAN", mean)]:
        lines.append(",".join(_fmt(x) for x in row(qid, r)))
    return "\n".join(lines) + "\n"


def read_metrics(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (v if k == "query_id" else float(v)) for k, v in r.items()} for r in rows]


def sensitivity_to_csv(rows) -> str:
    lines = [",".join(SENSITIVITY_HEADER)]
    for r in rows:
        lines.append(",".join(_fmt(x) for x in (r.distribution, r.x, r.relative_reduction_pct,
                                                 r.queries_used, r.queries_skipped)))
    return "\n".join(lines) + "\n"


def read_sensitivity(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{"distribution": r["distribution"], "x": int(r["x"]),
             "relative_reduction_pct": float(r["relative_reduction_pct"]),
             "queries_used": int(r["queries_used"]),
             "queries_skipped": int(r["queries_skipped"])} for r in rows]


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)
