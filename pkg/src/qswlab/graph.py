"""Graph model for open walks: coherent couplings plus incoherent rates.

A walk graph carries three layers on one node set: a Hermitian coupling
g_ij driving coherent hopping, directed non-negative rates gamma(n->m)
driving incoherent jumps, and an optional normalized initial amplitude
vector. The JSON exchange format is strict: unknown keys are rejected
and every reference must resolve to a declared node label.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_NODES = 4096

# both directions of a coherent pair must agree as conjugates
_HERMITIAN_TOL = 1e-12
_NORM_TOL = 1e-12


class GraphFormatError(ValueError):
    """Raised when a graph document violates the schema or its invariants."""


@dataclass(frozen=True, eq=False)
class GraphSpec:
    """Validated walk graph.

    coherent maps ordered index pairs (i, j) to complex couplings and
    always stores both directions of each pair; incoherent maps (n, m)
    to the rate of the jump n -> m (self-rates allowed). initial, when
    present, is a unit-norm complex amplitude vector over the nodes.
    """

    labels: tuple[str, ...]
    coherent: dict[tuple[int, int], complex] = field(default_factory=dict)
    incoherent: dict[tuple[int, int], float] = field(default_factory=dict)
    initial: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.labels)
        if n == 0:
            raise GraphFormatError("graph must declare at least one node")
        if n > MAX_NODES:
            raise GraphFormatError(
                f"graph has {n} nodes, more than the supported {MAX_NODES}"
            )
        if len(set(self.labels)) != n:
            raise GraphFormatError("node labels must be distinct")
        for (i, j), g in self.coherent.items():
            self._check_index(i), self._check_index(j)
            if not (math.isfinite(g.real) and math.isfinite(g.imag)):
                raise GraphFormatError(f"coupling ({i},{j}) is not finite")
            mirror = self.coherent.get((j, i))
            if mirror is None:
                raise GraphFormatError(
                    f"coupling ({i},{j}) stored without its ({j},{i}) partner"
                )
            if abs(g - mirror.conjugate()) > _HERMITIAN_TOL * max(1.0, abs(g)):
                raise GraphFormatError(
                    f"couplings ({i},{j}) and ({j},{i}) are not conjugate"
                )
        for (n_, m), rate in self.incoherent.items():
            self._check_index(n_), self._check_index(m)
            if not math.isfinite(rate) or rate < 0:
                raise GraphFormatError(
                    f"rate ({n_}->{m}) must be finite and non-negative"
                )
        if self.initial is not None:
            psi = np.asarray(self.initial, dtype=complex)
            if psi.shape != (n,):
                raise GraphFormatError(
                    f"initial state must have one amplitude per node ({n})"
                )
            if not np.all(np.isfinite(psi.view(float))):
                raise GraphFormatError("initial amplitudes must be finite")
            nrm = float(np.sum(np.abs(psi) ** 2))
            if abs(nrm - 1.0) > _NORM_TOL:
                raise GraphFormatError(
                    f"initial state norm^2 = {nrm!r}, expected 1"
                )
            object.__setattr__(self, "initial", psi)
            self.initial.setflags(write=False)

    def _check_index(self, k: int) -> None:
        if not isinstance(k, (int, np.integer)) or not 0 <= k < len(self.labels):
            raise GraphFormatError(f"node index {k!r} out of range")

    @property
    def node_count(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown node label {label!r}") from None

    def gamma_matrix(self) -> np.ndarray:
        """Rates as a dense array G[n, m] = gamma(n -> m)."""
        g = np.zeros((self.node_count, self.node_count))
        for (n, m), rate in self.incoherent.items():
            g[n, m] = rate
        return g

    def lambda_vector(self) -> np.ndarray:
        """Total leaving rate per node, lambda_k = sum_m gamma(k -> m)."""
        lam = np.zeros(self.node_count)
        for (n, _m), rate in self.incoherent.items():
            lam[n] += rate
        return lam

    @classmethod
    def from_edges(
        cls,
        labels: Sequence[str],
        coherent: Mapping[tuple[int, int], complex] | None = None,
        incoherent: Mapping[tuple[int, int], float] | None = None,
        initial: Mapping[int, complex] | Sequence[complex] | None = None,
    ) -> "GraphSpec":
        """Build a graph from sparse edge mappings.

        Coherent entries may be given in either or both directions; the
        missing direction is filled with the conjugate, and inconsistent
        pairs are rejected. The initial state is normalized here (it
        must be nonzero), unlike the strict file parser.
        """
        labels = tuple(str(x) for x in labels)
        coh: dict[tuple[int, int], complex] = {}
        for (i, j), g in dict(coherent or {}).items():
            g = complex(g)
            for key, val in (((i, j), g), ((j, i), g.conjugate())):
                prev = coh.get(key)
                if prev is not None and abs(prev - val) > _HERMITIAN_TOL * max(
                    1.0, abs(val)
                ):
                    raise GraphFormatError(
                        f"conflicting couplings for pair {key}"
                    )
                coh[key] = val if prev is None else prev
        inc = {
            (n, m): float(rate)
            for (n, m), rate in dict(incoherent or {}).items()
        }
        psi = None
        if initial is not None:
            psi = np.zeros(len(labels), dtype=complex)
            if isinstance(initial, Mapping):
                for node, amp in initial.items():
                    psi[node] = complex(amp)
            else:
                arr = np.asarray(list(initial), dtype=complex)
                if arr.shape != (len(labels),):
                    raise GraphFormatError(
                        "initial sequence must cover every node"
                    )
                psi[:] = arr
            nrm = float(np.linalg.norm(psi))
            if nrm <= 0:
                raise GraphFormatError("initial state must be nonzero")
            psi = psi / nrm
        return cls(labels=labels, coherent=coh, incoherent=inc, initial=psi)


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise GraphFormatError(
            f"{where}: unknown key(s) {sorted(unknown)}"
        )
    missing = required - set(obj)
    if missing:
        raise GraphFormatError(f"{where}: missing key(s) {sorted(missing)}")


def _as_number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise GraphFormatError(f"{where} must be a number, got {x!r}")
    if not math.isfinite(x):
        raise GraphFormatError(f"{where} must be finite, got {x!r}")
    return float(x)


def parse_graph(text: str | bytes) -> GraphSpec:
    """Parse and validate the JSON graph format.

    Top-level keys: "nodes" (required), "coherent", "incoherent",
    "initial". Entry shapes: coherent {"i","j","re","im"}, incoherent
    {"from","to","rate"}, initial {"node","re","im"}; "im" defaults to
    zero. Errors name the offending entry by section and position.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise GraphFormatError("top level must be a JSON object")
    _require_keys(
        doc,
        {"nodes", "coherent", "incoherent", "initial"},
        {"nodes"},
        "top level",
    )

    nodes = doc["nodes"]
    if not isinstance(nodes, list) or not nodes:
        raise GraphFormatError('"nodes" must be a non-empty list')
    if not all(isinstance(x, str) for x in nodes):
        raise GraphFormatError("node labels must be strings")
    if len(set(nodes)) != len(nodes):
        dupes = sorted({x for x in nodes if nodes.count(x) > 1})
        raise GraphFormatError(f"duplicate node label(s) {dupes}")
    if len(nodes) > MAX_NODES:
        raise GraphFormatError(
            f"graph has {len(nodes)} nodes, more than the supported {MAX_NODES}"
        )
    idx = {label: k for k, label in enumerate(nodes)}

    def resolve(label, where):
        if not isinstance(label, str) or label not in idx:
            raise GraphFormatError(f"{where} references unknown node {label!r}")
        return idx[label]

    coherent: dict[tuple[int, int], complex] = {}
    given: dict[tuple[int, int], complex] = {}
    for pos, entry in enumerate(doc.get("coherent", [])):
        where = f"coherent[{pos}]"
        if not isinstance(entry, dict):
            raise GraphFormatError(f"{where} must be an object")
        _require_keys(entry, {"i", "j", "re", "im"}, {"i", "j", "re"}, where)
        i = resolve(entry["i"], where)
        j = resolve(entry["j"], where)
        g = complex(
            _as_number(entry["re"], f"{where}.re"),
            _as_number(entry.get("im", 0.0), f"{where}.im"),
        )
        if (i, j) in given:
            raise GraphFormatError(f"{where}: pair given twice")
        given[(i, j)] = g
        if i == j and abs(g.imag) > _HERMITIAN_TOL:
            raise GraphFormatError(f"{where}: diagonal coupling must be real")
        mirror = given.get((j, i))
        if mirror is not None and abs(g - mirror.conjugate()) > _HERMITIAN_TOL * max(
            1.0, abs(g)
        ):
            raise GraphFormatError(
                f"{where}: not the conjugate of the earlier ({entry['j']!r},"
                f"{entry['i']!r}) entry"
            )
        coherent[(i, j)] = g
        coherent.setdefault((j, i), g.conjugate())

    incoherent: dict[tuple[int, int], float] = {}
    for pos, entry in enumerate(doc.get("incoherent", [])):
        where = f"incoherent[{pos}]"
        if not isinstance(entry, dict):
            raise GraphFormatError(f"{where} must be an object")
        _require_keys(entry, {"from", "to", "rate"}, {"from", "to", "rate"}, where)
        n = resolve(entry["from"], where)
        m = resolve(entry["to"], where)
        rate = _as_number(entry["rate"], f"{where}.rate")
        if rate < 0:
            raise GraphFormatError(f"{where}.rate must be non-negative")
        if (n, m) in incoherent:
            raise GraphFormatError(f"{where}: rate given twice")
        incoherent[(n, m)] = rate

    initial = None
    if "initial" in doc:
        entries = doc["initial"]
        if not isinstance(entries, list) or not entries:
            raise GraphFormatError('"initial" must be a non-empty list')
        psi = np.zeros(len(nodes), dtype=complex)
        seen: set[int] = set()
        for pos, entry in enumerate(entries):
            where = f"initial[{pos}]"
            if not isinstance(entry, dict):
                raise GraphFormatError(f"{where} must be an object")
            _require_keys(entry, {"node", "re", "im"}, {"node", "re"}, where)
            node = resolve(entry["node"], where)
            if node in seen:
                raise GraphFormatError(f"{where}: node given twice")
            seen.add(node)
            psi[node] = complex(
                _as_number(entry["re"], f"{where}.re"),
                _as_number(entry.get("im", 0.0), f"{where}.im"),
            )
        nrm = float(np.sum(np.abs(psi) ** 2))
        if abs(nrm - 1.0) > _NORM_TOL:
            raise GraphFormatError(
                f"initial state norm^2 = {nrm!r}, must equal 1"
            )
        initial = psi

    return GraphSpec(
        labels=tuple(nodes),
        coherent=coherent,
        incoherent=incoherent,
        initial=initial,
    )


def load_graph(path) -> GraphSpec:
    """Read a graph document from a file path."""
    with open(path, "rb") as fh:
        return parse_graph(fh.read())


def node_lambda(g: GraphSpec, k: int) -> float:
    """Total leaving rate of node k."""
    g._check_index(k)
    return float(g.lambda_vector()[k])


def coherent_subgraphs(g: GraphSpec) -> tuple[tuple[int, ...], ...]:
    """Connected components of the nonzero coherent coupling graph.

    Nodes with no coherent edges form singleton components. Components
    are ordered by their smallest node index.
    """
    n = g.node_count
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for (i, j), val in g.coherent.items():
        if i != j and val != 0:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for k in range(n):
        groups.setdefault(find(k), []).append(k)
    return tuple(tuple(sorted(v)) for _, v in sorted(groups.items()))


@dataclass(frozen=True)
class ValidationReport:
    """Admissibility verdict for a graph.

    A coherent edge (n, m) is a violation when g_nm is nonzero and the
    leaving rates differ, |g_nm| * |lambda_n - lambda_m| > tolerance;
    the walk is exactly realizable by rate-preserving jump dynamics iff
    there are no violations. subgraph_lambdas holds the shared leaving
    rate of each coherent component, or None where the component itself
    contains a violation. trotter_mismatch is the largest relative rate
    mismatch over coherent edges, the knob an approximate split would
    have to absorb.
    """

    admissible: bool
    violations: tuple[tuple[int, int, complex, float, float], ...]
    subgraphs: tuple[tuple[int, ...], ...]
    subgraph_lambdas: tuple[float | None, ...]
    trotter_mismatch: float
    tolerance: float

    def to_dict(self, labels: Sequence[str] | None = None) -> dict:
        name = (lambda k: labels[k]) if labels is not None else (lambda k: k)
        return {
            "admissible": self.admissible,
            "violations": [
                {
                    "i": name(n),
                    "j": name(m),
                    "coupling": [g.real, g.imag],
                    "lambda_i": ln,
                    "lambda_j": lm,
                }
                for n, m, g, ln, lm in self.violations
            ],
            "subgraphs": [
                {
                    "nodes": [name(k) for k in comp],
                    "lambda": lam,
                }
                for comp, lam in zip(self.subgraphs, self.subgraph_lambdas)
            ],
            "trotter_mismatch": self.trotter_mismatch,
            "tolerance": self.tolerance,
        }


def validate(g: GraphSpec, tol: float = 1e-10) -> ValidationReport:
    """Check whether coherent coupling commutes with the decay profile.

    The absolute tolerance scales with the largest rate and coupling:
    an edge violates when |g_nm| * |lambda_n - lambda_m| exceeds
    tol * max(1, max lambda) * max(1, max |g|).
    """
    lam = g.lambda_vector()
    max_g = max((abs(v) for v in g.coherent.values()), default=0.0)
    scale = tol * max(1.0, float(lam.max(initial=0.0))) * max(1.0, max_g)

    violations = []
    mismatch = 0.0
    for (n, m), val in sorted(g.coherent.items()):
        if n >= m or val == 0:
            continue
        if abs(val) * abs(lam[n] - lam[m]) > scale:
            violations.append((n, m, val, float(lam[n]), float(lam[m])))
        denom = max(lam[n], lam[m])
        if denom > 0:
            mismatch = max(mismatch, abs(lam[n] - lam[m]) / denom)

    bad_nodes = {n for n, m, *_ in violations} | {m for n, m, *_ in violations}
    subgraphs = coherent_subgraphs(g)
    sub_lambdas: list[float | None] = []
    for comp in subgraphs:
        if bad_nodes & set(comp):
            sub_lambdas.append(None)
        else:
            sub_lambdas.append(float(np.mean([lam[k] for k in comp])))

    return ValidationReport(
        admissible=not violations,
        violations=tuple(violations),
        subgraphs=subgraphs,
        subgraph_lambdas=tuple(sub_lambdas),
        trotter_mismatch=mismatch,
        tolerance=scale,
    )
