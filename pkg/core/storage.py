# core/storage.py
"""
Artifact persistence:
- `system.v1` JSON matrix container (systems, realizations, Markov estimates)
- one CSV per matrix for trajectories and regression data
- flat JSON records for error and verification reports
"""

import json
import os
from dataclasses import asdict
from typing import Dict, List

import numpy as np
import pandas as pd

from core.errors import SchemaError
from core.models import (
    ExperimentFailure,
    ExperimentRecord,
    ExperimentReport,
    MarkovMatrix,
    NoiseConfig,
    Realization,
    RegressionData,
    System,
    Trajectory,
)

SCHEMA = "system.v1"

REGRESSION_MATRICES = ("Y", "U", "W", "E", "V", "F")
TRAJECTORY_MATRICES = {
    "inputs": "u",
    "states": "x",
    "process_noise": "w",
    "measurement_noise": "v",
    "outputs": "y",
}


def _as_rows(M: np.ndarray) -> List[List[float]]:
    return np.asarray(M, dtype=float).tolist()


def _as_matrix(rows, name: str, shape) -> np.ndarray:
    """Row-major list → float matrix of the declared shape."""
    try:
        arr = np.array(rows, dtype=float).reshape(shape)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"matrix '{name}' does not match declared shape {shape}: {e}") from None
    return arr


# ═══════════════════════════════════════════════════════════════
# system.v1 CONTAINER
# ═══════════════════════════════════════════════════════════════

def system_to_container(sys: System) -> Dict:
    return {
        "schema": SCHEMA,
        "dims": {"n": sys.n, "m": sys.m, "p": sys.p},
        "matrices": {name: _as_rows(getattr(sys, name)) for name in ("A", "B", "C", "D")},
    }


def system_from_container(doc: Dict) -> System:
    _check_schema(doc)
    dims, mats = doc["dims"], doc["matrices"]
    try:
        n, m, p = int(dims["n"]), int(dims["m"]), int(dims["p"])
        shapes = {"A": (n, n), "B": (n, p), "C": (m, n), "D": (m, p)}
        return System(**{k: _as_matrix(mats[k], k, s) for k, s in shapes.items()})
    except KeyError as e:
        raise SchemaError(f"system.v1 document is missing {e}") from None


def realization_to_container(real: Realization) -> Dict:
    doc = system_to_container(real.as_system())
    doc["dims"]["r"] = real.r
    return doc


def markov_to_container(G: MarkovMatrix) -> Dict:
    doc = {
        "schema": SCHEMA,
        "dims": {"m": G.m, "p": G.p, "K": G.K},
        "matrices": {"G": _as_rows(G.G)},
        "meta": {"underdetermined": G.underdetermined},
    }
    if G.lam is not None:
        doc["meta"]["lambda"] = G.lam
    if G.kkt_residuals is not None:
        doc["meta"]["kkt_residuals"] = [float(x) for x in G.kkt_residuals]
    if G.converged is not None:
        doc["meta"]["converged"] = [bool(x) for x in G.converged]
    return doc


def markov_from_container(doc: Dict) -> MarkovMatrix:
    _check_schema(doc)
    try:
        m, p, K = int(doc["dims"]["m"]), int(doc["dims"]["p"]), int(doc["dims"]["K"])
        G = _as_matrix(doc["matrices"]["G"], "G", (m, K * p))
    except KeyError as e:
        raise SchemaError(f"Markov document is missing {e}") from None
    meta = doc.get("meta", {})
    return MarkovMatrix(
        G=G,
        p=p,
        underdetermined=bool(meta.get("underdetermined", False)),
        lam=meta.get("lambda"),
        kkt_residuals=np.array(meta["kkt_residuals"]) if "kkt_residuals" in meta else None,
        converged=np.array(meta["converged"], dtype=bool) if "converged" in meta else None,
    )


def _check_schema(doc: Dict):
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        found = doc.get("schema") if isinstance(doc, dict) else type(doc).__name__
        raise SchemaError(f"expected schema '{SCHEMA}', found {found!r}")
    if "dims" not in doc or "matrices" not in doc:
        raise SchemaError("system.v1 document needs 'dims' and 'matrices'")


# ═══════════════════════════════════════════════════════════════
# ARTIFACT STORE
# ═══════════════════════════════════════════════════════════════

class ArtifactStore:
    """Reads and writes artifacts under one output directory."""

    def __init__(self, root: str, verbose: bool = False):
        self.root = root
        self.verbose = verbose

    def path(self, *parts: str) -> str:
        return os.path.join(self.root, *parts)

    def _ensure(self, path: str) -> str:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        return path

    def _say(self, message: str):
        if self.verbose:
            print(message)

    # ── JSON ─────────────────────────────────────────────────

    def save_json(self, doc, name: str) -> str:
        path = self._ensure(self.path(name))
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=False, allow_nan=True)
            fh.write("\n")
        self._say(f"✓ Wrote {path}")
        return path

    def save_text(self, text: str, name: str) -> str:
        path = self._ensure(self.path(name))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        self._say(f"✓ Wrote {path}")
        return path

    def load_json(self, name: str):
        path = self.path(name)
        try:
            with open(path, encoding="utf-8") as fh:
                return json.load(fh)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path} is not valid JSON: {e}") from None

    # ── systems / estimates ─────────────────────────────────

    def save_system(self, sys: System, name: str = "system.json") -> str:
        return self.save_json(system_to_container(sys), name)

    def load_system(self, name: str) -> System:
        return system_from_container(self.load_json(name))

    def save_realization(self, real: Realization, name: str = "realization.json") -> str:
        """Realization in system.v1 plus a `<stem>.singular_values.json` sidecar."""
        path = self.save_json(realization_to_container(real), name)
        stem, _ = os.path.splitext(name)
        self.save_json({"singular_values": [float(s) for s in real.singular_values]},
                       f"{stem}.singular_values.json")
        return path

    def load_realization(self, name: str) -> Realization:
        sys = self.load_system(name)
        stem, _ = os.path.splitext(name)
        sidecar = f"{stem}.singular_values.json"
        values = self.load_json(sidecar)["singular_values"] if os.path.exists(self.path(sidecar)) else []
        return Realization(sys.A, sys.B, sys.C, sys.D, np.asarray(values, dtype=float))

    def save_markov(self, G: MarkovMatrix, name: str = "markov.json") -> str:
        return self.save_json(markov_to_container(G), name)

    def load_markov(self, name: str) -> MarkovMatrix:
        return markov_from_container(self.load_json(name))

    # ── CSV matrices ────────────────────────────────────────

    def save_matrix(self, M: np.ndarray, name: str) -> str:
        path = self._ensure(self.path(name))
        pd.DataFrame(np.atleast_2d(M)).to_csv(path, index=False, header=False,
                                              float_format="%.17g", lineterminator="\n")
        return path

    def load_matrix(self, name: str) -> np.ndarray:
        path = self.path(name)
        if os.path.getsize(path) == 0:
            return np.zeros((0, 0))
        return pd.read_csv(path, header=None).to_numpy(dtype=float)

    def save_regression(self, data: RegressionData, directory: str = "regression") -> List[str]:
        """One headerless CSV per matrix (Y, U and, when present, W, E, V, F) plus meta.json."""
        written = []
        for name in REGRESSION_MATRICES:
            M = getattr(data, name)
            if M is not None:
                written.append(self.save_matrix(M, os.path.join(directory, f"{name}.csv")))
        written.append(self.save_json({"T": data.T, "p": data.p, "n": data.n, "N": data.N, "m": data.m},
                                      os.path.join(directory, "meta.json")))
        return written

    def load_regression(self, directory: str = "regression") -> RegressionData:
        meta = self.load_json(os.path.join(directory, "meta.json"))
        mats = {}
        for name in REGRESSION_MATRICES:
            rel = os.path.join(directory, f"{name}.csv")
            if os.path.exists(self.path(rel)):
                mats[name] = self.load_matrix(rel)
        return RegressionData(T=int(meta["T"]), p=int(meta["p"]), n=meta.get("n"), **mats)

    def save_trajectory(self, traj: Trajectory, directory: str = "trajectory") -> List[str]:
        written = [
            self.save_matrix(getattr(traj, attr), os.path.join(directory, f"{short}.csv"))
            for attr, short in TRAJECTORY_MATRICES.items()
        ]
        noise = traj.noise
        written.append(self.save_json(
            {"sigma_u": noise.sigma_u, "sigma_w": noise.sigma_w, "sigma_v": noise.sigma_v, "seed": noise.seed},
            os.path.join(directory, "noise.json"),
        ))
        return written

    def load_trajectory(self, directory: str = "trajectory") -> Trajectory:
        mats = {attr: self.load_matrix(os.path.join(directory, f"{short}.csv"))
                for attr, short in TRAJECTORY_MATRICES.items()}
        noise = NoiseConfig(**self.load_json(os.path.join(directory, "noise.json")))
        return Trajectory(noise=noise, **mats)


# ═══════════════════════════════════════════════════════════════
# EXPERIMENT REPORTS
# ═══════════════════════════════════════════════════════════════

def report_to_dict(report: ExperimentReport) -> Dict:
    """ExperimentReport → {"records": [...], "failures": [...]} with records sorted."""
    ordered = report.sorted()
    return {
        "records": [asdict(r) for r in ordered.records],
        "failures": [asdict(f) for f in ordered.failures],
    }


def report_from_dict(doc: Dict) -> ExperimentReport:
    try:
        return ExperimentReport(
            records=[ExperimentRecord(**r) for r in doc.get("records", [])],
            failures=[ExperimentFailure(**f) for f in doc.get("failures", [])],
        )
    except TypeError as e:
        raise SchemaError(f"malformed experiment report: {e}") from None
