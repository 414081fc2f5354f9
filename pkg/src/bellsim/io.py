"""Newline-delimited JSON ensembles and run manifests.

The first line is a header object; every further line is one run with the
fields ``run, ax, ay, az, bx, by, bz, A, B, lambda, mu_a, mu_b``.  States are
tagged objects, ``{"d": index}`` or ``{"c": [floats]}``.  Floats are written
with ``repr`` precision so a read-back ensemble is bitwise equal to the
written one.
"""

from __future__ import annotations

import json
from importlib import resources
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ._version import __version__
from .core import DiscreteSpace, Ensemble, SettingsPolicy, space_from_json

__all__ = [
    "FORMAT",
    "RunManifest",
    "make_manifest",
    "ensemble_lines",
    "write_ensemble",
    "read_ensemble",
    "atomic_write",
    "dumps",
    "load_schema",
    "SCHEMAS",
]

FORMAT = "bellsim-ensemble"
FORMAT_VERSION = 1
SCHEMAS = ("state", "manifest", "ensemble_header", "ensemble_record", "chsh_report",
           "audit_verdict", "game_score", "report_file")
RECORD_FIELDS = ("run", "ax", "ay", "az", "bx", "by", "bz", "A", "B", "lambda", "mu_a", "mu_b")


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to regenerate an output file."""

    command: str
    model_id: str
    policy: Optional[dict]
    n_runs: int
    master_seed: int
    tool_version: str = __version__
    timestamp: Optional[str] = None
    options: Optional[dict] = None

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, obj):
        return cls(**obj)


def make_manifest(command, model_id, policy, n_runs, master_seed, timestamp=None, options=None):
    pol = policy.to_json() if isinstance(policy, SettingsPolicy) else policy
    return RunManifest(command, model_id, pol, int(n_runs), int(master_seed),
                       timestamp=timestamp, options=options)


def dumps(obj):
    """Compact, key-order-preserving JSON; the one encoder used for every output."""
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def _state_column(space, values):
    if isinstance(space, DiscreteSpace):
        return [{"d": int(v)} for v in np.asarray(values).tolist()]
    return [{"c": row} for row in np.asarray(values, dtype=float).tolist()]


def ensemble_lines(ensemble, manifest=None):
    """Yield the NDJSON lines (without newlines) of an ensemble."""
    header = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "model_id": ensemble.model_id,
        "policy": ensemble.policy.to_json() if ensemble.policy else ensemble.settings_policy_id,
        "seed": int(ensemble.master_seed),
        "n_runs": len(ensemble),
        "spaces": {
            "lambda": ensemble.lambda_space.to_json(),
            "mu_a": ensemble.mu_a_space.to_json(),
            "mu_b": ensemble.mu_b_space.to_json(),
        },
        "manifest": manifest.to_json() if manifest else None,
    }
    yield dumps(header)
    lam = _state_column(ensemble.lambda_space, ensemble.lam)
    mua = _state_column(ensemble.mu_a_space, ensemble.mu_a)
    mub = _state_column(ensemble.mu_b_space, ensemble.mu_b)
    sa = ensemble.settings_a.tolist()
    sb = ensemble.settings_b.tolist()
    for i, (run, a, b) in enumerate(zip(ensemble.run_index.tolist(), ensemble.outcome_a.tolist(),
                                        ensemble.outcome_b.tolist())):
        yield dumps({
            "run": run,
            "ax": sa[i][0], "ay": sa[i][1], "az": sa[i][2],
            "bx": sb[i][0], "by": sb[i][1], "bz": sb[i][2],
            "A": a, "B": b,
            "lambda": lam[i], "mu_a": mua[i], "mu_b": mub[i],
        })


def atomic_write(path, text):
    """Write text to ``path`` via a temporary file in the same directory and a rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_ensemble(ensemble, path, manifest=None):
    atomic_write(path, "\n".join(ensemble_lines(ensemble, manifest)) + "\n")


def _states(values, space):
    key = "d" if isinstance(space, DiscreteSpace) else "c"
    try:
        col = [v[key] for v in values]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"state not tagged {key!r} as its declared space requires") from exc
    if key == "d":
        return np.array(col, dtype=np.int64)
    return np.array(col, dtype=float).reshape(len(col), space.dim)


def read_ensemble(path):
    """Read an NDJSON ensemble; returns ``(ensemble, header)``."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty ensemble file")
    header = json.loads(lines[0])
    if header.get("format") != FORMAT:
        raise ValueError(f"{path}: not a {FORMAT} file")
    rows = [json.loads(ln) for ln in lines[1:]]
    for r in rows[:1]:
        missing = set(RECORD_FIELDS) - set(r)
        if missing:
            raise ValueError(f"{path}: record lacks fields {sorted(missing)}")
    spaces = {k: space_from_json(v) for k, v in header["spaces"].items()}
    pol = header.get("policy")
    policy = SettingsPolicy.from_json(pol) if isinstance(pol, dict) else None
    ens = Ensemble(
        model_id=header["model_id"],
        settings_policy_id=policy.policy_id if policy else str(pol),
        master_seed=int(header["seed"]),
        run_index=np.array([r["run"] for r in rows], dtype=np.int64),
        settings_a=np.array([[r["ax"], r["ay"], r["az"]] for r in rows], dtype=float).reshape(-1, 3),
        settings_b=np.array([[r["bx"], r["by"], r["bz"]] for r in rows], dtype=float).reshape(-1, 3),
        outcome_a=np.array([r["A"] for r in rows], dtype=np.int8),
        outcome_b=np.array([r["B"] for r in rows], dtype=np.int8),
        lam=_states([r["lambda"] for r in rows], spaces["lambda"]),
        mu_a=_states([r["mu_a"] for r in rows], spaces["mu_a"]),
        mu_b=_states([r["mu_b"] for r in rows], spaces["mu_b"]),
        lambda_space=spaces["lambda"],
        mu_a_space=spaces["mu_a"],
        mu_b_space=spaces["mu_b"],
        policy=policy,
    )
    return ens, header


def load_schema(name):
    """The shipped JSON-schema document ``name`` (see ``SCHEMAS``)."""
    if name not in SCHEMAS:
        raise KeyError(f"no schema {name!r}")
    text = resources.files("bellsim").joinpath("schemas", f"{name}.json").read_text("utf-8")
    return json.loads(text)
