"""Run trajectories and their line-oriented CSV form.

A record CSV carries '#'-prefixed header lines (schema tag, config as JSON,
data digest) followed by one row per evaluation:

    iteration,worker_slot,x_1..x_d,f,f_min_so_far,t_acq_ms,t_fit_ms

Floats are written with shortest round-trip precision, so a record survives a
save/load cycle bit-exactly and its digest can be recomputed from the file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

SCHEMA = "batchbo-record-v1"


@dataclass
class RunRecord:
    """Full trajectory of one optimization run."""

    algorithm: str
    problem_name: str
    seed: int
    q: int
    n_init: int
    config_digest: str
    X: np.ndarray              # (n, d) evaluated points, in evaluation order
    f: np.ndarray              # (n,) objective values
    iteration: np.ndarray      # (n,) 0 for the initial design
    worker_slot: np.ndarray    # (n,) position within the iteration's batch
    incumbent_trace: np.ndarray  # (T+1,) best value after each iteration
    acq_time_s: np.ndarray     # (T+1,) acquisition-optimization wall time
    fit_time_s: np.ndarray     # (T+1,) model-fit wall time
    failed: bool = False
    debug: dict = field(default_factory=dict, repr=False)

    @property
    def n_evaluations(self) -> int:
        return self.f.size

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def iterations(self) -> int:
        return self.incumbent_trace.size - 1

    def final_f_min(self) -> float:
        return float(self.incumbent_trace[-1])

    def digest(self) -> str:
        """Digest of the trajectory data (points, values, incumbents).

        Wall-clock timings and labels are excluded: two runs with identical
        search behavior have identical digests regardless of scheduling.
        """
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X, dtype=float).tobytes())
        h.update(np.ascontiguousarray(self.f, dtype=float).tobytes())
        h.update(np.ascontiguousarray(self.iteration, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.worker_slot, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.incumbent_trace, dtype=float).tobytes())
        return h.hexdigest()

    def to_csv(self, path) -> None:
        d = self.dim
        header_cfg = {
            "algorithm": self.algorithm,
            "problem": self.problem_name,
            "seed": int(self.seed),
            "q": int(self.q),
            "n_init": int(self.n_init),
            "dim": int(d),
            "config_digest": self.config_digest,
            "failed": bool(self.failed),
        }
        cols = ["iteration", "worker_slot"]
        cols += [f"x_{j + 1}" for j in range(d)]
        cols += ["f", "f_min_so_far", "t_acq_ms", "t_fit_ms"]
        running = np.minimum.accumulate(self.f)
        lines = [
            f"# {SCHEMA}",
            f"# config = {json.dumps(header_cfg, sort_keys=True)}",
            f"# digest = {self.digest()}",
            ",".join(cols),
        ]
        for i in range(self.n_evaluations):
            t = int(self.iteration[i])
            row = [str(t), str(int(self.worker_slot[i]))]
            row += [repr(float(v)) for v in self.X[i]]
            row.append(repr(float(self.f[i])))
            row.append(repr(float(running[i])))
            row.append(repr(float(self.acq_time_s[t] * 1e3)))
            row.append(repr(float(self.fit_time_s[t] * 1e3)))
            lines.append(",".join(row))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @staticmethod
    def read_header(path) -> dict:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline().strip()
            if first != f"# {SCHEMA}":
                raise ValueError(f"{path}: not a {SCHEMA} file")
            cfg_line = fh.readline().strip()
            digest_line = fh.readline().strip()
        if not cfg_line.startswith("# config = "):
            raise ValueError(f"{path}: missing config header")
        header = json.loads(cfg_line[len("# config = "):])
        header["stored_digest"] = digest_line[len("# digest = "):]
        return header

    @staticmethod
    def from_csv(path) -> "RunRecord":
        header = RunRecord.read_header(path)
        d = int(header["dim"])
        data_rows = []
        columns = None
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if columns is None:
                    columns = line.split(",")
                    continue
                data_rows.append([float(v) for v in line.split(",")])
        if columns is None or not data_rows:
            raise ValueError(f"{path}: no data rows")
        raw = np.asarray(data_rows, dtype=float)
        col = {name: i for i, name in enumerate(columns)}
        X = raw[:, [col[f"x_{j + 1}"] for j in range(d)]]
        f = raw[:, col["f"]]
        iteration = raw[:, col["iteration"]].astype(np.int64)
        slot = raw[:, col["worker_slot"]].astype(np.int64)
        n_iters = int(iteration.max())
        running = np.minimum.accumulate(f)
        trace = np.empty(n_iters + 1)
        acq = np.zeros(n_iters + 1)
        fit_t = np.zeros(n_iters + 1)
        for t in range(n_iters + 1):
            rows = np.nonzero(iteration == t)[0]
            trace[t] = running[rows[-1]]
            acq[t] = raw[rows[0], col["t_acq_ms"]] / 1e3
            fit_t[t] = raw[rows[0], col["t_fit_ms"]] / 1e3
        return RunRecord(
            algorithm=header["algorithm"],
            problem_name=header["problem"],
            seed=int(header["seed"]),
            q=int(header["q"]),
            n_init=int(header["n_init"]),
            config_digest=header["config_digest"],
            X=X,
            f=f,
            iteration=iteration,
            worker_slot=slot,
            incumbent_trace=trace,
            acq_time_s=acq,
            fit_time_s=fit_t,
            failed=bool(header.get("failed", False)),
        )
