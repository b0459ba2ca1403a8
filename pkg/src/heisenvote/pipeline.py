"""One-shot synth -> split -> fit -> evaluate -> report run with a manifest."""
from __future__ import annotations

import hashlib
import json
import os
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .curve import dumps_weights
from .geometry import STUDY_SPACINGS, STUDY_WIDTHS
from .report import (ALL_STRATEGIES, EvaluationError, aggregate, default_split,
                     evaluate_strategies, fit_weights, train_test_split)
from .sim import default_models, generate_dataset, load_calibration
from .trace import TECHNIQUES, Dataset, atomic_write_text, save_jsonl

OUTPUT_DIR_ENV = "HEISENVOTE_OUTPUT_DIR"


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        self.message = message
        super().__init__(f"stage {stage}: {message}")


@dataclass
class RunConfig:
    out_dir: str | None = None
    seed: int = 0
    techniques: tuple[str, ...] = TECHNIQUES
    participants: int = 24
    events: int = 162
    widths: tuple[float, ...] = STUDY_WIDTHS
    spacings: tuple[float, ...] = STUDY_SPACINGS
    n_test: int | None = None
    strategies: tuple[str, ...] = tuple(s.value for s in ALL_STRATEGIES)
    calibration: str | None = None
    k: float = 10.0
    q: float = 2.0 / 3.0
    w_user: float = 0.4
    jobs: int = 1

    def resolved_out_dir(self) -> Path:
        return Path(self.out_dir or os.environ.get(OUTPUT_DIR_ENV) or "heisenvote-run")

    def manifest_inputs(self) -> dict:
        d = asdict(self)
        # neither affects the outputs
        d.pop("out_dir")
        d.pop("jobs")
        return d


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def synthesize(config: RunConfig) -> Dataset:
    cal = load_calibration(config.calibration)
    ds = Dataset()
    for tech in config.techniques:
        sim, pert = default_models(tech, cal, participants=config.participants,
                                   events_per_participant=config.events,
                                   widths=tuple(config.widths), spacings=tuple(config.spacings))
        ds = ds + generate_dataset(sim, pert, config.seed, jobs=config.jobs)
    return ds


def write_tables(tables: dict, out_dir: Path) -> dict[str, Path]:
    paths = {}
    for name, table in tables.items():
        p = out_dir / f"{name}.csv"
        atomic_write_text(p, table.to_csv())
        paths[name] = p
    bundle = out_dir / "report.json"
    atomic_write_text(bundle, json.dumps({n: t.to_dict() for n, t in tables.items()},
                                         indent=2) + "\n")
    paths["report"] = bundle
    return paths


def pipeline_run(config: RunConfig) -> dict[str, Path]:
    """Run every stage and return the written artifact paths (incl. the manifest)."""
    out = config.resolved_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    stage = "synth"
    try:
        dataset = synthesize(config)
        paths["traces"] = out / "traces.jsonl"
        save_jsonl(dataset, paths["traces"])

        stage = "split"
        train_ids, test_ids = default_split(dataset.participants(), config.n_test)
        train, test = train_test_split(dataset, train_ids, test_ids)
        if len(test) == 0:
            raise ValueError("empty test set")

        stage = "fit"
        weights = fit_weights(train, config.k, config.q)
        missing = [t for t in test.techniques() if t not in weights]
        if missing and any(s not in ("origin", "vote") for s in config.strategies):
            raise ValueError(f"no training data for {', '.join(missing)}")
        paths["weights"] = out / "curves.json"
        atomic_write_text(paths["weights"], dumps_weights(weights))

        stage = "evaluate"
        rates = evaluate_strategies(train, test, config.strategies, weights=weights,
                                     k=config.k, q=config.q, w_user=config.w_user)
        paths["evaluation"] = out / "mitigation_error_rates.csv"
        atomic_write_text(paths["evaluation"], rates.to_csv())

        stage = "report"
        paths.update(write_tables(aggregate(dataset), out))
    except PipelineError:
        raise
    except EvaluationError as exc:
        raise PipelineError(exc.stage, str(exc)) from exc
    except (ValueError, OSError) as exc:
        raise PipelineError(stage, str(exc)) from exc

    manifest = {
        "inputs": config.manifest_inputs(),
        "split": {"train": sorted(map(str, train_ids)), "test": sorted(map(str, test_ids))},
        "versions": {"heisenvote": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
        "outputs": {name: {"file": p.name, "sha256": _sha256(p)}
                    for name, p in sorted(paths.items())},
    }
    paths["manifest"] = out / "manifest.json"
    atomic_write_text(paths["manifest"], json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths
