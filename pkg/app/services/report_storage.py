"""Run-directory storage for CSV/JSON reports and built cone spaces."""

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel

from app.core.errors import ValidationFailure
from app.schemas.run import RunConfig

logger = logging.getLogger(__name__)

HASH_PREFIX = "# config_hash="


class ArtifactConflict(ValidationFailure):
    """An existing artifact was produced by a different configuration."""
    pass


def config_hash(config: RunConfig) -> str:
    """sha256 of the canonical config JSON; the output directory is not part of it."""
    payload = config.model_dump(mode="json", exclude={"output_dir"})
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ReportStorage:
    """Writes artifacts under one run directory, each tagged with the config hash."""

    def __init__(self, root: Union[str, Path], config_hash: str, force: bool = False) -> None:
        self.root = Path(root)
        self.config_hash = config_hash
        self.force = force

    def path(self, name: str) -> Path:
        return self.root / name

    def exists(self, name: str) -> bool:
        return self.path(name).exists()

    def stored_hash(self, name: str) -> Optional[str]:
        """Hash embedded in an existing artifact, or None when absent or untagged."""
        path = self.path(name)
        if not path.exists():
            return None
        if path.suffix == ".json":
            try:
                return json.loads(path.read_text(encoding="utf-8")).get("config_hash")
            except (json.JSONDecodeError, AttributeError):
                return None
        if path.suffix == ".csv":
            with path.open(encoding="utf-8") as fh:
                first = fh.readline().strip()
            return first[len(HASH_PREFIX):] if first.startswith(HASH_PREFIX) else None
        if path.suffix == ".npz":
            with np.load(path) as data:
                return str(data["config_hash"]) if "config_hash" in data.files else None
        return None

    def _guard(self, name: str) -> Path:
        path = self.path(name)
        if path.exists():
            existing = self.stored_hash(name)
            if existing != self.config_hash and not self.force:
                raise ArtifactConflict(
                    f"{path} was written by config {existing}; rerun with --force to overwrite"
                )
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_json(self, name: str, report: Union[BaseModel, dict, list]) -> Path:
        path = self._guard(name)
        if isinstance(report, BaseModel):
            body: Any = report.model_dump(mode="json")
        elif isinstance(report, list):
            body = [r.model_dump(mode="json") if isinstance(r, BaseModel) else r for r in report]
        else:
            body = report
        path.write_text(
            json.dumps({"config_hash": self.config_hash, "report": body}, indent=2),
            encoding="utf-8",
        )
        logger.info(f"Wrote {path}")
        return path

    def read_json(self, name: str) -> Any:
        """Report body of a JSON artifact (without the hash envelope)."""
        return json.loads(self.path(name).read_text(encoding="utf-8"))["report"]

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        path = self._guard(name)
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(f"{HASH_PREFIX}{self.config_hash}\n")
            writer = csv.writer(fh)
            writer.writerow(header)
            count = 0
            for row in rows:
                writer.writerow(["" if v is None else v for v in row])
                count += 1
        logger.info(f"Wrote {path} ({count} rows)")
        return path

    def write_models_csv(self, name: str, models: Sequence[BaseModel], fields: Sequence[str]) -> Path:
        return self.write_csv(name, fields, ([getattr(m, f) for f in fields] for m in models))

    def read_csv(self, name: str) -> list[dict]:
        with self.path(name).open(newline="", encoding="utf-8") as fh:
            lines = [line for line in fh if not line.startswith("#")]
        return list(csv.DictReader(lines))

    def write_npz(self, name: str, **arrays: np.ndarray) -> Path:
        path = self._guard(name)
        np.savez_compressed(path, config_hash=np.array(self.config_hash), **arrays)
        logger.info(f"Wrote {path}")
        return path

    def read_npz(self, name: str) -> dict:
        with np.load(self.path(name)) as data:
            return {key: data[key] for key in data.files}
