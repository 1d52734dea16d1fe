import csv
import hashlib
import io
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .logger import Logger


CSV_FLOAT_FORMAT = '%.17g'
MANIFEST_NAME = 'manifest.json'


def artifact_name(experiment: str, method: str, ensemble_size: Optional[int], seed: int, ext: str) -> str:
    """File name following ``{experiment}_{method}_J{J}_seed{seed}.{ext}``"""
    size_part = f"J{ensemble_size}" if ensemble_size is not None else "Jna"
    return f"{experiment}_{method}_{size_part}_seed{seed}.{ext}"


def sha256_file(path: Path) -> str:
    """Hex SHA-256 digest of a file"""
    digest = hashlib.sha256()
    with Path(path).open('rb') as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


class ArtifactStore:
    """Reads and atomically writes the CSV/JSON artifacts of a run directory"""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.written: List[Path] = []
        self.logger = Logger.get_logger()

    def _atomic_write(self, path: Path, text: str) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + '.tmp')
        try:
            tmp.write_text(text, encoding='utf-8')
            os.replace(tmp, path)
        except OSError as e:
            raise OSError(f"Cannot write artifact {path}: {e}") from e
        if path not in self.written:
            self.written.append(path)
        self.logger.debug(f"Wrote {path}")
        return path

    def write_matrix(self, name: str, header: Sequence[str], rows: np.ndarray) -> Path:
        """Write a 2-D float array with a header row, 17 significant digits"""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != len(header):
            raise ValueError(f"Header has {len(header)} columns but data has {rows.shape[1]}")
        buffer = io.StringIO()
        np.savetxt(buffer, rows, fmt=CSV_FLOAT_FORMAT, delimiter=',',
                   header=','.join(header), comments='')
        return self._atomic_write(self.out_dir / name, buffer.getvalue())

    def write_rows(self, name: str, fieldnames: Sequence[str], rows: Sequence[Dict[str, Any]]) -> Path:
        """Write a list of records as CSV; floats use 17 significant digits"""
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(fieldnames), lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({
                key: (CSV_FLOAT_FORMAT % value if isinstance(value, (float, np.floating)) else value)
                for key, value in ((k, row.get(k, '')) for k in fieldnames)
            })
        return self._atomic_write(self.out_dir / name, buffer.getvalue())

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        """Write a JSON document with sorted keys"""
        text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + '\n'
        return self._atomic_write(self.out_dir / name, text)

    def write_manifest(self, subcommand: str, config: Dict[str, Any], seed: int,
                       inputs: Sequence[Path] = (), version: str = '') -> Path:
        """Write the single manifest of this directory, with input and output digests"""
        outputs = {p.name: sha256_file(p) for p in self.written if p.name != MANIFEST_NAME}
        payload = {
            'subcommand': subcommand,
            'config': config,
            'seed': seed,
            'inputs': {str(p): sha256_file(Path(p)) for p in inputs},
            'outputs': outputs,
            'tool_version': version,
        }
        return self.write_json(MANIFEST_NAME, payload)

    @staticmethod
    def read_matrix(path: Path) -> Tuple[List[str], np.ndarray]:
        """Read a headered numeric CSV into (header, 2-D array)"""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"No such file: {path}")
        with path.open('r', encoding='utf-8', newline='') as fh:
            header = next(csv.reader(fh), None)
            if not header:
                raise ValueError(f"{path} has no header row")
            data = np.loadtxt(fh, delimiter=',', ndmin=2)
        if data.size and data.shape[1] != len(header):
            raise ValueError(f"{path}: header has {len(header)} columns, rows have {data.shape[1]}")
        return [h.strip() for h in header], data

    @staticmethod
    def read_json(path: Path) -> Dict[str, Any]:
        """Load a JSON artifact"""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"No such file: {path}")
        with path.open('r', encoding='utf-8') as fh:
            return json.load(fh)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")
