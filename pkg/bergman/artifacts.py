"""
CSV and JSON artifacts.

Names follow ``<command>-<domain hash prefix>-<N>.{csv,json}``. Every JSON
document embeds the run's config digest and the toolkit version; nothing
time-dependent is written so reruns reproduce identical bytes.
"""

import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from . import __version__
from .geometry import canonical_digest
from .gram import atomic_write_bytes

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def artifact_stem(command: str, domain_hash: str, N: int) -> str:
    return f"{command}-{domain_hash[:12]}-{int(N)}"


def _jsonable(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def config_digest(config: Dict[str, Any]) -> str:
    return canonical_digest(json.loads(json.dumps(config, default=_jsonable)))


def write_table(frame: pd.DataFrame, path, header: Optional[str] = None) -> Path:
    """CSV with an optional ``# key=value,...`` first line."""
    buffer = io.StringIO()
    if header:
        buffer.write(f"# {header}\n")
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    atomic_write_bytes(path, buffer.getvalue().encode('utf-8'))
    logger.info(f"Wrote {Path(path).name} ({len(frame)} rows)")
    return Path(path)


def write_json(payload: Dict[str, Any], path, config: Dict[str, Any]) -> Path:
    document = dict(payload)
    document['config'] = json.loads(json.dumps(config, default=_jsonable))
    document['config_digest'] = config_digest(config)
    document['version'] = __version__
    text = json.dumps(document, sort_keys=True, indent=2, default=_jsonable) + '\n'
    atomic_write_bytes(path, text.encode('utf-8'))
    logger.info(f"Wrote {Path(path).name}")
    return Path(path)


def write_pair(output_dir, stem: str, frame: Optional[pd.DataFrame], payload: Dict[str, Any],
               config: Dict[str, Any], header: Optional[str] = None) -> List[Path]:
    output_dir = Path(output_dir)
    written = []
    if frame is not None:
        written.append(write_table(frame, output_dir / f"{stem}.csv", header))
    written.append(write_json(payload, output_dir / f"{stem}.json", config))
    return written


def _flatten(document: Dict[str, Any]) -> Dict[str, Any]:
    """Scalar fields of a result document, nested keys joined by dots."""
    row = {}
    for key, value in pd.json_normalize(document, sep='.').iloc[0].items():
        if isinstance(value, (str, int, float, bool)) or value is None:
            row[key] = value
    return row


def aggregate_reports(output_dir) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """One row per JSON artifact in ``output_dir`` (report files excluded), sorted by name."""
    output_dir = Path(output_dir)
    rows = []
    for path in sorted(output_dir.glob('*.json')):
        if path.name.startswith('report-'):
            continue
        try:
            document = json.loads(path.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            logger.warning(f"Skipping unreadable artifact {path.name}: {e}")
            continue
        row = {'artifact': path.name}
        row.update(_flatten(document))
        rows.append(row)
    frame = pd.DataFrame(rows)
    if not frame.empty:
        frame = frame[['artifact'] + sorted(c for c in frame.columns if c != 'artifact')]
    commands = frame['command'].value_counts().sort_index().to_dict() if 'command' in frame else {}
    summary = {'artifacts': len(rows), 'by_command': {k: int(v) for k, v in commands.items()}}
    return frame, summary
