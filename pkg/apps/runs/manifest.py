"""
Run manifests.

Every command writes manifest.json beside its outputs: the command, the fully
resolved configuration, input and output paths, the seed, the tool version
and the wall time. When RVOLMIN_RECORD_RUNS is on the same data is stored as
a RunRecord row.
"""

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from django.db import DatabaseError

from apps.core.conf import rvolmin_setting
from rvolmin_project import __version__

from .io import jsonable, write_json
from .models import RunRecord
from .serializers import RunManifestSerializer

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


@dataclass
class RunManifest:
    command: str
    config: Dict[str, Any]
    output_dir: str
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    seed: Optional[int] = None
    tool_version: str = __version__
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return jsonable(asdict(self))

    def write(self) -> Path:
        return write_json(Path(self.output_dir) / MANIFEST_NAME, RunManifestSerializer(self).data)


def record_run(command: str, manifest: Optional[RunManifest] = None,
               status: str = RunRecord.Status.SUCCESS, error: str = '') -> Optional[RunRecord]:
    """
    Store a RunRecord row; never fails the command.

    Returns:
        RunRecord, or None when recording is off or the database is not migrated
    """
    if not rvolmin_setting('RECORD_RUNS'):
        return None
    values = manifest.to_dict() if manifest is not None else {}
    try:
        return RunRecord.objects.create(
            command=command,
            config=values.get('config', {}),
            inputs=values.get('inputs', {}),
            output_dir=values.get('output_dir', ''),
            outputs=values.get('outputs', []),
            seed=values.get('seed'),
            tool_version=__version__,
            wall_time=values.get('wall_time', 0.0),
            status=status,
            error_message=error,
        )
    except DatabaseError as e:
        logger.warning(f"[RUNS] run record not saved ({e}); run 'python manage.py migrate' to enable it")
        return None
