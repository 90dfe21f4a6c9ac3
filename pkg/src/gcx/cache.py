"""Content-addressed result cache for the command-line tool.

Entries are keyed by (command, parameters, tool version); payloads live in
one JSON file per key whose content hash is checked on read, so a stale or
corrupted entry is recomputed rather than served.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Callable, Optional

from . import __version__

ENV_VAR = "GCX_CACHE"
DEFAULT_DIR = ".gcx-cache"


def cache_dir(flag_value: Optional[str]) -> Path:
    return Path(flag_value or os.environ.get(ENV_VAR) or DEFAULT_DIR)


def _key_string(command: str, params: dict) -> str:
    return json.dumps({"command": command, "params": params,
                       "version": __version__}, sort_keys=True)


def cached(directory: Path, command: str, params: dict,
           compute: Callable[[], dict]) -> dict:
    """Fetch or compute a JSON payload under a content-checked key."""
    key = _key_string(command, params)
    digest = hashlib.sha256(key.encode()).hexdigest()
    path = directory / f"{digest}.json"
    if path.exists():
        try:
            stored = json.loads(path.read_text())
            payload_text = json.dumps(stored["payload"], sort_keys=True)
            good = (
                stored.get("key") == key
                and stored.get("content_hash")
                == hashlib.sha256(payload_text.encode()).hexdigest()
            )
            if good:
                return stored["payload"]
        except (json.JSONDecodeError, KeyError, TypeError):
            pass
    payload = compute()
    payload_text = json.dumps(payload, sort_keys=True)
    directory.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({
        "key": key,
        "content_hash": hashlib.sha256(payload_text.encode()).hexdigest(),
        "payload": payload,
    }, sort_keys=True))
    return payload
