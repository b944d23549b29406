"""JSON reading and canonical writing of games, policies and reports."""

import json
import math

import numpy as np

from .game import GameSpecError, PolicyError, PolicyProfile, validate_game


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if hasattr(obj, "value") and isinstance(obj.value, str):
        return obj.value
    return obj


def dumps(payload):
    """Canonical JSON: sorted keys, shortest round-trip float repr, no NaN."""
    return json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=False)


def write_json(payload, path):
    with open(path, "w") as fh:
        fh.write(dumps(payload) + "\n")


def read_json(path, error=GameSpecError):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise error(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise error(f"invalid JSON in {path}: {exc}") from None


def load_game(path):
    data = read_json(path)
    if not isinstance(data, dict):
        raise GameSpecError("game spec must be a JSON object")
    return validate_game(data)


def save_game(game, path):
    write_json(game.to_dict(), path)


def load_policy(path):
    """Read a policy file; a solver payload with a ``policy`` key also works."""
    data = read_json(path, PolicyError)
    if isinstance(data, dict) and "policy" in data and "decisions" not in data:
        data = data["policy"]
    if not isinstance(data, dict):
        raise PolicyError("policy must be a JSON object")
    return PolicyProfile.from_dict(data)


def save_policy(policy, path):
    write_json(policy.to_dict(), path)
