"""Sequence manifest: a JSON index binding stereo frames, timestamps and
flow files for batch evaluation.

Schema (version 1):

    {
      "schema": 1,
      "metadata": {"crop_rows": 0, "flow_direction": "source"},
      "frames": [
        {"index": 0, "timestamp": 0.0,
         "left": "left_0000.png", "right": "right_0000.png",
         "flows": {"tmp_left": "...", "tmp_right": "...",
                   "skip_left": "...", "stereo": "..."}},
        ...
      ]
    }

Paths are resolved relative to the manifest file.  ``crop_rows`` bottom rows
are removed from images and flows at load time so every consumer sees the
cropped geometry.  ``flow_direction`` declares the convention of the flow
files: 'source' flows are anchored at the earlier (or right) frame of their
pair, 'target' flows at the later (or left) frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import flowcore, imgio

FLOW_DIRECTIONS = ("source", "target")
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ManifestFrame:
    index: int
    timestamp: float
    left: str
    right: str
    flows: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SequenceManifest:
    frames: tuple
    crop_rows: int = 0
    flow_direction: str = "source"
    root: Path = Path(".")

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("manifest contains no frames")
        for pos, frame in enumerate(frames):
            if frame.index != pos:
                raise ValueError(
                    f"frame indices must be contiguous from 0: "
                    f"position {pos} has index {frame.index}"
                )
        stamps = [f.timestamp for f in frames]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise ValueError("frame timestamps must be strictly increasing")
        if self.flow_direction not in FLOW_DIRECTIONS:
            raise ValueError(
                f"flow_direction must be one of {FLOW_DIRECTIONS}, "
                f"got {self.flow_direction!r}"
            )
        if int(self.crop_rows) < 0:
            raise ValueError(f"crop_rows must be >= 0, got {self.crop_rows}")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "crop_rows", int(self.crop_rows))
        object.__setattr__(self, "root", Path(self.root))

    def flow_path(self, frame_index: int, key: str) -> Path:
        frame = self.frames[frame_index]
        if key not in frame.flows:
            raise ValueError(f"frame {frame_index} declares no '{key}' flow")
        return self.root / frame.flows[key]

    def load_flow(self, frame_index: int, key: str) -> flowcore.FlowField:
        path = self.flow_path(frame_index, key)
        if not path.exists():
            raise FileNotFoundError(f"missing flow file: {path}")
        flow = flowcore.load_flo(path)
        return flowcore.crop_bottom_flow(flow, self.crop_rows)

    def load_image(self, frame_index: int, side: str) -> flowcore.Image:
        frame = self.frames[frame_index]
        rel = {"left": frame.left, "right": frame.right}[side]
        path = self.root / rel
        if not path.exists():
            raise FileNotFoundError(f"missing image file: {path}")
        return flowcore.crop_bottom(imgio.load_image(path), self.crop_rows)


def manifest_from_obj(obj, root=Path(".")) -> SequenceManifest:
    """Build and validate a manifest from a parsed JSON object."""
    if not isinstance(obj, dict):
        raise ValueError("manifest must be a JSON object")
    if obj.get("schema") != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported manifest schema {obj.get('schema')!r}, expected {SCHEMA_VERSION}"
        )
    meta = obj.get("metadata", {})
    if not isinstance(meta, dict):
        raise ValueError("manifest metadata must be an object")
    raw_frames = obj.get("frames")
    if not isinstance(raw_frames, list) or not raw_frames:
        raise ValueError("manifest must declare a non-empty frames list")
    frames = []
    for pos, entry in enumerate(raw_frames):
        if not isinstance(entry, dict):
            raise ValueError(f"frame entry {pos} must be an object")
        try:
            frame = ManifestFrame(
                index=int(entry["index"]),
                timestamp=float(entry["timestamp"]),
                left=str(entry["left"]),
                right=str(entry["right"]),
                flows={str(k): str(v) for k, v in entry.get("flows", {}).items()},
            )
        except KeyError as exc:
            raise ValueError(f"frame entry {pos} missing field {exc}") from None
        frames.append(frame)
    return SequenceManifest(
        frames=tuple(frames),
        crop_rows=int(meta.get("crop_rows", 0)),
        flow_direction=str(meta.get("flow_direction", "source")),
        root=Path(root),
    )


def load_manifest(path) -> SequenceManifest:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed manifest JSON in {path}: {exc}") from None
    return manifest_from_obj(obj, root=path.parent)


def manifest_to_obj(manifest: SequenceManifest) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "metadata": {
            "crop_rows": manifest.crop_rows,
            "flow_direction": manifest.flow_direction,
        },
        "frames": [
            {
                "index": f.index,
                "timestamp": f.timestamp,
                "left": f.left,
                "right": f.right,
                "flows": dict(sorted(f.flows.items())),
            }
            for f in manifest.frames
        ],
    }


def save_manifest(manifest: SequenceManifest, path):
    Path(path).write_text(json.dumps(manifest_to_obj(manifest), indent=2,
                                     sort_keys=True) + "\n")
