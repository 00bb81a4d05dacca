#!/usr/bin/env python3
"""Verify a run directory against its manifest.

Recomputes the sha256 of every artifact listed in run_manifest.json and
reports anything missing, extra, or modified. Exit code 0 means the
directory is exactly what the pipeline wrote.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from schooljam.pipeline import ARTIFACT_NAMES, MANIFEST_NAME, sha256_file  # noqa: E402
import json  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("artifact_dir", type=Path)
    args = ap.parse_args()

    manifest_path = args.artifact_dir / MANIFEST_NAME
    if not manifest_path.exists():
        print(f"no {MANIFEST_NAME} in {args.artifact_dir}", file=sys.stderr)
        return 2
    recorded = json.loads(manifest_path.read_text())["artifacts"]

    bad = 0
    for name, expected in sorted(recorded.items()):
        path = args.artifact_dir / name
        if not path.exists():
            print(f"MISSING   {name}")
            bad += 1
            continue
        actual = sha256_file(path)
        if actual != expected:
            print(f"MODIFIED  {name}")
            bad += 1
        else:
            print(f"ok        {name}")
    for name in ARTIFACT_NAMES:
        if name not in recorded and (args.artifact_dir / name).exists():
            print(f"UNLISTED  {name}")
            bad += 1
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
