#!/usr/bin/env python3
"""Write the planted-teleconnection demo dataset (CSVs, manifest, config).

Usage:
    python scripts/make_demo_data.py [DEST]

DEST defaults to ./demo.  The tree is ready for the CLI:
    analogwave all --config DEST/config.json --out DEST/out
"""

import sys
from pathlib import Path

from analogwave.demo import write_demo_tree


def main() -> int:
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo")
    manifest, config = write_demo_tree(dest)
    print(f"manifest: {manifest}")
    print(f"config:   {config}")
    print(f"next:     analogwave all --config {config} --out {dest / 'out'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
