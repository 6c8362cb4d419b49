#!/usr/bin/env python3
"""Generate the demo dataset and run the whole pipeline over it.

Usage:
    python scripts/run_demo.py [DEST]

Prints the accuracy summary and the artifact locations when done.
"""

import json
import sys
from pathlib import Path

from analogwave.cli import main as cli_main
from analogwave.demo import write_demo_tree


def main() -> int:
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo")
    _, config = write_demo_tree(dest)
    out = dest / "out"
    code = cli_main(["all", "--config", str(config), "--out", str(out)])
    if code != 0:
        return code

    summary = json.loads((out / "summary.json").read_text())
    pct = summary["percent"]
    counts = summary["counts"]
    print()
    print(f"wave recall:        {pct['recall_waves']} % "
          f"({counts['waves_hit']}/{counts['waves_total']} wave groups)")
    print(f"cluster precision:  {pct['precision_clusters']} % "
          f"({counts['extreme_hit']}/{counts['clusters_verifiable']} clusters)")
    print(f"sign accuracy:      {pct['sign_accuracy']} %")
    print(f"placemarks:         {out / 'forecast.kmz'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
