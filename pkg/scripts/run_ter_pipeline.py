"""Run the whole pipeline on the shipped tele-echography model.

Writes candidates, the merged worksheet, every report format and the E.2/E.8
mutant diagrams into --out (default: ./out/ter).
"""

import argparse
import sys
from pathlib import Path

from seqfmeca.cli import main

DATA = Path(__file__).resolve().parents[1] / "src" / "seqfmeca" / "data"


def step(*argv):
    code = main([str(a) for a in argv])
    if code != 0:
        sys.exit(f"step failed ({code}): seqfmeca {' '.join(map(str, argv))}")


def run(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    model = DATA / "ter.rau"
    ws = out / "worksheet.json"
    step("check", model)
    step("worksheet", "init", model, "-o", ws)
    step("worksheet", "merge", ws, DATA / "ter_annotations.json")
    step("worksheet", "check", ws, model)
    for fmt, ext in (("markdown", "md"), ("csv", "csv"), ("json", "json")):
        step("report", "--format", fmt, ws, "-o", out / f"fmeca.{ext}")
    step("report", "--summary", ws, "-o", out / "summary.md")
    step("trace", model, "InstallInit", "-o", out / "nominal.puml")
    for err in ("E.2", "E.8"):
        step("mutate", model, "--error", err, "--out-dir", out / "mutants")
    print((out / "summary.md").read_text(encoding="utf-8"))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("out/ter"))
    run(ap.parse_args().out)
