#!/usr/bin/env python3
"""Validate a cmclab verification report against the shipped schema.

Also enforces that every object carrying a pass flag carries a number next to
it (a margin, value or residual), directly or in a numeric list.
"""
import argparse
import json
import sys
from pathlib import Path

import jsonschema


def has_number(obj):
    for key, value in obj.items():
        if key == "pass":
            continue
        if isinstance(value, bool):
            continue
        if isinstance(value, (int, float)):
            return True
        if isinstance(value, list) and value and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            return True
    return False


def bare_flags(node, path="$"):
    if isinstance(node, dict):
        if isinstance(node.get("pass"), bool) and not has_number(node):
            yield path
        for key, value in node.items():
            yield from bare_flags(value, f"{path}.{key}")
    elif isinstance(node, list):
        for i, value in enumerate(node):
            yield from bare_flags(value, f"{path}[{i}]")


def main():
    here = Path(__file__).resolve().parent.parent
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("report")
    parser.add_argument("--schema", default=str(here / "schemas" / "verification_report.schema.json"))
    args = parser.parse_args()

    schema = json.loads(Path(args.schema).read_text())
    report = json.loads(Path(args.report).read_text())
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
    for e in errors:
        print(f"schema: {'/'.join(map(str, e.path)) or '$'}: {e.message}", file=sys.stderr)
    bare = list(bare_flags(report))
    for p in bare:
        print(f"margin: {p} has a pass flag without a numeric value", file=sys.stderr)
    if errors or bare:
        return 1
    print(f"{args.report}: valid")
    return 0


if __name__ == "__main__":
    sys.exit(main())
