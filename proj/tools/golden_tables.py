#!/usr/bin/env python3
"""Recomputes the month and language tables for an archive file.

Used to produce tests/golden/*.csv independently of the C++ code:
    tools/golden_tables.py data/fixture/archive.jsonl tests/golden
"""
import collections
import datetime
import json
import math
import sys
from pathlib import Path


def parse_time(value):
    if isinstance(value, int):
        return datetime.datetime.fromtimestamp(value, datetime.timezone.utc)
    for fmt in ("%a %b %d %H:%M:%S %z %Y", "%Y-%m-%dT%H:%M:%S%z"):
        try:
            return datetime.datetime.strptime(value.replace("Z", "+0000"), fmt)
        except ValueError:
            pass
    return None


def posts(path):
    for raw in Path(path).read_bytes().splitlines():
        try:
            obj = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            continue
        if not isinstance(obj, dict):
            continue
        if not all(k in obj for k in ("id", "created_at", "text")):
            continue
        when = parse_time(obj["created_at"])
        if when is None or not " ".join(obj["text"].split()):
            continue
        yield when.astimezone(datetime.timezone.utc), obj.get("lang") or "und"


def main(archive, out_dir):
    months, langs = collections.Counter(), collections.Counter()
    for when, lang in posts(archive):
        months[when.strftime("%Y-%m")] += 1
        langs[lang] += 1
    total = sum(langs.values())
    out = Path(out_dir)
    with open(out / "months.csv", "w") as f:
        f.write("month,count\n")
        for m in sorted(months):
            f.write(f"{m},{months[m]}\n")
    with open(out / "languages.csv", "w") as f:
        f.write("language,count,pct\n")
        for lang, n in sorted(langs.items(), key=lambda kv: (-kv[1], kv[0])):
            # integer arithmetic keeps the flooring exact
            tenths = n * 1000 // total
            f.write(f"{lang},{n},{tenths // 10}.{tenths % 10}\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
