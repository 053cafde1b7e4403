#!/usr/bin/env python3
"""Time an end-to-end `talkdyn report` run and report peak child memory.

Point it at a corpus directory holding edits.jsonl and comments.jsonl
(scripts/make_synthetic_corpus.py builds one). Prints wall seconds and
ru_maxrss of the child process; exits nonzero if the report itself fails.
"""

import argparse
import resource
import subprocess
import sys
import time
from pathlib import Path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--corpus", required=True, help="directory with edits.jsonl + comments.jsonl")
    parser.add_argument("--out", default="/tmp/talkdyn_bench_report")
    parser.add_argument("extra", nargs="*", help="extra flags passed through to `talkdyn report`")
    args = parser.parse_args(argv)

    corpus = Path(args.corpus)
    cmd = [
        "talkdyn", "report",
        "--edits", str(corpus / "edits.jsonl"),
        "--comments", str(corpus / "comments.jsonl"),
        "--out", args.out, *args.extra,
    ]
    t0 = time.perf_counter()
    proc = subprocess.run(cmd, capture_output=True, text=True)
    wall = time.perf_counter() - t0
    rss_kb = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss
    sys.stderr.write(proc.stderr)
    print(f"exit={proc.returncode} wall={wall:.1f}s peak_rss={rss_kb / 1e6:.2f}GB")
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main())
