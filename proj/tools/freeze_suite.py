#!/usr/bin/env python3
"""Recompute the output digests in a suite file from opt-0 switch runs.

    tools/freeze_suite.py --mlq build/mlq bench/suite.txt
"""
import argparse
import os
import subprocess


def fnv1a64(data):
    h = 0xcbf29ce484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001b3) & 0xFFFFFFFFFFFFFFFF
    return h


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mlq", default="build/mlq")
    ap.add_argument("suite")
    args = ap.parse_args()
    base = os.path.dirname(os.path.abspath(args.suite))
    out = []
    with open(args.suite) as f:
        for line in f:
            s = line.strip()
            if not s or s.startswith("#") or s == "mlq-bench v1":
                out.append(line.rstrip("\n"))
                continue
            name, file, param, _digest, runs, warmup = [x.strip() for x in s.split("|")]
            r = subprocess.run([args.mlq, "run", os.path.join(base, file), "--opt=0", "--dispatch=switch",
                                "--main", param], check=True, capture_output=True)
            out.append("|".join([name, file, param, "%016x" % fnv1a64(r.stdout), runs, warmup]))
    with open(args.suite, "w") as f:
        f.write("\n".join(out) + "\n")


if __name__ == "__main__":
    main()
