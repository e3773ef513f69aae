#!/usr/bin/env python3
"""Mine a superinstruction catalog from unboxed regions of the benchmark suite.

Runs each suite program with superinstructions off, reads back the rewritten
regions (`mlq disasm --regions`), and greedily picks the NAMA n-grams that
remove the most dispatches.  Each pc is weighted by its loop nesting depth and
every benchmark contributes equal total weight.

    tools/mine_superinstructions.py --mlq build/mlq --suite bench --out isa/default.super
"""
import argparse
import os
import re
import subprocess
import sys

INSTR = re.compile(r"^(\d+) (\S+) (\d+) \[(\w)\]$")
REGION = re.compile(r"^region \d+: pc (\d+)\.\.(\d+) ")

ABBREV = {
    "LOAD": "l", "STORE": "s", "CONST": "k", "INT": "i", "FLOAT": "f", "COMPLEX": "c",
    "LIST": "v", "SUBSCR": "x", "ADD": "add", "SUB": "sub", "MULT": "mul", "TRUEDIV": "div",
    "CMP": "cmp", "LT": "lt", "LE": "le", "EQ": "eq", "NE": "ne", "GT": "gt", "GE": "ge",
    "JUMP": "j", "IF": "", "FALSE": "", "RAW": "", "KEEP": "keep",
}


def read_suite(suite_dir):
    benches = []
    with open(os.path.join(suite_dir, "suite.txt")) as f:
        lines = [l.strip() for l in f if l.strip() and not l.startswith("#")]
    assert lines[0] == "mlq-bench v1", "bad suite header"
    for l in lines[1:]:
        name, file, param, _digest, _runs, _warmup = [x.strip() for x in l.split("|")]
        benches.append((name, os.path.join(suite_dir, file), int(param)))
    return benches


def windows_of(mlq, path, param, threshold):
    out = subprocess.run(
        [mlq, "disasm", "--regions", path, "--super=off", "--main", str(param), "--threshold", str(threshold)],
        check=True, capture_output=True, text=True).stdout
    code = {}
    wins = []

    def flush():
        if not code:
            return []
        # Loop depth: number of back edges enclosing the pc.
        edges = [(int(operand), pc) for pc, (op, operand) in code.items() if op == "PROF_JUMP_ABSOLUTE"]
        res = []
        for a, b in wins:
            seq = []
            for pc in range(a, b):
                depth = sum(1 for t, src in edges if t <= pc <= src)
                seq.append((code[pc][0], 8.0 ** depth))
            res.append(seq)
        return res

    result = []
    for line in out.splitlines():
        if line.startswith("== "):
            result += flush()
            code, wins = {}, []
            continue
        m = INSTR.match(line)
        if m:
            code[int(m.group(1))] = (m.group(2), m.group(3))
            continue
        m = REGION.match(line)
        if m:
            wins.append((int(m.group(1)), int(m.group(2))))
    result += flush()
    return result


def name_for(seq):
    parts = []
    for mn in seq:
        words = [ABBREV.get(w, w.lower()) for w in mn.replace("NAMA_", "").split("_")]
        parts.append("".join(words))
    return "_".join(parts)


def mine(seqs, count, max_len):
    # Tokens are tuples of constituent mnemonics; a chosen n-gram merges into one token.
    toks = [[((op,), w) for op, w in s] for s in seqs]
    chosen = []
    while len(chosen) < count:
        gain = {}
        for s in toks:
            for n in range(2, max_len + 1):
                for i in range(0, len(s) - n + 1):
                    flat = sum((t for t, _ in s[i:i + n]), ())
                    if len(flat) > max_len:
                        continue
                    gain.setdefault(flat, {}).setdefault(id(s), []).append((i, n, s[i][1]))
        best, best_gain = None, 0.0
        for flat, per in gain.items():
            g = 0.0
            for occ in per.values():
                last = -1
                for i, n, w in occ:
                    if i > last:
                        g += w * (n - 1)
                        last = i + n - 1
            key = (g, len(flat), flat)
            if best is None or key > best:
                best, best_gain = key, g
        if best is None or best_gain <= 0.0:
            break
        flat = best[2]
        chosen.append(flat)
        for s in toks:
            i = 0
            while i < len(s):
                j, acc = i, ()
                while j < len(s) and len(acc) < len(flat):
                    acc += s[j][0]
                    j += 1
                if acc == flat:
                    s[i:j] = [(flat, s[i][1])]
                i += 1
    return chosen


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mlq", default="build/mlq")
    ap.add_argument("--suite", default="bench")
    ap.add_argument("--out", default="-")
    ap.add_argument("--count", type=int, default=12)
    ap.add_argument("--max-len", type=int, default=6)
    ap.add_argument("--threshold", type=int, default=100)
    args = ap.parse_args()

    seqs = []
    for name, path, param in read_suite(args.suite):
        ws = windows_of(args.mlq, path, param, args.threshold)
        total = sum(w for s in ws for _, w in s) or 1.0
        seqs += [[(op, w / total) for op, w in s] for s in ws]
        print(f"{name}: {len(ws)} windows", file=sys.stderr)

    chosen = mine(seqs, args.count, args.max_len)
    lines = ["mlq-super v1"]
    for flat in chosen:
        lines.append(f"{name_for(flat)}: {','.join(flat)}")
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as f:
            f.write(text)


if __name__ == "__main__":
    main()
