#!/usr/bin/env python3
"""Write the std_copyK family: K chained copy loops A -> B1 -> ... -> BK
followed by a loop checking BK[x] == A[x] for 0 <= x < n."""
import sys
from pathlib import Path


def copy_k(k: int) -> str:
    arrays = ["A"] + [f"B{m}" for m in range(1, k + 1)]
    lines = [
        f"; {k} chained copy loops over a symbolic bound n, then a checking loop",
        "(declare-state pc Int)",
        "(declare-state i Int)",
        "(declare-state x Int)",
        "(declare-state n Int)",
    ]
    lines += [f"(declare-state {a} (Array Int Int))" for a in arrays]
    lines.append("(init (and (= pc 1) (= i 0)))")

    def frame(changed):
        keep = [v for v in ["pc", "i", "x", "n"] + arrays if v not in changed]
        return " ".join(f"(= {v}! {v})" for v in keep)

    branches = []
    for m in range(1, k + 1):
        src, dst = arrays[m - 1], arrays[m]
        branches.append(
            f"(and (= pc {m}) (< i n) (= pc! {m}) (= i! (+ i 1)) "
            f"(= {dst}! (store {dst} i (select {src} i))) {frame({'pc', 'i', dst})})"
        )
        if m < k:
            branches.append(f"(and (= pc {m}) (>= i n) (= pc! {m + 1}) (= i! 0) {frame({'pc', 'i'})})")
        else:
            branches.append(f"(and (= pc {m}) (>= i n) (= pc! {m + 1}) (= x! 0) {frame({'pc', 'x'})})")
    last = arrays[-1]
    branches.append(
        f"(and (= pc {k + 1}) (< x n) (= (select {last} x) (select A x)) (= x! (+ x 1)) {frame({'x'})})"
    )
    lines.append("(trans (or\n  " + "\n  ".join(branches) + "))")
    lines.append(f"(bad (and (= pc {k + 1}) (< x n) (not (= (select {last} x) (select A x)))))")
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent
    for k in range(1, 4):
        (out / f"std_copy{k}.tsys").write_text(copy_k(k))
        (out / f"std_copy{k}.expected").write_text("safe\n")
