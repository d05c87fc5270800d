"""Exhaustive MAXCUT-gadget check on all small graphs.

Prints, per vertex count, how many graphs have Z-flip optimum equal to
#edges - maxcut, and whether any full Clifford search beats the Z-flip optimum.
"""

import argparse
import time

from qworkbench import sign_easing as se


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--max-vertices", type=int, default=4)
    ap.add_argument("--clifford-qubits", type=int, default=6, help="full Clifford search when v + e <= this")
    args = ap.parse_args()
    t0 = time.perf_counter()
    for n in range(1, args.max_vertices + 1):
        match = total = improved = searched = 0
        for edges in se.all_graphs(n):
            g = se.maxcut_gadget(n, edges)
            z, _ = se.brute_force_clifford_optimum(g, "zflip")
            total += 1
            match += z == len(edges) - se.maxcut_brute_force(n, edges)
            if g.n_qubits <= args.clifford_qubits:
                searched += 1
                improved += se.brute_force_clifford_optimum(g, "clifford")[0] < z - 1e-12
        print(f"v={n}: {match}/{total} graphs match, Clifford improved {improved}/{searched}")
    print(f"done in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
