"""Peak time against N under both epsilon policies, plus the Grover comparison.

    python scripts/run_scaling.py --out results/
"""

import argparse
import math
from pathlib import Path

from resonant_search.experiments import CoverSqrtN, Fixed, compare_discrete, emit_table, scaling_study

SIZES = [2**k for k in range(4, 17, 2)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--energy", type=float, default=1.0)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runs = {
        "scaling_c_over_sqrt_n_hg": (CoverSqrtN(2.0), "hg_effective"),
        "scaling_c_over_sqrt_n_hls": (CoverSqrtN(2.0), "hls_resonant"),
        "scaling_fixed_hls": (Fixed(1.0), "hls_resonant"),
    }
    for name, (policy, model) in runs.items():
        fit = scaling_study(SIZES, args.energy, policy, math.pi, model)
        emit_table(fit, "json", out / f"{name}.json")
        print(f"{name:28s} slope {fit.slope:+.6f}  r^2 {fit.r_squared:.9f}")

    table = compare_discrete([2, 4, 16, 64, 256, 1024, 4096], args.energy, 2.0)
    emit_table(table, "csv", out / "compare_discrete.csv")
    for row in zip(*(table.data[c] for c in ("n", "analog_ratio", "grover_ratio"))):
        print("n = {:5d}  analog/(pi sqrt(n)/2E) = {:.6f}  k*/(pi sqrt(n)/4) = {:.6f}".format(*row))


if __name__ == "__main__":
    main()
