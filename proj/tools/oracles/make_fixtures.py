"""Regenerates the oracle fixtures under test-data/ with SciPy quadrature.

Run from the repository root:  python3 tools/oracles/make_fixtures.py
"""

import json
import math
import pathlib

import numpy as np
from scipy import integrate, special

ROOT = pathlib.Path(__file__).resolve().parents[2]
OUT = ROOT / "test-data"
SCRIPT = "tools/oracles/make_fixtures.py"


def write_csv(name, columns, rows):
    path = OUT / name
    with path.open("w") as f:
        f.write("# columns: " + ",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return name


def hankel(k, s):
    """2 pi * integral_0^inf r exp(-k r) J0(r s) dr, panel by panel."""
    r_max = -math.log(1e-14) / k
    width = min(1.0, math.pi / s) if s > 0 else 1.0
    edges = np.linspace(0.0, r_max, int(math.ceil(r_max / width)) + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda r: r * math.exp(-k * r) * special.j0(r * s), a, b,
                                epsabs=1e-15, epsrel=1e-13, limit=200)
        total += val
    return 2.0 * math.pi * total


def pdf(x, mu, var):
    return math.exp(-0.5 * (x - mu) ** 2 / var) / math.sqrt(2.0 * math.pi * var)


def quad(f, lo, hi):
    return integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=400)[0]


def scalar_row(mu1, v1, mu2, v2):
    lo = min(mu1, mu2) - 14 * math.sqrt(max(v1, v2))
    hi = max(mu1, mu2) + 14 * math.sqrt(max(v1, v2))
    ce = quad(lambda x: -pdf(x, mu1, v1) * math.log(pdf(x, mu2, v2)), lo, hi)
    h = quad(lambda x: -pdf(x, mu1, v1) * math.log(pdf(x, mu1, v1)), lo, hi)
    z = quad(lambda x: pdf(x, mu1, v1) * pdf(x, mu2, v2), lo, hi)
    m = quad(lambda x: x * pdf(x, mu1, v1) * pdf(x, mu2, v2), lo, hi) / z
    v = quad(lambda x: (x - m) ** 2 * pdf(x, mu1, v1) * pdf(x, mu2, v2), lo, hi) / z
    return [mu1, v1, mu2, v2, ce, ce - h, m, v]


def main():
    OUT.mkdir(exist_ok=True)
    files = []

    rows = [[k, s, hankel(k, s)] for k in (0.5, 1.0, 3.0) for s in (0.0, 0.5, 1.0, 2.0, 5.0, 10.0)]
    files.append({
        "file": write_csv("hankel_exponential.csv", ["k", "s", "transform"], rows),
        "oracle": "scipy.integrate.quad of 2 pi r exp(-k r) J0(r s), panels of width min(1, pi/s)",
    })

    rng = np.random.default_rng(20261016)
    rows = [scalar_row(0.0, 1.0, 0.0, 1.0), scalar_row(1.0, 1.0, 0.0, 1.0), scalar_row(0.0, 2.0, 0.0, 1.0),
            scalar_row(0.0, 1.0, 2.0, 1.0)]
    for _ in range(12):
        rows.append(scalar_row(rng.normal(), rng.uniform(0.2, 3.0), rng.normal(), rng.uniform(0.2, 3.0)))
    files.append({
        "file": write_csv("scalar_gaussians.csv",
                          ["mu1", "var1", "mu2", "var2", "cross_entropy", "kl", "product_mean", "product_var"], rows),
        "oracle": "scipy.integrate.quad of -p log q and of the normalized pointwise product",
    })

    manifest = {"generator": SCRIPT, "numpy": np.__version__, "fixtures": files}
    (OUT / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
