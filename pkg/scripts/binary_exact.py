"""Two-class check of the exact FCR of InfoSP against its closed form.

With (n + 1) * alpha / m an integer the FCR equals alpha * (1 - (1 - p0)^(n+1)),
where p0 is the chance that the true label gets the larger score.
"""

import numpy as np

from infocp.harness import bundled_config_path, load_config

from _common import parser, simulate


def misclassification_rate(snr: float, draws: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [snr, 0.0]])
    y = rng.integers(0, 2, draws)
    x = centers[y] + rng.standard_normal((draws, 2))
    return float(np.mean(np.sum((x - centers[y]) ** 2, 1) >= np.sum((x - centers[1 - y]) ** 2, 1)))


def run():
    p = parser(__doc__, "results")
    p.add_argument("--draws", type=int, default=100_000)
    args = p.parse_args()
    (scen,) = load_config(bundled_config_path("binary_exact")).scenarios
    (row,) = simulate("binary_exact", args)
    p0 = misclassification_rate(scen.snr, args.draws, 1)
    target = 0.1 * (1 - (1 - p0) ** (scen.n + 1))
    fcr, se = float(row["fcr"]), float(row["fcr_se"])
    print(f"p0 = {p0:.4f}  closed form = {target:.5f}  MC = {fcr:.5f} +- {se:.5f}  "
          f"({abs(fcr - target) / se:.2f} se apart)")


if __name__ == "__main__":
    run()
