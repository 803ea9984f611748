"""Regression analogs: FCR and adjusted power of naive, InfoSP and InfoSCOP.

The second scenario of each config is the one where the initial selection
should buy InfoSCOP a clear power advantage.
"""

import math

from _common import parser, print_table, simulate


def run():
    args = parser(__doc__, "results").parse_args()
    for name in ("fig2_analog", "fig3_analog"):
        rows = simulate(name, args)
        print(f"\n== {name}")
        print_table(rows, ("fcr", "fcr_se", "power", "power_se", "avg_size"))
        by = {(r["scenario"], r["procedure"]): r for r in rows}
        for scen in dict.fromkeys(r["scenario"] for r in rows):
            a, b = by[(scen, "infoscop")], by[(scen, "infosp")]
            gap = float(a["power"]) - float(b["power"])
            se = math.hypot(float(a["power_se"]), float(b["power_se"]))
            print(f"{scen}: InfoSCOP - InfoSP power = {gap:.2f} ({gap / se:.1f} combined se)")


if __name__ == "__main__":
    run()
