"""Label shift: class-calibrated versus full-calibrated InfoSP, plus adaptive weights."""

from _common import parser, print_table, simulate


def run():
    args = parser(__doc__, "results").parse_args()
    for name in ("label_shift", "adapt_infosp"):
        print(f"\n== {name}")
        print_table(simulate(name, args))


if __name__ == "__main__":
    run()
