"""Run every bundled experiment config and print its report."""

from infocp.harness import bundled_configs

from _common import parser, print_table, simulate


def run():
    args = parser(__doc__, "results").parse_args()
    for name in bundled_configs():
        print(f"\n== {name}")
        print_table(simulate(name, args))


if __name__ == "__main__":
    run()
