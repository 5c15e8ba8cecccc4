"""Check the padded-witness GHZ identities on 40- and 100-site chains."""

import time

from gmeprobe.experiments import run_ghz_validate


def main():
    for n in (40, 100):
        t0 = time.perf_counter()
        checks = run_ghz_validate(n, 3)
        elapsed = time.perf_counter() - t0
        for c in checks:
            status = "ok" if c.passed else "FAIL"
            print(f"N={n:3d} {c.name:15s} start={c.window_start:3d} value={c.value:+.12f} "
                  f"expected={c.expected:+.12f} {status}")
        print(f"N={n}: {elapsed:.2f} s")


if __name__ == "__main__":
    main()
