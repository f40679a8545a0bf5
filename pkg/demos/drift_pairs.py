"""Positive/negative mask pairs under a drifting source.

Each pattern is followed by its complement. The difference of the two
buckets cancels the slow flux drift when the pair is measured back to back,
but not when the two halves are far apart in time.

Run: python3 demos/drift_pairs.py
"""
from ghostmask.experiments import default_object, flux_experiment


def main():
    res = flux_experiment(count=600, flux=1000.0, drifts=(0.02, 0.0), trials=3, obj=default_object(23))
    print(f"{'drift':>6}  {'scheme':<16}{'NMSE':>8}")
    for row in res.tables["flux"]:
        print(f"{row['drift']:>6.2f}  {row['scheme']:<16}{row['nmse_mean']:>8.4f}")


if __name__ == "__main__":
    main()
