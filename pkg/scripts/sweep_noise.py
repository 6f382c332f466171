"""Reconstruction error of the 2D fixture as a function of the relative noise level."""
import argparse

from elastic_dsm.config import config_from_dict, load_config
from elastic_dsm.pipeline import reconstruct, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", default="0,0.01,0.02,0.05,0.1,0.2,0.3")
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()
    base = load_config("table1_2d").to_dict()
    print(f"{'eps':>6} {'seed':>5} {'peaks':>6} {'max loc err':>12} {'max tensor err':>15}")
    for eps in (float(v) for v in args.levels.split(",")):
        for seed in range(2021, 2021 + (args.seeds if eps > 0 else 1)):
            cfg = config_from_dict({**base, "noise": {"level": eps, "seed": seed}})
            rep = reconstruct(simulate(cfg), cfg).report
            print(f"{eps:6.2f} {seed:5d} {len(rep.peaks):6d} {rep.max_location_error:12.4f} {rep.max_tensor_error:15.4f}")


if __name__ == "__main__":
    main()
