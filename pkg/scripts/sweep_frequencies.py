"""Peak-to-sidelobe ratio and tensor error of single-rung images versus the full ladder (2D fixture)."""
from elastic_dsm.config import config_from_dict, load_config
from elastic_dsm.pipeline import reconstruct, simulate


def main():
    base = load_config("table1_2d")
    ds = simulate(base)
    rows = [("all", None)] + [(str(n), [n]) for n in range(1, base.ladder["count"] + 1)]
    print(f"{'rungs':>6} {'PSR':>7} {'peaks':>6} {'matched':>8} {'max tensor err':>15}")
    for label, sel in rows:
        cfg = config_from_dict({**base.to_dict(), "frequencies": sel})
        rep = reconstruct(ds, cfg).report
        err = f"{rep.max_tensor_error:.3f}" if rep.matches else "-"
        print(f"{label:>6} {rep.peak_to_sidelobe:7.2f} {len(rep.peaks):6d} {len(rep.matches):8d} {err:>15}")


if __name__ == "__main__":
    main()
