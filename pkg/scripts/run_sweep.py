"""Run the bundled mesh sweep and print both regression fits."""

import argparse
import time

from specdraft import cli_io as cio
from specdraft.draft_optimizer import fit_ansatz, fit_pooled, sweep_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", default="table4.toml")
    ap.add_argument("--out", default=None, help="write sweep records CSV here")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    chin = cio.load_chinchilla()
    t0 = time.perf_counter()
    recs = sweep_grid(cio.load_grid(args.grid), cio.load_plane(), chin, chin, workers=args.workers)
    print(f"{len(recs)} records in {time.perf_counter() - t0:.2f}s")
    if args.out:
        cio.write_atomic(args.out, cio.records_csv(recs))

    a = fit_ansatz(recs)
    print(f"ansatz: mu={a.mu:.4e} M0={a.m0:.4e} gamma={a.log_draft_data_coef:.3e} "
          f"gamma'={a.log_target_data_coef:.3e} R2={a.diagnostics.r_squared:.4f}")
    p = fit_pooled(recs)
    print(f"pooled: mu={p.mu:.4e} M0={p.m0:.4e} 1/mu={1 / p.mu:.1f} R2={p.diagnostics.r_squared:.4f}")


if __name__ == "__main__":
    main()
