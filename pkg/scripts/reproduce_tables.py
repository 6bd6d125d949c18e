"""Refit the alpha plane and recompute optimal draft sizes for every bundled target row."""

import argparse

from specdraft import cli_io as cio
from specdraft.draft_optimizer import optimal_draft_size
from specdraft.regression import fit_alpha_plane
from specdraft.scaling_models import TrainingBudgets


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default=None, help="restrict to one draft family (OPT, Qwen, LLaMa)")
    args = ap.parse_args()

    plane, fit = fit_alpha_plane(cio.load_alpha_table(cio.data_path("tables_1_2.csv")))
    print(f"plane: A={plane.a:.6f} B={plane.b:.6f} C={plane.c:.6f} R2={fit.r_squared:.4f} MSE={fit.mse:.6f}")

    ref_plane, chin, mesh = cio.load_plane(), cio.load_chinchilla(), cio.load_grid()
    print(f"{'target':<14}{'family':<8}{'N*':>14}{'ref N*':>14}{'T':>12}{'ref T':>12}")
    for r in cio.load_table5():
        if args.family and r.draft_family != args.family:
            continue
        rec = optimal_draft_size(r.target_size, TrainingBudgets(r.draft_tokens, r.target_tokens),
                                 ref_plane, chin, chin, mesh)
        print(f"{r.target_id:<14}{r.draft_family:<8}{rec.optimal_draft:>14.4g}{r.n_star:>14.4g}"
              f"{rec.best_throughput:>12.4g}{r.throughput:>12.4g}")


if __name__ == "__main__":
    main()
