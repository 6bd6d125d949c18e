"""Measure how often the alpha estimator's interval covers the exact alpha of synthetic pairs."""

import argparse

import numpy as np

from specdraft.alpha_fit import estimate_alpha
from specdraft.specdec_sim import exact_alpha, simulate_tar, synth_pair


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--iterations", type=int, default=10**5)
    ap.add_argument("--max-gamma", type=int, default=9)
    ap.add_argument("--vocab", type=int, default=1000)
    args = ap.parse_args()

    hits, z = 0, []
    for t in range(args.trials):
        pair = synth_pair(args.vocab, 0.1 + 0.8 * (t % 20) / 19, 9000 + t)
        a = exact_alpha(pair)
        obs = [simulate_tar(pair, g, args.iterations, [t, g]).to_tar_observation()
               for g in range(1, args.max_gamma + 1)]
        est = estimate_alpha(obs)
        hits += est.contains(a)
        if est.std_error > 0:
            z.append((est.alpha - a) / est.std_error)
    z = np.array(z)
    print(f"coverage {hits}/{args.trials}; z mean {z.mean():.3f}, z std {z.std(ddof=1):.3f}")


if __name__ == "__main__":
    main()
