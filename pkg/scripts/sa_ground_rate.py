"""How often simulated annealing hits the exact ground energy, spin route vs QUBO route."""
import argparse

from sqc.annealer import AnnealParams, hubo_to_qubo, simulated_anneal
from sqc.model import brute_force_ground, generate_sidon_instance, random_coupling_map


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--restarts", type=int, default=100)
    ap.add_argument("--sweeps", type=int, nargs="+", default=[200, 600])
    args = ap.parse_args()

    problems = []
    for seed in range(args.seeds):
        inst = generate_sidon_instance(random_coupling_map(args.n, 0.25, seed), seed)
        problems.append((seed, inst, hubo_to_qubo(inst), brute_force_ground(inst)[1]))

    for sweeps in args.sweeps:
        hubo_hits = qubo_hits = 0
        missed = []
        for seed, inst, qubo, e0 in problems:
            params = AnnealParams(sweeps, args.restarts, seed=seed)
            hubo_hits += simulated_anneal(inst, params).best()[1] <= e0 + 1e-9
            hit = simulated_anneal(qubo, params, instance=inst).best()[1] <= e0 + 1e-9
            qubo_hits += hit
            if not hit:
                missed.append(seed)
        print(f"sweeps={sweeps:4d}  spin {hubo_hits}/{args.seeds}  qubo {qubo_hits}/{args.seeds}  qubo misses {missed}")


if __name__ == "__main__":
    main()
