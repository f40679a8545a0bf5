"""Impulse response of a MURA pattern set against a random binary set.

A MURA tile scanned cyclically gives a point-spread function one pixel wide
from the plain mean-corrected adjoint, with no iterative solve. A random
binary set needs an inverse solver to get close.

Run: python3 demos/mura_psf.py
"""
from ghostmask import GridSpec, SolverConfig, extract_pattern_set, gen_mura
from ghostmask.analysis import compute_psf
from ghostmask.experiments import family_set

P = 23


def main():
    sets = {"mura": extract_pattern_set(gen_mura(P), GridSpec.square(P)),
            "random binary": family_set("binary", P, seed=0)}
    solvers = {"adjoint": SolverConfig("adjoint_mean_corrected"),
               "kaczmarz x4": SolverConfig("kaczmarz", sweeps=4, relaxation=0.25)}
    for name, ps in sets.items():
        for sname, cfg in solvers.items():
            psf = compute_psf(ps, solver=cfg)
            print(f"{name:<14}{sname:<12}FWHM {psf.fwhm:5.2f} px")


if __name__ == "__main__":
    main()
