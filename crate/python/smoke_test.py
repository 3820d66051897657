"""Imports the compiled extension and exercises each entry point."""

import math
import os
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def locate_library():
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libbosonic_vmc_py.so"
        if lib.exists():
            return lib
    sys.exit("build the extension first: cargo build -p bosonic-vmc-py")


def main():
    tmp = Path(tempfile.mkdtemp())
    shutil.copy(locate_library(), tmp / "bosonic_vmc_py.so")
    sys.path.insert(0, str(tmp))
    os.chdir(tmp)
    import bosonic_vmc_py as bv

    lat = bv.Lattice("open_chain", 2)
    ham = bv.BoseHubbard(lat, 1.0, 3.0)
    ed = ham.exact_ground_state(2)
    exact = (3.0 - math.sqrt(9.0 + 16.0)) / 2.0
    assert abs(ed["energy"] - exact) < 1e-12, ed
    assert ed["dimension"] == 3

    chain = bv.Lattice("chain", 4)
    assert sorted(chain.neighbors(0)) == [1, 3]
    assert chain.distance(0, 2) == 2
    ansatz = bv.Ansatz(chain, 4, depth=2, channels=2)
    params = ansatz.init_params(3)
    assert len(params) == ansatz.n_params
    occ = [1, 1, 1, 1]
    grad = ansatz.log_grad(params, occ)
    h = 1e-6
    shifted = list(params)
    shifted[0] += h
    fd = (ansatz.log_psi(shifted, occ) - ansatz.log_psi(params, occ)) / h
    assert abs(fd - grad[0]) < 1e-4, (fd, grad[0])
    model = bv.BoseHubbard(chain, 1.0, 4.0)
    assert math.isfinite(ansatz.local_energy(model, params, occ))
    samples = ansatz.sample(params, 64, seed=1)
    assert len(samples) == 64 and all(sum(s) == 4 for s in samples)

    fit = bv.fit_entropy([float(l) for l in range(4, 40, 2)],
                         [0.3 * l + 0.5 * math.log(l) - 0.1 for l in range(4, 40, 2)],
                         [1e-3] * 18)
    assert abs(fit["a"] - 0.3) < 1e-6, fit

    square = bv.Lattice("square", 5)
    occ = [1] * 25
    occ[0], occ[1] = 0, 2
    direct = bv.confinement_energy([-1.0, -0.5], square, occ)
    assert abs(direct - bv.confinement_energy_cnn([-1.0, -0.5], square, occ)) < 1e-12

    try:
        bv.Lattice("hexagonal", 3)
    except ValueError:
        pass
    else:
        raise AssertionError("bad lattice kind accepted")
    try:
        bv.ed(str(tmp / "missing.toml"))
    except IOError:
        pass
    else:
        raise AssertionError("missing config accepted")

    cfg = tmp / "ed.toml"
    cfg.write_text("[model]\nlattice = \"chain\"\nsize = 4\ninteraction = 4.0\n")
    report = bv.ed(str(cfg))
    assert report["dimension"] == 35
    print("python smoke test passed: E0(L=4, U=4) =", report["ground_energy"])
    os.chdir(ROOT)
    shutil.rmtree(tmp)


if __name__ == "__main__":
    os.environ.setdefault("RUST_LOG", "warn")
    main()
