"""Smoke test for the `prospect_grid` Python extension.

Uses an installed module if present; otherwise builds the extension with
cargo and loads it from a temporary directory.
"""

import importlib
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def load():
    try:
        return importlib.import_module("prospect_grid")
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "-q", "-p", "prospect-grid-python", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "debug" / "libprospect_grid_py.so"
    tmp = Path(tempfile.mkdtemp())
    shutil.copy(lib, tmp / "prospect_grid.so")
    sys.path.insert(0, str(tmp))
    return importlib.import_module("prospect_grid")


def main():
    pg = load()
    print("prospect_grid", pg.__version__)

    c = pg.ConsumerProfile(1.0)
    assert c.utility(0.0) == 0.0
    assert math.isclose(c.utility(1.0), 1.5)
    assert math.isclose(c.marginal_benefit(2.0), 0.8)
    x_iee, u_iee = c.individual_ee()
    assert 1.0 < x_iee < 2.0 and u_iee > 0
    try:
        c.marginal_benefit(1.0)
    except ValueError as e:
        print("kink rejected:", e)
    else:
        raise AssertionError("kink accepted")

    pop = pg.Population([1.0, 1.5, 2.0, 2.5, 3.0])
    opt = pop.solve_opg(4.0)
    assert opt.objective >= pop.allocate_ppa(4.0).objective
    assert opt.objective >= pop.allocate_upa(4.0).objective
    assert math.isclose(sum(opt.x), 4.0)
    print("allocation at 4 kW:", [round(v, 4) for v in opt.x], "active", opt.active)

    tariff = pop.design_ibr()
    print("tariff:", tariff)
    chi, j_star, welfare = pop.find_chi_star()
    assert math.isclose(tariff.chi_star, chi)
    responses = [tariff.best_response(i, pg.ConsumerProfile(r)) for i, r in enumerate(pop.reference_points)]
    print("best responses:", [round(v, 4) for v in responses], "J* =", j_star, "W* =", round(welfare, 4))

    needs = pg.Population([1.0, 1.5, 2.0, 2.5, 3.0], min_needs=[0.5, 0.75, 1.0, 1.25, 1.5])
    e_star, x, iterations, residual, converged = needs.solve_see_constrained()
    assert converged and residual <= 1e-8 and iterations <= 60
    print("constrained efficiency:", round(e_star, 6), "after", iterations, "iterations")

    assert math.isclose(pg.gamma1_root(2 ** 0.2, 1.0, 0.8), 1.1711082171517656, rel_tol=1e-12)
    print("ok")


if __name__ == "__main__":
    main()
