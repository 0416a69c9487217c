"""Grid search for hardware transfer constants that put the crossover at a target n.

Run directly to print the feasible region:  python tests/calibration.py
"""

import numpy as np

from heftrt.hw import HwConfig
from heftrt.sim import OverheadModel
from heftrt.sw import SoftwareCoeffs


def feasible_transfer_grid(sw: SoftwareCoeffs = SoftwareCoeffs(), config: HwConfig = HwConfig(),
                           crossover: int = 6, n_max: int = 64, result_fixed_ns: int = 5450,
                           fixed_grid=range(0, 60_001, 250), per_task_grid=range(0, 15_001, 50)):
    """Boolean matrix over (transfer_fixed_ns, transfer_per_task_ns): True where
    software is cheaper for every n < crossover and hardware cheaper for every
    n in [crossover, n_max], using worst-case cycle counts."""
    ovh = OverheadModel(sw, 0, 0, 0)
    ns = np.arange(1, n_max + 1)
    sw_cost = np.array([ovh.software_ns(int(n)) for n in ns])
    compute = np.array([ovh.hardware_compute_ns(3 * int(n) + 3, config) for n in ns])
    fixed = np.asarray(fixed_grid)[:, None, None]
    per = np.asarray(per_task_grid)[None, :, None]
    hw_cost = fixed + result_fixed_ns + per * ns[None, None, :] + compute[None, None, :]
    below = ns < crossover
    sw_wins = (sw_cost < hw_cost)[..., below].all(axis=-1)
    hw_wins = (hw_cost < sw_cost)[..., ~below].all(axis=-1)
    return np.asarray(fixed_grid), np.asarray(per_task_grid), sw_wins & hw_wins


if __name__ == "__main__":
    fixed, per, ok = feasible_transfer_grid()
    for i, f in enumerate(fixed):
        cols = per[ok[i]]
        if cols.size:
            print(f"transfer_fixed_ns={f}: transfer_per_task_ns in [{cols.min()}, {cols.max()}]")
