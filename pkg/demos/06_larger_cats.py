# Larger cats by starting the path deeper in detuning.
#
# The planner walks each path until detuning reaches zero, where the even
# ground state is an exact cat of amplitude sqrt(beta_f). Raising the start
# detuning makes the walk end at a larger drive, so the lobes of the final
# cat sit farther apart. The size is read off the Wigner function directly.

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from kerrcat import (
    FockBasis,
    PhaseGrid,
    PlannerConfig,
    cat_state,
    cat_size,
    plan_path,
)

out_dir = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(out_dir, exist_ok=True)

delta0s = [1.0, 2.0, 3.0, 4.0]
beta_fs = []
sizes = []
for delta0 in delta0s:
    path = plan_path(PlannerConfig(delta0=delta0))
    beta_f = path.final_drive
    alpha = math.sqrt(beta_f)
    basis = FockBasis(max(40, math.ceil(8.0 * beta_f)))
    grid = PhaseGrid.square(alpha + 2.5, 256)
    size = cat_size(cat_state(alpha, "even", basis), grid)
    beta_fs.append(beta_f)
    sizes.append(size)
    print(f"delta0 = {delta0:3.1f}: beta_f = {beta_f:.6f}, "
          f"lobe distance = {size:.4f} (2*sqrt(beta_f) = {2 * alpha:.4f})")

fig, ax = plt.subplots(figsize=(4.8, 3.6))
ax.plot(delta0s, sizes, "o-", label="measured lobe distance")
ax.plot(delta0s, [2 * math.sqrt(b) for b in beta_fs], "--", label="2 sqrt(beta_f)")
ax.set_xlabel("start detuning delta0")
ax.set_ylabel("cat size")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig(os.path.join(out_dir, "cat_size_scaling.png"), dpi=150)
print(f"wrote cat_size_scaling.png under {out_dir}")
