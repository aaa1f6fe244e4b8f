# Spectrum of the Kerr-nonlinear resonator at zero drive.
#
# With the two-photon drive off, the Hamiltonian is diagonal in the photon
# number basis and every energy follows a closed-form parabola in n. Sweeping
# the detuning shows the level crossings that make the control problem
# interesting: pairs of levels become degenerate at special detunings.

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kerrcat import FockBasis, HamiltonianParams, analytic_energy, build_hamiltonian

out_dir = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(out_dir, exist_ok=True)

basis = FockBasis(60)

# Closed form vs dense diagonalization at a few detunings (units of K)
for detuning in (2.0, 0.0, -1.0, -7.0):
    h = build_hamiltonian(HamiltonianParams(detuning=detuning), basis)
    numeric = np.sort(np.linalg.eigvalsh(h))[:6]
    exact = np.sort([analytic_energy(n, detuning) for n in range(basis.dim)])[:6]
    print(f"detuning {detuning:+.1f}: lowest levels {np.round(numeric, 6)}")
    print(f"              closed form    {np.round(exact, 6)}")

# The degeneracy pattern: E_0 = E_1 at detuning 0, E_0 = E_2 at -1, E_3 = E_5 at -7
print()
for pair, detuning in (((0, 1), 0.0), ((0, 2), -1.0), ((3, 5), -7.0)):
    ea, eb = (analytic_energy(n, detuning) for n in pair)
    print(f"levels {pair} at detuning {detuning:+.1f}: E = {ea:.1f} and {eb:.1f}")

# Plot the lowest eight levels across a detuning sweep
detunings = np.linspace(-8.0, 3.0, 221)
levels = np.array(
    [np.sort([analytic_energy(n, d) for n in range(12)])[:8] for d in detunings]
)
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(detunings, levels, lw=1.2)
for d in (0.0, -1.0, -7.0):
    ax.axvline(d, color="gray", lw=0.6, ls="--")
ax.set_xlabel("detuning (units of K)")
ax.set_ylabel("energy (units of K)")
ax.set_title("Zero-drive spectrum: crossings at detuning 0, -1, -7")
fig.tight_layout()
fig.savefig(os.path.join(out_dir, "spectrum_vs_detuning.png"), dpi=150)
print(f"\nwrote {out_dir}/spectrum_vs_detuning.png")
