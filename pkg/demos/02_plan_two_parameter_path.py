# Plan a two-parameter control path and turn it into a time schedule.
#
# Starting from detuning 2 and zero drive, the planner walks downhill in
# detuning while ramping the drive, always steering to keep non-adiabatic
# leakage small. The resulting path is then reparametrized in time so the
# leakage penalty rate is constant, which is what saturates the lower bound
# on protocol duration.

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kerrcat import FockBasis, PlannerConfig, adiabaticity_report, plan_path, schedule_from_path

out_dir = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(out_dir, exist_ok=True)

path = plan_path(PlannerConfig(delta0=2.0))
print(f"planned {len(path.points)} points, step length {path.ds}")
print(f"final drive beta_f   = {path.final_drive:.6f}")
print(f"penalty integral I   = {path.total_penalty:.6f}")

duration = 2.5
schedule = schedule_from_path(path, duration)
print(f"duration T           = {duration}")
print(f"peak penalty rate    = {path.total_penalty / duration:.6f}")

# Diagnostics along the schedule: penalty rate should be flat, and the
# same-parity gap dips mid-protocol where the planner slows down.
report = adiabaticity_report(schedule, FockBasis(40))
print(f"minimum gap {report.min_gap:.4f} at t/T = {report.t_min_gap / duration:.3f}")

fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
axes[0].plot(path.deltas, path.betas, lw=1.5)
axes[0].set_xlabel("detuning")
axes[0].set_ylabel("drive")
axes[0].set_title("planned path")
axes[1].plot(path.arclengths(), path.penalties, lw=1.2)
axes[1].set_xlabel("arc length s")
axes[1].set_ylabel("penalty density Q")
axes[1].set_title("rise-then-fall penalty profile")
axes[2].plot(report.times, report.penalty_rate, label="penalty rate")
axes[2].plot(report.times, report.gaps / np.max(report.gaps), label="gap (scaled)")
axes[2].set_xlabel("time")
axes[2].legend(frameon=False)
axes[2].set_title("constant-rate schedule")
fig.tight_layout()
fig.savefig(os.path.join(out_dir, "planned_path.png"), dpi=150)
print(f"wrote {out_dir}/planned_path.png")
