"""One online damage-quantification run, step by step.

The target panel is monitored as its crack grows. Five labeled samples are
known at the start; every step predicts the next five from strains alone,
then an inspection reveals their true lengths.

Run: python3 demos/03_online_adaptation.py   (about half a minute)
"""

import numpy as np

from ofjdar import MethodId, SyntheticPanelConfig, add_noise, generate_synthetic_domain, \
    online_split, run_online_task

source = generate_synthetic_domain(SyntheticPanelConfig(domain_seed=1, shift_magnitude=0.5))
target = generate_synthetic_domain(SyntheticPanelConfig(domain_seed=2, shift_magnitude=0.5))
source = add_noise(source, 5.0, seed=[0, 0])
target = add_noise(target, 5.0, seed=[0, 1])
schedule = online_split(target, n_tl0=5, delta_n=5)
print(f"{len(schedule)} steps, {schedule.n_predictions} predictions\n")

logs = {m: run_online_task(source, target, m, schedule) for m in MethodId}

print("step  n_tl   " + "  ".join(f"{m.value:>7}" for m in MethodId) + "   (mean |error| mm)")
for step in range(0, len(schedule), 3):
    row = [np.abs(logs[m].records[step].predicted - logs[m].records[step].true).mean()
           for m in MethodId]
    n_tl = logs[MethodId.OSD].records[step].n_tl
    print(f"{step:4d}  {n_tl:4d}   " + "  ".join(f"{v:7.3f}" for v in row))

print("\nRMSE over the whole stream:")
for m in MethodId:
    print(f"  {m.value:>7}: {logs[m].rmse():.4f}")
print("\nkernel widths picked by the holdout search (OFJDAR):",
      sorted({round(r.gamma, 5) for r in logs[MethodId.OFJDAR].records}))
