"""
A constant shift that leaves the tree intact
============================================

Shift every patient's weight by the same -4.26, with class relabelling off.
The rebuilt tree has the same shape and its weight threshold moves by
exactly the shift.
"""

from treenoise.dataset import LIVER_DOMAIN_OVERRIDES, embedded_liver_sample
from treenoise.evaluation import distortion
from treenoise.perturb import PerturbConfig, pipeline
from treenoise.tree import build, similarity

ds = embedded_liver_sample()
cfg = PerturbConfig(noise_mode="per-attribute", inject_shift={"PatientsWeight": -4.26}, capt=False)

# Weights range over [65, 96] in the sample; a plausible [1, 200] domain keeps
# 65 - 4.26 from wrapping to the top of the range.
result = pipeline(ds, None, cfg, LIVER_DOMAIN_OVERRIDES)

for before, after in zip(ds.column("PatientsWeight"), result.perturbed.column("PatientsWeight")):
    print(f"{before:>6g} -> {after:.12g}")

rebuilt = build(result.perturbed)
print(result.tree.to_text())
print(rebuilt.to_text())
print("similarity:", similarity(result.tree, rebuilt, "ignore"))
print("thresholds:", result.tree.thresholds("PatientsWeight"), "->", rebuilt.thresholds("PatientsWeight"))
print("mean delta:", distortion(ds, result.perturbed)["PatientsWeight"].mean_delta)
