# %% [markdown]
# # Exotic solutions: oscillation about zero, then capture by a well
#
# Large attractive starts first swing across zero, lose energy through the
# friction term psi'/x and end up trapped around +psi_plus or -psi_plus.
# The capture point is the last swing that grazes zero.

# %%
import numpy as np

from cnlslab import BoundaryCondition, EquationSpec, classify, integrate, wavelength_ratio

spec = EquationSpec.attractive(2)
for psi0 in (3.0, 5.0):
    trace = integrate(spec, BoundaryCondition(psi0))
    report = classify(trace, spec)
    print(f"psi0={psi0}: {report.label.value}, baseline {report.baseline:+.4f}, "
          f"{report.zero_crossings} zero crossings, inflection at x={report.inflection_x:.4f}")
    lam = np.array(report.wavelengths)
    before = lam[lam[:, 0] < report.inflection_x, 1]
    after = lam[lam[:, 0] > report.inflection_x, 1]
    print(f"  wavelengths before {np.round(before, 2)}")
    print(f"  wavelengths after  {np.round(after, 2)}")
    print(f"  ratio after/before {wavelength_ratio(report):.3f}")

# %% [markdown]
# Swings that still cross zero span both wells, and their period lengthens
# as the energy approaches the separatrix, so the ratio stays below one.
