# %% [markdown]
# # Locating the repulsive separatrix
#
# Repulsive two-dimensional starts below psi_plus = 1/sqrt 2 decay while
# oscillating about zero; starts above it blow up. Bisection on the label
# pins the boundary.

# %%
from cnlslab import PSI_PLUS, BoundaryCondition, EquationSpec, Label, classify, integrate

spec = EquationSpec.repulsive(2)


def diverges(psi0):
    return classify(integrate(spec, BoundaryCondition(psi0)), spec).label is Label.DIVERGENT


lo, hi = 0.7, 0.72
while hi - lo > 1e-6:
    mid = 0.5 * (lo + hi)
    lo, hi = (lo, mid) if diverges(mid) else (mid, hi)
print(f"boundary in ({lo:.7f}, {hi:.7f}); psi_plus = {PSI_PLUS:.7f}")
