# %% [markdown]
# # The same starts in one, two and three dimensions
#
# With N = 1 there is no friction term and the energy is conserved, so a
# start above the separatrix never gets trapped. With N = 3 the friction
# is stronger and large starts can be captured before they reach zero.

# %%
from cnlslab import PSI_PLUS, BoundaryCondition, EquationSpec, classify, first_integral, integrate

starts = [("repulsive", 0.7), ("repulsive", 0.71), ("attractive", 0.65),
          ("attractive", 1.0), ("attractive", 3.0), ("attractive", 5.0)]
for interaction, psi0 in starts:
    row = []
    for dim in (1, 2, 3):
        spec = EquationSpec(dim, interaction)
        row.append(classify(integrate(spec, BoundaryCondition(psi0)), spec).label.value)
    energy = first_integral(EquationSpec(1, interaction), psi0, 0.0)
    print(f"{interaction:10s} {psi0:<5g} E1={float(energy):+8.3f}  " + "  ".join(row))
print(f"psi_plus = {PSI_PLUS:.6f}")
