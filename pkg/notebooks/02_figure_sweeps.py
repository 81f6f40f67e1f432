# %% [markdown]
# # Labelled sweeps in two dimensions
#
# The radial equation psi'' + psi'/x + c(psi) psi = 0 is integrated from a
# regular start psi(0) = psi0, psi'(0) = 0. Each run is classified by its
# long-range behaviour.

# %%
from cnlslab import PSI_PLUS, BoundaryCondition, EquationSpec, classify, integrate

for interaction, grid in [("repulsive", (0.7, PSI_PLUS, 0.71)),
                          ("attractive", (0.65, PSI_PLUS, 0.75, 1.0, 3.0, 5.0))]:
    spec = EquationSpec(2, interaction)
    for psi0 in grid:
        trace = integrate(spec, BoundaryCondition(psi0))
        report = classify(trace, spec)
        print(f"{interaction:10s} psi0={psi0:<8.5g} {report.label.value:22s} "
              f"zeros={report.zero_crossings:3d} end={trace.x_end:6.2f}")

# %% [markdown]
# The same table from the command line:
#
#     cnlslab sweep --preset fig1 --out-dir runs/fig1
#     cnlslab sweep --preset fig3 --out-dir runs/fig3
