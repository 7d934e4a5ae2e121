# %% [markdown]
# # Null directions and the quotient chart
#
# When two feature coordinates are identical, only the sum of their
# parameters matters. The stacked `z(q)` vectors then miss that direction
# and the quotient chart removes it.

# %%
import numpy as np

from drwgeom.checks import null_corpus
from drwgeom.graph import build_kernel, decompose_for_class
from drwgeom.hitting import hitting_law
from drwgeom.quotient import build_chart, chart_coordinates, null_space
from drwgeom.score import zeta
from drwgeom.sensitivity import sensitivity_field

graph, theta = null_corpus(1)[0]
print("phi[:, 0] == phi[:, 2]:", np.array_equal(graph.features[:, 0], graph.features[:, 2]))
fld = sensitivity_field(hitting_law(decompose_for_class(build_kernel(graph, theta), graph, 1)))
chart = build_chart(fld)
N = null_space(fld)
print("rank", chart.rank, "basis seeds", [q + 1 for q in chart.basis_seeds])
print("null direction", np.round(N[:, 0], 6))

# %% [markdown]
# Moving along the null direction changes neither the chart coordinates
# nor the sensitivity scores.

# %%
shift = 0.7 * N[:, 0]
print("chart:", chart_coordinates(chart.V, theta), chart_coordinates(chart.V, theta + shift))
r0, r1 = zeta(graph, theta), zeta(graph, theta + shift)
print("max zeta change:", max(abs(r0.zeta[q] - r1.zeta[q]) for q in r0.nodes))

# %% [markdown]
# The projector `Q` onto the identifiable subspace, and the metric
# `(V^T V)^-1` in the seed-basis chart.

# %%
print(np.round(chart.Q, 6))
print(np.round(chart.g_tilde, 6))
