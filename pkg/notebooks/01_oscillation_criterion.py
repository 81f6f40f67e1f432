# %% [markdown]
# # Oscillation criterion for second-order linear equations
#
# For y'' + b(x) y' + c(x) y = 0 the canonical coefficient
# q = c - b'/2 - b^2/4 decides oscillation: solutions oscillate where
# q(x) > 1/(4 x^2). The Cauchy-Euler family b = 1/x, c = k/x^2 has
# q = k/x^2, so the criterion holds everywhere for k > 0 and nowhere else.

# %%
from cnlslab.oscillation import CoefficientPair, canonical_q, criterion_region

for k in (-1.0, -0.1, 0.0, 0.1, 1.0):
    pair = CoefficientPair(b=lambda x: 1 / x, c=lambda x, k=k: k / x**2,
                           b_prime=lambda x: -1 / x**2)
    region = criterion_region(pair, (1e-3, 1e6))
    print(f"k={k:+.1f}  q(2)={canonical_q(pair, 2.0):+.4f}  region={region.intervals}")

# %% [markdown]
# A coefficient that changes sign: c = 1 - x/5 with b = 0 oscillates only
# where q = 1 - x/5 exceeds 1/(4 x^2).

# %%
pair = CoefficientPair(b=lambda x: 0.0, c=lambda x: 1 - x / 5, b_prime=lambda x: 0.0)
print(criterion_region(pair, (0.1, 10.0)).intervals)
