"""Topology diagnostics that govern estimator quality.

Degree extremes, the edge-sharing ratio (how correlated two items' estimates
can be), the subset-boundary Cheeger constant (positive iff connected), the
spectral gap of the normalized expected-Hessian Laplacian, its worst
leave-one-out gap, and the admissible-chain expansion bound at toy scale.
"""

import numpy as np

from plrank import (
    BlockModelConfig,
    graph_diagnostics,
    modified_cheeger,
    expansion_chain_bound,
    sample_block_model,
    spectral_diagnostics,
)

rng = np.random.default_rng(1)

# A well-connected block model vs. one with a weak cross-community bridge.
# (n = 20 keeps the exact 2^n subset scan for the Cheeger constant feasible.)
strong = BlockModelConfig(m=3, community_sizes=(10, 10), omega_within=(0.12, 0.12), omega_cross=0.12)
weak = BlockModelConfig(m=3, community_sizes=(10, 10), omega_within=(0.3, 0.3), omega_cross=0.006)

for name, config in (("balanced", strong), ("bottlenecked", weak)):
    edges = sample_block_model(config, rng)
    diag = graph_diagnostics(edges, n=20, exact_cheeger=True)
    print(f"{name}: {diag.n_edges} edges, degrees {diag.degree_min}..{diag.degree_max}, "
          f"sharing ratio {diag.r_ratio:.3f}, cheeger {diag.cheeger:.3f}, "
          f"spectral gap {diag.s_gap:.4f}, leave-one-out gap {diag.lambda2_leave:.3f}")

# Tiny worked examples with closed forms.
print("\npair edge spectrum:", spectral_diagnostics([(0, 1)], leave_one_out=False).eigenvalues)
print("triangle spectrum:", spectral_diagnostics([(0, 1), (1, 2), (0, 2)], leave_one_out=False).eigenvalues)
print("cheeger of one triple edge:", modified_cheeger([(0, 1, 2)], 3))
print("chain bound, single pair:", expansion_chain_bound([(0, 1)], 2), "= sqrt(log 2)")
k4 = [(a, b) for a in range(4) for b in range(a + 1, 4)]
print("chain bound, complete K4:", expansion_chain_bound(k4, 4))
