"""How the soft membership weights behave between two centroids.

Slides a probe point along the segment between centroids at 0 and 1 and
prints its weight on the left centroid under both weighting schemes and
several sharpness settings. Larger alpha pushes both toward hard
assignment; the inverse-power weights switch faster near the midpoint.
"""

import numpy as np

from deepkm.losses import ct_weights, dkm_weights

centroids = np.array([[0.0], [1.0]])
positions = np.linspace(0.05, 0.95, 10)

print("position  " + "  ".join(f"inv-pow a={a:<4g}" for a in (1.0, 3.0, 8.0))
      + "  " + "  ".join(f"softmax a={a:<4g}" for a in (1.0, 3.0, 8.0)))
for x in positions:
    probe = np.array([[x]])
    inv = [ct_weights(probe, centroids, alpha=a)[0, 0] for a in (1.0, 3.0, 8.0)]
    soft = [dkm_weights(probe, centroids, alpha_dkm=a)[0, 0] for a in (1.0, 3.0, 8.0)]
    cells = "  ".join(f"{w:12.4f}" for w in inv + soft)
    print(f"{x:8.2f}  {cells}")

# weights always form a distribution over centroids
rng = np.random.default_rng(0)
w = ct_weights(rng.standard_normal((5, 3)), rng.standard_normal((4, 3)), alpha=3.0)
print(f"\nrow sums on a random batch: {w.sum(axis=1)}")

# at alpha=64 the argmax is indistinguishable from a hard assignment
probe = np.array([[0.3]])
sharp = ct_weights(probe, centroids, alpha=64.0)
print(f"alpha=64 weights for a point at 0.3: {sharp[0]}")
