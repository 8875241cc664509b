"""
Checking the hand-written gradients
===================================

The backward pass is derived by hand, so it is checked the classic way:
nudge each parameter up and down, rescore, and compare the slope with the
analytic gradient.
"""

import numpy as np

from titlerank.model import ModelConfig, backward, forward, init_params
from titlerank.train import hinge_loss

rng = np.random.default_rng(0)
cfg = ModelConfig(dim=8, kernel_size=2, num_filters=2, max_len=6)
params = init_params(1, cfg)
M_win, M_lose = rng.normal(size=(4, 8)), rng.normal(size=(5, 8))
winner = forward(M_win, params, cfg)
loser = forward(M_lose, params, cfg)
margin = 1.0
print(f"pair loss {hinge_loss(winner.score, loser.score, margin):.4f}")


def loss_at(theta):
    p = params.with_vector(theta)
    xw = forward(M_win, p, cfg).score
    xl = forward(M_lose, p, cfg).score
    return float(hinge_loss(xw, xl, margin))


# %%
# Central differences, one coordinate at a time.
theta = params.to_vector()
eps = 1e-5
numeric = np.array([(loss_at(theta + eps * e) - loss_at(theta - eps * e)) / (2 * eps)
                    for e in np.eye(theta.size)])
analytic = backward(winner, loser, params, cfg, margin).to_vector()

err = np.abs(analytic - numeric)
print(f"{theta.size} parameters, largest absolute difference {err.max():.2e}")
# The dense bias appears in both scores, so its gradient is exactly zero and
# its numeric estimate is just rounding noise.
print(f"dense bias: analytic {analytic[-1]}, numeric {numeric[-1]:.1e}")
