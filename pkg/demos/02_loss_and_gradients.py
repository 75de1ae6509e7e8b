# coding: utf-8

# # The similarity loss and its gradient
#
# We compare the loss against cross entropy, then check the analytic gradient
# with central differences.

# In[1]:

import numpy as np

from simloss.loss import loss_gap, prob_loss, simloss, simloss_grad_logits, softmax
from simloss.sim_matrix import identity_matrix, order_matrix

rng = np.random.default_rng(0)
logits = rng.normal(size=(4, 5))
labels = np.array([0, 2, 2, 4])
probs = softmax(logits)


# With the identity matrix the loss is ordinary cross entropy.

# In[2]:

cce = -np.mean(np.log(probs[np.arange(4), labels]))
print(simloss(probs, labels, identity_matrix(5)), cce)


# Partial credit can only lower the loss, because every weighted sum
# contains the true-class probability.

# In[3]:

for r in (0.0, 0.3, 0.6, 0.9):
    print(r, simloss(probs, labels, order_matrix(5, r)))


# ## Gradient check

# In[4]:

S = np.asarray(order_matrix(5, 0.5))
analytic = simloss_grad_logits(logits, labels, S)

h = 1e-5
numeric = np.zeros_like(logits)
for idx in np.ndindex(logits.shape):
    up, down = logits.copy(), logits.copy()
    up[idx] += h
    down[idx] -= h
    numeric[idx] = (simloss(softmax(up), labels, S) - simloss(softmax(down), labels, S)) / (2 * h)

print(np.max(np.abs(analytic - numeric)))


# ## Normalised rows change the value, not the gradient
#
# Dividing each row of S by its sum shifts the loss by a constant that only
# depends on the labels.

# In[5]:

print(prob_loss(probs, labels, S) - simloss(probs, labels, S), loss_gap(labels, S))
