# coding: utf-8

# # Training a small network on ordered classes
#
# A quick run on a small synthetic ordinal problem, with and without partial credit.

# In[1]:

import numpy as np

from simloss.data import SplitSpec, split, standardize, synth_ordinal
from simloss.model import TrainConfig, evaluate, train
from simloss.sim_matrix import order_matrix

data = synth_ordinal(class_count=10, per_class=60, noise_sigma=0.5, seed=0)
tr, va, te = standardize(*split(data, SplitSpec(seed=0)))
print(len(tr), len(va), len(te))


# Each class sits on a curve in 3-d feature space, so neighbours overlap.

# In[2]:

for c in range(3):
    print(c, tr.features[tr.labels == c].mean(axis=0).round(2))


# ## Train with r = 0 and r = 0.5

# In[3]:

cfg = TrainConfig(learning_rate=0.003, batch_size=64, patience=10, max_epochs=60, seed=1)
for r in (0.0, 0.5):
    net, history = train((tr, va), order_matrix(10, r), [3, 32, 10], cfg)
    acc, err = evaluate(net, te.features, te.labels)
    print(f"r={r}: best epoch {history.best_epoch}, test accuracy {acc:.3f}, test MAE {err:.3f}")


# The history keeps the validation curve, handy for plotting.

# In[4]:

print(np.round(history.val_mae[:10], 3))
