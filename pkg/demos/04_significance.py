# coding: utf-8

# # Comparing two settings over paired seeds
#
# The exact Wilcoxon signed-rank test decides whether one setting beats
# another when both were run with the same seeds.

# In[1]:

import numpy as np

from simloss.errors import NoTestPossibleError
from simloss.metrics import (
    failed_superclass_accuracy,
    superclass_accuracy,
    wilcoxon_signed_rank,
)

baseline = np.array([0.41, 0.39, 0.44, 0.40, 0.42, 0.38, 0.43, 0.41, 0.40, 0.42])
candidate = baseline + np.array([0.02, 0.01, 0.03, -0.005, 0.02, 0.015, 0.01, 0.02, 0.025, 0.01])

res = wilcoxon_signed_rank(candidate, baseline)
print(res)


# Lower is better for error metrics, so flip the direction:

# In[2]:

print(wilcoxon_signed_rank(candidate, baseline, higher_is_better=False).direction)


# Identical runs leave nothing to rank.

# In[3]:

try:
    wilcoxon_signed_rank(baseline, baseline)
except NoTestPossibleError as exc:
    print("no test:", exc)


# ## Superclass metrics
#
# Classes 0-1 are flowers, 2-3 are vehicles. Mistakes that stay inside the
# right superclass still count for superclass accuracy.

# In[4]:

groups = [0, 0, 1, 1]
pred = [0, 1, 3, 2, 0]
true = [0, 0, 2, 2, 3]
print(superclass_accuracy(pred, true, groups))
print(failed_superclass_accuracy(pred, true, groups))
