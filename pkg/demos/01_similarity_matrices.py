# coding: utf-8

# # Similarity matrices
#
# A similarity matrix says how much credit a prediction of class c earns
# when the true class is y. The identity gives no partial credit at all,
# which is plain categorical cross entropy.

# In[1]:

import numpy as np

from simloss.sim_matrix import (
    EmbeddingTable,
    cosine_matrix,
    identity_matrix,
    lower_bound_matrix,
    max_off_diagonal,
    order_matrix,
    row_normalize,
)

np.set_printoptions(precision=3, suppress=True)


# ## Ordered classes
#
# For age groups or star ratings, neighbouring classes are similar.
# Each step away from the true class multiplies the credit by r.

# In[2]:

print(np.asarray(order_matrix(5, 0.5)))


# With r = 0 we are back to the identity:

# In[3]:

print(np.array_equal(np.asarray(order_matrix(5, 0.0)), np.asarray(identity_matrix(5))))


# ## Classes with word embeddings
#
# When every class has a name vector, cosine similarity tells us which
# classes are close. Three toy classes: two flowers and a vehicle.

# In[4]:

table = EmbeddingTable(
    ("rose", "tulip", "truck"),
    np.array([[1.0, 0.2, 0.0], [0.9, 0.4, 0.1], [0.0, 0.1, 1.0]]),
)
raw = cosine_matrix(table)
print(np.asarray(raw))


# Most pairs of unrelated words still have some small positive cosine.
# A lower bound l discards everything below it and rescales the rest.

# In[5]:

for l in (0.0, 0.5, 0.9):
    print(f"l = {l}")
    print(np.asarray(lower_bound_matrix(raw, l)))


# Once l reaches the largest off-diagonal similarity, only the diagonal survives.

# In[6]:

top = max_off_diagonal(raw)
print(top)
print(np.asarray(lower_bound_matrix(raw, min(0.99, top + 0.01))))


# Row-normalising turns each row into a distribution over classes.

# In[7]:

print(row_normalize(order_matrix(4, 0.5)).sum(axis=1))
