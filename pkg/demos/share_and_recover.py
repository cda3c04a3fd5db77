"""Share a block of secrets over 30 clients and recover it after dropouts.

Run: python3 demos/share_and_recover.py
"""

import numpy as np

from fastsecagg.fastshare import fast_recon, fast_share
from fastsecagg.fft import ShareVector
from fastsecagg.layout import make_params

params = make_params(5, 6, alpha="1/2", beta="3/10", delta0="1/5", delta1="1/6")
print(f"N={params.N} q={params.q} S={params.S_count} T={params.T_count} D={params.D_count}")
print("secret positions:", params.sets.S)

rng = np.random.default_rng(1)
secrets = np.array([4, 8, 15, 16])
shares = fast_share(secrets, params, rng)
print("shares:", shares.tolist())


def recover(dropped):
    erased = np.zeros(params.N, dtype=bool)
    erased[list(dropped)] = True
    return fast_recon(ShareVector(shares, erased), params)


# Any D clients may drop out.
print("drop {3, 11, 20, 27, 29}:", recover([3, 11, 20, 27, 29]))

# Four clients on the corners of a grid rectangle block every line at once.
print("drop {1, 26, 7, 2}:", recover([1, 26, 7, 2]))
print("drop {1, 7}:", recover([1, 7]))
