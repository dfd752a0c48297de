"""
Coordinate projections and their VC dimension
=============================================
"""

import math

from localgc.vc import shattered_set, vc_bruteforce, verify_shatter

# k points shattered by 2^k coordinates: column i is i-1 written in binary
m = shattered_set(3)
print(m)
print("shattered:", verify_shatter(m))

for d in range(1, 17):
    print(d, vc_bruteforce(d), math.floor(math.log2(d)))
