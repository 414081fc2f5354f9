"""E(theta) for the singlet and the sign model, written as CSV.

The singlet follows -cos(theta), the sign model the straight line
-1 + 2 theta / pi; they touch at 0, pi/2 and pi.

Run:  python demos/04_correlation_curves.py > curves.csv
"""

import math
import sys

import numpy as np

from bellsim import Direction, build_model, exact_expectation

a = Direction(1.0, 0.0, 0.0)
models = {k: build_model(k) for k in ("singlet", "sign", "leak")}

sys.stdout.write("theta," + ",".join(models) + "\n")
for theta in np.linspace(0.0, math.pi, 37):
    b = Direction.planar(theta)
    row = [exact_expectation(m, a, b).value for m in models.values()]
    sys.stdout.write(f"{theta:.6f}," + ",".join(f"{x:.6f}" for x in row) + "\n")
