"""Box counting the Lorenz attractor and the dependence on sample size.

The slope over the fine scales creeps up as more points fill the boxes, so a
10^6 point cloud reads below the asymptotic value.
"""
import time

from geolorenz.fractal_dim import box_dimension, default_scales
from geolorenz.geo_model import OdeParams, attractor_sample

p = OdeParams(10.0, 28.0, 8.0 / 3.0)
for n in (10 ** 5, 10 ** 6, 4 * 10 ** 6):
    t0 = time.perf_counter()
    pts = attractor_sample(p, n)
    s = box_dimension(pts, scales=default_scales(pts, 12), threads=4)
    print(f"{n:>8d} points: slope {s.slope:.4f} over scales {s.scales[s.window[0]]:.3f}.."
          f"{s.scales[s.window[1] - 1]:.3f} ({time.perf_counter() - t0:.1f}s)")
