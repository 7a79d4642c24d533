"""Regular Cantor sets of the map and Moran bounds on their dimension."""
from geolorenz.cantor import build_direct_cantor, build_theorem_cantor, distortion_H
from geolorenz.errors import ConstructionError
from geolorenz.fractal_dim import attractor_report, cantor_box_dimension, d1_bounds, moran_solve
from geolorenz.one_d import default_model, ulam_measure

m = default_model()
print(f"middle-thirds Moran exponent: {moran_solve([1 / 3, 1 / 3]):.12f}")

for delta in (1e-2, 1e-3, 1e-4):
    spec = build_direct_cantor(m, delta, 4)
    b = d1_bounds(spec)
    box = cantor_box_dimension(m, spec)
    print(f"direct delta={delta:g}: {len(spec)} branches, "
          f"d_low={b.d_low:.4f} box={box.slope:.4f} d_up={b.d_up:.4f}")

mu = ulam_measure(m, 1024)
print(f"distortion constant H = {distortion_H(m):.6f}")
for k in (1, 2, 3):
    try:
        spec, log = build_theorem_cantor(m, k, m_cap=10, measure=mu)
    except ConstructionError as e:
        print(f"theorem k={k}: no branches survive ({e.stage}): {e}")
        continue
    b = d1_bounds(spec)
    print(f"theorem k={k}: m_k={log.m_k}, {len(spec)} branches, d_low={b.d_low:.4f}, "
          f"counts={log.counts}")

rep = attractor_report(d1_bounds(build_direct_cantor(m, 1e-3, 4)))
print(f"flow dimension lower bound {rep['flow_dim_low']:.4f}: {rep['note']}")
