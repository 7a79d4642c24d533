"""The one-dimensional Lorenz map: constants, LEO and the invariant density."""

from geolorenz.one_d import Interval, almost_leo, check_aleo, default_model, leo_iterate, ulam_measure

m = default_model()
print(f"eta = f'(1/2) = {m.eta:.12f}")
print(f"zeros of f: {m.zeros}")
print(f"cut a = {m.a:.6f}, base interval L_1^a = {m.base}")
print("constants:", {k: round(v, 6) for k, v in m.aleo_constants.items()})

# a short interval grows until its image covers I
j = Interval(0.1, 0.1 + 1e-4)
res = leo_iterate(m, j)
print(f"f^n(J) = I after n = {res.n} steps, growth check ok: {res.growth_ok}")

# the almost-LEO variant lands exactly on the base interval and never touches 0
al = almost_leo(m, j)
print(f"almost-LEO: n = {al.n}, J' = {al.j_prime}, terminal image = {al.terminal_image}")
print("checks:", check_aleo(m, al, m_k=20))

mu = ulam_measure(m, 1024)
dens = mu.density
print(f"Ulam density on 1024 bins: min {dens.min():.3f}, max {dens.max():.3f}, "
      f"invariance residual {mu.residual:.2e}")
print(f"mass of [-0.1, 0.1]: {mu.measure(-0.1, 0.1):.4f}")
print(f"density ratio bound c = {mu.c:.3f} (not certified)")
