"""Classical Lagrange/Markov spectrum and dynamical spectra of the model."""
from geolorenz.geo_model import GeoParams
from geolorenz.spectra_cf import CFWord, enumerate_head, freiman_constant, hall_sum_check, perron_k, rational_square
from geolorenz.spectra_dyn import spectrum_sample

print("start of the Markov spectrum:")
for sv in enumerate_head(max_period=6, alphabet_max=2)[:5]:
    print(f"  {sv.value:.12f}  k^2 = {rational_square(sv.value)}  witness {sv.witness}")

print("Perron value of [2;(2,1,1,2)]:", perron_k(CFWord.parse("[2;(2,1,1,2)]")).value)

hall = hall_sum_check(1e-4)
print(f"C(4)+C(4) covers {hall.target} at resolution 1e-4: {hall.verified} ({hall.note})")
print(f"Freiman constant: {freiman_constant():.12f}")

p = GeoParams()
for variant in ("m", "l"):
    rep = spectrum_sample(p, "x", seeds=200, horizon=500, rng_seed=1, variant=variant)
    print(f"{variant}-values of x along 200 orbits: [{rep.values.min():.6f}, {rep.values.max():.6f}], "
          f"largest gap {rep.gaps.max() if rep.gaps.size else 0:.2e}")
