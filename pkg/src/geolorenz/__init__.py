"""Geometric Lorenz attractors: one-dimensional map, regular Cantor sets,
dimension bounds, and dynamical versus classical Lagrange/Markov spectra."""
from .cantor import Branch, CantorSpec, build_direct_cantor, build_theorem_cantor, distortion_H
from .fractal_dim import BoxCountSeries, DimBounds, attractor_report, box_dimension, d1_bounds, moran_solve
from .geo_model import GeoParams, OdeParams, Point3, SectionPoint, ode_orbit, poincare
from .one_d import Interval, MapModel, almost_leo, default_model, leo_iterate, ulam_measure
from .spectra_cf import CFWord, SpectrumValue, enumerate_head, freiman_constant, hall_sum_check, perron_k
from .spectra_dyn import SpectrumReport, max_f_reduction, spectrum_sample

__version__ = "0.1.0"
