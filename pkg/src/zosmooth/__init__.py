"""Derivative-free stochastic optimization with kernel-smoothed two-point gradients."""
from .estimators import (GradientSample, batch_estimates, estimate_kernel, estimate_plain,
                         mc_bias, mc_second_moment, surrogate_value)
from .harness import RateFit, SweepSpec, emit_results, fit_loglog, read_results, run_sweep
from .kernels import SmoothingKernel, build_legendre_kernel, check_kernel, moment_table
from .minvalue import MinValueResult, estimate_min, estimate_min_beta2
from .optimizer import (ProjectionSet, RunConfig, Schedule, Trajectory, make_schedule, project,
                        run, run_batch, t0_threshold)
from .problems import NoiseModel, Objective, make_hard_instance, make_noise, make_objective
from .randomness import RandomSource, sample_ball, sample_r, sample_sphere

__version__ = "0.1.0"
